//! Forward-mode automatic differentiation with (nestable) dual numbers.
//!
//! `Dual<f64>` carries one first derivative; `Dual<Dual<f64>>` carries a
//! second derivative in the mixed epsilon term, which is all the integrated
//! Hessians quadrature needs. The `Ring` trait is the minimal arithmetic
//! surface a polynomial evaluator requires, so models evaluate identically on
//! plain floats and on duals.

use std::ops::{Add, Mul, Neg, Sub};

/// Minimal arithmetic surface for evaluating polynomial models generically.
pub trait Ring:
    Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(c: f64) -> Self;
}

impl Ring for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(c: f64) -> Self {
        c
    }
}

/// Dual number `re + eps * ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<T> {
    pub re: T,
    pub eps: T,
}

impl<T: Ring> Dual<T> {
    pub fn constant(re: T) -> Self {
        Dual { re, eps: T::zero() }
    }

    /// Value `re` with unit tangent: the variable being differentiated.
    pub fn variable(re: T) -> Self {
        Dual { re, eps: T::one() }
    }
}

impl<T: Ring> Add for Dual<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Dual { re: self.re + rhs.re, eps: self.eps + rhs.eps }
    }
}

impl<T: Ring> Sub for Dual<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Dual { re: self.re - rhs.re, eps: self.eps - rhs.eps }
    }
}

impl<T: Ring> Mul for Dual<T> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Dual {
            re: self.re * rhs.re,
            eps: self.re * rhs.eps + self.eps * rhs.re,
        }
    }
}

impl<T: Ring> Neg for Dual<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { re: -self.re, eps: -self.eps }
    }
}

impl<T: Ring> Ring for Dual<T> {
    fn zero() -> Self {
        Dual { re: T::zero(), eps: T::zero() }
    }
    fn one() -> Self {
        Dual { re: T::one(), eps: T::zero() }
    }
    fn from_f64(c: f64) -> Self {
        Dual { re: T::from_f64(c), eps: T::zero() }
    }
}

/// First-derivative dual.
pub type Dual1 = Dual<f64>;
/// Nested dual for one mixed second derivative.
pub type Dual2 = Dual<Dual<f64>>;

/// `base^exp` by repeated multiplication (exponents here are tiny).
pub fn powi<T: Ring>(base: T, exp: u32) -> T {
    let mut acc = T::one();
    for _ in 0..exp {
        acc = acc * base;
    }
    acc
}
