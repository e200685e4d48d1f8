//! Symbolic polynomial models with exact forward-mode derivatives.
//!
//! A `SymbolicModel` is a sparse sum of monomials `c * prod_k x_k^{p_k}`.
//! Because evaluation is generic over the [`Ring`] trait, the same code path
//! produces values, first derivatives (via `Dual1`) and mixed second
//! derivatives (via nested `Dual2`) with no finite-difference noise.

use serde::{Deserialize, Serialize};

use crate::dual::{powi, Dual1, Dual2, Ring};
use crate::error::{Error, Result};

/// One monomial `coeff * prod_k x_k^{exponents[k]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Monomial {
    pub coeff: f64,
    pub exponents: Vec<u32>,
}

impl Monomial {
    /// Players with a nonzero exponent, as a bit pattern.
    pub fn support_bits(&self) -> u64 {
        let mut bits = 0u64;
        for (k, &e) in self.exponents.iter().enumerate() {
            if e > 0 {
                bits |= 1 << k;
            }
        }
        bits
    }
}

/// Sparse polynomial over `d` real inputs.
#[derive(Clone, Debug)]
pub struct SymbolicModel {
    d: usize,
    terms: Vec<Monomial>,
}

impl SymbolicModel {
    pub fn new(d: usize, terms: Vec<Monomial>) -> Result<Self> {
        if d == 0 || d > crate::coalition::MAX_PLAYERS {
            return Err(Error::invalid(format!("model dimension {d} out of range 1..=63")));
        }
        for (t, term) in terms.iter().enumerate() {
            if term.exponents.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: term.exponents.len() });
            }
            if !term.coeff.is_finite() {
                return Err(Error::invalid(format!("non-finite coefficient in term {t}")));
            }
        }
        Ok(SymbolicModel { d, terms })
    }

    pub fn player_count(&self) -> usize {
        self.d
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    /// Evaluates on any ring: plain floats or (nested) duals.
    pub fn eval_generic<T: Ring>(&self, xs: &[T]) -> T {
        debug_assert_eq!(xs.len(), self.d);
        let mut acc = T::zero();
        for term in &self.terms {
            let mut prod = T::from_f64(term.coeff);
            for (k, &e) in term.exponents.iter().enumerate() {
                if e > 0 {
                    prod = prod * powi(xs[k], e);
                }
            }
            acc = acc + prod;
        }
        acc
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.eval_generic(x)
    }

    /// Exact `∂f/∂x_i` at `x`.
    pub fn gradient_component(&self, x: &[f64], i: usize) -> f64 {
        debug_assert!(i < self.d);
        let xs: Vec<Dual1> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| if k == i { Dual1::variable(v) } else { Dual1::constant(v) })
            .collect();
        self.eval_generic(&xs).eps
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.d).map(|i| self.gradient_component(x, i)).collect()
    }

    /// Exact `(∂f/∂x_i, ∂²f/∂x_i∂x_j)` at `x` in one nested-dual pass.
    pub fn grad_and_hessian_component(&self, x: &[f64], i: usize, j: usize) -> (f64, f64) {
        debug_assert!(i < self.d && j < self.d);
        let xs: Vec<Dual2> = x
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                let inner = if k == i { Dual1::variable(v) } else { Dual1::constant(v) };
                let tangent = if k == j { Dual1::one() } else { Dual1::zero() };
                Dual2 { re: inner, eps: tangent }
            })
            .collect();
        let out = self.eval_generic(&xs);
        (out.re.eps, out.eps.eps)
    }

    /// Same polynomial with every coefficient scaled by `k`.
    pub fn scaled(&self, k: f64) -> SymbolicModel {
        let terms = self
            .terms
            .iter()
            .map(|t| Monomial { coeff: k * t.coeff, exponents: t.exponents.clone() })
            .collect();
        SymbolicModel { d: self.d, terms }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1() -> SymbolicModel {
        SymbolicModel::new(
            2,
            vec![
                Monomial { coeff: 1.0, exponents: vec![1, 0] },
                Monomial { coeff: 1.0, exponents: vec![1, 2] },
            ],
        )
        .unwrap()
    }

    #[test]
    fn value_and_gradient() {
        let m = table1();
        assert_eq!(m.value(&[2.0, 3.0]), 20.0);
        assert_eq!(m.gradient(&[2.0, 3.0]), vec![10.0, 12.0]);
    }

    #[test]
    fn hessian_component() {
        let m = table1();
        let (di, dij) = m.grad_and_hessian_component(&[2.0, 3.0], 0, 1);
        assert_eq!(di, 10.0);
        assert_eq!(dij, 6.0); // d²f/dx0 dx1 = 2 x1
        let (_, d11) = m.grad_and_hessian_component(&[2.0, 3.0], 1, 1);
        assert_eq!(d11, 4.0); // d²f/dx1² = 2 x0
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(SymbolicModel::new(2, vec![Monomial { coeff: 1.0, exponents: vec![1] }]).is_err());
        assert!(SymbolicModel::new(
            1,
            vec![Monomial { coeff: f64::NAN, exponents: vec![1] }]
        )
        .is_err());
    }

    #[test]
    fn support_bits() {
        let m = table1();
        assert_eq!(m.terms()[0].support_bits(), 0b01);
        assert_eq!(m.terms()[1].support_bits(), 0b11);
    }
}
