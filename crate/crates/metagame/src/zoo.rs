//! Test-model zoo: the two-feature reference model, seeded random sparse
//! polynomials, seeded random Möbius games, and symmetric games.
//!
//! Every generator is deterministic per seed (counter-based ChaCha streams),
//! and each family has known ground truth: polynomial models at b = 0 have a
//! Möbius expansion readable off their monomial supports; Möbius-backed games
//! are their own ground truth; symmetric games have equal Shapley values.

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{EvalCounter, MaskedModel, ValueOracle};
use crate::mobius::{MobiusExpansion, MobiusOracle};
use crate::model::{Monomial, SymbolicModel};

/// The two-feature reference model f(x) = x₀ + x₀·x₁².
pub fn table1_model() -> SymbolicModel {
    SymbolicModel::new(
        2,
        vec![
            Monomial { coeff: 1.0, exponents: vec![1, 0] },
            Monomial { coeff: 1.0, exponents: vec![1, 2] },
        ],
    )
    .expect("reference model is well-formed")
}

/// The reference model masked at input `x` with baseline 0.
pub fn table1_masked(x: [f64; 2]) -> MaskedModel {
    MaskedModel::from_symbolic(table1_model(), x.to_vec(), vec![0.0, 0.0])
        .expect("reference input is well-formed")
}

/// `n_terms` random monomials with supports of size ≤ `max_order`, exponents
/// in {1,2,3}, coefficients uniform in [−2, 2]. Reproducible per seed.
pub fn random_sparse_polynomial(
    d: usize,
    max_order: usize,
    n_terms: usize,
    seed: u64,
) -> Result<SymbolicModel> {
    if d == 0 || d > crate::coalition::MAX_PLAYERS {
        return Err(Error::invalid(format!("dimension {d} out of range 1..=63")));
    }
    if max_order == 0 || max_order > d {
        return Err(Error::invalid(format!("max_order {max_order} out of range 1..={d}")));
    }
    if n_terms == 0 {
        return Err(Error::invalid("n_terms must be at least 1".to_string()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut players: Vec<usize> = (0..d).collect();
    let mut terms = Vec::with_capacity(n_terms);
    for _ in 0..n_terms {
        let order = rng.gen_range(1..=max_order);
        let (support, _) = players.partial_shuffle(&mut rng, order);
        let mut exponents = vec![0u32; d];
        for &p in support.iter() {
            exponents[p] = rng.gen_range(1..=3);
        }
        let coeff = rng.gen_range(-2.0..=2.0);
        terms.push(Monomial { coeff, exponents });
    }
    SymbolicModel::new(d, terms)
}

/// Random sparse Möbius expansion: `round(sparsity · (2^d − 1))` distinct
/// non-empty coalitions get coefficients uniform in [−1, 1].
pub fn random_mobius_game(d: usize, sparsity: f64, seed: u64) -> MobiusExpansion {
    assert!((1..=crate::coalition::MAX_PLAYERS).contains(&d), "dimension {d} out of range");
    assert!(sparsity > 0.0 && sparsity <= 1.0, "sparsity must be in (0, 1]");
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut picks: Vec<u64> = if d <= 24 {
        let n_nonempty = (1usize << d) - 1;
        let k = ((sparsity * n_nonempty as f64).round() as usize).clamp(1, n_nonempty);
        rand::seq::index::sample(&mut rng, n_nonempty, k)
            .into_iter()
            .map(|i| i as u64 + 1) // shift past the empty coalition
            .collect()
    } else {
        // For large d, rejection-sample distinct non-empty bit patterns.
        let k = ((sparsity * 2f64.powi(d as i32)).round() as u64).max(1);
        let mask = (1u64 << d) - 1;
        let mut seen = std::collections::BTreeSet::new();
        while (seen.len() as u64) < k {
            let bits = rng.next_u64() & mask;
            if bits != 0 {
                seen.insert(bits);
            }
        }
        seen.into_iter().collect()
    };
    picks.sort_unstable();
    let coeffs = picks.into_iter().map(|bits| {
        let c = Coalition::from_bits(bits, d).expect("sampled bits in range");
        (c, rng.gen_range(-1.0..=1.0))
    });
    MobiusExpansion::from_coefficients(d, coeffs.collect::<Vec<_>>())
        .expect("generated coefficients are well-formed")
}

/// Convenience wrapper: the Möbius game as a ready-to-use oracle.
pub fn random_mobius_oracle(d: usize, sparsity: f64, seed: u64) -> MobiusOracle {
    MobiusOracle::new(random_mobius_game(d, sparsity, seed))
}

/// Symmetric game v(S) = (|S|/d)^power: every player interchangeable, convex
/// for power > 1. Marginal contributions grow with coalition size, which is
/// the regime where antithetic (paired) sampling provably helps.
#[derive(Debug)]
pub struct SymmetricGame {
    d: usize,
    power: u32,
    calls: EvalCounter,
}

impl SymmetricGame {
    pub fn new(d: usize, power: u32) -> Self {
        assert!((1..=crate::coalition::MAX_PLAYERS).contains(&d));
        SymmetricGame { d, power, calls: EvalCounter::default() }
    }
}

impl ValueOracle for SymmetricGame {
    fn player_count(&self) -> usize {
        self.d
    }

    fn evaluate(&self, coalition: Coalition) -> f64 {
        self.calls.bump();
        (coalition.size() as f64 / self.d as f64).powi(self.power as i32)
    }

    fn evaluation_count(&self) -> u64 {
        self.calls.get()
    }
}
