//! Möbius transform of a game and sparse Möbius expansions.
//!
//! The Möbius coefficient m_S = Σ_{T⊆S} (−1)^{|S|−|T|} v(T) isolates the
//! interaction carried exactly by S; the inverse is v(S) = Σ_{T⊆S} m_T. The
//! dense transform runs in-place in d·2^d, one bit at a time; coefficients
//! below the sparsity threshold are dropped on extraction.

use std::collections::BTreeMap;

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{check_capacity, enumerate_game_with_limit, EvalCounter, ValueOracle, DEFAULT_EXACT_LIMIT};

/// Coefficients with |m_S| at or below this are treated as exact zeros.
pub const DEFAULT_SPARSITY_THRESHOLD: f64 = 1e-12;

/// Sparse Möbius expansion: coefficient per coalition, canonical ascending
/// bit-pattern order.
#[derive(Clone, Debug, Default)]
pub struct MobiusExpansion {
    d: usize,
    coeffs: BTreeMap<u64, f64>,
}

impl MobiusExpansion {
    pub fn from_coefficients(
        d: usize,
        coeffs: impl IntoIterator<Item = (Coalition, f64)>,
    ) -> Result<Self> {
        if d == 0 || d > crate::coalition::MAX_PLAYERS {
            return Err(Error::invalid(format!("player count {d} out of range 1..=63")));
        }
        let mut map = BTreeMap::new();
        for (c, m) in coeffs {
            if c.player_count() != d {
                return Err(Error::DimensionMismatch { expected: d, got: c.player_count() });
            }
            if !m.is_finite() {
                return Err(Error::invalid("non-finite Möbius coefficient".to_string()));
            }
            if m != 0.0 {
                *map.entry(c.bits()).or_insert(0.0) += m;
            }
        }
        Ok(MobiusExpansion { d, coeffs: map })
    }

    pub fn player_count(&self) -> usize {
        self.d
    }

    /// Number of stored (nonzero) coefficients.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coefficient(&self, s: Coalition) -> f64 {
        self.coeffs.get(&s.bits()).copied().unwrap_or(0.0)
    }

    /// Coefficients in ascending bit-pattern order.
    pub fn iter(&self) -> impl Iterator<Item = (Coalition, f64)> + '_ {
        self.coeffs
            .iter()
            .map(|(&bits, &m)| (Coalition::from_bits(bits, self.d).expect("stored bits valid"), m))
    }

    /// Inverse transform at one coalition: v(S) = Σ_{T⊆S} m_T.
    pub fn evaluate(&self, s: Coalition) -> f64 {
        debug_assert_eq!(s.player_count(), self.d);
        let bits = s.bits();
        self.coeffs
            .iter()
            .filter(|(&t, _)| t & !bits == 0)
            .map(|(_, &m)| m)
            .sum()
    }

    /// Shapley values through the Möbius form: φ_i = Σ_{S∋i} m_S / |S|.
    pub fn shapley(&self) -> Vec<f64> {
        let mut phi = vec![0.0; self.d];
        for (&bits, &m) in &self.coeffs {
            let share = m / bits.count_ones() as f64;
            let mut rest = bits;
            while rest != 0 {
                let p = rest.trailing_zeros() as usize;
                phi[p] += share;
                rest &= rest - 1;
            }
        }
        phi
    }

    /// True when no coefficient involving `player` (other than possibly the
    /// bare singleton) survives the sparsity threshold — i.e. the player
    /// carries no interactions.
    pub fn is_interaction_free(&self, player: usize) -> bool {
        self.coeffs
            .iter()
            .all(|(&bits, _)| bits >> player & 1 == 0 || bits == 1 << player)
    }
}

/// Möbius transform of a game, with the default capacity limit and sparsity
/// threshold.
pub fn mobius_transform(oracle: &dyn ValueOracle) -> Result<MobiusExpansion> {
    mobius_transform_with(oracle, DEFAULT_EXACT_LIMIT, DEFAULT_SPARSITY_THRESHOLD)
}

pub fn mobius_transform_with(
    oracle: &dyn ValueOracle,
    limit: usize,
    threshold: f64,
) -> Result<MobiusExpansion> {
    let d = oracle.player_count();
    check_capacity(d, limit)?;
    let dense = enumerate_game_with_limit(oracle, limit)?;
    let mut table = dense.values().to_vec();
    // In-place subset Möbius: after processing bit p, each entry holds the
    // alternating sum over the presence of players 0..=p.
    for p in 0..d {
        let bit = 1usize << p;
        for s in 0..table.len() {
            if s & bit != 0 {
                table[s] -= table[s ^ bit];
            }
        }
    }
    let mut coeffs = BTreeMap::new();
    for (bits, &m) in table.iter().enumerate() {
        if m.abs() > threshold {
            coeffs.insert(bits as u64, m);
        }
    }
    Ok(MobiusExpansion { d, coeffs })
}

/// A game backed directly by a sparse Möbius expansion; evaluation costs one
/// pass over the stored coefficients, so it scales to large d.
#[derive(Debug)]
pub struct MobiusOracle {
    expansion: MobiusExpansion,
    calls: EvalCounter,
}

impl MobiusOracle {
    pub fn new(expansion: MobiusExpansion) -> Self {
        MobiusOracle { expansion, calls: EvalCounter::default() }
    }

    pub fn expansion(&self) -> &MobiusExpansion {
        &self.expansion
    }
}

impl ValueOracle for MobiusOracle {
    fn player_count(&self) -> usize {
        self.expansion.player_count()
    }

    fn evaluate(&self, coalition: Coalition) -> f64 {
        self.calls.bump();
        self.expansion.evaluate(coalition)
    }

    fn evaluation_count(&self) -> u64 {
        self.calls.get()
    }
}
