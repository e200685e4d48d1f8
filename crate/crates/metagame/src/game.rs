//! Value oracles: games over coalitions, masked models, and caching.
//!
//! Everything downstream consumes a [`ValueOracle`] — a map from coalitions
//! to reals with a monotone evaluation counter. The central instance is
//! [`MaskedModel`], which turns a model `f`, an input `x`, and a baseline `b`
//! into the game `v(S) = f(x_S, b_{S̄})` by baseline imputation.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use dashmap::DashMap;

use crate::coalition::{all_coalitions, Coalition};
use crate::error::{Error, Result};
use crate::model::SymbolicModel;

/// Largest player count the exact 2^d engines accept by default.
pub const DEFAULT_EXACT_LIMIT: usize = 24;

/// Errors with a capacity message pointing at the approximators when `d`
/// exceeds `limit`.
pub fn check_capacity(d: usize, limit: usize) -> Result<()> {
    if d > limit {
        Err(Error::CapacityExceeded { d, limit })
    } else {
        Ok(())
    }
}

/// Monotone call counter shared by every oracle implementation.
#[derive(Debug, Default)]
pub struct EvalCounter(AtomicU64);

impl EvalCounter {
    pub fn bump(&self) {
        self.0.fetch_add(1, Ordering::Relaxed);
    }
    pub fn get(&self) -> u64 {
        self.0.load(Ordering::Relaxed)
    }
}

/// A cooperative game: coalition in, real value out.
///
/// `evaluation_count` never decreases and increases by one per `evaluate`
/// call, which is what the sampling budgets account against.
pub trait ValueOracle: Sync {
    fn player_count(&self) -> usize;
    fn evaluate(&self, coalition: Coalition) -> f64;
    fn evaluation_count(&self) -> u64;
}

/// A game stored as a dense table indexed by raw coalition bit pattern.
#[derive(Debug)]
pub struct DenseGame {
    d: usize,
    values: Vec<f64>,
    calls: EvalCounter,
}

impl DenseGame {
    pub fn new(d: usize, values: Vec<f64>) -> Result<Self> {
        if d == 0 || d > crate::coalition::MAX_PLAYERS {
            return Err(Error::invalid(format!("player count {d} out of range 1..=63")));
        }
        let expected = 1usize
            .checked_shl(d as u32)
            .ok_or_else(|| Error::invalid("dense table too large".to_string()))?;
        if values.len() != expected {
            return Err(Error::DimensionMismatch { expected, got: values.len() });
        }
        Ok(DenseGame { d, values, calls: EvalCounter::default() })
    }

    /// The full table, indexed by coalition bit pattern.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl ValueOracle for DenseGame {
    fn player_count(&self) -> usize {
        self.d
    }

    fn evaluate(&self, coalition: Coalition) -> f64 {
        debug_assert_eq!(coalition.player_count(), self.d);
        self.calls.bump();
        self.values[coalition.bits() as usize]
    }

    fn evaluation_count(&self) -> u64 {
        self.calls.get()
    }
}

/// Shared callable for opaque (non-symbolic) models.
pub type OpaqueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// The model side of a masked game: symbolic (exact derivatives) or an
/// opaque callable (central finite differences).
#[derive(Clone)]
pub enum ModelFn {
    Symbolic(SymbolicModel),
    Opaque { d: usize, f: OpaqueFn },
}

impl ModelFn {
    pub fn player_count(&self) -> usize {
        match self {
            ModelFn::Symbolic(m) => m.player_count(),
            ModelFn::Opaque { d, .. } => *d,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            ModelFn::Symbolic(m) => m.value(x),
            ModelFn::Opaque { f, .. } => f(x),
        }
    }

    pub fn is_symbolic(&self) -> bool {
        matches!(self, ModelFn::Symbolic(_))
    }
}

impl std::fmt::Debug for ModelFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelFn::Symbolic(m) => write!(f, "ModelFn::Symbolic({} terms)", m.terms().len()),
            ModelFn::Opaque { d, .. } => write!(f, "ModelFn::Opaque(d={d})"),
        }
    }
}

/// Central finite-difference step for opaque gradients.
fn fd_step(coord: f64) -> f64 {
    1e-5 * coord.abs().max(1.0)
}

/// Model + input + baseline: the masked game `v(S) = f(x_S, b_{S̄})`.
///
/// The baseline is an explicit required argument; there is no implicit
/// zero default anywhere in the library.
#[derive(Debug)]
pub struct MaskedModel {
    f: ModelFn,
    x: Vec<f64>,
    baseline: Vec<f64>,
    calls: EvalCounter,
}

impl MaskedModel {
    pub fn new(f: ModelFn, x: Vec<f64>, baseline: Vec<f64>) -> Result<Self> {
        let d = f.player_count();
        if x.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.len() });
        }
        if baseline.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: baseline.len() });
        }
        for v in x.iter().chain(baseline.iter()) {
            if !v.is_finite() {
                return Err(Error::invalid("non-finite input or baseline coordinate".to_string()));
            }
        }
        Ok(MaskedModel { f, x, baseline, calls: EvalCounter::default() })
    }

    pub fn from_symbolic(model: SymbolicModel, x: Vec<f64>, baseline: Vec<f64>) -> Result<Self> {
        MaskedModel::new(ModelFn::Symbolic(model), x, baseline)
    }

    pub fn model(&self) -> &ModelFn {
        &self.f
    }

    pub fn input(&self) -> &[f64] {
        &self.x
    }

    pub fn baseline(&self) -> &[f64] {
        &self.baseline
    }

    pub fn is_symbolic(&self) -> bool {
        self.f.is_symbolic()
    }

    /// `(x_S, b_{S̄})`: input coordinates for present players, baseline for
    /// absent ones.
    pub fn masked_point(&self, s: Coalition) -> Vec<f64> {
        debug_assert_eq!(s.player_count(), self.x.len());
        (0..self.x.len())
            .map(|k| if s.contains(k) { self.x[k] } else { self.baseline[k] })
            .collect()
    }

    /// Point at fraction `alpha` along the straight path from `b` to the
    /// masked input `(x_S, b_{S̄})`; absent coordinates stay at baseline.
    pub fn path_point(&self, s: Coalition, alpha: f64) -> Vec<f64> {
        (0..self.x.len())
            .map(|k| {
                if s.contains(k) {
                    self.baseline[k] + alpha * (self.x[k] - self.baseline[k])
                } else {
                    self.baseline[k]
                }
            })
            .collect()
    }

    /// Raw model value at an arbitrary point (not a coalition evaluation;
    /// does not touch the counter).
    pub fn value_at(&self, point: &[f64]) -> f64 {
        self.f.value(point)
    }

    /// `∂f/∂x_i` at `point`: exact duals for symbolic models, central finite
    /// differences (step `1e-5·max(1,|p_i|)`) for opaque ones.
    pub fn gradient_component(&self, point: &[f64], i: usize) -> f64 {
        match &self.f {
            ModelFn::Symbolic(m) => m.gradient_component(point, i),
            ModelFn::Opaque { f, .. } => {
                let h = fd_step(point[i]);
                let mut hi = point.to_vec();
                let mut lo = point.to_vec();
                hi[i] += h;
                lo[i] -= h;
                (f(&hi) - f(&lo)) / (2.0 * h)
            }
        }
    }

    /// `(∂f/∂x_i, ∂²f/∂x_i∂x_j)` at `point` for symbolic models.
    ///
    /// Returns `None` for opaque models; integrated Hessians falls back to
    /// finite differences of the inner path integral instead.
    pub fn grad_and_hessian_component(&self, point: &[f64], i: usize, j: usize) -> Option<(f64, f64)> {
        match &self.f {
            ModelFn::Symbolic(m) => Some(m.grad_and_hessian_component(point, i, j)),
            ModelFn::Opaque { .. } => None,
        }
    }
}

impl ValueOracle for MaskedModel {
    fn player_count(&self) -> usize {
        self.x.len()
    }

    fn evaluate(&self, coalition: Coalition) -> f64 {
        self.calls.bump();
        self.f.value(&self.masked_point(coalition))
    }

    fn evaluation_count(&self) -> u64 {
        self.calls.get()
    }
}

/// Transparent memoizer in front of any oracle.
///
/// Each distinct coalition reaches the backing oracle at most once (the
/// insertion path holds the shard lock, so concurrent requests for the same
/// key do not double-evaluate); values pass through bit-identically.
pub struct EvaluationCache<'a> {
    oracle: &'a dyn ValueOracle,
    map: DashMap<u64, f64>,
}

impl<'a> EvaluationCache<'a> {
    pub fn new(oracle: &'a dyn ValueOracle) -> Self {
        EvaluationCache { oracle, map: DashMap::new() }
    }

    /// Number of distinct coalitions evaluated so far.
    pub fn distinct_evaluations(&self) -> usize {
        self.map.len()
    }
}

impl ValueOracle for EvaluationCache<'_> {
    fn player_count(&self) -> usize {
        self.oracle.player_count()
    }

    fn evaluate(&self, coalition: Coalition) -> f64 {
        *self
            .map
            .entry(coalition.bits())
            .or_insert_with(|| self.oracle.evaluate(coalition))
    }

    fn evaluation_count(&self) -> u64 {
        self.oracle.evaluation_count()
    }
}

/// Evaluates all 2^d coalitions (ascending bit pattern) into a dense table.
pub fn enumerate_game(oracle: &dyn ValueOracle) -> Result<DenseGame> {
    enumerate_game_with_limit(oracle, DEFAULT_EXACT_LIMIT)
}

pub fn enumerate_game_with_limit(oracle: &dyn ValueOracle, limit: usize) -> Result<DenseGame> {
    let d = oracle.player_count();
    check_capacity(d, limit)?;
    let values: Vec<f64> = all_coalitions(d).map(|c| oracle.evaluate(c)).collect();
    DenseGame::new(d, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::table1_masked;

    #[test]
    fn masked_evaluation_reference_points() {
        // f(x) = x0 + x0 x1² at x=(2,3), b=(0,0)
        let masked = table1_masked([2.0, 3.0]);
        let full = Coalition::full(2);
        assert_eq!(masked.evaluate(full), 20.0);
        assert_eq!(masked.evaluate(Coalition::empty(2)), 0.0);
        assert_eq!(masked.evaluate(Coalition::from_players(&[1], 2).unwrap()), 0.0);
        assert_eq!(masked.evaluate(Coalition::from_players(&[0], 2).unwrap()), 2.0);
        assert_eq!(masked.evaluation_count(), 4);
    }

    #[test]
    fn enumerate_reference_table() {
        let masked = table1_masked([2.0, 3.0]);
        let dense = enumerate_game(&masked).unwrap();
        assert_eq!(dense.values(), &[0.0, 2.0, 0.0, 20.0]);
    }

    #[test]
    fn enumerate_rejects_oversize() {
        struct Big;
        impl ValueOracle for Big {
            fn player_count(&self) -> usize {
                30
            }
            fn evaluate(&self, _: Coalition) -> f64 {
                0.0
            }
            fn evaluation_count(&self) -> u64 {
                0
            }
        }
        let err = enumerate_game(&Big).unwrap_err();
        assert!(matches!(err, Error::CapacityExceeded { d: 30, limit: 24 }));
        let msg = err.to_string();
        assert!(msg.contains("approximators"));
    }

    #[test]
    fn cache_is_transparent_and_counts_distinct() {
        let masked = table1_masked([2.0, 3.0]);
        let direct = enumerate_game(&masked).unwrap();
        let direct_values = direct.values().to_vec();

        let masked2 = table1_masked([2.0, 3.0]);
        let cache = EvaluationCache::new(&masked2);
        let through = enumerate_game(&cache).unwrap();
        assert_eq!(through.values(), direct_values.as_slice());

        // Re-enumerating through the cache adds no backing evaluations.
        let before = masked2.evaluation_count();
        let again = enumerate_game(&cache).unwrap();
        assert_eq!(masked2.evaluation_count(), before);
        assert_eq!(again.values(), direct_values.as_slice());
        assert_eq!(cache.distinct_evaluations(), 4);
    }

    #[test]
    fn opaque_models_get_fd_gradients() {
        let f = ModelFn::Opaque {
            d: 2,
            f: Arc::new(|x: &[f64]| x[0] + x[0] * x[1] * x[1]),
        };
        let masked = MaskedModel::new(f, vec![2.0, 3.0], vec![0.0, 0.0]).unwrap();
        let g0 = masked.gradient_component(&[2.0, 3.0], 0);
        let g1 = masked.gradient_component(&[2.0, 3.0], 1);
        assert!((g0 - 10.0).abs() < 1e-6);
        assert!((g1 - 12.0).abs() < 1e-6);
        assert!(masked.grad_and_hessian_component(&[2.0, 3.0], 0, 1).is_none());
    }

    #[test]
    fn dimension_mismatches_rejected() {
        let model = crate::zoo::table1_model();
        assert!(MaskedModel::from_symbolic(model.clone(), vec![1.0], vec![0.0, 0.0]).is_err());
        assert!(MaskedModel::from_symbolic(model, vec![1.0, 2.0], vec![0.0]).is_err());
        assert!(DenseGame::new(2, vec![0.0; 3]).is_err());
    }
}
