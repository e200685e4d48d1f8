//! First-order attributions: exact Shapley values, gradient×input, and
//! integrated gradients, each available both unrestricted and restricted to an
//! active coalition. The restricted form `φ_i(S)` is the building block for
//! the serial decompositions, SOP, and the directional meta-attribution
//! engine, so every method here exposes it through [`RestrictedAttributor`].

use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::game::{check_capacity, EvaluationCache, MaskedModel, ValueOracle, DEFAULT_EXACT_LIMIT};

/// Midpoint-rule node count used by integrated gradients unless overridden.
pub const DEFAULT_IG_STEPS: usize = 256;

/// Identifies which first-order method produced an attribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BaseMethodTag {
    #[serde(rename = "sv")]
    ShapleyValue,
    #[serde(rename = "gxi")]
    GradTimesInput,
    #[serde(rename = "ig")]
    IntegratedGradients,
    #[serde(rename = "external")]
    External,
}

impl std::fmt::Display for BaseMethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            BaseMethodTag::ShapleyValue => "sv",
            BaseMethodTag::GradTimesInput => "gxi",
            BaseMethodTag::IntegratedGradients => "ig",
            BaseMethodTag::External => "external",
        };
        f.write_str(s)
    }
}

/// A per-player attribution vector together with the method that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionVector {
    pub d: usize,
    pub values: Vec<f64>,
    pub method: BaseMethodTag,
    /// Input point the attribution explains, when one exists (gradient
    /// methods on a masked model); game-only attributions leave this unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<Vec<f64>>,
}

impl AttributionVector {
    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Shapley coalition weights `w(s) = 1 / (d · C(d−1, s))` for `s = 0..d`.
///
/// Computed by the multiplicative recurrence `w(s+1) = w(s)·(s+1)/(d−1−s)`
/// so no factorial is ever formed; stable through d = 63.
pub fn shapley_weights(d: usize) -> Vec<f64> {
    assert!(d >= 1, "weights need at least one player");
    let mut w = vec![0.0; d];
    w[0] = 1.0 / d as f64;
    for s in 0..d - 1 {
        w[s + 1] = w[s] * (s + 1) as f64 / (d - 1 - s) as f64;
    }
    w
}

/// Shapley value of `target` in the subgame over `active`, reading coalition
/// values through `value`. Marginal contributions are accumulated per
/// coalition size in ascending bit-pattern order before the single weighted
/// reduction, which keeps the result deterministic and exactly symmetric on
/// integer-valued games.
pub(crate) fn subgame_shapley(
    value: &mut dyn FnMut(Coalition) -> f64,
    active: Coalition,
    target: usize,
) -> f64 {
    let n = active.size();
    let weights = shapley_weights(n);
    let rest = active.without(target);
    let mut by_size = vec![0.0; n];
    for sub in rest.subsets() {
        by_size[sub.size()] += value(sub.with(target)) - value(sub);
    }
    weights.iter().zip(&by_size).map(|(w, acc)| w * acc).sum()
}

/// All d Shapley values of a dense game table (`values[s]` indexed by
/// coalition bit pattern). Same size-grouped reduction as [`subgame_shapley`].
pub(crate) fn shapley_all_from_dense(values: &[f64], d: usize) -> Vec<f64> {
    debug_assert_eq!(values.len(), 1usize << d);
    let weights = shapley_weights(d);
    let mut by_size = vec![vec![0.0; d]; d];
    for bits in 0..values.len() {
        let s = bits.count_ones() as usize;
        for (p, sizes) in by_size.iter_mut().enumerate() {
            let bit = 1usize << p;
            if bits & bit == 0 {
                sizes[s] += values[bits | bit] - values[bits];
            }
        }
    }
    by_size
        .iter()
        .map(|sizes| weights.iter().zip(sizes).map(|(w, acc)| w * acc).sum())
        .collect()
}

fn check_restriction(d: usize, active: Coalition, target: usize) -> Result<()> {
    if active.player_count() != d {
        return Err(Error::invalid(format!(
            "active coalition {active:?} does not fit a {d}-player game"
        )));
    }
    if target >= d || !active.contains(target) {
        return Err(Error::invalid(format!(
            "target player {target} is not a member of the active coalition {active:?}"
        )));
    }
    Ok(())
}

/// An attribution method that can score a target player inside any active
/// coalition containing it. `restricted(full, i)` must coincide with the
/// unrestricted attribution, and every implementation here gets that for free
/// by running the full coalition through the same code path.
pub trait RestrictedAttributor: Sync {
    fn player_count(&self) -> usize;

    fn method_tag(&self) -> BaseMethodTag;

    /// Attribution of `target` with the game restricted to `active`
    /// (players outside `active` pinned to the baseline / absent).
    fn restricted(&self, active: Coalition, target: usize) -> Result<f64>;

    /// Unrestricted attribution of every player.
    fn attribution_vector(&self) -> Result<AttributionVector> {
        let d = self.player_count();
        let full = Coalition::full(d);
        let values = (0..d)
            .map(|i| self.restricted(full, i))
            .collect::<Result<Vec<f64>>>()?;
        Ok(AttributionVector { d, values, method: self.method_tag(), input: None })
    }
}

/// Exact Shapley attribution over any value oracle, with memoized coalition
/// evaluations shared across all `(active, target)` queries.
pub struct SvAttributor<'a> {
    cache: EvaluationCache<'a>,
    d: usize,
}

impl<'a> SvAttributor<'a> {
    pub fn new(oracle: &'a dyn ValueOracle) -> Result<Self> {
        Self::with_limit(oracle, DEFAULT_EXACT_LIMIT)
    }

    pub fn with_limit(oracle: &'a dyn ValueOracle, limit: usize) -> Result<Self> {
        let d = oracle.player_count();
        check_capacity(d, limit)?;
        Ok(SvAttributor { cache: EvaluationCache::new(oracle), d })
    }

    /// Distinct coalitions evaluated so far (shared across queries).
    pub fn distinct_evaluations(&self) -> usize {
        self.cache.distinct_evaluations()
    }
}

impl RestrictedAttributor for SvAttributor<'_> {
    fn player_count(&self) -> usize {
        self.d
    }

    fn method_tag(&self) -> BaseMethodTag {
        BaseMethodTag::ShapleyValue
    }

    fn restricted(&self, active: Coalition, target: usize) -> Result<f64> {
        check_restriction(self.d, active, target)?;
        Ok(subgame_shapley(&mut |c| self.cache.evaluate(c), active, target))
    }
}

/// Gradient×input on the masked model: `(x_i − b_i) · ∂_i f_S(x_S, b_{S̄})`.
/// Coordinates frozen at the baseline contribute zero gradient because the
/// derivative is taken of the masked function at the masked point.
pub struct GxIAttributor<'a> {
    model: &'a MaskedModel,
}

impl<'a> GxIAttributor<'a> {
    pub fn new(model: &'a MaskedModel) -> Self {
        GxIAttributor { model }
    }
}

impl RestrictedAttributor for GxIAttributor<'_> {
    fn player_count(&self) -> usize {
        self.model.player_count()
    }

    fn method_tag(&self) -> BaseMethodTag {
        BaseMethodTag::GradTimesInput
    }

    fn restricted(&self, active: Coalition, target: usize) -> Result<f64> {
        check_restriction(self.player_count(), active, target)?;
        let point = self.model.masked_point(active);
        let delta = self.model.input()[target] - self.model.baseline()[target];
        Ok(delta * self.model.gradient_component(&point, target))
    }
}

/// Integrated gradients on the masked model: midpoint-rule quadrature of
/// `(x_i − b_i) ∫₀¹ ∂_i f_S(b + α(x−b)) dα` along the straight path, with the
/// path confined to the active coordinates.
pub struct IgAttributor<'a> {
    model: &'a MaskedModel,
    steps: usize,
}

impl<'a> IgAttributor<'a> {
    pub fn new(model: &'a MaskedModel, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::invalid("integrated gradients needs at least one quadrature step"));
        }
        Ok(IgAttributor { model, steps })
    }

    pub fn steps(&self) -> usize {
        self.steps
    }
}

impl RestrictedAttributor for IgAttributor<'_> {
    fn player_count(&self) -> usize {
        self.model.player_count()
    }

    fn method_tag(&self) -> BaseMethodTag {
        BaseMethodTag::IntegratedGradients
    }

    fn restricted(&self, active: Coalition, target: usize) -> Result<f64> {
        check_restriction(self.player_count(), active, target)?;
        let delta = self.model.input()[target] - self.model.baseline()[target];
        if delta == 0.0 {
            return Ok(0.0);
        }
        let n = self.steps;
        let mut sum = 0.0;
        for k in 0..n {
            let alpha = (k as f64 + 0.5) / n as f64;
            let point = self.model.path_point(active, alpha);
            sum += self.model.gradient_component(&point, target);
        }
        Ok(delta * sum / n as f64)
    }
}

/// Exact Shapley values of every player. Fails with a capacity error rather
/// than attempting a 2^d enumeration beyond the exact-engine limit.
pub fn shapley_value_exact(oracle: &dyn ValueOracle) -> Result<AttributionVector> {
    SvAttributor::new(oracle)?.attribution_vector()
}

/// Gradient×input for every player at the full coalition.
pub fn grad_times_input(model: &MaskedModel) -> Result<AttributionVector> {
    let mut out = GxIAttributor::new(model).attribution_vector()?;
    out.input = Some(model.input().to_vec());
    Ok(out)
}

/// Integrated gradients for every player at the full coalition.
pub fn integrated_gradients(model: &MaskedModel, steps: usize) -> Result<AttributionVector> {
    let mut out = IgAttributor::new(model, steps)?.attribution_vector()?;
    out.input = Some(model.input().to_vec());
    Ok(out)
}
