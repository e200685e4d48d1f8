//! Budgeted Shapley estimation for games too large to enumerate: permutation
//! Monte Carlo and Shapley-kernel weighted least squares, both with optional
//! antithetic pairing, plus the per-target estimation path for directional
//! meta-attributions. All randomness flows through a counter-based generator
//! with one stream per target, so parallel runs reproduce exactly.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::first_order::RestrictedAttributor;
use crate::game::{EvaluationCache, ValueOracle};
use crate::meta::{DirectionalMatrix, MetaGameOracle};

/// Evaluation budget for one estimator run. `max_evaluations` bounds the
/// number of distinct oracle calls (repeated coalitions are served from a
/// cache and cost nothing).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub max_evaluations: u64,
    pub seed: u64,
    pub pairing: bool,
}

impl Budget {
    pub fn new(max_evaluations: u64, seed: u64) -> Self {
        Budget { max_evaluations, seed, pairing: false }
    }

    pub fn with_pairing(mut self, pairing: bool) -> Self {
        self.pairing = pairing;
        self
    }
}

/// Which sampling estimator produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EstimatorKind {
    #[serde(rename = "mc")]
    McPermutation,
    #[serde(rename = "regression")]
    Regression,
}

impl std::fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EstimatorKind::McPermutation => f.write_str("mc"),
            EstimatorKind::Regression => f.write_str("regression"),
        }
    }
}

/// Estimate plus per-component standard errors and the realized cost.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub values: Vec<f64>,
    pub stderr: Vec<f64>,
    pub evaluations_used: u64,
    pub estimator: EstimatorKind,
}

/// Permutation-sampling Shapley estimator: each sampled ordering contributes
/// one marginal per player along its prefix chain (d+1 evaluations). With
/// pairing, each ordering is averaged with its reversal — the reversed chain
/// walks the complement coalitions — and the pair mean is one sample.
pub fn shapley_mc_permutation(
    oracle: &dyn ValueOracle,
    budget: &Budget,
) -> Result<EstimateWithError> {
    shapley_mc_with_stream(oracle, budget, 0)
}

pub(crate) fn shapley_mc_with_stream(
    oracle: &dyn ValueOracle,
    budget: &Budget,
    stream: u64,
) -> Result<EstimateWithError> {
    let d = oracle.player_count();
    let per_perm = d as u64 + 1;
    let factor = if budget.pairing { 2 } else { 1 };
    if budget.max_evaluations < factor * per_perm {
        return Err(Error::invalid(format!(
            "budget {} cannot pay for one {} permutation walk of {} evaluations",
            budget.max_evaluations,
            if budget.pairing { "paired" } else { "full" },
            factor * per_perm
        )));
    }

    let cache = EvaluationCache::new(oracle);
    let before = oracle.evaluation_count();
    let mut rng = ChaCha12Rng::seed_from_u64(budget.seed);
    rng.set_stream(stream);

    let n_samples = (budget.max_evaluations / (factor * per_perm)) as usize;
    let v_empty = cache.evaluate(Coalition::empty(d));

    let mut sum = vec![0.0; d];
    let mut sumsq = vec![0.0; d];
    let mut order: Vec<usize> = (0..d).collect();
    let mut forward = vec![0.0; d];
    let mut backward = vec![0.0; d];

    for _ in 0..n_samples {
        order.shuffle(&mut rng);
        let mut seen = Coalition::empty(d);
        let mut prev = v_empty;
        for &p in &order {
            seen = seen.with(p);
            let v = cache.evaluate(seen);
            forward[p] = v - prev;
            prev = v;
        }
        if budget.pairing {
            let mut seen = Coalition::empty(d);
            let mut prev = v_empty;
            for &p in order.iter().rev() {
                seen = seen.with(p);
                let v = cache.evaluate(seen);
                backward[p] = v - prev;
                prev = v;
            }
            for p in 0..d {
                forward[p] = 0.5 * (forward[p] + backward[p]);
            }
        }
        for p in 0..d {
            sum[p] += forward[p];
            sumsq[p] += forward[p] * forward[p];
        }
    }

    let n = n_samples as f64;
    let values: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let stderr: Vec<f64> = values
        .iter()
        .zip(&sumsq)
        .map(|(mean, sq)| {
            if n_samples < 2 {
                0.0
            } else {
                let var = ((sq - n * mean * mean) / (n - 1.0)).max(0.0);
                (var / n).sqrt()
            }
        })
        .collect();

    let evaluations_used = oracle.evaluation_count() - before;
    debug_assert!(evaluations_used <= budget.max_evaluations);
    Ok(EstimateWithError {
        values,
        stderr,
        evaluations_used,
        estimator: EstimatorKind::McPermutation,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    let mut out = 1.0;
    for i in 0..k {
        out *= (n - i) as f64 / (i + 1) as f64;
    }
    out
}

/// Weighted-least-squares (Shapley-kernel) estimator. The boundary
/// coalitions ∅ and [d] are always evaluated and the efficiency constraint
/// `Σφ = v([d]) − v(∅)` is enforced exactly by eliminating one unknown.
/// When the budget covers every coalition the sampling is replaced by the
/// full kernel-weighted system, whose solution is the exact Shapley value.
pub fn shapley_regression(oracle: &dyn ValueOracle, budget: &Budget) -> Result<EstimateWithError> {
    shapley_regression_with_stream(oracle, budget, 0)
}

pub(crate) fn shapley_regression_with_stream(
    oracle: &dyn ValueOracle,
    budget: &Budget,
    stream: u64,
) -> Result<EstimateWithError> {
    let d = oracle.player_count();
    if budget.max_evaluations < d as u64 + 2 {
        return Err(Error::invalid(format!(
            "budget {} is below the regression minimum of d+2 = {}",
            budget.max_evaluations,
            d + 2
        )));
    }

    let cache = EvaluationCache::new(oracle);
    let before = oracle.evaluation_count();
    let v_empty = cache.evaluate(Coalition::empty(d));
    let v_full = cache.evaluate(Coalition::full(d));
    let delta = v_full - v_empty;

    if d == 1 {
        return Ok(EstimateWithError {
            values: vec![delta],
            stderr: vec![0.0],
            evaluations_used: oracle.evaluation_count() - before,
            estimator: EstimatorKind::Regression,
        });
    }

    // Sampled coalitions with their draw weights (multiplicity, or the exact
    // kernel weight in the exhaustive branch), in canonical ascending order.
    let mut weighted: BTreeMap<u64, f64> = BTreeMap::new();
    let mut total_weight = 0.0;
    let exhaustive = d < 63 && budget.max_evaluations >= (1u64 << d);
    if exhaustive {
        for bits in 1..(1u64 << d) - 1 {
            let s = bits.count_ones() as usize;
            let w = (d - 1) as f64 / (binomial(d, s) * (s * (d - s)) as f64);
            weighted.insert(bits, w);
            total_weight += w;
        }
    } else {
        // Inverse-CDF over the kernel size distribution p(s) ∝ 1/(s(d−s)).
        let mut cumulative = Vec::with_capacity(d - 1);
        let mut acc = 0.0;
        for s in 1..d {
            acc += 1.0 / (s * (d - s)) as f64;
            cumulative.push(acc);
        }
        let norm = acc;

        let mut rng = ChaCha12Rng::seed_from_u64(budget.seed);
        rng.set_stream(stream);
        let remaining = budget.max_evaluations - 2;
        let draws = if budget.pairing { remaining / 2 } else { remaining };
        let full_bits = Coalition::full(d).bits();
        for _ in 0..draws {
            let u: f64 = rng.gen::<f64>() * norm;
            let s = cumulative.partition_point(|c| *c < u).min(d - 2) + 1;
            let mut bits = 0u64;
            for idx in rand::seq::index::sample(&mut rng, d, s) {
                bits |= 1 << idx;
            }
            *weighted.entry(bits).or_default() += 1.0;
            total_weight += 1.0;
            if budget.pairing {
                *weighted.entry(full_bits ^ bits).or_default() += 1.0;
                total_weight += 1.0;
            }
        }
    }

    // Eliminate the last player via the efficiency constraint:
    // y = v(S) − v(∅) − [d−1 ∈ S]·Δ, features z_i = [i ∈ S] − [d−1 ∈ S].
    let p = d - 1;
    let mut ata = DMatrix::<f64>::zeros(p, p);
    let mut atb = DVector::<f64>::zeros(p);
    let mut design: Vec<(Vec<f64>, f64, f64)> = Vec::with_capacity(weighted.len());
    for (&bits, &w) in &weighted {
        let c = Coalition::from_bits(bits, d)?;
        let has_last = c.contains(d - 1);
        let y = cache.evaluate(c) - v_empty - if has_last { delta } else { 0.0 };
        let mut z = vec![if has_last { -1.0 } else { 0.0 }; p];
        for player in c.players() {
            if player < p {
                z[player] += 1.0;
            }
        }
        for a in 0..p {
            if z[a] != 0.0 {
                atb[a] += w * z[a] * y;
                for b in 0..p {
                    if z[b] != 0.0 {
                        ata[(a, b)] += w * z[a] * z[b];
                    }
                }
            }
        }
        design.push((z, y, w));
    }

    let singular = || {
        Error::Estimation(
            "the sampled regression system is singular; increase the budget".to_string(),
        )
    };
    let lu = ata.clone().lu();
    let beta = lu.solve(&atb).ok_or_else(singular)?;
    if beta.iter().any(|v| !v.is_finite()) {
        return Err(singular());
    }
    let inverse = ata.try_inverse().ok_or_else(singular)?;

    let mut values = vec![0.0; d];
    let mut beta_sum = 0.0;
    for i in 0..p {
        values[i] = beta[i];
        beta_sum += beta[i];
    }
    values[d - 1] = delta - beta_sum;

    // Sample-based errors from the weighted residual variance. The
    // exhaustive branch is deterministic — no sampling variance — so its
    // errors are zero even though the linear model leaves residuals on
    // non-additive games.
    let mut stderr = vec![0.0; d];
    if !exhaustive {
        let mut wss = 0.0;
        for (z, y, w) in &design {
            let fitted: f64 = z.iter().zip(beta.iter()).map(|(zi, bi)| zi * bi).sum();
            let r = y - fitted;
            wss += w * r * r;
        }
        let dof = (total_weight - p as f64).max(1.0);
        let sigma2 = (wss / dof).max(0.0);
        for (i, slot) in stderr.iter_mut().take(p).enumerate() {
            *slot = (sigma2 * inverse[(i, i)]).max(0.0).sqrt();
        }
        let ones_quad: f64 =
            (0..p).map(|a| (0..p).map(|b| inverse[(a, b)]).sum::<f64>()).sum();
        stderr[d - 1] = (sigma2 * ones_quad).max(0.0).sqrt();
    }

    let evaluations_used = oracle.evaluation_count() - before;
    debug_assert!(evaluations_used <= budget.max_evaluations);
    Ok(EstimateWithError {
        values,
        stderr,
        evaluations_used,
        estimator: EstimatorKind::Regression,
    })
}

/// Default estimator choice: permutation sampling amortizes across all
/// targets for moderate d; regression focuses the budget when d is large or
/// only specific target rows are requested.
pub fn default_estimator(d: usize, all_targets: bool) -> EstimatorKind {
    if d <= 40 && all_targets {
        EstimatorKind::McPermutation
    } else {
        EstimatorKind::Regression
    }
}

/// Estimated directional meta-attributions for the requested target rows.
/// Each target's metagame is sampled on its own random stream with
/// `budget.max_evaluations` restricted-attribution calls available; the
/// diagonal `φ_i({i})` and the decomposed first-order value stay exact.
pub fn meta_attribution_approx(
    base: &dyn RestrictedAttributor,
    budget: &Budget,
    targets: &[usize],
    estimator: Option<EstimatorKind>,
) -> Result<DirectionalMatrix> {
    let d = base.player_count();
    let mut wanted: Vec<usize> = targets.to_vec();
    wanted.sort_unstable();
    wanted.dedup();
    if wanted.is_empty() {
        return Err(Error::invalid("at least one target row is required"));
    }
    if let Some(&bad) = wanted.iter().find(|&&t| t >= d) {
        return Err(Error::invalid(format!("target {bad} out of range for {d} players")));
    }

    if d == 1 {
        let v = base.restricted(Coalition::full(1), 0)?;
        return DirectionalMatrix::from_parts(
            1,
            base.method_tag(),
            vec![0],
            vec![v],
            vec![v],
            Some(vec![0.0]),
        );
    }

    let chosen = estimator.unwrap_or_else(|| default_estimator(d, wanted.len() == d));
    let rows: Vec<(Vec<f64>, Vec<f64>, f64)> = wanted
        .par_iter()
        .map(|&i| -> Result<(Vec<f64>, Vec<f64>, f64)> {
            let nu = MetaGameOracle::new(base, i)?;
            let estimate = match chosen {
                EstimatorKind::McPermutation => {
                    shapley_mc_with_stream(&nu, budget, i as u64)?
                }
                EstimatorKind::Regression => {
                    shapley_regression_with_stream(&nu, budget, i as u64)?
                }
            };
            let diagonal = base.restricted(Coalition::empty(d).with(i), i)?;
            let phi = base.restricted(Coalition::full(d), i)?;
            let mut row = vec![0.0; d];
            let mut se = vec![0.0; d];
            for j in 0..d {
                if j != i {
                    let j_sq = if j < i { j } else { j - 1 };
                    row[j] = estimate.values[j_sq];
                    se[j] = estimate.stderr[j_sq];
                }
            }
            row[i] = diagonal;
            Ok((row, se, phi))
        })
        .collect::<Result<_>>()
        .map_err(|e| match e {
            Error::Estimation(msg) => Error::Estimation(format!("{msg} (a target row failed)")),
            other => other,
        })?;

    let mut entries = Vec::with_capacity(wanted.len() * d);
    let mut stderr = Vec::with_capacity(wanted.len() * d);
    let mut first_order = Vec::with_capacity(wanted.len());
    for (row, se, phi) in rows {
        entries.extend_from_slice(&row);
        stderr.extend_from_slice(&se);
        first_order.push(phi);
    }
    DirectionalMatrix::from_parts(
        d,
        base.method_tag(),
        wanted,
        entries,
        first_order,
        Some(stderr),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::first_order::{shapley_value_exact, IgAttributor, SvAttributor};
    use crate::game::MaskedModel;
    use crate::meta::{check_hierarchical_efficiency, meta_attribution_exact};
    use crate::mobius::{MobiusExpansion, MobiusOracle};
    use crate::zoo::{random_mobius_game, random_sparse_polynomial, table1_masked, SymmetricGame};

    fn coalition(players: &[usize], d: usize) -> Coalition {
        Coalition::from_players(players, d).unwrap()
    }

    fn additive_integer_game(d: usize, coeffs: &[f64]) -> MobiusOracle {
        let pairs: Vec<_> = coeffs
            .iter()
            .enumerate()
            .map(|(i, &c)| (coalition(&[i], d), c))
            .collect();
        MobiusOracle::new(MobiusExpansion::from_coefficients(d, pairs).unwrap())
    }

    #[test]
    fn mc_recovers_reference_values() {
        let masked = table1_masked([2.0, 3.0]);
        let budget = Budget::new(10_000 * 3, 7);
        let est = shapley_mc_permutation(&masked, &budget).unwrap();
        assert!(est.evaluations_used <= budget.max_evaluations);
        let exact = [11.0, 9.0];
        for i in 0..2 {
            assert!(est.stderr[i] < 0.3, "stderr {}", est.stderr[i]);
            assert!(
                (est.values[i] - exact[i]).abs() <= 3.0 * est.stderr[i].max(1e-9),
                "player {i}: {} vs {}",
                est.values[i],
                exact[i]
            );
        }
    }

    #[test]
    fn mc_single_permutation_is_deterministic() {
        let oracle = MobiusOracle::new(random_mobius_game(4, 0.4, 3));
        let budget = Budget::new(5, 19);
        let a = shapley_mc_permutation(&oracle, &budget).unwrap();
        let b = shapley_mc_permutation(&oracle, &budget).unwrap();
        for i in 0..4 {
            assert_eq!(a.values[i].to_bits(), b.values[i].to_bits());
            assert_eq!(a.stderr[i], 0.0);
        }
    }

    #[test]
    fn mc_additive_game_is_exact_after_one_permutation() {
        let coeffs = [2.0, -3.0, 5.0, 1.0, -4.0];
        let oracle = additive_integer_game(5, &coeffs);
        let est = shapley_mc_permutation(&oracle, &Budget::new(6, 11)).unwrap();
        assert_eq!(est.values, coeffs.to_vec());
    }

    #[test]
    fn mc_rejects_budgets_below_one_permutation() {
        let oracle = MobiusOracle::new(random_mobius_game(4, 0.4, 3));
        assert!(matches!(
            shapley_mc_permutation(&oracle, &Budget::new(4, 0)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            shapley_mc_permutation(&oracle, &Budget::new(6, 0).with_pairing(true)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn mc_is_unbiased_across_seeds() {
        let d = 8;
        let oracle = MobiusOracle::new(random_mobius_game(d, 0.35, 71));
        let exact = shapley_value_exact(&oracle).unwrap().values;
        let n_seeds = 200;
        let mut sums = vec![0.0; d];
        let mut sumsqs = vec![0.0; d];
        for seed in 0..n_seeds {
            let est =
                shapley_mc_permutation(&oracle, &Budget::new(40 * (d as u64 + 1), seed)).unwrap();
            for i in 0..d {
                sums[i] += est.values[i];
                sumsqs[i] += est.values[i] * est.values[i];
            }
        }
        let n = n_seeds as f64;
        for i in 0..d {
            let mean = sums[i] / n;
            let var = ((sumsqs[i] - n * mean * mean) / (n - 1.0)).max(0.0);
            let sem = (var / n).sqrt();
            assert!(
                (mean - exact[i]).abs() < 4.0 * sem.max(1e-12),
                "player {i}: mean {mean} vs exact {}",
                exact[i]
            );
        }
    }

    #[test]
    fn mc_pairing_reduces_stderr_on_symmetric_games() {
        let game = SymmetricGame::new(10, 2);
        let budget_evals = 40 * 11;
        let mut paired_total = 0.0;
        let mut unpaired_total = 0.0;
        for seed in 0..50 {
            let paired = shapley_mc_permutation(
                &game,
                &Budget::new(budget_evals, seed).with_pairing(true),
            )
            .unwrap();
            let unpaired =
                shapley_mc_permutation(&game, &Budget::new(budget_evals, seed)).unwrap();
            paired_total += paired.stderr.iter().sum::<f64>();
            unpaired_total += unpaired.stderr.iter().sum::<f64>();
        }
        assert!(
            paired_total <= unpaired_total,
            "paired {paired_total} vs unpaired {unpaired_total}"
        );
    }

    #[test]
    fn regression_exhaustive_budget_is_exact() {
        let d = 8;
        let oracle = MobiusOracle::new(random_mobius_game(d, 0.4, 5));
        let exact = shapley_value_exact(&oracle).unwrap().values;
        let est = shapley_regression(&oracle, &Budget::new(300, 1)).unwrap();
        assert!(est.evaluations_used <= 300);
        let delta = {
            let full = oracle.evaluate(Coalition::full(d));
            let empty = oracle.evaluate(Coalition::empty(d));
            full - empty
        };
        assert!((est.values.iter().sum::<f64>() - delta).abs() < 1e-10);
        for i in 0..d {
            assert!((est.values[i] - exact[i]).abs() < 1e-8, "player {i}");
            assert!(est.stderr[i] >= 0.0 && est.stderr[i].is_finite());
        }
    }

    #[test]
    fn regression_fits_additive_games_from_small_samples() {
        let coeffs = [1.0, -2.0, 3.0, 0.5, -1.5, 2.5];
        let oracle = additive_integer_game(6, &coeffs);
        let est = shapley_regression(&oracle, &Budget::new(20, 9)).unwrap();
        for i in 0..6 {
            assert!((est.values[i] - coeffs[i]).abs() < 1e-8, "player {i}");
        }
        let delta: f64 = coeffs.iter().sum();
        assert!((est.values.iter().sum::<f64>() - delta).abs() < 1e-10);
    }

    #[test]
    fn regression_paired_32d_budget_covers_reference_values() {
        let masked = table1_masked([2.0, 3.0]);
        let exact = [11.0, 9.0];
        let mut hits = 0;
        for seed in 0..100 {
            let est = shapley_regression(
                &masked,
                &Budget::new(32 * 2, seed).with_pairing(true),
            )
            .unwrap();
            if (0..2).all(|i| (est.values[i] - exact[i]).abs() <= 0.5) {
                hits += 1;
            }
        }
        assert!(hits >= 95, "only {hits}/100 runs within 0.5");
    }

    #[test]
    fn regression_reports_singular_systems() {
        let d = 8;
        let oracle = MobiusOracle::new(random_mobius_game(d, 0.4, 5));
        let mut singular_seed = None;
        for seed in 0..500 {
            match shapley_regression(&oracle, &Budget::new(d as u64 + 2, seed)) {
                Err(Error::Estimation(msg)) => {
                    assert!(msg.contains("budget"));
                    singular_seed = Some(seed);
                    break;
                }
                Ok(_) => {}
                Err(other) => panic!("unexpected error {other:?}"),
            }
        }
        assert!(
            singular_seed.is_some(),
            "no singular system found in 500 seeds at the minimum budget"
        );
    }

    #[test]
    fn regression_rejects_undersized_budgets() {
        let oracle = MobiusOracle::new(random_mobius_game(5, 0.4, 2));
        assert!(matches!(
            shapley_regression(&oracle, &Budget::new(6, 0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn meta_approx_row_sum_matches_first_order_on_large_models() {
        let d = 15;
        let model = random_sparse_polynomial(d, 3, 12, 2024).unwrap();
        let x: Vec<f64> = (0..d).map(|i| 0.9 - 0.11 * i as f64).collect();
        let masked = MaskedModel::from_symbolic(model, x, vec![0.0; d]).unwrap();
        let ig = IgAttributor::new(&masked, 32).unwrap();
        let budget = Budget::new(2000, 3);
        let dm = meta_attribution_approx(&ig, &budget, &[0], None).unwrap();
        assert_eq!(dm.targets(), &[0]);
        let se = dm.stderr_row(0).unwrap();
        assert_eq!(se[0], 0.0);
        let row_spread: f64 = se.iter().map(|s| s * s).sum::<f64>().sqrt();
        let residual = (dm.row_sum(0).unwrap() - dm.first_order(0).unwrap()).abs();
        assert!(
            residual <= (3.0 * row_spread).max(1e-9),
            "residual {residual} vs spread {row_spread}"
        );
    }

    #[test]
    fn meta_approx_with_exhaustive_budget_matches_exact_engine() {
        let oracle = MobiusOracle::new(random_mobius_game(6, 0.4, 44));
        let sv = SvAttributor::new(&oracle).unwrap();
        let exact = meta_attribution_exact(&sv).unwrap();
        let approx = meta_attribution_approx(
            &sv,
            &Budget::new(64, 0),
            &(0..6).collect::<Vec<_>>(),
            Some(EstimatorKind::Regression),
        )
        .unwrap();
        for i in 0..6 {
            for j in 0..6 {
                assert!(
                    (approx.entry(i, j) - exact.entry(i, j)).abs() < 1e-8,
                    "entry ({i},{j})"
                );
            }
        }
        for r in check_hierarchical_efficiency(&approx) {
            assert!(r < 1e-9);
        }
    }

    #[test]
    fn meta_approx_additive_game_has_flat_off_diagonals() {
        let oracle = additive_integer_game(6, &[2.0, -1.0, 3.0, 0.5, 1.5, -2.5]);
        let sv = SvAttributor::new(&oracle).unwrap();
        let dm = meta_attribution_approx(
            &sv,
            &Budget::new(500, 8),
            &(0..6).collect::<Vec<_>>(),
            None,
        )
        .unwrap();
        // The metagame payoffs are Shapley values, whose non-dyadic weights
        // leave ulp-level noise; the sampled marginals inherit it.
        for i in 0..6 {
            for j in 0..6 {
                if i != j {
                    assert!(dm.entry(i, j).abs() < 1e-12, "({i},{j}): {}", dm.entry(i, j));
                }
            }
        }
    }

    #[test]
    fn estimator_defaults_follow_the_size_and_target_rule() {
        assert_eq!(default_estimator(12, true), EstimatorKind::McPermutation);
        assert_eq!(default_estimator(12, false), EstimatorKind::Regression);
        assert_eq!(default_estimator(64, true), EstimatorKind::Regression);
    }
}
