//! Seeded invariant suite: every identity the exact engines promise, checked
//! over freshly drawn games and models, each with an instance count, the
//! worst residual seen, and a pinned tolerance. The report is byte-stable
//! for a fixed seed. `inject_fault` sign-flips one Shapley weight in the
//! suite's own reference route so that the efficiency check must fail —
//! a self-test that the suite can actually catch a broken engine.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::Serialize;

use metagame::approx::{shapley_mc_permutation, shapley_regression, Budget};
use metagame::coalition::{all_coalitions, Coalition};
use metagame::first_order::{
    integrated_gradients, shapley_value_exact, IgAttributor, RestrictedAttributor, SvAttributor,
};
use metagame::game::{enumerate_game, DenseGame, MaskedModel, ValueOracle};
use metagame::interaction::{
    fsii_from_mobius, integrated_hessians, serial_shapley, sop_pairwise, stii_from_mobius,
    stii_pairwise, two_shapley_from_mobius, PairIndex,
};
use metagame::meta::{
    check_hierarchical_efficiency, meta_attribution_exact, meta_external, symmetrize,
    ExternalAttributionTable,
};
use metagame::mobius::{mobius_transform, MobiusOracle};
use metagame::zoo::{random_mobius_oracle, random_sparse_polynomial};
use metagame::Result;

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub instances: usize,
    pub worst_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Instance descriptor (dimension and seed) behind `worst_residual`.
    pub worst_case: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<CheckReport>,
    pub all_pass: bool,
}

/// Running maximum-residual recorder for one invariant.
struct Check {
    name: &'static str,
    tolerance: f64,
    instances: usize,
    worst: f64,
    worst_case: String,
}

impl Check {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Check { name, tolerance, instances: 0, worst: 0.0, worst_case: String::from("-") }
    }

    fn record(&mut self, residual: f64, case: String) {
        self.instances += 1;
        if residual > self.worst || self.instances == 1 {
            self.worst = residual;
            self.worst_case = case;
        }
    }

    fn report(self) -> CheckReport {
        CheckReport {
            name: self.name.to_string(),
            instances: self.instances,
            worst_residual: self.worst,
            tolerance: self.tolerance,
            pass: self.worst <= self.tolerance,
            worst_case: self.worst_case,
        }
    }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn instance_seed(seed: u64, k: u64) -> u64 {
    seed.wrapping_mul(1009).wrapping_add(k)
}

/// Reference-route Shapley value: direct subset accumulation with its own
/// weight recurrence (the library reduces per-size buckets instead). The
/// fault flag flips the size-1 weight's sign.
fn reference_shapley(game: &DenseGame, fault: bool) -> Vec<f64> {
    let d = game.player_count();
    let mut w = vec![0.0; d];
    w[0] = 1.0 / d as f64;
    for s in 0..d - 1 {
        w[s + 1] = w[s] * (s + 1) as f64 / (d - 1 - s) as f64;
    }
    if fault {
        w[1] = -w[1];
    }
    let values = game.values();
    let mut phi = vec![0.0; d];
    for bits in 0..(1u64 << d) {
        let s = bits.count_ones() as usize;
        for i in 0..d {
            if bits & (1 << i) == 0 {
                let delta = values[(bits | (1 << i)) as usize] - values[bits as usize];
                phi[i] += w[s] * delta;
            }
        }
    }
    phi
}

/// Deterministic masked sparse-polynomial model for gradient-based checks.
fn drawn_model(d: usize, seed: u64) -> Result<MaskedModel> {
    let model = random_sparse_polynomial(d, 2.min(d), (2 * d).min(8), seed)?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0x5eed);
    let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.5..1.5)).collect();
    let baseline: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.25..0.25)).collect();
    MaskedModel::from_symbolic(model, x, baseline)
}

fn drawn_game(d: usize, seed: u64) -> MobiusOracle {
    random_mobius_oracle(d, 0.4, seed)
}

pub fn run_suite(seed: u64, inject_fault: bool) -> Result<SuiteReport> {
    let mut checks = Vec::new();

    // --- Shapley reference route: efficiency and agreement. ---
    let mut efficiency = Check::new("sv-efficiency", 1e-9);
    let mut dual_route = Check::new("sv-dual-route", 1e-9);
    for k in 0..8u64 {
        let d = 3 + (k as usize % 6);
        let s = instance_seed(seed, k);
        let oracle = drawn_game(d, s);
        let dense = enumerate_game(&oracle)?;
        let phi = reference_shapley(&dense, inject_fault);
        let grand = dense.values()[(1usize << d) - 1] - dense.values()[0];
        let case = format!("d={d} seed={s}");
        efficiency.record((phi.iter().sum::<f64>() - grand).abs(), case.clone());
        let lib = shapley_value_exact(&oracle)?;
        dual_route.record(max_abs_diff(&phi, &lib.values), case);
    }
    checks.push(efficiency.report());
    checks.push(dual_route.report());

    // --- Coalition-restricted attributions at their boundaries. ---
    let mut boundary = Check::new("restriction-boundary", 1e-9);
    for k in 0..6u64 {
        let d = 3 + (k as usize % 5);
        let s = instance_seed(seed, 100 + k);
        let oracle = drawn_game(d, s);
        let base = SvAttributor::new(&oracle)?;
        let phi = shapley_value_exact(&oracle)?;
        let empty = oracle.evaluate(Coalition::empty(d));
        let mut worst = 0.0f64;
        for i in 0..d {
            let full = base.restricted(Coalition::full(d), i)?;
            worst = worst.max((full - phi.values[i]).abs());
            let alone = base.restricted(Coalition::empty(d).with(i), i)?;
            let direct = oracle.evaluate(Coalition::empty(d).with(i)) - empty;
            worst = worst.max((alone - direct).abs());
        }
        boundary.record(worst, format!("d={d} seed={s}"));
    }
    checks.push(boundary.report());

    // --- Quadrature completeness. ---
    let mut completeness = Check::new("ig-completeness", 1e-3);
    for k in 0..6u64 {
        let d = 3 + (k as usize % 4);
        let s = instance_seed(seed, 200 + k);
        let masked = drawn_model(d, s)?;
        let ig = integrated_gradients(&masked, 256)?;
        let span = masked.value_at(masked.input()) - masked.value_at(masked.baseline());
        completeness.record((ig.sum() - span).abs(), format!("d={d} seed={s}"));
    }
    checks.push(completeness.report());

    // --- Serial matrices: rows rebuild the first-order attribution. ---
    let mut serial_rows = Check::new("serial-row-sums", 1e-9);
    for k in 0..6u64 {
        let d = 3 + (k as usize % 5);
        let s = instance_seed(seed, 300 + k);
        let oracle = drawn_game(d, s);
        let matrix = serial_shapley(&oracle)?;
        let phi = shapley_value_exact(&oracle)?;
        serial_rows.record(max_abs_diff(&matrix.row_sums(), &phi.values), format!("d={d} seed={s}"));
    }
    checks.push(serial_rows.report());

    let mut ih_rows = Check::new("ih-row-sums", 1e-3);
    for k in 0..4u64 {
        let d = 3 + (k as usize % 3);
        let s = instance_seed(seed, 400 + k);
        let masked = drawn_model(d, s)?;
        let matrix = integrated_hessians(&masked, 256)?;
        let ig = integrated_gradients(&masked, 256)?;
        ih_rows.record(max_abs_diff(&matrix.row_sums(), &ig.values), format!("d={d} seed={s}"));
    }
    checks.push(ih_rows.report());

    // --- Pairwise indices: dual routes and lump sums. ---
    let mut stii_routes = Check::new("stii-mobius-route", 1e-9);
    let mut lump_sums = Check::new("set-index-lump-sums", 1e-9);
    for k in 0..6u64 {
        let d = 3 + (k as usize % 5);
        let s = instance_seed(seed, 500 + k);
        let oracle = drawn_game(d, s);
        let discrete = stii_pairwise(&oracle)?;
        let expansion = mobius_transform(&oracle)?;
        let via_mobius = stii_from_mobius(&expansion);
        stii_routes.record(pair_index_diff(&discrete, &via_mobius), format!("d={d} seed={s}"));

        let phi = shapley_value_exact(&oracle)?;
        let fsii = fsii_from_mobius(&expansion);
        let two_sv = two_shapley_from_mobius(&expansion);
        let mut worst = 0.0f64;
        for i in 0..d {
            worst = worst.max((discrete.lump_sum(i) - phi.values[i]).abs());
            worst = worst.max((fsii.lump_sum(i) - phi.values[i]).abs());
            worst = worst.max((two_sv.lump_sum(i) - phi.values[i]).abs());
        }
        lump_sums.record(worst, format!("d={d} seed={s}"));
    }
    checks.push(stii_routes.report());
    checks.push(lump_sums.report());

    // --- Directional quadrature decomposition row identity. ---
    let mut sop_rows = Check::new("sop-row-identity", 1e-3);
    for k in 0..5u64 {
        let d = 3 + (k as usize % 3);
        let s = instance_seed(seed, 600 + k);
        let masked = drawn_model(d, s)?;
        let sop = sop_pairwise(&masked, 192)?;
        let worst =
            (0..d).map(|i| sop.row_identity_residual(i)).fold(0.0, f64::max);
        sop_rows.record(worst, format!("d={d} seed={s}"));
    }
    checks.push(sop_rows.report());

    // --- Meta-attributions: hierarchical efficiency, diagonals, folding. ---
    let mut meta_sv_rows = Check::new("meta-sv-row-sums", 1e-9);
    let mut meta_sv_fold = Check::new("meta-sv-symmetrize-stii", 1e-9);
    for k in 0..5u64 {
        let d = 3 + (k as usize % 5);
        let s = instance_seed(seed, 700 + k);
        let oracle = drawn_game(d, s);
        let base = SvAttributor::new(&oracle)?;
        let dm = meta_attribution_exact(&base)?;
        let mut worst = check_hierarchical_efficiency(&dm)
            .into_iter()
            .fold(0.0, f64::max);
        for i in 0..d {
            let lonely = base.restricted(Coalition::empty(d).with(i), i)?;
            worst = worst.max((dm.entry(i, i) - lonely).abs());
        }
        meta_sv_rows.record(worst, format!("d={d} seed={s}"));

        let folded = symmetrize(&dm)?;
        let stii = stii_pairwise(&oracle)?;
        meta_sv_fold.record(pair_index_diff(&folded, &stii), format!("d={d} seed={s}"));
    }
    checks.push(meta_sv_rows.report());
    checks.push(meta_sv_fold.report());

    let mut meta_ig_rows = Check::new("meta-ig-row-sums", 1e-3);
    let mut meta_ig_fold = Check::new("meta-ig-symmetrize-sop", 1e-3);
    for k in 0..3u64 {
        let d = 3 + (k as usize % 2);
        let s = instance_seed(seed, 800 + k);
        let masked = drawn_model(d, s)?;
        let base = IgAttributor::new(&masked, 192)?;
        let dm = meta_attribution_exact(&base)?;
        let worst = check_hierarchical_efficiency(&dm)
            .into_iter()
            .fold(0.0, f64::max);
        meta_ig_rows.record(worst, format!("d={d} seed={s}"));

        let folded = symmetrize(&dm)?;
        let sop = sop_pairwise(&masked, 192)?;
        let mut fold_worst = max_abs_diff(folded.singles(), sop.index.singles());
        for i in 0..d {
            for j in i + 1..d {
                fold_worst = fold_worst.max((folded.pair(i, j) - sop.index.pair(i, j)).abs());
            }
        }
        meta_ig_fold.record(fold_worst, format!("d={d} seed={s}"));
    }
    checks.push(meta_ig_rows.report());
    checks.push(meta_ig_fold.report());

    // --- External tables reproduce the engine they were dumped from. ---
    let mut external = Check::new("external-table-route", 1e-9);
    for k in 0..4u64 {
        let d = 3 + (k as usize % 4);
        let s = instance_seed(seed, 900 + k);
        let oracle = drawn_game(d, s);
        let base = SvAttributor::new(&oracle)?;
        let direct = meta_attribution_exact(&base)?;
        let targets: Vec<usize> = (0..d).collect();
        let table = ExternalAttributionTable::from_attributor(&base, &targets)?;
        let via_table = meta_external(&table)?;
        let mut worst = 0.0f64;
        for i in 0..d {
            worst = worst.max(max_abs_diff(direct.row(i).unwrap(), via_table.row(i).unwrap()));
        }
        external.record(worst, format!("d={d} seed={s}"));
    }
    checks.push(external.report());

    // --- Möbius transform: invertibility and the Shapley share formula. ---
    let mut roundtrip = Check::new("mobius-roundtrip", 1e-9);
    for k in 0..6u64 {
        let d = 3 + (k as usize % 5);
        let s = instance_seed(seed, 1000 + k);
        let oracle = drawn_game(d, s);
        let expansion = mobius_transform(&oracle)?;
        let rebuilt = MobiusOracle::new(expansion.clone());
        let mut worst = 0.0f64;
        for c in all_coalitions(d) {
            worst = worst.max((rebuilt.evaluate(c) - oracle.evaluate(c)).abs());
        }
        let phi = shapley_value_exact(&oracle)?;
        let shares = expansion.shapley();
        worst = worst.max(max_abs_diff(&shares, &phi.values));
        roundtrip.record(worst, format!("d={d} seed={s}"));
    }
    checks.push(roundtrip.report());

    // --- Estimators: seed determinism and exhaustive degeneracy. ---
    let mut determinism = Check::new("mc-seed-determinism", 0.0);
    for k in 0..3u64 {
        let d = 6 + (k as usize % 3);
        let s = instance_seed(seed, 1100 + k);
        let oracle = drawn_game(d, s);
        let budget = Budget { max_evaluations: 40 * (d as u64 + 1), seed: s, pairing: false };
        let first = shapley_mc_permutation(&oracle, &budget)?;
        let second = shapley_mc_permutation(&oracle, &budget)?;
        determinism.record(max_abs_diff(&first.values, &second.values), format!("d={d} seed={s}"));
    }
    checks.push(determinism.report());

    let mut exhaustive = Check::new("regression-exhaustive", 1e-8);
    for k in 0..4u64 {
        let d = 3 + (k as usize % 4);
        let s = instance_seed(seed, 1200 + k);
        let oracle = drawn_game(d, s);
        let budget = Budget { max_evaluations: (1u64 << d) + 2, seed: s, pairing: false };
        let estimate = shapley_regression(&oracle, &budget)?;
        let phi = shapley_value_exact(&oracle)?;
        exhaustive.record(max_abs_diff(&estimate.values, &phi.values), format!("d={d} seed={s}"));
    }
    checks.push(exhaustive.report());

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(SuiteReport { checks, all_pass })
}

fn pair_index_diff(a: &PairIndex, b: &PairIndex) -> f64 {
    let d = a.player_count();
    let mut worst = max_abs_diff(a.singles(), b.singles());
    for i in 0..d {
        for j in i + 1..d {
            worst = worst.max((a.pair(i, j) - b.pair(i, j)).abs());
        }
    }
    worst
}
