//! Acceptance gate: one test per criterion, each printing a single
//! `acceptance N (<name>): PASS` line (visible under `--nocapture`) and
//! panicking with a FAIL line otherwise. Tolerances are pinned per
//! criterion: 1e-9 for exact/discrete routes, 1e-3 for quadrature routes.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use metagame::approx::{shapley_mc_permutation, shapley_regression, Budget};
use metagame::coalition::{all_coalitions, Coalition};
use metagame::first_order::{
    integrated_gradients, shapley_value_exact, GxIAttributor, IgAttributor,
    RestrictedAttributor, SvAttributor,
};
use metagame::game::{enumerate_game, MaskedModel, ValueOracle};
use metagame::interaction::{
    fsii_from_mobius, integrated_hessians, serial_shapley, sop_pairwise, stii_pairwise,
    two_shapley_from_mobius,
};
use metagame::meta::{
    meta_attribution_exact, meta_external, symmetrize, ExternalAttributionTable,
    ExternalAttributor,
};
use metagame::mobius::{mobius_transform, MobiusOracle};
use metagame::reference::reference_table;
use metagame::zoo::{
    random_mobius_oracle, random_sparse_polynomial, table1_masked, SymmetricGame,
};

const EXACT_TOL: f64 = 1e-9;
const QUAD_TOL: f64 = 1e-3;

fn report(criterion: u32, name: &str, detail: String) {
    println!("acceptance {criterion} ({name}): PASS — {detail}");
}

fn fail(criterion: u32, name: &str, detail: String) -> ! {
    panic!("acceptance {criterion} ({name}): FAIL — {detail}");
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Seeded masked sparse polynomial: the model family every quadrature and
/// discrete method can share.
fn drawn_model(d: usize, seed: u64) -> MaskedModel {
    let model = random_sparse_polynomial(d, 2.min(d), (2 * d).min(10), seed).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(seed ^ 0xacce);
    let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0.5..1.5)).collect();
    let baseline: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.25..0.25)).collect();
    MaskedModel::from_symbolic(model, x, baseline).unwrap()
}

fn drawn_game(d: usize, seed: u64) -> MobiusOracle {
    random_mobius_oracle(d, 0.4, seed)
}

fn sweep_steps(d: usize) -> usize {
    if d <= 6 { 128 } else { 96 }
}

#[test]
fn acceptance_1_reference_closed_forms() {
    let start = Instant::now();
    let rows = reference_table([2.0, 3.0], 1024).unwrap();
    let elapsed = start.elapsed();

    // Pin the analytic targets the criterion enumerates.
    let expected: &[(&str, &[f64])] = &[
        ("serial-sv", &[6.5, 4.5, 4.5, 4.5]),
        ("ih", &[4.0, 4.0, 4.0, 8.0]),
        ("mobius", &[2.0, 0.0, 18.0]),
        ("stii", &[2.0, 0.0, 18.0]),
        ("sop", &[2.0, 0.0, 6.0, 12.0, 18.0]),
        ("meta-gxi", &[2.0, 18.0, 36.0, 0.0]),
        ("meta-ig", &[2.0, 6.0, 12.0, 0.0]),
        ("meta-sv", &[2.0, 9.0, 9.0, 0.0]),
    ];
    let mut worst = 0.0f64;
    for (label, analytic) in expected {
        let row = rows
            .iter()
            .find(|r| r.label == *label)
            .unwrap_or_else(|| fail(1, "reference closed forms", format!("missing row {label}")));
        if row.analytic != *analytic {
            fail(1, "reference closed forms", format!("{label} analytic {:?}", row.analytic));
        }
        if !row.passes() {
            fail(
                1,
                "reference closed forms",
                format!("{label} deviates by {:.3e} > {:.0e}", row.max_deviation(), row.tolerance),
            );
        }
        worst = worst.max(row.max_deviation() / row.tolerance);
    }
    if elapsed.as_secs_f64() >= 1.0 {
        fail(1, "reference closed forms", format!("took {elapsed:?} (budget 1 s)"));
    }
    report(
        1,
        "reference closed forms",
        format!("8 rows, worst deviation {:.1}% of tolerance, {elapsed:?}", 100.0 * worst),
    );
}

#[test]
fn acceptance_2_hierarchical_efficiency_of_interaction_indices() {
    let start = Instant::now();
    let mut worst_exact = 0.0f64;
    let mut worst_quad = 0.0f64;
    for k in 0..50u64 {
        let d = 3 + (k as usize % 8);
        let masked = drawn_model(d, 2000 + k);
        let steps = sweep_steps(d);

        let phi = shapley_value_exact(&masked).unwrap();
        let expansion = mobius_transform(&masked).unwrap();
        for index in [
            stii_pairwise(&masked).unwrap(),
            fsii_from_mobius(&expansion),
            two_shapley_from_mobius(&expansion),
        ] {
            for i in 0..d {
                let residual = (index.lump_sum(i) - phi.values[i]).abs();
                worst_exact = worst_exact.max(residual);
                if residual > EXACT_TOL {
                    fail(
                        2,
                        "interaction hierarchical efficiency",
                        format!("{} lump sum off by {residual:.3e} (d={d} k={k})", index.method()),
                    );
                }
            }
        }

        let serial = serial_shapley(&masked).unwrap();
        let serial_residual = max_abs_diff(&serial.row_sums(), &phi.values);
        worst_exact = worst_exact.max(serial_residual);
        if serial_residual > EXACT_TOL {
            fail(
                2,
                "interaction hierarchical efficiency",
                format!("serial rows off by {serial_residual:.3e} (d={d} k={k})"),
            );
        }

        let ig = integrated_gradients(&masked, steps).unwrap();
        let ih = integrated_hessians(&masked, steps).unwrap();
        let ih_residual = max_abs_diff(&ih.row_sums(), &ig.values);
        worst_quad = worst_quad.max(ih_residual);
        if ih_residual > QUAD_TOL {
            fail(
                2,
                "interaction hierarchical efficiency",
                format!("IH rows off by {ih_residual:.3e} (d={d} k={k})"),
            );
        }

        let sop = sop_pairwise(&masked, steps).unwrap();
        for i in 0..d {
            let rebuilt: f64 = sop.index.singles()[i]
                + (0..d).map(|j| sop.directional_entry(i, j)).sum::<f64>();
            let residual = (rebuilt - ig.values[i]).abs();
            worst_quad = worst_quad.max(residual);
            if residual > QUAD_TOL {
                fail(
                    2,
                    "interaction hierarchical efficiency",
                    format!("SOP row {i} off by {residual:.3e} (d={d} k={k})"),
                );
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 30.0 {
        fail(2, "interaction hierarchical efficiency", format!("took {elapsed:?} (budget 30 s)"));
    }
    report(
        2,
        "interaction hierarchical efficiency",
        format!(
            "50 instances d∈3..=10, worst exact {worst_exact:.3e} (tol 1e-9), worst quadrature {worst_quad:.3e} (tol 1e-3), {elapsed:?}"
        ),
    );
}

#[test]
fn acceptance_3_directional_matrices_fold_to_set_indices() {
    let start = Instant::now();
    let mut worst_exact = 0.0f64;
    let mut worst_quad = 0.0f64;
    let mut ig_instances = 0usize;
    for k in 0..50u64 {
        let d = 3 + (k as usize % 8);
        let masked = drawn_model(d, 2000 + k);

        let sv_base = SvAttributor::new(&masked).unwrap();
        let dm = meta_attribution_exact(&sv_base).unwrap();
        let folded = symmetrize(&dm).unwrap();
        let stii = stii_pairwise(&masked).unwrap();
        let mut residual = max_abs_diff(folded.singles(), stii.singles());
        for i in 0..d {
            residual = residual.max((dm.entry(i, i) - stii.singles()[i]).abs());
            for j in i + 1..d {
                residual = residual.max((folded.pair(i, j) - stii.pair(i, j)).abs());
            }
        }
        worst_exact = worst_exact.max(residual);
        if residual > EXACT_TOL {
            fail(
                3,
                "directional folding",
                format!("meta-SV vs STII off by {residual:.3e} (d={d} k={k})"),
            );
        }

        // Quadrature half of the sweep: the gradient base on the small-d
        // instances of the same seed sequence.
        if d <= 5 {
            ig_instances += 1;
            let steps = 128;
            let ig_base = IgAttributor::new(&masked, steps).unwrap();
            let dm = meta_attribution_exact(&ig_base).unwrap();
            let folded = symmetrize(&dm).unwrap();
            let sop = sop_pairwise(&masked, steps).unwrap();
            let mut residual = max_abs_diff(folded.singles(), sop.index.singles());
            for i in 0..d {
                residual = residual.max((dm.entry(i, i) - sop.index.singles()[i]).abs());
                for j in i + 1..d {
                    residual = residual.max((folded.pair(i, j) - sop.index.pair(i, j)).abs());
                }
            }
            worst_quad = worst_quad.max(residual);
            if residual > QUAD_TOL {
                fail(
                    3,
                    "directional folding",
                    format!("meta-IG vs SOP off by {residual:.3e} (d={d} k={k})"),
                );
            }
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 30.0 {
        fail(3, "directional folding", format!("took {elapsed:?} (budget 30 s)"));
    }
    report(
        3,
        "directional folding",
        format!(
            "50 meta-SV + {ig_instances} meta-IG instances, worst exact {worst_exact:.3e}, worst quadrature {worst_quad:.3e}, {elapsed:?}"
        ),
    );
}

#[test]
fn acceptance_4_meta_rows_sum_to_the_base_attribution() {
    let start = Instant::now();
    let mut worst_exact = 0.0f64;
    let mut worst_quad = 0.0f64;
    let mut counts = [0usize; 4];
    for k in 0..50u64 {
        let seed = 4000 + k;
        match k % 4 {
            0 => {
                let d = 3 + (k as usize / 4 % 8);
                let oracle = drawn_game(d, seed);
                let base = SvAttributor::new(&oracle).unwrap();
                let dm = meta_attribution_exact(&base).unwrap();
                let phi = shapley_value_exact(&oracle).unwrap();
                let mut residual = max_abs_diff(dm.first_order_values(), &phi.values);
                for i in 0..d {
                    residual = residual.max((dm.row_sum(i).unwrap() - phi.values[i]).abs());
                }
                worst_exact = worst_exact.max(residual);
                if residual > EXACT_TOL {
                    fail(4, "meta row sums", format!("SV base off by {residual:.3e} (d={d} k={k})"));
                }
                counts[0] += 1;
            }
            1 => {
                let d = 3 + (k as usize / 4 % 8);
                let masked = drawn_model(d, seed);
                let base = GxIAttributor::new(&masked);
                let dm = meta_attribution_exact(&base).unwrap();
                let gxi = metagame::first_order::grad_times_input(&masked).unwrap();
                let mut residual = max_abs_diff(dm.first_order_values(), &gxi.values);
                for i in 0..d {
                    residual = residual.max((dm.row_sum(i).unwrap() - gxi.values[i]).abs());
                }
                worst_exact = worst_exact.max(residual);
                if residual > EXACT_TOL {
                    fail(4, "meta row sums", format!("GxI base off by {residual:.3e} (d={d} k={k})"));
                }
                counts[1] += 1;
            }
            2 => {
                let d = 3 + (k as usize / 4 % 3);
                let masked = drawn_model(d, seed);
                let steps = 128;
                let base = IgAttributor::new(&masked, steps).unwrap();
                let dm = meta_attribution_exact(&base).unwrap();
                let ig = integrated_gradients(&masked, steps).unwrap();
                let mut residual = max_abs_diff(dm.first_order_values(), &ig.values);
                for i in 0..d {
                    residual = residual.max((dm.row_sum(i).unwrap() - ig.values[i]).abs());
                }
                worst_quad = worst_quad.max(residual);
                if residual > QUAD_TOL {
                    fail(4, "meta row sums", format!("IG base off by {residual:.3e} (d={d} k={k})"));
                }
                counts[2] += 1;
            }
            _ => {
                let d = 3 + (k as usize / 4 % 6);
                let oracle = drawn_game(d, seed);
                let inner = SvAttributor::new(&oracle).unwrap();
                let targets: Vec<usize> = (0..d).collect();
                let table = ExternalAttributionTable::from_attributor(&inner, &targets).unwrap();
                let dm = meta_external(&table).unwrap();
                let base = ExternalAttributor::new(&table);
                let mut residual = 0.0f64;
                for i in 0..d {
                    let full = base.restricted(Coalition::full(d), i).unwrap();
                    residual = residual.max((dm.row_sum(i).unwrap() - full).abs());
                }
                worst_exact = worst_exact.max(residual);
                if residual > EXACT_TOL {
                    fail(
                        4,
                        "meta row sums",
                        format!("external base off by {residual:.3e} (d={d} k={k})"),
                    );
                }
                counts[3] += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    report(
        4,
        "meta row sums",
        format!(
            "{} SV + {} GxI + {} IG + {} external instances, worst exact {worst_exact:.3e}, worst quadrature {worst_quad:.3e}, {elapsed:?}",
            counts[0], counts[1], counts[2], counts[3]
        ),
    );
}

#[test]
fn acceptance_5_serial_leakage_separation_witness() {
    let masked = table1_masked([2.0, 3.0]);
    let interaction = 2.0 * 9.0; // I = x0·x1² at the reference input

    let serial = serial_shapley(&masked).unwrap();
    let leaked = serial.entry(1, 1);
    if (leaked - interaction / 4.0).abs() > EXACT_TOL {
        fail(5, "separation witness", format!("serial diagonal {leaked} ≠ ¼I = 4.5"));
    }

    let expansion = mobius_transform(&masked).unwrap();
    let sv_base = SvAttributor::new(&masked).unwrap();
    let meta_sv = meta_attribution_exact(&sv_base).unwrap();
    let pure_effects = [
        ("meta-sv diagonal", meta_sv.entry(1, 1)),
        ("stii single", stii_pairwise(&masked).unwrap().singles()[1]),
        ("fsii single", fsii_from_mobius(&expansion).singles()[1]),
        ("2sv single", two_shapley_from_mobius(&expansion).singles()[1]),
        ("sop single", sop_pairwise(&masked, 1024).unwrap().index.singles()[1]),
    ];
    for (name, value) in pure_effects {
        if value.abs() >= EXACT_TOL {
            fail(5, "separation witness", format!("{name} = {value:.3e}, expected 0"));
        }
    }
    report(
        5,
        "separation witness",
        format!(
            "serial diagonal leaks ¼I = {leaked} while all set/meta pure effects are 0 within 1e-9"
        ),
    );
}

/// Walks every permutation of `0..d` (Heap's algorithm), handing each to the
/// visitor.
fn for_each_permutation(d: usize, visit: &mut impl FnMut(&[usize])) {
    fn heap(arr: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
        if k <= 1 {
            visit(arr);
            return;
        }
        for i in 0..k {
            heap(arr, k - 1, visit);
            if k % 2 == 0 {
                arr.swap(i, k - 1);
            } else {
                arr.swap(0, k - 1);
            }
        }
    }
    let mut arr: Vec<usize> = (0..d).collect();
    heap(&mut arr, d, visit);
}

#[test]
fn acceptance_6_brute_force_permutation_oracle() {
    let mut worst = 0.0f64;
    for k in 0..20u64 {
        let d = 3 + (k as usize % 6);
        let oracle = drawn_game(d, 6000 + k);
        let dense = enumerate_game(&oracle).unwrap();
        let values = dense.values();

        let mut sums = vec![0.0; d];
        let mut permutations = 0u64;
        for_each_permutation(d, &mut |order| {
            let mut bits = 0usize;
            for &player in order {
                let next = bits | (1 << player);
                sums[player] += values[next] - values[bits];
                bits = next;
            }
            permutations += 1;
        });
        let brute: Vec<f64> = sums.iter().map(|s| s / permutations as f64).collect();

        let engine = shapley_value_exact(&oracle).unwrap();
        let residual = max_abs_diff(&brute, &engine.values);
        worst = worst.max(residual);
        if residual > EXACT_TOL {
            fail(
                6,
                "permutation brute force",
                format!("engine off by {residual:.3e} (d={d} k={k})"),
            );
        }
    }
    report(6, "permutation brute force", format!("20 games d∈3..=8, worst {worst:.3e}"));
}

#[test]
fn acceptance_7_mobius_roundtrip_and_shapley_form() {
    let mut worst = 0.0f64;
    for k in 0..50u64 {
        let d = 3 + (k as usize % 8);
        let oracle = drawn_game(d, 7000 + k);
        let expansion = mobius_transform(&oracle).unwrap();

        let mut residual = 0.0f64;
        for c in all_coalitions(d) {
            residual = residual.max((expansion.evaluate(c) - oracle.evaluate(c)).abs());
        }

        // φ_i = Σ_{S∋i} m_S / |S|, written out from the expansion itself.
        let mut shares = vec![0.0; d];
        for (s, m) in expansion.iter() {
            let size = s.size() as f64;
            for player in s.players() {
                shares[player] += m / size;
            }
        }
        let phi = shapley_value_exact(&oracle).unwrap();
        residual = residual.max(max_abs_diff(&shares, &phi.values));

        worst = worst.max(residual);
        if residual > EXACT_TOL {
            fail(7, "mobius roundtrip", format!("off by {residual:.3e} (d={d} k={k})"));
        }
    }
    report(7, "mobius roundtrip", format!("50 instances d∈3..=10, worst {worst:.3e}"));
}

#[test]
fn acceptance_8_estimator_convergence_and_pairing() {
    let start = Instant::now();
    let d = 12;
    let oracle = random_mobius_oracle(d, 0.25, 42);
    let exact = shapley_value_exact(&oracle).unwrap();

    let mse_of = |values: &[f64]| -> f64 {
        values.iter().zip(&exact.values).map(|(a, e)| (a - e) * (a - e)).sum::<f64>() / d as f64
    };

    // Mean MSE over a bank of seeds per budget, per estimator.
    let budgets: Vec<u64> = (7..=13).map(|p| 1u64 << p).collect();
    let seeds_per_budget = 20u64;
    let mut curves: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
    for &budget in &budgets {
        let mut mc_total = 0.0;
        let mut reg_total = 0.0;
        for seed in 0..seeds_per_budget {
            let spec = Budget { max_evaluations: budget, seed, pairing: false };
            mc_total += mse_of(&shapley_mc_permutation(&oracle, &spec).unwrap().values);
            reg_total += mse_of(&shapley_regression(&oracle, &spec).unwrap().values);
        }
        curves[0].push(mc_total / seeds_per_budget as f64);
        curves[1].push(reg_total / seeds_per_budget as f64);
    }
    for (name, curve) in ["mc", "regression"].iter().zip(&curves) {
        let inversions = curve.windows(2).filter(|w| w[1] > w[0]).count();
        if inversions > 1 {
            fail(
                8,
                "estimator convergence",
                format!("{name} MSE curve {curve:?} has {inversions} inversions (one allowed)"),
            );
        }
    }

    // Exhaustive budget degenerates the regression to the exact value.
    let spec = Budget { max_evaluations: (1 << d) + 2, seed: 0, pairing: false };
    let exhaustive_mse = mse_of(&shapley_regression(&oracle, &spec).unwrap().values);
    if exhaustive_mse >= 1e-12 {
        fail(8, "estimator convergence", format!("exhaustive MSE {exhaustive_mse:.3e} ≥ 1e-12"));
    }

    // Complement pairing may not hurt: mean stderr over 50 seeds at one
    // budget, on a game where antithetic chains genuinely cancel.
    let symmetric = SymmetricGame::new(d, 2);
    let mut paired_total = 0.0;
    let mut unpaired_total = 0.0;
    for seed in 0..50u64 {
        let budget = 1u64 << 10;
        let paired = shapley_mc_permutation(
            &symmetric,
            &Budget { max_evaluations: budget, seed, pairing: true },
        )
        .unwrap();
        let unpaired = shapley_mc_permutation(
            &symmetric,
            &Budget { max_evaluations: budget, seed, pairing: false },
        )
        .unwrap();
        paired_total += paired.stderr.iter().sum::<f64>() / d as f64;
        unpaired_total += unpaired.stderr.iter().sum::<f64>() / d as f64;
    }
    if paired_total > unpaired_total {
        fail(
            8,
            "estimator convergence",
            format!("paired stderr {paired_total:.3e} > unpaired {unpaired_total:.3e}"),
        );
    }

    let elapsed = start.elapsed();
    if elapsed.as_secs_f64() >= 300.0 {
        fail(8, "estimator convergence", format!("took {elapsed:?} (budget 5 min)"));
    }
    report(
        8,
        "estimator convergence",
        format!(
            "final MSE mc {:.3e} / regression {:.3e}; exhaustive MSE {exhaustive_mse:.1e}; mean stderr paired {:.2e} ≤ unpaired {:.2e}; {elapsed:?}",
            curves[0].last().unwrap(),
            curves[1].last().unwrap(),
            paired_total / 50.0,
            unpaired_total / 50.0
        ),
    );
}

#[test]
fn acceptance_9_scope_note_and_external_table_substitute() {
    // The large-scale experiments behind this method family (token-level
    // language-model studies, image-model pointing games, diffusion
    // segmentation) need pretrained networks and GPU batches; they are out
    // of scope for a desk-scale build. Criteria 1–8 cover the claims with
    // analytic oracles and property sweeps instead, and this criterion
    // exercises the remaining claim — any first-order attribution method
    // can be decomposed — through the external attribution-table path,
    // where the "method" is only a table of numbers.
    let d = 5;
    let oracle = drawn_game(d, 9000);
    let inner = SvAttributor::new(&oracle).unwrap();
    let targets: Vec<usize> = (0..d).collect();
    let table = ExternalAttributionTable::from_attributor(&inner, &targets).unwrap();

    // Serialize to the document format and back: the consumer only ever
    // sees the file.
    let doc = metagame::fileio::table_document(&table);
    let text = metagame::fileio::document_to_string(&doc, false).unwrap();
    let reloaded = metagame::fileio::parse_document(&text).unwrap().realize().unwrap();
    let reloaded_table = match &reloaded {
        metagame::fileio::LoadedGame::Table(t) => t,
        _ => fail(9, "scope note", "table document did not reload as a table".to_string()),
    };

    let direct = meta_attribution_exact(&inner).unwrap();
    let external = meta_external(reloaded_table).unwrap();
    let mut residual = 0.0f64;
    for i in 0..d {
        residual = residual.max(max_abs_diff(direct.row(i).unwrap(), external.row(i).unwrap()));
    }
    if residual > EXACT_TOL {
        fail(9, "scope note", format!("external route off by {residual:.3e}"));
    }
    report(
        9,
        "scope note",
        format!(
            "model-scale experiments substituted by criteria 1–8; external-table route matches the in-process engine within {residual:.1e}"
        ),
    );
}
