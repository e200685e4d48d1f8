//! Closed-form ground truth for the two-feature reference model
//! f(x) = x₀ + x₀·x₁² at baseline 0, evaluated at an arbitrary input.
//! With I := x₀·x₁² every implemented method has an analytic answer, which
//! makes this table both a demonstration and a regression gate.

use serde::Serialize;

use crate::error::Result;
use crate::interaction::{integrated_hessians, serial_shapley, sop_pairwise, stii_pairwise};
use crate::meta::{meta_grad_times_input, meta_integrated_gradients, meta_shapley_exact};
use crate::mobius::mobius_transform;
use crate::zoo::table1_masked;

/// Quadrature tolerance used by the reference gate (midpoint rules at the
/// default step count land far inside this).
pub const QUADRATURE_TOLERANCE: f64 = 1e-3;
/// Tolerance for methods that are exact up to float round-off.
pub const EXACT_TOLERANCE: f64 = 1e-6;

/// One method's computed-versus-analytic comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceRow {
    pub label: String,
    pub entry_labels: Vec<String>,
    pub computed: Vec<f64>,
    pub analytic: Vec<f64>,
    pub tolerance: f64,
}

impl ReferenceRow {
    pub fn max_deviation(&self) -> f64 {
        self.computed
            .iter()
            .zip(&self.analytic)
            .map(|(c, a)| (c - a).abs())
            .fold(0.0, f64::max)
    }

    pub fn passes(&self) -> bool {
        self.max_deviation() <= self.tolerance
    }
}

fn row(
    label: &str,
    entry_labels: &[&str],
    computed: Vec<f64>,
    analytic: Vec<f64>,
    tolerance: f64,
) -> ReferenceRow {
    debug_assert_eq!(entry_labels.len(), computed.len());
    debug_assert_eq!(computed.len(), analytic.len());
    ReferenceRow {
        label: label.to_string(),
        entry_labels: entry_labels.iter().map(|s| s.to_string()).collect(),
        computed,
        analytic,
        tolerance,
    }
}

const MATRIX_LABELS: [&str; 4] = ["[0][0]", "[0][1]", "[1][0]", "[1][1]"];

/// Every method's output on the reference model at input `x`, paired with
/// its closed form. `steps` drives the quadrature methods (IH, IG-based
/// rows); discrete methods ignore it.
pub fn reference_table(x: [f64; 2], steps: usize) -> Result<Vec<ReferenceRow>> {
    let masked = table1_masked(x);
    let x0 = x[0];
    let inter = x[0] * x[1] * x[1];

    let mut rows = Vec::with_capacity(8);

    let serial = serial_shapley(&masked)?;
    rows.push(row(
        "serial-sv",
        &MATRIX_LABELS,
        (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| serial.entry(i, j)).collect(),
        vec![x0 + inter / 4.0, inter / 4.0, inter / 4.0, inter / 4.0],
        EXACT_TOLERANCE,
    ));

    let ih = integrated_hessians(&masked, steps)?;
    rows.push(row(
        "ih",
        &MATRIX_LABELS,
        (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| ih.entry(i, j)).collect(),
        vec![
            x0 + inter / 9.0,
            2.0 * inter / 9.0,
            2.0 * inter / 9.0,
            4.0 * inter / 9.0,
        ],
        QUADRATURE_TOLERANCE,
    ));

    let mobius = mobius_transform(&masked)?;
    let c = |players: &[usize]| {
        crate::coalition::Coalition::from_players(players, 2).expect("two-player coalitions")
    };
    rows.push(row(
        "mobius",
        &["m[0]", "m[1]", "m[01]"],
        vec![
            mobius.coefficient(c(&[0])),
            mobius.coefficient(c(&[1])),
            mobius.coefficient(c(&[0, 1])),
        ],
        vec![x0, 0.0, inter],
        EXACT_TOLERANCE,
    ));

    let stii = stii_pairwise(&masked)?;
    rows.push(row(
        "stii",
        &["single[0]", "single[1]", "pair[01]"],
        vec![stii.singles()[0], stii.singles()[1], stii.pair(0, 1)],
        vec![x0, 0.0, inter],
        EXACT_TOLERANCE,
    ));

    let sop = sop_pairwise(&masked, steps)?;
    rows.push(row(
        "sop",
        &["single[0]", "single[1]", "[0][1]", "[1][0]", "pair[01]"],
        vec![
            sop.index.singles()[0],
            sop.index.singles()[1],
            sop.directional_entry(0, 1),
            sop.directional_entry(1, 0),
            sop.index.pair(0, 1),
        ],
        vec![x0, 0.0, inter / 3.0, 2.0 * inter / 3.0, inter],
        QUADRATURE_TOLERANCE,
    ));

    let meta_gxi = meta_grad_times_input(&masked)?;
    rows.push(row(
        "meta-gxi",
        &MATRIX_LABELS,
        (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| meta_gxi.entry(i, j))
            .collect(),
        vec![x0, inter, 2.0 * inter, 0.0],
        EXACT_TOLERANCE,
    ));

    let meta_ig = meta_integrated_gradients(&masked, steps)?;
    rows.push(row(
        "meta-ig",
        &MATRIX_LABELS,
        (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| meta_ig.entry(i, j))
            .collect(),
        vec![x0, inter / 3.0, 2.0 * inter / 3.0, 0.0],
        QUADRATURE_TOLERANCE,
    ));

    let meta_sv = meta_shapley_exact(&masked)?;
    rows.push(row(
        "meta-sv",
        &MATRIX_LABELS,
        (0..2)
            .flat_map(|i| (0..2).map(move |j| (i, j)))
            .map(|(i, j)| meta_sv.entry(i, j))
            .collect(),
        vec![x0, inter / 2.0, inter / 2.0, 0.0],
        EXACT_TOLERANCE,
    ));

    Ok(rows)
}
