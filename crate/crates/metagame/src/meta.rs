//! Directional meta-attributions: for a target player `i`, the remaining
//! players form a metagame `ν(S) = φ_i(S∪{i})` whose Shapley values say how
//! much each source `j` moves the attribution of `i`. Works over any
//! [`RestrictedAttributor`] — exact Shapley, gradient methods, or an external
//! attribution table — and every row telescopes back to the first-order
//! attribution it decomposes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::first_order::{shapley_all_from_dense, BaseMethodTag, RestrictedAttributor};
use crate::game::{check_capacity, EvalCounter, ValueOracle, DEFAULT_EXACT_LIMIT};
use crate::interaction::{stii_pair_value, PairIndex, PairMethodTag};

const ORIENTATION: &str = "source_to_target_by_row";

/// Matrix of directional attributions `entry(i, j) = φ_{j→i}`: row `i` is the
/// target whose attribution is decomposed, column `j` the source influencing
/// it. Rows exist only for the computed targets (all of them in the exact
/// engine, a chosen subset under approximation).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DirectionalMatrixWire", into = "DirectionalMatrixWire")]
pub struct DirectionalMatrix {
    d: usize,
    base: BaseMethodTag,
    /// Strictly ascending target indices, one per stored row.
    targets: Vec<usize>,
    /// Row-major, `targets.len() × d`.
    entries: Vec<f64>,
    /// The attribution each row decomposes, aligned with `targets`.
    first_order: Vec<f64>,
    /// Standard errors per entry (same shape as `entries`) when rows were
    /// estimated rather than enumerated.
    stderr: Option<Vec<f64>>,
}

impl DirectionalMatrix {
    pub(crate) fn from_parts(
        d: usize,
        base: BaseMethodTag,
        targets: Vec<usize>,
        entries: Vec<f64>,
        first_order: Vec<f64>,
        stderr: Option<Vec<f64>>,
    ) -> Result<Self> {
        if targets.is_empty() || targets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("targets must be strictly ascending and non-empty"));
        }
        if *targets.last().unwrap() >= d {
            return Err(Error::invalid("target index out of range"));
        }
        if entries.len() != targets.len() * d || first_order.len() != targets.len() {
            return Err(Error::invalid("directional matrix shape mismatch"));
        }
        if let Some(s) = &stderr {
            if s.len() != entries.len() || s.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::invalid("stderr must be non-negative and entry-shaped"));
            }
        }
        Ok(DirectionalMatrix { d, base, targets, entries, first_order, stderr })
    }

    pub fn player_count(&self) -> usize {
        self.d
    }

    pub fn base_method(&self) -> BaseMethodTag {
        self.base
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    /// True when every player has a row.
    pub fn is_complete(&self) -> bool {
        self.targets.len() == self.d
    }

    fn row_position(&self, target: usize) -> Option<usize> {
        self.targets.binary_search(&target).ok()
    }

    pub fn row(&self, target: usize) -> Option<&[f64]> {
        self.row_position(target).map(|p| &self.entries[p * self.d..(p + 1) * self.d])
    }

    /// `φ_{source→target}`. Panics if the target row was not computed.
    pub fn entry(&self, target: usize, source: usize) -> f64 {
        assert!(source < self.d, "source index out of range");
        self.row(target).expect("row not computed for this target")[source]
    }

    pub fn stderr_row(&self, target: usize) -> Option<&[f64]> {
        let p = self.row_position(target)?;
        self.stderr.as_ref().map(|s| &s[p * self.d..(p + 1) * self.d])
    }

    /// The decomposed attribution `φ_target`.
    pub fn first_order(&self, target: usize) -> Option<f64> {
        self.row_position(target).map(|p| self.first_order[p])
    }

    pub fn first_order_values(&self) -> &[f64] {
        &self.first_order
    }

    pub fn row_sum(&self, target: usize) -> Option<f64> {
        self.row(target).map(|r| r.iter().sum())
    }
}

#[derive(Serialize, Deserialize)]
struct DirectionalMatrixWire {
    d: usize,
    base: BaseMethodTag,
    orientation: String,
    targets: Vec<usize>,
    entries: Vec<Vec<f64>>,
    first_order: Vec<f64>,
    row_residuals: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stderr: Option<Vec<Vec<f64>>>,
}

impl From<DirectionalMatrix> for DirectionalMatrixWire {
    fn from(m: DirectionalMatrix) -> Self {
        let row_residuals = check_hierarchical_efficiency(&m);
        let rows = |flat: &[f64]| -> Vec<Vec<f64>> {
            flat.chunks(m.d).map(|c| c.to_vec()).collect()
        };
        DirectionalMatrixWire {
            d: m.d,
            base: m.base,
            orientation: ORIENTATION.to_string(),
            targets: m.targets.clone(),
            entries: rows(&m.entries),
            first_order: m.first_order.clone(),
            row_residuals,
            stderr: m.stderr.as_deref().map(rows),
        }
    }
}

impl TryFrom<DirectionalMatrixWire> for DirectionalMatrix {
    type Error = Error;

    fn try_from(w: DirectionalMatrixWire) -> Result<Self> {
        if w.orientation != ORIENTATION {
            return Err(Error::invalid(format!(
                "unknown directional-matrix orientation {:?} (expected {ORIENTATION:?})",
                w.orientation
            )));
        }
        let flatten = |rows: Vec<Vec<f64>>, d: usize| -> Result<Vec<f64>> {
            if rows.iter().any(|r| r.len() != d) {
                return Err(Error::invalid("directional matrix rows must have length d"));
            }
            Ok(rows.into_iter().flatten().collect())
        };
        let entries = flatten(w.entries, w.d)?;
        let stderr = w.stderr.map(|s| flatten(s, w.d)).transpose()?;
        DirectionalMatrix::from_parts(w.d, w.base, w.targets, entries, w.first_order, stderr)
    }
}

/// The metagame for one target: a value oracle over the other `d−1` players
/// (squeezed bit patterns) with `ν(S) = φ_target(S ∪ {target})`.
pub struct MetaGameOracle<'a> {
    base: &'a dyn RestrictedAttributor,
    target: usize,
    calls: EvalCounter,
}

impl<'a> MetaGameOracle<'a> {
    pub fn new(base: &'a dyn RestrictedAttributor, target: usize) -> Result<Self> {
        let d = base.player_count();
        if target >= d {
            return Err(Error::invalid(format!(
                "metagame target {target} out of range for {d} players"
            )));
        }
        if d < 2 {
            return Err(Error::invalid("a metagame needs at least two players"));
        }
        Ok(MetaGameOracle { base, target, calls: EvalCounter::default() })
    }

    pub fn target(&self) -> usize {
        self.target
    }
}

impl ValueOracle for MetaGameOracle<'_> {
    fn player_count(&self) -> usize {
        self.base.player_count() - 1
    }

    fn evaluate(&self, coalition: Coalition) -> f64 {
        self.calls.bump();
        let d = self.base.player_count();
        let active = Coalition::unsqueeze(coalition.bits(), self.target, d).with(self.target);
        self.base
            .restricted(active, self.target)
            .expect("metagame coalitions are valid by construction")
    }

    fn evaluation_count(&self) -> u64 {
        self.calls.get()
    }
}

/// Directional meta-attributions for every target, exact: per target the full
/// metagame table is enumerated once (2^{d−1} restricted attributions, shared
/// across all sources) and solved by the grouped Shapley reduction. Diagonal
/// entries are the boundary values `φ_i({i}) = ν(∅)`; the decomposed
/// first-order attribution is `ν(full)` from the same sweep.
pub fn meta_attribution_exact(base: &dyn RestrictedAttributor) -> Result<DirectionalMatrix> {
    let d = base.player_count();
    let all: Vec<usize> = (0..d).collect();
    meta_attribution_for_targets(base, &all)
}

/// Same as [`meta_attribution_exact`] but computing only the chosen target
/// rows (duplicates ignored; order normalized ascending).
pub fn meta_attribution_for_targets(
    base: &dyn RestrictedAttributor,
    targets: &[usize],
) -> Result<DirectionalMatrix> {
    let d = base.player_count();
    check_capacity(d, DEFAULT_EXACT_LIMIT)?;
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
            None,
        );
    }

    let rows: Vec<(Vec<f64>, f64)> = wanted
        .par_iter()
        .map(|&i| -> Result<(Vec<f64>, f64)> {
            let size = 1usize << (d - 1);
            let mut table = vec![0.0; size];
            for (k, slot) in table.iter_mut().enumerate() {
                let active = Coalition::unsqueeze(k as u64, i, d).with(i);
                *slot = base.restricted(active, i)?;
            }
            let sources = shapley_all_from_dense(&table, d - 1);
            let mut row = vec![0.0; d];
            for (j, slot) in row.iter_mut().enumerate() {
                if j != i {
                    *slot = sources[if j < i { j } else { j - 1 }];
                }
            }
            row[i] = table[0];
            Ok((row, table[size - 1]))
        })
        .collect::<Result<_>>()?;

    let mut entries = Vec::with_capacity(wanted.len() * d);
    let mut first_order = Vec::with_capacity(wanted.len());
    for (row, phi) in rows {
        entries.extend_from_slice(&row);
        first_order.push(phi);
    }
    DirectionalMatrix::from_parts(d, base.method_tag(), wanted, entries, first_order, None)
}

/// Meta-attribution with the exact Shapley value as base method.
pub fn meta_shapley_exact(oracle: &dyn ValueOracle) -> Result<DirectionalMatrix> {
    let sv = crate::first_order::SvAttributor::new(oracle)?;
    meta_attribution_exact(&sv)
}

/// Meta-attribution with integrated gradients as base method.
pub fn meta_integrated_gradients(
    masked: &crate::game::MaskedModel,
    steps: usize,
) -> Result<DirectionalMatrix> {
    let ig = crate::first_order::IgAttributor::new(masked, steps)?;
    meta_attribution_exact(&ig)
}

/// Meta-attribution with gradient×input as base method.
pub fn meta_grad_times_input(masked: &crate::game::MaskedModel) -> Result<DirectionalMatrix> {
    let gxi = crate::first_order::GxIAttributor::new(masked);
    meta_attribution_exact(&gxi)
}

/// Meta-attribution over an externally supplied attribution table, for the
/// targets the table declares.
pub fn meta_external(table: &ExternalAttributionTable) -> Result<DirectionalMatrix> {
    let attributor = ExternalAttributor::new(table);
    meta_attribution_for_targets(&attributor, table.targets())
}

/// `residual[row] = |Σ_j entry(i, j) − φ_i|` per computed target row; zero up
/// to reduction error for exact bases and quadrature error otherwise.
pub fn check_hierarchical_efficiency(dm: &DirectionalMatrix) -> Vec<f64> {
    dm.targets()
        .iter()
        .map(|&i| (dm.row_sum(i).unwrap() - dm.first_order(i).unwrap()).abs())
        .collect()
}

/// Folds a complete directional matrix into a symmetric pair index:
/// `pairs[i][j] = φ_{j→i} + φ_{i→j}`, singles from the diagonal. With an
/// exact-Shapley base this reproduces the Shapley-Taylor index; gradient and
/// external bases fold into their SOP-style counterpart, and the result is
/// tagged accordingly.
pub fn symmetrize(dm: &DirectionalMatrix) -> Result<PairIndex> {
    if !dm.is_complete() {
        return Err(Error::invalid(
            "symmetrization needs every target row; recompute with all targets",
        ));
    }
    let d = dm.player_count();
    let method = match dm.base_method() {
        BaseMethodTag::ShapleyValue => PairMethodTag::Stii,
        _ => PairMethodTag::Sop,
    };
    let mut out = PairIndex::zeros(d, method);
    for i in 0..d {
        *out.single_mut(i) = dm.entry(i, i);
        for j in i + 1..d {
            out.set_pair(i, j, dm.entry(i, j) + dm.entry(j, i));
        }
    }
    Ok(out)
}

/// Pairwise interaction of two sources inside one target's metagame: the
/// Shapley-Taylor pair value of `{j, k}` in the (d−1)-player game
/// `ν(S) = φ_target(S∪{target})`, quantifying the joint influence of the
/// source pair on that single attribution.
pub fn meta_pair_interaction(
    base: &dyn RestrictedAttributor,
    target: usize,
    j: usize,
    k: usize,
) -> Result<f64> {
    let d = base.player_count();
    check_capacity(d, DEFAULT_EXACT_LIMIT)?;
    if d < 3 {
        return Err(Error::invalid("a source pair needs at least three players"));
    }
    if target >= d || j >= d || k >= d {
        return Err(Error::invalid("player index out of range"));
    }
    if j == k || j == target || k == target {
        return Err(Error::invalid("sources must be distinct from each other and the target"));
    }

    let size = 1usize << (d - 1);
    let mut table = vec![0.0; size];
    for (s, slot) in table.iter_mut().enumerate() {
        let active = Coalition::unsqueeze(s as u64, target, d).with(target);
        *slot = base.restricted(active, target)?;
    }
    let squeeze = |p: usize| if p < target { p } else { p - 1 };
    Ok(stii_pair_value(
        &mut |c| table[c.bits() as usize],
        d - 1,
        squeeze(j),
        squeeze(k),
    ))
}

/// Externally computed restricted attributions: for each declared target `i`,
/// a dense table of `φ_i(S∪{i})` indexed by the squeezed bit pattern of
/// `S\{i}` (length 2^{d−1}). Tables must be complete per target — absent
/// coalitions are an error, never imputed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExternalAttributionTable {
    d: usize,
    targets: Vec<usize>,
    tables: Vec<Vec<f64>>,
}

impl ExternalAttributionTable {
    pub fn new(d: usize, targets: Vec<usize>, tables: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 || d > crate::coalition::MAX_PLAYERS {
            return Err(Error::invalid(format!("player count {d} out of range")));
        }
        if targets.is_empty() {
            return Err(Error::invalid("attribution table declares no targets"));
        }
        if targets.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("targets must be strictly ascending"));
        }
        if *targets.last().unwrap() >= d {
            return Err(Error::invalid("target index out of range"));
        }
        if tables.len() != targets.len() {
            return Err(Error::invalid("one table per declared target is required"));
        }
        let expected = 1usize << (d - 1);
        for (&target, table) in targets.iter().zip(&tables) {
            if table.len() < expected {
                let missing =
                    Coalition::unsqueeze(table.len() as u64, target, d).with(target);
                return Err(Error::MissingCoalition { coalition: missing.bits(), target });
            }
            if table.len() > expected {
                return Err(Error::invalid(format!(
                    "table for target {target} has {} entries, expected {expected}",
                    table.len()
                )));
            }
            if let Some(pos) = table.iter().position(|v| !v.is_finite()) {
                return Err(Error::invalid(format!(
                    "table for target {target} holds a non-finite value at index {pos}"
                )));
            }
        }
        Ok(ExternalAttributionTable { d, targets, tables })
    }

    /// Enumerates a restricted attributor into table form (all coalitions
    /// containing each requested target, canonical ascending order).
    pub fn from_attributor(
        base: &dyn RestrictedAttributor,
        targets: &[usize],
    ) -> Result<Self> {
        let d = base.player_count();
        check_capacity(d, DEFAULT_EXACT_LIMIT)?;
        let mut wanted: Vec<usize> = targets.to_vec();
        wanted.sort_unstable();
        wanted.dedup();
        let mut tables = Vec::with_capacity(wanted.len());
        for &i in &wanted {
            if i >= d {
                return Err(Error::invalid(format!("target {i} out of range for {d} players")));
            }
            let size = 1usize.checked_shl((d - 1) as u32).unwrap();
            let mut table = vec![0.0; size];
            for (k, slot) in table.iter_mut().enumerate() {
                let active = Coalition::unsqueeze(k as u64, i, d).with(i);
                *slot = base.restricted(active, i)?;
            }
            tables.push(table);
        }
        ExternalAttributionTable::new(d, wanted, tables)
    }

    pub fn player_count(&self) -> usize {
        self.d
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn has_target(&self, target: usize) -> bool {
        self.targets.binary_search(&target).is_ok()
    }

    /// The dense per-target row, indexed by the squeezed bits of S\{target}.
    pub fn table(&self, target: usize) -> Option<&[f64]> {
        let pos = self.targets.binary_search(&target).ok()?;
        Some(&self.tables[pos])
    }

    /// `φ_target(active)` for an active coalition containing the target.
    pub fn value(&self, active: Coalition, target: usize) -> Result<f64> {
        let pos = self
            .targets
            .binary_search(&target)
            .map_err(|_| Error::MissingCoalition { coalition: active.bits(), target })?;
        if !active.contains(target) {
            return Err(Error::invalid(format!(
                "target player {target} is not a member of the active coalition {active:?}"
            )));
        }
        let squeezed = active.without(target).squeezed_index(target);
        Ok(self.tables[pos][squeezed])
    }
}

/// Adapter exposing an [`ExternalAttributionTable`] as a restricted
/// attributor, so the meta engine can run over externally computed values.
pub struct ExternalAttributor<'a> {
    table: &'a ExternalAttributionTable,
}

impl<'a> ExternalAttributor<'a> {
    pub fn new(table: &'a ExternalAttributionTable) -> Self {
        ExternalAttributor { table }
    }
}

impl RestrictedAttributor for ExternalAttributor<'_> {
    fn player_count(&self) -> usize {
        self.table.player_count()
    }

    fn method_tag(&self) -> BaseMethodTag {
        BaseMethodTag::External
    }

    fn restricted(&self, active: Coalition, target: usize) -> Result<f64> {
        self.table.value(active, target)
    }
}
