//! Second-order structure: serial decompositions (serial Shapley, integrated
//! Hessians) and set-based pairwise indices (STII, FSII, order-2 n-Shapley,
//! SOP, truncated Möbius). Where two computational routes exist — a discrete
//! sweep over coalitions and a Möbius-representation formula — both are
//! implemented so they can check each other.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coalition::Coalition;
use crate::error::{Error, Result};
use crate::first_order::{
    integrated_gradients, shapley_all_from_dense, shapley_weights, subgame_shapley, IgAttributor,
    RestrictedAttributor, SvAttributor,
};
use crate::game::{check_capacity, EvaluationCache, MaskedModel, ValueOracle, DEFAULT_EXACT_LIMIT};
use crate::mobius::MobiusExpansion;

/// Which pairwise index a [`PairIndex`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PairMethodTag {
    #[serde(rename = "stii")]
    Stii,
    #[serde(rename = "fsii")]
    Fsii,
    #[serde(rename = "2sv")]
    TwoSv,
    #[serde(rename = "sop")]
    Sop,
    #[serde(rename = "mobius2")]
    MobiusOrder2,
}

impl std::fmt::Display for PairMethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PairMethodTag::Stii => "stii",
            PairMethodTag::Fsii => "fsii",
            PairMethodTag::TwoSv => "2sv",
            PairMethodTag::Sop => "sop",
            PairMethodTag::MobiusOrder2 => "mobius2",
        };
        f.write_str(s)
    }
}

/// Per-player scores plus a symmetric pair matrix with zero diagonal.
///
/// The pair value for `{i, j}` is stored once (upper triangle) and mirrored
/// on read, so `pair(i, j) == pair(j, i)` holds exactly by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PairIndexWire", into = "PairIndexWire")]
pub struct PairIndex {
    d: usize,
    method: PairMethodTag,
    singles: Vec<f64>,
    upper: Vec<f64>,
}

impl PairIndex {
    pub fn zeros(d: usize, method: PairMethodTag) -> Self {
        PairIndex { d, method, singles: vec![0.0; d], upper: vec![0.0; d * d.saturating_sub(1) / 2] }
    }

    fn tri(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < j && j < self.d);
        // Rows 0..i contribute d−1−k entries each: i·(2d−i−1)/2 in total.
        i * (2 * self.d - i - 1) / 2 + (j - i - 1)
    }

    pub fn player_count(&self) -> usize {
        self.d
    }

    pub fn method(&self) -> PairMethodTag {
        self.method
    }

    pub fn singles(&self) -> &[f64] {
        &self.singles
    }

    pub fn single_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.singles[i]
    }

    pub fn pair(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.upper[self.tri(a, b)]
    }

    pub fn add_pair(&mut self, i: usize, j: usize, value: f64) {
        assert_ne!(i, j, "pair values live off the diagonal");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let idx = self.tri(a, b);
        self.upper[idx] += value;
    }

    pub fn set_pair(&mut self, i: usize, j: usize, value: f64) {
        assert_ne!(i, j, "pair values live off the diagonal");
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        let idx = self.tri(a, b);
        self.upper[idx] = value;
    }

    /// Full d×d pair matrix, row-major, mirrored with zero diagonal.
    pub fn pairs_matrix(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.d * self.d];
        for i in 0..self.d {
            for j in 0..self.d {
                out[i * self.d + j] = self.pair(i, j);
            }
        }
        out
    }

    /// `singles[i] + ½·Σ_{j≠i} pair(i,j)` — the per-player share under the
    /// convention that each pair is split evenly between its members.
    pub fn lump_sum(&self, i: usize) -> f64 {
        let half_pairs: f64 = (0..self.d).map(|j| self.pair(i, j)).sum::<f64>() * 0.5;
        self.singles[i] + half_pairs
    }
}

#[derive(Serialize, Deserialize)]
struct PairIndexWire {
    d: usize,
    method: PairMethodTag,
    singles: Vec<f64>,
    pairs: Vec<Vec<f64>>,
}

impl From<PairIndex> for PairIndexWire {
    fn from(p: PairIndex) -> Self {
        let pairs = (0..p.d)
            .map(|i| (0..p.d).map(|j| p.pair(i, j)).collect())
            .collect();
        PairIndexWire { d: p.d, method: p.method, singles: p.singles.clone(), pairs }
    }
}

impl TryFrom<PairIndexWire> for PairIndex {
    type Error = Error;

    fn try_from(w: PairIndexWire) -> Result<Self> {
        if w.singles.len() != w.d || w.pairs.len() != w.d || w.pairs.iter().any(|r| r.len() != w.d) {
            return Err(Error::invalid("pair index dimensions are inconsistent"));
        }
        let mut out = PairIndex::zeros(w.d, w.method);
        out.singles = w.singles;
        for i in 0..w.d {
            if w.pairs[i][i] != 0.0 {
                return Err(Error::invalid("pair matrix must have a zero diagonal"));
            }
            for j in i + 1..w.d {
                if w.pairs[i][j].to_bits() != w.pairs[j][i].to_bits() {
                    return Err(Error::invalid("pair matrix must be exactly symmetric"));
                }
                out.set_pair(i, j, w.pairs[i][j]);
            }
        }
        Ok(out)
    }
}

/// Which serial decomposition a [`SerialMatrix`] holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SerialMethodTag {
    #[serde(rename = "serial-sv")]
    SerialShapley,
    #[serde(rename = "ih")]
    IntegratedHessians,
}

impl std::fmt::Display for SerialMethodTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            SerialMethodTag::SerialShapley => "serial-sv",
            SerialMethodTag::IntegratedHessians => "ih",
        };
        f.write_str(s)
    }
}

/// Entry `(i, j)` is the outer attribution of player `j` applied to the inner
/// attribution of player `i`; row `i` sums back to the inner first-order
/// attribution `φ_i` (hierarchical efficiency of serial methods).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerialMatrix {
    pub d: usize,
    pub method: SerialMethodTag,
    /// Row-major d×d.
    pub entries: Vec<f64>,
    /// The inner first-order attribution the rows decompose.
    pub first_order: Vec<f64>,
}

impl SerialMatrix {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.d + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.d..(i + 1) * self.d]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.d).map(|i| self.row(i).iter().sum()).collect()
    }
}

/// Serial Shapley decomposition: entry `(i, j)` is the Shapley value of
/// player `j` in the derived game `S ↦ φ_i^SV(S)` (zero when `i ∉ S`).
/// Model evaluations are memoized, so the cost is one 2^d enumeration plus
/// combinatorial reweighting.
pub fn serial_shapley(oracle: &dyn ValueOracle) -> Result<SerialMatrix> {
    let d = oracle.player_count();
    check_capacity(d, DEFAULT_EXACT_LIMIT)?;
    let sv = SvAttributor::new(oracle)?;
    let first_order = sv.attribution_vector()?.values;

    let size = 1usize << d;
    let rows: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| -> Result<Vec<f64>> {
            let bit = 1usize << i;
            let mut inner = vec![0.0; size];
            for (bits, slot) in inner.iter_mut().enumerate() {
                if bits & bit != 0 {
                    let c = Coalition::from_bits(bits as u64, d)?;
                    *slot = sv.restricted(c, i)?;
                }
            }
            Ok(shapley_all_from_dense(&inner, d))
        })
        .collect::<Result<_>>()?;

    let entries = rows.into_iter().flatten().collect();
    Ok(SerialMatrix { d, method: SerialMethodTag::SerialShapley, entries, first_order })
}

/// Integrated Hessians: entry `(i, j)` applies integrated gradients in
/// direction `j` to the map `x ↦ φ_i^IG(f, x)`. On twice-differentiable
/// symbolic models the inner derivative is taken exactly with nested dual
/// numbers; otherwise the outer derivative falls back to central finite
/// differences of the inner quadrature.
pub fn integrated_hessians(masked: &MaskedModel, steps: usize) -> Result<SerialMatrix> {
    if steps == 0 {
        return Err(Error::invalid("integrated Hessians needs at least one quadrature step"));
    }
    let d = masked.player_count();
    let first_order = integrated_gradients(masked, steps)?.values;
    let entries = if masked.is_symbolic() {
        ih_nested_dual(masked, steps)
    } else {
        ih_finite_difference(masked, steps)
    };
    Ok(SerialMatrix { d, method: SerialMethodTag::IntegratedHessians, entries, first_order })
}

/// ψ_{i,j} = Δ_j ∬ [δ_ij ∂_i f + αβ Δ_i ∂²_ij f](b + αβ(x−b)) dα dβ by
/// midpoint product quadrature; the bracket follows from differentiating the
/// inner path integral under the integral sign.
fn ih_nested_dual(masked: &MaskedModel, steps: usize) -> Vec<f64> {
    let d = masked.player_count();
    let x = masked.input();
    let b = masked.baseline();
    let n = steps as f64;

    let rows: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let delta_i = x[i] - b[i];
            let mut row = vec![0.0; d];
            let mut point = vec![0.0; d];
            for (j, slot) in row.iter_mut().enumerate() {
                let delta_j = x[j] - b[j];
                if delta_j == 0.0 {
                    continue;
                }
                let mut total = 0.0;
                for l in 0..steps {
                    let alpha = (l as f64 + 0.5) / n;
                    for k in 0..steps {
                        let beta = (k as f64 + 0.5) / n;
                        let t = alpha * beta;
                        for (p, (xv, bv)) in point.iter_mut().zip(x.iter().zip(b)) {
                            *p = bv + t * (xv - bv);
                        }
                        let (grad, hess) = masked
                            .grad_and_hessian_component(&point, i, j)
                            .expect("symbolic models supply second derivatives");
                        let mut term = t * delta_i * hess;
                        if i == j {
                            term += grad;
                        }
                        total += term;
                    }
                }
                *slot = delta_j * total / (n * n);
            }
            row
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// Fallback for opaque models: outer central differences (step 1e-4) of the
/// inner integrated-gradients map, integrated along the outer path.
fn ih_finite_difference(masked: &MaskedModel, steps: usize) -> Vec<f64> {
    const OUTER_STEP: f64 = 1e-4;
    let d = masked.player_count();
    let x = masked.input();
    let b = masked.baseline();
    let n = steps as f64;

    // φ_i^IG of the full model anchored at an arbitrary point.
    let inner_ig = |anchor: &[f64], i: usize| -> f64 {
        let delta = anchor[i] - b[i];
        if delta == 0.0 {
            return 0.0;
        }
        let mut sum = 0.0;
        let mut point = vec![0.0; d];
        for k in 0..steps {
            let beta = (k as f64 + 0.5) / n;
            for (p, (av, bv)) in point.iter_mut().zip(anchor.iter().zip(b)) {
                *p = bv + beta * (av - bv);
            }
            sum += masked.gradient_component(&point, i);
        }
        delta * sum / n
    };

    let rows: Vec<Vec<f64>> = (0..d)
        .into_par_iter()
        .map(|i| {
            let mut row = vec![0.0; d];
            for (j, slot) in row.iter_mut().enumerate() {
                let delta_j = x[j] - b[j];
                if delta_j == 0.0 {
                    continue;
                }
                let mut total = 0.0;
                for l in 0..steps {
                    let alpha = (l as f64 + 0.5) / n;
                    let mut anchor: Vec<f64> =
                        x.iter().zip(b).map(|(xv, bv)| bv + alpha * (xv - bv)).collect();
                    anchor[j] += OUTER_STEP;
                    let plus = inner_ig(&anchor, i);
                    anchor[j] -= 2.0 * OUTER_STEP;
                    let minus = inner_ig(&anchor, i);
                    total += (plus - minus) / (2.0 * OUTER_STEP);
                }
                *slot = delta_j * total / n;
            }
            row
        })
        .collect();
    rows.into_iter().flatten().collect()
}

/// STII pair value for `{i, j}` in a d-player game read through `value`:
/// the doubly-weighted second discrete derivative
/// `2 Σ_{S⊆[d]\{i,j}} w_d(|S|) · Δ_{ij}v(S)`.
pub(crate) fn stii_pair_value(
    value: &mut dyn FnMut(Coalition) -> f64,
    d: usize,
    i: usize,
    j: usize,
) -> f64 {
    debug_assert!(i != j && i < d && j < d && d >= 2);
    let weights = shapley_weights(d);
    let rest = Coalition::full(d).without(i).without(j);
    let mut by_size = vec![0.0; d - 1];
    for s in rest.subsets() {
        let second_difference =
            value(s.with(i).with(j)) - value(s.with(i)) - value(s.with(j)) + value(s);
        by_size[s.size()] += second_difference;
    }
    2.0 * weights.iter().zip(&by_size).map(|(w, acc)| w * acc).sum::<f64>()
}

/// Shapley-Taylor pair index by the discrete-derivative sweep; the singleton
/// scores are the Möbius coefficients of the singletons, `v({i}) − v(∅)`.
pub fn stii_pairwise(oracle: &dyn ValueOracle) -> Result<PairIndex> {
    let d = oracle.player_count();
    check_capacity(d, DEFAULT_EXACT_LIMIT)?;
    let cache = EvaluationCache::new(oracle);
    let mut out = PairIndex::zeros(d, PairMethodTag::Stii);
    let empty = cache.evaluate(Coalition::empty(d));
    for i in 0..d {
        *out.single_mut(i) = cache.evaluate(Coalition::empty(d).with(i)) - empty;
    }
    for i in 0..d {
        for j in i + 1..d {
            let value = stii_pair_value(&mut |c| cache.evaluate(c), d, i, j);
            out.set_pair(i, j, value);
        }
    }
    Ok(out)
}

/// Shapley-Taylor pair index from a Möbius expansion: every coefficient
/// `m_T` with `|T| ≥ 2` is split evenly over the `C(|T|,2)` pairs inside `T`.
pub fn stii_from_mobius(exp: &MobiusExpansion) -> PairIndex {
    let d = exp.player_count();
    let mut out = PairIndex::zeros(d, PairMethodTag::Stii);
    for (t, m) in exp.iter() {
        let members: Vec<usize> = t.players().collect();
        match members.len() {
            0 => {}
            1 => *out.single_mut(members[0]) += m,
            n => {
                let share = m / (n * (n - 1) / 2) as f64;
                for (a, &i) in members.iter().enumerate() {
                    for &j in &members[a + 1..] {
                        out.add_pair(i, j, share);
                    }
                }
            }
        }
    }
    out
}

/// Faithful Shapley interaction index (order 2) from a Möbius expansion.
pub fn fsii_from_mobius(exp: &MobiusExpansion) -> PairIndex {
    let d = exp.player_count();
    let mut out = PairIndex::zeros(d, PairMethodTag::Fsii);
    for (t, m) in exp.iter() {
        let members: Vec<usize> = t.players().collect();
        let n = members.len();
        match n {
            0 => {}
            1 => *out.single_mut(members[0]) += m,
            2 => out.add_pair(members[0], members[1], m),
            _ => {
                let nn = (n * (n + 1)) as f64;
                let single_share = -2.0 * (n - 2) as f64 / nn * m;
                let pair_share = 6.0 / nn * m;
                for (a, &i) in members.iter().enumerate() {
                    *out.single_mut(i) += single_share;
                    for &j in &members[a + 1..] {
                        out.add_pair(i, j, pair_share);
                    }
                }
            }
        }
    }
    out
}

/// Order-2 n-Shapley values from a Möbius expansion. Pairs carry
/// `m_T / (|T|−1)` for every `T ⊇ {i,j}`; singletons absorb the lump-sum
/// remainder `(1/|T| − 1/2)·m_T`, so that
/// `singles[i] + ½ Σ_j pairs[i][j] = φ_i^SV` exactly.
pub fn two_shapley_from_mobius(exp: &MobiusExpansion) -> PairIndex {
    let d = exp.player_count();
    let mut out = PairIndex::zeros(d, PairMethodTag::TwoSv);
    for (t, m) in exp.iter() {
        let members: Vec<usize> = t.players().collect();
        let n = members.len();
        match n {
            0 => {}
            1 => *out.single_mut(members[0]) += m,
            _ => {
                let single_share = (1.0 / n as f64 - 0.5) * m;
                let pair_share = m / (n - 1) as f64;
                for (a, &i) in members.iter().enumerate() {
                    *out.single_mut(i) += single_share;
                    for &j in &members[a + 1..] {
                        out.add_pair(i, j, pair_share);
                    }
                }
            }
        }
    }
    out
}

/// Order-≤2 truncation of the Möbius expansion itself: singleton and pair
/// coefficients verbatim, everything higher discarded.
pub fn mobius_pair_index(exp: &MobiusExpansion) -> PairIndex {
    let d = exp.player_count();
    let mut out = PairIndex::zeros(d, PairMethodTag::MobiusOrder2);
    for (t, m) in exp.iter() {
        let members: Vec<usize> = t.players().collect();
        match members.len() {
            1 => *out.single_mut(members[0]) += m,
            2 => out.add_pair(members[0], members[1], m),
            _ => {}
        }
    }
    out
}

/// SOP output: the symmetric set-based index plus the directional precursor
/// it was folded from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SopDecomposition {
    pub d: usize,
    /// Set-based index: `pairs[i][j] = ψ_{i,j} + ψ_{j,i}`, singles are the
    /// singleton Möbius coefficients.
    pub index: PairIndex,
    /// Row-major d×d directional precursor `ψ_{i,j}` (inner `i`, outer `j`),
    /// zero on the diagonal.
    pub directional: Vec<f64>,
    /// φ^IG at the full coalition; row `i` of the directional part plus
    /// `singles[i]` reproduces it.
    pub first_order: Vec<f64>,
}

impl SopDecomposition {
    pub fn directional_entry(&self, i: usize, j: usize) -> f64 {
        self.directional[i * self.d + j]
    }

    /// `singles[i] + Σ_j ψ_{i,j} − φ_i^IG`; zero up to quadrature error.
    pub fn row_identity_residual(&self, i: usize) -> f64 {
        let row: f64 = self.directional[i * self.d..(i + 1) * self.d].iter().sum();
        self.index.singles()[i] + row - self.first_order[i]
    }
}

/// Shapley over paths: for each inner player `i`, the outer Shapley value of
/// every `j ≠ i` in the reduced game `K ↦ φ_i^IG(K ∪ {i})` over the other
/// players. The set-based pair folds the two directions together; singleton
/// scores are the singleton Möbius coefficients of the masked game.
pub fn sop_pairwise(masked: &MaskedModel, steps: usize) -> Result<SopDecomposition> {
    let d = masked.player_count();
    check_capacity(d, DEFAULT_EXACT_LIMIT)?;
    let ig = IgAttributor::new(masked, steps)?;
    let first_order = ig.attribution_vector()?.values;

    let mut index = PairIndex::zeros(d, PairMethodTag::Sop);
    let empty = masked.evaluate(Coalition::empty(d));
    for i in 0..d {
        *index.single_mut(i) = masked.evaluate(Coalition::empty(d).with(i)) - empty;
    }

    let mut directional = vec![0.0; d * d];
    if d >= 2 {
        let rows: Vec<Vec<f64>> = (0..d)
            .into_par_iter()
            .map(|i| -> Result<Vec<f64>> {
                // Memoized φ_i^IG over every coalition containing i, indexed
                // by the remaining players' squeezed bit pattern.
                let mut table = vec![0.0; 1usize << (d - 1)];
                for (k, slot) in table.iter_mut().enumerate() {
                    let active = Coalition::unsqueeze(k as u64, i, d).with(i);
                    *slot = ig.restricted(active, i)?;
                }
                let full = Coalition::full(d - 1);
                let mut row = vec![0.0; d];
                for (j, slot) in row.iter_mut().enumerate() {
                    if j == i {
                        continue;
                    }
                    let j_sq = if j < i { j } else { j - 1 };
                    *slot = subgame_shapley(&mut |c| table[c.bits() as usize], full, j_sq);
                }
                Ok(row)
            })
            .collect::<Result<_>>()?;
        for (i, row) in rows.into_iter().enumerate() {
            directional[i * d..(i + 1) * d].copy_from_slice(&row);
        }
        for i in 0..d {
            for j in i + 1..d {
                index.set_pair(i, j, directional[i * d + j] + directional[j * d + i]);
            }
        }
    }

    Ok(SopDecomposition { d, index, directional, first_order })
}
