//! Result document assembly and the three render targets: machine-stable
//! JSON (default), flat CSV (`--format csv-matrix`), and human tables
//! (`--pretty`).

use std::io::Write;
use std::path::PathBuf;

use serde::Serialize;

use metagame::approx::EstimateWithError;
use metagame::first_order::{AttributionVector, BaseMethodTag};
use metagame::interaction::{PairIndex, SerialMatrix, SopDecomposition};
use metagame::meta::DirectionalMatrix;
use metagame::reference::ReferenceRow;
use metagame::{Error, Result};

use crate::verify::SuiteReport;
use crate::RunConfig;

/// One benchmark sweep row.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub estimator: String,
    pub budget: u64,
    pub evaluations_used: u64,
    pub mse: f64,
    pub mean_stderr: f64,
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payload {
    Attribution(AttributionVector),
    AttributionEstimate {
        method: BaseMethodTag,
        #[serde(flatten)]
        estimate: Box<EstimateWithError>,
    },
    Pairs(PairIndex),
    Serial(SerialMatrix),
    Sop(Box<SopDecomposition>),
    Directional(DirectionalMatrix),
    Reference {
        rows: Vec<ReferenceRow>,
        all_pass: bool,
    },
    Verify(SuiteReport),
    Bench {
        ground_truth: Vec<f64>,
        rows: Vec<BenchRow>,
    },
}

#[derive(Serialize)]
pub struct Document {
    pub config: RunConfig,
    #[serde(rename = "result")]
    pub payload: Payload,
}

impl Document {
    pub fn text(&self, csv: bool, pretty: bool) -> Result<String> {
        if csv {
            let config =
                serde_json::to_string(&self.config).map_err(|e| Error::Parse(e.to_string()))?;
            let mut s = format!("# config {config}\n");
            s.push_str(&csv_body(&self.payload));
            Ok(s)
        } else if pretty {
            Ok(pretty_text(self))
        } else {
            let mut s =
                serde_json::to_string_pretty(self).map_err(|e| Error::Parse(e.to_string()))?;
            s.push('\n');
            Ok(s)
        }
    }
}

pub fn render(doc: &Document, out: &Option<PathBuf>, csv: bool, pretty: bool) -> Result<()> {
    let text = doc.text(csv, pretty)?;
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn csv_body(payload: &Payload) -> String {
    let mut s = String::new();
    match payload {
        Payload::Attribution(a) => {
            s.push_str("player,value\n");
            for (i, v) in a.values.iter().enumerate() {
                s.push_str(&format!("{i},{v}\n"));
            }
        }
        Payload::AttributionEstimate { estimate, .. } => {
            s.push_str("player,value,stderr\n");
            for (i, (v, e)) in estimate.values.iter().zip(&estimate.stderr).enumerate() {
                s.push_str(&format!("{i},{v},{e}\n"));
            }
        }
        Payload::Pairs(p) => {
            s.push_str("i,j,value\n");
            let d = p.player_count();
            for i in 0..d {
                for j in 0..d {
                    let v = if i == j { p.singles()[i] } else { p.pair(i, j) };
                    s.push_str(&format!("{i},{j},{v}\n"));
                }
            }
        }
        Payload::Serial(m) => {
            s.push_str("target,source,value\n");
            for i in 0..m.d {
                for j in 0..m.d {
                    s.push_str(&format!("{i},{j},{}\n", m.entry(i, j)));
                }
            }
        }
        Payload::Sop(sop) => {
            s.push_str("target,source,value\n");
            for i in 0..sop.d {
                for j in 0..sop.d {
                    let v = if i == j {
                        sop.index.singles()[i]
                    } else {
                        sop.directional_entry(i, j)
                    };
                    s.push_str(&format!("{i},{j},{v}\n"));
                }
            }
        }
        Payload::Directional(dm) => {
            s.push_str("target,source,value\n");
            let d = dm.player_count();
            for &i in dm.targets() {
                for j in 0..d {
                    s.push_str(&format!("{i},{j},{}\n", dm.entry(i, j)));
                }
            }
        }
        Payload::Reference { rows, .. } => {
            s.push_str("row,entry,computed,analytic,deviation,tolerance,pass\n");
            for r in rows {
                for ((label, c), a) in r.entry_labels.iter().zip(&r.computed).zip(&r.analytic) {
                    let dev = (c - a).abs();
                    s.push_str(&format!(
                        "{},{label},{c},{a},{dev},{},{}\n",
                        r.label,
                        r.tolerance,
                        dev <= r.tolerance
                    ));
                }
            }
        }
        Payload::Verify(report) => {
            s.push_str("check,instances,worst_residual,tolerance,pass\n");
            for c in &report.checks {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    c.name, c.instances, c.worst_residual, c.tolerance, c.pass
                ));
            }
        }
        Payload::Bench { rows, .. } => {
            s.push_str("estimator,budget,evaluations_used,mse,mean_stderr\n");
            for r in rows {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.estimator, r.budget, r.evaluations_used, r.mse, r.mean_stderr
                ));
            }
        }
    }
    s
}

fn pretty_config(config: &RunConfig) -> String {
    let json = serde_json::to_value(config).expect("config serializes");
    let mut s = String::from("run configuration\n");
    if let serde_json::Value::Object(map) = json {
        for (k, v) in map {
            s.push_str(&format!("  {k:<10} {v}\n"));
        }
    }
    s.push('\n');
    s
}

fn pretty_text(doc: &Document) -> String {
    let mut s = pretty_config(&doc.config);
    match &doc.payload {
        Payload::Attribution(a) => {
            s.push_str(&format!("{} attribution ({} players)\n", a.method, a.d));
            for (i, v) in a.values.iter().enumerate() {
                s.push_str(&format!("  player {i:>3}  {v:>14.6}\n"));
            }
            s.push_str(&format!("  {:·>3}:------  {:>14.6}\n", "sum", a.sum()));
        }
        Payload::AttributionEstimate { method, estimate } => {
            s.push_str(&format!(
                "{} estimate via {} ({} evaluations)\n",
                method, estimate.estimator, estimate.evaluations_used
            ));
            for (i, (v, e)) in estimate.values.iter().zip(&estimate.stderr).enumerate() {
                s.push_str(&format!("  player {i:>3}  {v:>14.6} ± {e:<12.6}\n"));
            }
        }
        Payload::Pairs(p) => {
            let d = p.player_count();
            s.push_str(&format!("{} pair index ({} players)\n", p.method(), d));
            s.push_str("  singles:");
            for v in p.singles() {
                s.push_str(&format!(" {v:>12.6}"));
            }
            s.push_str("\n  pairs (singles on the diagonal):\n");
            for i in 0..d {
                s.push_str("   ");
                for j in 0..d {
                    let v = if i == j { p.singles()[i] } else { p.pair(i, j) };
                    s.push_str(&format!(" {v:>12.6}"));
                }
                s.push('\n');
            }
        }
        Payload::Serial(m) => {
            s.push_str(&format!("{} matrix ({} players); rows sum to the first order\n", m.method, m.d));
            for i in 0..m.d {
                s.push_str("   ");
                for j in 0..m.d {
                    s.push_str(&format!(" {:>12.6}", m.entry(i, j)));
                }
                s.push_str(&format!("   | row sum {:>12.6}\n", m.row(i).iter().sum::<f64>()));
            }
            s.push_str("  first order:");
            for v in &m.first_order {
                s.push_str(&format!(" {v:>12.6}"));
            }
            s.push('\n');
        }
        Payload::Sop(sop) => {
            s.push_str(&format!("sum-of-powers decomposition ({} players)\n", sop.d));
            s.push_str("  singles:");
            for v in sop.index.singles() {
                s.push_str(&format!(" {v:>12.6}"));
            }
            s.push_str("\n  directional (row = target):\n");
            for i in 0..sop.d {
                s.push_str("   ");
                for j in 0..sop.d {
                    s.push_str(&format!(" {:>12.6}", sop.directional_entry(i, j)));
                }
                s.push('\n');
            }
            s.push_str("  symmetric pairs:\n");
            for i in 0..sop.d {
                s.push_str("   ");
                for j in 0..sop.d {
                    let v = if i == j { 0.0 } else { sop.index.pair(i, j) };
                    s.push_str(&format!(" {v:>12.6}"));
                }
                s.push('\n');
            }
        }
        Payload::Directional(dm) => {
            let d = dm.player_count();
            s.push_str(&format!(
                "directional meta-attribution, base {} ({} players, {} targets)\n",
                dm.base_method(),
                d,
                dm.targets().len()
            ));
            s.push_str("  rows are targets; row sums reproduce the base attribution\n");
            for &i in dm.targets() {
                s.push_str(&format!("  target {i:>3}:"));
                for j in 0..d {
                    s.push_str(&format!(" {:>12.6}", dm.entry(i, j)));
                }
                s.push_str(&format!(
                    "   | sum {:>12.6} base {:>12.6}\n",
                    dm.row_sum(i).unwrap_or(f64::NAN),
                    dm.first_order(i).unwrap_or(f64::NAN)
                ));
                if let Some(err) = dm.stderr_row(i) {
                    s.push_str("      stderr:");
                    for e in err {
                        s.push_str(&format!(" {e:>12.6}"));
                    }
                    s.push('\n');
                }
            }
        }
        Payload::Reference { rows, all_pass } => {
            s.push_str(&format!(
                "{:<12} {:>14} {:>12} {:>10}  status\n",
                "method", "max deviation", "tolerance", "entries"
            ));
            for r in rows {
                s.push_str(&format!(
                    "{:<12} {:>14.3e} {:>12.1e} {:>10}  {}\n",
                    r.label,
                    r.max_deviation(),
                    r.tolerance,
                    r.computed.len(),
                    if r.passes() { "PASS" } else { "FAIL" }
                ));
            }
            s.push_str(if *all_pass { "\nall rows PASS\n" } else { "\nFAIL\n" });
        }
        Payload::Verify(report) => {
            s.push_str(&format!(
                "{:<28} {:>9} {:>14} {:>10}  status\n",
                "invariant", "instances", "worst residual", "tolerance"
            ));
            for c in &report.checks {
                s.push_str(&format!(
                    "{:<28} {:>9} {:>14.3e} {:>10.1e}  {}\n",
                    c.name, c.instances, c.worst_residual, c.tolerance,
                    if c.pass { "PASS" } else { "FAIL" }
                ));
                if !c.pass {
                    s.push_str(&format!("    worst instance: {}\n", c.worst_case));
                }
            }
            s.push_str(if report.all_pass { "\nall invariants PASS\n" } else { "\nFAIL\n" });
        }
        Payload::Bench { ground_truth, rows } => {
            s.push_str(&format!("ground truth over {} players\n", ground_truth.len()));
            s.push_str(&format!(
                "{:<12} {:>10} {:>12} {:>14} {:>14}\n",
                "estimator", "budget", "used", "mse", "mean stderr"
            ));
            for r in rows {
                s.push_str(&format!(
                    "{:<12} {:>10} {:>12} {:>14.3e} {:>14.3e}\n",
                    r.estimator, r.budget, r.evaluations_used, r.mse, r.mean_stderr
                ));
            }
        }
    }
    s
}
