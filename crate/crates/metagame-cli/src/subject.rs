//! Resolves `--model` / `--game` flags into the thing a method runs on: a
//! differentiable masked model, a bare value oracle, or an external
//! attribution table.

use metagame::fileio::{load_document, LoadedGame};
use metagame::game::{MaskedModel, ValueOracle};
use metagame::meta::ExternalAttributionTable;
use metagame::zoo::{
    random_mobius_oracle, random_sparse_polynomial, table1_model, SymmetricGame,
};
use metagame::{Error, Result};

use crate::InputArgs;

/// Parsed-but-not-yet-built input selection.
pub enum SubjectSpec {
    Table1 { x: Vec<f64>, baseline: Vec<f64> },
    Sparse { d: usize, order: usize, terms: usize, seed: u64, x: Vec<f64>, baseline: Vec<f64> },
    Mobius { d: usize, sparsity: f64, seed: u64 },
    Symmetric { d: usize, power: u32 },
    File(std::path::PathBuf),
}

/// A built subject: at most one of these is populated per run.
pub enum Subject {
    Masked(MaskedModel),
    Game(Box<dyn ValueOracle>),
    Loaded(LoadedGame),
}

impl SubjectSpec {
    pub fn resolve(input: &InputArgs) -> Result<Self> {
        match (&input.model, &input.game) {
            (Some(spec), None) => Self::parse_model(spec, input),
            (None, Some(path)) => {
                if input.x.is_some() || input.baseline.is_some() {
                    return Err(Error::invalid(
                        "--x/--baseline come from the game document; they only apply to --model",
                    ));
                }
                Ok(SubjectSpec::File(path.clone()))
            }
            (None, None) => Err(Error::invalid("provide either --model or --game")),
            (Some(_), Some(_)) => unreachable!("clap enforces the conflict"),
        }
    }

    fn parse_model(spec: &str, input: &InputArgs) -> Result<Self> {
        let (head, rest) = match spec.split_once(':') {
            Some((h, r)) => (h, Some(r)),
            None => (spec, None),
        };
        let reject_points = |name: &str| -> Result<()> {
            if input.x.is_some() || input.baseline.is_some() {
                return Err(Error::invalid(format!(
                    "{name} is a plain game with no input point; drop --x/--baseline"
                )));
            }
            Ok(())
        };
        match head {
            "table1" => {
                if rest.is_some() {
                    return Err(Error::invalid("table1 takes no parameters"));
                }
                let x = match &input.x {
                    Some(x) => sized(x, 2, "--x")?,
                    None => vec![2.0, 3.0],
                };
                let baseline = match &input.baseline {
                    Some(b) => sized(b, 2, "--baseline")?,
                    None => vec![0.0, 0.0],
                };
                Ok(SubjectSpec::Table1 { x, baseline })
            }
            "sparse" => {
                let parts = numeric_parts(rest, 4, "sparse:d,order,terms,seed")?;
                let d = checked_dimension(parts[0])?;
                let (x, baseline) = point_pair(input, d)?;
                Ok(SubjectSpec::Sparse {
                    d,
                    order: parts[1] as usize,
                    terms: parts[2] as usize,
                    seed: parts[3] as u64,
                    x,
                    baseline,
                })
            }
            "mobius" => {
                reject_points("mobius")?;
                let parts = numeric_parts(rest, 3, "mobius:d,sparsity,seed")?;
                let sparsity = parts[1];
                if !(sparsity > 0.0 && sparsity <= 1.0) {
                    return Err(Error::invalid("mobius sparsity must lie in (0, 1]"));
                }
                Ok(SubjectSpec::Mobius {
                    d: checked_dimension(parts[0])?,
                    sparsity,
                    seed: parts[2] as u64,
                })
            }
            "symmetric" => {
                reject_points("symmetric")?;
                let parts = numeric_parts(rest, 2, "symmetric:d,power")?;
                Ok(SubjectSpec::Symmetric {
                    d: checked_dimension(parts[0])?,
                    power: parts[1] as u32,
                })
            }
            other => Err(Error::Parse(format!(
                "unknown model `{other}`; expected table1, sparse:…, mobius:…, or symmetric:…"
            ))),
        }
    }

    pub fn build(&self) -> Result<Subject> {
        match self {
            SubjectSpec::Table1 { x, baseline } => {
                let masked = MaskedModel::from_symbolic(
                    table1_model(),
                    x.clone(),
                    baseline.clone(),
                )?;
                Ok(Subject::Masked(masked))
            }
            SubjectSpec::Sparse { d, order, terms, seed, x, baseline } => {
                let model = random_sparse_polynomial(*d, *order, *terms, *seed)?;
                let masked = MaskedModel::from_symbolic(model, x.clone(), baseline.clone())?;
                Ok(Subject::Masked(masked))
            }
            SubjectSpec::Mobius { d, sparsity, seed } => {
                Ok(Subject::Game(Box::new(random_mobius_oracle(*d, *sparsity, *seed))))
            }
            SubjectSpec::Symmetric { d, power } => {
                Ok(Subject::Game(Box::new(SymmetricGame::new(*d, *power))))
            }
            SubjectSpec::File(path) => Ok(Subject::Loaded(load_document(path)?.realize()?)),
        }
    }
}

impl Subject {
    pub fn player_count(&self) -> usize {
        match self {
            Subject::Masked(m) => m.player_count(),
            Subject::Game(g) => g.player_count(),
            Subject::Loaded(l) => l.player_count(),
        }
    }

    pub fn oracle(&self) -> Result<&dyn ValueOracle> {
        match self {
            Subject::Masked(m) => Ok(m),
            Subject::Game(g) => Ok(&**g),
            Subject::Loaded(l) => l.oracle().ok_or_else(|| {
                Error::Unsupported(
                    "an attribution_table document fixes restricted attributions only; \
                     this method needs a value oracle (dense_game or mobius)"
                        .to_string(),
                )
            }),
        }
    }

    pub fn masked(&self) -> Result<&MaskedModel> {
        let found = match self {
            Subject::Masked(m) => Some(m),
            Subject::Loaded(l) => l.masked(),
            Subject::Game(_) => None,
        };
        found.ok_or_else(|| {
            Error::Unsupported(
                "this method differentiates the model; provide a symbolic model \
                 (--model table1/sparse:…, or a dense_game document with monomials, x, baseline)"
                    .to_string(),
            )
        })
    }

    pub fn table(&self) -> Result<&ExternalAttributionTable> {
        match self {
            Subject::Loaded(l) => l.table(),
            _ => None,
        }
        .ok_or_else(|| {
            Error::Unsupported(
                "meta-ext reads restricted attributions from an attribution_table document"
                    .to_string(),
            )
        })
    }

    pub fn input_echo(&self) -> Option<Vec<f64>> {
        self.masked().ok().map(|m| m.input().to_vec())
    }

    pub fn baseline_echo(&self) -> Option<Vec<f64>> {
        self.masked().ok().map(|m| m.baseline().to_vec())
    }
}

fn sized(v: &[f64], d: usize, flag: &str) -> Result<Vec<f64>> {
    if v.len() != d {
        return Err(Error::invalid(format!("{flag} needs exactly {d} values, got {}", v.len())));
    }
    Ok(v.to_vec())
}

/// Default input point for generated models: all ones at the input, all
/// zeros at the baseline, so every monomial is active.
fn point_pair(input: &InputArgs, d: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = match &input.x {
        Some(x) => sized(x, d, "--x")?,
        None => vec![1.0; d],
    };
    let baseline = match &input.baseline {
        Some(b) => sized(b, d, "--baseline")?,
        None => vec![0.0; d],
    };
    Ok((x, baseline))
}

fn checked_dimension(raw: f64) -> Result<usize> {
    let d = raw as usize;
    if raw.fract() != 0.0 || !(1..=63).contains(&d) {
        return Err(Error::invalid(format!("dimension {raw} must be an integer in 1..=63")));
    }
    Ok(d)
}

fn numeric_parts(rest: Option<&str>, n: usize, shape: &str) -> Result<Vec<f64>> {
    let rest = rest.ok_or_else(|| Error::Parse(format!("expected {shape}")))?;
    let parts: Vec<&str> = rest.split(',').collect();
    if parts.len() != n {
        return Err(Error::Parse(format!("expected {shape}, got `{rest}`")));
    }
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("`{p}` is not a number in {shape}")))
        })
        .collect()
}
