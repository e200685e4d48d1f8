//! Command-line driver: compute attributions, interaction indices, and
//! directional meta-attributions from game files or built-in models; check
//! the reference closed forms; run the seeded invariant suite; and benchmark
//! the sampling estimators. Output is a machine-stable JSON document by
//! default; `--format csv-matrix` emits flat CSV and `--pretty` renders
//! human-readable tables.

mod output;
mod subject;
mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use metagame::approx::{meta_attribution_approx, shapley_mc_permutation, shapley_regression};
use metagame::approx::{Budget, EstimateWithError, EstimatorKind};
use metagame::first_order::{
    grad_times_input, integrated_gradients, shapley_value_exact, BaseMethodTag, GxIAttributor,
    IgAttributor, RestrictedAttributor, SvAttributor,
};
use metagame::interaction::{
    fsii_from_mobius, integrated_hessians, serial_shapley, sop_pairwise, stii_pairwise,
    two_shapley_from_mobius,
};
use metagame::meta::{
    meta_attribution_exact, meta_attribution_for_targets, meta_external, ExternalAttributor,
};
use metagame::mobius::mobius_transform;
use metagame::reference::reference_table;
use metagame::{Error, Result};

use output::{render, Document, Payload};
use subject::{Subject, SubjectSpec};

#[derive(Parser)]
#[command(name = "metagame", version, about = "Cooperative-game attribution toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute an attribution, interaction index, or directional matrix.
    Compute(ComputeArgs),
    /// Compare every method against its closed form on the reference model.
    Table1(Table1Args),
    /// Run the seeded invariant suite.
    Verify(VerifyArgs),
    /// Sweep estimator budgets against exact ground truth.
    ApproxBench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Method {
    Sv,
    Gxi,
    Ig,
    SerialSv,
    Ih,
    Stii,
    Fsii,
    #[value(name = "2sv")]
    #[serde(rename = "2sv")]
    TwoSv,
    Sop,
    MetaSv,
    MetaIg,
    MetaGxi,
    MetaExt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Format {
    StructuredDocument,
    CsvMatrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Approx {
    Mc,
    Regression,
}

impl From<Approx> for EstimatorKind {
    fn from(a: Approx) -> EstimatorKind {
        match a {
            Approx::Mc => EstimatorKind::McPermutation,
            Approx::Regression => EstimatorKind::Regression,
        }
    }
}

#[derive(Args)]
struct InputArgs {
    /// Built-in model: `table1`, `sparse:d,order,terms,seed`,
    /// `mobius:d,sparsity,seed`, or `symmetric:d,power`.
    #[arg(long, conflicts_with = "game")]
    model: Option<String>,
    /// Path to a JSON game document.
    #[arg(long)]
    game: Option<PathBuf>,
    /// Input point for model-based subjects, comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    x: Option<Vec<f64>>,
    /// Baseline point (defaults to all zeros).
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    baseline: Option<Vec<f64>>,
}

#[derive(Args)]
struct OutputArgs {
    /// Write the document here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::StructuredDocument)]
    format: Format,
    /// Render a human-readable table (structured format only).
    #[arg(long)]
    pretty: bool,
    /// Cap the worker-thread pool.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct ComputeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_enum)]
    method: Method,
    /// Quadrature steps for integrated-gradient and integrated-Hessian paths.
    #[arg(long, default_value_t = 256)]
    steps: usize,
    /// Estimate with a sampler instead of exact enumeration (meta methods
    /// and `sv`).
    #[arg(long, value_enum)]
    approx: Option<Approx>,
    /// Oracle-evaluation budget for the estimator.
    #[arg(long)]
    budget: Option<u64>,
    /// Antithetic (complement) pairing for the estimator.
    #[arg(long)]
    pairing: bool,
    /// Random seed for estimators.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Meta-method target rows, comma-separated (default: every player).
    #[arg(long, value_delimiter = ',')]
    targets: Option<Vec<usize>>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct Table1Args {
    /// Evaluation point for the reference model.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_values_t = [2.0, 3.0], num_args = 1..)]
    x: Vec<f64>,
    #[arg(long, default_value_t = 1024)]
    steps: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Diagnostic mode: corrupt one Shapley weight so the suite must fail.
    #[arg(long)]
    inject_fault: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Largest budget in the sweep (doubling from 128).
    #[arg(long, default_value_t = 8192)]
    budget: u64,
    #[arg(long)]
    pairing: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

/// Fully resolved run parameters, echoed into every output document.
#[derive(Debug, Clone, Serialize)]
struct RunConfig {
    command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    method: Option<Method>,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    game: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    x: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    baseline: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    steps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    approx: Option<Approx>,
    #[serde(skip_serializing_if = "Option::is_none")]
    budget: Option<u64>,
    pairing: bool,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    targets: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    threads: Option<usize>,
    format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    inject_fault: Option<bool>,
}

impl RunConfig {
    fn new(command: &str, format: Format) -> Self {
        RunConfig {
            command: command.to_string(),
            method: None,
            model: None,
            game: None,
            x: None,
            baseline: None,
            steps: None,
            approx: None,
            budget: None,
            pairing: false,
            seed: 0,
            targets: None,
            threads: None,
            format,
            out: None,
            inject_fault: None,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::CapacityExceeded { .. }) {
                eprintln!("hint: rerun with --approx mc or --approx regression and a --budget");
            }
            exit_code_for(&e)
        }
    };
    ExitCode::from(code)
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::CapacityExceeded { .. } => 3,
        Error::Estimation(_) => 4,
        _ => 2,
    }
}

fn setup_threads(threads: Option<usize>) -> Result<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Error::invalid("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Compute(args) => cmd_compute(args),
        Command::Table1(args) => cmd_table1(args),
        Command::Verify(args) => cmd_verify(args),
        Command::ApproxBench(args) => cmd_approx_bench(args),
    }
}

fn validate_output(args: &OutputArgs) -> Result<()> {
    if args.pretty && args.format == Format::CsvMatrix {
        return Err(Error::invalid("--pretty applies to the structured format only"));
    }
    Ok(())
}

fn cmd_compute(args: ComputeArgs) -> Result<u8> {
    validate_output(&args.output)?;
    setup_threads(args.output.threads)?;
    if args.approx.is_some() != args.budget.is_some() {
        return Err(Error::invalid("--approx and --budget must be given together"));
    }
    if args.steps == 0 {
        return Err(Error::invalid("--steps must be at least 1"));
    }

    let spec = SubjectSpec::resolve(&args.input)?;
    let subject = spec.build()?;
    let d = subject.player_count();

    let mut config = RunConfig::new("compute", args.output.format);
    config.method = Some(args.method);
    config.model = args.input.model.clone();
    config.game = args.input.game.clone();
    config.x = subject.input_echo();
    config.baseline = subject.baseline_echo();
    config.steps = Some(args.steps);
    config.approx = args.approx;
    config.budget = args.budget;
    config.pairing = args.pairing;
    config.seed = args.seed;
    config.targets = args.targets.clone();
    config.threads = args.output.threads;
    config.out = args.output.out.clone();

    let budget = args
        .budget
        .map(|max_evaluations| Budget { max_evaluations, seed: args.seed, pairing: args.pairing });

    if args.approx.is_some()
        && !matches!(
            args.method,
            Method::Sv | Method::MetaSv | Method::MetaIg | Method::MetaGxi | Method::MetaExt
        )
    {
        return Err(Error::invalid(format!(
            "--approx supports sv and the meta methods, not {:?}",
            args.method
        )));
    }
    let targets: Vec<usize> = match &args.targets {
        Some(t) => t.clone(),
        None => (0..d).collect(),
    };
    if !matches!(args.method, Method::MetaSv | Method::MetaIg | Method::MetaGxi | Method::MetaExt)
        && args.targets.is_some()
    {
        return Err(Error::invalid("--targets applies to meta methods only"));
    }

    let payload = dispatch_compute(&args, &subject, budget.as_ref(), &targets)?;
    let doc = Document { config, payload };
    render(&doc, &args.output.out, args.output.format == Format::CsvMatrix, args.output.pretty)?;
    Ok(0)
}

fn dispatch_compute(
    args: &ComputeArgs,
    subject: &Subject,
    budget: Option<&Budget>,
    targets: &[usize],
) -> Result<Payload> {
    let method = args.method;
    let steps = args.steps;
    match method {
        Method::Sv => {
            let oracle = subject.oracle()?;
            match budget {
                None => Ok(Payload::Attribution(shapley_value_exact(oracle)?)),
                Some(b) => {
                    let estimate = match args.approx.expect("validated") {
                        Approx::Mc => shapley_mc_permutation(oracle, b)?,
                        Approx::Regression => shapley_regression(oracle, b)?,
                    };
                    Ok(Payload::AttributionEstimate {
                        method: BaseMethodTag::ShapleyValue,
                        estimate: Box::new(estimate),
                    })
                }
            }
        }
        Method::Gxi => Ok(Payload::Attribution(grad_times_input(subject.masked()?)?)),
        Method::Ig => Ok(Payload::Attribution(integrated_gradients(subject.masked()?, steps)?)),
        Method::SerialSv => Ok(Payload::Serial(serial_shapley(subject.oracle()?)?)),
        Method::Ih => Ok(Payload::Serial(integrated_hessians(subject.masked()?, steps)?)),
        Method::Stii => Ok(Payload::Pairs(stii_pairwise(subject.oracle()?)?)),
        Method::Fsii => Ok(Payload::Pairs(fsii_from_mobius(&mobius_transform(
            subject.oracle()?,
        )?))),
        Method::TwoSv => Ok(Payload::Pairs(two_shapley_from_mobius(&mobius_transform(
            subject.oracle()?,
        )?))),
        Method::Sop => Ok(Payload::Sop(Box::new(sop_pairwise(subject.masked()?, steps)?))),
        Method::MetaSv => {
            let oracle = subject.oracle()?;
            let base = SvAttributor::new(oracle)?;
            meta_dispatch(&base, args, budget, targets)
        }
        Method::MetaIg => {
            let base = IgAttributor::new(subject.masked()?, steps)?;
            meta_dispatch(&base, args, budget, targets)
        }
        Method::MetaGxi => {
            let base = GxIAttributor::new(subject.masked()?);
            meta_dispatch(&base, args, budget, targets)
        }
        Method::MetaExt => {
            let table = subject.table()?;
            match budget {
                None if targets.len() == table.player_count() => {
                    Ok(Payload::Directional(meta_external(table)?))
                }
                _ => {
                    let base = ExternalAttributor::new(table);
                    meta_dispatch(&base, args, budget, targets)
                }
            }
        }
    }
}

fn meta_dispatch(
    base: &dyn RestrictedAttributor,
    args: &ComputeArgs,
    budget: Option<&Budget>,
    targets: &[usize],
) -> Result<Payload> {
    let dm = match budget {
        Some(b) => {
            meta_attribution_approx(base, b, targets, args.approx.map(EstimatorKind::from))?
        }
        None if targets.len() == base.player_count() => meta_attribution_exact(base)?,
        None => meta_attribution_for_targets(base, targets)?,
    };
    Ok(Payload::Directional(dm))
}

fn cmd_table1(args: Table1Args) -> Result<u8> {
    validate_output(&args.output)?;
    setup_threads(args.output.threads)?;
    if args.x.len() != 2 {
        return Err(Error::invalid("the reference model takes exactly two inputs"));
    }
    if args.steps == 0 {
        return Err(Error::invalid("--steps must be at least 1"));
    }
    let mut config = RunConfig::new("table1", args.output.format);
    config.x = Some(args.x.clone());
    config.baseline = Some(vec![0.0, 0.0]);
    config.steps = Some(args.steps);
    config.threads = args.output.threads;
    config.out = args.output.out.clone();

    let rows = reference_table([args.x[0], args.x[1]], args.steps)?;
    let all_pass = rows.iter().all(|r| r.passes());
    let doc = Document { config, payload: Payload::Reference { rows, all_pass } };
    render(&doc, &args.output.out, args.output.format == Format::CsvMatrix, args.output.pretty)?;
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_verify(args: VerifyArgs) -> Result<u8> {
    validate_output(&args.output)?;
    setup_threads(args.output.threads)?;
    let mut config = RunConfig::new("verify", args.output.format);
    config.seed = args.seed;
    config.threads = args.output.threads;
    config.out = args.output.out.clone();
    config.inject_fault = Some(args.inject_fault);

    let report = verify::run_suite(args.seed, args.inject_fault)?;
    let all_pass = report.all_pass;
    let doc = Document { config, payload: Payload::Verify(report) };
    render(&doc, &args.output.out, args.output.format == Format::CsvMatrix, args.output.pretty)?;
    Ok(if all_pass { 0 } else { 1 })
}

fn cmd_approx_bench(args: BenchArgs) -> Result<u8> {
    validate_output(&args.output)?;
    setup_threads(args.output.threads)?;
    let spec = SubjectSpec::resolve(&args.input)?;
    let subject = spec.build()?;
    let oracle = subject.oracle()?;

    let mut config = RunConfig::new("approx-bench", args.output.format);
    config.model = args.input.model.clone();
    config.game = args.input.game.clone();
    config.x = subject.input_echo();
    config.baseline = subject.baseline_echo();
    config.budget = Some(args.budget);
    config.pairing = args.pairing;
    config.seed = args.seed;
    config.threads = args.output.threads;
    config.out = args.output.out.clone();

    // Exact ground truth first: an oversize game fails here with the
    // capacity exit code before any sampling starts.
    let exact = shapley_value_exact(oracle)?;
    let d = oracle.player_count();

    let mut budgets = Vec::new();
    let mut b = 128u64.max(d as u64 + 2);
    while b <= args.budget {
        budgets.push(b);
        b *= 2;
    }
    if budgets.is_empty() {
        budgets.push(args.budget.max(d as u64 + 2));
    }
    // One exhaustive row demonstrating estimator degeneracy to the exact
    // value (kept to sizes where the full system is cheap).
    let exhaustive = if d <= 16 { Some((1u64 << d) + 2) } else { None };

    let mse = |estimate: &EstimateWithError| -> f64 {
        estimate
            .values
            .iter()
            .zip(&exact.values)
            .map(|(a, e)| (a - e) * (a - e))
            .sum::<f64>()
            / d as f64
    };
    let mean_stderr = |estimate: &EstimateWithError| -> f64 {
        estimate.stderr.iter().sum::<f64>() / d as f64
    };

    let mut rows = Vec::new();
    for &budget in budgets.iter().chain(exhaustive.iter()) {
        let spec = Budget { max_evaluations: budget, seed: args.seed, pairing: args.pairing };
        let mc = shapley_mc_permutation(oracle, &spec)?;
        rows.push(output::BenchRow {
            estimator: "mc".to_string(),
            budget,
            evaluations_used: mc.evaluations_used,
            mse: mse(&mc),
            mean_stderr: mean_stderr(&mc),
        });
        let reg = shapley_regression(oracle, &spec)?;
        rows.push(output::BenchRow {
            estimator: "regression".to_string(),
            budget,
            evaluations_used: reg.evaluations_used,
            mse: mse(&reg),
            mean_stderr: mean_stderr(&reg),
        });
    }

    let doc = Document {
        config,
        payload: Payload::Bench { ground_truth: exact.values.clone(), rows },
    };
    render(&doc, &args.output.out, args.output.format == Format::CsvMatrix, args.output.pretty)?;
    Ok(0)
}
