use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use freeprob_core::harness::wire;
use freeprob_core::{r_transform, run_scenario, s_transform, AlgebraSpec, Report, ScenarioConfig, ScenarioKind};

#[derive(Parser)]
#[command(
    name = "freeprob",
    version,
    about = "Operator-valued S- and R-transform verification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Twisted multiplicativity of the S-transform for free pairs.
    VerifyS(ScenarioArgs),
    /// Additivity of the R-transform for free pairs.
    VerifyR(ScenarioArgs),
    /// Twisted and plain products agree over a commutative algebra.
    Commutative(ScenarioArgs),
    /// Searches for an instance where the plain product fails but the twisted one holds.
    Counterexample(ScenarioArgs),
    /// Runs every invariant suite.
    Selftest(SelftestArgs),
    /// Computes the S- or R-transform of a moment file.
    Transform(TransformArgs),
}

fn parse_algebra(s: &str) -> std::result::Result<AlgebraSpec, String> {
    AlgebraSpec::parse_short(s).map_err(|e| e.to_string())
}

#[derive(Args)]
struct ScenarioArgs {
    /// `matrix:K` or `diagonal:D`.
    #[arg(long, default_value = "matrix:2", value_parser = parse_algebra)]
    algebra: AlgebraSpec,
    /// Compare order, 1 to 4.
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-7)]
    tol: f64,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// Moment file for x; requires --y.
    #[arg(long, requires = "y")]
    x: Option<PathBuf>,
    /// Moment file for y; requires --x.
    #[arg(long, requires = "x")]
    y: Option<PathBuf>,
    /// Also write the report here.
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Args)]
struct SelftestArgs {
    #[arg(long, default_value = "matrix:2", value_parser = parse_algebra)]
    algebra: AlgebraSpec,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    json_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    S,
    R,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Moment file.
    #[arg(long)]
    input: PathBuf,
    /// Jet file; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn scenario(kind: ScenarioKind, args: ScenarioArgs) -> Result<(ScenarioConfig, Option<PathBuf>)> {
    let mut cfg = ScenarioConfig::new(kind, args.algebra, args.order, args.seed)
        .with_tol(args.tol)
        .with_trials(args.trials);
    if let (Some(x), Some(y)) = (&args.x, &args.y) {
        cfg.x = Some(read_moments(x)?);
        cfg.y = Some(read_moments(y)?);
    }
    Ok((cfg, args.json_out))
}

fn read_moments(path: &Path) -> Result<freeprob_core::MomentData> {
    wire::read_moments(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(report: &Report, json_out: Option<&Path>) -> Result<bool> {
    let text = serde_json::to_string_pretty(report)?;
    println!("{text}");
    if let Some(path) = json_out {
        wire::write_text(path, &text).with_context(|| format!("writing {}", path.display()))?;
    }
    for e in &report.errors {
        eprintln!("error: {e}");
    }
    Ok(report.pass)
}

fn transform(args: TransformArgs) -> Result<bool> {
    let moments = read_moments(&args.input)?;
    moments.validate().context("moment data")?;
    let result = match args.kind {
        Kind::S => s_transform(&moments)?,
        Kind::R => r_transform(&moments)?,
    };
    let text = wire::transform_to_json(&result);
    match &args.output {
        Some(path) => wire::write_text(path, &text).with_context(|| format!("writing {}", path.display()))?,
        None => println!("{text}"),
    }
    Ok(true)
}

fn run(cli: Cli) -> Result<bool> {
    let (cfg, json_out) = match cli.command {
        Command::VerifyS(a) => scenario(ScenarioKind::VerifyS, a)?,
        Command::VerifyR(a) => scenario(ScenarioKind::VerifyR, a)?,
        Command::Commutative(a) => scenario(ScenarioKind::Commutative, a)?,
        Command::Counterexample(a) => scenario(ScenarioKind::Counterexample, a)?,
        Command::Selftest(a) => (
            ScenarioConfig::new(ScenarioKind::Selftest, a.algebra, 3, a.seed),
            a.json_out,
        ),
        Command::Transform(a) => return transform(a),
    };
    emit(&run_scenario(&cfg), json_out.as_deref())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
