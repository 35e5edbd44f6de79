//! Command-line front end: resolves the config (defaults < file < flags),
//! runs one pipeline, prints its summary and optionally writes the output
//! tree with a manifest.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use goldilocks::io::manifest::{write_tree, RunManifest};
use goldilocks::io::{load_config, Format, RunConfig};
use goldilocks::runner::{execute, Command, Invocation};
use goldilocks::suite::{self, Check};
use goldilocks::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "goldilocks", version, about = "Creator-market simulations under a generative-AI supply shock")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,

    /// TOML config layered over the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Master seed; overrides the config.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for the output tree and its manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,

    /// Also write SVG figures under plots/.
    #[arg(long, global = true)]
    plots: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Monopoly and duopoly equilibria and their comparison.
    Static,
    /// Supplied-quality histograms before and after the shock.
    Hollow,
    /// Skill-density gradient flow and its Gibbs state.
    Meanfield,
    /// Agent-based market, one run or an ensemble.
    Abm {
        #[arg(long, default_value_t = 1)]
        replications: usize,
    },
    /// Genetic-algorithm search over the agent-market parameters.
    Calibrate,
    /// Welfare curves, planner optimum, tax and verification.
    Policy,
    /// Full acceptance suite with a pass/fail report.
    Reproduce,
    /// Regenerates an output directory from its manifest and compares.
    Verify { dir: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

/// Prints a line; a closed pipe (`goldilocks ... | head`) is not an error.
fn emit(text: &str) {
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn fail(kind: &str, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "message": message.to_string() }));
    ExitCode::FAILURE
}

fn resolve(cli: &Cli) -> Result<RunConfig, Error> {
    let mut cfg = match &cli.config {
        Some(path) => load_config(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn command(cmd: &Cmd) -> Command {
    match cmd {
        Cmd::Static => Command::Static,
        Cmd::Hollow => Command::Hollow,
        Cmd::Meanfield => Command::Meanfield,
        Cmd::Abm { replications } => Command::Abm { replications: *replications },
        Cmd::Calibrate => Command::Calibrate,
        Cmd::Policy => Command::Policy,
        Cmd::Reproduce => Command::Reproduce,
        Cmd::Verify { .. } => unreachable!("verify does not run a pipeline"),
    }
}

fn report(checks: &[Check]) -> ExitCode {
    for c in checks {
        emit(&c.line());
    }
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.id.to_string()).collect();
    emit(&format!("{} of {} criteria passed", checks.len() - failed.len(), checks.len()));
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        fail("criteria_failed", format!("criteria {} failed", failed.join(", ")))
    }
}

fn verify(dir: &Path) -> ExitCode {
    match suite::verify_reproduction(dir) {
        Ok(check) => report(std::slice::from_ref(&check)),
        Err(e) => fail(e.kind(), e),
    }
}

fn run(cli: Cli) -> Result<ExitCode, Error> {
    if let Cmd::Verify { dir } = &cli.command {
        return Ok(verify(dir));
    }
    let cfg = resolve(&cli)?;
    let inv = Invocation { command: command(&cli.command), format: cli.format.into(), plots: cli.plots };
    let output = execute(&inv, &cfg)?;
    if let Some(dir) = &cli.out {
        write_tree(dir, &output.files, &RunManifest::new(inv, &cfg, &output.files))?;
    }
    if inv.command != Command::Reproduce {
        emit(&serde_json::to_string_pretty(&output.summary)?);
        return Ok(ExitCode::SUCCESS);
    }
    let mut checks: Vec<Check> = serde_json::from_value(output.summary["checks"].clone())?;
    checks.push(match &cli.out {
        Some(dir) => suite::verify_reproduction(dir)?,
        None => suite::verify_rerun(&inv, &cfg, &output.files)?,
    });
    Ok(report(&checks))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = write!(std::io::stdout().lock(), "{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail("usage", e.to_string().trim_end()),
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => fail(e.kind(), e),
    }
}
