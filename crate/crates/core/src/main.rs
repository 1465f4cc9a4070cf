use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nbanach::harness::{parse_config, run_suite, Group, RunConfig};
use nbanach::scalar::ArithmeticMode;

/// Executable checks for n-normed spaces and n-Banach algebras.
///
/// The JSON report goes to stdout and a summary to stderr. Exit status: 0 when
/// every check passes or has its hypotheses violated, 1 on a failed check,
/// 2 on a config error.
#[derive(Parser)]
#[command(name = "nbanach", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// n-norm axioms N1-N4 (and Cauchy-Schwarz on gram instances).
    CheckAxioms(Common),
    /// Neumann series, openness, inversion bounds and group laws.
    Invert(Common),
    /// Resolvent expansion `(lambda e - x)^-1`.
    Resolvent(Common),
    /// Topological-divisor-of-zero scan over singular samples.
    TdzScan(Common),
    /// Homomorphism lemma and both GKZ directions.
    Gkz(Common),
    /// Multiplicativity, anchor-scaling and dependent-summand audits.
    Audit(Common),
    /// The configured checks, or the instance's default suite.
    Run(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; defaults to pointwise C^4 with n = 3.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    /// Exact rational arithmetic.
    #[arg(long)]
    exact: bool,
}

fn load(common: &Common) -> Result<RunConfig, String> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            parse_config(&text).map_err(|e| e.to_string())?
        }
        None => RunConfig::default_pointwise(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(samples) = common.samples {
        cfg.samples = samples;
    }
    if let Some(tol) = common.tol {
        if !(tol >= 0.0) {
            return Err(format!("--tol must be nonnegative, got {tol}"));
        }
        cfg.tolerance = tol;
    }
    if common.exact {
        cfg.arithmetic_mode = ArithmeticMode::Exact;
    }
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (group, common) = match &cli.command {
        Command::CheckAxioms(c) => (Group::CheckAxioms, c),
        Command::Invert(c) => (Group::Invert, c),
        Command::Resolvent(c) => (Group::Resolvent, c),
        Command::TdzScan(c) => (Group::TdzScan, c),
        Command::Gkz(c) => (Group::Gkz, c),
        Command::Audit(c) => (Group::Audit, c),
        Command::Run(c) => (Group::Run, c),
    };
    let cfg = load(common).and_then(|mut cfg| {
        cfg.select_group(group).map_err(|e| e.to_string())?;
        Ok(cfg)
    });
    let cfg = match cfg {
        Ok(cfg) => cfg,
        Err(msg) => {
            eprintln!("config error:\n{msg}");
            return ExitCode::from(2);
        }
    };
    let report = run_suite(&cfg);
    println!("{}", report.to_json_string());
    eprint!("{}", report.human_summary());
    ExitCode::from(report.exit_code() as u8)
}
