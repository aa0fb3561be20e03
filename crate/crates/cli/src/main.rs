use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use plasmaball_cli::commands::{self, format_check};
use plasmaball_cli::config::{Overrides, RunConfig, ENV_OUT, ENV_THREADS};
use serde::Serialize;

const EXIT_FAILED: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "plasmaball", version, about = "Constrained plasma problem on unit-volume balls")]
#[command(after_help = format!("Environment: {ENV_OUT} sets the output directory, {ENV_THREADS} the worker count.\nPrecedence: defaults < --config file < environment < flags."))]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// `key = value` config file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, short = 'N', global = true)]
    dimension: Option<usize>,
    #[arg(long, short = 'p', global = true)]
    exponent: Option<f64>,
    /// Number of radial cells M
    #[arg(long, short = 'M', global = true)]
    grid: Option<usize>,
    /// End of the λ range (default 5λ₊; 3λ₊ for verify)
    #[arg(long, global = true)]
    lambda_max: Option<f64>,
    /// λ spacing (default: 40 points)
    #[arg(long, global = true)]
    lambda_step: Option<f64>,
    /// Highest angular sector for σ₁
    #[arg(long, global = true)]
    lmax: Option<usize>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance of the multiplier-identity check
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Emden solution on the unit ball and λ₊ in closed form
    Emden,
    /// λ₊ from the closed form and from continuation
    LambdaPlus,
    /// Branch sweep with σ₁; writes CSV and JSON
    Branch,
    /// Nonlocal spectrum at one λ
    Spectrum {
        /// Default λ₊
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Best constants and the λ₀, λ₁ thresholds
    Sobolev,
    /// Free-energy minimization against the branch
    Variational {
        /// Default λ₊
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Every check for the configured (N, p); exit 0 iff all pass
    Verify,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            dimension: self.dimension,
            exponent: self.exponent,
            grid: self.grid,
            lambda_max: self.lambda_max,
            lambda_step: self.lambda_step,
            lmax: self.lmax,
            tol: self.tol,
            seed: self.seed,
            out: self.out.clone(),
            threads: None,
        }
    }
}

fn load(common: &Common) -> Result<RunConfig, String> {
    let file = match &common.config {
        Some(p) => Overrides::from_file(p).map_err(|e| e.to_string())?,
        None => Overrides::default(),
    };
    let env = Overrides::from_env().map_err(|e| e.to_string())?;
    RunConfig::resolve(file.merge(env).merge(common.overrides())).map_err(|e| e.to_string())
}

fn print<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable summary"));
}

fn run(cli: &Cli, cfg: &RunConfig) -> Result<bool, commands::RunError> {
    match &cli.command {
        Command::Emden => print(&commands::run_emden(cfg)?),
        Command::LambdaPlus => print(&commands::run_lambda_plus(cfg)?),
        Command::Branch => {
            let (_, summary) = commands::run_sweep(cfg)?;
            print(&summary);
        }
        Command::Spectrum { lambda } => print(&commands::run_spectrum(cfg, *lambda)?),
        Command::Sobolev => print(&commands::run_sobolev(cfg)?),
        Command::Variational { lambda } => print(&commands::run_variational(cfg, *lambda)?),
        Command::Verify => {
            let report = commands::run_verify(cfg)?;
            for c in &report.checks {
                println!("{}", format_check(c));
            }
            println!("{} passed, {} failed", report.passed, report.failed);
            return Ok(report.all_passed);
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli.common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    if let Some(n) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("cannot set worker count: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    }
    match run(&cli, &cfg) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_FAILED)
        }
    }
}
