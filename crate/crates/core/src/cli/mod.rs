//! The `mlmc-ddp` command-line tool.
//!
//! Every command reads a TOML [`RunConfig`]; flags override the
//! corresponding config entries. Exit codes are 0 on success, 2 for invalid
//! configuration or input files, 3 when a tolerance is infeasible, 4 when a
//! solver fails and 1 for I/O errors.

mod commands;
mod config;
mod summary;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use thiserror::Error;

pub use commands::{
    cmd_calibrate, cmd_compare, cmd_estimate, cmd_optimize, curve_path, estimate_path, plan_path, read_json, to_json,
    write_json, EstimateResult, LevelReport, PlanFile, COMPARISON_FILE, ERROR_FILE, REPORT_FILE, SUMMARY_FILE,
    TIMING_FILE, VARIANCE_FILE,
};
pub use config::{check_tolerances, load_constants, Constants, RunConfig};
pub use summary::{
    compare, read_summary_csv, write_comparison_csv, write_summary_csv, Comparison, SummaryRow, SUMMARY_HEADER,
};

use crate::optimizer::Variant;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("join error: {0}")]
    Join(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => 1,
            CliError::Config(_) | CliError::Join(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    Mc,
    Geo,
    Free,
    All,
}

impl VariantArg {
    pub fn variants(self) -> Vec<Variant> {
        match self {
            VariantArg::Mc => vec![Variant::Mc],
            VariantArg::Geo => vec![Variant::Geometric],
            VariantArg::Free => vec![Variant::Free],
            VariantArg::All => vec![Variant::Mc, Variant::Geometric, Variant::Free],
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "mlmc-ddp",
    version,
    about = "MC/MLMC estimation and cost-optimal hierarchies for the stochastic drift-diffusion-Poisson system"
)]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Comma-separated absolute tolerances, largest first.
    #[arg(long, global = true, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    #[arg(long, global = true, value_enum)]
    pub variant: Option<VariantArg>,
    #[arg(long, global = true)]
    pub lmax: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit the error and cost models.
    Calibrate,
    /// Optimal MC and MLMC hierarchies for every tolerance.
    Optimize {
        /// Calibration report or constants JSON; defaults to the inline
        /// constants of the config, then to `<out>/calibration.json`.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Run a plan on the device sampler.
    Estimate {
        #[arg(long)]
        plan: PathBuf,
        /// Constants used for the wall-clock prediction and the error budget.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Join summary tables by tolerance.
    Compare {
        #[arg(required = true, num_args = 2..)]
        summaries: Vec<PathBuf>,
    },
}

impl Cli {
    /// Config file (or defaults) with the flags applied.
    pub fn run_config(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(e) = &self.eps {
            cfg.tolerances = e.clone();
            cfg.relative_tolerances = false;
        }
        if let Some(v) = self.variant {
            cfg.variants = v.variants();
        }
        if let Some(l) = self.lmax {
            cfg.l_max = l;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        if let Some(t) = self.threads {
            cfg.threads = t;
        }
        Ok(cfg)
    }
}

fn constants(cfg: &RunConfig, report: Option<&PathBuf>) -> Result<Option<Constants>, CliError> {
    match (report, &cfg.constants) {
        (Some(p), _) => load_constants(p).map(Some),
        (None, Some(c)) => Ok(Some(c.clone())),
        (None, None) => {
            let p = cfg.out.join(REPORT_FILE);
            if p.exists() {
                load_constants(&p).map(Some)
            } else {
                Ok(None)
            }
        }
    }
}

/// Executes one parsed command line.
pub fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = cli.run_config()?;
    match &cli.command {
        Command::Calibrate => {
            if let Some(r) = cmd_calibrate(&cfg, cli.dry_run)? {
                let m = r.error_model;
                println!(
                    "α = {:.4}, C1 = {:.4e}, β = {:.4}, C0 = {:.4e}, C00 = {:.4e}; report in {}",
                    m.alpha,
                    m.c1,
                    m.beta,
                    m.c0,
                    m.c00,
                    cfg.out.join(REPORT_FILE).display()
                );
            }
            Ok(())
        }
        Command::Optimize { report } => {
            let c = constants(&cfg, report.as_ref())?.ok_or_else(|| {
                CliError::Config("no constants: pass --report, add [constants] to the config or run calibrate".into())
            })?;
            let eps = cfg.resolve_tolerances(&c);
            let rows = cmd_optimize(&cfg, &c, &eps, cli.dry_run)?;
            for r in &rows {
                match r.work {
                    Some(w) => println!(
                        "ε = {:e} {:>9} L = {} work = {w:.6e}",
                        r.epsilon,
                        r.variant.label(),
                        r.levels.unwrap_or(0)
                    ),
                    None => println!("ε = {:e} {:>9} {}", r.epsilon, r.variant.label(), r.status),
                }
            }
            let infeasible = rows.iter().filter(|r| r.status.starts_with("infeasible")).count();
            let failed = rows.iter().filter(|r| !r.is_ok()).count() - infeasible;
            if infeasible > 0 {
                Err(CliError::Infeasible(format!("{infeasible} tolerance/variant pairs are infeasible")))
            } else if failed > 0 {
                Err(CliError::Solver(format!("{failed} tolerance/variant pairs failed")))
            } else {
                Ok(())
            }
        }
        Command::Estimate { plan, report } => {
            let c = constants(&cfg, report.as_ref())?;
            if let Some(r) = cmd_estimate(&cfg, plan, c.as_ref(), cli.dry_run)? {
                println!(
                    "mean = {:.6e}, statistical error = {:.3e}{}",
                    r.mean,
                    r.statistical_error,
                    r.statistical_budget.map(|b| format!(" (budget {b:.3e})")).unwrap_or_default()
                );
            }
            Ok(())
        }
        Command::Compare { summaries } => {
            let path = cmd_compare(&cfg, summaries, cli.dry_run)?;
            if !cli.dry_run {
                println!("wrote {}", path.display());
            }
            Ok(())
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("mlmc-ddp: {e}");
            e.exit_code()
        }
    }
}
