use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::{Experiment, ExperimentConfig, RawConfig};
use crate::error::LabError;
use crate::experiments::run;
use crate::parallel::RayonExecutor;

#[derive(Debug, Parser)]
#[command(
    name = "sde-tv-lab",
    version,
    about = "Small-time TV and W1 rates of SDEs against their one-step Euler proxies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML file with flat `key = value` settings; flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: RawConfig,
}

#[derive(Debug, Clone, Copy, Subcommand)]
pub enum Command {
    /// Exact Richardson-Romberg weights of order r.
    Weights,
    /// TV between GBM and its one-step Euler law over a time grid.
    Counterexample,
    /// TV between a model and its Euler proxy (or a second model).
    TvCurve,
    /// W1, exact or as a coupled Monte Carlo bound.
    W1Curve,
    /// Error of the extrapolated smoothed expectation against eps.
    SmoothingOrder,
    /// Fokker-Planck density of a model at time t.
    FokkerPlanck,
    /// Gaussian envelope fitted to a Fokker-Planck density.
    Envelope,
}

impl From<Command> for Experiment {
    fn from(c: Command) -> Self {
        match c {
            Command::Weights => Experiment::Weights,
            Command::Counterexample => Experiment::Counterexample,
            Command::TvCurve => Experiment::TvCurve,
            Command::W1Curve => Experiment::W1Curve,
            Command::SmoothingOrder => Experiment::SmoothingOrder,
            Command::FokkerPlanck => Experiment::FokkerPlanck,
            Command::Envelope => Experiment::Envelope,
        }
    }
}

/// Effective configuration: file first, then flags.
pub fn resolve(cli: &Cli) -> Result<ExperimentConfig, LabError> {
    let file = match &cli.config {
        Some(path) => RawConfig::load(path)?,
        None => RawConfig::default(),
    };
    ExperimentConfig::resolve(cli.command.into(), file.overlay(cli.overrides.clone()))
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.toml");
    out.with_file_name(name)
}

fn write_file(path: &Path, contents: &str) -> Result<(), LabError> {
    std::fs::write(path, contents).map_err(|source| LabError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs one command; returns the process exit status.
pub fn execute(cli: &Cli) -> Result<(), LabError> {
    let started = Instant::now();
    let cfg = resolve(cli)?;
    let exec = RayonExecutor::new(cfg.threads)
        .map_err(|e| LabError::Config(format!("invalid value for key `threads`: {e}")))?;
    let result = run(&cfg, &exec)?;
    write_file(&cfg.out, &result.csv)?;
    let manifest = format!(
        "# sde-tv-lab {} manifest; rerun with --config <this file>\n# csv = {:?}\n# threads = {}\n# wall_time_s = {:.3}\n{}",
        env!("CARGO_PKG_VERSION"),
        cfg.out.display().to_string(),
        exec.threads(),
        started.elapsed().as_secs_f64(),
        cfg.to_toml()
    );
    write_file(&manifest_path(&cfg.out), &manifest)?;
    let stderr = std::io::stderr();
    let mut err = stderr.lock();
    for w in &result.warnings {
        let _ = writeln!(err, "warning: {w}");
    }
    println!("{}", result.headline);
    Ok(())
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                crate::error::EXIT_CONFIG
            } else {
                0
            };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
