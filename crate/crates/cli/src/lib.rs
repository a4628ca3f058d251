//! Command-line front end for `credbond`: JSON-configured pricing, CSV
//! sweeps and the oracle verification harness.
//!
//! Exit codes: 0 success, 2 configuration error, 3 model-domain error,
//! 4 failed verification.

pub mod config;
pub mod error;
pub mod price;
pub mod sweep;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::json;

pub use config::{Axis, RunConfig, SweepConfig, VerifyConfig};
pub use error::{CliError, CliResult};
pub use price::{Instrument, PriceOutput};
pub use verify::{Report, Suite};

#[derive(Debug, Parser)]
#[command(name = "credbond", version, about = "Defaultable zero-coupon bonds with embedded options")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Price one instrument at the configured point and print JSON.
    Price {
        instrument: Instrument,
        #[arg(long)]
        config: PathBuf,
        /// Spaces per indentation level; 0 prints compact JSON.
        #[arg(long, default_value_t = 2)]
        json_indent: usize,
    },
    /// Price one instrument over a grid of one variable and print CSV.
    Sweep {
        instrument: Instrument,
        #[arg(long)]
        config: PathBuf,
        /// Overrides `sweep.axis` from the configuration.
        #[arg(long)]
        axis: Option<Axis>,
        #[arg(long, allow_negative_numbers = true)]
        lo: Option<f64>,
        #[arg(long, allow_negative_numbers = true)]
        hi: Option<f64>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Compare closed forms with the numerical oracles and print a JSON report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        suite: Suite,
        /// Overrides `verify.seed` (which defaults to 0).
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        paths: Option<u64>,
        #[arg(long)]
        steps_per_year: Option<usize>,
        /// Worker threads for the Monte-Carlo engines; results do not depend on it.
        #[arg(long)]
        threads: Option<usize>,
    },
}

/// What a command writes to standard output, and its exit code.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

fn resolve_sweep(
    config: &RunConfig,
    axis: Option<Axis>,
    lo: Option<f64>,
    hi: Option<f64>,
    n: Option<usize>,
) -> CliResult<SweepConfig> {
    let base = config.sweep;
    let pick = |flag: Option<f64>, from: Option<f64>, name: &str| {
        flag.or(from).ok_or_else(|| CliError::Config(format!("sweep.{name}: pass --{name} or set it in the configuration")))
    };
    Ok(SweepConfig {
        axis: axis
            .or(base.map(|s| s.axis))
            .ok_or_else(|| CliError::Config("sweep.axis: pass --axis or set it in the configuration".into()))?,
        lo: pick(lo, base.map(|s| s.lo), "lo")?,
        hi: pick(hi, base.map(|s| s.hi), "hi")?,
        n: n.or(base.map(|s| s.n))
            .ok_or_else(|| CliError::Config("sweep.n: pass --n or set it in the configuration".into()))?,
    })
}

/// Executes a parsed command.
pub fn execute(command: Command) -> CliResult<String> {
    match command {
        Command::Price { instrument, config, json_indent } => {
            let config = RunConfig::load(&config)?;
            let out = price::price(&config, instrument)?;
            Ok(price::to_json(&out, json_indent) + "\n")
        }
        Command::Sweep { instrument, config, axis, lo, hi, n } => {
            let config = RunConfig::load(&config)?;
            let spec = resolve_sweep(&config, axis, lo, hi, n)?;
            sweep::sweep(&config, instrument, &spec)
        }
        Command::Verify { config, suite, seed, paths, steps_per_year, threads } => {
            let config = RunConfig::load(&config)?;
            let mut settings = config.verify_settings();
            settings.seed = seed.unwrap_or(settings.seed);
            settings.paths = paths.unwrap_or(settings.paths);
            settings.steps_per_year = steps_per_year.unwrap_or(settings.steps_per_year);
            let run = || verify::verify(&config, suite, settings);
            let report = match threads {
                Some(n) => rayon::ThreadPoolBuilder::new()
                    .num_threads(n.max(1))
                    .build()
                    .map_err(|err| CliError::Config(format!("--threads: {err}")))?
                    .install(run)?,
                None => run()?,
            };
            let text = price::to_json(&report, 2) + "\n";
            if report.passed {
                Ok(text)
            } else {
                Err(CliError::Verification { failed: report.n_failed, total: report.n_checks, report: text })
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 2 } else { 0 };
            let text = err.render().to_string();
            return if code == 0 {
                Outcome { stdout: text, stderr: String::new(), code }
            } else {
                Outcome { stdout: String::new(), stderr: text, code }
            };
        }
    };
    match execute(cli.command) {
        Ok(stdout) => Outcome { stdout, stderr: String::new(), code: 0 },
        Err(err) => {
            let code = err.exit_code();
            match err {
                CliError::Domain(inner) => {
                    let body = json!({ "error": inner.name(), "message": inner.to_string() });
                    Outcome { stdout: format!("{body}\n"), stderr: format!("error: {inner}\n"), code }
                }
                CliError::Verification { failed, total, report } => Outcome {
                    stdout: report,
                    stderr: format!("error: verification failed: {failed} of {total} checks did not pass\n"),
                    code,
                },
                other => Outcome { stdout: String::new(), stderr: format!("error: {other}\n"), code },
            }
        }
    }
}
