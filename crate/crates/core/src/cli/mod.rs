//! The `weathermatrix` command.
//!
//! Exit codes: 0 ok, 1 validation findings or a partial failure, 2 I/O,
//! parse, configuration or missing-data errors.
//!
//! [`run`] takes the argument list, an environment lookup and the two
//! output streams so the whole command can be driven from tests.

mod commands;
pub mod config;
pub mod store;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::Error;

pub use config::{Resolved, SiteConfig, Source, ThresholdFlags, ThresholdOverrides};
pub use store::Store;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "weathermatrix", version, about = "Heritage-stone monitoring data to alteration matrices")]
pub struct Cli {
    /// Root of the artifact store; relative paths resolve against it.
    #[arg(long, global = true, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub site: Option<String>,
    /// Site config file (default: <data-dir>/<site>/site.json).
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// IANA timezone for local timestamps and calendar days.
    #[arg(long, global = true)]
    pub timezone: Option<String>,
    /// Tabular output format.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Echo resolved settings and their sources.
    #[arg(short, long, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Default, Clone)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub freeze_threshold: Option<f64>,
    #[arg(long)]
    pub freeze_hysteresis: Option<f64>,
    #[arg(long)]
    pub condensation_hysteresis: Option<f64>,
    /// RH threshold (%) for the high-humidity day count.
    #[arg(long)]
    pub rh_threshold: Option<f64>,
    /// Water content (%) above which masonry counts as soaked.
    #[arg(long)]
    pub soaking_wet: Option<f64>,
    #[arg(long)]
    pub soaking_dry: Option<f64>,
}

impl ThresholdArgs {
    fn flags(&self) -> ThresholdFlags {
        ThresholdFlags {
            freeze_threshold: self.freeze_threshold,
            freeze_hysteresis: self.freeze_hysteresis,
            condensation_hysteresis: self.condensation_hysteresis,
            rh_day_threshold: self.rh_threshold,
            soaking_wet: self.soaking_wet,
            soaking_dry: self.soaking_dry,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded synthetic site: registries, config, logger files and
    /// two campaigns under <site>/inputs.
    Fixture {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 182)]
        days: u32,
        #[arg(long, default_value = "2024-04-16")]
        start: NaiveDate,
        /// Log every sensor at 20 min, the fissurometer included.
        #[arg(long)]
        all_20min: bool,
        /// Overwrite existing files that differ.
        #[arg(long)]
        force: bool,
    },
    /// Parse sensor logs (files or directories of .csv) into the store.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
    },
    /// Period summary, event counts and face comparison over stored series.
    Events {
        /// First local day (default: first stored day).
        #[arg(long)]
        from: Option<NaiveDate>,
        /// Last local day, inclusive (default: last stored day).
        #[arg(long)]
        to: Option<NaiveDate>,
        /// Compare two faces, e.g. `NE,SW`.
        #[arg(long, value_name = "A,B")]
        faces: Option<String>,
        /// Also write one SVG plot per sensor with events.
        #[arg(long)]
        svg: bool,
        #[command(flatten)]
        thresholds: ThresholdArgs,
    },
    #[command(subcommand)]
    Campaign(CampaignCmd),
    /// Per-block sub-indices and general weathering index for a campaign.
    Index {
        /// Campaign id (default: latest stored).
        #[arg(long)]
        campaign: Option<String>,
    },
    #[command(subcommand)]
    Matrix(MatrixCmd),
    /// Human-readable summary of a campaign's matrix.
    Report {
        #[arg(long)]
        campaign: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum CampaignCmd {
    /// Print validation findings without storing.
    Validate { file: PathBuf },
    /// Validate and store when there are no findings.
    Add { file: PathBuf },
}

#[derive(Debug, Subcommand)]
pub enum MatrixCmd {
    /// Build and store the matrix for a campaign.
    Build {
        #[arg(long)]
        campaign: Option<String>,
        /// Climate window length in days before the campaign (default:
        /// since the previous campaign, or 182 days for the first).
        #[arg(long)]
        lookback_days: Option<u32>,
        /// Matrix schema JSON (default: built-in).
        #[arg(long, value_name = "FILE")]
        schema: Option<PathBuf>,
        #[command(flatten)]
        thresholds: ThresholdArgs,
    },
    /// Write a stored matrix as CSV (+ metadata sidecar) or JSON.
    Export {
        #[arg(long)]
        campaign: Option<String>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Read an exported matrix back, validate it and print its hash.
    Import {
        file: PathBuf,
        /// Metadata sidecar for CSV input (default: <file>.meta.json).
        #[arg(long, value_name = "FILE")]
        sidecar: Option<PathBuf>,
        /// Record the imported matrix in the store.
        #[arg(long)]
        store: bool,
    },
    /// Per-block changes between two stored matrices (default: the last two).
    Diff { older: Option<String>, newer: Option<String> },
}

/// Exit status of a command that ran to completion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    Findings,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_FINDINGS: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;

fn exit_code(r: &crate::Result<Outcome>) -> i32 {
    match r {
        Ok(Outcome::Ok) => EXIT_OK,
        Ok(Outcome::Findings) | Err(Error::UnvalidatedCampaign { .. }) => EXIT_FINDINGS,
        Err(_) => EXIT_FAILURE,
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I, env: &dyn Fn(&str) -> Option<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FAILURE } else { EXIT_OK };
            let _ = if e.use_stderr() {
                write!(err, "{}", e.render())
            } else {
                write!(out, "{}", e.render())
            };
            return code;
        }
    };
    let result = commands::dispatch(&cli, env, out, err);
    if let Err(e) = &result {
        let _ = writeln!(err, "error: {e}");
    }
    exit_code(&result)
}

/// Entry point for the binary: real arguments and environment.
pub fn main_exit_code() -> i32 {
    let env = |k: &str| std::env::var(k).ok();
    run(std::env::args_os(), &env, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
