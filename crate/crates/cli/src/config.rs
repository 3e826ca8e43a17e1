//! Command-line parsing and config resolution.
//!
//! Every setting is resolved in the order: flag, config file, the
//! `RANDCORR_SEED` environment variable (seed only), built-in default.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use randcorr::Pathway;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::CliError;

pub const SEED_ENV: &str = "RANDCORR_SEED";
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_N: usize = 2000;
pub const DEFAULT_ETA: f64 = 1.0;
pub const DEFAULT_BINS: usize = 40;
pub const DEFAULT_TRIALS: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "randcorr",
    version,
    about = "Seeded experiments on determinants of random correlation matrices"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Single dimension (at least 2).
    #[arg(long, global = true, conflicts_with = "d_grid")]
    pub d: Option<usize>,
    /// Comma-separated list of dimensions.
    #[arg(long = "d-grid", global = true, value_delimiter = ',')]
    pub d_grid: Option<Vec<usize>>,
    /// LKJ concentration; values below 1 need --extrapolated.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Monte Carlo sample count.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Master seed; falls back to RANDCORR_SEED, then 42.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Sampling threads; output does not depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output file; standard output when absent.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Flat JSON object of settings, overridden by explicit flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Allow 0 < eta < 1 where the closed forms still converge.
    #[arg(long, global = true)]
    pub extrapolated: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample correlation matrices; emit entries or a pooled entry histogram.
    SampleMatrix {
        #[arg(long, value_enum)]
        emit: Option<Emit>,
        #[arg(long)]
        bins: Option<usize>,
    },
    /// Sample log-determinants along one pathway.
    SampleDet {
        #[arg(long, value_parser = parse_pathway)]
        method: Option<Pathway>,
    },
    /// Closed-form moment report per dimension.
    Moments {
        /// Comma-separated MGF arguments.
        #[arg(long = "t-grid", value_delimiter = ',', allow_negative_numbers = true)]
        t_grid: Option<Vec<f64>>,
    },
    /// Convergence of the d-th root moments towards 1/e.
    Converge,
    /// Normal approximation of (ln D + d)/sqrt(ln d).
    Clt,
    /// KS check of single entries against their symmetric Beta law.
    Marginals,
    /// Vine versus Cholesky log-determinant and partial round-trip.
    Validate {
        #[arg(long)]
        trials: Option<usize>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::SampleMatrix { .. } => "sample-matrix",
            Command::SampleDet { .. } => "sample-det",
            Command::Moments { .. } => "moments",
            Command::Converge => "converge",
            Command::Clt => "clt",
            Command::Marginals => "marginals",
            Command::Validate { .. } => "validate",
        }
    }

    fn default_grid(&self) -> Vec<usize> {
        match self {
            Command::Converge => vec![10, 100, 1000, 10_000, 100_000],
            Command::Clt => vec![300, 400, 500],
            Command::Validate { .. } => (3..=15).collect(),
            _ => vec![10],
        }
    }
}

fn parse_pathway(s: &str) -> Result<Pathway, String> {
    s.parse().map_err(|e: randcorr::Error| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Matrices,
    Histogram,
}

impl Emit {
    pub fn as_str(self) -> &'static str {
        match self {
            Emit::Matrices => "matrices",
            Emit::Histogram => "histogram",
        }
    }
}

/// Contents of a `--config` file. Unknown keys are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    d: Option<usize>,
    d_grid: Option<Vec<usize>>,
    eta: Option<f64>,
    n: Option<usize>,
    seed: Option<u64>,
    workers: Option<usize>,
    output: Option<PathBuf>,
    format: Option<Format>,
    extrapolated: Option<bool>,
    emit: Option<Emit>,
    bins: Option<usize>,
    method: Option<String>,
    t_grid: Option<Vec<f64>>,
    trials: Option<usize>,
}

fn read_file_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("reading {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("parsing {}: {e}", path.display())))
}

/// Fully resolved settings for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub command: &'static str,
    pub d_grid: Vec<usize>,
    pub eta: f64,
    pub n: usize,
    pub seed: u64,
    pub workers: usize,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub extrapolated: bool,
    pub emit: Emit,
    pub bins: usize,
    pub method: Pathway,
    pub t_grid: Vec<f64>,
    pub trials: usize,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|e| CliError::Config(format!("{SEED_ENV}={v:?}: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(CliError::Config(format!("{SEED_ENV}: {e}"))),
    }
}

impl ExperimentConfig {
    pub fn resolve(cli: &Cli) -> Result<Self, CliError> {
        let args = &cli.common;
        let file = match &args.config {
            Some(path) => read_file_config(path)?,
            None => FileConfig::default(),
        };
        if file.d.is_some() && file.d_grid.is_some() {
            return Err(CliError::Config("config sets both d and d_grid".into()));
        }

        let flag_grid = args.d.map(|d| vec![d]).or_else(|| args.d_grid.clone());
        let file_grid = file.d.map(|d| vec![d]).or(file.d_grid);
        let d_grid = flag_grid
            .or(file_grid)
            .unwrap_or_else(|| cli.command.default_grid());

        let (emit_flag, bins_flag, method_flag, t_flag, trials_flag) = match &cli.command {
            Command::SampleMatrix { emit, bins } => (*emit, *bins, None, None, None),
            Command::SampleDet { method } => (None, None, *method, None, None),
            Command::Moments { t_grid } => (None, None, None, t_grid.clone(), None),
            Command::Validate { trials } => (None, None, None, None, *trials),
            _ => (None, None, None, None, None),
        };
        let file_method = file
            .method
            .as_deref()
            .map(|m| {
                m.parse::<Pathway>()
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .transpose()?;

        let config = Self {
            command: cli.command.name(),
            d_grid,
            eta: args.eta.or(file.eta).unwrap_or(DEFAULT_ETA),
            n: args.n.or(file.n).unwrap_or(DEFAULT_N),
            seed: match args.seed.or(file.seed) {
                Some(s) => s,
                None => env_seed()?.unwrap_or(DEFAULT_SEED),
            },
            workers: args
                .workers
                .or(file.workers)
                .unwrap_or_else(default_workers),
            output: args.output.clone().or(file.output),
            format: args.format.or(file.format).unwrap_or(Format::Csv),
            extrapolated: args.extrapolated || file.extrapolated.unwrap_or(false),
            emit: emit_flag.or(file.emit).unwrap_or(Emit::Matrices),
            bins: bins_flag.or(file.bins).unwrap_or(DEFAULT_BINS),
            method: method_flag.or(file_method).unwrap_or(Pathway::Direct),
            t_grid: t_flag
                .or(file.t_grid)
                .unwrap_or_else(|| randcorr::moments::DEFAULT_MGF_TS.to_vec()),
            trials: trials_flag.or(file.trials).unwrap_or(DEFAULT_TRIALS),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.d_grid.is_empty() {
            return bad("the dimension grid is empty".into());
        }
        if let Some(&d) = self.d_grid.iter().find(|&&d| d < 2) {
            return bad(format!("dimension {d} is below 2"));
        }
        if self.command == "clt" {
            if let Some(&d) = self.d_grid.iter().find(|&&d| d < 3) {
                return bad(format!("clt needs d >= 3, got {d}"));
            }
        }
        if !self.eta.is_finite() || self.eta <= 0.0 {
            return bad(format!("eta = {} must be positive", self.eta));
        }
        if self.eta < 1.0 && !self.extrapolated {
            return bad(format!(
                "eta = {} is below 1; pass --extrapolated",
                self.eta
            ));
        }
        if self.n == 0 {
            return bad("n must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if self.bins == 0 {
            return bad("bins must be at least 1".into());
        }
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if let Some(t) = self.t_grid.iter().find(|t| !t.is_finite()) {
            return bad(format!("t = {t} is not finite"));
        }
        let sampling = matches!(
            self.command,
            "sample-det" | "sample-matrix" | "clt" | "marginals" | "validate"
        );
        if sampling && self.eta < 1.0 {
            return bad("sampling requires eta >= 1".into());
        }
        if self.command == "sample-det" && self.method == Pathway::Double && self.eta != 1.0 {
            return bad("the double pathway only covers eta = 1".into());
        }
        if matches!(self.command, "clt" | "marginals") && self.n < randcorr::stats::KS_MIN_SAMPLE {
            return bad(format!(
                "KS tests need n >= {}",
                randcorr::stats::KS_MIN_SAMPLE
            ));
        }
        Ok(())
    }

    /// Resolved settings in a fixed order, for output headers. Settings that
    /// do not affect a subcommand's numbers are left out, and so is
    /// `workers`, which never changes sample content.
    pub fn metadata(&self) -> Vec<(String, Value)> {
        let mut meta = vec![
            ("tool".to_string(), json!("randcorr")),
            ("version".to_string(), json!(env!("CARGO_PKG_VERSION"))),
            ("command".to_string(), json!(self.command)),
            ("d_grid".to_string(), json!(self.d_grid)),
            ("eta".to_string(), json!(self.eta)),
        ];
        let sampling = matches!(
            self.command,
            "sample-det" | "sample-matrix" | "clt" | "marginals" | "validate"
        );
        if sampling {
            let count = if self.command == "validate" {
                self.trials
            } else {
                self.n
            };
            let key = if self.command == "validate" {
                "trials"
            } else {
                "n"
            };
            meta.push((key.to_string(), json!(count)));
            meta.push(("seed".to_string(), json!(self.seed)));
        }
        match self.command {
            "sample-matrix" => {
                meta.push(("emit".to_string(), json!(self.emit.as_str())));
                if self.emit == Emit::Histogram {
                    meta.push(("bins".to_string(), json!(self.bins)));
                }
            }
            "sample-det" => meta.push(("method".to_string(), json!(self.method.to_string()))),
            "moments" => meta.push(("t_grid".to_string(), json!(self.t_grid))),
            _ => {}
        }
        meta.push(("format".to_string(), json!(self.format.as_str())));
        meta
    }
}
