//! Command-line front end. Flags override keys of the TOML config and
//! share their names (`--pam-k` sets `pam_k`, `--k` sets `lda.k`).
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

use std::ffi::OsString;
use std::path::PathBuf;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::error::Result;
use crate::geo::Metric;
use crate::pipeline::{self, PipelineConfig};

#[derive(Debug, Parser)]
#[command(name = "petitions", version, about = "Opinion mining for e-petition archives")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Filter the archive into a corpus snapshot and a rejects report.
    Ingest,
    /// Build the document-term matrix and fit the topic model.
    Fit,
    /// Run issue, temporal, geographic and power-law analyses.
    Report,
    /// Score word-intrusion answers against the answer key.
    IntrusionScore {
        /// CSV of `topic,subject,position` answers.
        #[arg(long)]
        answers: PathBuf,
        /// Answer key; defaults to the one written by `fit`.
        #[arg(long)]
        key: Option<PathBuf>,
    },
    /// Held-out likelihood sweep over k, alpha and beta.
    Grid {
        #[arg(long, value_delimiter = ',')]
        ks: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        betas: Option<Vec<f64>>,
        #[arg(long)]
        heldout_fraction: Option<f64>,
    },
    /// Fit the power-law tail at several x_min values.
    XminScan {
        #[arg(long, value_delimiter = ',')]
        candidates: Option<Vec<u64>>,
    },
}

#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[arg(long, global = true)]
    pub archive: Option<PathBuf>,
    #[arg(long, global = true)]
    pub constituencies: Option<PathBuf>,
    #[arg(long, global = true)]
    pub stopwords: Option<PathBuf>,
    #[arg(long, global = true)]
    pub topic_names: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    pub window_start: Option<NaiveDate>,
    #[arg(long, global = true)]
    pub window_end: Option<NaiveDate>,
    #[arg(long, global = true)]
    pub k: Option<usize>,
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    #[arg(long, global = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true)]
    pub iterations: Option<usize>,
    #[arg(long, global = true)]
    pub burn_in: Option<usize>,
    #[arg(long, global = true)]
    pub thin: Option<usize>,
    #[arg(long, global = true)]
    pub min_doc_fraction: Option<f64>,
    #[arg(long, global = true)]
    pub entropy_window_days: Option<usize>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub smoothing_windows: Option<Vec<usize>>,
    #[arg(long, global = true)]
    pub pam_k: Option<usize>,
    #[arg(long, global = true, value_parser = parse_metric)]
    pub pam_metric: Option<Metric>,
    #[arg(long, global = true)]
    pub powerlaw_x_min: Option<u64>,
    #[arg(long, global = true, value_delimiter = ',')]
    pub thresholds: Option<Vec<u64>>,
}

fn parse_metric(s: &str) -> std::result::Result<Metric, String> {
    match s {
        "euclidean" => Ok(Metric::Euclidean),
        "manhattan" => Ok(Metric::Manhattan),
        _ => Err(format!("unknown metric {s:?} (euclidean, manhattan)")),
    }
}

impl Overrides {
    pub fn apply(&self, cfg: &mut PipelineConfig) {
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = &self.$flag { cfg.$($field).+ = v.clone(); })*
            };
        }
        set!(
            seed => seed,
            threads => threads,
            output_dir => paths.output_dir,
            window_start => window_start,
            window_end => window_end,
            k => lda.k,
            alpha => lda.alpha,
            beta => lda.beta,
            iterations => lda.iterations,
            burn_in => lda.burn_in,
            thin => lda.thin,
            min_doc_fraction => min_doc_fraction,
            entropy_window_days => entropy_window_days,
            smoothing_windows => smoothing_windows,
            pam_k => pam_k,
            pam_metric => pam_metric,
            powerlaw_x_min => powerlaw_x_min,
            thresholds => thresholds,
        );
        for (flag, field) in [
            (&self.archive, &mut cfg.paths.archive),
            (&self.constituencies, &mut cfg.paths.constituencies),
            (&self.stopwords, &mut cfg.paths.stopwords),
            (&self.topic_names, &mut cfg.paths.topic_names),
        ] {
            if flag.is_some() {
                *field = flag.clone();
            }
        }
    }
}

fn resolve(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_toml_file(p)?,
        None => PipelineConfig::default(),
    };
    cli.overrides.apply(&mut cfg);
    match &cli.command {
        Command::Grid {
            ks,
            alphas,
            betas,
            heldout_fraction,
        } => {
            if let Some(v) = ks {
                cfg.grid.ks = v.clone();
            }
            if let Some(v) = alphas {
                cfg.grid.alphas = v.clone();
            }
            if let Some(v) = betas {
                cfg.grid.betas = v.clone();
            }
            if let Some(v) = heldout_fraction {
                cfg.grid.heldout_fraction = *v;
            }
        }
        Command::XminScan { candidates: Some(c) } => cfg.xmin_candidates = c.clone(),
        _ => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let cfg = resolve(cli)?;
    match &cli.command {
        Command::Ingest => print_json(&pipeline::run_ingest(&cfg)?),
        Command::Fit => print_json(&pipeline::run_fit(&cfg)?),
        Command::Report => {
            pipeline::run_report(&cfg)?;
            println!("{}", cfg.paths.output_dir.join(pipeline::files::SUMMARY).display());
            Ok(())
        }
        Command::IntrusionScore { answers, key } => {
            print_json(&pipeline::run_intrusion_score(&cfg, answers, key.as_deref())?)
        }
        Command::Grid { .. } => print_json(&pipeline::run_grid(&cfg)?),
        Command::XminScan { .. } => print_json(&pipeline::run_xmin_scan(&cfg)?),
    }
}

/// Parses arguments, runs the subcommand and returns the exit code.
pub fn run<I, T>(args: I) -> i32
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
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
