//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data or I/O error,
//! 4 some cross-validation cells failed.

mod commands;
mod config;
mod embeddings;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use commands::{
    cmd_gen, cmd_report, cmd_run, exit_code, gen, render_tables, report, run, summary_csv, write_outputs,
    write_plot_data, EXIT_CONFIG, EXIT_DATA, EXIT_OK, EXIT_PARTIAL,
};
pub use config::RunConfig;
pub use embeddings::{load_embeddings, read_embeddings, write_embeddings, write_embeddings_to};

#[derive(Debug, Parser)]
#[command(name = "streamal", version, about = "Streaming active learning on embedding vectors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Key-value config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Extra `key=value` overrides, applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the cross-validated stream experiment.
    Run {
        #[command(flatten)]
        common: Common,
        /// Worker threads (0 = all cores).
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic embeddings CSV.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print tables from a report.json and write plot data.
    Report {
        report: PathBuf,
        /// Directory for plot CSVs (default: `plots/` next to the report).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(common: &Common) -> crate::Result<RunConfig> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    for kv in &common.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| crate::Error::Config(format!("--set expects key=value, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

/// Parses arguments and runs the subcommand, returning the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match cli.command {
        Command::Run { common, jobs, out } => {
            let mut cfg = match load_config(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit_code(&e);
                }
            };
            if let Some(seed) = common.seed {
                cfg.experiment.seed = seed;
            }
            if let Some(jobs) = jobs {
                cfg.experiment.jobs = jobs;
            }
            if let Some(out) = out {
                cfg.out = out;
            }
            cmd_run(&cfg)
        }
        Command::Gen { common, out } => {
            let mut cfg = match load_config(&common) {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return exit_code(&e);
                }
            };
            if let Some(seed) = common.seed {
                cfg.generator.seed = seed;
            }
            cmd_gen(&cfg, &out)
        }
        Command::Report { report, out } => cmd_report(&report, out.as_deref()),
    }
}
