//! Command-line front end: `ridership run|validate|features <config.json>`.
//!
//! Exit codes: 0 success, 2 config error, 3 data error, 4 numerical error.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use ridership_core::{run_features, run_pipeline, validate_config, Error, PipelineConfig, RunSummary};

#[derive(Parser)]
#[command(name = "ridership", version, about = "Direct-demand metro station ridership modeling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: features, six models, diagnostics, reports.
    Run {
        /// Pipeline configuration (JSON).
        config: PathBuf,
        /// Write outputs here instead of the config's out_dir.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Check a configuration and report every violation.
    Validate {
        config: PathBuf,
    },
    /// Stop after the feature stage: write features.csv, summary.csv,
    /// centralities.csv, and scatter_data.csv only.
    Features {
        config: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run { config, out_dir } => {
            let config = load(&config, out_dir)?;
            let summary = run_pipeline(&config)?;
            report_summary(&summary);
            Ok(())
        }
        Command::Features { config, out_dir } => {
            let config = load(&config, out_dir)?;
            let summary = run_features(&config)?;
            report_summary(&summary);
            Ok(())
        }
        Command::Validate { config } => {
            let config = load(&config, None)?;
            let violations = validate_config(&config);
            if violations.is_empty() {
                println!("ok");
                Ok(())
            } else {
                Err(Error::Config(violations))
            }
        }
    }
}

fn load(path: &PathBuf, out_dir: Option<PathBuf>) -> Result<PipelineConfig, Error> {
    let mut config = PipelineConfig::load(path)?;
    if let Some(dir) = out_dir {
        config.out_dir = dir;
    }
    Ok(config)
}

fn report_summary(summary: &RunSummary) {
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    println!("wrote {} files to {}", summary.files.len(), summary.out_dir.display());
}
