use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::warn;
use unimodal::config::ExperimentConfig;
use unimodal::{csv_io, run, CliError, Result};
use unimodal_core::data::{self, SyntheticSpec};

#[derive(Parser)]
#[command(name = "unimodal", version, about = "Train and compare unimodal ordinal classifiers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train every loss in a config over its seeds and write records and tables.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides `workers`.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Print the comparison table of a finished run directory.
    Report {
        dir: PathBuf,
        /// Also write moving-average curves with this window.
        #[arg(long)]
        smooth: Option<usize>,
    },
    /// Write a synthetic ordinal dataset as CSV.
    GenData {
        #[arg(long = "c")]
        classes: usize,
        #[arg(long = "d")]
        dim: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.6)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        embed_seed: u64,
        #[arg(long, default_value_t = 0)]
        sample_seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, out, workers } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if let Some(o) = out {
                cfg.output_dir = o;
            }
            let dir = cfg.output_dir.clone();
            let outcome = run::run(&cfg, &dir)?;
            print!("{}", outcome.table.to_markdown());
            if !outcome.failures.is_empty() {
                return Err(CliError::Training(outcome.failures.join("; ")));
            }
            Ok(())
        }
        Command::Report { dir, smooth } => {
            if smooth == Some(0) {
                return Err(CliError::Config("--smooth must be >= 1".into()));
            }
            let (table, warnings) = run::report(&dir, smooth)?;
            for w in &warnings {
                warn!("{w}");
            }
            print!("{}", table.to_markdown());
            Ok(())
        }
        Command::GenData {
            classes,
            dim,
            n,
            noise,
            embed_seed,
            sample_seed,
            out,
        } => {
            let spec = SyntheticSpec {
                classes,
                dim,
                n,
                noise_sigma: noise,
                embed_seed,
                sample_seed,
            };
            spec.validate()?;
            let ds = data::generate(&spec)?;
            csv_io::write_dataset(&out, &ds)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
