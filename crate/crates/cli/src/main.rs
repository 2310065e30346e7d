mod config;

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use trendfetch_core::experiment::{
    classify, compare, render_classification, run_experiment, ExperimentError, ExperimentOutput,
    OutputFormat, DEFAULT_CLASSIFY_WINDOWS,
};
use trendfetch_core::trace::{write_trace, GenSpec};

use config::RunArgs;

#[derive(Parser)]
#[command(
    name = "trendfetch",
    version,
    about = "Trace-driven remote-memory prefetching simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a trace against one or more prefetchers and emit reports.
    Run(RunArgs),
    /// Write a synthetic trace file.
    Gen {
        /// Generator spec, e.g. `seq:n=1000` or `random:n=100,range=4096`.
        #[arg(long)]
        gen: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Break a trace down into sequential, stride and other windows.
    Classify {
        #[arg(long, conflicts_with = "gen")]
        trace: Option<PathBuf>,
        #[arg(long)]
        gen: Option<String>,
        /// Window length; repeat or comma-separate (default 2,4,8).
        #[arg(long = "window", value_delimiter = ',')]
        windows: Vec<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        format: Option<OutputFormat>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a comparison table from saved JSON reports, or from a fresh run
    /// when no report files are given.
    Compare {
        /// JSON files written by `run --format json`.
        reports: Vec<PathBuf>,
        #[command(flatten)]
        run: RunArgs,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            let simulation_failed = err
                .downcast_ref::<ExperimentError>()
                .is_some_and(|e| !e.is_input_error());
            ExitCode::from(if simulation_failed { 1 } else { 2 })
        }
    }
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run(args) => {
            let args = args.merged()?;
            let cfg = args.experiment()?;
            let result = run_experiment(&cfg)?;
            emit(args.out.as_deref(), &result.render(cfg.format))
        }
        Command::Gen { gen, seed, out } => {
            let trace = GenSpec::parse(&gen, seed)?.generate()?;
            let mut buf = Vec::new();
            write_trace(&trace, &mut buf)?;
            emit(out.as_deref(), &String::from_utf8(buf)?)
        }
        Command::Classify {
            trace,
            gen,
            windows,
            seed,
            format,
            out,
        } => {
            let args = RunArgs {
                trace,
                gen,
                seed: Some(seed),
                ..Default::default()
            };
            let trace = args.source()?.load(seed)?;
            let windows = if windows.is_empty() {
                DEFAULT_CLASSIFY_WINDOWS.to_vec()
            } else {
                windows
            };
            let rows = classify(&trace, &windows)?;
            let text = render_classification(&rows, format.unwrap_or(OutputFormat::Table));
            emit(out.as_deref(), &text)
        }
        Command::Compare { reports, run } => {
            let run = run.merged()?;
            let flat = if reports.is_empty() {
                let result = run_experiment(&run.experiment()?)?;
                result.output().reports
            } else {
                let mut all = Vec::new();
                for path in &reports {
                    all.extend(read_reports(path)?.reports);
                }
                all
            };
            emit(run.out.as_deref(), &compare(&flat))
        }
    }
}

fn read_reports(path: &Path) -> Result<ExperimentOutput> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read report file {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid report file {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}
