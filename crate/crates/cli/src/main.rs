use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use schouten_core::scenario::{
    emit_series, example_config, list_checks, run_config, RunOptions, ScenarioConfig, SeriesFormat, Status,
};

#[derive(Parser)]
#[command(name = "schouten", version, about = "Verification runs on rigid gradient Schouten solitons")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of a scenario file and write the report and series.
    Run {
        config: PathBuf,
        /// Output directory (report and series paths are relative to it).
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Master seed; overrides SCHOUTEN_SEED and the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Series format; overrides the config.
        #[arg(long, value_enum)]
        format: Option<Format>,
        /// Record wall time per check.
        #[arg(long)]
        timings: bool,
    },
    /// List the available checks.
    ListChecks,
    /// Print an example scenario with every default.
    ExampleConfig,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListChecks => {
            for (name, description) in list_checks() {
                println!("{name:<12} {description}");
            }
            ExitCode::SUCCESS
        }
        Command::ExampleConfig => {
            print!("{}", example_config());
            ExitCode::SUCCESS
        }
        Command::Run { config, out, seed, format, timings } => match run(&config, &out, seed, format, timings) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var("SCHOUTEN_SEED") {
        Ok(v) => Ok(Some(v.trim().parse().with_context(|| format!("SCHOUTEN_SEED={v:?} is not an unsigned integer"))?)),
        Err(_) => Ok(None),
    }
}

fn run(path: &Path, out: &Path, seed: Option<u64>, format: Option<Format>, timings: bool) -> Result<bool> {
    let mut config = ScenarioConfig::load(path)?;
    if let Some(seed) = seed.or(env_seed()?) {
        config.numerics.master_seed = seed;
    }
    if let Some(f) = format {
        config.output.format = match f {
            Format::Json => SeriesFormat::Json,
            Format::Csv => SeriesFormat::Csv,
        };
    }
    let output = run_config(&config, RunOptions { timings })?;

    let report_path = out.join(&config.output.report);
    if let Some(dir) = report_path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(&report_path, output.report.to_json())
        .with_context(|| format!("writing {}", report_path.display()))?;
    let series_dir = out.join(&config.output.series_dir);
    for (name, series) in &output.series {
        let file = series_dir.join(format!("{name}.{}", config.output.format.extension()));
        emit_series(series, &file, config.output.format)?;
    }

    for r in &output.report.records {
        let status = match r.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::NotApplicable => "n/a",
        };
        let detail = match (&r.error, r.worst_residual, r.tolerance) {
            (Some(e), _, _) => e.clone(),
            (None, Some(w), Some(t)) => format!("{w:.3e} (tol {t:.0e})"),
            _ => String::new(),
        };
        println!("{status:<5} {:<28} {detail}", r.id);
    }
    let s = &output.report.summary;
    println!("{} passed, {} failed, {} not applicable; report: {}", s.pass, s.fail, s.not_applicable, report_path.display());
    Ok(output.report.passed())
}
