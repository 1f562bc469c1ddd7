use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use noiseforge::experiment::{describe, run_experiment, write_outcome, ExperimentManifest, ReportFormat};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Runs a noiseforge experiment manifest and writes its report.
///
/// Exit status: 0 on success, 1 when the run violates one of its checks,
/// 2 when the manifest or its inputs are unusable.
#[derive(Debug, Parser)]
#[command(name = "noiseforge", version)]
struct Args {
    /// Experiment manifest (JSON).
    #[arg(long)]
    manifest: PathBuf,
    /// Overrides the manifest seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the manifest trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Worker threads; 0 lets rayon decide.
    #[arg(long, env = "NOISEFORGE_THREADS", default_value_t = 0)]
    threads: usize,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut manifest = match ExperimentManifest::load(&args.manifest) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = args.seed {
        manifest.seed = seed;
    }
    if let Some(trials) = args.trials {
        manifest.trials = trials;
    }
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(args.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match pool.install(|| run_experiment(&manifest)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let format = match args.format {
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
    };
    match write_outcome(&outcome, manifest.experiment, format, &args.out) {
        Ok(files) => eprintln!(
            "{}: {} ({}, {})",
            manifest.experiment.name(),
            describe(&outcome),
            files.report.display(),
            files.summary.display()
        ),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    if outcome.violations.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
