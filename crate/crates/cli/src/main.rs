//! Command-line pipeline: dataset generation, detection runs, submission
//! evaluation, and leaderboard ranking.
//!
//! Exit codes: 0 on success, 2 for input/config errors, 3 for
//! data-integrity errors.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use asdbench::pipeline::{
    self, ground_truth_path, DetectorKind, PipelineConfig,
};
use asdbench::report::{report_to_json, report_to_table};
use asdbench::synth::{default_machines, generate_dataset, SynthConfig};
use asdbench::{Error, Result};

#[derive(Parser)]
#[command(
    name = "asdbench",
    about = "Anomalous-sound-detection benchmark: generate, run, evaluate, rank",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic domain-shifted dataset.
    Generate(GenerateArgs),
    /// Train, calibrate, score the test split, and write submission files.
    Run(RunArgs),
    /// Score a submission directory against ground truth.
    Evaluate(EvaluateArgs),
    /// Rank several submission directories by official score.
    Rank(RankArgs),
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum DetectorArg {
    Ae,
    Classifier,
}

impl From<DetectorArg> for DetectorKind {
    fn from(d: DetectorArg) -> Self {
        match d {
            DetectorArg::Ae => DetectorKind::Ae,
            DetectorArg::Classifier => DetectorKind::Classifier,
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    /// Output dataset root (must be absent or empty).
    #[arg(long)]
    out: PathBuf,
    /// JSON config file; the "synth" object seeds these settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Desk-scale preset: 90 source / 9 target training clips per section.
    #[arg(long)]
    mini: bool,
    /// Number of machine types (procedural roster).
    #[arg(long)]
    machines: Option<usize>,
    /// Sections per machine (1..=6).
    #[arg(long)]
    sections: Option<usize>,
    #[arg(long)]
    source_train: Option<usize>,
    #[arg(long)]
    target_train: Option<usize>,
    /// Test clips per domain per condition.
    #[arg(long)]
    test_per_domain: Option<usize>,
    #[arg(long)]
    clip_seconds: Option<f64>,
}

#[derive(Args)]
struct RunArgs {
    /// Dataset root produced by `generate`.
    #[arg(long)]
    data: PathBuf,
    /// Work directory for models, thresholds, and the submission.
    #[arg(long)]
    out: PathBuf,
    /// JSON config file; the "pipeline" object seeds these settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    detector: Option<DetectorArg>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    percentile: Option<f64>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Submission directory with per-(machine, section) score/decision files.
    #[arg(long)]
    submission: PathBuf,
    /// Ground-truth CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Where to write the report JSON (printed to stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// pAUC false-positive-rate bound.
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args)]
struct RankArgs {
    /// Ground-truth CSV.
    #[arg(long)]
    truth: PathBuf,
    /// Where to write the leaderboard CSV (printed to stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    p: Option<f64>,
    /// Submission directories; each directory name is the team id.
    #[arg(required = true)]
    submissions: Vec<PathBuf>,
}

/// JSON config schema: `{"synth": {...}, "pipeline": {...}}`, both
/// optional; CLI flags override config keys.
#[derive(Default, serde::Deserialize)]
#[serde(default)]
struct FileConfig {
    synth: Option<SynthConfig>,
    pipeline: Option<PipelineConfig>,
}

fn load_config(path: &Option<PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Io { path: path.clone(), source: e })?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
        }
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let file = load_config(&args.config)?;
    let mut cfg = file.synth.unwrap_or_default();
    if args.mini {
        cfg = SynthConfig {
            n_source_train: 90,
            n_target_train: 9,
            ..cfg
        };
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(n) = args.machines {
        cfg.machines = default_machines(n);
    }
    if let Some(n) = args.sections {
        cfg.sections_per_machine = n;
    }
    if let Some(n) = args.source_train {
        cfg.n_source_train = n;
    }
    if let Some(n) = args.target_train {
        cfg.n_target_train = n;
    }
    if let Some(n) = args.test_per_domain {
        cfg.n_test_per_domain_per_condition = n;
    }
    if let Some(s) = args.clip_seconds {
        cfg.clip_seconds = s;
    }

    let started = Instant::now();
    let index = generate_dataset(&cfg, &args.out)?;
    println!(
        "generated {} clips over {} machines into {} ({:.1?})",
        index.clips.len(),
        index.machines.len(),
        args.out.display(),
        started.elapsed()
    );
    println!("ground truth: {}", ground_truth_path(&args.out).display());
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let file = load_config(&args.config)?;
    let mut cfg = file.pipeline.unwrap_or_default();
    cfg.dataset_root = args.data;
    cfg.work_dir = args.out;
    if let Some(d) = args.detector {
        cfg.detector = d.into();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(epochs) = args.epochs {
        cfg.train.epochs = epochs;
    }
    if let Some(batch) = args.batch_size {
        cfg.train.batch_size = batch;
    }
    if let Some(lr) = args.learning_rate {
        cfg.train.learning_rate = lr;
    }
    if let Some(p) = args.percentile {
        cfg.percentile = p;
    }

    let started = Instant::now();
    let summary = pipeline::run_detection(&cfg)?;
    println!(
        "scored {} test clips over {} cells ({:.1?})",
        summary.scored_test_clips,
        summary.thresholds.len(),
        started.elapsed()
    );
    println!("submission: {}", summary.submission_dir.display());
    println!("thresholds: {}", cfg.thresholds_path().display());
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let mut metrics = asdbench::metrics::MetricsConfig::default();
    if let Some(p) = args.p {
        metrics.p = p;
    }
    let report = pipeline::evaluate_submission(&args.submission, &args.truth, &metrics)?;
    print!("{}", report_to_table(&report));
    let json = report_to_json(&report);
    match args.out {
        Some(path) => {
            std::fs::write(&path, json).map_err(|e| Error::Io { path, source: e })?;
        }
        None => print!("{json}"),
    }
    Ok(())
}

fn cmd_rank(args: RankArgs) -> Result<()> {
    let mut metrics = asdbench::metrics::MetricsConfig::default();
    if let Some(p) = args.p {
        metrics.p = p;
    }
    let submissions: Vec<(String, PathBuf)> = args
        .submissions
        .iter()
        .map(|dir| {
            let team = dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| dir.display().to_string());
            (team, dir.clone())
        })
        .collect();
    let (board, failures) = pipeline::rank_submission_dirs(&submissions, &args.truth, &metrics)?;
    for (team, err) in &failures {
        eprintln!("warning: team {team} excluded: {err}");
    }
    let csv = pipeline::leaderboard_to_csv(&board);
    match args.out {
        Some(path) => {
            std::fs::write(&path, csv).map_err(|e| Error::Io { path, source: e })?;
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => cmd_generate(args),
        Command::Run(args) => cmd_run(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Rank(args) => cmd_rank(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
