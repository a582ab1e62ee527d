use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oodgate::config::{parse_weights, OutputFormat, Overrides, PipelineConfig};
use oodgate::error::{Error, Result};
use oodgate::pipeline::{execute, Task};
use oodgate::report::emit_report;

#[derive(Debug, Parser)]
#[command(name = "oodgate", version, about = "Out-of-domain gating and evaluation pipeline")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Global {
    /// JSON config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Gallery file (GALV1).
    #[arg(long, global = true)]
    gallery: Option<PathBuf>,
    /// Image manifest (JSON).
    #[arg(long, global = true)]
    manifest: Option<PathBuf>,
    /// Similarity threshold for InDomain [default: 0.85].
    #[arg(long, global = true)]
    threshold: Option<f64>,
    /// Nearest neighbours averaged per query [default: 1].
    #[arg(long, global = true)]
    k: Option<usize>,
    /// IoU needed for a true positive [default: 0.5].
    #[arg(long, global = true)]
    iou: Option<f64>,
    /// Composite weights for accuracy, efficiency, robustness [default: 0.4,0.3,0.3].
    #[arg(long, global = true, value_parser = parse_weights)]
    weights: Option<[f64; 3]>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Report format [default: json].
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a gallery from EMBV1 files and write it to --gallery.
    GalleryBuild {
        /// Embedding files (EMBV1).
        #[arg(long = "input", required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Classify manifest images as InDomain or OutOfDomain.
    Gate,
    /// Gate a fully labelled manifest and report domain accuracy.
    EvalOod,
    /// Detection metrics; gates first when --gallery is given.
    EvalDet,
    /// Saliency metrics; gates first when --gallery is given.
    EvalXai,
    /// Rank backbones by composite score.
    Rank {
        /// Backbone table (CSV).
        #[arg(long)]
        table: PathBuf,
        /// Reference column statistics (JSON) to compare against.
        #[arg(long)]
        reference: Option<PathBuf>,
    },
    /// In-domain counts and accuracy over a threshold grid.
    SweepThreshold {
        /// First threshold [default: 0.5]
        #[arg(long)]
        start: Option<f64>,
        /// Last threshold, inclusive [default: 0.99]
        #[arg(long)]
        stop: Option<f64>,
        /// Grid spacing [default: 0.01]
        #[arg(long)]
        step: Option<f64>,
    },
    /// Full pipeline: gate, sweep, detection and saliency evaluation, ranking.
    Report {
        #[arg(long)]
        table: Option<PathBuf>,
        #[arg(long)]
        reference: Option<PathBuf>,
    },
}

fn required(p: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    p.clone()
        .ok_or_else(|| Error::Config(format!("--{flag} is required for this command")))
}

fn run(cli: Cli) -> Result<Vec<PathBuf>> {
    let g = &cli.global;
    let ov = Overrides {
        threshold: g.threshold,
        k: g.k,
        iou_threshold: g.iou,
        weights: g.weights,
        output_dir: g.out.clone(),
        format: g.format,
    };
    let mut cfg = PipelineConfig::load(g.config.as_deref(), &ov)?;
    let task = match &cli.command {
        Command::GalleryBuild { inputs } => Task::GalleryBuild {
            inputs: inputs.clone(),
            output: required(&g.gallery, "gallery")?,
        },
        Command::Gate => Task::Gate {
            gallery: required(&g.gallery, "gallery")?,
            manifest: required(&g.manifest, "manifest")?,
        },
        Command::EvalOod => Task::EvalOod {
            gallery: required(&g.gallery, "gallery")?,
            manifest: required(&g.manifest, "manifest")?,
        },
        Command::EvalDet => Task::EvalDet {
            gallery: g.gallery.clone(),
            manifest: required(&g.manifest, "manifest")?,
        },
        Command::EvalXai => Task::EvalXai {
            gallery: g.gallery.clone(),
            manifest: required(&g.manifest, "manifest")?,
        },
        Command::Rank { table, reference } => Task::Rank {
            table: table.clone(),
            reference: reference.clone(),
        },
        Command::SweepThreshold { start, stop, step } => {
            cfg.sweep.start = start.unwrap_or(cfg.sweep.start);
            cfg.sweep.stop = stop.unwrap_or(cfg.sweep.stop);
            cfg.sweep.step = step.unwrap_or(cfg.sweep.step);
            Task::SweepThreshold {
                gallery: required(&g.gallery, "gallery")?,
                manifest: required(&g.manifest, "manifest")?,
            }
        }
        Command::Report { table, reference } => Task::Full {
            gallery: required(&g.gallery, "gallery")?,
            manifest: required(&g.manifest, "manifest")?,
            table: table.clone(),
            reference: reference.clone(),
        },
    };
    let report = execute(&cfg, &task)?;
    let mut written = emit_report(&report, cfg.format, &cfg.output_dir)?;
    // the sweep curve is always available as CSV
    if matches!(task, Task::SweepThreshold { .. }) && cfg.format == OutputFormat::Json {
        written.extend(emit_report(&report, OutputFormat::Csv, &cfg.output_dir)?);
    }
    Ok(written)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
