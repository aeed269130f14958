//! `pseudolabel`: generate datasets, train, evaluate and report.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use pseudolabel::data::{
    gen_classification_splits, gen_segmentation_splits, write_manifest, ClassificationSpec, Dataset, SegmentationSpec,
    Split, Task,
};
use pseudolabel::nn::{load_checkpoint, read_checkpoint, ClassifierModel, Model, ModelKind, SegmenterModel};
use pseudolabel::trainer::{
    evaluate, load_dataset, model_config, prepare_dataset, render_report, train_classification, train_segmentation,
    write_outputs, ExperimentConfig,
};
use pseudolabel::metrics::Metrics;
use pseudolabel::{Error, Result};

#[derive(Parser)]
#[command(name = "pseudolabel", version, about = "Semi-supervised pseudo-label training")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset as a manifest plus PNM images
    GenData(GenArgs),
    /// Train the binary classifier
    TrainCls(RunArgs),
    /// Train the segmenter
    TrainSeg(RunArgs),
    /// Evaluate a checkpoint (or a fresh seeded model) on one split
    Eval(EvalArgs),
    /// Print the tables of a run directory
    Report {
        /// Run directory holding metrics.csv
        #[arg(long)]
        outdir: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    /// cls or seg
    #[arg(long)]
    task: Task,
    /// Labeled training samples
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    unlabeled: usize,
    #[arg(long, default_value_t = 0)]
    val: usize,
    #[arg(long, default_value_t = 0)]
    test: usize,
    /// Segmentation class count
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 32)]
    size: usize,
    #[arg(long, default_value_t = 51.0 / 398.0)]
    positive_fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "data")]
    outdir: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    outdir: Option<PathBuf>,
    /// Override one config key; repeatable
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    alpha_f: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    /// Dataset manifest (otherwise a synthetic dataset is generated)
    #[arg(long)]
    data: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    run: RunArgs,
    /// cls or seg; taken from the config when omitted
    #[arg(long)]
    task: Option<Task>,
    #[arg(long)]
    checkpoint: Option<PathBuf>,
    #[arg(long, default_value = "test")]
    split: Split,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Divergence { .. } => 3,
        Error::Io { .. } | Error::Format { .. } | Error::Manifest { .. } | Error::Csv(_) | Error::Json(_) | Error::Checkpoint(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::GenData(args) => gen_data(&args),
        Command::TrainCls(args) => train(&args, Task::Classification),
        Command::TrainSeg(args) => train(&args, Task::Segmentation),
        Command::Eval(args) => eval(&args),
        Command::Report { outdir } => {
            print!("{}", render_report(&outdir)?);
            Ok(())
        }
    }
}

fn gen_data(args: &GenArgs) -> Result<()> {
    let data: Dataset<f64> = match args.task {
        Task::Classification => gen_classification_splits(&ClassificationSpec {
            n_labeled: args.n,
            n_unlabeled: args.unlabeled,
            n_val: args.val,
            n_test: args.test,
            positive_fraction: args.positive_fraction,
            image_size: args.size,
            seed: args.seed,
        })?,
        Task::Segmentation => gen_segmentation_splits(&SegmentationSpec {
            n_labeled: args.n,
            n_unlabeled: args.unlabeled,
            n_val: args.val,
            n_test: args.test,
            n_classes: args.classes,
            image_size: args.size,
            seed: args.seed,
        })?,
    };
    let manifest = write_manifest(&args.outdir, &data)?;
    println!("wrote {} samples to {}", data.len(), manifest.display());
    Ok(())
}

fn resolve_config(args: &RunArgs, task: Option<Task>) -> Result<ExperimentConfig> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(|e| Error::io(path, e))?,
        None => String::new(),
    };
    let mut overrides = Vec::new();
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::config(kv.as_str(), "override must look like key=value"))?;
        overrides.push((k.to_string(), v.to_string()));
    }
    let flags = [
        ("seed", args.seed.map(|s| s.to_string())),
        ("alpha_f", args.alpha_f.map(|a| a.to_string())),
        ("epochs", args.epochs.map(|e| e.to_string())),
        ("manifest", args.data.as_ref().map(|p| p.display().to_string())),
        ("outdir", args.outdir.as_ref().map(|p| p.display().to_string())),
    ];
    overrides.extend(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k.to_string(), v))));
    ExperimentConfig::parse(&text, &overrides, task)
}

fn train(args: &RunArgs, task: Task) -> Result<()> {
    let cfg = resolve_config(args, Some(task))?;
    let data = load_dataset::<f64>(&cfg)?;
    info!("{} samples, {} epochs, writing to {}", data.len(), cfg.epochs, cfg.outdir.display());
    let summary = match task {
        Task::Classification => write_outputs(&cfg.outdir, &cfg, &train_classification(&cfg, &data)?)?,
        Task::Segmentation => write_outputs(&cfg.outdir, &cfg, &train_segmentation(&cfg, &data)?)?,
    };
    println!("final validation: {}", serde_json::to_string(&summary.final_val)?);
    Ok(())
}

fn eval(args: &EvalArgs) -> Result<()> {
    let ckpt = args.checkpoint.as_deref().map(read_checkpoint).transpose()?;
    let task = args.task.or(ckpt.as_ref().map(|c| match c.kind {
        ModelKind::Classifier => Task::Classification,
        ModelKind::Segmenter => Task::Segmentation,
    }));
    let mut cfg = resolve_config(&args.run, task)?;
    if let Some(c) = &ckpt {
        // the checkpoint decides the architecture
        cfg.n_classes = c.config.n_classes;
        cfg.base_width = c.config.base_width;
    }
    let data = prepare_dataset(&cfg, &load_dataset::<f64>(&cfg)?)?;
    let split = data.split(args.split);
    let metrics = match cfg.task {
        Task::Classification => {
            let model = ClassifierModel::new(model_config(&cfg, &data))?;
            evaluate_with(model, args.checkpoint.as_deref(), &split, &cfg)?
        }
        Task::Segmentation => {
            let model = SegmenterModel::new(model_config(&cfg, &data))?;
            evaluate_with(model, args.checkpoint.as_deref(), &split, &cfg)?
        }
    };
    let json = serde_json::to_string_pretty(&metrics)?;
    if let Some(dir) = &args.run.outdir {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join("eval.json");
        fs::write(&path, format!("{json}\n")).map_err(|e| Error::io(&path, e))?;
    }
    println!("{json}");
    Ok(())
}

fn evaluate_with<M: Model<f64>>(
    mut model: M,
    checkpoint: Option<&Path>,
    split: &Dataset<f64>,
    cfg: &ExperimentConfig,
) -> Result<Metrics> {
    if let Some(path) = checkpoint {
        load_checkpoint(path, &mut model)?;
    }
    if split.is_empty() {
        return Err(Error::config("split", "selected split has no samples"));
    }
    Ok(evaluate(&model, split, cfg.positive_class, cfg.batch_size)?.0)
}
