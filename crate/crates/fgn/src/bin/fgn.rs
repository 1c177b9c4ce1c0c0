//! Command-line front end: dataset ingestion, lifelong and offline training,
//! memory sweeps, and checkpoint evaluation. Emits one JSON metrics document
//! per invocation (stdout or --out).

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use fgn::harness::{
    evaluate, metrics_document, run_many, sweep_document, sweep_memory, ClassOrderPolicy,
    ExperimentConfig, RunMode, SplitPolicy, TaskKind,
};
use fgn::model::{load_params, save_params, BiasConfig, ModelConfig, TrainConfig};
use fgn::rehearsal::MemoryMode;
use fgn::{AttributeGraph, FgnError, Result};

#[derive(Parser)]
#[command(name = "fgn", version, about = "Lifelong node classification with feature graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a classic content/cites dataset to the canonical JSON format.
    Ingest(IngestArgs),
    /// Lifelong training: one pass over the continuum with rehearsal.
    Train(ExperimentArgs),
    /// Offline upper bound: epochs of shuffled mini-batch training.
    Offline(ExperimentArgs),
    /// Lifelong training across several memory sizes with paired seeds.
    Sweep(SweepArgs),
    /// Evaluate a saved checkpoint on a reproduced test split.
    Eval(EvalArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Classic,
    Canonical,
}

#[derive(Clone, Copy, ValueEnum)]
enum TaskArg {
    Data,
    Class,
}

#[derive(Clone, Copy, ValueEnum)]
enum MemoryModeArg {
    Uniform,
    Balanced,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassOrderArg {
    Fixed,
    Shuffled,
}

#[derive(Clone, Copy, ValueEnum)]
enum SplitPolicyArg {
    Redraw,
    Fixed,
}

#[derive(Args)]
struct DatasetArgs {
    /// Dataset path prefix: <prefix>.content/.cites (classic) or
    /// <prefix>.nodes.jsonl/.edges.jsonl (canonical).
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum, default_value = "canonical")]
    format: FormatArg,
}

#[derive(Args)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DatasetArgs,
    /// Fraction of nodes whose labels are streamed for training.
    #[arg(long = "label-rate")]
    label_rate: f64,
    #[arg(long, value_enum, default_value = "data")]
    task: TaskArg,
    /// Rehearsal memory capacity M (0 disables rehearsal).
    #[arg(long, default_value_t = 100)]
    memory: usize,
    #[arg(long = "memory-mode", value_enum, default_value = "uniform")]
    memory_mode: MemoryModeArg,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Base seed; runs use seed, seed+1, ..
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.01)]
    lr: f64,
    #[arg(long, default_value_t = 10)]
    batch: usize,
    /// SGD updates per newly observed sample (lifelong).
    #[arg(long, default_value_t = 5)]
    updates: usize,
    /// Neighborhood hop count.
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Evaluate every N observed items (lifelong) or epochs (offline); 0 = final only.
    #[arg(long = "eval-every", default_value_t = 50)]
    eval_every: usize,
    #[arg(long = "class-order", value_enum, default_value = "fixed")]
    class_order: ClassOrderArg,
    #[arg(long = "split-policy", value_enum, default_value = "redraw")]
    split_policy: SplitPolicyArg,
    /// Training passes over the train set (offline only).
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    /// First broadcast layer output channels.
    #[arg(long, default_value_t = 1)]
    c1: usize,
    /// Second broadcast layer output channels.
    #[arg(long, default_value_t = 2)]
    c2: usize,
    /// Drop the broadcast-layer bias terms.
    #[arg(long = "no-broadcast-bias")]
    no_broadcast_bias: bool,
    /// Drop the head bias term.
    #[arg(long = "no-head-bias")]
    no_head_bias: bool,
    /// Write the first run's trained parameters to this path.
    #[arg(long = "save-model")]
    save_model: Option<PathBuf>,
    /// Metrics JSON output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Memory sizes to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,50,100,200,500")]
    sizes: Vec<usize>,
}

#[derive(Args)]
struct IngestArgs {
    #[command(flatten)]
    data: DatasetArgs,
    /// Output path prefix for <prefix>.nodes.jsonl and <prefix>.edges.jsonl.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DatasetArgs,
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long = "label-rate")]
    label_rate: f64,
    /// Seed of the run whose test split should be reproduced.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long = "split-policy", value_enum, default_value = "redraw")]
    split_policy: SplitPolicyArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(args) => ingest(args),
        Command::Train(args) => experiment(args, RunMode::Lifelong),
        Command::Offline(args) => experiment(args, RunMode::Offline),
        Command::Sweep(args) => sweep(args),
        Command::Eval(args) => eval(args),
    }
}

fn prefixed(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(suffix);
    PathBuf::from(name)
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| FgnError::Format(format!("cannot open {}: {e}", path.display())))
}

fn load_dataset(args: &DatasetArgs) -> Result<AttributeGraph> {
    let graph = match args.format {
        FormatArg::Classic => {
            let content = open(&prefixed(&args.dataset, ".content"))?;
            let cites = open(&prefixed(&args.dataset, ".cites"))?;
            fgn::graph::load_classic(content, cites)?
        }
        FormatArg::Canonical => {
            let nodes = open(&prefixed(&args.dataset, ".nodes.jsonl"))?;
            let edges = open(&prefixed(&args.dataset, ".edges.jsonl"))?;
            fgn::graph::load_canonical(nodes, edges)?
        }
    };
    let stats = graph.load_stats();
    eprintln!(
        "loaded {} nodes, {} classes, F = {}: {} edge records -> {} distinct pairs \
         ({} dropped: {} unknown id, {} self)",
        graph.num_nodes(),
        graph.class_count(),
        graph.feature_dim(),
        stats.raw_edge_lines,
        stats.distinct_edge_pairs,
        stats.warnings(),
        stats.dropped_unknown,
        stats.dropped_self,
    );
    Ok(graph)
}

fn emit(out: &Option<PathBuf>, doc: &serde_json::Value) -> Result<()> {
    let text = format!("{}\n", serde_json::to_string_pretty(doc)?);
    match out {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn to_config(args: &ExperimentArgs) -> ExperimentConfig {
    ExperimentConfig {
        task: match args.task {
            TaskArg::Data => TaskKind::Data,
            TaskArg::Class => TaskKind::Class,
        },
        memory: args.memory,
        memory_mode: match args.memory_mode {
            MemoryModeArg::Uniform => MemoryMode::Uniform,
            MemoryModeArg::Balanced => MemoryMode::Balanced,
        },
        k: args.k,
        label_rate: args.label_rate,
        train: TrainConfig {
            learning_rate: args.lr,
            batch_size: args.batch,
            updates_per_sample: args.updates,
            model: ModelConfig {
                c1: args.c1,
                c2: args.c2,
                bias: BiasConfig { broadcast: !args.no_broadcast_bias, head: !args.no_head_bias },
            },
        },
        runs: args.runs,
        base_seed: args.seed,
        eval_every: args.eval_every,
        class_order: match args.class_order {
            ClassOrderArg::Fixed => ClassOrderPolicy::Fixed,
            ClassOrderArg::Shuffled => ClassOrderPolicy::Shuffled,
        },
        split_policy: match args.split_policy {
            SplitPolicyArg::Redraw => SplitPolicy::Redraw,
            SplitPolicyArg::Fixed => SplitPolicy::Fixed,
        },
        epochs: args.epochs,
    }
}

fn config_value(args: &ExperimentArgs, config: &ExperimentConfig, mode: RunMode) -> serde_json::Value {
    serde_json::json!({
        "dataset": args.data.dataset.display().to_string(),
        "format": match args.data.format {
            FormatArg::Classic => "classic",
            FormatArg::Canonical => "canonical",
        },
        "mode": match mode {
            RunMode::Lifelong => "lifelong",
            RunMode::Offline => "offline",
        },
        "task": config.task,
        "memory": config.memory,
        "memory_mode": config.memory_mode,
        "k": config.k,
        "label_rate": config.label_rate,
        "lr": config.train.learning_rate,
        "batch": config.train.batch_size,
        "updates": config.train.updates_per_sample,
        "runs": config.runs,
        "seed": config.base_seed,
        "eval_every": config.eval_every,
        "class_order": config.class_order,
        "split_policy": config.split_policy,
        "epochs": config.epochs,
        "c1": config.train.model.c1,
        "c2": config.train.model.c2,
        "bias_broadcast": config.train.model.bias.broadcast,
        "bias_head": config.train.model.bias.head,
    })
}

fn experiment(args: ExperimentArgs, mode: RunMode) -> Result<()> {
    let graph = load_dataset(&args.data)?;
    let config = to_config(&args);
    let result = run_many(&graph, &config, mode)?;
    if let Some(path) = &args.save_model {
        let mut file = BufWriter::new(File::create(path)?);
        save_params(&result.model, &mut file)?;
        file.flush()?;
        eprintln!("saved first-run model to {}", path.display());
    }
    let doc = metrics_document(&config_value(&args, &config, mode), &result);
    emit(&args.out, &doc)
}

fn sweep(args: SweepArgs) -> Result<()> {
    let graph = load_dataset(&args.experiment.data)?;
    let config = to_config(&args.experiment);
    let results = sweep_memory(&graph, &config, &args.sizes)?;
    for (m, result) in &results {
        eprintln!("memory {m}: mean {:.4} +/- {:.4}", result.aggregate.mean, result.aggregate.std);
    }
    let doc =
        sweep_document(&config_value(&args.experiment, &config, RunMode::Lifelong), &results);
    emit(&args.experiment.out, &doc)
}

fn ingest(args: IngestArgs) -> Result<()> {
    let graph = load_dataset(&args.data)?;
    let nodes_path = prefixed(&args.out, ".nodes.jsonl");
    let edges_path = prefixed(&args.out, ".edges.jsonl");
    let mut nodes = BufWriter::new(File::create(&nodes_path)?);
    let mut edges = BufWriter::new(File::create(&edges_path)?);
    fgn::graph::save_canonical(&graph, &mut nodes, &mut edges)?;
    nodes.flush()?;
    edges.flush()?;
    eprintln!("wrote {} and {}", nodes_path.display(), edges_path.display());
    Ok(())
}

fn eval(args: EvalArgs) -> Result<()> {
    let graph = load_dataset(&args.data)?;
    let params = load_params(open(&args.checkpoint)?)?;
    let config = ExperimentConfig {
        label_rate: args.label_rate,
        base_seed: args.seed,
        k: args.k,
        split_policy: match args.split_policy {
            SplitPolicyArg::Redraw => SplitPolicy::Redraw,
            SplitPolicyArg::Fixed => SplitPolicy::Fixed,
        },
        ..ExperimentConfig::default()
    };
    let split = config.split_for_run(&graph, args.seed)?;
    let eval = evaluate(&params, &graph, &split.test_ids, args.k)?;
    let doc = serde_json::json!({
        "config": {
            "dataset": args.data.dataset.display().to_string(),
            "checkpoint": args.checkpoint.display().to_string(),
            "label_rate": args.label_rate,
            "seed": args.seed,
            "k": args.k,
        },
        "accuracy": eval.accuracy,
        "per_class_accuracy": eval.per_class,
    });
    emit(&args.out, &doc)
}
