//! Experiment orchestration: lifelong and offline training loops, test-set
//! evaluation, multi-run aggregation, and memory-size sweeps.
//!
//! A run is fully determined by (dataset, config, seed): sub-seeds for the
//! split, stream order, initialization, and memory are derived from the run
//! seed with fixed tags, runs use seeds base_seed..base_seed+runs, and all
//! reductions have fixed order. Independent runs execute in parallel.

use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::continuum::{class_incremental, data_incremental, observe_node, shuffled_class_order};
use crate::error::{FgnError, Result};
use crate::featgraph::{build_sample, FeatureGraphSample};
use crate::graph::{make_split, AttributeGraph, DatasetSplit};
use crate::model::{backward, forward, sgd_step, ModelParams, TrainConfig};
use crate::rehearsal::{compose_batch, MemoryMode, ReservoirMemory};

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent seed stream for one purpose within a run.
fn subseed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

const TAG_SPLIT: u64 = 1;
const TAG_ORDER: u64 = 2;
const TAG_INIT: u64 = 3;
const TAG_MEMORY: u64 = 4;
const TAG_CLASS_ORDER: u64 = 5;

/// Stream construction for a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskKind {
    Data,
    Class,
}

/// Class presentation order for class-incremental runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassOrderPolicy {
    /// Ascending class index.
    Fixed,
    /// Seeded shuffle per run.
    Shuffled,
}

/// Whether each run draws its own train/test split or all runs share one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitPolicy {
    Redraw,
    Fixed,
}

/// Everything needed to reproduce an experiment besides the dataset itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub task: TaskKind,
    pub memory: usize,
    pub memory_mode: MemoryMode,
    pub k: usize,
    pub label_rate: f64,
    pub train: TrainConfig,
    pub runs: usize,
    pub base_seed: u64,
    /// Evaluate the test set every this many observed items (lifelong) or
    /// epochs (offline); 0 disables periodic evaluation.
    pub eval_every: usize,
    pub class_order: ClassOrderPolicy,
    pub split_policy: SplitPolicy,
    /// Offline passes over the train set.
    pub epochs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            task: TaskKind::Data,
            memory: 100,
            memory_mode: MemoryMode::Uniform,
            k: 1,
            label_rate: 0.421,
            train: TrainConfig::default(),
            runs: 10,
            base_seed: 0,
            eval_every: 50,
            class_order: ClassOrderPolicy::Fixed,
            split_policy: SplitPolicy::Redraw,
            epochs: 200,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        if self.runs == 0 {
            return Err(FgnError::InvalidArgument("runs must be >= 1".into()));
        }
        if self.k == 0 {
            return Err(FgnError::InvalidArgument("k must be >= 1".into()));
        }
        Ok(())
    }

    /// The split used by run `seed` under this config's split policy.
    pub fn split_for_run(&self, graph: &AttributeGraph, seed: u64) -> Result<DatasetSplit> {
        let split_seed = match self.split_policy {
            SplitPolicy::Redraw => subseed(seed, TAG_SPLIT),
            SplitPolicy::Fixed => subseed(self.base_seed, TAG_SPLIT),
        };
        make_split(graph, self.label_rate, split_seed)
    }
}

/// Result of one seeded run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    pub final_accuracy: f64,
    pub per_class_accuracy: Vec<Option<f64>>,
    /// (items observed, test accuracy) pairs; the last entry is final.
    pub timeline: Vec<(u64, f64)>,
    pub wall_time_s: f64,
}

/// Mean and sample standard deviation of final accuracies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
}

/// Accuracy over a node set, with a per-class breakdown (None for classes
/// absent from the set).
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub per_class: Vec<Option<f64>>,
}

/// Argmax prediction accuracy of `params` over `test_ids`, each test node
/// observed through its k-hop neighborhood in the full graph. Labels are
/// read only for scoring. Deterministic and order-invariant.
pub fn evaluate(
    params: &ModelParams,
    graph: &AttributeGraph,
    test_ids: &[usize],
    k: usize,
) -> Result<Evaluation> {
    if test_ids.is_empty() {
        return Err(FgnError::InvalidArgument("test set is empty".into()));
    }
    let outcomes: Vec<(usize, bool)> = test_ids
        .par_iter()
        .map(|&v| -> Result<(usize, bool)> {
            let item = observe_node(graph, v, k, 0)?;
            let sample = build_sample(&item, graph.feature_dim(), graph.channels())?;
            let logits = forward(&sample, params)?;
            let pred = argmax(&logits);
            Ok((item.label, pred == item.label))
        })
        .collect::<Result<Vec<_>>>()?;

    let classes = graph.class_count();
    let mut total = vec![0u64; classes];
    let mut correct = vec![0u64; classes];
    let mut hits = 0u64;
    for (label, ok) in outcomes {
        total[label] += 1;
        if ok {
            correct[label] += 1;
            hits += 1;
        }
    }
    let per_class = (0..classes)
        .map(|c| (total[c] > 0).then(|| correct[c] as f64 / total[c] as f64))
        .collect();
    Ok(Evaluation { accuracy: hits as f64 / test_ids.len() as f64, per_class })
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Mean training loss since the last report, for the stderr loss curve.
#[derive(Default)]
struct LossWindow {
    sum: f64,
    count: u64,
}

impl LossWindow {
    fn push(&mut self, loss: f64) {
        self.sum += loss;
        self.count += 1;
    }

    fn take_mean(&mut self) -> f64 {
        let mean = if self.count == 0 { f64::NAN } else { self.sum / self.count as f64 };
        self.sum = 0.0;
        self.count = 0;
        mean
    }
}

fn train_batch(
    params: &mut ModelParams,
    batch: &[Arc<FeatureGraphSample>],
    learning_rate: f64,
) -> Result<f64> {
    let refs: Vec<&FeatureGraphSample> = batch.iter().map(Arc::as_ref).collect();
    let (grads, loss) = backward(&refs, params)?;
    if !loss.is_finite() {
        return Err(FgnError::Numerical(format!("loss diverged to {loss}")));
    }
    sgd_step(params, &grads, learning_rate)?;
    Ok(loss)
}

/// One lifelong pass over the continuum. For every observed item: build its
/// feature-graph sample, apply `updates_per_sample` SGD steps on freshly
/// drawn rehearsal batches, then offer the sample to the memory
/// (train-then-store, so every item trains at least once). The test set is
/// evaluated every `eval_every` items and at the end.
pub fn run_lifelong(
    graph: &AttributeGraph,
    split: &DatasetSplit,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(RunResult, ModelParams)> {
    config.validate()?;
    let start = Instant::now();
    let continuum = match config.task {
        TaskKind::Data => data_incremental(graph, split, config.k, subseed(seed, TAG_ORDER))?,
        TaskKind::Class => {
            let order = match config.class_order {
                ClassOrderPolicy::Fixed => (0..graph.class_count()).collect::<Vec<_>>(),
                ClassOrderPolicy::Shuffled => {
                    shuffled_class_order(graph.class_count(), subseed(seed, TAG_CLASS_ORDER))
                }
            };
            class_incremental(graph, split, &order, config.k, subseed(seed, TAG_ORDER))?
        }
    };

    let mut params = ModelParams::init(
        graph.feature_dim(),
        graph.class_count(),
        &config.train.model,
        subseed(seed, TAG_INIT),
    );
    let mut memory =
        ReservoirMemory::new(config.memory, config.memory_mode, subseed(seed, TAG_MEMORY));

    let total = continuum.len();
    let mut timeline: Vec<(u64, f64)> = Vec::new();
    let mut window = LossWindow::default();
    for (idx, item) in continuum.items.iter().enumerate() {
        let sample = Arc::new(build_sample(item, graph.feature_dim(), graph.channels())?);
        for _ in 0..config.train.updates_per_sample {
            let batch = compose_batch(&mut memory, &sample, config.train.batch_size);
            window.push(train_batch(&mut params, &batch, config.train.learning_rate)?);
        }
        memory.observe(sample);
        let seen = idx + 1;
        if config.eval_every > 0 && seen % config.eval_every == 0 && seen < total {
            let eval = evaluate(&params, graph, &split.test_ids, config.k)?;
            eprintln!(
                "[run {seed}] {seen}/{total} items, train loss {:.4}, test acc {:.4}",
                window.take_mean(),
                eval.accuracy
            );
            timeline.push((seen as u64, eval.accuracy));
        }
    }
    debug_assert_eq!(memory.arrivals(), total as u64);
    let eval = evaluate(&params, graph, &split.test_ids, config.k)?;
    timeline.push((total as u64, eval.accuracy));
    eprintln!(
        "[run {seed}] done: {total} items, train loss {:.4}, final acc {:.4}, {:.1}s",
        window.take_mean(),
        eval.accuracy,
        start.elapsed().as_secs_f64()
    );
    let result = RunResult {
        seed,
        final_accuracy: eval.accuracy,
        per_class_accuracy: eval.per_class,
        timeline,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((result, params))
}

/// The non-lifelong upper bound: standard shuffled mini-batch training over
/// the whole train set for `config.epochs` passes, same model and loss.
/// `eval_every` counts epochs here.
pub fn run_offline(
    graph: &AttributeGraph,
    split: &DatasetSplit,
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(RunResult, ModelParams)> {
    config.validate()?;
    let start = Instant::now();
    let samples: Vec<Arc<FeatureGraphSample>> = split
        .train_ids
        .par_iter()
        .map(|&v| {
            let item = observe_node(graph, v, config.k, 0)?;
            Ok(Arc::new(build_sample(&item, graph.feature_dim(), graph.channels())?))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut params = ModelParams::init(
        graph.feature_dim(),
        graph.class_count(),
        &config.train.model,
        subseed(seed, TAG_INIT),
    );
    let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, TAG_ORDER));
    let mut indices: Vec<usize> = (0..samples.len()).collect();
    let mut timeline: Vec<(u64, f64)> = Vec::new();
    let mut window = LossWindow::default();
    let per_epoch = samples.len() as u64;
    for epoch in 0..config.epochs {
        indices.shuffle(&mut rng);
        for chunk in indices.chunks(config.train.batch_size) {
            let batch: Vec<Arc<FeatureGraphSample>> =
                chunk.iter().map(|&i| Arc::clone(&samples[i])).collect();
            window.push(train_batch(&mut params, &batch, config.train.learning_rate)?);
        }
        let done = epoch + 1;
        if config.eval_every > 0 && done % config.eval_every == 0 && done < config.epochs {
            let eval = evaluate(&params, graph, &split.test_ids, config.k)?;
            eprintln!(
                "[run {seed}] epoch {done}/{}, train loss {:.4}, test acc {:.4}",
                config.epochs,
                window.take_mean(),
                eval.accuracy
            );
            timeline.push((done as u64 * per_epoch, eval.accuracy));
        }
    }
    let eval = evaluate(&params, graph, &split.test_ids, config.k)?;
    eprintln!(
        "[run {seed}] done: {} epochs, train loss {:.4}, final acc {:.4}, {:.1}s",
        config.epochs,
        window.take_mean(),
        eval.accuracy,
        start.elapsed().as_secs_f64()
    );
    timeline.push((config.epochs as u64 * per_epoch, eval.accuracy));
    let result = RunResult {
        seed,
        final_accuracy: eval.accuracy,
        per_class_accuracy: eval.per_class,
        timeline,
        wall_time_s: start.elapsed().as_secs_f64(),
    };
    Ok((result, params))
}

/// Mean and sample standard deviation (n - 1 denominator; 0 for a single
/// run) of final accuracies.
pub fn aggregate(results: &[RunResult]) -> Result<Aggregate> {
    if results.is_empty() {
        return Err(FgnError::InvalidArgument("no run results to aggregate".into()));
    }
    let n = results.len() as f64;
    let mean = results.iter().map(|r| r.final_accuracy).sum::<f64>() / n;
    let std = if results.len() == 1 {
        0.0
    } else {
        let var = results
            .iter()
            .map(|r| {
                let d = r.final_accuracy - mean;
                d * d
            })
            .sum::<f64>()
            / (n - 1.0);
        var.sqrt()
    };
    Ok(Aggregate { mean, std })
}

/// All runs of one experiment. `model` holds the trained parameters of the
/// first run (seed = base_seed), for checkpointing.
#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<RunResult>,
    pub aggregate: Aggregate,
    pub model: ModelParams,
}

/// Whether [`run_many`] trains lifelong from the continuum or offline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunMode {
    Lifelong,
    Offline,
}

/// Executes `config.runs` independent runs with seeds base_seed..base_seed+runs,
/// drawing splits per the split policy, in parallel.
pub fn run_many(
    graph: &AttributeGraph,
    config: &ExperimentConfig,
    mode: RunMode,
) -> Result<ExperimentResult> {
    config.validate()?;
    let seeds: Vec<u64> = (0..config.runs as u64).map(|i| config.base_seed + i).collect();
    let outcomes: Vec<(RunResult, ModelParams)> = seeds
        .par_iter()
        .map(|&seed| {
            let split = config.split_for_run(graph, seed)?;
            match mode {
                RunMode::Lifelong => run_lifelong(graph, &split, config, seed),
                RunMode::Offline => run_offline(graph, &split, config, seed),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let model = outcomes[0].1.clone();
    let runs: Vec<RunResult> = outcomes.into_iter().map(|(r, _)| r).collect();
    let aggregate = aggregate(&runs)?;
    Ok(ExperimentResult { runs, aggregate, model })
}

/// One aggregate per memory size, same seeds across sizes so comparisons are
/// paired (split and stream order depend only on the run seed, never on M).
pub fn sweep_memory(
    graph: &AttributeGraph,
    config: &ExperimentConfig,
    sizes: &[usize],
) -> Result<Vec<(usize, ExperimentResult)>> {
    if sizes.is_empty() {
        return Err(FgnError::InvalidArgument("sweep sizes must be non-empty".into()));
    }
    sizes
        .iter()
        .map(|&m| {
            let mut c = config.clone();
            c.memory = m;
            Ok((m, run_many(graph, &c, RunMode::Lifelong)?))
        })
        .collect()
}

/// The metrics document emitted by the CLI and the C API:
/// `{config, runs: [...], aggregate: {mean, std}}`. With serde_json's sorted
/// object keys the serialization is byte-stable.
pub fn metrics_document(config: &serde_json::Value, result: &ExperimentResult) -> serde_json::Value {
    serde_json::json!({
        "config": config,
        "runs": result.runs,
        "aggregate": result.aggregate,
    })
}

/// Sweep output: an outer array with one metrics document per memory size.
pub fn sweep_document(
    config: &serde_json::Value,
    sweep: &[(usize, ExperimentResult)],
) -> serde_json::Value {
    let entries: Vec<serde_json::Value> = sweep
        .iter()
        .map(|(m, result)| {
            let mut per_size = config.clone();
            if let Some(obj) = per_size.as_object_mut() {
                obj.insert("memory".into(), serde_json::json!(m));
            }
            serde_json::json!({
                "memory": m,
                "config": per_size,
                "runs": result.runs,
                "aggregate": result.aggregate,
            })
        })
        .collect();
    serde_json::Value::Array(entries)
}
