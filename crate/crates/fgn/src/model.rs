//! The feature graph network: two feature broadcast layers and a dense head,
//! trained with softmax cross-entropy and plain SGD.
//!
//! All math is double precision with fixed reduction order, so identical
//! seeds and batch sequences give bitwise-identical parameters. Per-sample
//! computation stays on the sample's active block; the dense head is applied
//! sparsely over active rows, and inactive feature rows contribute only
//! through the head bias.

use std::io::{Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{FgnError, Result};
use crate::featgraph::{FeatureAdjacency, FeatureGraphSample};

/// Softsign activation x / (1 + |x|); strictly inside (-1, 1).
pub fn softsign(v: f64) -> f64 {
    v / (1.0 + v.abs())
}

/// Derivative of [`softsign`]: 1 / (1 + |x|)^2.
pub fn softsign_grad(v: f64) -> f64 {
    let d = 1.0 + v.abs();
    1.0 / (d * d)
}

/// Which parameter groups carry a bias term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct BiasConfig {
    pub broadcast: bool,
    pub head: bool,
}

impl Default for BiasConfig {
    fn default() -> Self {
        BiasConfig { broadcast: true, head: true }
    }
}

/// Weights of one feature broadcast layer: a c_in x c_out channel mix applied
/// after propagation through the normalized feature adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct BroadcastLayerParams {
    pub c_in: usize,
    pub c_out: usize,
    /// Row-major c_in x c_out.
    pub weight: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

/// Dense classification head over the flattened (feature-major, channel-minor)
/// broadcast output.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseHeadParams {
    /// F * c_last.
    pub input_dim: usize,
    pub classes: usize,
    /// Row-major input_dim x classes.
    pub weight: Vec<f64>,
    pub bias: Option<Vec<f64>>,
}

/// Full parameter set; also reused as the gradient container, since gradients
/// share every shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub feature_dim: usize,
    pub layer1: BroadcastLayerParams,
    pub layer2: BroadcastLayerParams,
    pub head: DenseHeadParams,
}

/// Architecture hyperparameters (input channels are fixed at 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub c1: usize,
    pub c2: usize,
    pub bias: BiasConfig,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig { c1: 1, c2: 2, bias: BiasConfig::default() }
    }
}

/// Optimization hyperparameters for one run.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub updates_per_sample: usize,
    pub model: ModelConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.01,
            batch_size: 10,
            updates_per_sample: 5,
            model: ModelConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 || !self.learning_rate.is_finite() {
            return Err(FgnError::InvalidArgument("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 || self.updates_per_sample == 0 {
            return Err(FgnError::InvalidArgument(
                "batch_size and updates_per_sample must be positive".into(),
            ));
        }
        if self.model.c1 == 0 || self.model.c2 == 0 {
            return Err(FgnError::InvalidArgument("channel sizes must be positive".into()));
        }
        Ok(())
    }
}

fn uniform_init(rng: &mut ChaCha8Rng, len: usize, fan_in: usize) -> Vec<f64> {
    let bound = 1.0 / (fan_in as f64).sqrt();
    (0..len).map(|_| rng.gen_range(-bound..=bound)).collect()
}

impl ModelParams {
    /// Seeded initialization: weights uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)],
    /// biases zero. Draw order is layer1, layer2, head.
    pub fn init(feature_dim: usize, classes: usize, config: &ModelConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (c1, c2) = (config.c1, config.c2);
        let layer1 = BroadcastLayerParams {
            c_in: 1,
            c_out: c1,
            weight: uniform_init(&mut rng, c1, 1),
            bias: config.bias.broadcast.then(|| vec![0.0; c1]),
        };
        let layer2 = BroadcastLayerParams {
            c_in: c1,
            c_out: c2,
            weight: uniform_init(&mut rng, c1 * c2, c1),
            bias: config.bias.broadcast.then(|| vec![0.0; c2]),
        };
        let input_dim = feature_dim * c2;
        let head = DenseHeadParams {
            input_dim,
            classes,
            weight: uniform_init(&mut rng, input_dim * classes, input_dim),
            bias: config.bias.head.then(|| vec![0.0; classes]),
        };
        ModelParams { feature_dim, layer1, layer2, head }
    }

    /// A zero-valued clone of this parameter set, used to accumulate gradients.
    pub fn zeros_like(&self) -> Self {
        let zero_layer = |l: &BroadcastLayerParams| BroadcastLayerParams {
            c_in: l.c_in,
            c_out: l.c_out,
            weight: vec![0.0; l.weight.len()],
            bias: l.bias.as_ref().map(|b| vec![0.0; b.len()]),
        };
        ModelParams {
            feature_dim: self.feature_dim,
            layer1: zero_layer(&self.layer1),
            layer2: zero_layer(&self.layer2),
            head: DenseHeadParams {
                input_dim: self.head.input_dim,
                classes: self.head.classes,
                weight: vec![0.0; self.head.weight.len()],
                bias: self.head.bias.as_ref().map(|b| vec![0.0; b.len()]),
            },
        }
    }

    pub fn classes(&self) -> usize {
        self.head.classes
    }

    /// Flat views over every tensor, in checkpoint order
    /// (layer1 w/b, layer2 w/b, head w/b).
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = vec![&self.layer1.weight];
        if let Some(b) = &self.layer1.bias {
            out.push(b);
        }
        out.push(&self.layer2.weight);
        if let Some(b) = &self.layer2.bias {
            out.push(b);
        }
        out.push(&self.head.weight);
        if let Some(b) = &self.head.bias {
            out.push(b);
        }
        out
    }

    /// Mutable counterpart of [`Self::tensors`].
    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = vec![&mut self.layer1.weight];
        if let Some(b) = &mut self.layer1.bias {
            out.push(b);
        }
        out.push(&mut self.layer2.weight);
        if let Some(b) = &mut self.layer2.bias {
            out.push(b);
        }
        out.push(&mut self.head.weight);
        if let Some(b) = &mut self.head.bias {
            out.push(b);
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }
}

/// Total parameter count for the two-broadcast-layer architecture with input
/// channel 1: (1*c1 [+c1]) + (c1*c2 [+c2]) + (F*c2*Z [+Z]).
pub fn count_params(feature_dim: usize, c1: usize, c2: usize, classes: usize, bias: BiasConfig) -> usize {
    let broadcast_bias = if bias.broadcast { c1 + c2 } else { 0 };
    let head_bias = if bias.head { classes } else { 0 };
    c1 + c1 * c2 + broadcast_bias + feature_dim * c2 * classes + head_bias
}

/// One broadcast layer on the active block: softsign(A_hat * X * W [+ bias]).
/// `x` is side x c_in row-major; the result is side x c_out.
pub fn broadcast_forward(
    adjacency_hat: &FeatureAdjacency,
    x: &[f64],
    layer: &BroadcastLayerParams,
) -> Result<Vec<f64>> {
    let (z, _) = broadcast_preactivation(adjacency_hat, x, layer)?;
    Ok(z.iter().map(|&v| softsign(v)).collect())
}

/// Pre-activation Z = A_hat * X * W [+ bias] plus the propagated input
/// A_hat * X (kept for the weight gradient).
fn broadcast_preactivation(
    adjacency_hat: &FeatureAdjacency,
    x: &[f64],
    layer: &BroadcastLayerParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let side = adjacency_hat.side();
    let (c_in, c_out) = (layer.c_in, layer.c_out);
    if x.len() != side * c_in {
        return Err(FgnError::InvalidArgument(format!(
            "broadcast input has {} entries, expected side {} * c_in {}",
            x.len(),
            side,
            c_in
        )));
    }
    // ax = A_hat * X
    let mut ax = vec![0.0; side * c_in];
    for i in 0..side {
        for j in 0..side {
            let a = adjacency_hat.get(i, j);
            for c in 0..c_in {
                ax[i * c_in + c] += a * x[j * c_in + c];
            }
        }
    }
    // z = ax * W + bias
    let mut z = vec![0.0; side * c_out];
    for i in 0..side {
        for o in 0..c_out {
            let mut acc = 0.0;
            for c in 0..c_in {
                acc += ax[i * c_in + c] * layer.weight[c * c_out + o];
            }
            if let Some(b) = &layer.bias {
                acc += b[o];
            }
            z[i * c_out + o] = acc;
        }
    }
    Ok((z, ax))
}

struct ForwardCache {
    ax0: Vec<f64>,
    z1: Vec<f64>,
    ah1: Vec<f64>,
    z2: Vec<f64>,
    h2: Vec<f64>,
    logits: Vec<f64>,
}

fn single_adjacency(sample: &FeatureGraphSample) -> Result<&FeatureAdjacency> {
    match sample.adjacency_hat.as_slice() {
        [adj] => Ok(adj),
        _ => Err(FgnError::InvalidArgument(
            "forward supports single-channel samples only (C = 1)".into(),
        )),
    }
}

fn forward_cached(sample: &FeatureGraphSample, params: &ModelParams) -> Result<ForwardCache> {
    let adj = single_adjacency(sample)?;
    let (z1, ax0) = broadcast_preactivation(adj, &sample.node_values, &params.layer1)?;
    let h1: Vec<f64> = z1.iter().map(|&v| softsign(v)).collect();
    let (z2, ah1) = broadcast_preactivation(adj, &h1, &params.layer2)?;
    let h2: Vec<f64> = z2.iter().map(|&v| softsign(v)).collect();

    let classes = params.head.classes;
    let c2 = params.layer2.c_out;
    let mut logits = match &params.head.bias {
        Some(b) => b.clone(),
        None => vec![0.0; classes],
    };
    for (i, &f) in sample.active.iter().enumerate() {
        for c in 0..c2 {
            let row = f as usize * c2 + c;
            let h = h2[i * c2 + c];
            for (z, logit) in logits.iter_mut().enumerate() {
                *logit += h * params.head.weight[row * classes + z];
            }
        }
    }
    Ok(ForwardCache { ax0, z1, ah1, z2, h2, logits })
}

/// Class logits for one sample. Inactive feature rows carry zero values
/// through both layers, so only active rows touch the head weights; the head
/// bias is the sole contribution of inactive features.
pub fn forward(sample: &FeatureGraphSample, params: &ModelParams) -> Result<Vec<f64>> {
    Ok(forward_cached(sample, params)?.logits)
}

/// Softmax probabilities with max-shift stabilization.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Softmax cross-entropy: -log softmax(logits)[label].
pub fn loss(logits: &[f64], label: usize) -> f64 {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum: f64 = logits.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    log_sum + max - logits[label]
}

/// Gradients of the mean batch loss, in a [`ModelParams`]-shaped container,
/// plus the mean loss itself.
///
/// With p = softmax(logits) and y the one-hot label, per sample:
///   d_logits = p - y
///   d_head_w[row(f,c), z] = h2[f,c] * d_logits[z]      (active rows only)
///   d_h2 = head_w * d_logits, restricted to active rows
///   d_z2 = d_h2 * softsign'(z2)
///   d_w2 = (A_hat h1)^T d_z2,  d_b2 = column sums of d_z2
///   d_h1 = A_hat (d_z2 w2^T)                            (A_hat symmetric)
///   d_z1 = d_h1 * softsign'(z1)
///   d_w1 = (A_hat x)^T d_z1,   d_b1 = column sums of d_z1
/// Contributions are averaged over the batch.
pub fn backward(batch: &[&FeatureGraphSample], params: &ModelParams) -> Result<(ModelParams, f64)> {
    if batch.is_empty() {
        return Err(FgnError::InvalidArgument("batch must be non-empty".into()));
    }
    let mut grads = params.zeros_like();
    let mut total_loss = 0.0;
    let scale = 1.0 / batch.len() as f64;
    let classes = params.head.classes;
    let c1 = params.layer1.c_out;
    let c2 = params.layer2.c_out;

    for &sample in batch {
        let adj = single_adjacency(sample)?;
        let cache = forward_cached(sample, params)?;
        total_loss += scale * loss(&cache.logits, sample.label);
        let side = sample.side();

        let mut d_logits = softmax(&cache.logits);
        d_logits[sample.label] -= 1.0;
        for d in &mut d_logits {
            *d *= scale;
        }

        if let Some(b) = &mut grads.head.bias {
            for (z, &d) in d_logits.iter().enumerate() {
                b[z] += d;
            }
        }
        let mut d_h2 = vec![0.0; side * c2];
        for (i, &f) in sample.active.iter().enumerate() {
            for c in 0..c2 {
                let row = f as usize * c2 + c;
                let h = cache.h2[i * c2 + c];
                let mut acc = 0.0;
                for (z, &d) in d_logits.iter().enumerate() {
                    grads.head.weight[row * classes + z] += h * d;
                    acc += params.head.weight[row * classes + z] * d;
                }
                d_h2[i * c2 + c] = acc;
            }
        }

        // layer 2
        let d_z2: Vec<f64> =
            d_h2.iter().zip(&cache.z2).map(|(&d, &z)| d * softsign_grad(z)).collect();
        for a in 0..c1 {
            for b in 0..c2 {
                let mut acc = 0.0;
                for i in 0..side {
                    acc += cache.ah1[i * c1 + a] * d_z2[i * c2 + b];
                }
                grads.layer2.weight[a * c2 + b] += acc;
            }
        }
        if let Some(bias) = &mut grads.layer2.bias {
            for i in 0..side {
                for b in 0..c2 {
                    bias[b] += d_z2[i * c2 + b];
                }
            }
        }
        // d_h1 = A_hat * (d_z2 * W2^T)
        let mut t = vec![0.0; side * c1];
        for i in 0..side {
            for a in 0..c1 {
                let mut acc = 0.0;
                for b in 0..c2 {
                    acc += d_z2[i * c2 + b] * params.layer2.weight[a * c2 + b];
                }
                t[i * c1 + a] = acc;
            }
        }
        let mut d_h1 = vec![0.0; side * c1];
        for i in 0..side {
            for j in 0..side {
                let a = adj.get(i, j);
                for c in 0..c1 {
                    d_h1[i * c1 + c] += a * t[j * c1 + c];
                }
            }
        }

        // layer 1
        let d_z1: Vec<f64> =
            d_h1.iter().zip(&cache.z1).map(|(&d, &z)| d * softsign_grad(z)).collect();
        for b in 0..c1 {
            let mut acc = 0.0;
            for i in 0..side {
                acc += cache.ax0[i] * d_z1[i * c1 + b];
            }
            grads.layer1.weight[b] += acc;
        }
        if let Some(bias) = &mut grads.layer1.bias {
            for i in 0..side {
                for b in 0..c1 {
                    bias[b] += d_z1[i * c1 + b];
                }
            }
        }
    }
    Ok((grads, total_loss))
}

/// In-place SGD update p <- p - lr * g. Non-finite gradients are a training
/// error surfaced to the harness.
pub fn sgd_step(params: &mut ModelParams, grads: &ModelParams, learning_rate: f64) -> Result<()> {
    for (p, g) in params.tensors_mut().into_iter().zip(grads.tensors()) {
        debug_assert_eq!(p.len(), g.len());
        for (pv, &gv) in p.iter_mut().zip(g) {
            if !gv.is_finite() {
                return Err(FgnError::Numerical("non-finite gradient in SGD step".into()));
            }
            *pv -= learning_rate * gv;
        }
    }
    Ok(())
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"FGNPARAM";
const CHECKPOINT_VERSION: u32 = 1;

/// Writes a parameter checkpoint: magic, version, shape header, then every
/// tensor as little-endian f64 words. Round-trips bit-exactly.
pub fn save_params(params: &ModelParams, mut out: impl Write) -> Result<()> {
    out.write_all(CHECKPOINT_MAGIC)?;
    out.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    let dims = [
        params.feature_dim as u64,
        params.layer1.c_out as u64,
        params.layer2.c_out as u64,
        params.head.classes as u64,
    ];
    for d in dims {
        out.write_all(&d.to_le_bytes())?;
    }
    let flags = (params.layer1.bias.is_some() as u8)
        | (params.layer2.bias.is_some() as u8) << 1
        | (params.head.bias.is_some() as u8) << 2;
    out.write_all(&[flags])?;
    for tensor in params.tensors() {
        for v in tensor {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a checkpoint written by [`save_params`].
pub fn load_params(mut input: impl Read) -> Result<ModelParams> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(FgnError::Format("not a parameter checkpoint".into()));
    }
    let mut word = [0u8; 4];
    input.read_exact(&mut word)?;
    let version = u32::from_le_bytes(word);
    if version != CHECKPOINT_VERSION {
        return Err(FgnError::Format(format!("unsupported checkpoint version {version}")));
    }
    let mut dims = [0u64; 4];
    for d in &mut dims {
        let mut buf = [0u8; 8];
        input.read_exact(&mut buf)?;
        *d = u64::from_le_bytes(buf);
    }
    let [feature_dim, c1, c2, classes] = dims.map(|d| d as usize);
    let mut flags = [0u8; 1];
    input.read_exact(&mut flags)?;
    let flags = flags[0];

    let mut read_tensor = |len: usize| -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(len);
        let mut buf = [0u8; 8];
        for _ in 0..len {
            input.read_exact(&mut buf)?;
            out.push(f64::from_le_bytes(buf));
        }
        Ok(out)
    };

    let layer1 = BroadcastLayerParams {
        c_in: 1,
        c_out: c1,
        weight: read_tensor(c1)?,
        bias: if flags & 1 != 0 { Some(read_tensor(c1)?) } else { None },
    };
    let layer2 = BroadcastLayerParams {
        c_in: c1,
        c_out: c2,
        weight: read_tensor(c1 * c2)?,
        bias: if flags & 2 != 0 { Some(read_tensor(c2)?) } else { None },
    };
    let head = DenseHeadParams {
        input_dim: feature_dim * c2,
        classes,
        weight: read_tensor(feature_dim * c2 * classes)?,
        bias: if flags & 4 != 0 { Some(read_tensor(classes)?) } else { None },
    };
    Ok(ModelParams { feature_dim, layer1, layer2, head })
}
