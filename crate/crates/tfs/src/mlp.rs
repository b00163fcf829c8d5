//! Feed-forward classifier over landmark features.
//!
//! Architecture: three hidden blocks of Linear -> batch norm -> ReLU with
//! 60, 40 and 30 units, then a linear output layer read through a per-class
//! sigmoid. Each class score is an independent probability (no softmax
//! coupling), and training minimizes per-class binary cross-entropy against
//! one-hot targets.
//!
//! Training is deliberately deterministic: one seeded generator drives
//! initialization and epoch shuffling, and all arithmetic is sequential, so
//! a given dataset, config and seed always reproduce bitwise-identical
//! weights.

use std::error::Error;
use std::fmt;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::landmark::{index, HandLandmarks, LANDMARK_COUNT};

/// Hidden layer widths, input to output.
pub const HIDDEN_DIMS: [usize; 3] = [60, 40, 30];

/// Stabilizer added to variances before the batch-norm division.
pub const BN_EPSILON: f64 = 1e-5;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPSILON: f64 = 1e-8;

/// Serialized model format revision.
pub const MODEL_FORMAT_VERSION: u32 = 1;

/// How a hand becomes a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoding {
    /// All 21 landmarks flattened as `[x0, y0, z0, x1, ...]`: 63 features.
    Absolute,
    /// Wrist-relative offsets `wrist - a_i` for `i` in 1..=20, flattened:
    /// 60 features. Invariant under hand translation.
    Relative,
}

impl Encoding {
    /// Length of the feature vector this encoding produces.
    pub fn feature_len(self) -> usize {
        match self {
            Encoding::Absolute => 3 * LANDMARK_COUNT,
            Encoding::Relative => 3 * (LANDMARK_COUNT - 1),
        }
    }
}

/// Encodes one hand as a feature vector of `encoding.feature_len()` values.
pub fn encode(hand: &HandLandmarks, encoding: Encoding) -> Vec<f64> {
    match encoding {
        Encoding::Absolute => hand
            .landmarks()
            .iter()
            .flat_map(|l| [l.x, l.y, l.z])
            .collect(),
        Encoding::Relative => {
            let wrist = hand.landmark(index::WRIST);
            hand.landmarks()[1..]
                .iter()
                .flat_map(|l| [wrist.x - l.x, wrist.y - l.y, wrist.z - l.z])
                .collect()
        }
    }
}

/// Whether batch norm uses current-batch or running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForwardMode {
    /// Normalize with the batch's own mean/variance.
    Train,
    /// Normalize with stored running statistics; row-independent and pure.
    Infer,
}

#[derive(Debug, Clone, PartialEq)]
struct Linear {
    /// `[out, in]`, row per output unit.
    weight: Array2<f64>,
    bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct BatchNorm {
    gamma: Array1<f64>,
    beta: Array1<f64>,
    running_mean: Array1<f64>,
    running_var: Array1<f64>,
}

/// Shape or input mismatches when driving a model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MlpError {
    DimensionMismatch { expected: usize, got: usize },
}

impl fmt::Display for MlpError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MlpError::DimensionMismatch { expected, got } => {
                write!(f, "feature dimension mismatch: model expects {expected}, got {got}")
            }
        }
    }
}

impl Error for MlpError {}

/// The classifier: feature encoding, class labels and all parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    encoding: Encoding,
    class_labels: Vec<String>,
    layers: Vec<Linear>,
    norms: Vec<BatchNorm>,
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Per-element binary cross-entropy computed from the logit, never from the
/// probability, so it stays finite for any finite logit.
fn bce_from_logit(logit: f64, target: f64) -> f64 {
    logit.max(0.0) - logit * target + (-logit.abs()).exp().ln_1p()
}

/// Output of [`MlpModel::predict`].
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    /// Index into the model's class labels (ties broken to lowest index).
    pub class_index: usize,
    /// The winning label.
    pub label: String,
    /// Per-class sigmoid scores in label order.
    pub scores: Vec<f64>,
}

/// Per-batch forward intermediates needed by the backward pass.
struct ForwardCache {
    /// Inputs to each linear layer (x, h1, h2, h3).
    inputs: Vec<Array2<f64>>,
    /// Batch-norm outputs before ReLU, per hidden block.
    bn_out: Vec<Array2<f64>>,
    /// Normalized activations, per hidden block.
    xhat: Vec<Array2<f64>>,
    /// Biased batch statistics, per hidden block.
    mean: Vec<Array1<f64>>,
    var: Vec<Array1<f64>>,
    logits: Array2<f64>,
}

/// Parameter gradients, aligned with the model's flat parameter order.
#[derive(Debug, Clone)]
pub struct Gradients {
    weight: Vec<Array2<f64>>,
    bias: Vec<Array1<f64>>,
    gamma: Vec<Array1<f64>>,
    beta: Vec<Array1<f64>>,
}

impl Gradients {
    /// Gradients in the same order as [`MlpModel::params_flat`].
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in 0..self.weight.len() {
            out.extend(self.weight[l].iter());
            out.extend(self.bias[l].iter());
            if l < self.gamma.len() {
                out.extend(self.gamma[l].iter());
                out.extend(self.beta[l].iter());
            }
        }
        out
    }
}

impl MlpModel {
    /// Freshly initialized model: uniform He-style weights drawn from a
    /// seeded generator, zero biases, unit gamma, zero beta, running stats
    /// at (0, 1).
    ///
    /// Panics if fewer than two class labels are given.
    pub fn new_random(encoding: Encoding, class_labels: Vec<String>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init(encoding, class_labels, &mut rng)
    }

    fn init(encoding: Encoding, class_labels: Vec<String>, rng: &mut ChaCha8Rng) -> Self {
        assert!(class_labels.len() >= 2, "need at least two classes");
        let dims = layer_dims(encoding, class_labels.len());
        let mut layers = Vec::with_capacity(4);
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / fan_in as f64).sqrt();
            let weight = Array2::from_shape_fn((fan_out, fan_in), |_| {
                rng.random_range(-limit..limit)
            });
            layers.push(Linear {
                weight,
                bias: Array1::zeros(fan_out),
            });
        }
        let norms = HIDDEN_DIMS
            .iter()
            .map(|&d| BatchNorm {
                gamma: Array1::ones(d),
                beta: Array1::zeros(d),
                running_mean: Array1::zeros(d),
                running_var: Array1::ones(d),
            })
            .collect();
        MlpModel {
            encoding,
            class_labels,
            layers,
            norms,
        }
    }

    pub fn encoding(&self) -> Encoding {
        self.encoding
    }

    /// Class labels in score order.
    pub fn class_labels(&self) -> &[String] {
        &self.class_labels
    }

    pub fn num_classes(&self) -> usize {
        self.class_labels.len()
    }

    pub fn input_dim(&self) -> usize {
        self.encoding.feature_len()
    }

    /// Scores for a batch of feature rows. Does not mutate the model in
    /// either mode; running statistics only move during [`train`].
    pub fn forward_batch(
        &self,
        x: ArrayView2<f64>,
        mode: ForwardMode,
    ) -> Result<Array2<f64>, MlpError> {
        if x.ncols() != self.input_dim() {
            return Err(MlpError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        let logits = match mode {
            ForwardMode::Train => self.forward_cached(&x.to_owned()).logits,
            ForwardMode::Infer => {
                let mut h = x.to_owned();
                for l in 0..3 {
                    let z = h.dot(&self.layers[l].weight.t()) + &self.layers[l].bias;
                    let bn = &self.norms[l];
                    let std = bn.running_var.mapv(|v| (v + BN_EPSILON).sqrt());
                    let a = (z - &bn.running_mean) / &std * &bn.gamma + &bn.beta;
                    h = a.mapv(|v| v.max(0.0));
                }
                h.dot(&self.layers[3].weight.t()) + &self.layers[3].bias
            }
        };
        Ok(logits.mapv(sigmoid))
    }

    /// Scores for a single feature vector.
    pub fn forward(&self, features: &[f64], mode: ForwardMode) -> Result<Vec<f64>, MlpError> {
        let x = ArrayView2::from_shape((1, features.len()), features)
            .expect("slice reshapes to one row");
        Ok(self.forward_batch(x, mode)?.row(0).to_vec())
    }

    /// Encodes a hand with the model's own encoding and classifies it in
    /// Infer mode.
    pub fn predict(&self, hand: &HandLandmarks) -> Prediction {
        let features = encode(hand, self.encoding);
        let scores = self
            .forward(&features, ForwardMode::Infer)
            .expect("own encoding always matches the input dimension");
        let class_index = argmax(&scores);
        Prediction {
            class_index,
            label: self.class_labels[class_index].clone(),
            scores,
        }
    }

    /// Train-mode forward keeping everything the backward pass needs.
    fn forward_cached(&self, x: &Array2<f64>) -> ForwardCache {
        let mut inputs = vec![x.clone()];
        let mut bn_out = Vec::with_capacity(3);
        let mut xhat = Vec::with_capacity(3);
        let mut mean = Vec::with_capacity(3);
        let mut var = Vec::with_capacity(3);
        let mut h = x.clone();
        for l in 0..3 {
            let z = h.dot(&self.layers[l].weight.t()) + &self.layers[l].bias;
            let mu = z.mean_axis(Axis(0)).expect("batch is nonempty");
            // Biased (population) variance: used both here and for the
            // running-average update, so batches of one stay well-defined.
            let centered = &z - &mu;
            let v = centered
                .mapv(|c| c * c)
                .mean_axis(Axis(0))
                .expect("batch is nonempty");
            let std = v.mapv(|w| (w + BN_EPSILON).sqrt());
            let xh = centered / &std;
            let bn = &self.norms[l];
            let a = &xh * &bn.gamma + &bn.beta;
            h = a.mapv(|w| w.max(0.0));
            inputs.push(h.clone());
            bn_out.push(a);
            xhat.push(xh);
            mean.push(mu);
            var.push(v);
        }
        let logits = h.dot(&self.layers[3].weight.t()) + &self.layers[3].bias;
        ForwardCache {
            inputs,
            bn_out,
            xhat,
            mean,
            var,
            logits,
        }
    }

    /// Mean-over-batch, sum-over-classes binary cross-entropy and its exact
    /// gradients for every parameter, evaluated in Train mode.
    pub fn loss_and_gradients(
        &self,
        x: ArrayView2<f64>,
        targets: ArrayView2<f64>,
    ) -> Result<(f64, Gradients), MlpError> {
        if x.ncols() != self.input_dim() {
            return Err(MlpError::DimensionMismatch {
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        if targets.ncols() != self.num_classes() || targets.nrows() != x.nrows() {
            return Err(MlpError::DimensionMismatch {
                expected: self.num_classes(),
                got: targets.ncols(),
            });
        }
        let cache = self.forward_cached(&x.to_owned());
        Ok(self.backward(&cache, targets))
    }

    fn backward(&self, cache: &ForwardCache, targets: ArrayView2<f64>) -> (f64, Gradients) {
        let m = cache.logits.nrows() as f64;
        let mut loss = 0.0;
        for (z, t) in cache.logits.iter().zip(targets.iter()) {
            loss += bce_from_logit(*z, *t);
        }
        loss /= m;

        let mut grads = Gradients {
            weight: vec![Array2::zeros((0, 0)); 4],
            bias: vec![Array1::zeros(0); 4],
            gamma: vec![Array1::zeros(0); 3],
            beta: vec![Array1::zeros(0); 3],
        };

        // d(loss)/d(logit) for the stable BCE is (sigmoid - target) / m.
        let mut dz = ndarray::Zip::from(&cache.logits)
            .and(&targets)
            .map_collect(|&z, &t| (sigmoid(z) - t) / m);
        grads.weight[3] = dz.t().dot(&cache.inputs[3]);
        grads.bias[3] = dz.sum_axis(Axis(0));
        let mut dh = dz.dot(&self.layers[3].weight);

        for l in (0..3).rev() {
            // Through ReLU: pass gradient where the pre-activation was > 0.
            let da = ndarray::Zip::from(&dh)
                .and(&cache.bn_out[l])
                .map_collect(|&g, &a| if a > 0.0 { g } else { 0.0 });
            let bn = &self.norms[l];
            grads.gamma[l] = (&da * &cache.xhat[l]).sum_axis(Axis(0));
            grads.beta[l] = da.sum_axis(Axis(0));
            // Batch-norm backward through the batch statistics themselves.
            let dxhat = &da * &bn.gamma;
            let std = cache.var[l].mapv(|v| (v + BN_EPSILON).sqrt());
            let mean_dxhat = dxhat.mean_axis(Axis(0)).expect("batch is nonempty");
            let mean_dxhat_xhat = (&dxhat * &cache.xhat[l])
                .mean_axis(Axis(0))
                .expect("batch is nonempty");
            dz = (dxhat - &mean_dxhat - &cache.xhat[l] * &mean_dxhat_xhat) / &std;
            grads.weight[l] = dz.t().dot(&cache.inputs[l]);
            grads.bias[l] = dz.sum_axis(Axis(0));
            if l > 0 {
                dh = dz.dot(&self.layers[l].weight);
            }
        }
        (loss, grads)
    }

    /// Number of trainable parameters (weights, biases, gamma, beta).
    pub fn param_count(&self) -> usize {
        let mut n = 0;
        for l in 0..4 {
            n += self.layers[l].weight.len() + self.layers[l].bias.len();
            if l < 3 {
                n += self.norms[l].gamma.len() + self.norms[l].beta.len();
            }
        }
        n
    }

    /// All trainable parameters flattened in a fixed order: per layer,
    /// weight (row-major), bias, then gamma and beta for hidden layers.
    /// Running statistics are not parameters and are excluded.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in 0..4 {
            out.extend(self.layers[l].weight.iter());
            out.extend(self.layers[l].bias.iter());
            if l < 3 {
                out.extend(self.norms[l].gamma.iter());
                out.extend(self.norms[l].beta.iter());
            }
        }
        out
    }

    /// Writes back a parameter vector produced by [`params_flat`].
    /// Panics if the length differs.
    pub fn set_params_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.param_count(), "parameter count mismatch");
        let mut it = flat.iter();
        self.visit_params_mut(|p| *p = *it.next().expect("length checked above"));
    }

    /// Visits every trainable parameter mutably in flat order.
    fn visit_params_mut<F: FnMut(&mut f64)>(&mut self, mut f: F) {
        for l in 0..4 {
            for p in self.layers[l].weight.iter_mut() {
                f(p);
            }
            for p in self.layers[l].bias.iter_mut() {
                f(p);
            }
            if l < 3 {
                for p in self.norms[l].gamma.iter_mut() {
                    f(p);
                }
                for p in self.norms[l].beta.iter_mut() {
                    f(p);
                }
            }
        }
    }

    /// Serializes the complete model (including running statistics) as
    /// JSON. Values survive a round trip bitwise.
    pub fn to_bytes(&self) -> Vec<u8> {
        let file = ModelFile {
            format_version: MODEL_FORMAT_VERSION,
            encoding: self.encoding,
            layer_dims: layer_dims(self.encoding, self.num_classes()),
            class_labels: self.class_labels.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerFile {
                    weight: l.weight.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
            norms: self
                .norms
                .iter()
                .map(|n| NormFile {
                    gamma: n.gamma.to_vec(),
                    beta: n.beta.to_vec(),
                    running_mean: n.running_mean.to_vec(),
                    running_var: n.running_var.to_vec(),
                })
                .collect(),
        };
        serde_json::to_vec_pretty(&file).expect("model file serialization is total")
    }

    /// Parses and validates a serialized model.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ModelFormatError> {
        let file: ModelFile = serde_json::from_slice(bytes).map_err(ModelFormatError::Json)?;
        if file.format_version != MODEL_FORMAT_VERSION {
            return Err(ModelFormatError::UnsupportedVersion(file.format_version));
        }
        if file.class_labels.len() < 2 {
            return Err(ModelFormatError::Shape("fewer than two class labels".into()));
        }
        let dims = layer_dims(file.encoding, file.class_labels.len());
        if file.layer_dims != dims {
            return Err(ModelFormatError::Shape(format!(
                "layer_dims {:?} do not match required {:?}",
                file.layer_dims, dims
            )));
        }
        if file.layers.len() != 4 || file.norms.len() != 3 {
            return Err(ModelFormatError::Shape(format!(
                "expected 4 layers and 3 norms, got {} and {}",
                file.layers.len(),
                file.norms.len()
            )));
        }
        let mut layers = Vec::with_capacity(4);
        for (l, lf) in file.layers.into_iter().enumerate() {
            let (fan_in, fan_out) = (dims[l], dims[l + 1]);
            if lf.weight.len() != fan_in * fan_out || lf.bias.len() != fan_out {
                return Err(ModelFormatError::Shape(format!(
                    "layer {l} weight/bias sizes do not match dims"
                )));
            }
            if lf.weight.iter().chain(lf.bias.iter()).any(|v| !v.is_finite()) {
                return Err(ModelFormatError::Shape(format!(
                    "layer {l} contains non-finite values"
                )));
            }
            layers.push(Linear {
                weight: Array2::from_shape_vec((fan_out, fan_in), lf.weight)
                    .expect("length checked above"),
                bias: Array1::from_vec(lf.bias),
            });
        }
        let mut norms = Vec::with_capacity(3);
        for (l, nf) in file.norms.into_iter().enumerate() {
            let d = HIDDEN_DIMS[l];
            for (name, v) in [
                ("gamma", &nf.gamma),
                ("beta", &nf.beta),
                ("running_mean", &nf.running_mean),
                ("running_var", &nf.running_var),
            ] {
                if v.len() != d {
                    return Err(ModelFormatError::Shape(format!(
                        "norm {l} {name} has length {} (expected {d})",
                        v.len()
                    )));
                }
                if v.iter().any(|w| !w.is_finite()) {
                    return Err(ModelFormatError::Shape(format!(
                        "norm {l} {name} contains non-finite values"
                    )));
                }
            }
            if nf.running_var.iter().any(|&v| v <= 0.0) {
                return Err(ModelFormatError::Shape(format!(
                    "norm {l} running_var must be strictly positive"
                )));
            }
            norms.push(BatchNorm {
                gamma: Array1::from_vec(nf.gamma),
                beta: Array1::from_vec(nf.beta),
                running_mean: Array1::from_vec(nf.running_mean),
                running_var: Array1::from_vec(nf.running_var),
            });
        }
        Ok(MlpModel {
            encoding: file.encoding,
            class_labels: file.class_labels,
            layers,
            norms,
        })
    }
}

fn layer_dims(encoding: Encoding, n_classes: usize) -> Vec<usize> {
    vec![
        encoding.feature_len(),
        HIDDEN_DIMS[0],
        HIDDEN_DIMS[1],
        HIDDEN_DIMS[2],
        n_classes,
    ]
}

/// Serialized-model failures.
#[derive(Debug)]
pub enum ModelFormatError {
    Json(serde_json::Error),
    UnsupportedVersion(u32),
    Shape(String),
}

impl fmt::Display for ModelFormatError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelFormatError::Json(e) => write!(f, "model file is not valid JSON: {e}"),
            ModelFormatError::UnsupportedVersion(v) => {
                write!(f, "unsupported model format version {v} (expected {MODEL_FORMAT_VERSION})")
            }
            ModelFormatError::Shape(msg) => write!(f, "model file is inconsistent: {msg}"),
        }
    }
}

impl Error for ModelFormatError {}

#[derive(Serialize, Deserialize)]
struct LayerFile {
    weight: Vec<f64>,
    bias: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct NormFile {
    gamma: Vec<f64>,
    beta: Vec<f64>,
    running_mean: Vec<f64>,
    running_var: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    encoding: Encoding,
    layer_dims: Vec<usize>,
    class_labels: Vec<String>,
    layers: Vec<LayerFile>,
    norms: Vec<NormFile>,
}

/// Gradient update rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    /// Adam with beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8.
    Adam,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub optimizer: OptimizerKind,
    /// Weight of the new batch in the running-statistics update:
    /// `running = (1 - momentum) * running + momentum * batch`.
    pub bn_momentum: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            optimizer: OptimizerKind::Adam,
            bn_momentum: 0.1,
        }
    }
}

/// Per-epoch training telemetry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochStats {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean loss over the epoch's samples.
    pub loss: f64,
    /// Running train accuracy: fraction of the epoch's (shuffled) training
    /// samples whose batch-mode argmax matched the label.
    pub accuracy: f64,
}

/// Training failures.
#[derive(Debug)]
pub enum TrainError {
    /// Empty dataset or fewer than two distinct labels.
    InsufficientData(String),
    /// A hyperparameter is out of range.
    InvalidConfig(String),
    /// Loss became NaN or infinite during the given 1-based epoch.
    NonFiniteLoss { epoch: usize },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::InsufficientData(msg) => write!(f, "insufficient training data: {msg}"),
            TrainError::InvalidConfig(msg) => write!(f, "invalid training config: {msg}"),
            TrainError::NonFiniteLoss { epoch } => {
                write!(f, "loss became non-finite in epoch {epoch}; try a lower learning rate")
            }
        }
    }
}

impl Error for TrainError {}

struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: u64,
}

/// Trains a model from labelled hands.
///
/// Classes are the sorted distinct labels in `data` (at least two
/// required). Initialization, shuffling and every update are driven by
/// `config.seed`, so identical inputs yield bitwise-identical models.
pub fn train(
    data: &[(HandLandmarks, String)],
    config: &TrainConfig,
    encoding: Encoding,
) -> Result<(MlpModel, Vec<EpochStats>), TrainError> {
    if config.epochs == 0 || config.batch_size == 0 {
        return Err(TrainError::InvalidConfig(
            "epochs and batch_size must be >= 1".into(),
        ));
    }
    if !config.learning_rate.is_finite() || config.learning_rate <= 0.0 {
        return Err(TrainError::InvalidConfig(format!(
            "learning_rate must be finite and > 0, got {}",
            config.learning_rate
        )));
    }
    if !(config.bn_momentum > 0.0 && config.bn_momentum <= 1.0) {
        return Err(TrainError::InvalidConfig(format!(
            "bn_momentum must be in (0, 1], got {}",
            config.bn_momentum
        )));
    }
    let mut labels: Vec<String> = data.iter().map(|(_, l)| l.clone()).collect();
    labels.sort();
    labels.dedup();
    if labels.len() < 2 {
        return Err(TrainError::InsufficientData(format!(
            "need at least 2 distinct labels, got {}",
            labels.len()
        )));
    }

    let n = data.len();
    let d = encoding.feature_len();
    let c = labels.len();
    let mut x = Array2::zeros((n, d));
    let mut t = Array2::zeros((n, c));
    for (i, (hand, label)) in data.iter().enumerate() {
        let features = encode(hand, encoding);
        x.row_mut(i).assign(&Array1::from_vec(features));
        let class = labels
            .binary_search(label)
            .expect("every label is in the sorted label set");
        t[(i, class)] = 1.0;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = MlpModel::init(encoding, labels, &mut rng);
    let mut adam = AdamState {
        m: vec![0.0; model.param_count()],
        v: vec![0.0; model.param_count()],
        t: 0,
    };

    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut correct = 0usize;
        for batch in order.chunks(config.batch_size) {
            let xb = x.select(Axis(0), batch);
            let tb = t.select(Axis(0), batch);
            let cache = model.forward_cached(&xb);
            // Fold this batch's statistics into the running averages.
            for l in 0..3 {
                let bn = &mut model.norms[l];
                bn.running_mean = &bn.running_mean * (1.0 - config.bn_momentum)
                    + &cache.mean[l] * config.bn_momentum;
                bn.running_var = &bn.running_var * (1.0 - config.bn_momentum)
                    + &cache.var[l] * config.bn_momentum;
            }
            let (loss, grads) = model.backward(&cache, tb.view());
            if !loss.is_finite() {
                return Err(TrainError::NonFiniteLoss { epoch });
            }
            epoch_loss += loss * batch.len() as f64;
            for (row, &sample) in batch.iter().enumerate() {
                let logits = cache.logits.row(row);
                let target_class = t
                    .row(sample)
                    .iter()
                    .position(|&v| v == 1.0)
                    .expect("one-hot row has a 1");
                if argmax(logits.as_slice().expect("row is contiguous")) == target_class {
                    correct += 1;
                }
            }
            apply_update(&mut model, &grads, config, &mut adam);
        }
        history.push(EpochStats {
            epoch,
            loss: epoch_loss / n as f64,
            accuracy: correct as f64 / n as f64,
        });
    }
    Ok((model, history))
}

fn apply_update(model: &mut MlpModel, grads: &Gradients, config: &TrainConfig, adam: &mut AdamState) {
    let g = grads.to_flat();
    match config.optimizer {
        OptimizerKind::Sgd => {
            let mut k = 0;
            model.visit_params_mut(|p| {
                *p -= config.learning_rate * g[k];
                k += 1;
            });
        }
        OptimizerKind::Adam => {
            adam.t += 1;
            let bc1 = 1.0 - ADAM_BETA1.powi(adam.t as i32);
            let bc2 = 1.0 - ADAM_BETA2.powi(adam.t as i32);
            let mut k = 0;
            model.visit_params_mut(|p| {
                adam.m[k] = ADAM_BETA1 * adam.m[k] + (1.0 - ADAM_BETA1) * g[k];
                adam.v[k] = ADAM_BETA2 * adam.v[k] + (1.0 - ADAM_BETA2) * g[k] * g[k];
                let mhat = adam.m[k] / bc1;
                let vhat = adam.v[k] / bc2;
                *p -= config.learning_rate * mhat / (vhat.sqrt() + ADAM_EPSILON);
                k += 1;
            });
        }
    }
}
