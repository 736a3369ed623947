//! Built-in three-class classifiers: multinomial logistic regression and a
//! multilayer perceptron, trained from scratch with deterministic
//! mini-batch gradient descent.
//!
//! Both models consume the flattened, normalized `T x 4L` window. All
//! randomness (initialization, shuffling) flows from the seed in
//! [`TrainConfig`], so a (dataset, config) pair reproduces parameters
//! bit-for-bit.

use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Deserialize;

use crate::book::SnapshotWindow;
use crate::error::{Error, Result};
use crate::ingest::{apply_normalization, NormalizationStats};
use crate::label::ClassLabel;

pub const N_CLASSES: usize = 3;

/// Architecture tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lr,
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Lr => "lr",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.pad(self.name())
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" | "logistic-regression" => Ok(ModelKind::Lr),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Config(format!(
                "unknown model '{other}': expected lr | mlp"
            ))),
        }
    }
}

/// One dense layer: `out x in` weights plus a bias per output.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    fn zeros_like(&self) -> DenseLayer {
        DenseLayer {
            weights: Array2::zeros(self.weights.raw_dim()),
            bias: Array1::zeros(self.bias.raw_dim()),
        }
    }
}

/// Model parameters. Logistic regression is a single `3 x D` map; the MLP
/// stacks rectified hidden layers before the 3-way output.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub kind: ModelKind,
    pub input_dim: usize,
    pub layers: Vec<DenseLayer>,
}

impl ModelParams {
    pub fn is_finite(&self) -> bool {
        self.layers.iter().all(|l| {
            l.weights.iter().all(|w| w.is_finite()) && l.bias.iter().all(|b| b.is_finite())
        })
    }
}

fn default_seed() -> u64 {
    42
}
fn default_learning_rate() -> f64 {
    1e-3
}
fn default_batch_size() -> usize {
    128
}
fn default_epochs() -> usize {
    30
}
fn default_hidden_sizes() -> Vec<usize> {
    vec![128, 64]
}
fn default_weight_decay() -> f64 {
    1e-4
}
fn default_shuffle() -> bool {
    true
}

/// Training hyperparameters. Defaults target minutes-scale desk training.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    /// Hidden layer widths; ignored by logistic regression.
    #[serde(default = "default_hidden_sizes")]
    pub hidden_sizes: Vec<usize>,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    #[serde(default = "default_shuffle")]
    pub shuffle: bool,
    /// Fraction of the training windows held out (chronological tail) for
    /// optional early stopping. 0 disables the split.
    #[serde(default)]
    pub validation_fraction: f64,
    /// Stop after this many epochs without validation improvement.
    /// 0 disables early stopping.
    #[serde(default)]
    pub patience: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            seed: default_seed(),
            learning_rate: default_learning_rate(),
            batch_size: default_batch_size(),
            epochs: default_epochs(),
            hidden_sizes: default_hidden_sizes(),
            weight_decay: default_weight_decay(),
            shuffle: default_shuffle(),
            validation_fraction: 0.0,
            patience: 0,
        }
    }
}

impl TrainConfig {
    fn check(&self) -> Result<()> {
        if !self.learning_rate.is_finite()
            || self.learning_rate <= 0.0
            || self.batch_size == 0
            || self.epochs == 0
        {
            return Err(Error::Config(
                "learning rate, batch size and epoch count must be positive".into(),
            ));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::Config("weight decay must be non-negative".into()));
        }
        if !(0.0..0.9).contains(&self.validation_fraction) {
            return Err(Error::Config(
                "validation fraction must lie in [0, 0.9)".into(),
            ));
        }
        Ok(())
    }
}

/// Deterministic pseudo-random initialization. The same seed reproduces
/// parameters bit-for-bit.
pub fn init_params(
    kind: ModelKind,
    input_dim: usize,
    hidden_sizes: &[usize],
    seed: u64,
) -> Result<ModelParams> {
    if input_dim == 0 {
        return Err(Error::Config("input dimension must be positive".into()));
    }
    let widths: Vec<usize> = match kind {
        ModelKind::Lr => vec![input_dim, N_CLASSES],
        ModelKind::Mlp => {
            if hidden_sizes.contains(&0) {
                return Err(Error::Config("hidden layer widths must be positive".into()));
            }
            let mut widths = vec![input_dim];
            widths.extend_from_slice(hidden_sizes);
            widths.push(N_CLASSES);
            widths
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(widths.len() - 1);
    for pair in widths.windows(2) {
        let (fan_in, fan_out) = (pair[0], pair[1]);
        let scale = match kind {
            ModelKind::Lr => 0.01,
            ModelKind::Mlp => (2.0 / fan_in as f64).sqrt(),
        };
        let normal = Normal::new(0.0, scale).expect("finite stddev");
        let weights =
            Array2::from_shape_fn((fan_out, fan_in), |_| normal.sample(&mut rng));
        layers.push(DenseLayer {
            weights,
            bias: Array1::zeros(fan_out),
        });
    }
    Ok(ModelParams {
        kind,
        input_dim,
        layers,
    })
}

fn check_input_dim(params: &ModelParams, got: usize) -> Result<()> {
    if got != params.input_dim {
        return Err(Error::DimensionMismatch {
            expected: params.input_dim,
            got,
        });
    }
    Ok(())
}

/// Batch forward pass keeping the per-layer activations for backprop.
/// `activations[0]` is the input; the last entry holds output logits.
fn forward_batch(params: &ModelParams, inputs: ArrayView2<'_, f64>) -> Vec<Array2<f64>> {
    let mut activations: Vec<Array2<f64>> = Vec::with_capacity(params.layers.len() + 1);
    activations.push(inputs.to_owned());
    for (i, layer) in params.layers.iter().enumerate() {
        let mut z = activations[i].dot(&layer.weights.t());
        z += &layer.bias;
        if i + 1 < params.layers.len() {
            z.mapv_inplace(|v| v.max(0.0));
        }
        activations.push(z);
    }
    activations
}

fn softmax_rows(logits: &Array2<f64>) -> Array2<f64> {
    let mut probs = logits.clone();
    for mut row in probs.rows_mut() {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    probs
}

/// Class probabilities for one flattened, normalized window.
pub fn forward(params: &ModelParams, input: &[f64]) -> Result<[f64; N_CLASSES]> {
    check_input_dim(params, input.len())?;
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("model input".into()));
    }
    let x = Array2::from_shape_vec((1, input.len()), input.to_vec())
        .expect("shape matches input length");
    let activations = forward_batch(params, x.view());
    let probs = softmax_rows(activations.last().expect("at least one layer"));
    let mut out = [0.0; N_CLASSES];
    for (o, p) in out.iter_mut().zip(probs.row(0)) {
        *o = *p;
    }
    Ok(out)
}

/// Mean cross-entropy over the batch plus an L2 weight penalty
/// (`0.5 * weight_decay * sum of squared weights`, biases excluded), and
/// its exact gradient with the same shapes as the parameters.
pub fn loss_and_gradient(
    params: &ModelParams,
    inputs: ArrayView2<'_, f64>,
    labels: &[ClassLabel],
    weight_decay: f64,
) -> Result<(f64, Vec<DenseLayer>)> {
    let batch = inputs.nrows();
    if batch == 0 {
        return Err(Error::EmptyInput("loss over an empty batch".into()));
    }
    if labels.len() != batch {
        return Err(Error::DimensionMismatch {
            expected: batch,
            got: labels.len(),
        });
    }
    check_input_dim(params, inputs.ncols())?;

    let activations = forward_batch(params, inputs);
    let logits = activations.last().expect("at least one layer");

    // Mean negative log-likelihood via log-sum-exp.
    let mut nll = 0.0;
    for (row, label) in logits.rows().into_iter().zip(labels) {
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let log_sum: f64 = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        nll += log_sum - row[label.index()];
    }
    let mut loss = nll / batch as f64;
    if weight_decay > 0.0 {
        let penalty: f64 = params
            .layers
            .iter()
            .map(|l| l.weights.iter().map(|w| w * w).sum::<f64>())
            .sum();
        loss += 0.5 * weight_decay * penalty;
    }

    // Backprop: d(loss)/d(logits) = (probs - onehot) / batch.
    let mut delta = softmax_rows(logits);
    for (mut row, label) in delta.rows_mut().into_iter().zip(labels) {
        row[label.index()] -= 1.0;
    }
    delta /= batch as f64;

    let mut gradients: Vec<DenseLayer> =
        params.layers.iter().map(DenseLayer::zeros_like).collect();
    for i in (0..params.layers.len()).rev() {
        let input_activation = &activations[i];
        gradients[i].weights = delta.t().dot(input_activation);
        if weight_decay > 0.0 {
            gradients[i]
                .weights
                .scaled_add(weight_decay, &params.layers[i].weights);
        }
        gradients[i].bias = delta.sum_axis(Axis(0));
        if i > 0 {
            let mut upstream = delta.dot(&params.layers[i].weights);
            // Rectifier gate: activations[i] holds max(0, z) of layer i-1.
            upstream
                .zip_mut_with(&activations[i], |g, &a| *g = if a > 0.0 { *g } else { 0.0 });
            delta = upstream;
        }
    }
    Ok((loss, gradients))
}

/// Final parameters plus the per-epoch mean training loss.
#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub params: ModelParams,
    pub loss_trace: Vec<f64>,
}

/// Flattened, normalized model inputs paired with labels.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub inputs: Array2<f64>,
    pub labels: Vec<ClassLabel>,
}

impl TrainingSet {
    /// Normalize windows with the training statistics and flatten them.
    pub fn from_windows(
        windows: &[SnapshotWindow],
        labels: &[ClassLabel],
        stats: &NormalizationStats,
    ) -> Result<TrainingSet> {
        if windows.is_empty() {
            return Err(Error::EmptyInput("no training windows".into()));
        }
        if windows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: windows.len(),
                got: labels.len(),
            });
        }
        let dim = windows[0].history_len() * windows[0].feature_dim();
        let mut inputs = Array2::zeros((windows.len(), dim));
        for (i, window) in windows.iter().enumerate() {
            let normalized = apply_normalization(window, stats)?;
            let flat = normalized.flattened();
            if flat.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: flat.len(),
                });
            }
            for (j, v) in flat.into_iter().enumerate() {
                inputs[(i, j)] = v;
            }
        }
        Ok(TrainingSet {
            inputs,
            labels: labels.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Seeded mini-batch gradient descent. Fully deterministic given the
/// training set and config.
pub fn train(set: &TrainingSet, kind: ModelKind, config: &TrainConfig) -> Result<TrainedModel> {
    config.check()?;
    if set.is_empty() {
        return Err(Error::EmptyInput("empty training dataset".into()));
    }
    let n = set.len();
    let val_len = (n as f64 * config.validation_fraction).floor() as usize;
    let train_len = n - val_len;
    if train_len == 0 {
        return Err(Error::Config("validation split leaves no training data".into()));
    }

    let mut params = init_params(kind, set.inputs.ncols(), &config.hidden_sizes, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut order: Vec<usize> = (0..train_len).collect();
    let mut loss_trace = Vec::with_capacity(config.epochs);
    let mut best_val = f64::INFINITY;
    let mut epochs_since_best = 0usize;

    for epoch in 0..config.epochs {
        if config.shuffle {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch_inputs = set.inputs.select(Axis(0), chunk);
            let batch_labels: Vec<ClassLabel> = chunk.iter().map(|&i| set.labels[i]).collect();
            let (loss, gradients) = loss_and_gradient(
                &params,
                batch_inputs.view(),
                &batch_labels,
                config.weight_decay,
            )?;
            if !loss.is_finite() {
                return Err(Error::Divergence { epoch });
            }
            epoch_loss += loss * chunk.len() as f64;
            seen += chunk.len();
            for (layer, gradient) in params.layers.iter_mut().zip(&gradients) {
                layer.weights.scaled_add(-config.learning_rate, &gradient.weights);
                layer.bias.scaled_add(-config.learning_rate, &gradient.bias);
            }
        }
        loss_trace.push(epoch_loss / seen as f64);
        if !params.is_finite() {
            return Err(Error::Divergence { epoch });
        }

        if val_len > 0 && config.patience > 0 {
            let val_inputs = set.inputs.slice(ndarray::s![train_len.., ..]);
            let val_labels = &set.labels[train_len..];
            let (val_loss, _) = loss_and_gradient(&params, val_inputs, val_labels, 0.0)?;
            if val_loss + 1e-12 < best_val {
                best_val = val_loss;
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
                if epochs_since_best >= config.patience {
                    break;
                }
            }
        }
    }
    Ok(TrainedModel { params, loss_trace })
}

/// Argmax class with a deterministic tie-break toward the lower class code.
pub fn predict_flat(params: &ModelParams, input: &[f64]) -> Result<ClassLabel> {
    let probs = forward(params, input)?;
    let mut best = 0usize;
    for (i, &p) in probs.iter().enumerate() {
        if p > probs[best] {
            best = i;
        }
    }
    ClassLabel::from_index(best)
}

/// Normalize a raw window with the training statistics, flatten, predict.
pub fn predict(
    params: &ModelParams,
    window: &SnapshotWindow,
    stats: &NormalizationStats,
) -> Result<ClassLabel> {
    let normalized = apply_normalization(window, stats)?;
    predict_flat(params, &normalized.flattened())
}

const PARAMS_MAGIC: &str = "lobrep-params";
const PARAMS_VERSION: u32 = 1;

/// Serialize parameters to the documented delimited-text format: a header
/// with format version, architecture and shapes, then one `b` line and
/// `out` weight rows per layer. Floats use shortest round-trip notation.
pub fn params_to_string(params: &ModelParams) -> String {
    let mut out = format!("{PARAMS_MAGIC} v{PARAMS_VERSION}\n");
    out.push_str(&format!("arch {}\n", params.kind));
    out.push_str(&format!("input {}\n", params.input_dim));
    out.push_str(&format!("layers {}\n", params.layers.len()));
    for layer in &params.layers {
        out.push_str(&format!(
            "layer {} {}\n",
            layer.weights.nrows(),
            layer.weights.ncols()
        ));
        let bias: Vec<String> = layer.bias.iter().map(|v| format!("{v}")).collect();
        out.push_str(&format!("b {}\n", bias.join(" ")));
        for row in layer.weights.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&format!("w {}\n", cells.join(" ")));
        }
    }
    out
}

pub fn save_params(path: impl AsRef<Path>, params: &ModelParams) -> Result<()> {
    std::fs::write(path, params_to_string(params))?;
    Ok(())
}

pub fn params_from_string(text: &str) -> Result<ModelParams> {
    let mut lines = text.lines().enumerate();
    let bad = |line: usize, message: String| Error::Parse {
        line: line + 1,
        field: 0,
        message,
    };
    let (i, header) = lines
        .next()
        .ok_or_else(|| Error::EmptyInput("empty parameter file".into()))?;
    if header.trim() != format!("{PARAMS_MAGIC} v{PARAMS_VERSION}") {
        return Err(bad(i, format!("unsupported header '{header}'")));
    }

    let mut expect = |prefix: &str| -> Result<(usize, String)> {
        let (i, line) = lines
            .next()
            .ok_or_else(|| Error::EmptyInput("truncated parameter file".into()))?;
        line.strip_prefix(prefix)
            .map(|rest| (i, rest.trim().to_string()))
            .ok_or_else(|| bad(i, format!("expected '{prefix}...', found '{line}'")))
    };

    let (i, arch) = expect("arch ")?;
    let kind: ModelKind = arch.parse().map_err(|_| bad(i, format!("unknown arch '{arch}'")))?;
    let (i, input) = expect("input ")?;
    let input_dim: usize = input.parse().map_err(|_| bad(i, "bad input dim".into()))?;
    let (i, count) = expect("layers ")?;
    let layer_count: usize = count.parse().map_err(|_| bad(i, "bad layer count".into()))?;

    let mut layers = Vec::with_capacity(layer_count);
    for _ in 0..layer_count {
        let (i, shape) = expect("layer ")?;
        let dims: Vec<usize> = shape
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(i, format!("bad layer shape '{shape}'")))?;
        if dims.len() != 2 {
            return Err(bad(i, format!("bad layer shape '{shape}'")));
        }
        let (rows, cols) = (dims[0], dims[1]);

        let (i, bias_line) = expect("b ")?;
        let bias: Vec<f64> = bias_line
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(i, "bad bias value".into()))?;
        if bias.len() != rows {
            return Err(bad(i, format!("expected {rows} bias values, found {}", bias.len())));
        }

        let mut weights = Array2::zeros((rows, cols));
        for r in 0..rows {
            let (i, row_line) = expect("w ")?;
            let row: Vec<f64> = row_line
                .split_whitespace()
                .map(|t| t.parse())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(i, "bad weight value".into()))?;
            if row.len() != cols {
                return Err(bad(i, format!("expected {cols} weights, found {}", row.len())));
            }
            for (c, v) in row.into_iter().enumerate() {
                weights[(r, c)] = v;
            }
        }
        layers.push(DenseLayer {
            weights,
            bias: Array1::from_vec(bias),
        });
    }

    let params = ModelParams {
        kind,
        input_dim,
        layers,
    };
    if params.layers.is_empty()
        || params.layers[0].weights.ncols() != input_dim
        || params.layers.last().map(|l| l.weights.nrows()) != Some(N_CLASSES)
    {
        return Err(Error::Config("parameter shapes are inconsistent".into()));
    }
    Ok(params)
}

pub fn load_params(path: impl AsRef<Path>) -> Result<ModelParams> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    params_from_string(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn toy_inputs(n: usize, dim: usize, seed: u64) -> Array2<f64> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Array2::from_shape_fn((n, dim), |_| rng.gen_range(-1.0..1.0))
    }

    fn toy_labels(n: usize, seed: u64) -> Vec<ClassLabel> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| ClassLabel::from_index(rng.gen_range(0..3)).unwrap())
            .collect()
    }

    /// Three well-separated Gaussian blobs, one per class.
    fn blobs(n_per_class: usize, dim: usize, seed: u64) -> (Array2<f64>, Vec<ClassLabel>) {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3 * n_per_class;
        let mut inputs = Array2::zeros((n, dim));
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let class = i % 3;
            labels.push(ClassLabel::from_index(class).unwrap());
            for j in 0..dim {
                let center = if j % 3 == class { 3.0 } else { -1.0 };
                inputs[(i, j)] = center + rng.gen_range(-0.5..0.5);
            }
        }
        (inputs, labels)
    }

    #[test]
    fn init_is_seed_deterministic() {
        let a = init_params(ModelKind::Mlp, 40, &[16, 8], 5).unwrap();
        let b = init_params(ModelKind::Mlp, 40, &[16, 8], 5).unwrap();
        assert_eq!(a, b);
        let c = init_params(ModelKind::Mlp, 40, &[16, 8], 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn lr_shape_is_three_by_input() {
        let params = init_params(ModelKind::Lr, 400, &[], 1).unwrap();
        assert_eq!(params.layers.len(), 1);
        assert_eq!(params.layers[0].weights.shape(), &[3, 400]);
    }

    #[test]
    fn zero_parameters_give_uniform_probabilities() {
        let mut params = init_params(ModelKind::Lr, 4, &[], 1).unwrap();
        params.layers[0].weights.fill(0.0);
        params.layers[0].bias.fill(0.0);
        let probs = forward(&params, &[0.3, -0.7, 1.1, 0.0]).unwrap();
        for p in probs {
            assert!((p - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let params = init_params(ModelKind::Mlp, 8, &[6], 3).unwrap();
        let inputs = toy_inputs(20, 8, 9);
        for row in inputs.rows() {
            let probs = forward(&params, row.as_slice().unwrap()).unwrap();
            let sum: f64 = probs.iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            assert!(probs.iter().all(|&p| p > 0.0));
        }
    }

    #[test]
    fn logit_shift_leaves_output_unchanged() {
        let params = init_params(ModelKind::Lr, 5, &[], 7).unwrap();
        let input = [0.2, -0.4, 0.9, 0.0, -1.3];
        let base = forward(&params, &input).unwrap();
        let mut shifted = params.clone();
        shifted.layers[0].bias += 17.5;
        let moved = forward(&shifted, &input).unwrap();
        for (a, b) in base.iter().zip(moved.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(
            predict_flat(&params, &input).unwrap(),
            predict_flat(&shifted, &input).unwrap()
        );
    }

    #[test]
    fn uniform_probabilities_break_ties_toward_up() {
        let mut params = init_params(ModelKind::Lr, 2, &[], 1).unwrap();
        params.layers[0].weights.fill(0.0);
        params.layers[0].bias.fill(0.0);
        assert_eq!(predict_flat(&params, &[1.0, -1.0]).unwrap(), ClassLabel::Up);
    }

    #[test]
    fn perfect_prediction_drives_loss_to_zero() {
        // Saturated logits pointing at the right class, no weight decay.
        let mut params = init_params(ModelKind::Lr, 3, &[], 1).unwrap();
        params.layers[0].weights = array![
            [100.0, 0.0, 0.0],
            [0.0, 100.0, 0.0],
            [0.0, 0.0, 100.0]
        ];
        params.layers[0].bias.fill(0.0);
        let inputs = array![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        let labels = vec![ClassLabel::Up, ClassLabel::Stationary, ClassLabel::Down];
        let (loss, _) = loss_and_gradient(&params, inputs.view(), &labels, 0.0).unwrap();
        assert!(loss < 1e-6);
    }

    #[test]
    fn duplicated_batch_has_identical_loss_and_gradient() {
        let params = init_params(ModelKind::Mlp, 6, &[5], 2).unwrap();
        let inputs = toy_inputs(10, 6, 3);
        let labels = toy_labels(10, 4);
        let (loss_a, grad_a) =
            loss_and_gradient(&params, inputs.view(), &labels, 1e-3).unwrap();

        let doubled = ndarray::concatenate(Axis(0), &[inputs.view(), inputs.view()]).unwrap();
        let mut labels2 = labels.clone();
        labels2.extend_from_slice(&labels);
        let (loss_b, grad_b) =
            loss_and_gradient(&params, doubled.view(), &labels2, 1e-3).unwrap();

        assert!((loss_a - loss_b).abs() < 1e-12);
        for (a, b) in grad_a.iter().zip(&grad_b) {
            for (x, y) in a.weights.iter().zip(b.weights.iter()) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn gradients_match_central_differences() {
        let epsilon = 1e-5;
        for (kind, hidden) in [(ModelKind::Lr, vec![]), (ModelKind::Mlp, vec![7, 5])] {
            let params = init_params(kind, 6, &hidden, 11).unwrap();
            let inputs = toy_inputs(12, 6, 21);
            let labels = toy_labels(12, 22);
            let (_, analytic) =
                loss_and_gradient(&params, inputs.view(), &labels, 1e-3).unwrap();

            use rand::Rng;
            let mut rng = ChaCha8Rng::seed_from_u64(33);
            for (layer_idx, analytic_layer) in analytic.iter().enumerate() {
                for _ in 0..25 {
                    let rows = analytic_layer.weights.nrows();
                    let cols = analytic_layer.weights.ncols();
                    let (r, c) = (rng.gen_range(0..rows), rng.gen_range(0..cols));

                    let mut plus = params.clone();
                    plus.layers[layer_idx].weights[(r, c)] += epsilon;
                    let mut minus = params.clone();
                    minus.layers[layer_idx].weights[(r, c)] -= epsilon;
                    let (lp, _) =
                        loss_and_gradient(&plus, inputs.view(), &labels, 1e-3).unwrap();
                    let (lm, _) =
                        loss_and_gradient(&minus, inputs.view(), &labels, 1e-3).unwrap();
                    let numeric = (lp - lm) / (2.0 * epsilon);
                    let exact = analytic_layer.weights[(r, c)];
                    let denom = numeric.abs().max(exact.abs()).max(1e-8);
                    assert!(
                        ((numeric - exact) / denom).abs() < 1e-4,
                        "{kind} layer {layer_idx} weight ({r},{c}): numeric {numeric}, analytic {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn training_is_deterministic() {
        let (inputs, labels) = blobs(30, 9, 5);
        let set = TrainingSet { inputs, labels };
        let config = TrainConfig {
            epochs: 5,
            hidden_sizes: vec![8],
            ..TrainConfig::default()
        };
        let a = train(&set, ModelKind::Mlp, &config).unwrap();
        let b = train(&set, ModelKind::Mlp, &config).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(a.loss_trace, b.loss_trace);
    }

    #[test]
    fn lr_separates_blobs() {
        let (inputs, labels) = blobs(60, 9, 8);
        let set = TrainingSet {
            inputs: inputs.clone(),
            labels: labels.clone(),
        };
        let config = TrainConfig {
            learning_rate: 0.5,
            epochs: 200,
            batch_size: 180,
            weight_decay: 0.0,
            ..TrainConfig::default()
        };
        let model = train(&set, ModelKind::Lr, &config).unwrap();
        let correct = inputs
            .rows()
            .into_iter()
            .zip(&labels)
            .filter(|(row, &label)| {
                predict_flat(&model.params, row.as_slice().unwrap()).unwrap() == label
            })
            .count();
        assert!(correct as f64 / labels.len() as f64 >= 0.99);
    }

    #[test]
    fn mlp_generalizes_on_held_out_blobs() {
        let (train_inputs, train_labels) = blobs(60, 9, 8);
        let (test_inputs, test_labels) = blobs(30, 9, 1009);
        let set = TrainingSet {
            inputs: train_inputs,
            labels: train_labels,
        };
        let config = TrainConfig {
            learning_rate: 0.05,
            epochs: 120,
            hidden_sizes: vec![16],
            weight_decay: 0.0,
            ..TrainConfig::default()
        };
        let model = train(&set, ModelKind::Mlp, &config).unwrap();
        let correct = test_inputs
            .rows()
            .into_iter()
            .zip(&test_labels)
            .filter(|(row, &label)| {
                predict_flat(&model.params, row.as_slice().unwrap()).unwrap() == label
            })
            .count();
        assert!(correct as f64 / test_labels.len() as f64 >= 0.95);
    }

    #[test]
    fn full_batch_loss_is_non_increasing_for_lr() {
        let (inputs, labels) = blobs(40, 6, 13);
        let n = labels.len();
        let set = TrainingSet { inputs, labels };
        let config = TrainConfig {
            learning_rate: 0.05,
            epochs: 40,
            batch_size: n,
            shuffle: false,
            weight_decay: 0.0,
            ..TrainConfig::default()
        };
        let model = train(&set, ModelKind::Lr, &config).unwrap();
        for pair in model.loss_trace.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
    }

    #[test]
    fn full_batch_descent_ignores_sample_order() {
        let (inputs, labels) = blobs(20, 6, 17);
        let n = labels.len();
        let config = TrainConfig {
            epochs: 10,
            batch_size: n,
            shuffle: false,
            ..TrainConfig::default()
        };
        let set = TrainingSet {
            inputs: inputs.clone(),
            labels: labels.clone(),
        };
        let base = train(&set, ModelKind::Lr, &config).unwrap();

        let perm: Vec<usize> = (0..n).rev().collect();
        let permuted = TrainingSet {
            inputs: inputs.select(Axis(0), &perm),
            labels: perm.iter().map(|&i| labels[i]).collect(),
        };
        let moved = train(&permuted, ModelKind::Lr, &config).unwrap();
        for (a, b) in base.params.layers.iter().zip(&moved.params.layers) {
            for (x, y) in a.weights.iter().zip(b.weights.iter()) {
                assert!((x - y).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn divergence_is_reported_with_epoch() {
        let (inputs, labels) = blobs(20, 6, 19);
        let set = TrainingSet { inputs, labels };
        let config = TrainConfig {
            learning_rate: 1e12,
            epochs: 50,
            weight_decay: 1e6,
            ..TrainConfig::default()
        };
        match train(&set, ModelKind::Mlp, &config) {
            Err(Error::Divergence { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn params_round_trip_through_text_format() {
        let params = init_params(ModelKind::Mlp, 12, &[5, 4], 23).unwrap();
        let text = params_to_string(&params);
        let restored = params_from_string(&text).unwrap();
        assert_eq!(params, restored);

        let lr = init_params(ModelKind::Lr, 12, &[], 23).unwrap();
        let restored = params_from_string(&params_to_string(&lr)).unwrap();
        assert_eq!(lr, restored);
    }

    #[test]
    fn params_parser_rejects_bad_headers() {
        assert!(params_from_string("something else\n").is_err());
        let params = init_params(ModelKind::Lr, 4, &[], 1).unwrap();
        let text = params_to_string(&params).replace("input 4", "input 5");
        assert!(params_from_string(&text).is_err());
    }

    #[test]
    fn early_stopping_halts_on_stale_validation() {
        // Random labels carry no signal, so validation loss stalls quickly.
        let inputs = toy_inputs(120, 6, 29);
        let labels = toy_labels(120, 31);
        let set = TrainingSet { inputs, labels };
        let config = TrainConfig {
            learning_rate: 0.5,
            epochs: 500,
            batch_size: 32,
            weight_decay: 0.0,
            validation_fraction: 0.25,
            patience: 3,
            ..TrainConfig::default()
        };
        let model = train(&set, ModelKind::Lr, &config).unwrap();
        assert!(model.loss_trace.len() < 500);
    }
}
