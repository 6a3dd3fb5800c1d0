//! Binary classification probes trained with Adam.
//!
//! [`Mlp`] is the paraphrase probe (one ReLU hidden layer, sigmoid output);
//! [`LinearModel`] is the single-feature logistic baseline. Both expose their
//! parameters as one flat vector so they share the optimiser and the
//! training loop. All arithmetic is `f64`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embedding::{decode_f64, encode_f64};
use crate::error::{Error, Result};
use crate::rng::{derive_seed, tag, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub input_dim: usize,
    pub hidden: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Epochs without a validation-accuracy improvement before stopping.
    pub patience: usize,
    pub seed: u64,
}

impl ProbeConfig {
    pub fn new(input_dim: usize) -> Self {
        Self {
            input_dim,
            hidden: 256,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            weight_decay: 0.0,
            batch_size: 64,
            max_epochs: 50,
            patience: 5,
            seed: 0,
        }
    }

    /// Defaults for the one-feature logistic baseline. The feature is
    /// standardised internally, so a larger step size is safe.
    pub fn linear() -> Self {
        Self {
            input_dim: 1,
            hidden: 0,
            learning_rate: 0.05,
            max_epochs: 100,
            patience: 10,
            ..Self::new(1)
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    fn validate(&self, needs_hidden: bool) -> Result<()> {
        let positive = self.input_dim > 0
            && (!needs_hidden || self.hidden > 0)
            && self.learning_rate > 0.0
            && self.epsilon > 0.0
            && self.batch_size > 0
            && self.max_epochs > 0
            && self.patience > 0;
        let betas = (0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2);
        if !positive || !betas || self.weight_decay < 0.0 {
            return Err(Error::InvalidInput(format!("invalid probe config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PairFeatures {
    /// `[a; b]`
    #[default]
    Concat,
    /// `[a; b; |a - b|; a * b]`
    Rich,
}

impl std::str::FromStr for PairFeatures {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "concat" => Ok(PairFeatures::Concat),
            "rich" => Ok(PairFeatures::Rich),
            _ => Err(Error::InvalidInput(format!("unknown pair features `{s}`"))),
        }
    }
}

impl PairFeatures {
    pub fn output_dim(self, dim: usize) -> usize {
        match self {
            PairFeatures::Concat => 2 * dim,
            PairFeatures::Rich => 4 * dim,
        }
    }
}

pub fn featurize_pair(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    featurize_pair_with(a, b, PairFeatures::Concat)
}

pub fn featurize_pair_with(a: &[f64], b: &[f64], mode: PairFeatures) -> Result<Vec<f64>> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut out = Vec::with_capacity(mode.output_dim(a.len()));
    out.extend_from_slice(a);
    out.extend_from_slice(b);
    if mode == PairFeatures::Rich {
        out.extend(a.iter().zip(b).map(|(x, y)| (x - y).abs()));
        out.extend(a.iter().zip(b).map(|(x, y)| x * y));
    }
    Ok(out)
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binary cross-entropy of `sigmoid(z)` against `y`, without forming the
/// probability.
pub fn bce_with_logit(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

/// A model producing one logit per input, with parameters in a flat vector.
pub trait BinaryClassifier {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];
    fn input_dim(&self) -> usize;
    fn logit(&self, x: &[f64]) -> f64;
    /// Adds `dlogit * d(logit)/d(params)` at `x` into `grad`.
    fn accumulate_grad(&self, x: &[f64], dlogit: f64, grad: &mut [f64]);

    fn predict(&self, x: &[f64]) -> u8 {
        u8::from(sigmoid(self.logit(x)) >= 0.5)
    }
}

/// Mean binary cross-entropy over a batch and its gradient.
pub fn batch_loss_and_grad<M: BinaryClassifier>(model: &M, xs: &[&[f64]], ys: &[u8]) -> (f64, Vec<f64>) {
    let mut grad = vec![0.0; model.params().len()];
    let n = xs.len() as f64;
    let mut loss = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let z = model.logit(x);
        let y = f64::from(y);
        loss += bce_with_logit(z, y);
        model.accumulate_grad(x, (sigmoid(z) - y) / n, &mut grad);
    }
    (loss / n, grad)
}

pub fn mean_loss<M: BinaryClassifier>(model: &M, xs: &[Vec<f64>], ys: &[u8]) -> f64 {
    let total: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, &y)| bce_with_logit(model.logit(x), f64::from(y)))
        .sum();
    total / xs.len() as f64
}

/// Adam with bias correction. Weight decay is added to the gradient as an
/// L2 term.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    weight_decay: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(num_params: usize, config: &ProbeConfig) -> Self {
        Self {
            lr: config.learning_rate,
            beta1: config.beta1,
            beta2: config.beta2,
            eps: config.epsilon,
            weight_decay: config.weight_decay,
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        assert_eq!(params.len(), self.m.len(), "parameter count");
        self.t = self.t.saturating_add(1);
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grads[i] + self.weight_decay * params[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// `sigmoid(w2 . relu(W1 x + b1) + b2)`.
///
/// Parameter layout: `W1` (`hidden x input`, row-major), `b1`, `w2`, `b2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    input_dim: usize,
    hidden: usize,
    params: Vec<f64>,
}

impl Mlp {
    /// Weights uniform in `±1/sqrt(fan_in)`, biases zero.
    pub fn new(input_dim: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = SplitMix64::new(derive_seed(seed, tag("mlp-init")));
        let mut params = vec![0.0; hidden * input_dim + 2 * hidden + 1];
        let b1 = 1.0 / (input_dim as f64).sqrt();
        for w in &mut params[..hidden * input_dim] {
            *w = rng.uniform(-b1, b1);
        }
        let b2 = 1.0 / (hidden as f64).sqrt();
        let off = hidden * input_dim + hidden;
        for w in &mut params[off..off + hidden] {
            *w = rng.uniform(-b2, b2);
        }
        Self {
            input_dim,
            hidden,
            params,
        }
    }

    pub fn from_params(input_dim: usize, hidden: usize, params: Vec<f64>) -> Result<Self> {
        let expected = hidden * input_dim + 2 * hidden + 1;
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite("mlp parameters".into()));
        }
        Ok(Self {
            input_dim,
            hidden,
            params,
        })
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    fn split(&self) -> (&[f64], &[f64], &[f64], f64) {
        let (w1, rest) = self.params.split_at(self.hidden * self.input_dim);
        let (b1, rest) = rest.split_at(self.hidden);
        let (w2, b2) = rest.split_at(self.hidden);
        (w1, b1, w2, b2[0])
    }

    pub fn w1(&self) -> &[f64] {
        self.split().0
    }

    pub fn b1(&self) -> &[f64] {
        self.split().1
    }

    pub fn w2(&self) -> &[f64] {
        self.split().2
    }

    pub fn b2(&self) -> f64 {
        self.split().3
    }

    fn pre_activations(&self, x: &[f64]) -> Vec<f64> {
        let (w1, b1, _, _) = self.split();
        w1.chunks_exact(self.input_dim)
            .zip(b1)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect()
    }
}

impl BinaryClassifier for Mlp {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn logit(&self, x: &[f64]) -> f64 {
        let (_, _, w2, b2) = self.split();
        let z1 = self.pre_activations(x);
        z1.iter().zip(w2).map(|(z, w)| z.max(0.0) * w).sum::<f64>() + b2
    }

    fn accumulate_grad(&self, x: &[f64], dlogit: f64, grad: &mut [f64]) {
        let (h, d) = (self.hidden, self.input_dim);
        let z1 = self.pre_activations(x);
        let (_, _, w2, _) = self.split();
        let (g_w1, rest) = grad.split_at_mut(h * d);
        let (g_b1, rest) = rest.split_at_mut(h);
        let (g_w2, g_b2) = rest.split_at_mut(h);
        g_b2[0] += dlogit;
        for j in 0..h {
            if z1[j] > 0.0 {
                g_w2[j] += dlogit * z1[j];
                let dz = dlogit * w2[j];
                g_b1[j] += dz;
                for (g, v) in g_w1[j * d..(j + 1) * d].iter_mut().zip(x) {
                    *g += dz * v;
                }
            }
        }
    }
}

/// `sigmoid(weight * x + bias)` on a scalar feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearModel {
    params: [f64; 2],
}

impl LinearModel {
    pub fn new(weight: f64, bias: f64) -> Self {
        Self { params: [weight, bias] }
    }

    pub fn weight(&self) -> f64 {
        self.params[0]
    }

    pub fn bias(&self) -> f64 {
        self.params[1]
    }
}

impl BinaryClassifier for LinearModel {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn input_dim(&self) -> usize {
        1
    }

    fn logit(&self, x: &[f64]) -> f64 {
        self.params[0] * x[0] + self.params[1]
    }

    fn accumulate_grad(&self, x: &[f64], dlogit: f64, grad: &mut [f64]) {
        grad[0] += dlogit * x[0];
        grad[1] += dlogit;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeModel {
    pub mlp: Mlp,
    pub config: ProbeConfig,
    pub history: Vec<EpochStats>,
    /// Epoch (1-based) whose weights were kept.
    pub best_epoch: usize,
}

impl ProbeModel {
    pub fn predict(&self, x: &[f64]) -> u8 {
        self.mlp.predict(x)
    }
}

/// Fraction of examples whose thresholded prediction equals the label.
pub fn evaluate<M: BinaryClassifier>(model: &M, features: &[Vec<f64>], labels: &[u8]) -> Result<f64> {
    if features.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate on an empty set".into()));
    }
    if features.len() != labels.len() {
        return Err(Error::Misaligned {
            items: features.len(),
            predictions: labels.len(),
        });
    }
    if let Some(x) = features.iter().find(|x| x.len() != model.input_dim()) {
        return Err(Error::DimensionMismatch {
            expected: model.input_dim(),
            actual: x.len(),
        });
    }
    let correct = features
        .iter()
        .zip(labels)
        .filter(|(x, &y)| model.predict(x) == y)
        .count();
    Ok(correct as f64 / features.len() as f64)
}

fn check_training_set(features: &[Vec<f64>], labels: &[u8], dim: usize) -> Result<()> {
    if features.len() != labels.len() {
        return Err(Error::Misaligned {
            items: features.len(),
            predictions: labels.len(),
        });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(Error::InvalidInput(format!("label {bad} is not 0 or 1")));
    }
    if !(labels.contains(&0) && labels.contains(&1)) {
        return Err(Error::SingleClass);
    }
    for x in features {
        if x.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training features".into()));
        }
    }
    Ok(())
}

struct Fitted<M> {
    model: M,
    history: Vec<EpochStats>,
    best_epoch: usize,
}

/// Minibatch Adam with per-epoch seeded shuffling. Keeps the parameters of
/// the epoch with the best selection accuracy (validation if given, else
/// training) and stops after `patience` epochs without improvement.
fn fit<M: BinaryClassifier + Clone>(
    mut model: M,
    train_x: &[Vec<f64>],
    train_y: &[u8],
    val: Option<(&[Vec<f64>], &[u8])>,
    config: &ProbeConfig,
) -> Result<Fitted<M>> {
    let mut adam = Adam::new(model.params().len(), config);
    let mut shuffle_rng = SplitMix64::new(derive_seed(config.seed, tag("probe-shuffle")));
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    let mut history = Vec::new();
    let mut best: Option<(f64, usize, M)> = None;
    let mut stale = 0;
    let mut last_loss = f64::NAN;

    for epoch in 1..=config.max_epochs {
        shuffle_rng.shuffle(&mut order);
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| train_x[i].as_slice()).collect();
            let ys: Vec<u8> = batch.iter().map(|&i| train_y[i]).collect();
            let (loss, grad) = batch_loss_and_grad(&model, &xs, &ys);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Divergence {
                    epoch,
                    batch: b,
                    last_loss,
                });
            }
            last_loss = loss;
            adam.step(model.params_mut(), &grad);
        }

        let train_loss = mean_loss(&model, train_x, train_y);
        let train_accuracy = evaluate(&model, train_x, train_y)?;
        let val_accuracy = match val {
            Some((vx, vy)) if !vx.is_empty() => evaluate(&model, vx, vy)?,
            _ => train_accuracy,
        };
        history.push(EpochStats {
            epoch,
            train_loss,
            train_accuracy,
            val_accuracy,
        });

        if best.as_ref().is_none_or(|(acc, _, _)| val_accuracy > *acc) {
            best = Some((val_accuracy, epoch, model.clone()));
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    let (_, best_epoch, model) = best.expect("at least one epoch");
    Ok(Fitted {
        model,
        history,
        best_epoch,
    })
}

/// Trains the MLP probe and returns the weights from the epoch with the best
/// validation accuracy.
pub fn train_probe(
    train_x: &[Vec<f64>],
    train_y: &[u8],
    val_x: &[Vec<f64>],
    val_y: &[u8],
    config: &ProbeConfig,
) -> Result<ProbeModel> {
    config.validate(true)?;
    check_training_set(train_x, train_y, config.input_dim)?;
    if val_x.len() != val_y.len() {
        return Err(Error::Misaligned {
            items: val_x.len(),
            predictions: val_y.len(),
        });
    }
    let init = Mlp::new(config.input_dim, config.hidden, config.seed);
    let fitted = fit(init, train_x, train_y, Some((val_x, val_y)), config)?;
    Ok(ProbeModel {
        mlp: fitted.model,
        config: *config,
        history: fitted.history,
        best_epoch: fitted.best_epoch,
    })
}

/// A trained one-feature logistic classifier, in raw feature units.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProbe {
    pub model: LinearModel,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
}

impl LinearProbe {
    /// The feature value where the predicted probability crosses 0.5.
    pub fn threshold(&self) -> f64 {
        -self.model.bias() / self.model.weight()
    }

    pub fn predict(&self, x: f64) -> u8 {
        self.model.predict(&[x])
    }

    pub fn accuracy(&self, features: &[f64], labels: &[u8]) -> Result<f64> {
        let xs: Vec<Vec<f64>> = features.iter().map(|&x| vec![x]).collect();
        evaluate(&self.model, &xs, labels)
    }
}

/// Logistic regression on one scalar feature. The feature is standardised
/// for training and the weights are mapped back to raw units.
pub fn train_linear(features: &[f64], labels: &[u8], config: &ProbeConfig) -> Result<LinearProbe> {
    config.validate(false)?;
    let xs: Vec<Vec<f64>> = features.iter().map(|&x| vec![x]).collect();
    check_training_set(&xs, labels, 1)?;
    let n = features.len() as f64;
    let mean = features.iter().sum::<f64>() / n;
    let var = features.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let scale = if var > 0.0 { var.sqrt() } else { 1.0 };
    let standardized: Vec<Vec<f64>> = features.iter().map(|&x| vec![(x - mean) / scale]).collect();

    let fitted = fit(LinearModel::new(0.0, 0.0), &standardized, labels, None, config)?;
    let (w, b) = (fitted.model.weight(), fitted.model.bias());
    Ok(LinearProbe {
        model: LinearModel::new(w / scale, b - w * mean / scale),
        history: fitted.history,
        best_epoch: fitted.best_epoch,
    })
}

pub const CHECKPOINT_FORMAT_VERSION: &str = "1";

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    format_version: String,
    kind: String,
    input_dim: usize,
    hidden: usize,
    best_epoch: usize,
    config: ProbeConfig,
    history: Vec<EpochStats>,
}

#[derive(Serialize, Deserialize)]
struct TensorLine {
    name: String,
    shape: Vec<usize>,
    data: String,
}

/// Writes the probe as a JSON header line followed by one line per tensor
/// (`w1`, `b1`, `w2`, `b2`) holding base64 little-endian `f64` data.
pub fn write_checkpoint(model: &ProbeModel, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let header = CheckpointHeader {
        format_version: CHECKPOINT_FORMAT_VERSION.into(),
        kind: "mlp".into(),
        input_dim: model.mlp.input_dim,
        hidden: model.mlp.hidden,
        best_epoch: model.best_epoch,
        config: model.config,
        history: model.history.clone(),
    };
    let (h, d) = (model.mlp.hidden, model.mlp.input_dim);
    let tensors = [
        ("w1", vec![h, d], model.mlp.w1()),
        ("b1", vec![h], model.mlp.b1()),
        ("w2", vec![h], model.mlp.w2()),
        ("b2", vec![1], &model.mlp.params[model.mlp.params.len() - 1..]),
    ];
    let json = |e: serde_json::Error| Error::Format(e.to_string());
    serde_json::to_writer(&mut out, &header).map_err(json)?;
    out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    for (name, shape, data) in tensors {
        let line = TensorLine {
            name: name.into(),
            shape,
            data: encode_f64(data),
        };
        serde_json::to_writer(&mut out, &line).map_err(json)?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: &Path) -> Result<ProbeModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let mut next_line = |n: usize| -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::record(path, n, "unexpected end of checkpoint"))?
            .map_err(|e| Error::io(path, e))
    };
    let header: CheckpointHeader =
        serde_json::from_str(&next_line(1)?).map_err(|e| Error::record(path, 1, e.to_string()))?;
    if header.format_version != CHECKPOINT_FORMAT_VERSION || header.kind != "mlp" {
        return Err(Error::Format(format!(
            "unsupported checkpoint {} v{}",
            header.kind, header.format_version
        )));
    }
    let mut params = Vec::new();
    for (i, name) in ["w1", "b1", "w2", "b2"].iter().enumerate() {
        let n = i + 2;
        let t: TensorLine = serde_json::from_str(&next_line(n)?).map_err(|e| Error::record(path, n, e.to_string()))?;
        if t.name != *name {
            return Err(Error::record(path, n, format!("expected tensor {name}, found {}", t.name)));
        }
        let data = decode_f64(&t.data)?;
        if data.len() != t.shape.iter().product::<usize>() {
            return Err(Error::record(path, n, "tensor shape does not match data length"));
        }
        params.extend(data);
    }
    Ok(ProbeModel {
        mlp: Mlp::from_params(header.input_dim, header.hidden, params)?,
        config: header.config,
        history: header.history,
        best_epoch: header.best_epoch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 200 points in 2-d, labelled by `x + y > 0`, at least `margin` from the
    /// boundary along its unit normal.
    fn separable(n: usize, margin: f64, seed: u64) -> (Vec<Vec<f64>>, Vec<u8>) {
        let mut rng = SplitMix64::new(seed);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        while xs.len() < n {
            let p = vec![rng.uniform(-4.0, 4.0), rng.uniform(-4.0, 4.0)];
            let d = (p[0] + p[1]) / 2f64.sqrt();
            if d.abs() < margin {
                continue;
            }
            ys.push(u8::from(d > 0.0));
            xs.push(p);
        }
        (xs, ys)
    }

    #[test]
    fn featurize_examples() {
        assert_eq!(featurize_pair(&[1.0, 2.0], &[3.0, 4.0]).unwrap(), vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(featurize_pair(&[0.0; 3], &[0.0; 3]).unwrap(), vec![0.0; 6]);
        assert_ne!(
            featurize_pair(&[1.0, 2.0], &[3.0, 4.0]).unwrap(),
            featurize_pair(&[3.0, 4.0], &[1.0, 2.0]).unwrap()
        );
        assert!(featurize_pair(&[1.0], &[1.0, 2.0]).is_err());
        assert_eq!(
            featurize_pair_with(&[1.0], &[3.0], PairFeatures::Rich).unwrap(),
            vec![1.0, 3.0, 2.0, 3.0]
        );
    }

    #[test]
    fn bce_matches_naive_formula() {
        for &z in &[-5.0, -0.3, 0.0, 0.7, 4.0] {
            for &y in &[0.0, 1.0] {
                let p = sigmoid(z);
                let naive = -(y * p.ln() + (1.0 - y) * (1.0 - p).ln());
                assert!((bce_with_logit(z, y) - naive).abs() < 1e-12);
            }
        }
        assert!(bce_with_logit(-800.0, 1.0).is_finite());
    }

    #[test]
    fn separable_set_is_learned() {
        let (xs, ys) = separable(200, 1.0, 3);
        // The generating separator classifies every point correctly.
        let oracle = xs.iter().zip(&ys).filter(|(p, &y)| u8::from(p[0] + p[1] > 0.0) == y).count();
        assert_eq!(oracle, 200);
        let cfg = ProbeConfig::new(2).with_seed(3);
        let model = train_probe(&xs, &ys, &xs, &ys, &cfg).unwrap();
        assert!(model.history.len() <= 50);
        assert!(evaluate(&model.mlp, &xs, &ys).unwrap() >= 0.99);
    }

    #[test]
    fn single_class_rejected() {
        let xs = vec![vec![1.0], vec![2.0]];
        let cfg = ProbeConfig { hidden: 4, ..ProbeConfig::new(1) };
        assert!(matches!(train_probe(&xs, &[1, 1], &[], &[], &cfg), Err(Error::SingleClass)));
        assert!(matches!(train_linear(&[0.1, 0.2], &[0, 0], &ProbeConfig::linear()), Err(Error::SingleClass)));
    }

    #[test]
    fn evaluate_rejects_empty() {
        let m = Mlp::new(2, 3, 0);
        assert!(evaluate(&m, &[], &[]).is_err());
    }

    #[test]
    fn divergence_is_reported() {
        // Pre-activations of this width overflow to infinity.
        let xs = vec![vec![f64::MAX; 256], vec![-f64::MAX; 256]];
        let cfg = ProbeConfig { hidden: 32, ..ProbeConfig::new(256) };
        match train_probe(&xs, &[1, 0], &[], &[], &cfg) {
            Err(Error::Divergence { epoch, batch, .. }) => assert_eq!((epoch, batch), (1, 0)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn linear_feature_equals_label() {
        let xs: Vec<f64> = (0..100).map(|i| f64::from(u8::from(i % 3 == 0))).collect();
        let ys: Vec<u8> = xs.iter().map(|&x| x as u8).collect();
        let probe = train_linear(&xs, &ys, &ProbeConfig::linear()).unwrap();
        assert_eq!(probe.accuracy(&xs, &ys).unwrap(), 1.0);
    }

    #[test]
    fn linear_threshold_oracle() {
        let mut rng = SplitMix64::new(21);
        let xs: Vec<f64> = (0..500).map(|_| rng.next_f64()).collect();
        let ys: Vec<u8> = xs.iter().map(|&x| u8::from(x < 0.3)).collect();
        // The hand threshold itself is a perfect classifier.
        assert!(xs.iter().zip(&ys).all(|(&x, &y)| u8::from(x < 0.3) == y));
        let probe = train_linear(&xs, &ys, &ProbeConfig::linear().with_seed(21)).unwrap();
        assert!(probe.accuracy(&xs, &ys).unwrap() >= 0.99);
        assert!(probe.model.weight() < 0.0);
        assert!((probe.threshold() - 0.3).abs() < 0.02, "threshold {}", probe.threshold());
    }

    #[test]
    fn linear_full_batch_loss_is_monotone() {
        let mut rng = SplitMix64::new(8);
        let xs: Vec<Vec<f64>> = (0..64).map(|_| vec![rng.uniform(-2.0, 2.0)]).collect();
        let ys: Vec<u8> = xs.iter().map(|x| u8::from(x[0] + 0.3 * rng.uniform(-1.0, 1.0) > 0.1)).collect();
        let views: Vec<&[f64]> = xs.iter().map(Vec::as_slice).collect();
        let cfg = ProbeConfig {
            learning_rate: 1e-4,
            ..ProbeConfig::linear()
        };
        let mut model = LinearModel::new(0.0, 0.0);
        let mut adam = Adam::new(2, &cfg);
        let mut prev = f64::INFINITY;
        for _ in 0..500 {
            let (loss, grad) = batch_loss_and_grad(&model, &views, &ys);
            assert!(loss <= prev + 1e-9, "loss rose from {prev} to {loss}");
            prev = loss;
            adam.step(model.params_mut(), &grad);
        }
    }

    #[test]
    fn checkpoint_roundtrip_is_bitwise() {
        let (xs, ys) = separable(60, 0.5, 1);
        let cfg = ProbeConfig {
            hidden: 8,
            max_epochs: 3,
            ..ProbeConfig::new(2)
        };
        let model = train_probe(&xs, &ys, &xs, &ys, &cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("probe.jsonl");
        write_checkpoint(&model, &path).unwrap();
        let back = read_checkpoint(&path).unwrap();
        let bits = |m: &ProbeModel| m.mlp.params().iter().map(|p| p.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&model), bits(&back));
        assert_eq!(back.history, model.history);
        assert_eq!(back.best_epoch, model.best_epoch);
    }
}
