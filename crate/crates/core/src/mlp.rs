//! Single-hidden-layer feedforward classifier.
//!
//! All parameters live in one flat vector. The hidden layer comes first, one
//! block of `input_dim + 1` values per hidden neuron (bias, then input
//! weights); the output layer follows with one block of `hidden + 1` values
//! per output (bias, then hidden weights).
//!
//! Two-class problems use a single logistic output (label 1 iff the
//! probability exceeds 0.5); three or more classes use a softmax output with
//! one score per class.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataio::{Dataset, Standardizer};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlpError {
    #[error("invalid architecture: {0}")]
    Architecture(String),
    #[error("expected {expected} values, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("weight {index} is not finite")]
    NonFiniteWeight { index: usize },
    #[error("label {label} outside [0, {classes})")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("loss became non-finite at iteration {iteration}")]
    NonFiniteLoss { iteration: usize },
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("model file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("model file: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, MlpError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Activation {
    #[default]
    Logistic,
    Tanh,
    Relu,
}

impl Activation {
    #[inline]
    fn apply(self, a: f64) -> f64 {
        match self {
            Activation::Logistic => sigmoid(a),
            Activation::Tanh => a.tanh(),
            Activation::Relu => a.max(0.0),
        }
    }

    // derivative expressed through the activation value h = f(a)
    #[inline]
    fn derivative(self, a: f64, h: f64) -> f64 {
        match self {
            Activation::Logistic => h * (1.0 - h),
            Activation::Tanh => 1.0 - h * h,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Logistic => "logistic",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        })
    }
}

impl FromStr for Activation {
    type Err = MlpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Activation::Logistic),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(MlpError::Architecture(format!("unknown activation {other:?}"))),
        }
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

// log(1 + e^z) without overflow
#[inline]
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MlpArchitecture {
    pub input_dim: usize,
    pub hidden: usize,
    pub output_dim: usize,
    pub activation: Activation,
}

impl MlpArchitecture {
    pub fn new(
        input_dim: usize,
        hidden: usize,
        output_dim: usize,
        activation: Activation,
    ) -> Result<Self> {
        if input_dim == 0 || hidden == 0 || output_dim == 0 {
            return Err(MlpError::Architecture(format!(
                "dimensions must be positive, got ({input_dim}, {hidden}, {output_dim})"
            )));
        }
        Ok(Self {
            input_dim,
            hidden,
            output_dim,
            activation,
        })
    }

    /// Architecture sized for a dataset: one logistic output for two
    /// classes, one score per class otherwise.
    pub fn for_dataset(ds: &Dataset, hidden: usize, activation: Activation) -> Result<Self> {
        let output_dim = if ds.num_classes() == 2 {
            1
        } else {
            ds.num_classes()
        };
        Self::new(ds.num_features(), hidden, output_dim, activation)
    }

    pub fn weight_count(&self) -> usize {
        (self.input_dim + 1) * self.hidden + (self.hidden + 1) * self.output_dim
    }

    pub fn num_classes(&self) -> usize {
        if self.output_dim == 1 {
            2
        } else {
            self.output_dim
        }
    }

    fn output_offset(&self) -> usize {
        (self.input_dim + 1) * self.hidden
    }
}

/// Flat parameter vector; every entry is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(MlpError::NonFiniteWeight { index });
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// Draws every parameter of layer `l` uniformly from `[-r, r]` with
/// `r = √(6/(fan_in + fan_out))`.
pub fn init_weights(arch: &MlpArchitecture, seed: u64) -> WeightVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    init_weights_with(arch, &mut rng)
}

pub fn init_weights_with<R: Rng + ?Sized>(arch: &MlpArchitecture, rng: &mut R) -> WeightVector {
    let r_hidden = (6.0 / (arch.input_dim + arch.hidden) as f64).sqrt();
    let r_out = (6.0 / (arch.hidden + arch.output_dim) as f64).sqrt();
    let mut values = Vec::with_capacity(arch.weight_count());
    for _ in 0..arch.output_offset() {
        values.push(rng.random_range(-r_hidden..=r_hidden));
    }
    for _ in arch.output_offset()..arch.weight_count() {
        values.push(rng.random_range(-r_out..=r_out));
    }
    WeightVector(values)
}

/// Training hyperparameters. Defaults: `max_iter = 400`, `l2_alpha = 1e-5`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub max_iter: usize,
    pub l2_alpha: f64,
    /// First trial step of the line search.
    pub learning_rate: f64,
    /// Training stops once the gradient norm drops below this.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            max_iter: 400,
            l2_alpha: 1e-5,
            learning_rate: 1.0,
            tolerance: 1e-6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iter == 0 {
            return Err(MlpError::Config("max_iter must be at least 1".into()));
        }
        if !(self.l2_alpha >= 0.0 && self.l2_alpha.is_finite()) {
            return Err(MlpError::Config(format!("l2_alpha {} must be >= 0", self.l2_alpha)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(MlpError::Config(format!(
                "learning_rate {} must be > 0",
                self.learning_rate
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(MlpError::Config(format!("tolerance {} must be > 0", self.tolerance)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    architecture: MlpArchitecture,
    weights: WeightVector,
    scaler: Option<Standardizer>,
}

impl MlpModel {
    pub fn new(architecture: MlpArchitecture, weights: WeightVector) -> Result<Self> {
        if weights.len() != architecture.weight_count() {
            return Err(MlpError::DimensionMismatch {
                expected: architecture.weight_count(),
                actual: weights.len(),
            });
        }
        Ok(Self {
            architecture,
            weights,
            scaler: None,
        })
    }

    /// Attaches input standardization, applied before every forward pass
    /// and to the training data inside [`MlpModel::train`].
    pub fn with_scaler(mut self, scaler: Standardizer) -> Result<Self> {
        if scaler.dim() != self.architecture.input_dim {
            return Err(MlpError::DimensionMismatch {
                expected: self.architecture.input_dim,
                actual: scaler.dim(),
            });
        }
        self.scaler = Some(scaler);
        Ok(self)
    }

    pub fn architecture(&self) -> &MlpArchitecture {
        &self.architecture
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn scaler(&self) -> Option<&Standardizer> {
        self.scaler.as_ref()
    }

    /// Raw output scores (logits) for one example.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut buf = Scratch::new(&self.architecture);
        Ok(self.forward_into(x, &mut buf)?.to_vec())
    }

    fn forward_into<'s>(&self, x: &[f64], buf: &'s mut Scratch) -> Result<&'s [f64]> {
        let arch = &self.architecture;
        if x.len() != arch.input_dim {
            return Err(MlpError::DimensionMismatch {
                expected: arch.input_dim,
                actual: x.len(),
            });
        }
        let input = match &self.scaler {
            Some(s) => {
                s.transform_into(x, &mut buf.input);
                &buf.input[..]
            }
            None => x,
        };
        forward_pass(arch, self.weights.as_slice(), input, &mut buf.pre, &mut buf.hidden, &mut buf.out);
        Ok(&buf.out)
    }

    /// Predicted class: argmax of the scores with ties to the lowest index,
    /// or `score > 0` (probability > 0.5) for a single logistic output.
    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        let mut buf = Scratch::new(&self.architecture);
        Ok(decide(self.forward_into(x, &mut buf)?))
    }

    /// Predictions for every row of `ds`, in row order.
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<usize>> {
        let mut buf = Scratch::new(&self.architecture);
        ds.rows()
            .map(|x| self.forward_into(x, &mut buf).map(decide))
            .collect()
    }

    pub fn accuracy(&self, ds: &Dataset) -> Result<f64> {
        let predicted = self.predict(ds)?;
        let correct = predicted.iter().zip(ds.labels()).filter(|(p, l)| p == l).count();
        Ok(correct as f64 / ds.len().max(1) as f64)
    }

    /// Full-batch gradient descent on mean cross-entropy plus
    /// `l2_alpha·‖w‖²/2`, with a backtracking (Armijo) line search so the
    /// objective never increases. Stops after `max_iter` steps, when the
    /// gradient norm falls below `tolerance`, or when no step decreases the
    /// objective.
    pub fn train(&self, data: &Dataset, config: &TrainConfig) -> Result<MlpModel> {
        Ok(self.train_with_trace(data, config)?.0)
    }

    /// [`MlpModel::train`], also returning the objective after each accepted step.
    pub fn train_with_trace(
        &self,
        data: &Dataset,
        config: &TrainConfig,
    ) -> Result<(MlpModel, Vec<f64>)> {
        config.validate()?;
        let scaled;
        let data = match &self.scaler {
            Some(s) => {
                scaled = s.transform(data);
                &scaled
            }
            None => data,
        };
        let objective = Objective::new(&self.architecture, data, config.l2_alpha)?;

        let mut w = self.weights.as_slice().to_vec();
        let mut grad = vec![0.0; w.len()];
        let mut loss = objective.value_and_gradient(&w, &mut grad);
        if !loss.is_finite() {
            return Err(MlpError::NonFiniteLoss { iteration: 0 });
        }
        let mut trace = vec![loss];
        let mut step = config.learning_rate;
        let mut candidate = vec![0.0; w.len()];
        for iteration in 1..=config.max_iter {
            let gnorm2: f64 = grad.iter().map(|g| g * g).sum();
            if gnorm2.sqrt() < config.tolerance {
                break;
            }
            let mut t = step;
            let accepted = loop {
                for ((c, wi), gi) in candidate.iter_mut().zip(&w).zip(&grad) {
                    *c = wi - t * gi;
                }
                let f = objective.value(&candidate);
                if f.is_finite() && f <= loss - ARMIJO_C * t * gnorm2 {
                    break true;
                }
                t *= 0.5;
                if t < MIN_STEP {
                    break false;
                }
            };
            if !accepted {
                break;
            }
            std::mem::swap(&mut w, &mut candidate);
            loss = objective.value_and_gradient(&w, &mut grad);
            if !loss.is_finite() {
                return Err(MlpError::NonFiniteLoss { iteration });
            }
            trace.push(loss);
            step = 2.0 * t;
        }
        let model = MlpModel {
            architecture: self.architecture,
            weights: WeightVector::new(w)?,
            scaler: self.scaler.clone(),
        };
        Ok((model, trace))
    }

    /// Text format: a header line, optional `mean`/`std` lines for the
    /// scaler, then one weight per line.
    pub fn save<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let a = &self.architecture;
        writeln!(
            out,
            "mlp input={} hidden={} output={} activation={} scaler={}",
            a.input_dim,
            a.hidden,
            a.output_dim,
            a.activation,
            if self.scaler.is_some() { "yes" } else { "no" }
        )?;
        if let Some(s) = &self.scaler {
            writeln!(out, "mean {}", join(&s.mean))?;
            writeln!(out, "std {}", join(&s.std))?;
        }
        for w in self.weights.as_slice() {
            writeln!(out, "{w:e}")?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate().map(|(i, l)| {
            l.map(|s| (i + 1, s))
                .map_err(|e| MlpError::Io(e.to_string()))
        });
        let bad = |line: usize, message: &str| MlpError::Format {
            line,
            message: message.to_string(),
        };
        let (_, header) = lines.next().ok_or_else(|| bad(1, "missing header"))??;
        let mut fields = header.split_whitespace();
        if fields.next() != Some("mlp") {
            return Err(bad(1, "header must start with `mlp`"));
        }
        let mut get = |key: &str| -> Result<String> {
            let field = fields.next().ok_or_else(|| bad(1, &format!("missing {key}")))?;
            field
                .strip_prefix(key)
                .and_then(|v| v.strip_prefix('='))
                .map(str::to_string)
                .ok_or_else(|| bad(1, &format!("expected {key}=...")))
        };
        let num = |s: String| s.parse::<usize>().map_err(|_| bad(1, "bad dimension"));
        let input_dim = num(get("input")?)?;
        let hidden = num(get("hidden")?)?;
        let output_dim = num(get("output")?)?;
        let activation: Activation = get("activation")?.parse()?;
        let has_scaler = match get("scaler")?.as_str() {
            "yes" => true,
            "no" => false,
            _ => return Err(bad(1, "scaler must be yes or no")),
        };
        let arch = MlpArchitecture::new(input_dim, hidden, output_dim, activation)?;

        let mut parse_vec = |prefix: &str| -> Result<Vec<f64>> {
            let (line, text) = lines
                .next()
                .ok_or_else(|| bad(2, &format!("missing {prefix} line")))??;
            let rest = text
                .strip_prefix(prefix)
                .ok_or_else(|| bad(line, &format!("expected {prefix} line")))?;
            rest.split_whitespace()
                .map(|v| v.parse::<f64>().map_err(|_| bad(line, "bad number")))
                .collect()
        };
        let scaler = if has_scaler {
            let mean = parse_vec("mean")?;
            let std = parse_vec("std")?;
            Some(Standardizer { mean, std })
        } else {
            None
        };
        let mut weights = Vec::with_capacity(arch.weight_count());
        for item in lines {
            let (line, text) = item?;
            let text = text.trim();
            if text.is_empty() {
                continue;
            }
            weights.push(text.parse::<f64>().map_err(|_| bad(line, "bad weight"))?);
        }
        let model = MlpModel::new(arch, WeightVector::new(weights)?)?;
        match scaler {
            Some(s) => model.with_scaler(s),
            None => Ok(model),
        }
    }
}

const ARMIJO_C: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;

fn join(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:e}"))
        .collect::<Vec<_>>()
        .join(" ")
}

fn decide(scores: &[f64]) -> usize {
    if scores.len() == 1 {
        return usize::from(scores[0] > 0.0);
    }
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

struct Scratch {
    input: Vec<f64>,
    pre: Vec<f64>,
    hidden: Vec<f64>,
    out: Vec<f64>,
}

impl Scratch {
    fn new(arch: &MlpArchitecture) -> Self {
        Self {
            input: vec![0.0; arch.input_dim],
            pre: vec![0.0; arch.hidden],
            hidden: vec![0.0; arch.hidden],
            out: vec![0.0; arch.output_dim],
        }
    }
}

fn forward_pass(
    arch: &MlpArchitecture,
    w: &[f64],
    x: &[f64],
    pre: &mut [f64],
    hidden: &mut [f64],
    out: &mut [f64],
) {
    let d = arch.input_dim;
    for (j, block) in w[..arch.output_offset()].chunks_exact(d + 1).enumerate() {
        let a = block[0] + block[1..].iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
        pre[j] = a;
        hidden[j] = arch.activation.apply(a);
    }
    let h = arch.hidden;
    for (o, block) in w[arch.output_offset()..].chunks_exact(h + 1).enumerate() {
        out[o] = block[0] + block[1..].iter().zip(hidden.iter()).map(|(v, hj)| v * hj).sum::<f64>();
    }
}

/// Regularized training objective over a fixed (already scaled) dataset.
pub struct Objective<'a> {
    arch: &'a MlpArchitecture,
    data: &'a Dataset,
    alpha: f64,
}

impl<'a> Objective<'a> {
    pub fn new(arch: &'a MlpArchitecture, data: &'a Dataset, alpha: f64) -> Result<Self> {
        if data.is_empty() {
            return Err(MlpError::EmptyTrainingSet);
        }
        if data.num_features() != arch.input_dim {
            return Err(MlpError::DimensionMismatch {
                expected: arch.input_dim,
                actual: data.num_features(),
            });
        }
        let classes = arch.num_classes();
        if let Some(&label) = data.labels().iter().find(|&&l| l >= classes) {
            return Err(MlpError::LabelOutOfRange { label, classes });
        }
        Ok(Self { arch, data, alpha })
    }

    /// Mean cross-entropy plus `alpha·‖w‖²/2`.
    pub fn value(&self, w: &[f64]) -> f64 {
        let mut buf = Scratch::new(self.arch);
        let mut total = 0.0;
        for (x, &label) in self.data.rows().zip(self.data.labels()) {
            forward_pass(self.arch, w, x, &mut buf.pre, &mut buf.hidden, &mut buf.out);
            total += sample_loss(&buf.out, label, None);
        }
        total / self.data.len() as f64 + self.penalty(w)
    }

    /// Objective value; the gradient is written into `grad`.
    pub fn value_and_gradient(&self, w: &[f64], grad: &mut [f64]) -> f64 {
        let arch = self.arch;
        let (d, h) = (arch.input_dim, arch.hidden);
        let off = arch.output_offset();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut buf = Scratch::new(arch);
        let mut dz = vec![0.0; arch.output_dim];
        let mut da = vec![0.0; h];
        let mut total = 0.0;
        for (x, &label) in self.data.rows().zip(self.data.labels()) {
            forward_pass(arch, w, x, &mut buf.pre, &mut buf.hidden, &mut buf.out);
            total += sample_loss(&buf.out, label, Some(&mut dz));

            da.iter_mut().for_each(|v| *v = 0.0);
            for (o, &dzo) in dz.iter().enumerate() {
                let base = off + o * (h + 1);
                grad[base] += dzo;
                for j in 0..h {
                    grad[base + 1 + j] += dzo * buf.hidden[j];
                    da[j] += dzo * w[base + 1 + j];
                }
            }
            for j in 0..h {
                let daj = da[j] * arch.activation.derivative(buf.pre[j], buf.hidden[j]);
                let base = j * (d + 1);
                grad[base] += daj;
                for (i, xi) in x.iter().enumerate() {
                    grad[base + 1 + i] += daj * xi;
                }
            }
        }
        let n = self.data.len() as f64;
        for (g, wi) in grad.iter_mut().zip(w) {
            *g = *g / n + self.alpha * wi;
        }
        total / n + self.penalty(w)
    }

    fn penalty(&self, w: &[f64]) -> f64 {
        0.5 * self.alpha * w.iter().map(|v| v * v).sum::<f64>()
    }
}

// Cross-entropy of one example; optionally writes d(loss)/d(scores).
fn sample_loss(scores: &[f64], label: usize, dz: Option<&mut Vec<f64>>) -> f64 {
    if scores.len() == 1 {
        let z = scores[0];
        let y = label as f64;
        if let Some(dz) = dz {
            dz[0] = sigmoid(z) - y;
        }
        return softplus(z) - y * z;
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scores.iter().map(|s| (s - max).exp()).sum();
    let log_norm = max + sum.ln();
    if let Some(dz) = dz {
        for (k, (d, s)) in dz.iter_mut().zip(scores).enumerate() {
            *d = (s - log_norm).exp() - if k == label { 1.0 } else { 0.0 };
        }
    }
    log_norm - scores[label]
}
