//! Architecture evaluation through memory retrieval.
//!
//! Every weight initialization of an architecture yields one trained network
//! and, from it, a performance vector: bit `j` is 1 iff the network classifies
//! validation example `j` correctly. The performance vectors are stored as a
//! probabilistic quantum memory and queried with the all-ones string (a
//! perfect score). The probability that the control qubit reads 0,
//!
//! ```text
//! P(c = 0) = (1/|W|) Σ_k cos²(π·d_H(1…1, perf_k) / (2·t_s))
//! ```
//!
//! is the architecture's score. Two classical realizations of the weight set
//! `W` are available: random sampling ([`evaluate_sampled`]) and complete
//! enumeration of a quantized weight grid ([`evaluate_exhaustive`]).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::dataio::{self, DataError, Dataset, SplitSpec, Standardizer};
use crate::mlp::{
    init_weights_with, Activation, MlpArchitecture, MlpError, MlpModel, TrainConfig, WeightVector,
};
use crate::pqm::{self, BitString, PqmError};

/// Default grid budget: 3^12 points.
pub const DEFAULT_GRID_BUDGET: u64 = 531_441;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Pqm(#[from] PqmError),
    #[error("weight grid of {levels}^{weight_count} = {} points exceeds the budget of {budget}",
        required.map_or_else(|| "more than 2^128".to_string(), |r| r.to_string()))]
    BudgetExceeded {
        levels: usize,
        weight_count: usize,
        required: Option<u128>,
        budget: u64,
    },
    #[error("invalid weight grid: {0}")]
    InvalidGrid(String),
    #[error("no performance vectors")]
    EmptyPerformances,
    #[error("performance vector {index} has {actual} bits, expected {expected}")]
    LengthMismatch {
        index: usize,
        expected: usize,
        actual: usize,
    },
    #[error("all {excluded} trainings failed; nothing to score")]
    NoValidSamples { excluded: usize },
    #[error("invalid hidden-neuron range [{lo}, {hi})")]
    InvalidRange { lo: usize, hi: usize },
    #[error("at least one sample is required")]
    NoSamples,
    #[error("thread pool: {0}")]
    ThreadPool(String),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Correct/incorrect pattern of one network over the validation set.
#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceVector {
    pub bits: BitString,
    pub source_weight_index: usize,
}

impl PerformanceVector {
    pub fn accuracy(&self) -> f64 {
        self.bits.count_ones() as f64 / self.bits.len() as f64
    }
}

pub fn performance_vector(
    model: &MlpModel,
    validation: &Dataset,
    source_weight_index: usize,
) -> Result<PerformanceVector> {
    if validation.is_empty() {
        return Err(DataError::Empty.into());
    }
    let predicted = model.predict(validation)?;
    let bits = predicted
        .iter()
        .zip(validation.labels())
        .map(|(p, l)| p == l)
        .collect();
    Ok(PerformanceVector {
        bits: BitString::new(bits)?,
        source_weight_index,
    })
}

/// Retrieval probability of the all-ones input against the performance
/// vectors, each one counted once.
pub fn score(performances: &[PerformanceVector]) -> Result<f64> {
    let first = performances.first().ok_or(EvalError::EmptyPerformances)?;
    let ts = first.bits.len();
    let mut total = 0.0;
    for (index, p) in performances.iter().enumerate() {
        if p.bits.len() != ts {
            return Err(EvalError::LengthMismatch {
                index,
                expected: ts,
                actual: p.bits.len(),
            });
        }
        let misses = ts - p.bits.count_ones();
        total += pqm::recognition_weight(misses, ts);
    }
    Ok(total / performances.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Sampled,
    Exhaustive,
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Sampled => "sampled",
            Mode::Exhaustive => "exhaustive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitectureReport {
    pub architecture: MlpArchitecture,
    pub mode: Mode,
    pub seed: u64,
    pub score_p0: f64,
    pub mean_accuracy: f64,
    pub accuracy_per_sample: Vec<f64>,
    /// Networks that contributed a performance vector.
    pub num_samples: usize,
    /// Trainings that diverged and were left out of the memory.
    pub excluded: usize,
    pub performances: Vec<PerformanceVector>,
}

impl ArchitectureReport {
    pub fn min_accuracy(&self) -> f64 {
        self.accuracy_per_sample.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_accuracy(&self) -> f64 {
        self.accuracy_per_sample
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Population standard deviation of the per-sample accuracies.
    pub fn std_accuracy(&self) -> f64 {
        let n = self.accuracy_per_sample.len() as f64;
        let var = self
            .accuracy_per_sample
            .iter()
            .map(|a| (a - self.mean_accuracy).powi(2))
            .sum::<f64>()
            / n;
        var.sqrt()
    }

    /// Performance vectors as the memory they are scored against.
    pub fn memory(&self) -> Result<pqm::PatternMemory> {
        Ok(pqm::PatternMemory::new(
            self.performances.iter().map(|p| p.bits.clone()).collect(),
        )?)
    }
}

/// Train/validation split of a dataset plus the scaler fitted on the train part.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub train: Dataset,
    pub validation: Dataset,
    pub scaler: Standardizer,
    pub split: SplitSpec,
}

impl PreparedData {
    pub fn new(dataset: &Dataset, split: SplitSpec) -> Result<Self> {
        let (train, validation) = dataio::split(dataset, &split)?;
        let scaler = Standardizer::fit(&train);
        Ok(Self {
            train,
            validation,
            scaler,
            split,
        })
    }

    pub fn architecture(&self, hidden: usize, activation: Activation) -> Result<MlpArchitecture> {
        Ok(MlpArchitecture::for_dataset(&self.train, hidden, activation)?)
    }
}

/// Execution options shared by both evaluation modes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub train: TrainConfig,
    /// Worker threads; 0 lets the pool pick. Results do not depend on it.
    pub threads: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            train: TrainConfig::default(),
            threads: 1,
        }
    }
}

/// Weight vector `index` of the sampled mode: stream `index` of a ChaCha8
/// generator seeded with `seed`.
pub fn sample_weights(arch: &MlpArchitecture, seed: u64, index: usize) -> WeightVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    init_weights_with(arch, &mut rng)
}

/// Trains `num_samples` networks from independent random initializations.
pub fn evaluate_sampled(
    arch: &MlpArchitecture,
    data: &PreparedData,
    num_samples: usize,
    seed: u64,
    options: &EvalOptions,
) -> Result<ArchitectureReport> {
    if num_samples == 0 {
        return Err(EvalError::NoSamples);
    }
    let init = |i: usize| sample_weights(arch, seed, i);
    evaluate_with(
        arch,
        data,
        num_samples,
        &init,
        Some(&options.train),
        options.threads,
        Mode::Sampled,
        seed,
    )
}

/// Finite set of weight levels enumerated over every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGrid {
    levels: Vec<f64>,
    weight_count: usize,
    points: u64,
}

impl WeightGrid {
    pub fn new(levels: Vec<f64>, weight_count: usize, budget: u64) -> Result<Self> {
        if levels.is_empty() {
            return Err(EvalError::InvalidGrid("no levels".into()));
        }
        if let Some(v) = levels.iter().find(|v| !v.is_finite()) {
            return Err(EvalError::InvalidGrid(format!("level {v} is not finite")));
        }
        for (i, a) in levels.iter().enumerate() {
            if levels[..i].contains(a) {
                return Err(EvalError::InvalidGrid(format!("level {a} listed twice")));
            }
        }
        let required = (levels.len() as u128).checked_pow(weight_count as u32);
        match required {
            Some(r) if r <= budget as u128 => Ok(Self {
                levels,
                weight_count,
                points: r as u64,
            }),
            _ => Err(EvalError::BudgetExceeded {
                levels: levels.len(),
                weight_count,
                required,
                budget,
            }),
        }
    }

    /// `{-1, 0, +1}`.
    pub fn ternary(weight_count: usize, budget: u64) -> Result<Self> {
        Self::new(vec![-1.0, 0.0, 1.0], weight_count, budget)
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn weight_count(&self) -> usize {
        self.weight_count
    }

    pub fn len(&self) -> u64 {
        self.points
    }

    pub fn is_empty(&self) -> bool {
        self.points == 0
    }

    /// Grid point `index`; weight `j` takes digit `j` of `index` in base
    /// `|levels|` (weight 0 varies fastest).
    pub fn point(&self, index: u64) -> WeightVector {
        let base = self.levels.len() as u64;
        let mut rest = index;
        let values = (0..self.weight_count)
            .map(|_| {
                let digit = (rest % base) as usize;
                rest /= base;
                self.levels[digit]
            })
            .collect();
        WeightVector::new(values).expect("levels are finite")
    }
}

/// Uses every grid point as an initialization, training it when `train` is
/// set and otherwise using it as the final weights.
pub fn evaluate_exhaustive(
    arch: &MlpArchitecture,
    data: &PreparedData,
    grid: &WeightGrid,
    train: bool,
    options: &EvalOptions,
) -> Result<ArchitectureReport> {
    if grid.weight_count() != arch.weight_count() {
        return Err(EvalError::InvalidGrid(format!(
            "grid has {} weights, architecture needs {}",
            grid.weight_count(),
            arch.weight_count()
        )));
    }
    let init = |i: usize| grid.point(i as u64);
    evaluate_with(
        arch,
        data,
        grid.len() as usize,
        &init,
        train.then_some(&options.train),
        options.threads,
        Mode::Exhaustive,
        data.split.seed,
    )
}

/// Shared core of both modes: `count` initializations produced by `init`,
/// optionally trained, scored in index order.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_with(
    arch: &MlpArchitecture,
    data: &PreparedData,
    count: usize,
    init: &(dyn Fn(usize) -> WeightVector + Sync),
    train: Option<&TrainConfig>,
    threads: usize,
    mode: Mode,
    seed: u64,
) -> Result<ArchitectureReport> {
    if count == 0 {
        return Err(EvalError::NoSamples);
    }
    if data.validation.is_empty() {
        return Err(DataError::Empty.into());
    }
    if let Some(cfg) = train {
        cfg.validate()?;
    }
    let run_one = |i: usize| -> Result<Option<PerformanceVector>> {
        let model = MlpModel::new(*arch, init(i))?.with_scaler(data.scaler.clone())?;
        let model = match train {
            Some(cfg) => match model.train(&data.train, cfg) {
                Ok(m) => m,
                Err(MlpError::NonFiniteLoss { iteration }) => {
                    log::warn!("sample {i}: loss diverged at iteration {iteration}; excluded");
                    return Ok(None);
                }
                Err(e) => return Err(e.into()),
            },
            None => model,
        };
        performance_vector(&model, &data.validation, i).map(Some)
    };

    let results: Vec<Result<Option<PerformanceVector>>> = if threads == 1 {
        (0..count).map(run_one).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| EvalError::ThreadPool(e.to_string()))?;
        pool.install(|| (0..count).into_par_iter().map(run_one).collect())
    };

    let mut performances = Vec::with_capacity(count);
    let mut excluded = 0;
    for r in results {
        match r? {
            Some(p) => performances.push(p),
            None => excluded += 1,
        }
    }
    if performances.is_empty() {
        return Err(EvalError::NoValidSamples { excluded });
    }
    let score_p0 = score(&performances)?;
    let accuracy_per_sample: Vec<f64> = performances.iter().map(|p| p.accuracy()).collect();
    let mean_accuracy = accuracy_per_sample.iter().sum::<f64>() / accuracy_per_sample.len() as f64;
    Ok(ArchitectureReport {
        architecture: *arch,
        mode,
        seed,
        score_p0,
        mean_accuracy,
        num_samples: performances.len(),
        accuracy_per_sample,
        excluded,
        performances,
    })
}

/// How each architecture of a sweep is evaluated.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepMode {
    Sampled { num_samples: usize, seed: u64 },
    Exhaustive { levels: Vec<f64>, budget: u64, train: bool },
}

impl Default for SweepMode {
    fn default() -> Self {
        SweepMode::Sampled {
            num_samples: 1000,
            seed: 0,
        }
    }
}

/// Default hidden-neuron range of a sweep, `[1, 20)`.
pub const DEFAULT_HIDDEN_RANGE: (usize, usize) = (1, 20);

/// One report per hidden-neuron count in `[lo, hi)`, ascending.
pub fn sweep(
    hidden: (usize, usize),
    data: &PreparedData,
    activation: Activation,
    mode: &SweepMode,
    options: &EvalOptions,
) -> Result<Vec<ArchitectureReport>> {
    let (lo, hi) = hidden;
    if lo == 0 || hi <= lo {
        return Err(EvalError::InvalidRange { lo, hi });
    }
    (lo..hi)
        .map(|h| {
            let arch = data.architecture(h, activation)?;
            match mode {
                SweepMode::Sampled { num_samples, seed } => {
                    evaluate_sampled(&arch, data, *num_samples, *seed, options)
                }
                SweepMode::Exhaustive {
                    levels,
                    budget,
                    train,
                } => {
                    let grid = WeightGrid::new(levels.clone(), arch.weight_count(), *budget)?;
                    evaluate_exhaustive(&arch, data, &grid, *train, options)
                }
            }
        })
        .collect()
}

/// Outcome of running the one-bit procedure `kappa` times.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RepetitionEstimate {
    pub kappa: u64,
    pub zeros: u64,
    pub estimate: f64,
    pub std_error: f64,
}

/// Simulates `kappa` independent runs, each returning 0 with probability
/// `p0`, and estimates `p0` from the observed zeros.
pub fn estimate_by_repetition(p0: f64, kappa: u64, seed: u64) -> RepetitionEstimate {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zeros = (0..kappa).filter(|_| rng.random::<f64>() < p0).count() as u64;
    let estimate = if kappa == 0 {
        0.0
    } else {
        zeros as f64 / kappa as f64
    };
    let std_error = if kappa == 0 {
        f64::INFINITY
    } else {
        (estimate * (1.0 - estimate) / kappa as f64).sqrt()
    };
    RepetitionEstimate {
        kappa,
        zeros,
        estimate,
        std_error,
    }
}
