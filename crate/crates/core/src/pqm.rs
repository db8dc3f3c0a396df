//! Probabilistic quantum memory.
//!
//! A memory holds `p` bit patterns of length `n` in uniform superposition.
//! Retrieval with input `i` leaves a control qubit that reads 0 with
//! probability `(1/p)·Σ_k cos²(π·d_H(i, m_k)/(2n))`.
//!
//! Two retrieval paths are provided: [`retrieve_analytic`] evaluates that
//! closed form directly, while [`retrieve_exact_from_circuit`] and
//! [`retrieve_circuit`] run the retrieval as a gate sequence on a
//! [`StateVector`] and read the control qubit off the result.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::qsim::{QsimError, StateVector, MAX_QUBITS};

/// Largest pattern length the circuit path accepts (`2n + 1` qubits).
pub const MAX_CIRCUIT_BITS: usize = 10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PqmError {
    #[error("bit strings have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("bit string must contain at least one bit")]
    EmptyBitString,
    #[error("invalid character {0:?} in bit string")]
    InvalidBit(char),
    #[error("memory holds no patterns")]
    EmptyMemory,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("patterns of {bits} bits need {qubits} qubits; the circuit path supports at most {max} bits")]
    Capacity {
        bits: usize,
        qubits: usize,
        max: usize,
    },
    #[error("at least one shot is required")]
    NoShots,
    #[error(transparent)]
    Simulator(#[from] QsimError),
    #[error("cannot read memory file: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, PqmError>;

/// A fixed-length bit pattern. Position `k` maps to qubit `k` of a register.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(PqmError::EmptyBitString);
        }
        Ok(Self { bits })
    }

    pub fn ones(len: usize) -> Result<Self> {
        Self::new(vec![true; len])
    }

    pub fn zeros(len: usize) -> Result<Self> {
        Self::new(vec![false; len])
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    // never true; kept for clippy's len_without_is_empty
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn get(&self, k: usize) -> bool {
        self.bits[k]
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Basis index of the pattern when bit `k` sits on qubit `offset + k`.
    pub fn basis_index(&self, offset: usize) -> usize {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .fold(0, |acc, (k, _)| acc | (1 << (offset + k)))
    }
}

impl FromStr for BitString {
    type Err = PqmError;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(PqmError::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(bits)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Number of positions where `a` and `b` differ.
pub fn hamming_distance(a: &BitString, b: &BitString) -> Result<usize> {
    if a.len() != b.len() {
        return Err(PqmError::LengthMismatch(a.len(), b.len()));
    }
    Ok(a.bits.iter().zip(&b.bits).filter(|(x, y)| x != y).count())
}

/// `cos²(π·d/(2n))`: one stored pattern's contribution to P(c = 0).
pub fn recognition_weight(distance: usize, n: usize) -> f64 {
    (PI * distance as f64 / (2.0 * n as f64)).cos().powi(2)
}

/// Ordered multiset of equal-length patterns; duplicates count once per occurrence.
#[derive(Debug, Clone, PartialEq)]
pub struct PatternMemory {
    patterns: Vec<BitString>,
    pattern_length: usize,
}

impl PatternMemory {
    pub fn new(patterns: Vec<BitString>) -> Result<Self> {
        let first = patterns.first().ok_or(PqmError::EmptyMemory)?;
        let pattern_length = first.len();
        if let Some(bad) = patterns.iter().find(|p| p.len() != pattern_length) {
            return Err(PqmError::LengthMismatch(pattern_length, bad.len()));
        }
        Ok(Self {
            patterns,
            pattern_length,
        })
    }

    /// Parses one bit string per line. Blank lines and `#` comments are
    /// ignored; trailing comments after a pattern are allowed.
    pub fn parse(text: &str) -> Result<Self> {
        let mut patterns = Vec::new();
        let mut width: Option<usize> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let pattern: BitString = body.parse().map_err(|e: PqmError| PqmError::Parse {
                line,
                message: e.to_string(),
            })?;
            match width {
                Some(w) if w != pattern.len() => {
                    return Err(PqmError::Parse {
                        line,
                        message: format!("pattern has {} bits, expected {w}", pattern.len()),
                    })
                }
                _ => width = Some(pattern.len()),
            }
            patterns.push(pattern);
        }
        Self::new(patterns)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PqmError::Io(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn patterns(&self) -> &[BitString] {
        &self.patterns
    }

    pub fn pattern_length(&self) -> usize {
        self.pattern_length
    }

    /// Number of stored occurrences, `p`.
    pub fn len(&self) -> usize {
        self.patterns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patterns.is_empty()
    }

    fn check_input(&self, input: &BitString) -> Result<()> {
        if input.len() != self.pattern_length {
            Err(PqmError::LengthMismatch(self.pattern_length, input.len()))
        } else {
            Ok(())
        }
    }

    // (basis index, multiplicity) of each distinct pattern, in first-seen order
    fn multiplicities(&self, offset: usize) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for p in &self.patterns {
            let idx = p.basis_index(offset);
            match out.iter_mut().find(|(i, _)| *i == idx) {
                Some((_, m)) => *m += 1,
                None => out.push((idx, 1)),
            }
        }
        out
    }
}

/// Probabilities of reading the control qubit as 0 and as 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetrievalOutcome {
    pub p0: f64,
    pub p1: f64,
}

/// Closed-form retrieval probabilities.
pub fn retrieve_analytic(memory: &PatternMemory, input: &BitString) -> Result<RetrievalOutcome> {
    memory.check_input(input)?;
    let n = memory.pattern_length;
    let p = memory.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for pattern in &memory.patterns {
        let d = hamming_distance(input, pattern)?;
        let theta = PI * d as f64 / (2.0 * n as f64);
        c += theta.cos().powi(2);
        s += theta.sin().powi(2);
    }
    Ok(RetrievalOutcome {
        p0: c / p,
        p1: s / p,
    })
}

/// Memory state over `n` qubits: amplitude `√(mult/p)` on every stored pattern.
pub fn prepare_memory_state(memory: &PatternMemory) -> Result<StateVector> {
    let n = memory.pattern_length;
    if n > MAX_QUBITS {
        return Err(QsimError::TooManyQubits {
            requested: n,
            limit: MAX_QUBITS,
        }
        .into());
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
    inject(&mut amps, memory, 0, 0);
    Ok(StateVector::from_amplitudes(amps)?)
}

fn inject(amps: &mut [Complex64], memory: &PatternMemory, offset: usize, fixed: usize) {
    let p = memory.len() as f64;
    for (idx, mult) in memory.multiplicities(offset) {
        amps[fixed | idx] = Complex64::new((mult as f64 / p).sqrt(), 0.0);
    }
}

/// Register layout of the `2n + 1`-qubit retrieval circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetrievalRegisters {
    pub n: usize,
}

impl RetrievalRegisters {
    pub fn input(&self, k: usize) -> usize {
        k
    }

    pub fn memory(&self, k: usize) -> usize {
        self.n + k
    }

    pub fn control(&self) -> usize {
        2 * self.n
    }

    pub fn num_qubits(&self) -> usize {
        2 * self.n + 1
    }
}

/// Builds `|i; memory; c=0⟩` and runs the retrieval gate sequence, returning
/// the state just before the control qubit is measured.
pub fn run_retrieval_circuit(
    memory: &PatternMemory,
    input: &BitString,
) -> Result<(StateVector, RetrievalRegisters)> {
    memory.check_input(input)?;
    let n = memory.pattern_length;
    if n > MAX_CIRCUIT_BITS {
        return Err(PqmError::Capacity {
            bits: n,
            qubits: 2 * n + 1,
            max: MAX_CIRCUIT_BITS,
        });
    }
    let regs = RetrievalRegisters { n };
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << regs.num_qubits()];
    inject(&mut amps, memory, n, input.basis_index(0));
    let mut state = StateVector::from_amplitudes(amps)?;

    // memory_k ← 1 iff input_k == memory_k
    for k in 0..n {
        state.cnot(regs.input(k), regs.memory(k))?;
        state.x(regs.memory(k))?;
    }
    state.hadamard(regs.control())?;
    // each differing bit contributes e^{iπ/(2n)} to the c=0 branch and
    // e^{-iπ/(2n)} to the c=1 branch
    let half = PI / (2.0 * n as f64);
    for k in 0..n {
        state.phase(regs.memory(k), half, false, None)?;
        state.phase(regs.memory(k), -2.0 * half, false, Some(regs.control()))?;
    }
    state.hadamard(regs.control())?;
    for k in (0..n).rev() {
        state.x(regs.memory(k))?;
        state.cnot(regs.input(k), regs.memory(k))?;
    }
    Ok((state, regs))
}

/// Control-qubit marginal read directly off the simulated circuit, no sampling.
pub fn retrieve_exact_from_circuit(
    memory: &PatternMemory,
    input: &BitString,
) -> Result<RetrievalOutcome> {
    let (state, regs) = run_retrieval_circuit(memory, input)?;
    Ok(RetrievalOutcome {
        p0: state.probability(regs.control(), false)?,
        p1: state.probability(regs.control(), true)?,
    })
}

/// Shot-sampled retrieval result.
#[derive(Debug, Clone, PartialEq)]
pub struct ShotEstimate {
    pub outcome: RetrievalOutcome,
    pub zeros: u64,
    pub ones: u64,
}

/// Runs the retrieval circuit and measures the control qubit `shots` times.
///
/// Shot `s` measures a fresh copy of the prepared state with a generator
/// seeded from `seed + s`, so results do not depend on evaluation order.
pub fn retrieve_circuit(
    memory: &PatternMemory,
    input: &BitString,
    shots: u64,
    seed: u64,
) -> Result<ShotEstimate> {
    if shots == 0 {
        return Err(PqmError::NoShots);
    }
    let (state, regs) = run_retrieval_circuit(memory, input)?;
    let mut zeros = 0u64;
    for shot in 0..shots {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(shot));
        let mut copy = state.clone();
        if !copy.measure(regs.control(), &mut rng)? {
            zeros += 1;
        }
    }
    let p0 = zeros as f64 / shots as f64;
    Ok(ShotEstimate {
        outcome: RetrievalOutcome { p0, p1: 1.0 - p0 },
        zeros,
        ones: shots - zeros,
    })
}
