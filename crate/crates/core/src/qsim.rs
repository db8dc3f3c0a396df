//! Dense state-vector simulator.
//!
//! Qubit ordering is little-endian: qubit `q` is bit `q` of the basis index,
//! so the amplitude of `|q2 q1 q0⟩` lives at index `q0 + 2·q1 + 4·q2`.
//! Gates are applied in place by iterating over the affected index pairs;
//! no gate matrix is ever materialized.

use std::f64::consts::FRAC_1_SQRT_2;
use std::io::{self, Write};

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

/// Largest register the simulator accepts (2^24 amplitudes, 256 MiB).
pub const MAX_QUBITS: usize = 24;

/// Norm tolerance used when validating externally supplied amplitudes.
pub const NORM_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QsimError {
    #[error("qubit index {index} out of range for a {num_qubits}-qubit register")]
    QubitOutOfRange { index: usize, num_qubits: usize },
    #[error("basis index {index} does not exist in a {num_qubits}-qubit register")]
    BasisOutOfRange { index: usize, num_qubits: usize },
    #[error("qubit {0} used more than once in a single gate")]
    RepeatedQubit(usize),
    #[error("register of {requested} qubits exceeds the simulator limit of {limit}")]
    TooManyQubits { requested: usize, limit: usize },
    #[error("a register needs at least one qubit")]
    NoQubits,
    #[error("amplitude vector of length {0} is not a power of two")]
    BadLength(usize),
    #[error("amplitudes have squared norm {0}, expected 1")]
    NotNormalized(f64),
}

pub type Result<T> = std::result::Result<T, QsimError>;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::basis(num_qubits, 0)
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(num_qubits: usize, index: usize) -> Result<Self> {
        check_size(num_qubits)?;
        let dim = 1usize << num_qubits;
        if index >= dim {
            return Err(QsimError::BasisOutOfRange { index, num_qubits });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// Wraps a caller-prepared amplitude vector. The length must be a power of
    /// two and the squared norm must be 1 within [`NORM_TOLERANCE`].
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(QsimError::BadLength(len));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_size(num_qubits)?;
        let norm: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(QsimError::NotNormalized(norm));
        }
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, index: usize) -> Complex64 {
        self.amplitudes[index]
    }

    /// Σ|amplitude|².
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Probability that measuring qubit `q` yields `value`.
    pub fn probability(&self, q: usize, value: bool) -> Result<f64> {
        self.check_qubit(q)?;
        let mask = 1usize << q;
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| (i & mask != 0) == value)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    pub fn hadamard(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        self.for_each_pair(q, |a0, a1| {
            let (x, y) = (*a0, *a1);
            *a0 = h * (x + y);
            *a1 = h * (x - y);
        });
        Ok(())
    }

    pub fn x(&mut self, q: usize) -> Result<()> {
        self.check_qubit(q)?;
        self.for_each_pair(q, std::mem::swap);
        Ok(())
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.controlled_x(&[control], target)
    }

    /// `|x,y,z⟩ → |x,y,z⊕(x·y)⟩` with `x`, `y` on `c1`, `c2` and `z` on `target`.
    pub fn toffoli(&mut self, c1: usize, c2: usize, target: usize) -> Result<()> {
        self.controlled_x(&[c1, c2], target)
    }

    /// Multiplies by `e^{i·angle}` every amplitude whose qubit `q` equals
    /// `on_value` and, when `control` is given, whose control qubit is 1.
    pub fn phase(
        &mut self,
        q: usize,
        angle: f64,
        on_value: bool,
        control: Option<usize>,
    ) -> Result<()> {
        self.check_qubit(q)?;
        let control_mask = match control {
            Some(c) => {
                self.check_qubit(c)?;
                if c == q {
                    return Err(QsimError::RepeatedQubit(c));
                }
                1usize << c
            }
            None => 0,
        };
        let mask = 1usize << q;
        let factor = Complex64::from_polar(1.0, angle);
        for (i, amp) in self.amplitudes.iter_mut().enumerate() {
            if (i & mask != 0) == on_value && i & control_mask == control_mask {
                *amp *= factor;
            }
        }
        Ok(())
    }

    /// Applies `U_f|x, y⟩ = |x, y ⊕ f(x)⟩`.
    ///
    /// `inputs[j]` supplies bit `j` of the argument passed to `f`. The gate
    /// only permutes basis states, so amplitudes are moved, never mixed.
    pub fn oracle<F>(&mut self, f: F, inputs: &[usize], output: usize) -> Result<()>
    where
        F: Fn(u64) -> bool,
    {
        self.check_distinct(inputs, output)?;
        if inputs.len() > 64 {
            return Err(QsimError::TooManyQubits {
                requested: inputs.len(),
                limit: 64,
            });
        }
        let out_mask = 1usize << output;
        for i in 0..self.amplitudes.len() {
            if i & out_mask != 0 {
                continue;
            }
            let arg = inputs
                .iter()
                .enumerate()
                .fold(0u64, |acc, (bit, &q)| acc | ((((i >> q) & 1) as u64) << bit));
            if f(arg) {
                self.amplitudes.swap(i, i | out_mask);
            }
        }
        Ok(())
    }

    /// Measures qubit `q`, collapsing the state onto the observed branch.
    pub fn measure<R: Rng + ?Sized>(&mut self, q: usize, rng: &mut R) -> Result<bool> {
        let p1 = self.probability(q, true)?;
        let outcome = rng.random::<f64>() < p1;
        let keep = if outcome { p1 } else { 1.0 - p1 };
        let scale = 1.0 / keep.sqrt();
        let mask = 1usize << q;
        for (i, amp) in self.amplitudes.iter_mut().enumerate() {
            if (i & mask != 0) == outcome {
                *amp *= scale;
            } else {
                *amp = Complex64::new(0.0, 0.0);
            }
        }
        Ok(outcome)
    }

    /// Debug dump: one `index,re,im` row per basis state.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "index,re,im")?;
        for (i, a) in self.amplitudes.iter().enumerate() {
            writeln!(out, "{i},{:e},{:e}", a.re, a.im)?;
        }
        Ok(())
    }

    fn controlled_x(&mut self, controls: &[usize], target: usize) -> Result<()> {
        self.check_distinct(controls, target)?;
        let ctrl_mask = controls.iter().fold(0usize, |m, &c| m | (1 << c));
        self.for_each_pair_indexed(target, |i, a0, a1| {
            if i & ctrl_mask == ctrl_mask {
                std::mem::swap(a0, a1);
            }
        });
        Ok(())
    }

    fn for_each_pair<F>(&mut self, q: usize, mut f: F)
    where
        F: FnMut(&mut Complex64, &mut Complex64),
    {
        self.for_each_pair_indexed(q, |_, a0, a1| f(a0, a1));
    }

    // Visits every (|…0_q…⟩, |…1_q…⟩) pair; `i` is the index with bit q clear.
    fn for_each_pair_indexed<F>(&mut self, q: usize, mut f: F)
    where
        F: FnMut(usize, &mut Complex64, &mut Complex64),
    {
        let stride = 1usize << q;
        for (b, block) in self.amplitudes.chunks_exact_mut(2 * stride).enumerate() {
            let base = b * 2 * stride;
            let (lo, hi) = block.split_at_mut(stride);
            for (k, (a0, a1)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                f(base + k, a0, a1);
            }
        }
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            Err(QsimError::QubitOutOfRange {
                index: q,
                num_qubits: self.num_qubits,
            })
        } else {
            Ok(())
        }
    }

    fn check_distinct(&self, others: &[usize], target: usize) -> Result<()> {
        self.check_qubit(target)?;
        for (j, &q) in others.iter().enumerate() {
            self.check_qubit(q)?;
            if q == target || others[..j].contains(&q) {
                return Err(QsimError::RepeatedQubit(q));
            }
        }
        Ok(())
    }
}

fn check_size(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 {
        Err(QsimError::NoQubits)
    } else if num_qubits > MAX_QUBITS {
        Err(QsimError::TooManyQubits {
            requested: num_qubits,
            limit: MAX_QUBITS,
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-10;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_state(state: &StateVector, expected: &[Complex64]) {
        assert_eq!(state.amplitudes().len(), expected.len());
        for (i, (a, e)) in state.amplitudes().iter().zip(expected).enumerate() {
            assert!((a - e).norm() <= TOL, "amplitude {i}: got {a}, expected {e}");
        }
    }

    fn random_state(num_qubits: usize, seed: u64) -> StateVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> = (0..1 << num_qubits)
            .map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        amps.iter_mut().for_each(|a| *a /= norm);
        StateVector::from_amplitudes(amps).unwrap()
    }

    #[test]
    fn hadamard_on_basis_states() {
        let s = FRAC_1_SQRT_2;
        let mut zero = StateVector::zero(1).unwrap();
        zero.hadamard(0).unwrap();
        assert_state(&zero, &[c(s, 0.0), c(s, 0.0)]);

        let mut one = StateVector::basis(1, 1).unwrap();
        one.hadamard(0).unwrap();
        assert_state(&one, &[c(s, 0.0), c(-s, 0.0)]);

        zero.hadamard(0).unwrap();
        assert_state(&zero, &[c(1.0, 0.0), c(0.0, 0.0)]);
    }

    #[test]
    fn x_flips() {
        let mut s = StateVector::zero(1).unwrap();
        s.x(0).unwrap();
        assert_state(&s, &[c(0.0, 0.0), c(1.0, 0.0)]);
        s.x(0).unwrap();
        assert_state(&s, &[c(1.0, 0.0), c(0.0, 0.0)]);

        let mut plus = StateVector::zero(1).unwrap();
        plus.hadamard(0).unwrap();
        let before = plus.clone();
        plus.x(0).unwrap();
        assert_state(&plus, before.amplitudes());
    }

    #[test]
    fn cnot_truth_table() {
        // control = qubit 1, target = qubit 0; index = 2·q1 + q0
        for (input, output) in [(0b10, 0b11), (0b00, 0b00), (0b11, 0b10), (0b01, 0b01)] {
            let mut s = StateVector::basis(2, input).unwrap();
            s.cnot(1, 0).unwrap();
            assert_eq!(s.amplitude(output), c(1.0, 0.0), "|{input:02b}⟩");
        }
        let mut s = StateVector::zero(2).unwrap();
        assert_eq!(s.cnot(1, 1), Err(QsimError::RepeatedQubit(1)));
    }

    #[test]
    fn toffoli_truth_table() {
        // |x y z⟩ with x on qubit 2, y on qubit 1, z on qubit 0
        for input in 0..8usize {
            let (x, y, z) = (input >> 2 & 1, input >> 1 & 1, input & 1);
            let expected = (x << 2) | (y << 1) | (z ^ (x & y));
            let mut s = StateVector::basis(3, input).unwrap();
            s.toffoli(2, 1, 0).unwrap();
            assert_eq!(s.amplitude(expected), c(1.0, 0.0));
        }
        let mut s = StateVector::basis(3, 0b110).unwrap();
        s.toffoli(2, 1, 0).unwrap();
        assert_eq!(s.amplitude(0b111), c(1.0, 0.0));
        s.toffoli(2, 1, 0).unwrap();
        assert_eq!(s.amplitude(0b110), c(1.0, 0.0));

        assert_eq!(s.toffoli(0, 0, 1), Err(QsimError::RepeatedQubit(0)));
        assert_eq!(s.toffoli(0, 1, 1), Err(QsimError::RepeatedQubit(1)));
    }

    #[test]
    fn phase_gate_cases() {
        let mut s = random_state(3, 1);
        let before = s.clone();
        s.phase(1, 0.0, true, None).unwrap();
        assert_state(&s, before.amplitudes());

        let mut one = StateVector::basis(1, 1).unwrap();
        one.phase(0, std::f64::consts::PI, true, None).unwrap();
        assert_state(&one, &[c(0.0, 0.0), c(-1.0, 0.0)]);

        let mut plus = StateVector::zero(1).unwrap();
        plus.hadamard(0).unwrap();
        plus.phase(0, std::f64::consts::FRAC_PI_2, true, None).unwrap();
        let h = FRAC_1_SQRT_2;
        assert_state(&plus, &[c(h, 0.0), c(0.0, h)]);

        // controlled: only the control=1 half picks up the phase
        let mut s = StateVector::zero(2).unwrap();
        s.hadamard(0).unwrap();
        s.hadamard(1).unwrap();
        s.phase(0, std::f64::consts::PI, false, Some(1)).unwrap();
        assert_state(&s, &[c(0.5, 0.0), c(0.5, 0.0), c(-0.5, 0.0), c(0.5, 0.0)]);

        assert_eq!(
            s.phase(0, 1.0, true, Some(0)),
            Err(QsimError::RepeatedQubit(0))
        );
    }

    #[test]
    fn oracle_parallelism() {
        // input on qubit 1, output on qubit 0: (|0,0⟩ + |1,0⟩)/√2
        let h = FRAC_1_SQRT_2;
        let mut s = StateVector::zero(2).unwrap();
        s.hadamard(1).unwrap();
        s.oracle(|x| x == 1, &[1], 0).unwrap();
        // |0, f(0)=0⟩ at index 0, |1, f(1)=1⟩ at index 0b11
        assert_state(&s, &[c(h, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(h, 0.0)]);

        let mut r = random_state(3, 2);
        let before = r.clone();
        r.oracle(|_| false, &[1, 2], 0).unwrap();
        assert_eq!(r, before);

        assert_eq!(
            r.oracle(|_| true, &[0, 1], 1),
            Err(QsimError::RepeatedQubit(1))
        );
    }

    #[test]
    fn and_oracle_matches_toffoli() {
        for seed in 0..5 {
            let mut via_oracle = random_state(3, 10 + seed);
            let mut via_toffoli = via_oracle.clone();
            via_oracle.oracle(|x| x == 0b11, &[2, 1], 0).unwrap();
            via_toffoli.toffoli(2, 1, 0).unwrap();
            assert_eq!(via_oracle, via_toffoli);
        }
        // also on every basis state (full 8×8 action)
        for i in 0..8 {
            let mut a = StateVector::basis(3, i).unwrap();
            let mut b = a.clone();
            a.oracle(|x| x == 0b11, &[0, 2], 1).unwrap();
            b.toffoli(0, 2, 1).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn gates_reject_bad_indices() {
        let mut s = StateVector::zero(2).unwrap();
        let oob = QsimError::QubitOutOfRange {
            index: 2,
            num_qubits: 2,
        };
        assert_eq!(s.hadamard(2), Err(oob.clone()));
        assert_eq!(s.x(2), Err(oob.clone()));
        assert_eq!(s.cnot(0, 2), Err(oob.clone()));
        assert_eq!(s.phase(2, 0.1, true, None), Err(oob.clone()));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(s.measure(2, &mut rng), Err(oob));
        assert_eq!(StateVector::zero(0), Err(QsimError::NoQubits));
        assert!(matches!(
            StateVector::zero(MAX_QUBITS + 1),
            Err(QsimError::TooManyQubits { .. })
        ));
        assert!(matches!(
            StateVector::from_amplitudes(vec![c(1.0, 0.0); 3]),
            Err(QsimError::BadLength(3))
        ));
        assert!(matches!(
            StateVector::from_amplitudes(vec![c(1.0, 0.0); 2]),
            Err(QsimError::NotNormalized(_))
        ));
    }

    #[test]
    fn gate_then_inverse_restores_state() {
        let original = random_state(4, 3);
        let mut s = original.clone();
        s.hadamard(2).unwrap();
        s.hadamard(2).unwrap();
        s.x(1).unwrap();
        s.x(1).unwrap();
        s.cnot(3, 0).unwrap();
        s.cnot(3, 0).unwrap();
        s.toffoli(0, 1, 3).unwrap();
        s.toffoli(0, 1, 3).unwrap();
        s.phase(2, 0.7, false, Some(1)).unwrap();
        s.phase(2, -0.7, false, Some(1)).unwrap();
        assert_state(&s, original.amplitudes());
        assert!((s.norm_sqr() - 1.0).abs() <= TOL);
    }

    #[test]
    fn measure_basis_state_is_certain() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let mut s = StateVector::zero(1).unwrap();
            assert!(!s.measure(0, &mut rng).unwrap());
            assert_state(&s, &[c(1.0, 0.0), c(0.0, 0.0)]);
        }
    }

    #[test]
    fn measure_collapses_and_renormalizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut s = random_state(3, 4);
        let outcome = s.measure(1, &mut rng).unwrap();
        assert!((s.norm_sqr() - 1.0).abs() <= TOL);
        assert!((s.probability(1, outcome).unwrap() - 1.0).abs() <= TOL);
    }

    #[test]
    fn hadamard_measurement_frequency_within_binomial_bound() {
        let shots = 100_000u32;
        let mut zeros = 0u32;
        for shot in 0..shots {
            let mut rng = ChaCha8Rng::seed_from_u64(shot as u64);
            let mut s = StateVector::zero(1).unwrap();
            s.hadamard(0).unwrap();
            if !s.measure(0, &mut rng).unwrap() {
                zeros += 1;
            }
        }
        let freq = zeros as f64 / shots as f64;
        let sigma = (0.25 / shots as f64).sqrt();
        assert!((freq - 0.5).abs() <= 4.0 * sigma, "freq {freq}");
    }

    #[test]
    fn two_qubit_outcomes_follow_born_rule() {
        // α_{x1x2} with |α|² = (0.1, 0.2, 0.3, 0.4)
        let probs = [0.1, 0.2, 0.3, 0.4];
        let amps: Vec<Complex64> = probs
            .iter()
            .enumerate()
            .map(|(i, p): (usize, &f64)| Complex64::from_polar(p.sqrt(), i as f64))
            .collect();
        let template = StateVector::from_amplitudes(amps).unwrap();
        let shots = 20_000;
        let mut counts = [0u32; 4];
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..shots {
            let mut s = template.clone();
            let b0 = s.measure(0, &mut rng).unwrap() as usize;
            let b1 = s.measure(1, &mut rng).unwrap() as usize;
            counts[b0 | (b1 << 1)] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .zip(probs)
            .map(|(&o, p)| {
                let e = p * shots as f64;
                (o as f64 - e).powi(2) / e
            })
            .sum();
        // χ²(3 dof) critical value at α = 0.001
        assert!(chi2 < 16.266, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn csv_dump_lists_every_amplitude() {
        let mut s = StateVector::zero(2).unwrap();
        s.hadamard(0).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[0], "index,re,im");
        assert!(lines[3].starts_with("2,0e0"));
    }
}
