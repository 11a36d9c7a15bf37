//! Dense state vector for the two-register machine.
//!
//! The first register holds n bits and the second n-1 bits. Basis state
//! `|x>|y>` lives at `index = x * 2^(n-1) + y`, so the first register occupies
//! the high bits of the index. Within each register bit 0 is the least
//! significant position.
//!
//! Only the transforms the algorithm needs are provided: Walsh-Hadamard on
//! the first register, the XOR oracle `|x>|y> -> |x>|y ^ f(x)>`, a sign flip on
//! the least significant bit of the second register, and measurements.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::bits::format_bits;
use crate::oracle::Oracle;

/// Default upper bound on n; the vector then has 2^31 entries.
pub const DEFAULT_MAX_N: usize = 16;

/// Tolerance used for normalization checks.
pub const NORM_TOLERANCE: f64 = 1e-12;

/// Amplitudes smaller than this are left out of [`StateVector::dump`].
pub const DUMP_THRESHOLD: f64 = 1e-14;

// Branch masses at or below this are treated as empty.
const ZERO_MASS: f64 = 1e-24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("n = {n} is outside the supported range 2..={max}")]
    Size { n: usize, max: usize },
    #[error("expected {expected} amplitudes, got {got}")]
    Length { got: usize, expected: usize },
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("basis state ({x:#x}, {y:#x}) is out of range")]
    BasisOutOfRange { x: u32, y: u32 },
    #[error("oracle takes {oracle} input bits but the state has n = {state}")]
    DimensionMismatch { state: usize, oracle: usize },
    #[error("no positions to measure")]
    EmptyPositions,
    #[error("position {position} is outside the {width}-bit second register")]
    PositionOutOfRange { position: usize, width: usize },
    #[error("outcome {outcome:#x} does not fit in {width} measured bits")]
    OutcomeOutOfRange { outcome: u32, width: usize },
    #[error("outcome {0:#x} has zero probability")]
    ZeroBranch(u32),
    #[error("state carries no probability mass")]
    ZeroMass,
}

/// The result of a partial measurement.
#[derive(Debug, Clone)]
pub struct MeasurementOutcome {
    /// Observed bits; bit i belongs to the i-th smallest measured position.
    pub bits: u32,
    /// Measured second-register positions, ascending.
    pub positions: Vec<usize>,
    pub posterior: StateVector,
    /// Born probability of the observed branch.
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0>|0>` with the default cap on n.
    pub fn new_zero_state(n: usize) -> Result<Self, StateError> {
        Self::new_zero_state_with_cap(n, DEFAULT_MAX_N)
    }

    pub fn new_zero_state_with_cap(n: usize, max_n: usize) -> Result<Self, StateError> {
        Self::basis_state_with_cap(n, 0, 0, max_n)
    }

    pub fn basis_state(n: usize, x: u32, y: u32) -> Result<Self, StateError> {
        Self::basis_state_with_cap(n, x, y, DEFAULT_MAX_N)
    }

    fn basis_state_with_cap(n: usize, x: u32, y: u32, max_n: usize) -> Result<Self, StateError> {
        check_size(n, max_n)?;
        if (x as u64) >= 1u64 << n || (y as u64) >= 1u64 << (n - 1) {
            return Err(StateError::BasisOutOfRange { x, y });
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1usize << (2 * n - 1)];
        amplitudes[index_of(n, x, y)] = Complex64::new(1.0, 0.0);
        Ok(Self { n, amplitudes })
    }

    /// Wraps caller-supplied amplitudes; they must be normalized.
    pub fn from_amplitudes(n: usize, amplitudes: Vec<Complex64>) -> Result<Self, StateError> {
        check_size(n, DEFAULT_MAX_N)?;
        let expected = 1usize << (2 * n - 1);
        if amplitudes.len() != expected {
            return Err(StateError::Length {
                got: amplitudes.len(),
                expected,
            });
        }
        let state = Self { n, amplitudes };
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(StateError::NotNormalized(norm));
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Width of the second register.
    pub fn second_bits(&self) -> usize {
        self.n - 1
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn index(&self, x: u32, y: u32) -> usize {
        index_of(self.n, x, y)
    }

    pub fn amplitude(&self, x: u32, y: u32) -> Complex64 {
        self.amplitudes[self.index(x, y)]
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Euclidean norm of the amplitude vector.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies `W_2^n` to the first register, leaving the second untouched.
    pub fn apply_walsh_hadamard_first(&mut self) {
        let block = 1usize << (self.n - 1);
        let len = self.amplitudes.len();
        let mut stride = block;
        while stride < len {
            for chunk in self.amplitudes.chunks_exact_mut(2 * stride) {
                let (lo, hi) = chunk.split_at_mut(stride);
                for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (u, v) = (*a, *b);
                    *a = u + v;
                    *b = u - v;
                }
            }
            stride <<= 1;
        }
        let scale = (-(self.n as f64) / 2.0).exp2();
        for a in &mut self.amplitudes {
            *a *= scale;
        }
    }

    /// `|x>|y> -> |x>|y ^ f(x)>`. One call is one oracle query.
    pub fn apply_oracle<O: Oracle + ?Sized>(&mut self, f: &O) -> Result<(), StateError> {
        if f.input_bits() != self.n {
            return Err(StateError::DimensionMismatch {
                state: self.n,
                oracle: f.input_bits(),
            });
        }
        let block = 1usize << (self.n - 1);
        for (x, column) in self.amplitudes.chunks_exact_mut(block).enumerate() {
            let fx = f.evaluate(x as u32) as usize;
            if fx == 0 {
                continue;
            }
            for y in 0..block {
                let target = y ^ fx;
                if y < target {
                    column.swap(y, target);
                }
            }
        }
        Ok(())
    }

    /// Negates every amplitude whose second-register bit 0 is set.
    pub fn apply_sign_shift_lsb(&mut self) {
        for a in self.amplitudes.iter_mut().skip(1).step_by(2) {
            *a = -*a;
        }
    }

    /// Born probabilities of every outcome on the given second-register
    /// positions, indexed by packed outcome.
    pub fn branch_probabilities(&self, positions: &[usize]) -> Result<Vec<f64>, StateError> {
        let positions = self.normalize_positions(positions)?;
        Ok(self.branch_masses(&positions))
    }

    /// Measures the given second-register positions with the Born rule.
    pub fn measure_bits<R: Rng + ?Sized>(
        self,
        positions: &[usize],
        rng: &mut R,
    ) -> Result<MeasurementOutcome, StateError> {
        let positions = self.normalize_positions(positions)?;
        let masses = self.branch_masses(&positions);
        let total: f64 = masses.iter().sum();
        if total <= ZERO_MASS {
            return Err(StateError::ZeroMass);
        }
        let outcome = sample_index(&masses, total, rng) as u32;
        let mass = masses[outcome as usize];
        Ok(self.project(positions, outcome, mass, total))
    }

    /// Projects onto a named branch, as if `outcome` had been observed.
    pub fn force_measure(
        self,
        positions: &[usize],
        outcome: u32,
    ) -> Result<MeasurementOutcome, StateError> {
        let positions = self.normalize_positions(positions)?;
        if (outcome as u64) >= 1u64 << positions.len() {
            return Err(StateError::OutcomeOutOfRange {
                outcome,
                width: positions.len(),
            });
        }
        let masses = self.branch_masses(&positions);
        let total: f64 = masses.iter().sum();
        if total <= ZERO_MASS {
            return Err(StateError::ZeroMass);
        }
        let mass = masses[outcome as usize];
        if mass <= ZERO_MASS {
            return Err(StateError::ZeroBranch(outcome));
        }
        Ok(self.project(positions, outcome, mass, total))
    }

    /// Marginal distribution of the first register.
    pub fn first_register_probabilities(&self) -> Vec<f64> {
        let block = 1usize << (self.n - 1);
        self.amplitudes
            .chunks_exact(block)
            .map(|column| column.iter().map(|a| a.norm_sqr()).sum())
            .collect()
    }

    /// Samples the first register with probability `sum_y |amp(x, y)|^2`.
    ///
    /// The state is not collapsed; callers discard it after the final step.
    pub fn measure_first_register<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let probabilities = self.first_register_probabilities();
        let total: f64 = probabilities.iter().sum();
        sample_index(&probabilities, total, rng) as u32
    }

    /// Probability mass on basis states with a nonzero second register.
    pub fn second_register_leakage(&self) -> f64 {
        let block = 1usize << (self.n - 1);
        self.amplitudes
            .chunks_exact(block)
            .map(|column| column[1..].iter().map(|a| a.norm_sqr()).sum::<f64>())
            .sum()
    }

    /// One line per amplitude above [`DUMP_THRESHOLD`]: `x_bits y_bits re im`.
    pub fn dump(&self) -> String {
        let block = 1usize << (self.n - 1);
        let mut out = String::new();
        for (index, a) in self.amplitudes.iter().enumerate() {
            if a.norm() < DUMP_THRESHOLD {
                continue;
            }
            let x = (index / block) as u32;
            let y = (index % block) as u32;
            // adding 0.0 turns -0.0 into 0.0
            let _ = writeln!(
                out,
                "{} {} {:.12} {:.12}",
                format_bits(x, self.n),
                format_bits(y, self.n - 1),
                a.re + 0.0,
                a.im + 0.0
            );
        }
        out
    }

    /// Largest per-amplitude gap to `other`.
    pub fn max_difference(&self, other: &StateVector) -> f64 {
        self.scaled_gap(other, 1.0)
    }

    /// Like [`max_difference`](Self::max_difference), minimized over a global
    /// factor of +1 or -1.
    pub fn max_difference_up_to_sign(&self, other: &StateVector) -> f64 {
        self.scaled_gap(other, 1.0).min(self.scaled_gap(other, -1.0))
    }

    fn scaled_gap(&self, other: &StateVector, sign: f64) -> f64 {
        if self.n != other.n {
            return f64::INFINITY;
        }
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b * sign).norm())
            .fold(0.0, f64::max)
    }

    fn normalize_positions(&self, positions: &[usize]) -> Result<Vec<usize>, StateError> {
        if positions.is_empty() {
            return Err(StateError::EmptyPositions);
        }
        let width = self.n - 1;
        let mut sorted = positions.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(&position) = sorted.iter().find(|&&p| p >= width) {
            return Err(StateError::PositionOutOfRange { position, width });
        }
        Ok(sorted)
    }

    // outcome_of[y] packs the measured bits of second-register value y.
    fn outcome_table(&self, positions: &[usize]) -> Vec<u32> {
        (0..1u32 << (self.n - 1))
            .map(|y| {
                positions
                    .iter()
                    .enumerate()
                    .fold(0u32, |acc, (i, &p)| acc | (((y >> p) & 1) << i))
            })
            .collect()
    }

    fn branch_masses(&self, positions: &[usize]) -> Vec<f64> {
        let outcome_of = self.outcome_table(positions);
        let mut masses = vec![0.0; 1 << positions.len()];
        for column in self.amplitudes.chunks_exact(outcome_of.len()) {
            for (a, &o) in column.iter().zip(&outcome_of) {
                masses[o as usize] += a.norm_sqr();
            }
        }
        masses
    }

    fn project(mut self, positions: Vec<usize>, outcome: u32, mass: f64, total: f64) -> MeasurementOutcome {
        let outcome_of = self.outcome_table(&positions);
        let branch_scale = 1.0 / mass.sqrt();
        let block = outcome_of.len();
        for column in self.amplitudes.chunks_exact_mut(block) {
            for (a, &o) in column.iter_mut().zip(&outcome_of) {
                if o == outcome {
                    *a *= branch_scale;
                } else {
                    *a = Complex64::new(0.0, 0.0);
                }
            }
        }
        MeasurementOutcome {
            bits: outcome,
            positions,
            posterior: self,
            probability: mass / total,
        }
    }
}

fn check_size(n: usize, max_n: usize) -> Result<(), StateError> {
    if n < 2 || n > max_n || 2 * n > usize::BITS as usize {
        return Err(StateError::Size { n, max: max_n });
    }
    Ok(())
}

#[inline]
fn index_of(n: usize, x: u32, y: u32) -> usize {
    ((x as usize) << (n - 1)) | y as usize
}

fn sample_index<R: Rng + ?Sized>(weights: &[f64], total: f64, rng: &mut R) -> usize {
    let target = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate() {
        acc += w;
        if target < acc && w > 0.0 {
            return i;
        }
    }
    // roundoff left target past the last bucket
    weights
        .iter()
        .rposition(|&w| w > 0.0)
        .expect("distribution has positive mass")
}
