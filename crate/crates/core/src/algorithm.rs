//! The exact quantum routine that returns a nonzero member of `H^⊥`.
//!
//! Steps, on an n-bit first register and an (n-1)-bit second register:
//!
//! 1. start in `|0>|0>`, apply `W_2^n` to the first register
//! 2. query the oracle: `|g>|0> -> |g>|f(g)>`
//! 3. measure second-register bits 1..=n-2 (everything but bit 0)
//! 4. flip the sign of components whose second-register bit 0 is 1
//! 5. query the oracle again, which resets the second register to `|0>`
//! 6. apply `W_2^n` to the first register
//! 7. measure the first register
//!
//! Step 3 can be skipped without losing exactness. The routine never looks at
//! the hidden shift; it sees `f` only through [`Oracle`].

use std::cell::Cell;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::bits::{dot, format_bits};
use crate::oracle::{Oracle, PromiseFunction};
use crate::state::{StateError, StateVector, DEFAULT_MAX_N};

/// Per-amplitude tolerance for all exactness comparisons.
pub const AMPLITUDE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AlgorithmError {
    #[error(transparent)]
    State(#[from] StateError),
    #[error("forced prefix {prefix:#x} does not fit in {width} bits")]
    PrefixOutOfRange { prefix: u32, width: usize },
    #[error(transparent)]
    Lemma(#[from] LemmaError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Skip the partial measurement of step 3.
    pub skip_partial_measurement: bool,
    /// Keep a copy of the state after every step.
    pub debug: bool,
    /// Replay a named step-3 branch instead of sampling it.
    pub forced_prefix: Option<u32>,
    pub max_n: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            skip_partial_measurement: false,
            debug: false,
            forced_prefix: None,
            max_n: DEFAULT_MAX_N,
        }
    }
}

impl RunOptions {
    pub fn skipping_step3() -> Self {
        Self {
            skip_partial_measurement: true,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct StepSnapshot {
    pub step: u8,
    pub state: StateVector,
}

#[derive(Debug, Clone)]
pub struct AlgorithmTrace {
    pub n: usize,
    pub skip_partial_measurement: bool,
    /// Observed (n-2)-bit prefix; `Some(0)` with zero width when n = 2.
    pub prefix_outcome: Option<u32>,
    pub prefix_probability: Option<f64>,
    /// Norm after each executed step, as `(step, norm)`.
    pub step_norms: Vec<(u8, f64)>,
    /// Mass on a nonzero second register just before step 7.
    pub residual_second_register: f64,
    pub oracle_calls: usize,
    pub snapshots: Vec<StepSnapshot>,
    pub z_star: u32,
}

impl AlgorithmTrace {
    /// The state right before the final measurement, when snapshots were kept.
    pub fn pre_measurement_state(&self) -> Option<&StateVector> {
        self.snapshots.iter().find(|s| s.step == 6).map(|s| &s.state)
    }

    pub fn snapshot(&self, step: u8) -> Option<&StateVector> {
        self.snapshots.iter().find(|s| s.step == step).map(|s| &s.state)
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct StepNorm {
            step: u8,
            norm: f64,
        }
        #[derive(Serialize)]
        struct Record {
            n: usize,
            skip_partial_measurement: bool,
            prefix_outcome: Option<String>,
            prefix_probability: Option<f64>,
            oracle_calls: usize,
            residual_second_register: f64,
            step_norms: Vec<StepNorm>,
            z_star: String,
        }
        let record = Record {
            n: self.n,
            skip_partial_measurement: self.skip_partial_measurement,
            prefix_outcome: self.prefix_outcome.map(|p| format_bits(p, self.n - 2)),
            prefix_probability: self.prefix_probability,
            oracle_calls: self.oracle_calls,
            residual_second_register: self.residual_second_register,
            step_norms: self
                .step_norms
                .iter()
                .map(|&(step, norm)| StepNorm { step, norm })
                .collect(),
            z_star: format_bits(self.z_star, self.n),
        };
        serde_json::to_string_pretty(&record).expect("trace serializes")
    }
}

// Counts evaluation passes so the trace can report oracle usage.
struct CountingOracle<'a, O: ?Sized> {
    inner: &'a O,
    calls: Cell<usize>,
}

impl<O: Oracle + ?Sized> CountingOracle<'_, O> {
    fn apply(&self, state: &mut StateVector) -> Result<(), StateError> {
        self.calls.set(self.calls.get() + 1);
        state.apply_oracle(self.inner)
    }
}

/// Second-register positions measured in step 3.
pub fn prefix_positions(n: usize) -> Vec<usize> {
    (1..n - 1).collect()
}

/// Runs the seven steps against `f`.
///
/// # Panics
///
/// If the final outcome is zero, which the algorithm rules out.
pub fn run<O, R>(f: &O, rng: &mut R, options: &RunOptions) -> Result<AlgorithmTrace, AlgorithmError>
where
    O: Oracle + ?Sized,
    R: Rng + ?Sized,
{
    let n = f.input_bits();
    let oracle = CountingOracle {
        inner: f,
        calls: Cell::new(0),
    };
    let mut norms = Vec::with_capacity(7);
    let mut snapshots = Vec::new();
    let mut record = |step: u8, state: &StateVector, snapshots: &mut Vec<StepSnapshot>| {
        norms.push((step, state.norm()));
        if options.debug {
            snapshots.push(StepSnapshot {
                step,
                state: state.clone(),
            });
        }
    };

    let mut state = StateVector::new_zero_state_with_cap(n, options.max_n)?;
    state.apply_walsh_hadamard_first();
    record(1, &state, &mut snapshots);

    oracle.apply(&mut state)?;
    record(2, &state, &mut snapshots);

    let mut prefix_outcome = None;
    let mut prefix_probability = None;
    if !options.skip_partial_measurement {
        let positions = prefix_positions(n);
        let width = positions.len();
        if let Some(prefix) = options.forced_prefix {
            if (prefix as u64) >= 1u64 << width {
                return Err(AlgorithmError::PrefixOutOfRange { prefix, width });
            }
        }
        if positions.is_empty() {
            // n = 2: nothing to measure, the single branch has probability 1
            prefix_outcome = Some(0);
            prefix_probability = Some(1.0);
        } else {
            let outcome = match options.forced_prefix {
                Some(prefix) => state.force_measure(&positions, prefix)?,
                None => state.measure_bits(&positions, rng)?,
            };
            prefix_outcome = Some(outcome.bits);
            prefix_probability = Some(outcome.probability);
            state = outcome.posterior;
        }
        record(3, &state, &mut snapshots);
    }

    state.apply_sign_shift_lsb();
    record(4, &state, &mut snapshots);

    oracle.apply(&mut state)?;
    record(5, &state, &mut snapshots);

    state.apply_walsh_hadamard_first();
    record(6, &state, &mut snapshots);
    let residual = state.second_register_leakage();

    let z_star = state.measure_first_register(rng);
    assert_ne!(z_star, 0, "final measurement returned the zero vector");

    Ok(AlgorithmTrace {
        n,
        skip_partial_measurement: options.skip_partial_measurement,
        prefix_outcome,
        prefix_probability,
        step_norms: norms,
        residual_second_register: residual,
        oracle_calls: oracle.calls.get(),
        snapshots,
        z_star,
    })
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LemmaError {
    #[error("hidden shift must be nonzero and fit in {n} bits, got {s:#x}")]
    InvalidShift { n: usize, s: u32 },
    #[error("g1 ^ g2 = {diff:#x} lies in the hidden subgroup")]
    DifferenceInSubgroup { diff: u32 },
    #[error("element {0:#x} does not fit in n bits")]
    ElementOutOfRange(u32),
    #[error(transparent)]
    State(#[from] StateError),
}

/// Predicted amplitudes of `W_2^n (|Hg1> - |Hg2>) / sqrt(2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeProfile {
    pub n: usize,
    pub s: u32,
    pub g1: u32,
    pub g2: u32,
    /// `{x : x·s = 0 and x·(g1 ^ g2) = 1}`, ascending.
    pub support: Vec<u32>,
    /// `2^(-(n-2)/2)`, the modulus on the support.
    pub magnitude: f64,
}

impl AmplitudeProfile {
    pub fn contains(&self, x: u32) -> bool {
        dot(x, self.s) == 0 && dot(x, self.g1 ^ self.g2) == 1
    }

    /// Predicted amplitude, including the sign `(-1)^(g1·x)`.
    pub fn amplitude(&self, x: u32) -> f64 {
        if !self.contains(x) {
            0.0
        } else if dot(self.g1, x) == 0 {
            self.magnitude
        } else {
            -self.magnitude
        }
    }
}

fn check_lemma_inputs(n: usize, s: u32, g1: u32, g2: u32) -> Result<(), LemmaError> {
    if !(2..=DEFAULT_MAX_N).contains(&n) {
        return Err(StateError::Size { n, max: DEFAULT_MAX_N }.into());
    }
    let size = 1u32 << n;
    if s == 0 || s >= size {
        return Err(LemmaError::InvalidShift { n, s });
    }
    for g in [g1, g2] {
        if g >= size {
            return Err(LemmaError::ElementOutOfRange(g));
        }
    }
    let diff = g1 ^ g2;
    if diff == 0 || diff == s {
        return Err(LemmaError::DifferenceInSubgroup { diff });
    }
    Ok(())
}

pub fn predicted_profile(n: usize, s: u32, g1: u32, g2: u32) -> Result<AmplitudeProfile, LemmaError> {
    check_lemma_inputs(n, s, g1, g2)?;
    let mut profile = AmplitudeProfile {
        n,
        s,
        g1,
        g2,
        support: Vec::new(),
        magnitude: (-((n - 2) as f64) / 2.0).exp2(),
    };
    profile.support = (0..1u32 << n).filter(|&x| profile.contains(x)).collect();
    Ok(profile)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LemmaReport {
    pub profile: AmplitudeProfile,
    /// Largest `| |amp| - magnitude |` on the support.
    pub support_error: f64,
    /// Largest `|amp|` off the support, including the nonzero second register.
    pub off_support_max: f64,
    /// Largest gap to the unfactored four-term sum.
    pub four_term_error: f64,
    /// Support points whose sign differs from `(-1)^(g1·x)`.
    pub sign_mismatches: usize,
}

impl LemmaReport {
    pub fn passed(&self) -> bool {
        self.support_error <= AMPLITUDE_TOLERANCE
            && self.off_support_max <= AMPLITUDE_TOLERANCE
            && self.four_term_error <= AMPLITUDE_TOLERANCE
            && self.sign_mismatches == 0
    }
}

/// Builds `(|Hg1> - |Hg2>) / sqrt(2)` with the second register at `|0>`.
pub fn coset_difference_state(n: usize, s: u32, g1: u32, g2: u32) -> Result<StateVector, LemmaError> {
    check_lemma_inputs(n, s, g1, g2)?;
    let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << (2 * n - 1)];
    let block = 1usize << (n - 1);
    for (g, sign) in [(g1, 0.5), (g1 ^ s, 0.5), (g2, -0.5), (g2 ^ s, -0.5)] {
        amps[g as usize * block] = Complex64::new(sign, 0.0);
    }
    Ok(StateVector::from_amplitudes(n, amps)?)
}

/// Computes `W_2^n (|Hg1> - |Hg2>) / sqrt(2)` with the simulator and compares
/// every amplitude with the predicted profile and the four-term sum.
pub fn verify_lemma(n: usize, s: u32, g1: u32, g2: u32) -> Result<LemmaReport, LemmaError> {
    let profile = predicted_profile(n, s, g1, g2)?;
    let mut state = coset_difference_state(n, s, g1, g2)?;
    state.apply_walsh_hadamard_first();

    let sign = |v: u32| if v == 0 { 1.0 } else { -1.0 };
    let norm = 1.0 / (2.0 * ((n as f64) / 2.0).exp2());
    let mut report = LemmaReport {
        profile,
        support_error: 0.0,
        off_support_max: state.second_register_leakage().sqrt(),
        four_term_error: 0.0,
        sign_mismatches: 0,
    };
    for x in 0..1u32 << n {
        let amp = state.amplitude(x, 0);
        let four_term = norm
            * (sign(dot(g1, x)) + sign(dot(g1 ^ s, x)) - sign(dot(g2, x)) - sign(dot(g2 ^ s, x)));
        report.four_term_error = report.four_term_error.max((amp - Complex64::new(four_term, 0.0)).norm());
        if report.profile.contains(x) {
            report.support_error = report
                .support_error
                .max((amp.norm() - report.profile.magnitude).abs());
            if (amp.re > 0.0) != (report.profile.amplitude(x) > 0.0) {
                report.sign_mismatches += 1;
            }
        } else {
            report.off_support_max = report.off_support_max.max(amp.norm());
        }
    }
    Ok(report)
}

/// Summary of [`verify_lemma`] over many `(s, g1, g2)` cases.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LemmaSweep {
    pub n: usize,
    pub exhaustive: bool,
    pub cases: u64,
    pub passed: u64,
    pub max_support_error: f64,
    pub max_off_support: f64,
    pub max_four_term_error: f64,
    pub sign_mismatches: u64,
}

impl LemmaSweep {
    fn new(n: usize, exhaustive: bool) -> Self {
        Self {
            n,
            exhaustive,
            cases: 0,
            passed: 0,
            max_support_error: 0.0,
            max_off_support: 0.0,
            max_four_term_error: 0.0,
            sign_mismatches: 0,
        }
    }

    fn absorb(&mut self, report: &LemmaReport) {
        self.cases += 1;
        self.passed += report.passed() as u64;
        self.max_support_error = self.max_support_error.max(report.support_error);
        self.max_off_support = self.max_off_support.max(report.off_support_max);
        self.max_four_term_error = self.max_four_term_error.max(report.four_term_error);
        self.sign_mismatches += report.sign_mismatches as u64;
    }

    pub fn all_passed(&self) -> bool {
        self.cases > 0 && self.passed == self.cases
    }
}

/// Every `(s, g1, g2)` with `s != 0` and `g1 ^ g2 ∉ {0, s}`.
pub fn lemma_cases(n: usize) -> impl Iterator<Item = (u32, u32, u32)> {
    let size = 1u32 << n;
    (1..size).flat_map(move |s| {
        (0..size).flat_map(move |g1| {
            (0..size)
                .filter(move |&g2| g1 ^ g2 != 0 && g1 ^ g2 != s)
                .map(move |g2| (s, g1, g2))
        })
    })
}

pub fn verify_lemma_exhaustive(n: usize) -> Result<LemmaSweep, LemmaError> {
    let mut sweep = LemmaSweep::new(n, true);
    for (s, g1, g2) in lemma_cases(n) {
        sweep.absorb(&verify_lemma(n, s, g1, g2)?);
    }
    Ok(sweep)
}

/// Checks `count` uniformly drawn valid tuples.
pub fn verify_lemma_random<R: Rng + ?Sized>(n: usize, count: u64, rng: &mut R) -> Result<LemmaSweep, LemmaError> {
    let mut sweep = LemmaSweep::new(n, false);
    let size = 1u32 << n.min(31);
    for _ in 0..count {
        let s = rng.gen_range(1..size);
        let g1 = rng.gen_range(0..size);
        let g2 = loop {
            let g2 = rng.gen_range(0..size);
            if g1 ^ g2 != 0 && g1 ^ g2 != s {
                break g2;
            }
        };
        sweep.absorb(&verify_lemma(n, s, g1, g2)?);
    }
    Ok(sweep)
}

/// States after steps 1 through 6 on the step-3 branch `prefix`, written
/// down from the truth table and the predicted profile without running any
/// transform.
pub fn ideal_branch_states(f: &PromiseFunction, prefix: u32) -> Result<Vec<(u8, StateVector)>, AlgorithmError> {
    let n = f.n();
    let width = n - 2;
    if (prefix as u64) >= 1u64 << width {
        return Err(AlgorithmError::PrefixOutOfRange { prefix, width });
    }
    let preimage = f.prefix_preimage(prefix);
    let value = |x: u32| f.evaluate(x);
    let g1 = *preimage.iter().find(|&&x| value(x) & 1 == 0).expect("branch has an even value");
    let g2 = *preimage.iter().find(|&&x| value(x) & 1 == 1).expect("branch has an odd value");
    let profile = predicted_profile(n, f.hidden_shift(), g1, g2)?;

    let zero = Complex64::new(0.0, 0.0);
    let build = |entries: &mut dyn Iterator<Item = (u32, u32, f64)>| -> Result<StateVector, AlgorithmError> {
        let mut amps = vec![zero; 1usize << (2 * n - 1)];
        for (x, y, a) in entries {
            amps[((x as usize) << (n - 1)) | y as usize] = Complex64::new(a, 0.0);
        }
        Ok(StateVector::from_amplitudes(n, amps)?)
    };
    let signed = |x: u32| if value(x) & 1 == 1 { -0.5 } else { 0.5 };
    let uniform = (-(n as f64) / 2.0).exp2();
    let inputs = 0..1u32 << n;
    Ok(vec![
        (1, build(&mut inputs.clone().map(|x| (x, 0, uniform)))?),
        (2, build(&mut inputs.map(|x| (x, value(x), uniform)))?),
        (3, build(&mut preimage.iter().map(|&x| (x, value(x), 0.5)))?),
        (4, build(&mut preimage.iter().map(|&x| (x, value(x), signed(x))))?),
        (5, build(&mut preimage.iter().map(|&x| (x, 0, signed(x))))?),
        (6, build(&mut profile.support.iter().map(|&x| (x, 0, profile.amplitude(x))))?),
    ])
}
