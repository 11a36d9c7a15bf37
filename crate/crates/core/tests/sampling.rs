//! Distributional checks on sampling and measurement.

use std::collections::HashMap;

use num_complex::Complex64;
use orthosub::algorithm::{prefix_positions, run, RunOptions};
use orthosub::experiment::trial_rng;
use orthosub::{PromiseFunction, StateVector, TransversalSpec};
use statrs::distribution::{ChiSquared, ContinuousCDF};

const SAMPLES: usize = 100_000;

// Upper-tail p-value of Pearson's statistic against the given probabilities.
fn chi_squared_p(observed: &[u64], expected: &[f64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let stat: f64 = observed
        .iter()
        .zip(expected)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum();
    let dist = ChiSquared::new((observed.len() - 1) as f64).unwrap();
    1.0 - dist.cdf(stat)
}

#[test]
fn two_bit_sampler_is_uniform() {
    let mut rng = trial_rng(1, 0);
    let mut counts: HashMap<(u32, Vec<u32>), u64> = HashMap::new();
    for _ in 0..SAMPLES {
        let f = PromiseFunction::sample_uniform(2, &mut rng).unwrap();
        *counts.entry((f.hidden_shift(), f.table().to_vec())).or_default() += 1;
    }
    // 3 shifts times 2 value assignments
    assert_eq!(counts.len(), 6);
    let observed: Vec<u64> = counts.values().copied().collect();
    let p = chi_squared_p(&observed, &[1.0 / 6.0; 6]);
    assert!(p > 1e-4, "p = {p}");
}

#[test]
fn three_bit_sampler_covers_every_function() {
    let mut rng = trial_rng(2, 0);
    let mut counts: HashMap<(u32, Vec<u32>), u64> = HashMap::new();
    for _ in 0..SAMPLES {
        let f = PromiseFunction::sample_uniform(3, &mut rng).unwrap();
        assert!(f.verify_promise().holds());
        *counts.entry((f.hidden_shift(), f.table().to_vec())).or_default() += 1;
    }
    assert_eq!(counts.len(), 168);
    let observed: Vec<u64> = counts.values().copied().collect();
    let p = chi_squared_p(&observed, &[1.0 / 168.0; 168]);
    assert!(p > 1e-4, "p = {p}");
}

#[test]
fn first_register_measurement_frequencies() {
    let n = 3;
    let weights = [0.1, 0.0, 0.2, 0.05, 0.3, 0.15, 0.0, 0.2];
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << (2 * n - 1)];
    for (x, &w) in weights.iter().enumerate() {
        // spread each weight over two second-register values with phases
        amps[(x << (n - 1)) | 1] = Complex64::from_polar((w / 2.0f64).sqrt(), x as f64);
        amps[(x << (n - 1)) | 3] = Complex64::new(0.0, -(w / 2.0f64).sqrt());
    }
    let state = StateVector::from_amplitudes(n, amps).unwrap();
    let probabilities = state.first_register_probabilities();
    for (p, w) in probabilities.iter().zip(weights) {
        assert!((p - w).abs() < 1e-12);
    }
    let mut rng = trial_rng(3, 0);
    let mut observed = [0u64; 8];
    for _ in 0..SAMPLES {
        observed[state.measure_first_register(&mut rng) as usize] += 1;
    }
    assert_eq!(observed[1], 0);
    assert_eq!(observed[6], 0);
    for (x, &w) in weights.iter().enumerate() {
        let mean = w * SAMPLES as f64;
        let sigma = (SAMPLES as f64 * w * (1.0 - w)).sqrt();
        assert!((observed[x] as f64 - mean).abs() <= 3.0 * sigma + 1e-9, "x = {x}");
    }
}

#[test]
fn step3_branches_are_equally_likely() {
    let f = PromiseFunction::from_transversal(&TransversalSpec::example_n4()).unwrap();
    let mut state = StateVector::new_zero_state(4).unwrap();
    state.apply_walsh_hadamard_first();
    state.apply_oracle(&f).unwrap();
    let probabilities = state.branch_probabilities(&prefix_positions(4)).unwrap();
    assert_eq!(probabilities.len(), 4);
    for p in probabilities {
        assert!((p - 0.25).abs() < 1e-12);
    }

    let mut rng = trial_rng(4, 0);
    let mut observed = [0u64; 4];
    for _ in 0..20_000 {
        let trace = run(&f, &mut rng, &RunOptions::default()).unwrap();
        observed[trace.prefix_outcome.unwrap() as usize] += 1;
        assert!((trace.prefix_probability.unwrap() - 0.25).abs() < 1e-12);
    }
    let p = chi_squared_p(&observed, &[0.25; 4]);
    assert!(p > 1e-4, "p = {p}");
}

#[test]
fn answers_are_uniform_within_a_branch() {
    let f = PromiseFunction::from_transversal(&TransversalSpec::example_n4()).unwrap();
    let mut rng = trial_rng(5, 0);
    let options = RunOptions {
        forced_prefix: Some(0b01),
        ..RunOptions::default()
    };
    let support = [0b0010u32, 0b0101, 0b1000, 0b1111];
    let mut observed = [0u64; 4];
    for _ in 0..20_000 {
        let z = run(&f, &mut rng, &options).unwrap().z_star;
        let slot = support.iter().position(|&s| s == z).expect("z in the branch support");
        observed[slot] += 1;
    }
    let p = chi_squared_p(&observed, &[0.25; 4]);
    assert!(p > 1e-4, "p = {p}");
}
