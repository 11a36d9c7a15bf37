//! Seeded, parallel trial drivers for both query models.
//!
//! Trials are grouped into fixed-size chunks. Chunk `c` draws from a ChaCha
//! stream selected by `(seed, c)`, so results do not depend on how many
//! worker threads run the chunks. Tallies are merged in chunk order.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::adversary::{prob_event_e, query_budget, run_strategy, AdversaryError, QueryStrategy};
use crate::algorithm::{self, AlgorithmError, RunOptions};
use crate::bits::{dot, format_bits};
use crate::oracle::{OracleError, PromiseFunction};
use crate::stats::{wilson_99, Interval};

/// Trials per seeded chunk.
pub const CHUNK_TRIALS: u64 = 1024;

pub fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("at least one trial is required")]
    ZeroTrials,
    #[error("k = {k} exceeds the query budget floor(2^(n/3)) = {budget} for n = {n}")]
    BudgetExceeded { n: usize, k: usize, budget: u64 },
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error(transparent)]
    Adversary(#[from] AdversaryError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn chunks(trials: u64) -> Vec<(u64, u64)> {
    (0..trials.div_ceil(CHUNK_TRIALS))
        .map(|c| (c, CHUNK_TRIALS.min(trials - c * CHUNK_TRIALS)))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantumConfig {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub skip_partial_measurement: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExactnessFailure {
    pub trial: u64,
    pub s: String,
    pub z_star: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantumReport {
    pub n: usize,
    pub trials: u64,
    pub seed: u64,
    pub skip_step3: bool,
    pub successes: u64,
    /// Oracle applications per run; the same for every run.
    pub oracle_calls_per_run: usize,
    /// Step-3 outcomes by prefix, empty when step 3 is skipped.
    pub prefix_counts: BTreeMap<String, u64>,
    pub max_norm_error: f64,
    pub max_residual_second_register: f64,
    pub failures: Vec<ExactnessFailure>,
}

impl QuantumReport {
    pub fn exact(&self) -> bool {
        self.successes == self.trials && self.failures.is_empty()
    }

    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        #[derive(Serialize)]
        struct Row {
            n: usize,
            trials: u64,
            successes: u64,
            failures: usize,
            skip_step3: bool,
            oracle_calls_per_run: usize,
            max_norm_error: f64,
            max_residual_second_register: f64,
        }
        write_csv(&Row {
            n: self.n,
            trials: self.trials,
            successes: self.successes,
            failures: self.failures.len(),
            skip_step3: self.skip_step3,
            oracle_calls_per_run: self.oracle_calls_per_run,
            max_norm_error: self.max_norm_error,
            max_residual_second_register: self.max_residual_second_register,
        })
    }
}

/// Runs the exact algorithm on `trials` freshly sampled promise functions and
/// checks every outcome against the hidden shift.
pub fn quantum_trials(config: &QuantumConfig) -> Result<QuantumReport, ExperimentError> {
    if config.trials == 0 {
        return Err(ExperimentError::ZeroTrials);
    }
    let n = config.n;
    let options = RunOptions {
        skip_partial_measurement: config.skip_partial_measurement,
        ..RunOptions::default()
    };
    let partials = chunks(config.trials)
        .into_par_iter()
        .map(|(chunk, count)| -> Result<QuantumReport, ExperimentError> {
            let mut rng = trial_rng(config.seed, chunk);
            let mut part = QuantumReport {
                n,
                trials: count,
                seed: config.seed,
                skip_step3: config.skip_partial_measurement,
                successes: 0,
                oracle_calls_per_run: 0,
                prefix_counts: BTreeMap::new(),
                max_norm_error: 0.0,
                max_residual_second_register: 0.0,
                failures: Vec::new(),
            };
            for i in 0..count {
                let f = PromiseFunction::sample_uniform(n, &mut rng)?;
                let trace = algorithm::run(&f, &mut rng, &options)?;
                let s = f.hidden_shift();
                if trace.z_star != 0 && dot(trace.z_star, s) == 0 {
                    part.successes += 1;
                } else {
                    part.failures.push(ExactnessFailure {
                        trial: chunk * CHUNK_TRIALS + i,
                        s: format_bits(s, n),
                        z_star: format_bits(trace.z_star, n),
                    });
                }
                part.oracle_calls_per_run = part.oracle_calls_per_run.max(trace.oracle_calls);
                if let Some(prefix) = trace.prefix_outcome {
                    *part.prefix_counts.entry(format_bits(prefix, n - 2)).or_default() += 1;
                }
                for &(_, norm) in &trace.step_norms {
                    part.max_norm_error = part.max_norm_error.max((norm - 1.0).abs());
                }
                part.max_residual_second_register =
                    part.max_residual_second_register.max(trace.residual_second_register);
            }
            Ok(part)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut report = QuantumReport {
        n,
        trials: 0,
        seed: config.seed,
        skip_step3: config.skip_partial_measurement,
        successes: 0,
        oracle_calls_per_run: 0,
        prefix_counts: BTreeMap::new(),
        max_norm_error: 0.0,
        max_residual_second_register: 0.0,
        failures: Vec::new(),
    };
    for part in partials {
        report.trials += part.trials;
        report.successes += part.successes;
        report.oracle_calls_per_run = report.oracle_calls_per_run.max(part.oracle_calls_per_run);
        for (prefix, count) in part.prefix_counts {
            *report.prefix_counts.entry(prefix).or_default() += count;
        }
        report.max_norm_error = report.max_norm_error.max(part.max_norm_error);
        report.max_residual_second_register = report
            .max_residual_second_register
            .max(part.max_residual_second_register);
        report.failures.extend(part.failures);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MonteCarloConfig {
    pub n: usize,
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    /// Reject budgets above `floor(2^(n/3))`, where the bounds apply.
    pub check_bounds: bool,
}

/// Aggregated classical trial statistics with the theoretical ceilings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub n: usize,
    pub k: usize,
    pub trials: u64,
    pub seed: u64,
    pub successes: u64,
    pub success_rate: f64,
    pub success_ci: Interval,
    #[serde(rename = "event_E_count")]
    pub event_e_count: u64,
    #[serde(rename = "event_E_rate")]
    pub event_e_rate: f64,
    #[serde(rename = "event_E_ci")]
    pub event_e_ci: Interval,
    /// `m / (2^n - 1)` for a non-adaptive strategy's full query set.
    #[serde(rename = "predicted_event_E")]
    pub predicted_event_e: Option<f64>,
    pub no_collision_trials: u64,
    pub no_collision_successes: u64,
    pub conditional_success_rate: f64,
    pub conditional_ci: Interval,
    /// `1/2 + 2^(1 - n/3)`, the unconditional ceiling.
    #[serde(rename = "paper_bound")]
    pub unconditional_bound: f64,
    /// `1/2 + 2^(-n/3)`, the ceiling without a collision.
    pub conditional_bound: f64,
    /// `2^(-n/3)`, the ceiling on the collision probability.
    #[serde(rename = "event_E_bound")]
    pub event_bound: f64,
    /// Budget `k` is within `floor(2^(n/3))`, so the ceilings apply.
    pub bounds_apply: bool,
    /// Collisions whose XOR differed from the true shift; always zero.
    pub collision_mismatches: u64,
    pub queries_made: u64,
}

impl ExperimentReport {
    /// Some 99% interval lies entirely above its ceiling.
    pub fn bounds_contradicted(&self) -> bool {
        self.bounds_apply
            && (self.success_ci.low > self.unconditional_bound
                || (self.no_collision_trials > 0 && self.conditional_ci.low > self.conditional_bound))
    }

    /// Both 99% intervals lie entirely below their ceilings.
    pub fn within_bounds(&self) -> bool {
        self.success_ci.high < self.unconditional_bound && self.conditional_ci.high < self.conditional_bound
    }

    /// One header line and one data row.
    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        #[derive(Serialize)]
        struct Row {
            n: usize,
            k: usize,
            trials: u64,
            success_rate: f64,
            ci_low: f64,
            ci_high: f64,
            #[serde(rename = "event_E_rate")]
            event_e_rate: f64,
            paper_bound: f64,
            conditional_bound: f64,
        }
        write_csv(&Row {
            n: self.n,
            k: self.k,
            trials: self.trials,
            success_rate: self.success_rate,
            ci_low: self.success_ci.low,
            ci_high: self.success_ci.high,
            event_e_rate: self.event_e_rate,
            paper_bound: self.unconditional_bound,
            conditional_bound: self.conditional_bound,
        })
    }
}

fn write_csv<T: Serialize>(row: &T) -> Result<String, ExperimentError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    writer.serialize(row)?;
    let bytes = writer.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[derive(Default)]
struct Tally {
    successes: u64,
    collisions: u64,
    no_collision_successes: u64,
    mismatches: u64,
    queries: u64,
}

/// Plays copies of `strategy` against `trials` uniformly sampled oracles.
pub fn monte_carlo<S>(strategy: &S, config: &MonteCarloConfig) -> Result<ExperimentReport, ExperimentError>
where
    S: QueryStrategy + Clone + Send + Sync,
{
    if config.trials == 0 {
        return Err(ExperimentError::ZeroTrials);
    }
    let (n, k) = (config.n, config.k);
    let budget = query_budget(n);
    let bounds_apply = k as u64 <= budget;
    if config.check_bounds && !bounds_apply {
        return Err(ExperimentError::BudgetExceeded { n, k, budget });
    }

    let tallies = chunks(config.trials)
        .into_par_iter()
        .map(|(chunk, count)| -> Result<Tally, ExperimentError> {
            let mut rng = trial_rng(config.seed, chunk);
            let mut tally = Tally::default();
            for _ in 0..count {
                let f = PromiseFunction::sample_uniform(n, &mut rng)?;
                let (transcript, outcome) = run_strategy(&mut strategy.clone(), &f, k)?;
                tally.queries += transcript.k() as u64;
                tally.successes += outcome.success as u64;
                match transcript.revealed_shift() {
                    Some(shift) => {
                        tally.collisions += 1;
                        tally.mismatches += (shift != f.hidden_shift()) as u64;
                    }
                    None => tally.no_collision_successes += outcome.success as u64,
                }
            }
            Ok(tally)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut total = Tally::default();
    for t in tallies {
        total.successes += t.successes;
        total.collisions += t.collisions;
        total.no_collision_successes += t.no_collision_successes;
        total.mismatches += t.mismatches;
        total.queries += t.queries;
    }

    let trials = config.trials;
    let no_collision_trials = trials - total.collisions;
    let predicted_event_e = match strategy.planned_queries() {
        Some(queries) => {
            let planned = &queries[..queries.len().min(k)];
            let p = prob_event_e(n, planned)?;
            Some(p.m as f64 / ((1u64 << n) - 1) as f64)
        }
        None => None,
    };
    let third = 2f64.powf(-(n as f64) / 3.0);
    Ok(ExperimentReport {
        n,
        k,
        trials,
        seed: config.seed,
        successes: total.successes,
        success_rate: total.successes as f64 / trials as f64,
        success_ci: wilson_99(total.successes, trials),
        event_e_count: total.collisions,
        event_e_rate: total.collisions as f64 / trials as f64,
        event_e_ci: wilson_99(total.collisions, trials),
        predicted_event_e,
        no_collision_trials,
        no_collision_successes: total.no_collision_successes,
        conditional_success_rate: if no_collision_trials == 0 {
            0.0
        } else {
            total.no_collision_successes as f64 / no_collision_trials as f64
        },
        conditional_ci: wilson_99(total.no_collision_successes, no_collision_trials),
        unconditional_bound: 0.5 + 2.0 * third,
        conditional_bound: 0.5 + third,
        event_bound: third,
        bounds_apply,
        collision_mismatches: total.mismatches,
        queries_made: total.queries,
    })
}
