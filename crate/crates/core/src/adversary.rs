//! Classical query model: transcripts, strategies, and exact counting.
//!
//! A classical algorithm queries distinct points `x_1..x_k` and sees
//! `y_i = f(x_i)`. With `W = {x_i ^ x_j : i < j}` and `m = |W|`, a repeated
//! answer (event E) reveals `s = x_i ^ x_j`. Without one, every nonzero
//! `ŝ ∉ W` is still possible and all of them are equally likely, so the best
//! answer is the `z` orthogonal to the most surviving candidates.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::bits::dot;
use crate::enumerate::{for_each_promise_function, EnumerationTooLarge};
use crate::oracle::{Oracle, PromiseFunction, MAX_ORACLE_BITS};

/// Largest n accepted by [`count_compatible`]; `(2^15)!` is still quick.
pub const MAX_COUNT_BITS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdversaryError {
    #[error("n = {0} is outside the supported range 2..={MAX_ORACLE_BITS}")]
    Size(usize),
    #[error("query {0:#x} was already asked")]
    DuplicateQuery(u32),
    #[error("query {0:#x} does not fit in n bits")]
    QueryOutOfRange(u32),
    #[error("answer {0:#x} does not fit in n - 1 bits")]
    AnswerOutOfRange(u32),
    #[error("the transcript contains a collision; the shift is already known")]
    Collision,
    #[error("exact counting beyond n = {MAX_COUNT_BITS} is not supported (n = {0})")]
    CountTooLarge(usize),
    #[error(transparent)]
    Enumeration(#[from] EnumerationTooLarge),
}

/// What a classical algorithm has learned: queries, answers and the XOR
/// differences between queries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryTranscript {
    n: usize,
    queries: Vec<u32>,
    answers: Vec<u32>,
    differences: BTreeSet<u32>,
    first_with_answer: HashMap<u32, usize>,
    collision: Option<(usize, usize)>,
}

impl QueryTranscript {
    pub fn new(n: usize) -> Result<Self, AdversaryError> {
        if !(2..=MAX_ORACLE_BITS).contains(&n) {
            return Err(AdversaryError::Size(n));
        }
        Ok(Self {
            n,
            queries: Vec::new(),
            answers: Vec::new(),
            differences: BTreeSet::new(),
            first_with_answer: HashMap::new(),
            collision: None,
        })
    }

    /// Builds a transcript from `(x_i, y_i)` pairs without an oracle.
    pub fn from_pairs(n: usize, pairs: &[(u32, u32)]) -> Result<Self, AdversaryError> {
        let mut t = Self::new(n)?;
        for &(x, y) in pairs {
            t.record(x, y)?;
        }
        Ok(t)
    }

    /// Asks `f` at every point in order.
    pub fn from_queries<O: Oracle + ?Sized>(f: &O, queries: &[u32]) -> Result<Self, AdversaryError> {
        let mut t = Self::new(f.input_bits())?;
        for &x in queries {
            t.query(f, x)?;
        }
        Ok(t)
    }

    pub fn query<O: Oracle + ?Sized>(&mut self, f: &O, x: u32) -> Result<u32, AdversaryError> {
        self.check_query(x)?;
        let y = f.evaluate(x);
        self.record(x, y)?;
        Ok(y)
    }

    pub fn record(&mut self, x: u32, y: u32) -> Result<(), AdversaryError> {
        self.check_query(x)?;
        if y >= 1u32 << (self.n - 1) {
            return Err(AdversaryError::AnswerOutOfRange(y));
        }
        let index = self.queries.len();
        for &q in &self.queries {
            self.differences.insert(q ^ x);
        }
        match self.first_with_answer.get(&y) {
            Some(&earlier) => {
                if self.collision.is_none() {
                    self.collision = Some((earlier, index));
                }
            }
            None => {
                self.first_with_answer.insert(y, index);
            }
        }
        self.queries.push(x);
        self.answers.push(y);
        Ok(())
    }

    fn check_query(&self, x: u32) -> Result<(), AdversaryError> {
        if x >= 1u32 << self.n {
            return Err(AdversaryError::QueryOutOfRange(x));
        }
        if self.queries.contains(&x) {
            return Err(AdversaryError::DuplicateQuery(x));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of queries made.
    pub fn k(&self) -> usize {
        self.queries.len()
    }

    pub fn queries(&self) -> &[u32] {
        &self.queries
    }

    pub fn answers(&self) -> &[u32] {
        &self.answers
    }

    /// The difference set W.
    pub fn differences(&self) -> &BTreeSet<u32> {
        &self.differences
    }

    /// `|W|`.
    pub fn m(&self) -> usize {
        self.differences.len()
    }

    pub fn event_e(&self) -> bool {
        self.collision.is_some()
    }

    /// Indices `(i, j)`, `i < j`, of the first repeated answer.
    pub fn collision_pair(&self) -> Option<(usize, usize)> {
        self.collision
    }

    /// `x_i ^ x_j` for the first collision.
    pub fn revealed_shift(&self) -> Option<u32> {
        self.collision
            .map(|(i, j)| self.queries[i] ^ self.queries[j])
    }

    /// Whether `candidate` is still a possible hidden shift.
    pub fn is_compatible(&self, candidate: u32) -> bool {
        candidate != 0 && candidate < 1u32 << self.n && !self.differences.contains(&candidate)
    }
}

/// A classical query algorithm. Queries may depend on earlier answers.
pub trait QueryStrategy {
    /// The next point to ask, or `None` to stop early.
    fn next_query(&mut self, transcript: &QueryTranscript) -> Option<u32>;

    /// Final answer when no collision was observed.
    fn answer(&mut self, transcript: &QueryTranscript) -> u32 {
        best_answer(transcript).0
    }

    /// The full query list, for non-adaptive strategies.
    fn planned_queries(&self) -> Option<&[u32]> {
        None
    }
}

/// Non-adaptive queries chosen greedily so that all pairwise XORs differ,
/// which makes `m = k(k-1)/2` whenever that is achievable.
///
/// When no fresh point keeps the differences distinct, the smallest unused
/// point is taken instead.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadQueries {
    n: usize,
    queries: Vec<u32>,
    full_answer: (u32, u64),
}

impl SpreadQueries {
    pub fn new(n: usize, k: usize) -> Result<Self, AdversaryError> {
        if !(2..=MAX_ORACLE_BITS).contains(&n) {
            return Err(AdversaryError::Size(n));
        }
        let size = 1u32 << n;
        let k = k.min(size as usize);
        let mut queries: Vec<u32> = Vec::with_capacity(k);
        let mut used = vec![false; size as usize];
        let mut diffs = vec![false; size as usize];
        while queries.len() < k {
            let fresh = (0..size).find(|&x| {
                !used[x as usize] && queries.iter().all(|&q| !diffs[(q ^ x) as usize])
            });
            let x = fresh
                .or_else(|| (0..size).find(|&x| !used[x as usize]))
                .expect("fewer than 2^n queries leave a free point");
            for &q in &queries {
                diffs[(q ^ x) as usize] = true;
            }
            used[x as usize] = true;
            queries.push(x);
        }
        let differences: BTreeSet<u32> = pairwise_differences(&queries);
        let full_answer = best_answer_for(n, &differences);
        Ok(Self {
            n,
            queries,
            full_answer,
        })
    }

    pub fn queries(&self) -> &[u32] {
        &self.queries
    }
}

impl QueryStrategy for SpreadQueries {
    fn next_query(&mut self, transcript: &QueryTranscript) -> Option<u32> {
        self.queries.get(transcript.k()).copied()
    }

    fn answer(&mut self, transcript: &QueryTranscript) -> u32 {
        if transcript.n() == self.n && transcript.queries() == self.queries.as_slice() {
            self.full_answer.0
        } else {
            best_answer(transcript).0
        }
    }

    fn planned_queries(&self) -> Option<&[u32]> {
        Some(&self.queries)
    }
}

/// Asks a fixed list of points, then answers optimally.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixedQueries(pub Vec<u32>);

impl QueryStrategy for FixedQueries {
    fn next_query(&mut self, transcript: &QueryTranscript) -> Option<u32> {
        self.0.get(transcript.k()).copied()
    }

    fn planned_queries(&self) -> Option<&[u32]> {
        Some(&self.0)
    }
}

/// Wraps a callback `FnMut(&QueryTranscript) -> Option<u32>` as a strategy
/// that answers optimally.
#[derive(Clone)]
pub struct Adaptive<F>(pub F);

impl<F> QueryStrategy for Adaptive<F>
where
    F: FnMut(&QueryTranscript) -> Option<u32>,
{
    fn next_query(&mut self, transcript: &QueryTranscript) -> Option<u32> {
        (self.0)(transcript)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StrategyOutcome {
    pub answer: u32,
    /// The answer came from a revealed shift rather than from the strategy.
    pub used_collision: bool,
    /// `answer != 0` and `answer · s = 0` for the true shift.
    pub success: bool,
}

/// Plays `strategy` against `f` with at most `k` queries.
///
/// Querying stops at the first collision, after which the revealed shift
/// yields a correct answer. The strategy only ever sees the transcript; the
/// hidden shift is consulted solely to score the answer.
pub fn run_strategy<S: QueryStrategy + ?Sized>(
    strategy: &mut S,
    f: &PromiseFunction,
    k: usize,
) -> Result<(QueryTranscript, StrategyOutcome), AdversaryError> {
    let mut transcript = QueryTranscript::new(f.n())?;
    while transcript.k() < k && !transcript.event_e() {
        let Some(x) = strategy.next_query(&transcript) else {
            break;
        };
        transcript.query(f, x)?;
    }
    let (answer, used_collision) = match transcript.revealed_shift() {
        Some(shift) => (collision_answer(shift), true),
        None => (strategy.answer(&transcript), false),
    };
    let s = f.hidden_shift();
    let outcome = StrategyOutcome {
        answer,
        used_collision,
        success: answer != 0 && dot(answer, s) == 0,
    };
    Ok((transcript, outcome))
}

/// Smallest nonzero z with `z · shift = 0`.
pub fn collision_answer(shift: u32) -> u32 {
    (1u32..)
        .find(|&z| dot(z, shift) == 0)
        .expect("a nonzero orthogonal vector exists for n >= 2")
}

fn pairwise_differences(queries: &[u32]) -> BTreeSet<u32> {
    let mut out = BTreeSet::new();
    for (i, &a) in queries.iter().enumerate() {
        for &b in &queries[i + 1..] {
            out.insert(a ^ b);
        }
    }
    out
}

/// `b_z`: nonzero `u ∉ W` with `u · z = 0`, counted directly.
pub fn surviving_orthogonal(transcript: &QueryTranscript, z: u32) -> u64 {
    let half = 1u64 << (transcript.n() - 1);
    let excluded = transcript
        .differences()
        .iter()
        .filter(|&&w| dot(w, z) == 0)
        .count() as u64;
    half - 1 - excluded
}

/// The nonzero z maximizing `b_z`, smallest on ties, with its `b_z`.
///
/// Intended for collision-free transcripts; with a collision the result still
/// maximizes `b_z` but ignores the revealed shift.
pub fn best_answer(transcript: &QueryTranscript) -> (u32, u64) {
    best_answer_for(transcript.n(), transcript.differences())
}

// The count of w in W with w·z = 0 is (m + Σ_w (-1)^(w·z)) / 2, so one
// Walsh-Hadamard transform of W's indicator gives it for every z at once.
fn best_answer_for(n: usize, differences: &BTreeSet<u32>) -> (u32, u64) {
    let size = 1usize << n;
    let mut spectrum = vec![0i32; size];
    for &w in differences {
        spectrum[w as usize] = 1;
    }
    let mut half = 1;
    while half < size {
        for chunk in spectrum.chunks_exact_mut(2 * half) {
            let (lo, hi) = chunk.split_at_mut(half);
            for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
                let (u, v) = (*a, *b);
                *a = u + v;
                *b = u - v;
            }
        }
        half <<= 1;
    }
    let m = differences.len() as i64;
    let base = (1i64 << (n - 1)) - 1;
    let mut best = (0u32, i64::MIN);
    for (z, &h) in spectrum.iter().enumerate().skip(1) {
        let b_z = base - (m + h as i64) / 2;
        if b_z > best.1 {
            best = (z as u32, b_z);
        }
    }
    (best.0, best.1 as u64)
}

/// Exact compatibility counts for a collision-free transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompatibilityReport {
    pub transcript: QueryTranscript,
    /// `2^n - m - 1`.
    pub compatible_shifts: BigUint,
    /// `(2^(n-1) - k)!`.
    pub functions_per_shift: BigUint,
    pub total_functions: BigUint,
}

pub fn factorial(n: u64) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * i)
}

pub fn count_compatible(transcript: &QueryTranscript) -> Result<CompatibilityReport, AdversaryError> {
    if transcript.event_e() {
        return Err(AdversaryError::Collision);
    }
    let n = transcript.n();
    if n > MAX_COUNT_BITS {
        return Err(AdversaryError::CountTooLarge(n));
    }
    let compatible_shifts = BigUint::from((1u64 << n) - transcript.m() as u64 - 1);
    let functions_per_shift = factorial((1u64 << (n - 1)) - transcript.k() as u64);
    let total_functions = &compatible_shifts * &functions_per_shift;
    Ok(CompatibilityReport {
        transcript: transcript.clone(),
        compatible_shifts,
        functions_per_shift,
        total_functions,
    })
}

/// Enumerated counts of promise functions consistent with a transcript.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForceCount {
    pub total: u64,
    /// Consistent functions per candidate shift; every nonzero shift appears.
    pub per_shift: BTreeMap<u32, u64>,
}

impl BruteForceCount {
    /// All shifts with a nonzero count have the same count.
    pub fn is_flat(&self) -> bool {
        let mut nonzero = self.per_shift.values().filter(|&&c| c > 0);
        match nonzero.next() {
            None => true,
            Some(&first) => nonzero.all(|&c| c == first),
        }
    }
}

/// Enumerates every promise function (n <= 4) and keeps those that agree
/// with the transcript.
pub fn brute_force_compatible(transcript: &QueryTranscript) -> Result<BruteForceCount, AdversaryError> {
    let n = transcript.n();
    let mut per_shift: BTreeMap<u32, u64> = (1..1u32 << n).map(|s| (s, 0)).collect();
    let pairs: Vec<(usize, u32)> = transcript
        .queries()
        .iter()
        .zip(transcript.answers())
        .map(|(&x, &y)| (x as usize, y))
        .collect();
    for_each_promise_function(n, |s, table| {
        if pairs.iter().all(|&(x, y)| table[x] == y) {
            *per_shift.get_mut(&s).expect("shift in range") += 1;
        }
    })?;
    Ok(BruteForceCount {
        total: per_shift.values().sum(),
        per_shift,
    })
}

/// Fraction of transcript-consistent promise functions for which `z` is a
/// correct answer, by enumeration (n <= 4).
pub fn posterior_success(transcript: &QueryTranscript, z: u32) -> Result<BigRational, AdversaryError> {
    let counts = brute_force_compatible(transcript)?;
    let good: u64 = counts
        .per_shift
        .iter()
        .filter(|(&s, _)| z != 0 && dot(z, s) == 0)
        .map(|(_, &c)| c)
        .sum();
    Ok(BigRational::new(good.into(), counts.total.into()))
}

/// Exact success probability of a strategy over the uniform distribution of
/// promise functions, by enumeration (n <= 4).
pub fn exact_success_probability<S>(strategy: &S, n: usize, k: usize) -> Result<BigRational, AdversaryError>
where
    S: QueryStrategy + Clone,
{
    let mut wins = 0u64;
    let mut total = 0u64;
    let mut error = None;
    for_each_promise_function(n, |s, table| {
        if error.is_some() {
            return;
        }
        let f = PromiseFunction::from_table(n, s, table.to_vec()).expect("enumerated table is well formed");
        match run_strategy(&mut strategy.clone(), &f, k) {
            Ok((_, outcome)) => {
                total += 1;
                wins += outcome.success as u64;
            }
            Err(e) => error = Some(e),
        }
    })?;
    if let Some(e) = error {
        return Err(e);
    }
    Ok(BigRational::new(wins.into(), total.into()))
}

/// Probability of event E for a fixed query set under a uniform shift.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventProbability {
    pub m: usize,
    pub k: usize,
    /// `m / (2^n - 1)`.
    pub exact: BigRational,
    /// `k^2 / 2^n`.
    pub quadratic_bound: BigRational,
}

pub fn prob_event_e(n: usize, queries: &[u32]) -> Result<EventProbability, AdversaryError> {
    if !(2..=MAX_ORACLE_BITS).contains(&n) {
        return Err(AdversaryError::Size(n));
    }
    let mut seen = BTreeSet::new();
    for &x in queries {
        if x >= 1u32 << n {
            return Err(AdversaryError::QueryOutOfRange(x));
        }
        if !seen.insert(x) {
            return Err(AdversaryError::DuplicateQuery(x));
        }
    }
    let m = pairwise_differences(queries).len();
    let k = queries.len();
    Ok(EventProbability {
        m,
        k,
        exact: BigRational::new(BigInt::from(m), BigInt::from((1u64 << n) - 1)),
        quadratic_bound: BigRational::new(BigInt::from(k * k), BigInt::one() << n),
    })
}

/// `floor(2^(n/3))`, computed exactly as the largest k with `k^3 <= 2^n`.
pub fn query_budget(n: usize) -> u64 {
    assert!(n < 120, "2^n must fit in u128");
    let target = 1u128 << n;
    let mut k = (2f64.powf(n as f64 / 3.0)) as u128;
    while k * k * k > target {
        k -= 1;
    }
    while (k + 1) * (k + 1) * (k + 1) <= target {
        k += 1;
    }
    k as u64
}

/// Exact test of `r < 2^(-n/3)` for nonnegative r, via `r^3 * 2^n < 1`.
pub fn below_cube_root_bound(r: &BigRational, n: usize) -> bool {
    assert!(*r >= BigRational::zero());
    let cube = r * r * r;
    let scaled = cube * BigRational::from_integer(BigInt::one() << n);
    scaled < BigRational::one()
}

/// The inequality chain bounding the collision-free success probability
/// with k queries and m distinct differences.
#[derive(Debug, Clone, PartialEq)]
pub struct SuccessBoundChain {
    pub n: usize,
    pub k: u64,
    pub m: u64,
    /// `(2^(n-1) - 1) / (2^n - 1 - m)`: the best possible `b_z` ratio.
    pub best_ratio: f64,
    /// `2^(n-1) / (2^n - k^2)`.
    pub quadratic: f64,
    /// `2^(n-1) / (2^n - 2^(2n/3))`.
    pub budget: f64,
    /// `(1/2) / (1 - 2^(-n/3))`.
    pub normalized: f64,
    /// `1/2 + 2^(-n/3)`.
    pub ceiling: f64,
    /// Every link of the chain, checked exactly where the terms are rational.
    pub holds: bool,
}

impl SuccessBoundChain {
    pub fn new(n: usize, k: u64, m: u64) -> Self {
        let half = 1u64 << (n - 1);
        let full = 1u64 << n;
        let third = 2f64.powf(-(n as f64) / 3.0);
        let best_ratio = (half - 1) as f64 / (full - 1 - m) as f64;
        let quadratic = half as f64 / (full as f64 - (k * k) as f64);
        let budget = half as f64 / (full as f64 - 2f64.powf(2.0 * n as f64 / 3.0));
        let normalized = 0.5 / (1.0 - third);
        let ceiling = 0.5 + third;

        // (half - 1)/(full - 1 - m) < half/(full - k^2), cross-multiplied
        let strict = m < k * k
            && k * k < full
            && BigInt::from(half - 1) * BigInt::from(full - k * k)
                < BigInt::from(half) * BigInt::from(full - 1 - m);
        // k^2 <= 2^(2n/3) iff k^3 <= 2^n
        let budget_ok = (k as u128).pow(3) <= 1u128 << n;
        let identity_ok = (budget - normalized).abs() <= 1e-12 * normalized;
        // (1/2)/(1 - t) <= 1/2 + t iff t <= 1/2 iff n >= 3
        let ceiling_ok = n >= 3;
        Self {
            n,
            k,
            m,
            best_ratio,
            quadratic,
            budget,
            normalized,
            ceiling,
            holds: strict && budget_ok && identity_ok && ceiling_ok,
        }
    }
}
