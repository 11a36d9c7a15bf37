//! Promise functions: `f: {0,1}^n -> {0,1}^(n-1)` with `f(x) = f(y)` exactly
//! when `x = y` or `x = y ^ s` for a hidden nonzero shift `s`.
//!
//! Equivalently `f` is constant on each coset `{g, g ^ s}` of `H = {0, s}`
//! and distinct across cosets. Both views are offered over one type.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bits::{format_bits, parse_bits_exact, BitsError};

/// Largest input width a dense truth table is built for.
pub const MAX_ORACLE_BITS: usize = 24;

/// Black-box access to a function on n-bit inputs.
///
/// The quantum algorithm and the classical strategies only ever see this
/// trait, never the hidden shift.
pub trait Oracle {
    /// Input width n. Outputs are `n - 1` bits wide.
    fn input_bits(&self) -> usize;
    fn evaluate(&self, x: u32) -> u32;
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OracleError {
    #[error("n = {0} is below the minimum of 2")]
    TooSmall(usize),
    #[error("n = {0} exceeds the dense-table limit of {MAX_ORACLE_BITS}")]
    TooLarge(usize),
    #[error("the hidden shift must be nonzero")]
    ZeroShift,
    #[error("shift {0:#x} does not fit in n bits")]
    ShiftOutOfRange(u32),
    #[error("table has {got} entries, expected {expected}")]
    TableLength { got: usize, expected: usize },
    #[error("f({x:#x}) = {value:#x} does not fit in n - 1 bits")]
    ValueOutOfRange { x: u32, value: u32 },
    #[error("transversal has {got} entries, expected {expected}")]
    TransversalLength { got: usize, expected: usize },
    #[error("transversal entries {0:#x} and {1:#x} lie in the same coset")]
    DuplicateCoset(u32, u32),
    #[error("value {0:#x} is assigned to more than one coset")]
    DuplicateValue(u32),
    #[error("representative {0:#x} does not fit in n bits")]
    RepresentativeOutOfRange(u32),
    #[error("promise violated by the pair ({x:#x}, {y:#x})")]
    PromiseViolated { x: u32, y: u32 },
    #[error(transparent)]
    Bits(#[from] BitsError),
}

fn check_width(n: usize) -> Result<(), OracleError> {
    if n < 2 {
        Err(OracleError::TooSmall(n))
    } else if n > MAX_ORACLE_BITS {
        Err(OracleError::TooLarge(n))
    } else {
        Ok(())
    }
}

/// Outcome of [`PromiseFunction::verify_promise`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromiseVerdict {
    Holds,
    /// `x` and `y` witness a failure: either `f(x) = f(y)` with
    /// `x ^ y != s`, or `x ^ y = s` with `f(x) != f(y)`.
    Violated { x: u32, y: u32 },
}

impl PromiseVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, PromiseVerdict::Holds)
    }
}

/// A prefix whose preimage does not split into two cosets of `{0, s}`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("prefix {prefix:#x} has preimage {preimage:?}, not two cosets of the hidden subgroup")]
pub struct PrefixViolation {
    pub prefix: u32,
    pub preimage: Vec<u32>,
}

/// Coset representatives and their values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransversalSpec {
    pub n: usize,
    pub s: u32,
    pub transversal: Vec<u32>,
    pub values: Vec<u32>,
}

impl TransversalSpec {
    /// The worked n = 4, s = 0101 instance used as the reference fixture.
    pub fn example_n4() -> Self {
        Self {
            n: 4,
            s: 0b0101,
            transversal: vec![
                0b0000, 0b0001, 0b0010, 0b0011, 0b1000, 0b1001, 0b1010, 0b1011,
            ],
            values: vec![0b000, 0b010, 0b100, 0b110, 0b101, 0b001, 0b011, 0b111],
        }
    }
}

/// Dense truth table of a function on n bits together with its hidden shift.
///
/// Constructors that sample or assemble from a transversal always satisfy the
/// promise. [`PromiseFunction::from_table`] checks only the shape so that
/// arbitrary tables can be fed to [`PromiseFunction::verify_promise`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "PromiseFunctionRecord", into = "PromiseFunctionRecord")]
pub struct PromiseFunction {
    n: usize,
    s: u32,
    table: Vec<u32>,
}

impl PromiseFunction {
    /// Samples uniformly among all promise functions on n bits.
    ///
    /// The shift is uniform over the `2^n - 1` nonzero strings; the coset to
    /// value bijection is a Fisher-Yates shuffle over the canonical transversal.
    pub fn sample_uniform<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<Self, OracleError> {
        check_width(n)?;
        let s = rng.gen_range(1..(1u32 << n));
        let mut values: Vec<u32> = (0..(1u32 << (n - 1))).collect();
        values.shuffle(rng);
        Ok(Self::from_canonical_values(n, s, &values))
    }

    /// Builds the function that maps the i-th canonical representative (the
    /// i-th smallest x with the lowest set bit of `s` clear) to `values[i]`.
    pub(crate) fn from_canonical_values(n: usize, s: u32, values: &[u32]) -> Self {
        let mut table = vec![0u32; 1 << n];
        fill_canonical(&mut table, s, values);
        Self { n, s, table }
    }

    pub fn from_transversal(spec: &TransversalSpec) -> Result<Self, OracleError> {
        let n = spec.n;
        check_width(n)?;
        let size = 1u32 << n;
        if spec.s == 0 {
            return Err(OracleError::ZeroShift);
        }
        if spec.s >= size {
            return Err(OracleError::ShiftOutOfRange(spec.s));
        }
        let half = 1usize << (n - 1);
        if spec.transversal.len() != half {
            return Err(OracleError::TransversalLength {
                got: spec.transversal.len(),
                expected: half,
            });
        }
        if spec.values.len() != half {
            return Err(OracleError::TransversalLength {
                got: spec.values.len(),
                expected: half,
            });
        }

        let mut owner: Vec<Option<u32>> = vec![None; 1 << n];
        let mut value_used = vec![false; half];
        let mut table = vec![0u32; 1 << n];
        for (&t, &v) in spec.transversal.iter().zip(&spec.values) {
            if t >= size {
                return Err(OracleError::RepresentativeOutOfRange(t));
            }
            if v as usize >= half {
                return Err(OracleError::ValueOutOfRange { x: t, value: v });
            }
            let rep = t.min(t ^ spec.s) as usize;
            if let Some(prev) = owner[rep] {
                return Err(OracleError::DuplicateCoset(prev, t));
            }
            owner[rep] = Some(t);
            if std::mem::replace(&mut value_used[v as usize], true) {
                return Err(OracleError::DuplicateValue(v));
            }
            table[t as usize] = v;
            table[(t ^ spec.s) as usize] = v;
        }
        Ok(Self { n, s: spec.s, table })
    }

    /// Wraps a raw table after checking its shape. The promise itself is not
    /// checked here.
    pub fn from_table(n: usize, s: u32, table: Vec<u32>) -> Result<Self, OracleError> {
        check_width(n)?;
        if s == 0 {
            return Err(OracleError::ZeroShift);
        }
        if s >= 1u32 << n {
            return Err(OracleError::ShiftOutOfRange(s));
        }
        if table.len() != 1 << n {
            return Err(OracleError::TableLength {
                got: table.len(),
                expected: 1 << n,
            });
        }
        let limit = 1u32 << (n - 1);
        if let Some((x, &value)) = table.iter().enumerate().find(|(_, &v)| v >= limit) {
            return Err(OracleError::ValueOutOfRange { x: x as u32, value });
        }
        Ok(Self { n, s, table })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The hidden shift. Only harness code should look at this.
    pub fn hidden_shift(&self) -> u32 {
        self.s
    }

    pub fn table(&self) -> &[u32] {
        &self.table
    }

    pub fn coset_of(&self, x: u32) -> [u32; 2] {
        let other = x ^ self.s;
        [x.min(other), x.max(other)]
    }

    /// All preimages of `value`, ascending.
    pub fn preimages(&self, value: u32) -> Vec<u32> {
        (0..self.table.len() as u32)
            .filter(|&x| self.table[x as usize] == value)
            .collect()
    }

    /// Checks the promise for the stored shift in O(2^n).
    pub fn verify_promise(&self) -> PromiseVerdict {
        let mut first_seen: Vec<Option<u32>> = vec![None; 1 << (self.n - 1)];
        for x in 0..self.table.len() as u32 {
            let value = self.table[x as usize] as usize;
            match first_seen[value] {
                None => first_seen[value] = Some(x),
                Some(prev) if prev ^ x != self.s => {
                    return PromiseVerdict::Violated { x: prev, y: x }
                }
                Some(_) => {}
            }
        }
        for x in 0..self.table.len() as u32 {
            let partner = x ^ self.s;
            if self.table[x as usize] != self.table[partner as usize] {
                return PromiseVerdict::Violated { x, y: partner };
            }
        }
        PromiseVerdict::Holds
    }

    /// Preimage of `{prefix·0, prefix·1}`, ascending.
    pub fn prefix_preimage(&self, prefix: u32) -> Vec<u32> {
        (0..self.table.len() as u32)
            .filter(|&x| self.table[x as usize] >> 1 == prefix)
            .collect()
    }

    /// Checks that every (n-2)-bit prefix has a four-element preimage made of
    /// two distinct cosets of `{0, s}`.
    pub fn check_prefix_structure(&self) -> Result<(), PrefixViolation> {
        let prefixes = 1usize << (self.n - 2);
        let mut buckets: Vec<Vec<u32>> = vec![Vec::with_capacity(4); prefixes];
        for (x, &v) in self.table.iter().enumerate() {
            buckets[(v >> 1) as usize].push(x as u32);
        }
        for (prefix, preimage) in buckets.into_iter().enumerate() {
            let closed = preimage.iter().all(|&x| {
                preimage.contains(&(x ^ self.s))
                    && self.table[x as usize] == self.table[(x ^ self.s) as usize]
            });
            if preimage.len() != 4 || !closed {
                return Err(PrefixViolation {
                    prefix: prefix as u32,
                    preimage,
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("promise function serializes")
    }

    /// Parses the JSON fixture form and rejects tables that break the promise.
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

impl Oracle for PromiseFunction {
    fn input_bits(&self) -> usize {
        self.n
    }

    #[inline]
    fn evaluate(&self, x: u32) -> u32 {
        self.table[x as usize]
    }
}

pub(crate) fn fill_canonical(table: &mut [u32], s: u32, values: &[u32]) {
    let low = s & s.wrapping_neg();
    let reps = (0..table.len() as u32).filter(|x| x & low == 0);
    for (rep, &v) in reps.zip(values) {
        table[rep as usize] = v;
        table[(rep ^ s) as usize] = v;
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PromiseFunctionRecord {
    n: usize,
    s: String,
    table: Vec<String>,
}

impl From<PromiseFunction> for PromiseFunctionRecord {
    fn from(f: PromiseFunction) -> Self {
        Self {
            n: f.n,
            s: format_bits(f.s, f.n),
            table: f.table.iter().map(|&v| format_bits(v, f.n - 1)).collect(),
        }
    }
}

impl TryFrom<PromiseFunctionRecord> for PromiseFunction {
    type Error = OracleError;

    fn try_from(record: PromiseFunctionRecord) -> Result<Self, Self::Error> {
        check_width(record.n)?;
        let s = parse_bits_exact(&record.s, record.n)?;
        let table = record
            .table
            .iter()
            .map(|v| parse_bits_exact(v, record.n - 1))
            .collect::<Result<Vec<_>, _>>()?;
        let f = Self::from_table(record.n, s, table)?;
        match f.verify_promise() {
            PromiseVerdict::Holds => Ok(f),
            PromiseVerdict::Violated { x, y } => Err(OracleError::PromiseViolated { x, y }),
        }
    }
}
