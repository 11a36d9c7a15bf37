//! Exact quantum search for a nonzero vector orthogonal to a hidden XOR
//! shift, and the classical query model it is contrasted with.
//!
//! - [`state`]: dense two-register state vector and the transforms it needs
//! - [`oracle`]: promise functions and the [`oracle::Oracle`] trait
//! - [`algorithm`]: the seven-step exact routine and the amplitude profile
//! - [`adversary`]: classical transcripts, strategies and exact counting
//! - [`experiment`]: seeded parallel drivers and reports

pub mod adversary;
pub mod algorithm;
pub mod bits;
pub mod enumerate;
pub mod experiment;
pub mod oracle;
pub mod state;
pub mod stats;

pub use algorithm::{run, AlgorithmTrace, AmplitudeProfile, RunOptions};
pub use oracle::{Oracle, PromiseFunction, TransversalSpec};
pub use state::StateVector;

/// JSON fixture for the n = 4, s = 0101 worked instance.
pub const EXAMPLE_FIXTURE_JSON: &str = include_str!("../fixtures/example_n4.json");
