//! Exhaustive enumeration of promise functions for small n.
//!
//! Each function is visited exactly once as a (shift, coset-to-value
//! bijection) pair: `(2^n - 1) * (2^(n-1))!` functions in total.

use thiserror::Error;

use crate::oracle::{fill_canonical, PromiseFunction};

/// Largest n for which enumeration is offered; n = 4 already visits
/// 15 * 8! = 604800 functions.
pub const MAX_ENUMERATION_BITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("enumeration over n = {0} bits is infeasible (supported: 2..={MAX_ENUMERATION_BITS})")]
pub struct EnumerationTooLarge(pub usize);

/// Calls `visit(s, table)` for every promise function on n bits.
pub fn for_each_promise_function<F>(n: usize, mut visit: F) -> Result<(), EnumerationTooLarge>
where
    F: FnMut(u32, &[u32]),
{
    if !(2..=MAX_ENUMERATION_BITS).contains(&n) {
        return Err(EnumerationTooLarge(n));
    }
    let half = 1usize << (n - 1);
    let mut table = vec![0u32; 1 << n];
    for s in 1..(1u32 << n) {
        let mut values: Vec<u32> = (0..half as u32).collect();
        let mut counters = vec![0usize; half];
        fill_canonical(&mut table, s, &values);
        visit(s, &table);
        // Heap's algorithm, iterative form
        let mut i = 1;
        while i < half {
            if counters[i] < i {
                let j = if i % 2 == 0 { 0 } else { counters[i] };
                values.swap(j, i);
                fill_canonical(&mut table, s, &values);
                visit(s, &table);
                counters[i] += 1;
                i = 1;
            } else {
                counters[i] = 0;
                i += 1;
            }
        }
    }
    Ok(())
}

/// Collects every promise function on n bits.
pub fn all_promise_functions(n: usize) -> Result<Vec<PromiseFunction>, EnumerationTooLarge> {
    let mut out = Vec::new();
    for_each_promise_function(n, |s, table| {
        out.push(PromiseFunction::from_table(n, s, table.to_vec()).expect("enumerated table is well formed"));
    })?;
    Ok(out)
}
