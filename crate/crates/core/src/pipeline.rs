//! End-to-end sort: convert to keys, radix sort the keys, expand duplicates.

use std::time::Instant;

use crate::converter::{convert, Conversion, ConvertError, ConvertOptions, Fault};
use crate::intsort::{radix_sort_indices, RadixStats};
use crate::numeric::ExactReal;

#[derive(Debug, Clone)]
pub struct SortOutcome {
    /// Input positions in ascending value order; equal values keep input order.
    pub order: Vec<usize>,
    pub conversion: Conversion,
    pub radix: RadixStats,
}

/// Sorts `values`, returning the sorting permutation and the conversion
/// details. The metrics record gets its `sort_ns` column filled in.
pub fn sort_values(values: &[ExactReal], options: &ConvertOptions) -> Result<SortOutcome, ConvertError> {
    let mut conversion = convert(values, options)?;
    let start = Instant::now();
    let keys = &mut conversion.keys;
    if options.fault == Some(Fault::SwapFirstKeys) && keys.records.len() >= 2 {
        let first = keys.records[0].key.clone();
        keys.records[0].key = std::mem::replace(&mut keys.records[1].key, first);
    }
    let (ranked, radix) = radix_sort_indices(&keys.records);
    let mut order = Vec::with_capacity(values.len());
    for i in ranked {
        order.extend_from_slice(&keys.occurrences[i]);
    }
    conversion.metrics.sort_ns = start.elapsed().as_nanos() as u64;
    Ok(SortOutcome {
        order,
        conversion,
        radix,
    })
}

/// Stable comparison sort of the input positions, used as the reference.
pub fn oracle_order(values: &[ExactReal]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].cmp(&values[b]));
    order
}
