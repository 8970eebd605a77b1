//! Stable LSD radix sort over arbitrary-precision keys.
//!
//! Keys are cut into 16-bit digits and left-padded to the widest key, so a
//! set whose widest key has `b` bits takes `ceil(b / 16)` counting passes.
//! Ties are broken by input index through extra passes over that index; no
//! key comparison is ever made.

use std::cell::Cell;
use std::cmp::Ordering;

use num_bigint::BigUint;
use thiserror::Error;

const DIGIT_BITS: u64 = 16;
const BUCKETS: usize = 1 << DIGIT_BITS;

thread_local! {
    static KEY_COMPARISONS: Cell<u64> = const { Cell::new(0) };
}

/// Key comparisons made on this thread since the last reset.
pub fn key_comparisons() -> u64 {
    KEY_COMPARISONS.with(Cell::get)
}

pub fn reset_key_comparisons() {
    KEY_COMPARISONS.with(|c| c.set(0));
}

/// Integer key whose `Ord` impl counts every comparison made through it.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SortKey(pub BigUint);

impl SortKey {
    pub fn bits(&self) -> u64 {
        self.0.bits()
    }

    pub fn as_biguint(&self) -> &BigUint {
        &self.0
    }
}

impl Ord for SortKey {
    fn cmp(&self, other: &Self) -> Ordering {
        KEY_COMPARISONS.with(|c| c.set(c.get() + 1));
        self.0.cmp(&other.0)
    }
}

impl PartialOrd for SortKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<BigUint> for SortKey {
    fn from(value: BigUint) -> Self {
        SortKey(value)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KeyRecord {
    pub key: SortKey,
    /// Position of the first occurrence in the input.
    pub input_index: usize,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntSortError {
    #[error("records are not sorted by key (position {0})")]
    Unsorted(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RadixStats {
    /// Passes over key digits.
    pub key_passes: usize,
    /// Passes over input-index digits used for tie-breaking.
    pub index_passes: usize,
}

/// Number of 16-bit digit passes needed for keys of at most `max_bits` bits.
pub fn digit_passes(max_bits: u64) -> usize {
    max_bits.div_ceil(DIGIT_BITS) as usize
}

fn digit(limbs: &[u64], d: usize) -> usize {
    let word = d / 4;
    let shift = (d % 4) as u64 * DIGIT_BITS;
    limbs
        .get(word)
        .map_or(0, |w| ((w >> shift) & (BUCKETS as u64 - 1)) as usize)
}

/// One stable counting pass: reorders `order` by `digit_of(order[i])`.
fn counting_pass(
    order: &mut Vec<usize>,
    scratch: &mut Vec<usize>,
    counts: &mut [usize],
    digit_of: impl Fn(usize) -> usize,
) {
    counts.iter_mut().for_each(|c| *c = 0);
    for &i in order.iter() {
        counts[digit_of(i)] += 1;
    }
    let mut sum = 0;
    for c in counts.iter_mut() {
        let here = *c;
        *c = sum;
        sum += here;
    }
    scratch.clear();
    scratch.resize(order.len(), 0);
    for &i in order.iter() {
        let slot = &mut counts[digit_of(i)];
        scratch[*slot] = i;
        *slot += 1;
    }
    std::mem::swap(order, scratch);
}

/// Positions of `records` in ascending `(key, input_index)` order.
pub fn radix_sort_indices(records: &[KeyRecord]) -> (Vec<usize>, RadixStats) {
    let mut order: Vec<usize> = (0..records.len()).collect();
    let mut stats = RadixStats::default();
    if records.len() < 2 {
        return (order, stats);
    }
    let mut scratch = Vec::with_capacity(records.len());
    let mut counts = vec![0usize; BUCKETS];

    // Least significant first: the input index, then the key digits.
    let max_index = records.iter().map(|r| r.input_index).max().unwrap_or(0);
    let index_bits = u64::from(usize::BITS - max_index.leading_zeros());
    for d in 0..digit_passes(index_bits) {
        counting_pass(&mut order, &mut scratch, &mut counts, |i| {
            digit(&[records[i].input_index as u64], d)
        });
        stats.index_passes += 1;
    }

    let limbs: Vec<Vec<u64>> = records.iter().map(|r| r.key.0.to_u64_digits()).collect();
    let max_bits = records.iter().map(|r| r.key.bits()).max().unwrap_or(0);
    for d in 0..digit_passes(max_bits) {
        counting_pass(&mut order, &mut scratch, &mut counts, |i| digit(&limbs[i], d));
        stats.key_passes += 1;
    }
    (order, stats)
}

/// Records in ascending key order, ties by input index.
pub fn radix_sort(records: Vec<KeyRecord>) -> Vec<KeyRecord> {
    let (order, _) = radix_sort_indices(&records);
    let mut slots: Vec<Option<KeyRecord>> = records.into_iter().map(Some).collect();
    order
        .into_iter()
        .map(|i| slots[i].take().expect("order is a permutation"))
        .collect()
}

/// Maps the i-th distinct key of a sorted sequence to `i`.
pub fn rank_compress(sorted: &[KeyRecord]) -> Result<Vec<usize>, IntSortError> {
    let mut ranks = Vec::with_capacity(sorted.len());
    let mut rank = 0;
    for (i, rec) in sorted.iter().enumerate() {
        if i > 0 {
            match sorted[i - 1].key.0.cmp(&rec.key.0) {
                Ordering::Less => rank += 1,
                Ordering::Equal => {}
                Ordering::Greater => return Err(IntSortError::Unsorted(i)),
            }
        }
        ranks.push(rank);
    }
    Ok(ranks)
}
