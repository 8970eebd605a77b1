//! The level stack and its per-level sparse tables.
//!
//! Level `i` of the stack holds a strictly increasing power-of-two factor
//! `S[i]`, and table `i` maps occupied keys `floor(r * S[i])` to whatever the
//! caller stores there. Level 0 is the root factor `1`, under which every
//! value of `(0, 1)` has key `0`.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use num_bigint::BigUint;
use thiserror::Error;

use crate::numeric::{floor_scale_unchecked, ExactReal, ScaleFactor};

pub type Key = BigUint;

/// Tier of the root level; it never takes part in a merge.
pub const ROOT_TIER: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LevelError {
    #[error("cannot push {new}: levels must increase past the current top {top}")]
    NotIncreasing { top: ScaleFactor, new: ScaleFactor },
    #[error("{0} is not a level on the stack")]
    NotFound(ScaleFactor),
    #[error("key of {bits} bits does not fit below level {factor}")]
    KeyOutOfRange { bits: u64, factor: ScaleFactor },
    #[error("level index {index} is above the top index {top}")]
    IndexOutOfRange { index: usize, top: usize },
    #[error("the root level cannot be merged away")]
    RootMerge,
}

/// Stack `S` of levels, bottom to top.
#[derive(Debug, Clone)]
pub struct LevelStack {
    levels: Vec<ScaleFactor>,
    tiers: Vec<u32>,
}

impl Default for LevelStack {
    fn default() -> Self {
        Self::new()
    }
}

impl LevelStack {
    pub fn new() -> Self {
        LevelStack {
            levels: vec![ScaleFactor::ONE],
            tiers: vec![ROOT_TIER],
        }
    }

    pub fn top(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn factor(&self, index: usize) -> ScaleFactor {
        self.levels[index]
    }

    pub fn top_factor(&self) -> ScaleFactor {
        self.levels[self.top()]
    }

    pub fn factors(&self) -> &[ScaleFactor] {
        &self.levels
    }

    pub fn tier(&self, index: usize) -> u32 {
        self.tiers[index]
    }

    pub fn set_tier(&mut self, index: usize, tier: u32) {
        if index > 0 {
            self.tiers[index] = tier;
        }
    }

    /// Pushes a new top level with tier 0.
    pub fn push(&mut self, f: ScaleFactor) -> Result<usize, LevelError> {
        let top = self.top_factor();
        if f <= top {
            return Err(LevelError::NotIncreasing { top, new: f });
        }
        self.levels.push(f);
        self.tiers.push(0);
        Ok(self.top())
    }

    /// `S^-1[f]`.
    pub fn index_of(&self, f: ScaleFactor) -> Result<usize, LevelError> {
        self.levels
            .binary_search(&f)
            .map_err(|_| LevelError::NotFound(f))
    }

    /// Lowest index `l >= 1` such that every level in `l..=top` has a tier
    /// below `tier`. Equals `top + 1` when no such level exists.
    pub fn watermark(&self, tier: u32) -> usize {
        let mut l = self.levels.len();
        while l > 1 && self.tiers[l - 1] < tier {
            l -= 1;
        }
        l
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.levels[0] == ScaleFactor::ONE && self.levels.windows(2).all(|w| w[0] < w[1])
    }

    fn truncate(&mut self, len: usize) {
        self.levels.truncate(len);
        self.tiers.truncate(len);
    }
}

/// Sparse table `I_l` for one level.
#[derive(Debug, Clone)]
pub struct LevelTable<V> {
    factor: ScaleFactor,
    entries: HashMap<Key, V>,
}

impl<V> LevelTable<V> {
    pub fn new(factor: ScaleFactor) -> Self {
        LevelTable {
            factor,
            entries: HashMap::new(),
        }
    }

    pub fn factor(&self) -> ScaleFactor {
        self.factor
    }

    /// Number of occupied keys (`n_i`).
    pub fn occupancy(&self) -> usize {
        self.entries.len()
    }

    pub fn check_key(&self, key: &Key) -> Result<(), LevelError> {
        if key.bits() > self.factor.log2() {
            Err(LevelError::KeyOutOfRange {
                bits: key.bits(),
                factor: self.factor,
            })
        } else {
            Ok(())
        }
    }

    pub fn get(&self, key: &Key) -> Option<&V> {
        self.entries.get(key)
    }

    pub fn contains(&self, key: &Key) -> bool {
        self.entries.contains_key(key)
    }

    /// Stores `value` at a vacant key. Returns `false` and leaves the table
    /// untouched when the key is already occupied.
    pub fn insert_vacant(&mut self, key: Key, value: V) -> Result<bool, LevelError> {
        self.check_key(&key)?;
        match self.entries.entry(key) {
            std::collections::hash_map::Entry::Occupied(_) => Ok(false),
            std::collections::hash_map::Entry::Vacant(slot) => {
                slot.insert(value);
                Ok(true)
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Key, &V)> {
        self.entries.iter()
    }
}

/// Outcome of collapsing the topmost run of levels into one.
#[derive(Debug, Clone)]
pub struct MergeReport<V> {
    /// Stack index of the merged level (the new top).
    pub index: usize,
    pub factor: ScaleFactor,
    /// Residents re-keyed at the merged factor.
    pub rekeyed: usize,
    /// Sum of occupancies of the discarded tables.
    pub occupancy_before: usize,
    pub occupancy_after: usize,
    /// Value stored for each resident, in resident order.
    pub placements: Vec<V>,
    /// Key of each resident at the merged factor, in resident order.
    pub keys: Vec<Key>,
}

/// The stack together with one table per level and a probe counter.
#[derive(Debug)]
pub struct LevelSpace<V> {
    stack: LevelStack,
    tables: Vec<LevelTable<V>>,
    probes: AtomicU64,
}

impl<V> Default for LevelSpace<V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<V> LevelSpace<V> {
    pub fn new() -> Self {
        LevelSpace {
            stack: LevelStack::new(),
            tables: vec![LevelTable::new(ScaleFactor::ONE)],
            probes: AtomicU64::new(0),
        }
    }

    pub fn stack(&self) -> &LevelStack {
        &self.stack
    }

    pub fn stack_mut(&mut self) -> &mut LevelStack {
        &mut self.stack
    }

    pub fn top(&self) -> usize {
        self.stack.top()
    }

    pub fn factor(&self, index: usize) -> ScaleFactor {
        self.stack.factor(index)
    }

    pub fn table(&self, index: usize) -> &LevelTable<V> {
        &self.tables[index]
    }

    pub fn table_mut(&mut self, index: usize) -> &mut LevelTable<V> {
        &mut self.tables[index]
    }

    pub fn tables(&self) -> &[LevelTable<V>] {
        &self.tables
    }

    /// Total number of [`LevelSpace::probe`] calls so far.
    pub fn probes(&self) -> u64 {
        self.probes.load(Ordering::Relaxed)
    }

    /// Pushes `f` and registers an empty table for it.
    pub fn push_level(&mut self, f: ScaleFactor) -> Result<usize, LevelError> {
        let index = self.stack.push(f)?;
        self.tables.push(LevelTable::new(f));
        Ok(index)
    }

    pub fn level_index(&self, f: ScaleFactor) -> Result<usize, LevelError> {
        self.stack.index_of(f)
    }

    /// Looks `key` up in table `index`, counting one probe.
    pub fn probe(&self, index: usize, key: &Key) -> Result<Option<&V>, LevelError> {
        let table = self.tables.get(index).ok_or(LevelError::IndexOutOfRange {
            index,
            top: self.top(),
        })?;
        table.check_key(key)?;
        self.probes.fetch_add(1, Ordering::Relaxed);
        Ok(table.get(key))
    }

    pub fn insert_vacant(&mut self, index: usize, key: Key, value: V) -> Result<bool, LevelError> {
        let top = self.top();
        self.tables
            .get_mut(index)
            .ok_or(LevelError::IndexOutOfRange { index, top })?
            .insert_vacant(key, value)
    }

    /// Replaces levels `l..=top` by the single factor `S[top]` at index `l`.
    ///
    /// Each resident is re-keyed at the merged factor. The first resident to
    /// land on a key gets its value from `fresh(key, resident_index)`; later
    /// residents with the same key share that value. The merged level keeps
    /// the highest tier among the levels it replaces.
    pub fn merge_top_levels<'a, I, F>(
        &mut self,
        l: usize,
        residents: I,
        mut fresh: F,
    ) -> Result<MergeReport<V>, LevelError>
    where
        I: IntoIterator<Item = &'a ExactReal>,
        F: FnMut(&Key, usize) -> V,
        V: Clone,
    {
        let top = self.top();
        if l == 0 {
            return Err(LevelError::RootMerge);
        }
        if l > top {
            return Err(LevelError::IndexOutOfRange { index: l, top });
        }
        let factor = self.stack.top_factor();
        let tier = (l..=top).map(|i| self.stack.tier(i)).max().unwrap_or(0);
        let occupancy_before = self.tables[l..].iter().map(LevelTable::occupancy).sum();

        self.tables.truncate(l);
        self.stack.truncate(l);
        self.stack.push(factor)?;
        self.stack.set_tier(l, tier);

        let mut table: LevelTable<V> = LevelTable::new(factor);
        let mut placements = Vec::new();
        let mut keys = Vec::new();
        for (i, r) in residents.into_iter().enumerate() {
            let key = floor_scale_unchecked(r, factor);
            let value = match table.entries.get(&key) {
                Some(v) => v.clone(),
                None => {
                    let v = fresh(&key, i);
                    table.entries.insert(key.clone(), v.clone());
                    v
                }
            };
            placements.push(value);
            keys.push(key);
        }
        let occupancy_after = table.occupancy();
        self.tables.push(table);

        Ok(MergeReport {
            index: l,
            factor,
            rekeyed: placements.len(),
            occupancy_before,
            occupancy_after,
            placements,
            keys,
        })
    }
}
