//! Conversion of unit-interval rationals to order-preserving integer keys.
//!
//! Values live in the leaves of a key tree. Every node sits at a level of the
//! stack and holds all values that share its key there; the children of an
//! internal node share one finer level and carry distinct keys at it. The
//! level tables index each node at its own level plus the ancestor ladder
//! obtained by clearing low bits of its level index, which lets Match find a
//! starting point with one probe per bit of `top`.

mod invariants;
mod preprocess;
mod schedule;
mod tree;

use std::collections::{HashMap, HashSet};
use std::time::Instant;

use thiserror::Error;

use crate::intsort::{KeyRecord, SortKey};
use crate::levelspace::{Key, LevelError, LevelSpace, LevelStack};
use crate::metrics::MetricsRecord;
use crate::numeric::{
    coarsen, floor_scale, floor_scale_unchecked, separating_level_unchecked, ExactReal,
    NumericError, ScaleFactor,
};

pub use invariants::{Invariant, InvariantReport, Tally};
pub use preprocess::{preprocess, Transform};
pub use schedule::{MergeEvent, MergeSchedule};
pub use tree::{NodeId, NodeKind, RealId, Resident, Slot, TreeNode};

use tree::Arena;

/// Default ceiling on key bit-length.
pub const DEFAULT_BIT_CAP: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConvertError {
    #[error("no input values")]
    EmptyInput,
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Capacity(Box<CapacityError>),
    #[error("branch needs a leaf with {expected} values, found {found}")]
    NotFull { expected: usize, found: usize },
    #[error("inconsistent structure: {0}")]
    Corrupt(String),
}

/// A pair of values that cannot be told apart within the bit cap.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error(
    "separating {first} (input {first_index}) from {second} (input {second_index}), \
     gap {gap}, needs {required_bits}-bit keys; the cap is {bit_cap}"
)]
pub struct CapacityError {
    pub first: ExactReal,
    pub second: ExactReal,
    pub first_index: usize,
    pub second_index: usize,
    pub gap: ExactReal,
    pub required_bits: u64,
    pub bit_cap: u64,
}

/// Size parameters derived from the input count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConverterConfig {
    pub n: usize,
    /// Integer stand-in for `sqrt(log2 n)`, at least 2.
    pub t: usize,
    /// Merge base `2^t`.
    pub e: u64,
    /// A leaf reaching this many distinct values is split.
    pub leaf_capacity: usize,
    pub bit_cap: u64,
}

fn ceil_log2_usize(n: usize) -> u32 {
    if n <= 1 {
        0
    } else {
        usize::BITS - (n - 1).leading_zeros()
    }
}

impl ConverterConfig {
    pub fn for_len(n: usize) -> Self {
        let log = ceil_log2_usize(n) as usize;
        let mut t = 2;
        while t * t < log {
            t += 1;
        }
        ConverterConfig {
            n,
            t,
            e: 1 << t,
            leaf_capacity: 2 * t - 2,
            bit_cap: DEFAULT_BIT_CAP,
        }
    }

    pub fn with_bit_cap(mut self, bit_cap: u64) -> Self {
        self.bit_cap = bit_cap;
        self
    }

    /// Largest number of levels the merge schedule allows:
    /// `1 + e * ceil(log n / log e)`.
    pub fn level_bound(&self) -> usize {
        let log = ceil_log2_usize(self.n) as usize;
        1 + self.e as usize * log.div_ceil(self.t)
    }
}

/// Result of the Match descent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchResult {
    pub level_index: usize,
    pub factor: ScaleFactor,
    /// Node owning the matched table position.
    pub node: NodeId,
    /// First-inserted value below that node, if any.
    pub r0: Option<ExactReal>,
    pub probes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InsertOutcome {
    Duplicate,
    Appended,
    NewLeaf,
    Branched { pushed: bool },
}

#[derive(Debug, Clone, Copy, Default)]
struct Counters {
    match_steps: u64,
    levels_pushed: u64,
    max_top: u64,
    merge_rekeys: u64,
    ladder_writes: u64,
    branch_count: u64,
    max_key_bits: u64,
}

#[derive(Debug)]
pub struct Converter {
    config: ConverterConfig,
    space: LevelSpace<Slot>,
    nodes: Arena,
    root: NodeId,
    /// Nodes by level index.
    level_nodes: Vec<Vec<NodeId>>,
    reals: Vec<Resident>,
    inserted: usize,
    schedule: MergeSchedule,
    merge_log: Vec<MergeEvent>,
    flattened: bool,
    counters: Counters,
    checking: bool,
    report: InvariantReport,
}

impl Converter {
    pub fn new(config: ConverterConfig) -> Self {
        let mut nodes = Arena::default();
        let root = nodes.alloc(TreeNode::leaf(0, Key::default(), None, Vec::new()));
        let mut space = LevelSpace::new();
        space
            .insert_vacant(0, Key::default(), Slot::Node(root))
            .expect("root key fits level 0");
        Converter {
            config,
            space,
            nodes,
            root,
            level_nodes: vec![vec![root]],
            reals: Vec::new(),
            inserted: 0,
            schedule: MergeSchedule::new(config.e),
            merge_log: Vec::new(),
            flattened: false,
            counters: Counters::default(),
            checking: false,
            report: InvariantReport::default(),
        }
    }

    /// Turns on the per-operation invariant checks.
    pub fn with_checks(mut self) -> Self {
        self.checking = true;
        self
    }

    pub fn config(&self) -> &ConverterConfig {
        &self.config
    }

    pub fn stack(&self) -> &LevelStack {
        self.space.stack()
    }

    pub fn space(&self) -> &LevelSpace<Slot> {
        &self.space
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> Option<&TreeNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &TreeNode)> {
        self.nodes.iter()
    }

    /// Distinct values in order of first insertion.
    pub fn residents(&self) -> &[Resident] {
        &self.reals
    }

    pub fn inserted(&self) -> usize {
        self.inserted
    }

    pub fn merge_log(&self) -> &[MergeEvent] {
        &self.merge_log
    }

    pub fn report(&self) -> &InvariantReport {
        &self.report
    }

    /// `(value, multiplicity)` of every value stored below the root, sorted.
    pub fn reachable_residents(&self) -> Vec<(ExactReal, usize)> {
        let mut out = Vec::new();
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            match &self.nodes[id].kind {
                NodeKind::Leaf { bucket } => out.extend(
                    bucket
                        .iter()
                        .map(|&r| (self.reals[r].value.clone(), self.reals[r].multiplicity())),
                ),
                NodeKind::Internal { children, .. } => stack.extend(children.values()),
            }
        }
        out.sort();
        out
    }

    /// Counters so far; the timing columns are left at zero.
    pub fn metrics(&self) -> MetricsRecord {
        let c = &self.counters;
        MetricsRecord {
            n: self.inserted as u64,
            probes: self.space.probes(),
            match_steps: c.match_steps,
            levels_pushed: c.levels_pushed,
            max_top: c.max_top,
            merge_rekeys: c.merge_rekeys,
            ladder_writes: c.ladder_writes,
            max_key_bits: c.max_key_bits,
            branch_count: c.branch_count,
            ..MetricsRecord::default()
        }
    }

    fn top(&self) -> usize {
        self.space.top()
    }

    fn factor(&self, index: usize) -> ScaleFactor {
        self.space.factor(index)
    }

    /// Probe budget of one Match call at the current height.
    pub fn probe_budget(&self) -> u64 {
        let top = self.top().max(1);
        u64::from(usize::BITS - 1 - top.leading_zeros()) + 1
    }

    /// Match descent: the largest level index reachable by adding decreasing
    /// powers of two while the probed position stays occupied.
    pub fn find_match(&self, r: &ExactReal) -> Result<MatchResult, ConvertError> {
        let top_factor = self.space.stack().top_factor();
        let key_top = floor_scale(r, top_factor)?;
        self.descend(&key_top)
    }

    fn descend(&self, key_top: &Key) -> Result<MatchResult, ConvertError> {
        let top = self.top();
        let top_factor = self.factor(top);
        let mut probes = 0;
        let mut level_index = 0;
        let mut node = self.root;
        if top == 0 {
            probes += 1;
            if let Some(slot) = self.space.probe(0, key_top)? {
                node = slot.node();
            }
        } else {
            let mut i = usize::BITS - 1 - top.leading_zeros();
            loop {
                let candidate = level_index + (1usize << i);
                if candidate <= top {
                    probes += 1;
                    let key = coarsen(key_top, top_factor, self.factor(candidate));
                    if let Some(slot) = self.space.probe(candidate, &key)? {
                        level_index = candidate;
                        node = slot.node();
                    }
                }
                if i == 0 {
                    break;
                }
                i -= 1;
            }
        }
        let r0 = self.nodes[node].rep.map(|id| self.reals[id].value.clone());
        Ok(MatchResult {
            level_index,
            factor: self.factor(level_index),
            node,
            r0,
            probes,
        })
    }

    /// Inserts the next input value; its input index is the number of values
    /// inserted before it.
    pub fn insert_real(&mut self, r: ExactReal) -> Result<InsertOutcome, ConvertError> {
        let top_factor = self.space.stack().top_factor();
        let key_top = floor_scale(&r, top_factor)?;
        let input_index = self.inserted;
        self.inserted += 1;

        let found = self.descend(&key_top)?;
        self.counters.match_steps += found.probes;
        if self.checking {
            let (used, budget) = (found.probes, self.probe_budget());
            self.report.record(Invariant::ProbeBudget, used <= budget, || {
                format!("match used {used} probes, budget {budget}")
            });
        }

        // Walk down from the matched node to the leaf that owns r's keys.
        let mut current = found.node;
        let leaf = loop {
            match &self.nodes[current].kind {
                NodeKind::Leaf { .. } => break current,
                NodeKind::Internal {
                    child_level,
                    children,
                } => {
                    self.counters.match_steps += 1;
                    let key = coarsen(&key_top, top_factor, self.factor(*child_level));
                    match children.get(&key) {
                        Some(&child) => current = child,
                        None => {
                            let level = *child_level;
                            let rid = self.add_real(r, input_index);
                            let id = self.attach(TreeNode::leaf(level, key, Some(current), vec![rid]))?;
                            self.bump_mass(current);
                            self.after_insert(&[id]);
                            return Ok(InsertOutcome::NewLeaf);
                        }
                    }
                }
            }
        };

        let bucket = self.nodes[leaf].bucket().unwrap_or_default();
        if let Some(&dup) = bucket.iter().find(|&&id| self.reals[id].value == r) {
            self.reals[dup].occurrences.push(input_index);
            self.after_insert(&[leaf]);
            return Ok(InsertOutcome::Duplicate);
        }
        let size = bucket.len();
        let rid = self.add_real(r, input_index);
        if size + 1 < self.config.leaf_capacity {
            if let NodeKind::Leaf { bucket } = &mut self.nodes[leaf].kind {
                bucket.push(rid);
            }
            self.nodes[leaf].rep.get_or_insert(rid);
            self.bump_mass(leaf);
            self.after_insert(&[leaf]);
            Ok(InsertOutcome::Appended)
        } else {
            let (pushed, created) = self.branch(leaf, rid)?;
            self.after_insert(&created);
            Ok(InsertOutcome::Branched { pushed })
        }
    }

    fn add_real(&mut self, value: ExactReal, input_index: usize) -> RealId {
        self.reals.push(Resident {
            value,
            occurrences: vec![input_index],
        });
        self.reals.len() - 1
    }

    /// Adds one to the mass of `id` and all its ancestors.
    fn bump_mass(&mut self, id: NodeId) {
        let mut cur = Some(id);
        while let Some(c) = cur {
            let node = &mut self.nodes[c];
            node.mass += 1;
            cur = node.parent;
        }
    }

    fn after_insert(&mut self, touched: &[NodeId]) {
        self.counters.max_top = self.counters.max_top.max(self.top() as u64);
        if self.checking {
            for &id in touched {
                self.check_ladder(id);
                if self.nodes[id].is_leaf() {
                    self.check_leaf_capacity(id);
                }
            }
            self.check_stack();
        }
    }

    /// Allocates `node`, indexes it at its level, links it under its parent
    /// and installs its ancestor ladder.
    fn attach(&mut self, node: TreeNode) -> Result<NodeId, ConvertError> {
        let (level, key, parent) = (node.level, node.key.clone(), node.parent);
        let id = self.nodes.alloc(node);
        if !self.space.insert_vacant(level, key.clone(), Slot::Node(id))? {
            return Err(ConvertError::Corrupt(format!(
                "position {key} at level {level} is already taken"
            )));
        }
        self.level_nodes[level].push(id);
        if let Some(p) = parent {
            if let NodeKind::Internal { children, .. } = &mut self.nodes[p].kind {
                children.insert(key, id);
            }
        }
        self.install_ladder(id)?;
        Ok(id)
    }

    /// Occupies every vacant ladder position of `id`.
    fn install_ladder(&mut self, id: NodeId) -> Result<(), ConvertError> {
        let (level, key) = (self.nodes[id].level, self.nodes[id].key.clone());
        let from = self.factor(level);
        let mut owner = id;
        let mut x = level;
        loop {
            x &= x.wrapping_sub(1);
            if x == 0 {
                return Ok(());
            }
            while self.nodes[owner].level > x {
                owner = self.nodes[owner]
                    .parent
                    .ok_or_else(|| ConvertError::Corrupt(format!("node {owner} lost its parent")))?;
            }
            let k = coarsen(&key, from, self.factor(x));
            if self.space.probe(x, &k)?.is_none() {
                self.space.insert_vacant(x, k, Slot::Ladder(owner))?;
                self.counters.ladder_writes += 1;
            }
        }
    }

    fn capacity_error(&self, a: RealId, b: RealId, level: ScaleFactor) -> ConvertError {
        let (x, y) = (&self.reals[a], &self.reals[b]);
        ConvertError::Capacity(Box::new(CapacityError {
            first: x.value.clone(),
            second: y.value.clone(),
            first_index: x.occurrences[0],
            second_index: y.occurrences[0],
            gap: (&x.value - &y.value).abs(),
            required_bits: level.bit_length(),
            bit_cap: self.config.bit_cap,
        }))
    }

    /// Splits a full leaf. Public entry point for a leaf one short of
    /// capacity and a new value that belongs under it.
    pub fn branch_leaf(&mut self, leaf: NodeId, r_new: ExactReal) -> Result<(), ConvertError> {
        let expected = self.config.leaf_capacity - 1;
        let node = self
            .nodes
            .get(leaf)
            .ok_or_else(|| ConvertError::Corrupt(format!("no node {leaf}")))?;
        let found = node.bucket().map_or(0, <[_]>::len);
        if found != expected {
            return Err(ConvertError::NotFull { expected, found });
        }
        let key = floor_scale(&r_new, self.factor(node.level))?;
        if key != node.key || node.bucket().unwrap_or_default().iter().any(|&id| self.reals[id].value == r_new) {
            return Err(ConvertError::Corrupt("value does not belong in this leaf".into()));
        }
        let input_index = self.inserted;
        self.inserted += 1;
        let rid = self.add_real(r_new, input_index);
        let (_, created) = self.branch(leaf, rid)?;
        self.after_insert(&created);
        Ok(())
    }

    /// Splits `leaf` after adding `rid`, which brings it to capacity.
    /// Returns whether a level was pushed and the nodes created.
    fn branch(&mut self, leaf: NodeId, rid: RealId) -> Result<(bool, Vec<NodeId>), ConvertError> {
        let cap = self.config.leaf_capacity;
        let t = self.config.t;
        let mut bucket = match &mut self.nodes[leaf].kind {
            NodeKind::Leaf { bucket } => std::mem::take(bucket),
            NodeKind::Internal { .. } => return Err(ConvertError::Corrupt("branching an internal node".into())),
        };
        bucket.push(rid);
        if bucket.len() != cap {
            return Err(ConvertError::NotFull {
                expected: cap,
                found: bucket.len(),
            });
        }
        bucket.sort_by(|&a, &b| self.reals[a].value.cmp(&self.reals[b].value));
        let median = cap / 2 - 1;
        let (m1, m2) = (bucket[median], bucket[median + 1]);

        // Largest level at which the median and its successor still match.
        let top = self.top();
        let top_factor = self.factor(top);
        let k1 = floor_scale_unchecked(&self.reals[m1].value, top_factor);
        let k2 = floor_scale_unchecked(&self.reals[m2].value, top_factor);
        let diff = (k1 ^ k2).bits();
        let mut pushed = false;
        let ls = if diff == 0 {
            let level = separating_level_unchecked(&self.reals[m1].value, &self.reals[m2].value);
            if level.bit_length() > self.config.bit_cap {
                return Err(self.capacity_error(m1, m2, level));
            }
            self.space.push_level(level)?;
            self.level_nodes.push(Vec::new());
            self.counters.levels_pushed += 1;
            pushed = true;
            top
        } else {
            let limit = top_factor.log2() - diff;
            self.space.stack().factors().partition_point(|f| f.log2() <= limit) - 1
        };
        let s = ls + 1;
        let depth = self.nodes[leaf].level;
        let ladder: Vec<usize> = prefixes(s).into_iter().filter(|&c| c > depth).collect();

        self.counters.branch_count += 1;
        {
            let node = &mut self.nodes[leaf];
            node.kind = NodeKind::Internal {
                child_level: ladder[0],
                children: HashMap::new(),
            };
        }
        self.bump_mass(leaf);

        let mut created = Vec::new();
        let mut parent = leaf;
        let (mut lo, mut hi) = (0, bucket.len());
        for (j, &level) in ladder.iter().enumerate() {
            let f = self.factor(level);
            let keys: Vec<Key> = bucket[lo..hi]
                .iter()
                .map(|&id| floor_scale_unchecked(&self.reals[id].value, f))
                .collect();
            let km = &keys[median - lo];
            let below = keys.partition_point(|k| k < km);
            let above = keys.partition_point(|k| k <= km);
            for run in key_runs(&keys, 0, below).into_iter().chain(key_runs(&keys, above, keys.len())) {
                let members = bucket[lo + run.0..lo + run.1].to_vec();
                let key = keys[run.0].clone();
                created.push(self.attach(TreeNode::leaf(level, key, Some(parent), members))?);
            }
            let rest = bucket[lo + below..lo + above].to_vec();
            let key = km.clone();
            (lo, hi) = (lo + below, lo + above);
            if rest.len() < t || j + 1 == ladder.len() {
                created.push(self.attach(TreeNode::leaf(level, key, Some(parent), rest))?);
                break;
            }
            let mut node = TreeNode::leaf(level, key, Some(parent), rest);
            node.kind = NodeKind::Internal {
                child_level: ladder[j + 1],
                children: HashMap::new(),
            };
            let id = self.attach(node)?;
            created.push(id);
            parent = id;
        }

        if self.checking {
            self.check_branch(leaf, &created);
        }
        Ok((pushed, created))
    }

    /// Fires the merges due after `count` insertions, and the final merge of
    /// all levels once `count` reaches `n`.
    pub fn run_merge_schedule(&mut self, count: usize) -> Result<(), ConvertError> {
        for tier in self.schedule.tiers_due(count as u64) {
            let l = self.space.stack().watermark(tier);
            let levels_merged = if l <= self.top() {
                let merged = self.merge_from(l)?;
                self.space.stack_mut().set_tier(l, tier);
                merged
            } else {
                0
            };
            self.merge_log.push(MergeEvent {
                after: count,
                tier: Some(tier),
                levels_merged,
            });
        }
        if count >= self.config.n && !self.flattened {
            self.flatten()?;
        }
        Ok(())
    }

    /// Merges every level above the root into one.
    fn flatten(&mut self) -> Result<(), ConvertError> {
        let levels_merged = if self.top() >= 1 { self.merge_from(1)? } else { 0 };
        self.merge_log.push(MergeEvent {
            after: self.inserted,
            tier: None,
            levels_merged,
        });
        self.flattened = true;
        Ok(())
    }

    /// Collapses levels `l..=top` into one level at index `l` and rebuilds
    /// the part of the tree living there. Returns the number of levels merged.
    fn merge_from(&mut self, l: usize) -> Result<usize, ConvertError> {
        let top = self.top();
        // Nearest ancestor below `l` for each node at or above it.
        let mut anchor_of: HashMap<NodeId, NodeId> = HashMap::new();
        let mut residents: Vec<(RealId, NodeId)> = Vec::new();
        let mut anchors: Vec<NodeId> = Vec::new();
        let mut seen: HashSet<NodeId> = HashSet::new();
        for level in l..=top {
            for &id in &self.level_nodes[level] {
                let node = &self.nodes[id];
                let parent = node
                    .parent
                    .ok_or_else(|| ConvertError::Corrupt(format!("node {id} above the root has no parent")))?;
                let anchor = if self.nodes[parent].level < l {
                    if seen.insert(parent) {
                        anchors.push(parent);
                    }
                    parent
                } else {
                    anchor_of[&parent]
                };
                anchor_of.insert(id, anchor);
                if let NodeKind::Leaf { bucket } = &node.kind {
                    residents.extend(bucket.iter().map(|&r| (r, anchor)));
                }
            }
        }
        for &a in &anchors {
            self.nodes[a].kind = NodeKind::Internal {
                child_level: l,
                children: HashMap::new(),
            };
        }
        for level in l..=top {
            for &id in &self.level_nodes[level] {
                self.nodes.release(id);
            }
        }
        self.level_nodes.truncate(l);
        self.level_nodes.push(Vec::new());

        let reals = &self.reals;
        let nodes = &mut self.nodes;
        let mut created = Vec::new();
        let report = self.space.merge_top_levels(
            l,
            residents.iter().map(|&(r, _)| &reals[r].value),
            |key, i| {
                let id = nodes.alloc(TreeNode::leaf(l, key.clone(), Some(residents[i].1), Vec::new()));
                created.push(id);
                Slot::Node(id)
            },
        )?;
        for (slot, &(rid, _)) in report.placements.iter().zip(&residents) {
            let node = &mut self.nodes[slot.node()];
            if let NodeKind::Leaf { bucket } = &mut node.kind {
                bucket.push(rid);
            }
            node.mass += 1;
            node.rep = Some(node.rep.map_or(rid, |r| r.min(rid)));
        }
        for &id in &created {
            let (key, parent) = (self.nodes[id].key.clone(), self.nodes[id].parent);
            if let Some(p) = parent {
                if let NodeKind::Internal { children, .. } = &mut self.nodes[p].kind {
                    children.insert(key, id);
                }
            }
            self.level_nodes[l].push(id);
            self.install_ladder(id)?;
        }
        self.counters.merge_rekeys += report.rekeyed as u64;

        if self.checking {
            for &id in &created {
                self.check_ladder(id);
                self.check_leaf_capacity(id);
            }
            for &a in &anchors {
                let (mass, level) = (self.nodes[a].mass, self.nodes[a].level);
                let t = self.config.t;
                self.report.record(Invariant::LeafMass, mass >= t || a == self.root, || {
                    format!("merge left internal node at level {level} with mass {mass}")
                });
            }
            self.check_stack();
        }
        Ok(top - l + 1)
    }

    /// Final keys at `L* = max(S[top], separating levels of adjacent values
    /// inside each leaf)`.
    pub fn finalize_keys(&mut self) -> Result<KeyTable, ConvertError> {
        if !self.flattened {
            self.flatten()?;
        }
        if self.checking {
            self.audit();
        }
        let mut factor = self.space.stack().top_factor();
        let mut widest: Option<(RealId, RealId)> = None;
        let leaves: Vec<NodeId> = self.nodes.iter().filter(|(_, n)| n.is_leaf()).map(|(id, _)| id).collect();
        for id in leaves {
            let reals = &self.reals;
            if let NodeKind::Leaf { bucket } = &mut self.nodes[id].kind {
                bucket.sort_by(|&a, &b| reals[a].value.cmp(&reals[b].value));
                for w in bucket.windows(2) {
                    let level = separating_level_unchecked(&reals[w[0]].value, &reals[w[1]].value);
                    if level > factor {
                        factor = level;
                        widest = Some((w[0], w[1]));
                    }
                }
            }
        }
        if factor.bit_length() > self.config.bit_cap {
            let (a, b) = widest.unwrap_or((0, 0));
            return Err(self.capacity_error(a, b, factor));
        }
        self.counters.max_key_bits = factor.bit_length();
        let records = self
            .reals
            .iter()
            .map(|res| KeyRecord {
                key: SortKey(floor_scale_unchecked(&res.value, factor)),
                input_index: res.occurrences[0],
                multiplicity: res.multiplicity(),
            })
            .collect();
        Ok(KeyTable {
            factor,
            max_key_bits: factor.bit_length(),
            records,
            occurrences: self.reals.iter().map(|r| r.occurrences.clone()).collect(),
        })
    }
}

/// Binary prefixes of `s`, ascending: `s` with all but its highest `k` set
/// bits cleared, for each `k`.
fn prefixes(s: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut acc = 0;
    for bit in (0..usize::BITS).rev() {
        if s & (1 << bit) != 0 {
            acc |= 1 << bit;
            out.push(acc);
        }
    }
    out
}

/// Maximal runs of equal keys in `keys[from..to]`, as half-open ranges.
fn key_runs(keys: &[Key], from: usize, to: usize) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    let mut start = from;
    for i in from + 1..=to {
        if i == to || keys[i] != keys[start] {
            if start < to {
                runs.push((start, i));
            }
            start = i;
        }
    }
    runs
}

/// Final keys, one record per distinct value in order of first appearance.
#[derive(Debug, Clone)]
pub struct KeyTable {
    /// The level `L*` at which all keys were taken.
    pub factor: ScaleFactor,
    pub max_key_bits: u64,
    pub records: Vec<KeyRecord>,
    /// Input positions carrying each distinct value, ascending.
    pub occurrences: Vec<Vec<usize>>,
}

/// Test-only corruption of the key table.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Fault {
    SwapFirstKeys,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConvertOptions {
    pub bit_cap: u64,
    pub check_invariants: bool,
    #[doc(hidden)]
    pub fault: Option<Fault>,
}

impl Default for ConvertOptions {
    fn default() -> Self {
        ConvertOptions {
            bit_cap: DEFAULT_BIT_CAP,
            check_invariants: false,
            fault: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Conversion {
    pub keys: KeyTable,
    pub transform: Transform,
    /// Counters and the insert, merge and finalize timings.
    pub metrics: MetricsRecord,
    pub report: InvariantReport,
    pub merge_log: Vec<MergeEvent>,
}

fn elapsed_ns(start: Instant) -> u64 {
    start.elapsed().as_nanos() as u64
}

/// Preprocesses, inserts every value with its scheduled merges and extracts
/// the final keys.
pub fn convert(values: &[ExactReal], options: &ConvertOptions) -> Result<Conversion, ConvertError> {
    let (unit, transform) = preprocess(values)?;
    let config = ConverterConfig::for_len(unit.len()).with_bit_cap(options.bit_cap);
    let mut conv = Converter::new(config);
    if options.check_invariants {
        conv = conv.with_checks();
    }
    let to_original = |e: ConvertError| match e {
        ConvertError::Capacity(mut c) => {
            c.first = transform.invert(&c.first);
            c.second = transform.invert(&c.second);
            c.gap = &c.gap * &transform.span;
            ConvertError::Capacity(c)
        }
        other => other,
    };

    let (mut insert_ns, mut merge_ns) = (0, 0);
    for (i, r) in unit.into_iter().enumerate() {
        let start = Instant::now();
        conv.insert_real(r).map_err(&to_original)?;
        insert_ns += elapsed_ns(start);
        let start = Instant::now();
        conv.run_merge_schedule(i + 1).map_err(&to_original)?;
        merge_ns += elapsed_ns(start);
    }
    let start = Instant::now();
    let keys = conv.finalize_keys().map_err(&to_original)?;
    let finalize_ns = elapsed_ns(start);

    let metrics = MetricsRecord {
        insert_ns,
        merge_ns,
        finalize_ns,
        ..conv.metrics()
    };
    Ok(Conversion {
        keys,
        transform,
        metrics,
        report: conv.report.clone(),
        merge_log: conv.merge_log.clone(),
    })
}
