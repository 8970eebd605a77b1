//! Runtime checks of the structural invariants.
//!
//! Local checks run after every insertion, Branch and merge and only look at
//! the nodes that operation touched; [`Converter::audit`] walks everything.

use std::collections::HashSet;
use std::fmt;

use crate::numeric::{coarsen, floor_scale_unchecked};

use super::tree::{NodeId, NodeKind, Slot};
use super::Converter;

const MAX_MESSAGES: usize = 20;

/// Pass/fail tally of one invariant.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Tally {
    pub checked: u64,
    pub violated: u64,
}

impl Tally {
    pub fn ok(&self) -> bool {
        self.violated == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Invariant {
    /// Ancestor ladder of every node present in the tables.
    Ladder,
    /// Leaf buckets hold fewer than `leaf_capacity` distinct values.
    LeafCapacity,
    /// Leaves produced by Branch hold fewer than `t` values.
    BranchLeaves,
    /// Internal nodes keep at least `t` values below them.
    LeafMass,
    /// Levels strictly increase and the stack respects its height bound.
    StackBound,
    /// Each Match descent stays within `floor(log top) + 1` probes.
    ProbeBudget,
    /// Keys, parent links, table slots and masses agree (full audit).
    Structure,
}

impl Invariant {
    pub const ALL: [Invariant; 7] = [
        Invariant::Ladder,
        Invariant::LeafCapacity,
        Invariant::BranchLeaves,
        Invariant::LeafMass,
        Invariant::StackBound,
        Invariant::ProbeBudget,
        Invariant::Structure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Invariant::Ladder => "ladder completeness",
            Invariant::LeafCapacity => "leaf capacity",
            Invariant::BranchLeaves => "branch leaf size",
            Invariant::LeafMass => "leaf mass",
            Invariant::StackBound => "stack bound",
            Invariant::ProbeBudget => "probe budget",
            Invariant::Structure => "structure audit",
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct InvariantReport {
    tallies: [Tally; 7],
    /// First few violation messages.
    pub messages: Vec<String>,
}

impl InvariantReport {
    pub fn tally(&self, which: Invariant) -> Tally {
        self.tallies[which.slot()]
    }

    pub fn passed(&self) -> bool {
        self.tallies.iter().all(Tally::ok)
    }

    pub fn record(&mut self, which: Invariant, ok: bool, message: impl FnOnce() -> String) {
        let t = &mut self.tallies[which.slot()];
        t.checked += 1;
        if !ok {
            t.violated += 1;
            if self.messages.len() < MAX_MESSAGES {
                self.messages.push(format!("{}: {}", which.name(), message()));
            }
        }
    }
}

impl fmt::Display for InvariantReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for which in Invariant::ALL {
            let t = self.tally(which);
            let verdict = if t.ok() { "PASS" } else { "FAIL" };
            writeln!(
                f,
                "{:<20} {verdict} ({} checks, {} violations)",
                which.name(),
                t.checked,
                t.violated
            )?;
        }
        for m in &self.messages {
            writeln!(f, "  {m}")?;
        }
        Ok(())
    }
}

impl Converter {
    /// Whether every ladder position of `id` is occupied.
    pub(crate) fn ladder_complete(&self, id: NodeId) -> bool {
        let node = &self.nodes[id];
        let stack = self.space.stack();
        let fd = stack.factor(node.level);
        let mut x = node.level;
        while x > 0 {
            x &= x - 1;
            let key = coarsen(&node.key, fd, stack.factor(x));
            if !self.space.table(x).contains(&key) {
                return false;
            }
        }
        true
    }

    pub(crate) fn check_ladder(&mut self, id: NodeId) {
        let ok = self.ladder_complete(id);
        let level = self.nodes[id].level;
        self.report
            .record(super::Invariant::Ladder, ok, || format!("node at level {level} misses a ladder entry"));
    }

    pub(crate) fn check_leaf_capacity(&mut self, id: NodeId) {
        let size = self.nodes[id].bucket().map_or(0, <[_]>::len);
        let cap = self.config.leaf_capacity;
        self.report.record(Invariant::LeafCapacity, size < cap, || {
            format!("leaf holds {size} values, capacity {cap}")
        });
    }

    pub(crate) fn check_stack(&mut self) {
        let stack = self.space.stack();
        let increasing = stack.is_strictly_increasing();
        let levels = stack.len();
        let bound = self.config.level_bound();
        self.report.record(Invariant::StackBound, increasing && levels <= bound, || {
            format!("{levels} levels (bound {bound}), increasing: {increasing}")
        });
    }

    /// Postcondition of a Branch that created `created` below `split`.
    pub(crate) fn check_branch(&mut self, split: NodeId, created: &[NodeId]) {
        let t = self.config.t;
        for &id in std::iter::once(&split).chain(created) {
            let node = &self.nodes[id];
            let (level, mass) = (node.level, node.mass);
            match node.bucket() {
                Some(bucket) => {
                    let size = bucket.len();
                    self.report.record(Invariant::BranchLeaves, size < t, || {
                        format!("leaf at level {level} kept {size} values, t = {t}")
                    });
                }
                None => self.report.record(Invariant::LeafMass, mass >= t, || {
                    format!("internal node at level {level} has mass {mass}, t = {t}")
                }),
            }
            self.check_ladder(id);
        }
    }

    /// Walks the whole structure and cross-checks it against the tables.
    pub fn audit(&mut self) {
        let mut problems: Vec<String> = Vec::new();
        let stack = self.space.stack().clone();
        let mut seen_slots = 0usize;

        for (id, node) in self.nodes.iter() {
            let f = stack.factor(node.level);
            // own slot
            match self.space.table(node.level).get(&node.key) {
                Some(Slot::Node(x)) if *x == id => seen_slots += 1,
                other => problems.push(format!("node {id} at level {} has slot {other:?}", node.level)),
            }
            // parent linkage
            if let Some(p) = node.parent {
                match self.nodes.get(p) {
                    Some(parent) => {
                        let expected = coarsen(&node.key, f, stack.factor(parent.level));
                        let linked = match &parent.kind {
                            NodeKind::Internal { child_level, children } => {
                                *child_level == node.level && children.get(&node.key) == Some(&id)
                            }
                            NodeKind::Leaf { .. } => false,
                        };
                        if expected != parent.key || !linked {
                            problems.push(format!("node {id} is not a consistent child of {p}"));
                        }
                    }
                    None => problems.push(format!("node {id} has a dead parent")),
                }
            } else if id != self.root {
                problems.push(format!("node {id} has no parent"));
            }
            // mass and keys
            match &node.kind {
                NodeKind::Leaf { bucket } => {
                    let distinct: HashSet<_> = bucket.iter().map(|&r| &self.reals[r].value).collect();
                    if distinct.len() != bucket.len() || node.mass != bucket.len() {
                        problems.push(format!("leaf {id} has duplicate values or a stale mass"));
                    }
                    for &r in bucket {
                        if floor_scale_unchecked(&self.reals[r].value, f) != node.key {
                            problems.push(format!("value {r} in leaf {id} has the wrong key"));
                        }
                    }
                    if node.rep != bucket.iter().copied().min() {
                        problems.push(format!("leaf {id} has a stale representative"));
                    }
                }
                NodeKind::Internal { children, child_level } => {
                    let total: usize = children.values().map(|&c| self.nodes[c].mass).sum();
                    if total != node.mass || *child_level <= node.level || children.is_empty() {
                        problems.push(format!("internal node {id} has mass {} but children sum to {total}", node.mass));
                    }
                }
            }
            if !self.ladder_complete(id) {
                problems.push(format!("node {id} at level {} misses a ladder entry", node.level));
            }
        }

        // ladder slots must sit on the segment owned by a live internal node
        for (level, table) in self.space.tables().iter().enumerate() {
            for (key, slot) in table.iter() {
                if let Slot::Ladder(owner) = slot {
                    let ok = self.nodes.get(*owner).is_some_and(|o| {
                        let within = match o.child_level() {
                            Some(cl) => o.level <= level && level < cl,
                            None => false,
                        };
                        within && coarsen(key, stack.factor(level), stack.factor(o.level)) == o.key
                    });
                    if !ok {
                        problems.push(format!("ladder slot at level {level} has a bad owner {owner}"));
                    }
                }
            }
        }
        if seen_slots != self.nodes.live() {
            problems.push("some nodes are missing from the tables".to_string());
        }
        let stored: usize = self.reals.len();
        if self.nodes[self.root].mass != stored {
            problems.push(format!("root mass {} but {stored} distinct values stored", self.nodes[self.root].mass));
        }

        if problems.is_empty() {
            self.report.record(Invariant::Structure, true, String::new);
        }
        for p in problems {
            self.report.record(Invariant::Structure, false, || p);
        }
        self.check_stack();
    }
}
