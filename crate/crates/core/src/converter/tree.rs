use std::collections::HashMap;
use std::ops::{Index, IndexMut};

use crate::levelspace::Key;
use crate::numeric::ExactReal;

pub type NodeId = usize;
/// Index of a distinct input value, assigned in order of first insertion.
pub type RealId = usize;

/// What a table entry points at.
///
/// `Node(a)` is the position of node `a` itself. `Ladder(a)` is an ancestor
/// ladder entry lying on the path segment owned by `a`, i.e. at a level in
/// `[level(a), child_level(a))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Node(NodeId),
    Ladder(NodeId),
}

impl Slot {
    pub fn node(self) -> NodeId {
        match self {
            Slot::Node(id) | Slot::Ladder(id) => id,
        }
    }
}

/// A distinct input value with every input position that carried it.
#[derive(Clone, Debug)]
pub struct Resident {
    pub value: ExactReal,
    pub occurrences: Vec<usize>,
}

impl Resident {
    pub fn multiplicity(&self) -> usize {
        self.occurrences.len()
    }
}

#[derive(Clone, Debug)]
pub enum NodeKind {
    Leaf {
        bucket: Vec<RealId>,
    },
    Internal {
        /// Level shared by all children; they carry distinct keys there.
        child_level: usize,
        children: HashMap<Key, NodeId>,
    },
}

/// A node of the key tree: every value below it has `key` at `level`.
#[derive(Clone, Debug)]
pub struct TreeNode {
    pub(crate) level: usize,
    pub(crate) key: Key,
    pub(crate) parent: Option<NodeId>,
    /// First-inserted value below the node.
    pub(crate) rep: Option<RealId>,
    /// Distinct values below the node.
    pub(crate) mass: usize,
    pub(crate) kind: NodeKind,
}

impl TreeNode {
    pub(crate) fn leaf(level: usize, key: Key, parent: Option<NodeId>, bucket: Vec<RealId>) -> Self {
        TreeNode {
            level,
            key,
            parent,
            rep: bucket.iter().copied().min(),
            mass: bucket.len(),
            kind: NodeKind::Leaf { bucket },
        }
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf { .. })
    }

    pub fn level_index(&self) -> usize {
        self.level
    }

    pub fn key(&self) -> &Key {
        &self.key
    }

    pub fn parent(&self) -> Option<NodeId> {
        self.parent
    }

    pub fn representative(&self) -> Option<RealId> {
        self.rep
    }

    pub fn bucket(&self) -> Option<&[RealId]> {
        match &self.kind {
            NodeKind::Leaf { bucket } => Some(bucket),
            NodeKind::Internal { .. } => None,
        }
    }

    /// Distinct values stored at leaves below this node.
    pub fn leaf_mass(&self) -> usize {
        self.mass
    }

    pub fn child_level(&self) -> Option<usize> {
        match &self.kind {
            NodeKind::Internal { child_level, .. } => Some(*child_level),
            NodeKind::Leaf { .. } => None,
        }
    }

    pub fn children(&self) -> impl Iterator<Item = (&Key, NodeId)> {
        let map = match &self.kind {
            NodeKind::Internal { children, .. } => Some(children),
            NodeKind::Leaf { .. } => None,
        };
        map.into_iter().flat_map(|m| m.iter().map(|(k, &v)| (k, v)))
    }
}

/// Slot arena with id reuse.
#[derive(Clone, Debug, Default)]
pub struct Arena {
    slots: Vec<Option<TreeNode>>,
    free: Vec<NodeId>,
}

impl Arena {
    pub fn alloc(&mut self, node: TreeNode) -> NodeId {
        match self.free.pop() {
            Some(id) => {
                self.slots[id] = Some(node);
                id
            }
            None => {
                self.slots.push(Some(node));
                self.slots.len() - 1
            }
        }
    }

    pub fn release(&mut self, id: NodeId) {
        if self.slots[id].take().is_some() {
            self.free.push(id);
        }
    }

    pub fn get(&self, id: NodeId) -> Option<&TreeNode> {
        self.slots.get(id).and_then(Option::as_ref)
    }

    pub fn live(&self) -> usize {
        self.slots.len() - self.free.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (NodeId, &TreeNode)> {
        self.slots
            .iter()
            .enumerate()
            .filter_map(|(id, n)| n.as_ref().map(|n| (id, n)))
    }
}

impl Index<NodeId> for Arena {
    type Output = TreeNode;
    fn index(&self, id: NodeId) -> &TreeNode {
        self.slots[id].as_ref().expect("live node")
    }
}

impl IndexMut<NodeId> for Arena {
    fn index_mut(&mut self, id: NodeId) -> &mut TreeNode {
        self.slots[id].as_mut().expect("live node")
    }
}
