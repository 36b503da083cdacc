//! The annotated decision tree: splits, leaf dictionaries and rebuild counters.
//!
//! Nodes live in an arena and are addressed by [`NodeId`]. A rebuilt subtree
//! reuses the slot of its root, so ids of nodes outside the rebuilt subtree
//! never change.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::example::{FeatureKind, Label, Schema};
use crate::multiset::{ActiveMultiset, LabelHistogram};

/// A split `(feature, threshold)`.
///
/// For real features, `x_j <= threshold` goes left. For categorical features
/// the threshold is a symbol code and `x_j == threshold` goes left.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub kind: FeatureKind,
}

impl Split {
    pub fn real(feature: usize, threshold: f64) -> Self {
        Split {
            feature,
            threshold,
            kind: FeatureKind::Real,
        }
    }

    pub fn categorical(feature: usize, symbol: f64) -> Self {
        Split {
            feature,
            threshold: symbol,
            kind: FeatureKind::Categorical,
        }
    }

    #[inline]
    pub fn goes_left(&self, x: &[f64]) -> bool {
        let v = x[self.feature];
        match self.kind {
            FeatureKind::Real => v <= self.threshold,
            FeatureKind::Categorical => v == self.threshold,
        }
    }
}

/// Feasibility targets `(alpha, beta)`, pruning thresholds `(k, h)` and the
/// rebuild budget `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityParams {
    pub alpha: f64,
    pub beta: f64,
    pub k: u64,
    /// Maximum depth; `None` is unbounded.
    pub h: Option<usize>,
    pub epsilon: f64,
}

impl FeasibilityParams {
    pub fn new(alpha: f64, beta: f64, k: u64, h: Option<usize>, epsilon: f64) -> Result<Self> {
        let p = FeasibilityParams {
            alpha,
            beta,
            k,
            h,
            epsilon,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParams(format!(
                "alpha must lie in [0, 1], got {}",
                self.alpha
            )));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::InvalidParams(format!(
                "beta must lie in [0, 1], got {}",
                self.beta
            )));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "epsilon must be finite and non-negative, got {}",
                self.epsilon
            )));
        }
        if self.k == 0 {
            return Err(Error::InvalidParams("k must be positive".into()));
        }
        if self.h == Some(0) {
            return Err(Error::InvalidParams("h must be positive".into()));
        }
        Ok(())
    }

    /// True iff `0 < epsilon < min(1/(k+1), alpha/5, beta/12.5)`, the regime
    /// in which every maintained tree is certified feasible.
    pub fn guaranteed(&self) -> bool {
        let bound = (1.0 / (self.k as f64 + 1.0))
            .min(self.alpha / 5.0)
            .min(self.beta / 12.5);
        self.epsilon > 0.0 && self.epsilon < bound
    }

    pub(crate) fn at_max_depth(&self, depth: usize) -> bool {
        self.h == Some(depth)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone)]
pub struct Leaf {
    pub(crate) examples: ActiveMultiset,
    pub(crate) label: Label,
}

impl Leaf {
    pub(crate) fn new(examples: ActiveMultiset) -> Self {
        let label = examples.label_histogram().majority();
        Leaf { examples, label }
    }

    pub fn examples(&self) -> &ActiveMultiset {
        &self.examples
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn label_histogram(&self) -> LabelHistogram {
        self.examples.label_histogram()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Internal {
    pub(crate) split: Split,
    pub(crate) left: NodeId,
    pub(crate) right: NodeId,
    pub(crate) gain: f64,
}

impl Internal {
    pub fn split(&self) -> Split {
        self.split
    }

    pub fn left(&self) -> NodeId {
        self.left
    }

    pub fn right(&self) -> NodeId {
        self.right
    }

    /// Gain of the split on the multiset the node was built from.
    pub fn build_gain(&self) -> f64 {
        self.gain
    }
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Leaf(Leaf),
    Internal(Internal),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub(crate) kind: NodeKind,
    /// Updates routed through this node since it was built, `c(v)`.
    pub(crate) counter_c: u64,
    /// Size of the multiset this node was built from, `s(v)`.
    pub(crate) counter_s: u64,
    pub(crate) depth: usize,
}

impl Node {
    pub fn kind(&self) -> &NodeKind {
        &self.kind
    }

    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf(_))
    }

    pub fn as_leaf(&self) -> Option<&Leaf> {
        match &self.kind {
            NodeKind::Leaf(l) => Some(l),
            NodeKind::Internal(_) => None,
        }
    }

    pub fn as_internal(&self) -> Option<&Internal> {
        match &self.kind {
            NodeKind::Internal(i) => Some(i),
            NodeKind::Leaf(_) => None,
        }
    }

    pub fn counter_c(&self) -> u64 {
        self.counter_c
    }

    pub fn counter_s(&self) -> u64 {
        self.counter_s
    }

    pub fn depth(&self) -> usize {
        self.depth
    }
}

#[derive(Debug, Clone, Default)]
pub(crate) struct Arena {
    slots: Vec<Option<Node>>,
    free: Vec<u32>,
}

impl Arena {
    pub(crate) fn take(&mut self, id: NodeId) -> Node {
        let node = self.slots[id.index()].take().expect("live node");
        self.free.push(id.0);
        node
    }

    pub(crate) fn put(&mut self, id: NodeId, node: Node) {
        let slot = &mut self.slots[id.index()];
        debug_assert!(slot.is_none());
        *slot = Some(node);
    }

    /// Hands out an empty slot; the caller must `put` a node there before
    /// the tree is observed.
    pub(crate) fn alloc_vacant(&mut self) -> NodeId {
        match self.free.pop() {
            Some(i) => NodeId(i),
            None => {
                self.slots.push(None);
                NodeId((self.slots.len() - 1) as u32)
            }
        }
    }

    /// Empties a slot without freeing it; the caller refills it with `put`.
    pub(crate) fn detach(&mut self, id: NodeId) -> Node {
        self.slots[id.index()].take().expect("live node")
    }

    pub(crate) fn get(&self, id: NodeId) -> &Node {
        self.slots[id.index()].as_ref().expect("live node")
    }

    pub(crate) fn get_mut(&mut self, id: NodeId) -> &mut Node {
        self.slots[id.index()].as_mut().expect("live node")
    }

    pub(crate) fn live(&self) -> usize {
        self.slots.len() - self.free.len()
    }
}

/// Cumulative rebuild accounting.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RebuildStats {
    /// Number of `Update` calls that triggered a rebuild.
    pub rebuilds: u64,
    /// Sum over rebuilds of the size of the rebuilt multiset.
    pub example_touches: u64,
    /// Number of insert/delete updates applied.
    pub updates: u64,
    /// Largest number of nodes on a root-to-leaf path seen after any update.
    pub max_path_nodes: usize,
}

/// A decision tree `(T, Sigma, L)` with per-node counters and per-leaf
/// example dictionaries.
#[derive(Debug, Clone)]
pub struct DecisionTree {
    pub(crate) schema: Arc<Schema>,
    pub(crate) params: FeasibilityParams,
    pub(crate) arena: Arena,
    pub(crate) root: NodeId,
    pub(crate) stats: RebuildStats,
}

impl DecisionTree {
    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn params(&self) -> &FeasibilityParams {
        &self.params
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        self.arena.get(id)
    }

    pub fn node_count(&self) -> usize {
        self.arena.live()
    }

    pub fn stats(&self) -> RebuildStats {
        self.stats
    }

    /// Leaf reached by `x`.
    pub fn leaf_for(&self, x: &[f64]) -> NodeId {
        let mut id = self.root;
        loop {
            match &self.arena.get(id).kind {
                NodeKind::Leaf(_) => return id,
                NodeKind::Internal(int) => {
                    id = if int.split.goes_left(x) {
                        int.left
                    } else {
                        int.right
                    };
                }
            }
        }
    }

    /// Root-to-leaf path followed by `x`.
    pub fn path(&self, x: &[f64]) -> Vec<NodeId> {
        let mut path = Vec::new();
        let mut id = self.root;
        loop {
            path.push(id);
            match &self.arena.get(id).kind {
                NodeKind::Leaf(_) => return path,
                NodeKind::Internal(int) => {
                    id = if int.split.goes_left(x) {
                        int.left
                    } else {
                        int.right
                    };
                }
            }
        }
    }

    /// Nodes of the subtree rooted at `id`, in preorder.
    pub fn subtree(&self, id: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![id];
        while let Some(id) = stack.pop() {
            out.push(id);
            if let NodeKind::Internal(int) = &self.arena.get(id).kind {
                stack.push(int.right);
                stack.push(int.left);
            }
        }
        out
    }

    /// All live nodes in preorder from the root.
    pub fn nodes(&self) -> Vec<NodeId> {
        self.subtree(self.root)
    }

    pub fn leaves(&self) -> impl Iterator<Item = (NodeId, &Leaf)> + '_ {
        self.nodes()
            .into_iter()
            .filter_map(move |id| self.arena.get(id).as_leaf().map(|l| (id, l)))
    }

    /// Height counted in edges; a single leaf has height 0.
    pub fn height(&self) -> usize {
        let root_depth = self.arena.get(self.root).depth;
        self.leaves()
            .map(|(id, _)| self.arena.get(id).depth - root_depth)
            .max()
            .unwrap_or(0)
    }

    /// Number of active examples, summed over the leaf dictionaries.
    pub fn len(&self) -> u64 {
        self.leaves().map(|(_, l)| l.examples.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Union of all leaf dictionaries.
    pub fn active_multiset(&self) -> ActiveMultiset {
        let mut out = ActiveMultiset::new(self.schema.clone());
        for (_, leaf) in self.leaves() {
            for (e, &n) in leaf.examples.iter() {
                out.insert_n(e.clone(), n);
            }
        }
        out
    }
}
