//! Insertions, deletions and label queries against a maintained tree.
//!
//! Each update walks the root-to-leaf path of its example, increments the
//! counter `c(v)` of every node on it and rebuilds from scratch as soon as
//! some `c(v)` exceeds `epsilon * s(v)`. The rebuilt subtree is rooted at the
//! highest ancestor `u` on the path with `s(u) <= 2^ceil(log2 s(v))`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::build::{build_auto, build_into};
use crate::error::Result;
use crate::example::{Label, LabeledExample, Schema};
use crate::multiset::ActiveMultiset;
use crate::tree::{DecisionTree, FeasibilityParams, NodeId, NodeKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateOp {
    Insert,
    Delete,
}

/// One request of an update sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum UpdateRequest {
    Insert(LabeledExample),
    Delete(LabeledExample),
    /// Label query; carries no label.
    Label(Vec<f64>),
}

/// A subtree replaced during an update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rebuild {
    /// Root of the new subtree; same id as the root it replaced.
    pub root: NodeId,
    /// Node whose counter exceeded its budget.
    pub trigger: NodeId,
    /// Size of the multiset the subtree was rebuilt from.
    pub size: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UpdateOutcome {
    pub rebuild: Option<Rebuild>,
}

impl DecisionTree {
    /// The tree on an empty active set: one leaf labeled 0.
    pub fn new(schema: Arc<Schema>, params: FeasibilityParams) -> Result<Self> {
        Self::from_multiset(ActiveMultiset::new(schema), params)
    }

    /// Builds a tree on `s` at depth 0.
    pub fn from_multiset(s: ActiveMultiset, params: FeasibilityParams) -> Result<Self> {
        params.validate()?;
        let mut tree = build_auto(s, 0, &params);
        tree.stats.max_path_nodes = tree.height() + 1;
        Ok(tree)
    }

    /// Label of the leaf reached by `x`.
    pub fn query(&self, x: &[f64]) -> Result<Label> {
        self.schema.validate(x)?;
        let leaf = self.leaf_for(x);
        Ok(self
            .node(leaf)
            .as_leaf()
            .expect("routing ends at a leaf")
            .label())
    }

    pub fn insert(&mut self, e: LabeledExample) -> Result<UpdateOutcome> {
        self.update(e, UpdateOp::Insert)
    }

    pub fn delete(&mut self, e: LabeledExample) -> Result<UpdateOutcome> {
        self.update(e, UpdateOp::Delete)
    }

    /// Applies one insertion or deletion. Deleting an example that is not
    /// active fails without changing the tree.
    pub fn update(&mut self, e: LabeledExample, op: UpdateOp) -> Result<UpdateOutcome> {
        self.schema.validate(e.features())?;
        let path = self.path(e.features());
        let leaf_id = *path.last().expect("non-empty path");

        let NodeKind::Leaf(leaf) = &mut self.arena.get_mut(leaf_id).kind else {
            unreachable!("routing ends at a leaf")
        };
        match op {
            UpdateOp::Insert => leaf.examples.insert_n(e, 1),
            UpdateOp::Delete => leaf.examples.delete(&e)?,
        }
        leaf.label = leaf.examples.label_histogram().majority();
        self.stats.updates += 1;

        let eps = self.params.epsilon;
        for (i, &id) in path.iter().enumerate() {
            let node = self.arena.get_mut(id);
            node.counter_c += 1;
            if node.counter_c as f64 > eps * node.counter_s as f64 {
                let cap = node.counter_s.next_power_of_two();
                let at = path[..=i]
                    .iter()
                    .position(|&u| self.arena.get(u).counter_s <= cap)
                    .expect("the trigger node itself qualifies");
                let size = self.rebuild(path[at]);
                return Ok(UpdateOutcome {
                    rebuild: Some(Rebuild {
                        root: path[at],
                        trigger: id,
                        size,
                    }),
                });
            }
        }
        Ok(UpdateOutcome::default())
    }

    /// Applies requests in order and returns the answers to label queries.
    pub fn run_sequence<I>(&mut self, requests: I) -> Result<Vec<Label>>
    where
        I: IntoIterator<Item = UpdateRequest>,
    {
        let mut answers = Vec::new();
        for r in requests {
            match r {
                UpdateRequest::Insert(e) => {
                    self.update(e, UpdateOp::Insert)?;
                }
                UpdateRequest::Delete(e) => {
                    self.update(e, UpdateOp::Delete)?;
                }
                UpdateRequest::Label(x) => answers.push(self.query(&x)?),
            }
        }
        Ok(answers)
    }

    /// Rebuilds the subtree rooted at `at` from its leaf dictionaries,
    /// keeping `at` as the id of the new root. Returns the multiset size.
    fn rebuild(&mut self, at: NodeId) -> u64 {
        let depth = self.arena.get(at).depth;
        let mut entries = Vec::new();
        for id in self.subtree(at) {
            let node = if id == at {
                self.arena.detach(id)
            } else {
                self.arena.take(id)
            };
            if let NodeKind::Leaf(leaf) = node.kind {
                entries.extend(leaf.examples.into_entries());
            }
        }
        let size: u64 = entries.iter().map(|(_, n)| n).sum();

        let schema = self.schema.clone();
        build_into(&mut self.arena, at, &schema, entries, depth, &self.params);

        self.stats.rebuilds += 1;
        self.stats.example_touches += size;
        let deepest = self
            .subtree(at)
            .into_iter()
            .map(|id| self.arena.get(id).depth)
            .max()
            .unwrap_or(depth);
        let root_depth = self.arena.get(self.root).depth;
        self.stats.max_path_nodes = self.stats.max_path_nodes.max(deepest - root_depth + 1);
        size
    }
}

impl From<(LabeledExample, UpdateOp)> for UpdateRequest {
    fn from((e, op): (LabeledExample, UpdateOp)) -> Self {
        match op {
            UpdateOp::Insert => UpdateRequest::Insert(e),
            UpdateOp::Delete => UpdateRequest::Delete(e),
        }
    }
}

impl UpdateRequest {
    pub fn op(&self) -> Option<UpdateOp> {
        match self {
            UpdateRequest::Insert(_) => Some(UpdateOp::Insert),
            UpdateRequest::Delete(_) => Some(UpdateOp::Delete),
            UpdateRequest::Label(_) => None,
        }
    }
}

impl std::fmt::Display for UpdateOp {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UpdateOp::Insert => "ins",
            UpdateOp::Delete => "del",
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::tree::Split;

    fn ex(x: &[f64], y: Label) -> LabeledExample {
        LabeledExample::new(x.to_vec(), y).unwrap()
    }

    fn params(eps: f64) -> FeasibilityParams {
        FeasibilityParams::new(0.0, 0.0, 1, Some(10), eps).unwrap()
    }

    #[test]
    fn empty_tree_is_zero_leaf() {
        let t = DecisionTree::new(Schema::real(2), params(0.5)).unwrap();
        assert_eq!(t.query(&[3.0, 4.0]).unwrap(), 0);
        assert!(t.query(&[3.0]).is_err());
    }

    #[test]
    fn single_leaf_labeled_one() {
        let s = ActiveMultiset::from_examples(Schema::real(1), vec![ex(&[1.0], 1), ex(&[2.0], 1)])
            .unwrap();
        let t = DecisionTree::from_multiset(s, params(0.5)).unwrap();
        assert!(t.node(t.root()).is_leaf());
        assert_eq!(t.query(&[100.0]).unwrap(), 1);
    }

    #[test]
    fn query_follows_threshold() {
        let s = ActiveMultiset::from_examples(
            Schema::real(1),
            vec![ex(&[-1.0], 0), ex(&[0.0], 0), ex(&[1.0], 1), ex(&[2.0], 1)],
        )
        .unwrap();
        let t = DecisionTree::from_multiset(s, params(0.5)).unwrap();
        assert_eq!(
            t.node(t.root()).as_internal().unwrap().split(),
            Split::real(0, 0.0)
        );
        assert_eq!(t.query(&[-1.0]).unwrap(), 0);
        assert_eq!(t.query(&[0.5]).unwrap(), 1);
    }

    /// Four examples, all on one side of every split.
    fn four_pure() -> DecisionTree {
        let s = ActiveMultiset::from_examples(Schema::real(1), (0..4).map(|i| ex(&[i as f64], 1)))
            .unwrap();
        DecisionTree::from_multiset(s, params(0.5)).unwrap()
    }

    #[test]
    fn strict_trigger() {
        let mut t = four_pure();
        let root = t.root();
        assert_eq!(t.node(root).counter_s(), 4);
        assert!(t.insert(ex(&[9.0], 1)).unwrap().rebuild.is_none());
        assert!(t.insert(ex(&[9.0], 1)).unwrap().rebuild.is_none());
        assert_eq!(t.node(root).counter_c(), 2);
        let out = t.insert(ex(&[9.0], 1)).unwrap();
        let rb = out.rebuild.expect("3 > 2 triggers");
        assert_eq!((rb.root, rb.trigger, rb.size), (root, root, 7));
        assert_eq!(t.node(root).counter_c(), 0);
        assert_eq!(t.node(root).counter_s(), 7);
        assert_eq!(t.stats().rebuilds, 1);
        assert_eq!(t.stats().example_touches, 7);
    }

    #[test]
    fn delete_absent_leaves_tree_untouched() {
        let mut t = four_pure();
        let before = t.node(t.root()).counter_c();
        let err = t.delete(ex(&[7.0], 1)).unwrap_err();
        assert!(matches!(err, Error::NotInActiveSet));
        assert_eq!(t.node(t.root()).counter_c(), before);
        assert_eq!(t.len(), 4);
        assert_eq!(t.stats().updates, 0);
    }

    #[test]
    fn insert_then_delete_restores_content() {
        let mut t = four_pure();
        let before = t.active_multiset();
        let e = ex(&[1.5], 0);
        let answers = t
            .run_sequence(vec![
                UpdateRequest::Insert(e.clone()),
                UpdateRequest::Label(vec![1.5]),
                UpdateRequest::Delete(e.clone()),
            ])
            .unwrap();
        assert_eq!(answers.len(), 1);
        assert_eq!(t.active_multiset(), before);
        assert!(t.leaves().all(|(_, l)| !l.examples().contains(&e)));
        assert_eq!(t.node(t.root()).counter_c(), 2);
    }

    #[test]
    fn empty_sequence_changes_nothing() {
        let mut t = four_pure();
        assert!(t.run_sequence(Vec::new()).unwrap().is_empty());
        assert_eq!(t.stats(), four_pure().stats());
    }

    #[test]
    fn rebuild_picks_highest_ancestor_within_power_of_two() {
        let rows: Vec<_> = (0..16)
            .map(|i| ex(&[i as f64], u8::from(i % 4 == 1 || i % 4 == 2)))
            .collect();
        let s = ActiveMultiset::from_examples(Schema::real(1), rows).unwrap();
        let p = FeasibilityParams::new(0.0, 0.0, 1, None, 1.0).unwrap();
        let mut t = DecisionTree::from_multiset(s, p).unwrap();
        let x = (0..16)
            .map(|i| [i as f64])
            .max_by_key(|x| t.path(x).len())
            .unwrap();
        let path = t.path(&x);
        assert!(path.len() >= 3);
        let (top, mid, low) = (path[0], path[1], path[2]);
        // Ancestors with s = 20 and s = 7 above a node with s = 5 that is
        // one update away from its budget.
        for (id, s, c) in [(top, 20, 0), (mid, 7, 0), (low, 5, 5)] {
            let node = t.arena.get_mut(id);
            node.counter_s = s;
            node.counter_c = c;
        }
        let out = t.insert(ex(&x, 0)).unwrap();
        let rb = out.rebuild.unwrap();
        assert_eq!(rb.trigger, low);
        assert_eq!(rb.root, mid);
        assert_eq!(t.node(mid).depth(), 1);
        assert_eq!(t.node(mid).counter_s(), rb.size);
        assert_eq!(t.node(top).counter_c(), 1);
    }

    #[test]
    fn categorical_schema_rebuilds_with_counters() {
        let schema = Schema::categorical(2);
        let mut t = DecisionTree::new(schema, params(0.1)).unwrap();
        for i in 0..200u32 {
            let (a, b) = ((i % 3) as f64, (i % 2) as f64);
            t.insert(ex(&[a, b], u8::from(a == 1.0))).unwrap();
        }
        assert_eq!(t.query(&[1.0, 0.0]).unwrap(), 1);
        assert_eq!(t.query(&[2.0, 1.0]).unwrap(), 0);
        assert_eq!(t.len(), 200);
    }

    #[test]
    fn rebuild_preserves_outside_ids() {
        let mut t = DecisionTree::new(Schema::real(1), params(1.0)).unwrap();
        for i in 0..64 {
            t.insert(ex(&[i as f64], u8::from(i >= 32))).unwrap();
        }
        let root = t.root();
        let right = t.node(root).as_internal().unwrap().right();
        let right_nodes = t.subtree(right);
        let right_counters: Vec<_> = right_nodes
            .iter()
            .map(|&id| t.node(id).counter_c())
            .collect();
        // Inserting on the left never touches the right subtree.
        let out = t.insert(ex(&[-1.0], 0)).unwrap();
        if out.rebuild.map(|r| r.root) != Some(root) {
            assert_eq!(t.subtree(right), right_nodes);
            let after: Vec<_> = right_nodes
                .iter()
                .map(|&id| t.node(id).counter_c())
                .collect();
            assert_eq!(after, right_counters);
        }
    }
}
