//! Fully dynamic decision trees for binary classification.
//!
//! A [`DecisionTree`] is kept close to the tree an exact greedy Gini build
//! would produce on the current active multiset, under an arbitrary mix of
//! insertions and deletions. Every node counts the updates routed through
//! it and the smallest enclosing subtree is rebuilt once that count exceeds
//! `epsilon` times the size the node was built from, which bounds the
//! amortized cost per update.
//!
//! ```
//! use dyntree::{DecisionTree, FeasibilityParams, LabeledExample, Schema};
//!
//! let params = FeasibilityParams::new(0.0, 0.0, 1, Some(10), 0.1).unwrap();
//! let mut tree = DecisionTree::new(Schema::real(1), params).unwrap();
//! for i in 0..100 {
//!     let x = i as f64;
//!     tree.insert(LabeledExample::new(vec![x], u8::from(x >= 50.0)).unwrap()).unwrap();
//! }
//! assert_eq!(tree.query(&[75.0]).unwrap(), 1);
//! assert_eq!(tree.query(&[10.0]).unwrap(), 0);
//! ```

pub mod build;
pub mod dynamic;
pub mod error;
pub mod example;
pub mod gini;
pub mod harness;
pub mod multiset;
pub mod oracle;
pub mod tree;

pub use build::{build, build_categorical};
pub use dynamic::{Rebuild, UpdateOp, UpdateOutcome, UpdateRequest};
pub use error::{Error, Result};
pub use example::{FeatureKind, Label, LabeledExample, Schema};
pub use gini::{best_split, gini_gain, gini_index, relative_edit_distance, GainResult};
pub use multiset::{majority_label, ActiveMultiset, LabelHistogram};
pub use tree::{
    DecisionTree, FeasibilityParams, Internal, Leaf, Node, NodeId, NodeKind, RebuildStats, Split,
};
