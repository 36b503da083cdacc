//! Labeled examples and the feature schema they are validated against.
//!
//! Feature values are stored as `f64`. Categorical symbols are interned to
//! non-negative integer codes by whoever produces the examples (the CSV
//! loader does this per column), so a categorical value is an `f64` holding
//! an exact integer.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary class label, always 0 or 1.
pub type Label = u8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    /// Ordered real values; splits test `x_j <= t`.
    Real,
    /// Symbols from a finite alphabet; splits test `x_j == a`.
    Categorical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    kinds: Vec<FeatureKind>,
}

impl Schema {
    pub fn new(kinds: Vec<FeatureKind>) -> Result<Arc<Self>> {
        if kinds.is_empty() {
            return Err(Error::InvalidParams(
                "schema needs at least one feature".into(),
            ));
        }
        Ok(Arc::new(Schema { kinds }))
    }

    pub fn real(d: usize) -> Arc<Self> {
        Schema::new(vec![FeatureKind::Real; d]).expect("d >= 1")
    }

    pub fn categorical(d: usize) -> Arc<Self> {
        Schema::new(vec![FeatureKind::Categorical; d]).expect("d >= 1")
    }

    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    pub fn kind(&self, feature: usize) -> FeatureKind {
        self.kinds[feature]
    }

    pub fn kinds(&self) -> &[FeatureKind] {
        &self.kinds
    }

    pub fn is_all_categorical(&self) -> bool {
        self.kinds.iter().all(|k| *k == FeatureKind::Categorical)
    }

    /// Checks arity and per-feature kind of a raw feature vector.
    pub fn validate(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.kinds.len() {
            return Err(Error::Arity {
                expected: self.kinds.len(),
                got: features.len(),
            });
        }
        for (j, (&v, kind)) in features.iter().zip(&self.kinds).enumerate() {
            if v.is_nan() {
                return Err(Error::FeatureKind {
                    feature: j,
                    reason: "NaN is not a valid feature value".into(),
                });
            }
            if *kind == FeatureKind::Categorical
                && (v < 0.0 || v.fract() != 0.0 || v > u32::MAX as f64)
            {
                return Err(Error::FeatureKind {
                    feature: j,
                    reason: format!("categorical feature expects a symbol code, got {v}"),
                });
            }
        }
        Ok(())
    }
}

/// A feature vector with a binary label.
///
/// Ordering is lexicographic over the features, then the label. `-0.0` is
/// normalized to `0.0` on construction so that the key order agrees with
/// the `<=` comparison used by splits.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    features: Box<[f64]>,
    label: Label,
}

impl LabeledExample {
    pub fn new(features: impl Into<Vec<f64>>, label: Label) -> Result<Self> {
        if label > 1 {
            return Err(Error::Label(label));
        }
        let mut features = features.into();
        for v in features.iter_mut() {
            if v.is_nan() {
                return Err(Error::FeatureKind {
                    feature: 0,
                    reason: "NaN is not a valid feature value".into(),
                });
            }
            if *v == 0.0 {
                *v = 0.0;
            }
        }
        Ok(LabeledExample {
            features: features.into_boxed_slice(),
            label,
        })
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn feature(&self, j: usize) -> f64 {
        self.features[j]
    }

    pub fn label(&self) -> Label {
        self.label
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

impl Eq for LabeledExample {}

impl Ord for LabeledExample {
    fn cmp(&self, other: &Self) -> Ordering {
        for (a, b) in self.features.iter().zip(other.features.iter()) {
            match a.total_cmp(b) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        self.features
            .len()
            .cmp(&other.features.len())
            .then(self.label.cmp(&other.label))
    }
}

impl PartialOrd for LabeledExample {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for LabeledExample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {})", &self.features[..], self.label)
    }
}
