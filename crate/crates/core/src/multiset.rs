//! Ordered multiset of labeled examples with multiplicity counts.

use std::collections::btree_map::{self, BTreeMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::example::{Label, LabeledExample, Schema};

/// Count of 0-labels and 1-labels.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelHistogram {
    counts: [u64; 2],
}

impl LabelHistogram {
    pub fn new(zeros: u64, ones: u64) -> Self {
        LabelHistogram {
            counts: [zeros, ones],
        }
    }

    pub fn zeros(&self) -> u64 {
        self.counts[0]
    }

    pub fn ones(&self) -> u64 {
        self.counts[1]
    }

    pub fn count(&self, label: Label) -> u64 {
        self.counts[label as usize]
    }

    pub fn total(&self) -> u64 {
        self.counts[0] + self.counts[1]
    }

    pub fn add(&mut self, label: Label, n: u64) {
        self.counts[label as usize] += n;
    }

    /// Panics if the count would go negative.
    pub fn remove(&mut self, label: Label, n: u64) {
        let c = &mut self.counts[label as usize];
        *c = c.checked_sub(n).expect("label histogram underflow");
    }

    pub fn majority(&self) -> Label {
        majority_label(self)
    }
}

/// The label with strictly greater count; ties and the empty histogram give 0.
pub fn majority_label(hist: &LabelHistogram) -> Label {
    if hist.ones() > hist.zeros() {
        1
    } else {
        0
    }
}

/// Multiset of examples keyed by the full `(features, label)` tuple.
///
/// Lookup, insertion and deletion touch `O(log N)` keys, `N` being the number
/// of distinct examples; enumeration visits each distinct key once.
#[derive(Clone)]
pub struct ActiveMultiset {
    schema: Arc<Schema>,
    entries: BTreeMap<LabeledExample, u64>,
    total: u64,
    labels: LabelHistogram,
}

impl ActiveMultiset {
    pub fn new(schema: Arc<Schema>) -> Self {
        ActiveMultiset {
            schema,
            entries: BTreeMap::new(),
            total: 0,
            labels: LabelHistogram::default(),
        }
    }

    /// Builds a multiset, validating every example against `schema`.
    pub fn from_examples<I>(schema: Arc<Schema>, examples: I) -> Result<Self>
    where
        I: IntoIterator<Item = LabeledExample>,
    {
        let mut m = ActiveMultiset::new(schema);
        for e in examples {
            m.insert(e)?;
        }
        Ok(m)
    }

    pub fn schema(&self) -> &Arc<Schema> {
        &self.schema
    }

    pub fn insert(&mut self, e: LabeledExample) -> Result<()> {
        self.schema.validate(e.features())?;
        self.insert_n(e, 1);
        Ok(())
    }

    /// Adds `n` copies without schema validation. Callers guarantee `e`
    /// already passed validation against the same schema.
    pub(crate) fn insert_n(&mut self, e: LabeledExample, n: u64) {
        if n == 0 {
            return;
        }
        self.labels.add(e.label(), n);
        self.total += n;
        *self.entries.entry(e).or_insert(0) += n;
    }

    pub fn delete(&mut self, e: &LabeledExample) -> Result<()> {
        match self.entries.get_mut(e) {
            None => Err(Error::NotInActiveSet),
            Some(count) => {
                *count -= 1;
                if *count == 0 {
                    self.entries.remove(e);
                }
                self.total -= 1;
                self.labels.remove(e.label(), 1);
                Ok(())
            }
        }
    }

    pub fn multiplicity(&self, e: &LabeledExample) -> u64 {
        self.entries.get(e).copied().unwrap_or(0)
    }

    pub fn contains(&self, e: &LabeledExample) -> bool {
        self.entries.contains_key(e)
    }

    /// Total size, counting multiplicities.
    pub fn len(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn distinct_len(&self) -> usize {
        self.entries.len()
    }

    pub fn label_histogram(&self) -> LabelHistogram {
        self.labels
    }

    /// Distinct examples with their multiplicities, in key order.
    pub fn iter(&self) -> btree_map::Iter<'_, LabeledExample, u64> {
        self.entries.iter()
    }

    /// Every example, repeated according to its multiplicity.
    pub fn iter_repeated(&self) -> impl Iterator<Item = &LabeledExample> + '_ {
        self.entries
            .iter()
            .flat_map(|(e, &n)| std::iter::repeat_n(e, n as usize))
    }

    /// Size of the multiset intersection (key-wise minimum multiplicity).
    pub fn intersection_len(&self, other: &ActiveMultiset) -> u64 {
        let (small, large) = if self.distinct_len() <= other.distinct_len() {
            (self, other)
        } else {
            (other, self)
        };
        small
            .entries
            .iter()
            .map(|(e, &n)| n.min(large.multiplicity(e)))
            .sum()
    }

    /// Moves every entry of `other` into `self`.
    pub fn absorb(&mut self, other: ActiveMultiset) {
        if self.entries.is_empty() {
            self.entries = other.entries;
            self.total = other.total;
            self.labels = other.labels;
            return;
        }
        for (e, n) in other.entries {
            self.insert_n(e, n);
        }
    }

    pub fn into_entries(self) -> impl Iterator<Item = (LabeledExample, u64)> {
        self.entries.into_iter()
    }

    /// Builds a leaf dictionary from entries that are already distinct and
    /// sorted by key.
    pub(crate) fn from_sorted_entries(
        schema: Arc<Schema>,
        entries: Vec<(LabeledExample, u64)>,
    ) -> Self {
        let mut labels = LabelHistogram::default();
        let mut total = 0;
        for (e, n) in &entries {
            labels.add(e.label(), *n);
            total += n;
        }
        ActiveMultiset {
            schema,
            entries: entries.into_iter().collect(),
            total,
            labels,
        }
    }
}

impl PartialEq for ActiveMultiset {
    fn eq(&self, other: &Self) -> bool {
        self.total == other.total && self.entries == other.entries
    }
}

impl std::fmt::Debug for ActiveMultiset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_map().entries(self.entries.iter()).finish()
    }
}
