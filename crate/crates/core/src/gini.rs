//! Gini index, Gini gain and exact best-split search.
//!
//! All gains are computed from integer label counts by one formula
//! ([`gain_from_counts`]), so the split search, the builders and direct
//! evaluation agree bit for bit on the same partition. Ties between
//! candidate splits are broken towards the lowest feature index and then the
//! lowest threshold, with [`TIE_TOLERANCE`] as the equality band.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::example::FeatureKind;
use crate::multiset::{ActiveMultiset, LabelHistogram};
use crate::tree::Split;

/// Two gains closer than this are considered tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// `2 p (1 - p)` with `p` the fraction of 1-labels; 0 for an empty set.
#[inline]
pub fn gini_from_counts(zeros: u64, ones: u64) -> f64 {
    let n = zeros + ones;
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    2.0 * (zeros as f64) * (ones as f64) / (n * n)
}

/// Gini gain of the partition `left | right` of their union,
/// `2 (n0 n1 nl nr - n (l0 l1 nr + r0 r1 nl)) / (n^2 nl nr)`. The
/// numerator is exact while `n^4 < 2^53`.
#[inline]
pub fn gain_from_counts(left: LabelHistogram, right: LabelHistogram) -> f64 {
    // Through i64, which converts to f64 in one instruction.
    let f = |c: u64| c as i64 as f64;
    let (l0, l1, r0, r1) = (
        f(left.zeros()),
        f(left.ones()),
        f(right.zeros()),
        f(right.ones()),
    );
    let (nl, nr) = (l0 + l1, r0 + r1);
    if nl == 0.0 || nr == 0.0 {
        return 0.0;
    }
    let n = nl + nr;
    let num = (l0 + r0) * (l1 + r1) * nl * nr - n * (l0 * l1 * nr + r0 * r1 * nl);
    (2.0 * num / (n * n * nl * nr)).max(0.0)
}

pub fn gini_index(s: &ActiveMultiset) -> f64 {
    let h = s.label_histogram();
    gini_from_counts(h.zeros(), h.ones())
}

/// `G(S, j, t)` evaluated by partitioning `s` directly.
pub fn gini_gain(s: &ActiveMultiset, split: &Split) -> f64 {
    let (left, right) = partition_counts(s, split);
    gain_from_counts(left, right)
}

fn partition_counts(s: &ActiveMultiset, split: &Split) -> (LabelHistogram, LabelHistogram) {
    let mut left = LabelHistogram::default();
    let mut right = LabelHistogram::default();
    for (e, &n) in s.iter() {
        if split.goes_left(e.features()) {
            left.add(e.label(), n);
        } else {
            right.add(e.label(), n);
        }
    }
    (left, right)
}

/// Best threshold found on one feature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub threshold: f64,
    pub gain: f64,
    /// Whether the split leaves both sides non-empty.
    pub separates: bool,
}

/// Sweeps value groups sorted ascending, testing `x <= v` for each group
/// value `v`. The largest value only qualifies when it is the sole value.
pub(crate) fn scan_numeric(groups: &[(f64, LabelHistogram)], total: LabelHistogram) -> Candidate {
    debug_assert!(!groups.is_empty());
    if groups.len() == 1 {
        return Candidate {
            threshold: groups[0].0,
            gain: 0.0,
            separates: false,
        };
    }
    let mut left = LabelHistogram::default();
    let mut best = Candidate {
        threshold: groups[0].0,
        gain: f64::NEG_INFINITY,
        separates: true,
    };
    for &(value, hist) in &groups[..groups.len() - 1] {
        left.add(0, hist.zeros());
        left.add(1, hist.ones());
        let right = LabelHistogram::new(total.zeros() - left.zeros(), total.ones() - left.ones());
        let gain = gain_from_counts(left, right);
        if gain > best.gain + TIE_TOLERANCE {
            best = Candidate {
                threshold: value,
                gain,
                separates: true,
            };
        }
    }
    best
}

/// Tests `x == a` for each symbol group, ascending by symbol code.
pub(crate) fn scan_categorical(
    groups: &[(f64, LabelHistogram)],
    total: LabelHistogram,
) -> Candidate {
    debug_assert!(!groups.is_empty());
    if groups.len() == 1 {
        return Candidate {
            threshold: groups[0].0,
            gain: 0.0,
            separates: false,
        };
    }
    let mut best = Candidate {
        threshold: groups[0].0,
        gain: f64::NEG_INFINITY,
        separates: true,
    };
    for &(value, hist) in groups {
        let right = LabelHistogram::new(total.zeros() - hist.zeros(), total.ones() - hist.ones());
        let gain = gain_from_counts(hist, right);
        if gain > best.gain + TIE_TOLERANCE {
            best = Candidate {
                threshold: value,
                gain,
                separates: true,
            };
        }
    }
    best
}

/// Index of the winning feature: the highest-gain separating candidate
/// (lowest index on ties), or feature 0 when no feature separates.
pub(crate) fn pick_feature(candidates: &[Candidate]) -> usize {
    let mut best: Option<usize> = None;
    for (j, c) in candidates.iter().enumerate() {
        if !c.separates {
            continue;
        }
        match best {
            Some(b) if c.gain <= candidates[b].gain + TIE_TOLERANCE => {}
            _ => best = Some(j),
        }
    }
    best.unwrap_or(0)
}

/// Projection of `s` on feature `j`: distinct values ascending with the
/// label counts of each.
fn project(s: &ActiveMultiset, j: usize) -> Vec<(f64, LabelHistogram)> {
    let mut proj: Vec<(f64, u8, u64)> = s
        .iter()
        .map(|(e, &n)| (e.feature(j), e.label(), n))
        .collect();
    proj.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut groups: Vec<(f64, LabelHistogram)> = Vec::new();
    for (v, y, n) in proj {
        match groups.last_mut() {
            Some((last, hist)) if *last == v => hist.add(y, n),
            _ => {
                let mut hist = LabelHistogram::default();
                hist.add(y, n);
                groups.push((v, hist));
            }
        }
    }
    groups
}

fn feature_candidate(s: &ActiveMultiset, j: usize) -> Option<Candidate> {
    if s.is_empty() {
        return None;
    }
    let groups = project(s, j);
    let total = s.label_histogram();
    Some(match s.schema().kind(j) {
        FeatureKind::Real => scan_numeric(&groups, total),
        FeatureKind::Categorical => scan_categorical(&groups, total),
    })
}

/// Best threshold on real feature `j` and its gain, by sorting the
/// projection and sweeping label counts once. `None` on an empty multiset.
pub fn best_split_numeric(s: &ActiveMultiset, j: usize) -> Option<(f64, f64)> {
    if s.is_empty() {
        return None;
    }
    let c = scan_numeric(&project(s, j), s.label_histogram());
    Some((c.threshold, c.gain))
}

/// Best equality split `x_j == a` on categorical feature `j`.
pub fn best_split_categorical(s: &ActiveMultiset, j: usize) -> Option<(f64, f64)> {
    if s.is_empty() {
        return None;
    }
    let c = scan_categorical(&project(s, j), s.label_histogram());
    Some((c.threshold, c.gain))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainResult {
    pub best_split: Split,
    pub best_gain: f64,
    /// `(threshold, gain)` of the best split on each feature.
    pub per_feature_best: Vec<(f64, f64)>,
    /// False when no feature can separate the multiset.
    pub separates: bool,
}

/// Exact best split over every feature and observed threshold.
/// `None` on an empty multiset.
pub fn best_split(s: &ActiveMultiset) -> Option<GainResult> {
    let d = s.schema().len();
    let candidates: Vec<Candidate> = (0..d)
        .map(|j| feature_candidate(s, j))
        .collect::<Option<_>>()?;
    let j = pick_feature(&candidates);
    let c = candidates[j];
    Some(GainResult {
        best_split: Split {
            feature: j,
            threshold: c.threshold,
            kind: s.schema().kind(j),
        },
        best_gain: c.gain,
        per_feature_best: candidates.iter().map(|c| (c.threshold, c.gain)).collect(),
        separates: c.separates,
    })
}

/// `Δ(S, S') / max(|S|, |S'|)` with `Δ = |S| + |S'| - 2 |S ∩ S'|`.
pub fn relative_edit_distance(s: &ActiveMultiset, other: &ActiveMultiset) -> Result<f64> {
    let (a, b) = (s.len(), other.len());
    if a == 0 && b == 0 {
        return Err(Error::BothEmpty);
    }
    let delta = a + b - 2 * s.intersection_len(other);
    Ok(delta as f64 / a.max(b) as f64)
}
