//! From-scratch construction of a subtree.
//!
//! A node becomes a leaf when `|S| <= k`, `g(S) <= alpha/2` or its depth is
//! `h`; otherwise it takes the exact best split and both sides are built one
//! level deeper. A node whose best split cannot separate `S` (all examples
//! share one feature vector) is also made a leaf.
//!
//! [`build`] presorts every feature once and stably partitions the sorted
//! index lists at each split. [`build_categorical`] keeps the label counters
//! `n(S, y)` and `n(S, j, a, y)` together with per-(feature, value) linked
//! lists of examples, and splits a node by peeling off whichever side has
//! fewer distinct examples. Both paths share the gain kernel and tie-breaking
//! of [`crate::gini`], so on a categorical schema they produce the same tree.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::example::{FeatureKind, LabeledExample, Schema};
use crate::gini::{gini_from_counts, pick_feature, scan_categorical, scan_numeric, Candidate};
use crate::multiset::{ActiveMultiset, LabelHistogram};
use crate::tree::{
    Arena, DecisionTree, FeasibilityParams, Internal, Leaf, Node, NodeId, NodeKind, RebuildStats,
    Split,
};

/// Builds a tree on `s` whose root sits at depth `eta`.
pub fn build(s: ActiveMultiset, eta: usize, params: &FeasibilityParams) -> DecisionTree {
    let schema = s.schema().clone();
    let mut arena = Arena::default();
    let root = arena.alloc_vacant();
    build_presorted(
        &mut arena,
        root,
        &schema,
        s.into_entries().collect(),
        eta,
        params,
    );
    DecisionTree {
        schema,
        params: *params,
        arena,
        root,
        stats: RebuildStats::default(),
    }
}

/// Same tree as [`build`], computed with the categorical counter scheme.
/// Fails if any feature is real-valued.
pub fn build_categorical(
    s: ActiveMultiset,
    eta: usize,
    params: &FeasibilityParams,
) -> Result<DecisionTree> {
    let schema = s.schema().clone();
    if let Some(j) = schema.kinds().iter().position(|k| *k == FeatureKind::Real) {
        return Err(Error::NotCategorical(j));
    }
    let mut arena = Arena::default();
    let root = arena.alloc_vacant();
    build_counted(
        &mut arena,
        root,
        &schema,
        s.into_entries().collect(),
        eta,
        params,
    );
    Ok(DecisionTree {
        schema,
        params: *params,
        arena,
        root,
        stats: RebuildStats::default(),
    })
}

/// Builds with whichever scheme fits the schema; see [`build_into`].
pub(crate) fn build_auto(
    s: ActiveMultiset,
    eta: usize,
    params: &FeasibilityParams,
) -> DecisionTree {
    let schema = s.schema().clone();
    let mut arena = Arena::default();
    let root = arena.alloc_vacant();
    build_into(
        &mut arena,
        root,
        &schema,
        s.into_entries().collect(),
        eta,
        params,
    );
    DecisionTree {
        schema,
        params: *params,
        arena,
        root,
        stats: RebuildStats::default(),
    }
}

/// Fills the vacant slot `root` with a subtree built on `entries`, picking
/// the counter scheme when every feature is categorical.
pub(crate) fn build_into(
    arena: &mut Arena,
    root: NodeId,
    schema: &Arc<Schema>,
    entries: Vec<(LabeledExample, u64)>,
    eta: usize,
    params: &FeasibilityParams,
) {
    if schema.is_all_categorical() {
        build_counted(arena, root, schema, entries, eta, params);
    } else {
        build_presorted(arena, root, schema, entries, eta, params);
    }
}

fn is_leaf_by_rule(hist: LabelHistogram, depth: usize, params: &FeasibilityParams) -> bool {
    hist.total() <= params.k
        || gini_from_counts(hist.zeros(), hist.ones()) <= params.alpha / 2.0
        || params.at_max_depth(depth)
}

/// Owns the examples being built on and hands them out to leaves. Feature
/// values are also kept column by column for the split scans.
struct EntryPool {
    examples: Vec<Option<LabeledExample>>,
    counts: Vec<u64>,
    labels: Vec<u8>,
    columns: Vec<f64>,
}

impl EntryPool {
    fn new(entries: Vec<(LabeledExample, u64)>, d: usize) -> Self {
        let m = entries.len();
        let mut columns = vec![0.0; m * d];
        let mut labels = Vec::with_capacity(m);
        for (i, (e, _)) in entries.iter().enumerate() {
            for (j, &v) in e.features().iter().enumerate() {
                columns[j * m + i] = v;
            }
            labels.push(e.label());
        }
        let (examples, counts) = entries.into_iter().map(|(e, n)| (Some(e), n)).unzip();
        EntryPool {
            examples,
            counts,
            labels,
            columns,
        }
    }

    fn len(&self) -> usize {
        self.counts.len()
    }

    fn column(&self, j: usize) -> &[f64] {
        let m = self.len();
        &self.columns[j * m..(j + 1) * m]
    }

    fn hist(&self, i: u32) -> LabelHistogram {
        let mut h = LabelHistogram::default();
        h.add(self.labels[i as usize], self.counts[i as usize]);
        h
    }

    fn leaf(&mut self, schema: &Arc<Schema>, indices: &[u32]) -> Leaf {
        let mut entries: Vec<(LabeledExample, u64)> = indices
            .iter()
            .map(|&i| {
                let e = self.examples[i as usize].take().expect("entry still owned");
                (e, self.counts[i as usize])
            })
            .collect();
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        Leaf::new(ActiveMultiset::from_sorted_entries(schema.clone(), entries))
    }
}

fn put_leaf(arena: &mut Arena, slot: NodeId, leaf: Leaf, size: u64, depth: usize) {
    arena.put(
        slot,
        Node {
            kind: NodeKind::Leaf(leaf),
            counter_c: 0,
            counter_s: size,
            depth,
        },
    );
}

fn put_internal(
    arena: &mut Arena,
    slot: NodeId,
    split: Split,
    gain: f64,
    size: u64,
    depth: usize,
) -> (NodeId, NodeId) {
    let left = arena.alloc_vacant();
    let right = arena.alloc_vacant();
    arena.put(
        slot,
        Node {
            kind: NodeKind::Internal(Internal {
                split,
                left,
                right,
                gain,
            }),
            counter_c: 0,
            counter_s: size,
            depth,
        },
    );
    (left, right)
}

/// Generic build over presorted per-feature index lists. Every node owns
/// the same range `lo..hi` of each feature's list, and a split stably
/// partitions that range in place.
fn build_presorted(
    arena: &mut Arena,
    root: NodeId,
    schema: &Arc<Schema>,
    entries: Vec<(LabeledExample, u64)>,
    eta: usize,
    params: &FeasibilityParams,
) {
    let d = schema.len();
    let mut pool = EntryPool::new(entries, d);
    let m = pool.len();

    // Per feature, entry indices sorted by value, and the values in the same
    // order.
    let mut order: Vec<u32> = Vec::with_capacity(m * d);
    let mut vals: Vec<f64> = Vec::with_capacity(m * d);
    for j in 0..d {
        let col = pool.column(j);
        let start = order.len();
        order.extend(0..m as u32);
        order[start..].sort_unstable_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
        vals.extend(order[start..].iter().map(|&i| col[i as usize]));
    }
    let weights: Vec<[u64; 2]> = (0..m as u32)
        .map(|i| {
            let h = pool.hist(i);
            [h.zeros(), h.ones()]
        })
        .collect();

    let mut goes_left = vec![false; m];
    let mut scratch: Vec<u32> = Vec::with_capacity(m);
    let mut scratch_vals: Vec<f64> = Vec::with_capacity(m);
    let mut groups: Vec<(f64, LabelHistogram)> = Vec::new();
    let mut candidates: Vec<Candidate> = Vec::with_capacity(d);
    let mut stack = vec![(root, 0usize, m, eta)];

    while let Some((slot, lo, hi, depth)) = stack.pop() {
        let mut hist = LabelHistogram::default();
        for &i in &order[lo..hi] {
            hist.add(pool.labels[i as usize], pool.counts[i as usize]);
        }
        let size = hist.total();

        if lo == hi || is_leaf_by_rule(hist, depth, params) {
            let leaf = pool.leaf(schema, &order[lo..hi]);
            put_leaf(arena, slot, leaf, size, depth);
            continue;
        }

        candidates.clear();
        for j in 0..d {
            groups.clear();
            let range = j * m + lo..j * m + hi;
            let mut acc = [0u64; 2];
            let mut last = vals[range.start];
            for (&i, &v) in order[range.clone()].iter().zip(&vals[range]) {
                if v != last {
                    groups.push((last, LabelHistogram::new(acc[0], acc[1])));
                    acc = [0, 0];
                    last = v;
                }
                let w = weights[i as usize];
                acc[0] += w[0];
                acc[1] += w[1];
            }
            groups.push((last, LabelHistogram::new(acc[0], acc[1])));
            candidates.push(match schema.kind(j) {
                FeatureKind::Real => scan_numeric(&groups, hist),
                FeatureKind::Categorical => scan_categorical(&groups, hist),
            });
        }
        let j = pick_feature(&candidates);
        let best = candidates[j];
        if !best.separates {
            let leaf = pool.leaf(schema, &order[lo..hi]);
            put_leaf(arena, slot, leaf, size, depth);
            continue;
        }

        let split = Split {
            feature: j,
            threshold: best.threshold,
            kind: schema.kind(j),
        };
        let mut n_left = 0;
        for (&i, &v) in order[j * m + lo..j * m + hi]
            .iter()
            .zip(&vals[j * m + lo..j * m + hi])
        {
            let left = match split.kind {
                FeatureKind::Real => v <= split.threshold,
                FeatureKind::Categorical => v == split.threshold,
            };
            goes_left[i as usize] = left;
            n_left += usize::from(left);
        }
        for f in 0..d {
            let range = f * m + lo..f * m + hi;
            let (idx, val) = (&mut order[range.clone()], &mut vals[range]);
            scratch.clear();
            scratch_vals.clear();
            let mut w = 0;
            for r in 0..idx.len() {
                let (i, v) = (idx[r], val[r]);
                if goes_left[i as usize] {
                    idx[w] = i;
                    val[w] = v;
                    w += 1;
                } else {
                    scratch.push(i);
                    scratch_vals.push(v);
                }
            }
            idx[w..].copy_from_slice(&scratch);
            val[w..].copy_from_slice(&scratch_vals);
        }
        let (left, right) = put_internal(arena, slot, split, best.gain, size, depth);
        stack.push((right, lo + n_left, hi, depth + 1));
        stack.push((left, lo, lo + n_left, depth + 1));
    }
}

const NIL: u32 = u32::MAX;

/// One node's share of the examples under the categorical counter scheme.
struct Group {
    /// Head of the list of entries with value `a` on feature `j`, at
    /// `offsets[j] + a`.
    heads: Vec<u32>,
    /// `n(S, j, a, y)` weighted by multiplicity.
    counts: Vec<LabelHistogram>,
    /// Distinct entries per `(j, a)`.
    distinct: Vec<u32>,
    hist: LabelHistogram,
    entries: u32,
}

struct CountedLayout<'a> {
    d: usize,
    offsets: Vec<usize>,
    codes: Vec<u32>,
    next: Vec<u32>,
    prev: Vec<u32>,
    pool: &'a EntryPool,
}

impl CountedLayout<'_> {
    fn slots(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn empty_group(&self) -> Group {
        let n = self.slots();
        Group {
            heads: vec![NIL; n],
            counts: vec![LabelHistogram::default(); n],
            distinct: vec![0; n],
            hist: LabelHistogram::default(),
            entries: 0,
        }
    }

    fn cell(&self, e: u32, j: usize) -> usize {
        self.offsets[j] + self.codes[e as usize * self.d + j] as usize
    }

    fn link(&mut self, g: &mut Group, e: u32) {
        let h = self.pool.hist(e);
        for j in 0..self.d {
            let c = self.cell(e, j);
            let at = e as usize * self.d + j;
            let head = g.heads[c];
            self.next[at] = head;
            self.prev[at] = NIL;
            if head != NIL {
                self.prev[head as usize * self.d + j] = e;
            }
            g.heads[c] = e;
            g.counts[c].add(0, h.zeros());
            g.counts[c].add(1, h.ones());
            g.distinct[c] += 1;
        }
        g.hist.add(0, h.zeros());
        g.hist.add(1, h.ones());
        g.entries += 1;
    }

    fn unlink(&mut self, g: &mut Group, e: u32) {
        let h = self.pool.hist(e);
        for j in 0..self.d {
            let c = self.cell(e, j);
            let at = e as usize * self.d + j;
            let (p, n) = (self.prev[at], self.next[at]);
            if p == NIL {
                g.heads[c] = n;
            } else {
                self.next[p as usize * self.d + j] = n;
            }
            if n != NIL {
                self.prev[n as usize * self.d + j] = p;
            }
            g.counts[c].remove(0, h.zeros());
            g.counts[c].remove(1, h.ones());
            g.distinct[c] -= 1;
        }
        g.hist.remove(0, h.zeros());
        g.hist.remove(1, h.ones());
        g.entries -= 1;
    }

    /// Entries of `g` with value `a` on feature `j`.
    fn list(&self, g: &Group, j: usize, a: usize) -> Vec<u32> {
        let mut out = Vec::new();
        let mut e = g.heads[self.offsets[j] + a];
        while e != NIL {
            out.push(e);
            e = self.next[e as usize * self.d + j];
        }
        out
    }

    fn alphabet(&self, j: usize) -> usize {
        self.offsets[j + 1] - self.offsets[j]
    }

    fn members(&self, g: &Group) -> Vec<u32> {
        (0..self.alphabet(0))
            .flat_map(|a| self.list(g, 0, a))
            .collect()
    }
}

/// Categorical build with counters and smaller-side peeling.
fn build_counted(
    arena: &mut Arena,
    root: NodeId,
    schema: &Arc<Schema>,
    entries: Vec<(LabeledExample, u64)>,
    eta: usize,
    params: &FeasibilityParams,
) {
    let d = schema.len();
    let mut pool = EntryPool::new(entries, d);
    let m = pool.len();

    let mut codes = vec![0u32; m * d];
    let mut alphabet = vec![1usize; d];
    for e in 0..m {
        for j in 0..d {
            let code = pool.column(j)[e] as u32;
            codes[e * d + j] = code;
            alphabet[j] = alphabet[j].max(code as usize + 1);
        }
    }
    let mut offsets = vec![0usize; d + 1];
    for j in 0..d {
        offsets[j + 1] = offsets[j] + alphabet[j];
    }

    // (slot, group, depth); leaves drain their members from the pool.
    let mut pending: Vec<(NodeId, Group, usize)> = Vec::new();
    let mut leaves: Vec<(NodeId, Vec<u32>, u64, usize)> = Vec::new();
    {
        let mut layout = CountedLayout {
            d,
            offsets,
            codes,
            next: vec![NIL; m * d],
            prev: vec![NIL; m * d],
            pool: &pool,
        };
        let mut root_group = layout.empty_group();
        for e in (0..m as u32).rev() {
            layout.link(&mut root_group, e);
        }
        pending.push((root, root_group, eta));

        let mut groups: Vec<(f64, LabelHistogram)> = Vec::new();
        let mut candidates: Vec<Candidate> = Vec::with_capacity(d);
        while let Some((slot, mut group, depth)) = pending.pop() {
            let hist = group.hist;
            let size = hist.total();
            if group.entries == 0 || is_leaf_by_rule(hist, depth, params) {
                leaves.push((slot, layout.members(&group), size, depth));
                continue;
            }

            candidates.clear();
            for j in 0..d {
                groups.clear();
                let base = layout.offsets[j];
                for a in 0..layout.alphabet(j) {
                    if group.distinct[base + a] > 0 {
                        groups.push((a as f64, group.counts[base + a]));
                    }
                }
                candidates.push(scan_categorical(&groups, hist));
            }
            let j = pick_feature(&candidates);
            let best = candidates[j];
            if !best.separates {
                leaves.push((slot, layout.members(&group), size, depth));
                continue;
            }

            let a = best.threshold as usize;
            let matching = group.distinct[layout.offsets[j] + a];
            let peel_matching = matching <= group.entries - matching;
            let peeled: Vec<u32> = if peel_matching {
                layout.list(&group, j, a)
            } else {
                (0..layout.alphabet(j))
                    .filter(|&b| b != a)
                    .flat_map(|b| layout.list(&group, j, b))
                    .collect()
            };
            let mut split_off = layout.empty_group();
            for &e in &peeled {
                layout.unlink(&mut group, e);
                layout.link(&mut split_off, e);
            }
            let (left_group, right_group) = if peel_matching {
                (split_off, group)
            } else {
                (group, split_off)
            };

            let split = Split::categorical(j, best.threshold);
            let (left, right) = put_internal(arena, slot, split, best.gain, size, depth);
            pending.push((right, right_group, depth + 1));
            pending.push((left, left_group, depth + 1));
        }
    }

    for (slot, members, size, depth) in leaves {
        let leaf = pool.leaf(schema, &members);
        put_leaf(arena, slot, leaf, size, depth);
    }
}
