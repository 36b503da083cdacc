//! Brute-force verification in exact rational arithmetic.
//!
//! Nothing here reuses the engine's split search, gain kernel or routing.
//! Every node's multiset is recomputed by sending the active examples
//! through the tree from the root, and every gain is a ratio of integers.

use std::collections::{BTreeMap, HashMap};

use num_rational::Ratio;
use num_traits::{Float, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::example::{FeatureKind, Label, LabeledExample, Schema};
use crate::multiset::ActiveMultiset;
use crate::tree::{DecisionTree, FeasibilityParams, NodeId, NodeKind, Split};

pub type Exact = Ratio<i128>;

/// Exact value of a finite `f64`. Magnitudes below `2^-100` round to zero.
pub fn exact_f64(x: f64) -> Exact {
    let (mantissa, exponent, sign) = x.integer_decode();
    let (mut m, mut e) = (mantissa as i128 * sign as i128, exponent as i32);
    if e < -100 {
        m >>= (-100 - e).min(127) as u32;
        e = -100;
    }
    if e >= 0 {
        Exact::from_integer(m << e)
    } else {
        Exact::new(m, 1i128 << (-e))
    }
}

pub fn exact_to_f64(x: Exact) -> f64 {
    *x.numer() as f64 / *x.denom() as f64
}

/// `g = 1 - p0^2 - p1^2 = 2 n0 n1 / n^2`; zero on the empty multiset.
pub fn exact_gini(zeros: u64, ones: u64) -> Exact {
    let n = zeros as i128 + ones as i128;
    if n == 0 {
        return Exact::zero();
    }
    Exact::new(2 * zeros as i128 * ones as i128, n * n)
}

fn exact_gain_counts(left: [u64; 2], right: [u64; 2]) -> Exact {
    let nl = (left[0] + left[1]) as i128;
    let nr = (right[0] + right[1]) as i128;
    let n = nl + nr;
    if n == 0 {
        return Exact::zero();
    }
    exact_gini(left[0] + right[0], left[1] + right[1])
        - Exact::new(nl, n) * exact_gini(left[0], left[1])
        - Exact::new(nr, n) * exact_gini(right[0], right[1])
}

fn goes_left(split: &Split, x: &[f64]) -> bool {
    let v = x[split.feature];
    match split.kind {
        FeatureKind::Real => v <= split.threshold,
        FeatureKind::Categorical => v == split.threshold,
    }
}

fn label_counts<'a>(s: impl IntoIterator<Item = (&'a LabeledExample, u64)>) -> [u64; 2] {
    let mut c = [0u64; 2];
    for (e, n) in s {
        c[e.label() as usize] += n;
    }
    c
}

/// `G(S, split)` by partitioning `s` directly.
pub fn exact_gain(s: &ActiveMultiset, split: &Split) -> Exact {
    gain_of(&s.iter().map(|(e, &n)| (e, n)).collect::<Vec<_>>(), split)
}

fn gain_of(entries: &[(&LabeledExample, u64)], split: &Split) -> Exact {
    let mut left = [0u64; 2];
    let mut right = [0u64; 2];
    for &(e, n) in entries {
        let side = if goes_left(split, e.features()) {
            &mut left
        } else {
            &mut right
        };
        side[e.label() as usize] += n;
    }
    exact_gain_counts(left, right)
}

/// Best split by exhaustive enumeration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExhaustiveBest {
    /// Highest-gain split leaving both sides non-empty, lowest feature then
    /// lowest threshold on ties; `None` when no split separates.
    pub split: Option<Split>,
    /// Its gain, or zero when nothing separates.
    pub gain: Exact,
    /// Maximum over every feature and every observed value.
    pub max_gain: Exact,
    /// `(threshold, gain)` of the best separating split per feature.
    pub per_feature: Vec<Option<(f64, Exact)>>,
}

/// Every `(feature, observed value)` split of `entries`, evaluated exactly.
fn enumerate(schema: &Schema, entries: &[(&LabeledExample, u64)]) -> ExhaustiveBest {
    let mut split = None;
    let mut gain = Exact::zero();
    let mut max_gain = Exact::zero();
    let mut per_feature = Vec::with_capacity(schema.len());
    let total = label_counts(entries.iter().copied());
    for j in 0..schema.len() {
        let mut hist: BTreeMap<u64, (f64, [u64; 2])> = BTreeMap::new();
        for &(e, n) in entries {
            let v = e.feature(j);
            hist.entry(order_key(v)).or_insert((v, [0, 0])).1[e.label() as usize] += n;
        }
        let mut best_here: Option<(f64, Exact)> = None;
        let mut prefix = [0u64; 2];
        let distinct = hist.len();
        for &(v, c) in hist.values() {
            let left = match schema.kind(j) {
                FeatureKind::Real => {
                    prefix[0] += c[0];
                    prefix[1] += c[1];
                    prefix
                }
                FeatureKind::Categorical => c,
            };
            let separates = distinct > 1 && left != total;
            let right = [total[0] - left[0], total[1] - left[1]];
            let g = exact_gain_counts(left, right);
            if g > max_gain {
                max_gain = g;
            }
            if separates && best_here.is_none_or(|(_, b)| g > b) {
                best_here = Some((v, g));
            }
        }
        if let Some((t, g)) = best_here {
            if split.is_none() || g > gain {
                split = Some(Split {
                    feature: j,
                    threshold: t,
                    kind: schema.kind(j),
                });
                gain = g;
            }
        }
        per_feature.push(best_here);
    }
    ExhaustiveBest {
        split,
        gain,
        max_gain,
        per_feature,
    }
}

/// Maps `f64` to an integer key with the same order as `total_cmp`.
fn order_key(v: f64) -> u64 {
    let b = v.to_bits();
    if b >> 63 == 1 {
        !b
    } else {
        b | (1 << 63)
    }
}

pub fn exhaustive_best(s: &ActiveMultiset) -> ExhaustiveBest {
    let entries: Vec<_> = s.iter().map(|(e, &n)| (e, n)).collect();
    enumerate(s.schema(), &entries)
}

/// Which property a tree failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// Stopping rules: small, pure or deep nodes are leaves; impure ones split.
    LeafRule,
    /// The split is within `beta` of the best gain.
    SplitQuality,
    /// The leaf label is a majority label.
    Majority,
    /// Leaf dictionaries equal the routed active multiset.
    Routing,
    /// `c(v) <= epsilon s(v)` and `| |S_v| - s(v) | <= epsilon s(v)`.
    Counter,
    /// `c(child) <= c(parent)`.
    MonotoneCounter,
    /// The smaller child of a freshly built node holds more than
    /// `gain / 4` of its examples.
    BuildFraction,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub condition: Condition,
    pub node: usize,
    pub depth: usize,
    pub detail: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct FeasibilityReport {
    pub nodes_checked: usize,
    /// First violation found in preorder, if any.
    pub violation: Option<Violation>,
}

impl FeasibilityReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// The multiset `S_v` reaching each node, as entries of `s`.
struct Routed<'a> {
    per_node: HashMap<NodeId, Vec<(&'a LabeledExample, u64)>>,
}

impl<'a> Routed<'a> {
    fn new(tree: &DecisionTree, s: &'a ActiveMultiset) -> Self {
        let mut per_node: HashMap<NodeId, Vec<(&LabeledExample, u64)>> = HashMap::new();
        for id in tree.nodes() {
            per_node.insert(id, Vec::new());
        }
        for (e, &n) in s.iter() {
            let mut id = tree.root();
            loop {
                per_node.get_mut(&id).expect("live node").push((e, n));
                match tree.node(id).kind() {
                    NodeKind::Leaf(_) => break,
                    NodeKind::Internal(int) => {
                        id = if goes_left(&int.split(), e.features()) {
                            int.left()
                        } else {
                            int.right()
                        };
                    }
                }
            }
        }
        Routed { per_node }
    }

    fn of(&self, id: NodeId) -> &[(&'a LabeledExample, u64)] {
        &self.per_node[&id]
    }
}

fn size(entries: &[(&LabeledExample, u64)]) -> u64 {
    entries.iter().map(|&(_, n)| n).sum()
}

fn violation(tree: &DecisionTree, id: NodeId, condition: Condition, detail: String) -> Violation {
    Violation {
        condition,
        node: id.index(),
        depth: tree.node(id).depth(),
        detail,
    }
}

/// Checks the stopping rules, split quality and leaf labels of `tree`
/// against the active multiset `s`.
///
/// A node whose examples all share one feature vector cannot be split, so
/// it is not required to be internal however impure it is.
pub fn check_feasibility(
    tree: &DecisionTree,
    s: &ActiveMultiset,
    params: &FeasibilityParams,
) -> FeasibilityReport {
    let routed = Routed::new(tree, s);
    let alpha = exact_f64(params.alpha);
    let beta = exact_f64(params.beta);
    let mut report = FeasibilityReport::default();
    for id in tree.nodes() {
        report.nodes_checked += 1;
        let node = tree.node(id);
        let sv = routed.of(id);
        let n = size(sv);
        let counts = label_counts(sv.iter().copied());
        let g = exact_gini(counts[0], counts[1]);
        let at_depth_limit = params.h.is_some_and(|h| node.depth() >= h);
        let must_be_leaf = n <= params.k || g.is_zero() || at_depth_limit;

        let found = match node.kind() {
            NodeKind::Internal(_) if must_be_leaf => Some((
                Condition::LeafRule,
                format!(
                    "internal node must be a leaf: |S_v| = {n}, g = {g}, depth = {}",
                    node.depth()
                ),
            )),
            NodeKind::Leaf(_) if !must_be_leaf && g >= alpha && !inseparable(sv) => Some((
                Condition::LeafRule,
                format!(
                    "leaf must be internal: |S_v| = {n}, g = {g} >= alpha = {}",
                    params.alpha
                ),
            )),
            NodeKind::Internal(int) => {
                let chosen = gain_of(sv, &int.split());
                let best = enumerate(tree.schema(), sv);
                (chosen < best.max_gain - beta).then(|| {
                    (
                        Condition::SplitQuality,
                        format!(
                            "split {:?} has gain {} but the best gain is {}, beta = {}",
                            int.split(),
                            chosen,
                            best.max_gain,
                            params.beta
                        ),
                    )
                })
            }
            NodeKind::Leaf(leaf) => {
                let label = leaf.label();
                (counts[label as usize] < counts[1 - label as usize]).then(|| {
                    (
                        Condition::Majority,
                        format!("leaf label {label} is a strict minority in counts {counts:?}"),
                    )
                })
            }
        };
        if let Some((condition, detail)) = found {
            report.violation = Some(violation(tree, id, condition, detail));
            return report;
        }
    }
    report
}

fn inseparable(entries: &[(&LabeledExample, u64)]) -> bool {
    entries
        .windows(2)
        .all(|w| w[0].0.features() == w[1].0.features())
}

/// Leaf dictionaries must partition `s` exactly along the routing.
pub fn check_routing(tree: &DecisionTree, s: &ActiveMultiset) -> Option<Violation> {
    let routed = Routed::new(tree, s);
    let mut seen = 0u64;
    for (id, leaf) in tree.leaves() {
        let expected: BTreeMap<&LabeledExample, u64> = routed.of(id).iter().copied().collect();
        let actual: BTreeMap<&LabeledExample, u64> =
            leaf.examples().iter().map(|(e, &n)| (e, n)).collect();
        if expected != actual {
            return Some(violation(
                tree,
                id,
                Condition::Routing,
                format!(
                    "leaf holds {} examples, routing delivers {}",
                    leaf.examples().len(),
                    size(routed.of(id))
                ),
            ));
        }
        seen += leaf.examples().len();
    }
    (seen != s.len()).then(|| {
        violation(
            tree,
            tree.root(),
            Condition::Routing,
            format!("leaves hold {seen} examples, active set has {}", s.len()),
        )
    })
}

/// `c(v) <= epsilon s(v)` and `(1 - epsilon) s(v) <= |S_v| <= (1 + epsilon) s(v)`
/// at every node, with the same floating-point product the update uses.
pub fn check_counters(tree: &DecisionTree, s: &ActiveMultiset, epsilon: f64) -> Option<Violation> {
    let routed = Routed::new(tree, s);
    for id in tree.nodes() {
        let node = tree.node(id);
        let budget = epsilon * node.counter_s() as f64;
        let n = size(routed.of(id));
        let drift = (n as f64 - node.counter_s() as f64).abs();
        if node.counter_c() as f64 > budget || drift > budget {
            return Some(violation(
                tree,
                id,
                Condition::Counter,
                format!(
                    "c = {}, s = {}, |S_v| = {n}, epsilon = {epsilon}",
                    node.counter_c(),
                    node.counter_s()
                ),
            ));
        }
    }
    None
}

pub fn check_monotone_counters(tree: &DecisionTree) -> Option<Violation> {
    for id in tree.nodes() {
        if let NodeKind::Internal(int) = tree.node(id).kind() {
            let c = tree.node(id).counter_c();
            for child in [int.left(), int.right()] {
                if tree.node(child).counter_c() > c {
                    return Some(violation(
                        tree,
                        child,
                        Condition::MonotoneCounter,
                        format!("c = {} exceeds parent's {c}", tree.node(child).counter_c()),
                    ));
                }
            }
        }
    }
    None
}

/// For a subtree built from scratch with no update since: every internal
/// node's smaller child holds more than `gain / 4` of the node's examples,
/// the gain being recomputed exactly.
pub fn check_build_fractions(
    tree: &DecisionTree,
    root: NodeId,
    s: &ActiveMultiset,
) -> Option<Violation> {
    let routed = Routed::new(tree, s);
    for id in tree.subtree(root) {
        let NodeKind::Internal(int) = tree.node(id).kind() else {
            continue;
        };
        let sv = routed.of(id);
        let n = size(sv) as i128;
        let gamma = gain_of(sv, &int.split());
        let smaller = size(routed.of(int.left())).min(size(routed.of(int.right()))) as i128;
        if Exact::from_integer(smaller) <= gamma / 4 * n {
            return Some(violation(
                tree,
                id,
                Condition::BuildFraction,
                format!("smaller child has {smaller} of {n} examples, gain {gamma}"),
            ));
        }
    }
    None
}

/// Runs every check and returns the first violation.
pub fn verify_tree(tree: &DecisionTree, s: &ActiveMultiset) -> FeasibilityReport {
    let params = tree.params();
    if let Some(v) = check_routing(tree, s)
        .or_else(|| check_counters(tree, s, params.epsilon))
        .or_else(|| check_monotone_counters(tree))
    {
        return FeasibilityReport {
            nodes_checked: tree.node_count(),
            violation: Some(v),
        };
    }
    check_feasibility(tree, s, params)
}

/// The hard instance for the space lower bound, together with the active
/// set left after deleting every group but two.
#[derive(Debug, Clone)]
pub struct IndexInstance {
    pub full: ActiveMultiset,
    pub reduced: ActiveMultiset,
    /// Number of matrix-column features, `D`.
    pub columns: usize,
    /// Number of binary-id suffix bits, `ceil(log2(N + D) + 1)`.
    pub id_bits: usize,
}

/// Builds `2k` examples for every `i` in `1..=N+D` over `D + id_bits`
/// binary features. Group `i <= N` encodes row `i` of `a` (complemented for
/// the first `k` examples), group `N + j` sets every column but `j` on even
/// examples, and the last `id_bits` features spell `i` in binary. The first
/// `k` examples of each group are labeled 0, the rest 1. `reduced` keeps
/// the groups `kappa` and `N + ell` (1-based).
pub fn generate_index_instance(
    n: usize,
    d: usize,
    k: usize,
    a: &[Vec<bool>],
    kappa: usize,
    ell: usize,
) -> Result<IndexInstance> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidParams("N and D must be positive".into()));
    }
    if k == 0 || !k.is_multiple_of(2) {
        return Err(Error::InvalidParams(format!(
            "k must be a positive even integer, got {k}"
        )));
    }
    if a.len() != n || a.iter().any(|row| row.len() != d) {
        return Err(Error::InvalidParams(format!("A must be {n} x {d}")));
    }
    if !(1..=n).contains(&kappa) || !(1..=d).contains(&ell) {
        return Err(Error::InvalidParams(format!(
            "need 1 <= kappa <= {n} and 1 <= ell <= {d}"
        )));
    }
    let id_bits = ((n + d) as f64).log2().ceil() as usize + 1;
    let schema = Schema::real(d + id_bits);
    let mut full = ActiveMultiset::new(schema.clone());
    let mut reduced = ActiveMultiset::new(schema);
    for i in 1..=n + d {
        for h in 1..=2 * k {
            let mut x = vec![0.0; d + id_bits];
            for (j, xj) in x.iter_mut().enumerate().take(d) {
                let bit = if i <= n {
                    a[i - 1][j] == (h > k)
                } else {
                    j + 1 != i - n && h % 2 == 0
                };
                *xj = f64::from(u8::from(bit));
            }
            for b in 0..id_bits {
                x[d + b] = ((i >> (id_bits - 1 - b)) & 1) as f64;
            }
            let e = LabeledExample::new(x, Label::from(h > k))?;
            if i == kappa || i == n + ell {
                reduced.insert(e.clone())?;
            }
            full.insert(e)?;
        }
    }
    Ok(IndexInstance {
        full,
        reduced,
        columns: d,
        id_bits,
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub trials: usize,
    /// Number of `(feature, threshold)` gain comparisons made.
    pub gain_checks: usize,
    pub violations: usize,
    /// Largest `|g(S) - g(S')| / ED*` seen.
    pub max_gini_ratio: f64,
    /// Largest `|G(S) - G(S')| / ED*` seen.
    pub max_gain_ratio: f64,
    pub single_edit_trials: usize,
    /// Largest `|g(S) - g(S')| * max(|S|, |S'|) / 2` over single edits.
    pub max_single_edit_ratio: f64,
    pub first_violation: Option<String>,
}

const GRID: i64 = 8;

fn random_example(rng: &mut ChaCha8Rng, d: usize) -> LabeledExample {
    let x: Vec<f64> = (0..d).map(|_| rng.gen_range(0..GRID) as f64).collect();
    LabeledExample::new(x, rng.gen_range(0..2)).expect("valid example")
}

fn counts_of(s: &[LabeledExample]) -> BTreeMap<&LabeledExample, i128> {
    let mut m = BTreeMap::new();
    for e in s {
        *m.entry(e).or_insert(0) += 1;
    }
    m
}

fn split_counts(s: &[LabeledExample], j: usize, t: f64) -> ([u64; 2], [u64; 2]) {
    let (mut l, mut r) = ([0u64; 2], [0u64; 2]);
    for e in s {
        let side = if e.feature(j) <= t { &mut l } else { &mut r };
        side[e.label() as usize] += 1;
    }
    (l, r)
}

/// Random pairs `(S, S')` with sizes up to 200 and up to 5 features on a
/// small value grid. Checks `|g(S) - g(S')| <= 2.5 ED*`,
/// `|G(S, j, t) - G(S', j, t)| <= 12.5 ED*` for every feature and grid
/// threshold, and `|g(S) - g(S')| < 2 / max(|S|, |S'|)` when the pair is one
/// edit apart.
pub fn audit_smoothness(trials: usize, seed: u64) -> SmoothnessReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = SmoothnessReport {
        trials,
        ..Default::default()
    };
    let fail = |report: &mut SmoothnessReport, msg: String| {
        report.violations += 1;
        report.first_violation.get_or_insert(msg);
    };
    for trial in 0..trials {
        let d = rng.gen_range(1..=5);
        let size = rng.gen_range(1..=200);
        let s: Vec<LabeledExample> = (0..size).map(|_| random_example(&mut rng, d)).collect();
        let single = trial % 4 == 0;
        let edits = if single {
            1
        } else {
            rng.gen_range(0..=size / 2 + 1)
        };
        let mut t = s.clone();
        for _ in 0..edits {
            if !t.is_empty() && rng.gen_bool(0.5) {
                let i = rng.gen_range(0..t.len());
                t.swap_remove(i);
            } else {
                t.push(random_example(&mut rng, d));
            }
        }
        t.shuffle(&mut rng);

        let (cs, ct) = (counts_of(&s), counts_of(&t));
        let common: i128 = cs
            .iter()
            .map(|(e, &n)| n.min(ct.get(e).copied().unwrap_or(0)))
            .sum();
        let (ns, nt) = (s.len() as i128, t.len() as i128);
        let delta = ns + nt - 2 * common;
        let larger = ns.max(nt);
        let ed = Exact::new(delta, larger);

        let ls = label_counts(s.iter().map(|e| (e, 1)));
        let gs = exact_gini(ls[0], ls[1]);
        let lt = label_counts(t.iter().map(|e| (e, 1)));
        let gt = exact_gini(lt[0], lt[1]);
        let dg = (gs - gt).abs();
        if dg > Exact::new(5, 2) * ed {
            fail(
                &mut report,
                format!("trial {trial}: |g - g'| = {dg} > 2.5 * {ed}"),
            );
        }
        if !ed.is_zero() {
            report.max_gini_ratio = report.max_gini_ratio.max(exact_to_f64(dg / ed));
        }
        if delta == 1 {
            report.single_edit_trials += 1;
            if dg >= Exact::new(2, larger) {
                fail(
                    &mut report,
                    format!("trial {trial}: single edit moved g by {dg} >= 2/{larger}"),
                );
            }
            report.max_single_edit_ratio = report
                .max_single_edit_ratio
                .max(exact_to_f64(dg * larger / 2));
        }

        for j in 0..d {
            for th in -1..GRID {
                let th = th as f64;
                let (ls, rs) = split_counts(&s, j, th);
                let (lt, rt) = split_counts(&t, j, th);
                let dgain = (exact_gain_counts(ls, rs) - exact_gain_counts(lt, rt)).abs();
                report.gain_checks += 1;
                if dgain > Exact::new(25, 2) * ed {
                    fail(
                        &mut report,
                        format!("trial {trial}: |G - G'| = {dgain} > 12.5 * {ed} at ({j}, {th})"),
                    );
                }
                if !ed.is_zero() {
                    report.max_gain_ratio = report.max_gain_ratio.max(exact_to_f64(dgain / ed));
                }
            }
        }
    }
    report
}
