//! Binary classification tree with entropy splits and midpoint thresholds.
//!
//! Rows with `x[feature] < threshold` go left, the rest go right. Nodes live
//! in an arena ([`TreeModel::nodes`]) with the root at index 0; the build is
//! depth-first, left child first, and `split_records` lists the splits in
//! that order.
//!
//! Split quality is the weighted entropy `(i/n) H(a/i) + (j/n) H(k/j)` in
//! natural log. Internally it is evaluated as `n` times that value through a
//! table of `x ln x`, which keeps mirrored splits bit-identical. Candidates
//! within [`TIE_TOLERANCE`] of the running best count as ties; ties go to
//! the lowest feature index, then the smallest threshold.

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;

use crate::analytic::SplitSummary;
use crate::dgp::Dataset;
use crate::error::ensure_arg;
use crate::{Error, Result};

/// Two candidates whose weighted entropies differ by less than this are tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: NodeId,
        right: NodeId,
    },
    Leaf {
        n_total: usize,
        n_positive: usize,
        /// `n_positive / n_total`.
        prediction: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitRecord {
    pub feature: usize,
    pub threshold: f64,
    /// Depth of the node that was split (root is 0).
    pub depth: usize,
    pub summary: SplitSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Grow until every leaf is pure or cannot be split. Incompatible with
    /// `max_depth` and with `min_samples_split > 2`.
    pub fit_to_purity: bool,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    /// Consider only this feature when splitting.
    pub restrict_to_feature: Option<usize>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self::purity()
    }
}

impl FitConfig {
    pub fn purity() -> Self {
        FitConfig {
            fit_to_purity: true,
            max_depth: None,
            min_samples_split: 2,
            restrict_to_feature: None,
        }
    }

    pub fn purity_on_feature(feature: usize) -> Self {
        FitConfig {
            restrict_to_feature: Some(feature),
            ..Self::purity()
        }
    }

    pub fn validate(&self, n_features: usize) -> Result<()> {
        ensure_arg!(self.min_samples_split >= 2, "min_samples_split must be at least 2");
        if self.fit_to_purity {
            ensure_arg!(
                self.max_depth.is_none() && self.min_samples_split == 2,
                "fit_to_purity cannot be combined with depth or size limits"
            );
        }
        if let Some(f) = self.restrict_to_feature {
            ensure_arg!(f < n_features, "restrict_to_feature {f} out of range for {n_features} features");
        }
        Ok(())
    }
}

/// Structural taxonomy of small purity-fit trees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum TreeType {
    /// One split.
    Type1,
    /// Two splits on the same feature.
    Type2,
    /// Two splits on different features.
    Type3,
    /// Three splits.
    Type4,
    Other { splits: usize, distinct_features: usize },
}

impl TreeType {
    pub fn label(&self) -> String {
        match self {
            TreeType::Type1 => "Type1".into(),
            TreeType::Type2 => "Type2".into(),
            TreeType::Type3 => "Type3".into(),
            TreeType::Type4 => "Type4".into(),
            TreeType::Other { splits, distinct_features } => {
                format!("Other({splits},{distinct_features})")
            }
        }
    }
}

impl std::fmt::Display for TreeType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

/// Axis-aligned region of a leaf: `lower <= x < upper` per feature, with
/// infinite bounds where the path places no constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct LeafRegion {
    pub node: NodeId,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub prediction: f64,
}

impl LeafRegion {
    /// Volume of the region intersected with `[0, 1]^p`.
    pub fn unit_cube_volume(&self) -> f64 {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(&lo, &hi)| (hi.min(1.0) - lo.max(0.0)).max(0.0))
            .product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(&v, (&lo, &hi))| v >= lo && v < hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TreeModel {
    nodes: Vec<TreeNode>,
    n_features: usize,
    n_train: usize,
    split_records: Vec<SplitRecord>,
}

/// Result of [`best_split`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestSplit {
    pub feature: usize,
    pub threshold: f64,
    pub summary: SplitSummary,
}

/// Binary entropy in nats with `H(0) = H(1) = 0`.
pub fn entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        0.0
    } else {
        -q * q.ln() - (1.0 - q) * (1.0 - q).ln()
    }
}

/// `(i/n) H(a/i) + (j/n) H(k/j)`.
pub fn weighted_entropy(s: &SplitSummary) -> f64 {
    let n = s.n as f64;
    (s.i as f64 / n) * entropy(s.a as f64 / s.i as f64)
        + (s.j as f64 / n) * entropy(s.k as f64 / s.j as f64)
}

/// `x ln x` for integer `x` in `0..=max`, with `0 ln 0 = 0`.
#[derive(Debug, Clone)]
pub(crate) struct XLogX(Vec<f64>);

impl XLogX {
    pub(crate) fn new(max: usize) -> Self {
        XLogX(
            (0..=max)
                .map(|x| if x < 2 { 0.0 } else { x as f64 * (x as f64).ln() })
                .collect(),
        )
    }

    /// `size * H(pos / size)`.
    #[inline]
    pub(crate) fn side(&self, size: usize, pos: usize) -> f64 {
        self.0[size] - self.0[pos] - self.0[size - pos]
    }

    /// `n` times the weighted entropy. Addition is commutative in IEEE
    /// arithmetic, so a split and its mirror score identically.
    #[inline]
    pub(crate) fn split_score(&self, i: usize, a: usize, j: usize, k: usize) -> f64 {
        self.side(i, a) + self.side(j, k)
    }
}

/// Midpoints between adjacent strictly different values of a sorted slice.
pub fn candidate_splits(values: &[f64]) -> Vec<f64> {
    values
        .windows(2)
        .filter(|w| w[0] < w[1])
        .map(|w| midpoint(w[0], w[1]))
        .collect()
}

/// A threshold `t` with `lo < t <= hi`. Falls back to `hi` when the two are
/// adjacent floats and the midpoint rounds down onto `lo`.
#[inline]
fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo + 0.5 * (hi - lo);
    if t > lo {
        t
    } else {
        hi
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    left: usize,
    left_pos: usize,
    score: f64,
}

/// Scans one feature's rows (sorted by value) and updates `best` with any
/// candidate strictly better than it by more than the tie tolerance.
fn scan_feature(
    data: &Dataset,
    feature: usize,
    sorted: &[u32],
    n_pos: usize,
    xlx: &XLogX,
    best: &mut Option<Candidate>,
) {
    let n = sorted.len();
    let labels = data.labels();
    let tol = TIE_TOLERANCE * n as f64;
    let mut left_pos = 0usize;
    for t in 0..n - 1 {
        let r = sorted[t] as usize;
        left_pos += labels[r] as usize;
        let lo = data.value(r, feature);
        let hi = data.value(sorted[t + 1] as usize, feature);
        if lo >= hi {
            continue;
        }
        let i = t + 1;
        let score = xlx.split_score(i, left_pos, n - i, n_pos - left_pos);
        if best.is_none_or(|b| score < b.score - tol) {
            *best = Some(Candidate {
                feature,
                threshold: midpoint(lo, hi),
                left: i,
                left_pos,
                score,
            });
        }
    }
}

fn sort_rows(data: &Dataset, rows: impl Iterator<Item = u32>, feature: usize) -> Vec<u32> {
    let mut v: Vec<u32> = rows.collect();
    v.sort_by(|&a, &b| {
        data.value(a as usize, feature)
            .total_cmp(&data.value(b as usize, feature))
            .then(a.cmp(&b))
    });
    v
}

/// Entropy-minimizing split of `rows` over `allowed_features`, or `None` when
/// every allowed feature is constant on the node.
pub fn best_split(data: &Dataset, rows: &[usize], allowed_features: &[usize]) -> Result<Option<BestSplit>> {
    if rows.len() < 2 {
        return Err(Error::ContractViolation("best_split needs at least two rows".into()));
    }
    ensure_arg!(
        rows.iter().all(|&r| r < data.n_rows()) && rows.len() <= u32::MAX as usize,
        "row index out of range"
    );
    ensure_arg!(
        allowed_features.iter().all(|&f| f < data.n_features()),
        "feature index out of range"
    );
    let n_pos = rows.iter().filter(|&&r| data.labels()[r] == 1).count();
    if n_pos == 0 || n_pos == rows.len() {
        return Err(Error::ContractViolation("best_split called on a pure node".into()));
    }
    let mut features = allowed_features.to_vec();
    features.sort_unstable();
    features.dedup();
    let xlx = XLogX::new(rows.len());
    let mut best = None;
    for &f in &features {
        let sorted = sort_rows(data, rows.iter().map(|&r| r as u32), f);
        scan_feature(data, f, &sorted, n_pos, &xlx, &mut best);
    }
    Ok(best.map(|c| BestSplit {
        feature: c.feature,
        threshold: c.threshold,
        summary: SplitSummary {
            n: rows.len(),
            i: c.left,
            j: rows.len() - c.left,
            a: c.left_pos,
            k: n_pos - c.left_pos,
        },
    }))
}

struct Task {
    /// Per allowed feature, the node's rows sorted by that feature.
    lists: Vec<Vec<u32>>,
    depth: usize,
    /// Parent slot to patch with this node's id: (parent, is_left).
    parent: Option<(NodeId, bool)>,
}

/// Grows a tree on `data` according to `config`.
pub fn fit(data: &Dataset, config: &FitConfig) -> Result<TreeModel> {
    config.validate(data.n_features())?;
    let n = data.n_rows();
    ensure_arg!(n >= 1, "cannot fit an empty dataset");
    ensure_arg!(n <= u32::MAX as usize, "too many rows");
    let allowed: Vec<usize> = match config.restrict_to_feature {
        Some(f) => vec![f],
        None => (0..data.n_features()).collect(),
    };
    let xlx = XLogX::new(n);
    let labels = data.labels();
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut records = Vec::new();
    let mut goes_left = vec![false; n];

    let root_lists = allowed
        .iter()
        .map(|&f| sort_rows(data, 0..n as u32, f))
        .collect();
    let mut stack = vec![Task {
        lists: root_lists,
        depth: 0,
        parent: None,
    }];

    while let Some(Task { lists, depth, parent }) = stack.pop() {
        let id = nodes.len();
        if let Some((p, is_left)) = parent {
            if let TreeNode::Internal { left, right, .. } = &mut nodes[p] {
                *(if is_left { left } else { right }) = id;
            }
        }
        let rows = &lists[0];
        let size = rows.len();
        let n_pos = rows.iter().filter(|&&r| labels[r as usize] == 1).count();
        let stop = n_pos == 0
            || n_pos == size
            || size < config.min_samples_split
            || config.max_depth.is_some_and(|d| depth >= d);
        let mut best = None;
        if !stop {
            for (&f, list) in allowed.iter().zip(&lists) {
                scan_feature(data, f, list, n_pos, &xlx, &mut best);
            }
        }
        let Some(c) = best else {
            nodes.push(TreeNode::Leaf {
                n_total: size,
                n_positive: n_pos,
                prediction: n_pos as f64 / size as f64,
            });
            continue;
        };

        records.push(SplitRecord {
            feature: c.feature,
            threshold: c.threshold,
            depth,
            summary: SplitSummary {
                n: size,
                i: c.left,
                j: size - c.left,
                a: c.left_pos,
                k: n_pos - c.left_pos,
            },
        });
        nodes.push(TreeNode::Internal {
            feature: c.feature,
            threshold: c.threshold,
            left: usize::MAX,
            right: usize::MAX,
        });

        for &r in rows {
            goes_left[r as usize] = data.value(r as usize, c.feature) < c.threshold;
        }
        let mut left_lists = Vec::with_capacity(lists.len());
        let mut right_lists = Vec::with_capacity(lists.len());
        for list in lists {
            let (l, r): (Vec<u32>, Vec<u32>) = list.into_iter().partition(|&r| goes_left[r as usize]);
            debug_assert_eq!(l.len(), c.left);
            left_lists.push(l);
            right_lists.push(r);
        }
        stack.push(Task {
            lists: right_lists,
            depth: depth + 1,
            parent: Some((id, false)),
        });
        stack.push(Task {
            lists: left_lists,
            depth: depth + 1,
            parent: Some((id, true)),
        });
    }

    Ok(TreeModel {
        nodes,
        n_features: data.n_features(),
        n_train: n,
        split_records: records,
    })
}

impl TreeModel {
    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_train(&self) -> usize {
        self.n_train
    }

    pub fn split_records(&self) -> &[SplitRecord] {
        &self.split_records
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes
            .iter()
            .filter(|n| matches!(n, TreeNode::Leaf { .. }))
            .count()
    }

    /// Leaf reached by `x`. Assumes `x.len() == n_features`.
    fn leaf_of(&self, x: &[f64]) -> &TreeNode {
        let mut node = &self.nodes[0];
        while let TreeNode::Internal {
            feature,
            threshold,
            left,
            right,
        } = node
        {
            node = &self.nodes[if x[*feature] < *threshold { *left } else { *right }];
        }
        node
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        ensure_arg!(
            x.len() == self.n_features,
            "expected {} features, got {}",
            self.n_features,
            x.len()
        );
        match self.leaf_of(x) {
            TreeNode::Leaf { prediction, .. } => Ok(*prediction),
            TreeNode::Internal { .. } => unreachable!("leaf_of stops at a leaf"),
        }
    }

    /// Regions of all leaves, in node order.
    pub fn leaf_regions(&self) -> Vec<LeafRegion> {
        let p = self.n_features;
        let mut out = Vec::with_capacity(self.nodes.len() / 2 + 1);
        let mut stack = vec![(0usize, vec![f64::NEG_INFINITY; p], vec![f64::INFINITY; p])];
        while let Some((id, lower, upper)) = stack.pop() {
            match &self.nodes[id] {
                TreeNode::Leaf { prediction, .. } => out.push(LeafRegion {
                    node: id,
                    lower,
                    upper,
                    prediction: *prediction,
                }),
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    let mut left_upper = upper.clone();
                    left_upper[*feature] = left_upper[*feature].min(*threshold);
                    let mut right_lower = lower.clone();
                    right_lower[*feature] = right_lower[*feature].max(*threshold);
                    stack.push((*right, right_lower, upper));
                    stack.push((*left, lower, left_upper));
                }
            }
        }
        out.sort_by_key(|r| r.node);
        out
    }

    /// Exact integral of the tree's output over `[0, 1]^p`.
    pub fn prevalence_integral_unit_cube(&self) -> f64 {
        self.leaf_regions()
            .iter()
            .filter(|r| r.prediction > 0.0)
            .map(|r| r.unit_cube_volume() * r.prediction)
            .sum::<crate::summation::NeumaierSum>()
            .value()
    }

    /// Mean prediction over `test`, and the ratio of summed predictions to
    /// summed true probabilities when the latter are available.
    pub fn prevalence_empirical(&self, test: &Dataset) -> Result<(f64, Option<f64>)> {
        ensure_arg!(test.n_rows() >= 1, "empty test set");
        ensure_arg!(
            test.n_features() == self.n_features,
            "test set has {} features, model has {}",
            test.n_features(),
            self.n_features
        );
        let preds: Vec<f64> = (0..test.n_rows())
            .map(|r| match self.leaf_of(test.row(r)) {
                TreeNode::Leaf { prediction, .. } => *prediction,
                TreeNode::Internal { .. } => unreachable!(),
            })
            .collect();
        Ok(prediction_summary(&preds, test.true_probs()))
    }

    pub fn classify_tree_type(&self) -> TreeType {
        classify_splits(&self.split_records)
    }

    /// Debug JSON: internal nodes as `{"feature","threshold","left","right"}`,
    /// leaves as `{"n","pos","pred"}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(&JsonNode { model: self, id: 0 }).expect("tree serializes")
    }
}

/// `(mean(preds), sum(preds) / sum(true_probs))`.
pub fn prediction_summary(preds: &[f64], true_probs: Option<&[f64]>) -> (f64, Option<f64>) {
    let total = crate::summation::sum(preds);
    let ratio = true_probs.map(|tp| total / crate::summation::sum(tp));
    (total / preds.len() as f64, ratio)
}

/// Type of a tree from its split list.
pub fn classify_splits(records: &[SplitRecord]) -> TreeType {
    let mut features: Vec<usize> = records.iter().map(|r| r.feature).collect();
    features.sort_unstable();
    features.dedup();
    match (records.len(), features.len()) {
        (1, _) => TreeType::Type1,
        (2, 1) => TreeType::Type2,
        (2, _) => TreeType::Type3,
        (3, _) => TreeType::Type4,
        (splits, distinct_features) => TreeType::Other {
            splits,
            distinct_features,
        },
    }
}

struct JsonNode<'a> {
    model: &'a TreeModel,
    id: NodeId,
}

impl Serialize for JsonNode<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(4))?;
        match &self.model.nodes[self.id] {
            TreeNode::Internal {
                feature,
                threshold,
                left,
                right,
            } => {
                map.serialize_entry("feature", feature)?;
                map.serialize_entry("threshold", threshold)?;
                map.serialize_entry("left", &JsonNode { model: self.model, id: *left })?;
                map.serialize_entry("right", &JsonNode { model: self.model, id: *right })?;
            }
            TreeNode::Leaf {
                n_total,
                n_positive,
                prediction,
            } => {
                map.serialize_entry("n", n_total)?;
                map.serialize_entry("pos", n_positive)?;
                map.serialize_entry("pred", prediction)?;
            }
        }
        map.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::{generate_constant_rate, generate_single_positive};
    use crate::seed::rng_from_seed;
    use rand::Rng;

    fn one_feature(values: &[f64], labels: &[u8]) -> Dataset {
        Dataset::new(values.to_vec(), 1, labels.to_vec(), None).unwrap()
    }

    fn ordered(labels: &[u8]) -> Dataset {
        let values: Vec<f64> = (0..labels.len()).map(|t| (t as f64 + 0.5) / labels.len() as f64).collect();
        one_feature(&values, labels)
    }

    fn all_rows(d: &Dataset) -> Vec<usize> {
        (0..d.n_rows()).collect()
    }

    #[test]
    fn candidate_midpoints() {
        let c = candidate_splits(&[0.2, 0.4, 0.9]);
        assert_eq!(c.len(), 2);
        assert!((c[0] - 0.3).abs() < 1e-15 && (c[1] - 0.65).abs() < 1e-15);
        let c = candidate_splits(&[0.5, 0.5, 0.7]);
        assert_eq!(c.len(), 1);
        assert!((c[0] - 0.6).abs() < 1e-15);
        assert!(candidate_splits(&[0.4]).is_empty());
        assert!(candidate_splits(&[]).is_empty());
    }

    #[test]
    fn midpoint_between_adjacent_floats_separates() {
        let lo = 0.3f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        let t = midpoint(lo, hi);
        assert!(lo < t && t <= hi);
    }

    #[test]
    fn worked_example_split() {
        let d = ordered(&[0, 1, 1, 0, 0, 0, 1, 0, 0, 0]);
        let s = best_split(&d, &all_rows(&d), &[0]).unwrap().unwrap();
        assert_eq!((s.summary.i, s.summary.a, s.summary.k), (3, 2, 1));
        assert!(s.threshold > d.value(2, 0) && s.threshold < d.value(3, 0));
    }

    #[test]
    fn zero_entropy_split_found() {
        let d = ordered(&[1, 0, 0]);
        let s = best_split(&d, &all_rows(&d), &[0]).unwrap().unwrap();
        assert_eq!((s.summary.i, s.summary.a, s.summary.k), (1, 1, 0));
        assert_eq!(weighted_entropy(&s.summary), 0.0);
    }

    #[test]
    fn tie_goes_left() {
        let d = ordered(&[0, 1, 0]);
        let left = SplitSummary::new(3, 1, 0, 1).unwrap();
        let right = SplitSummary::new(3, 2, 1, 0).unwrap();
        // Brute force: both candidates score (2/3) H(1/2).
        let h = -(0.5f64.ln());
        assert!((weighted_entropy(&left) - 2.0 / 3.0 * h).abs() < 1e-15);
        assert!((weighted_entropy(&right) - 2.0 / 3.0 * h).abs() < 1e-15);
        let s = best_split(&d, &all_rows(&d), &[0]).unwrap().unwrap();
        assert_eq!(s.summary, left);
    }

    #[test]
    fn feature_tie_goes_to_lowest_index() {
        // Positive is extreme on both features.
        let d = Dataset::from_rows(
            &[vec![0.9, 0.1], vec![0.2, 0.5], vec![0.4, 0.7], vec![0.1, 0.6]],
            vec![1, 0, 0, 0],
        )
        .unwrap();
        let s = best_split(&d, &all_rows(&d), &[1, 0]).unwrap().unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn best_split_contracts() {
        let d = ordered(&[0, 0, 0]);
        assert!(matches!(best_split(&d, &all_rows(&d), &[0]), Err(Error::ContractViolation(_))));
        let d = ordered(&[0, 1, 0]);
        assert!(matches!(best_split(&d, &[1], &[0]), Err(Error::ContractViolation(_))));
        assert!(best_split(&d, &all_rows(&d), &[3]).is_err());
        let dup = one_feature(&[0.5, 0.5, 0.5], &[1, 0, 0]);
        assert_eq!(best_split(&dup, &all_rows(&dup), &[0]).unwrap(), None);
    }

    #[test]
    fn unsplittable_node_becomes_mixed_leaf() {
        let d = one_feature(&[0.5, 0.5, 0.5, 0.8], &[1, 0, 0, 0]);
        let m = fit(&d, &FitConfig::purity()).unwrap();
        assert_eq!(m.split_records().len(), 1);
        let preds: Vec<f64> = m
            .nodes()
            .iter()
            .filter_map(|n| match n {
                TreeNode::Leaf { prediction, .. } => Some(*prediction),
                _ => None,
            })
            .collect();
        assert_eq!(preds, vec![1.0 / 3.0, 0.0]);
    }

    #[test]
    fn extreme_positive_gives_type1_stump() {
        let d = Dataset::from_rows(
            &[vec![0.95, 0.4], vec![0.2, 0.1], vec![0.5, 0.9], vec![0.7, 0.3]],
            vec![1, 0, 0, 0],
        )
        .unwrap();
        let m = fit(&d, &FitConfig::purity()).unwrap();
        assert_eq!(m.n_leaves(), 2);
        assert_eq!(m.classify_tree_type(), TreeType::Type1);
        let t = m.split_records()[0].threshold;
        assert!((t - 0.825).abs() < 1e-15);
        assert!((m.prevalence_integral_unit_cube() - (1.0 - 0.825)).abs() < 1e-15);
    }

    #[test]
    fn restricted_fit_gives_type2() {
        // Positive interior on both features.
        let d = Dataset::from_rows(
            &[
                vec![0.5, 0.5],
                vec![0.1, 0.9],
                vec![0.3, 0.2],
                vec![0.7, 0.1],
                vec![0.9, 0.8],
            ],
            vec![1, 0, 0, 0, 0],
        )
        .unwrap();
        let m = fit(&d, &FitConfig::purity_on_feature(0)).unwrap();
        assert_eq!(m.n_leaves(), 3);
        assert_eq!(m.classify_tree_type(), TreeType::Type2);
        assert!(m.split_records().iter().all(|r| r.feature == 0));
        // Positive region is [0.4, 0.6) along feature 0.
        assert!((m.prevalence_integral_unit_cube() - 0.2).abs() < 1e-15);
        for r in 0..d.n_rows() {
            assert_eq!(m.predict(d.row(r)).unwrap(), d.labels()[r] as f64);
        }
    }

    #[test]
    fn stump_prediction_rule() {
        let d = ordered(&[1, 0]);
        let m = fit(&d, &FitConfig::purity()).unwrap();
        let t = m.split_records()[0].threshold;
        assert_eq!(t, 0.5);
        assert_eq!(m.predict(&[0.4999]).unwrap(), 1.0);
        assert_eq!(m.predict(&[0.5]).unwrap(), 0.0);
        assert!((m.prevalence_integral_unit_cube() - 0.5).abs() < 1e-15);
        assert!(m.predict(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn purity_fit_reproduces_training_labels() {
        for seed in 0..50 {
            let d = generate_constant_rate(40, 7, 3, seed).unwrap();
            let m = fit(&d, &FitConfig::purity()).unwrap();
            for r in 0..d.n_rows() {
                assert_eq!(m.predict(d.row(r)).unwrap(), d.labels()[r] as f64);
            }
            for node in m.nodes() {
                if let TreeNode::Leaf { n_total, n_positive, prediction } = node {
                    assert!(*n_positive == 0 || n_positive == n_total);
                    assert_eq!(*prediction, *n_positive as f64 / *n_total as f64);
                }
            }
            let total: usize = m
                .nodes()
                .iter()
                .map(|n| match n {
                    TreeNode::Leaf { n_total, .. } => *n_total,
                    _ => 0,
                })
                .sum();
            assert_eq!(total, m.n_train());
        }
    }

    #[test]
    fn thresholds_lie_inside_node_boxes() {
        let d = generate_constant_rate(200, 60, 3, 5).unwrap();
        let m = fit(&d, &FitConfig::purity()).unwrap();
        // Walk with boxes and check every threshold narrows its box.
        let mut stack = vec![(0usize, vec![0.0f64; 3], vec![1.0f64; 3])];
        while let Some((id, lo, hi)) = stack.pop() {
            if let TreeNode::Internal { feature, threshold, left, right } = &m.nodes()[id] {
                assert!(*threshold > lo[*feature] && *threshold < hi[*feature]);
                let mut lhi = hi.clone();
                lhi[*feature] = *threshold;
                let mut rlo = lo.clone();
                rlo[*feature] = *threshold;
                stack.push((*left, lo, lhi));
                stack.push((*right, rlo, hi));
            }
        }
    }

    #[test]
    fn depth_and_size_limits() {
        let d = generate_constant_rate(100, 30, 2, 1).unwrap();
        let cfg = FitConfig {
            fit_to_purity: false,
            max_depth: Some(2),
            min_samples_split: 2,
            restrict_to_feature: None,
        };
        let m = fit(&d, &cfg).unwrap();
        assert!(m.split_records().iter().all(|r| r.depth < 2));
        assert!(m.n_leaves() <= 4);
        let cfg = FitConfig {
            fit_to_purity: false,
            max_depth: None,
            min_samples_split: 101,
            restrict_to_feature: None,
        };
        assert_eq!(fit(&d, &cfg).unwrap().n_leaves(), 1);
        let bad = FitConfig { max_depth: Some(3), ..FitConfig::purity() };
        assert!(fit(&d, &bad).is_err());
        let bad = FitConfig { min_samples_split: 1, fit_to_purity: false, ..FitConfig::purity() };
        assert!(fit(&d, &bad).is_err());
        assert!(fit(&d, &FitConfig::purity_on_feature(2)).is_err());
    }

    #[test]
    fn pure_dataset_is_single_leaf() {
        let d = one_feature(&[0.1, 0.2, 0.3], &[0, 0, 0]);
        let m = fit(&d, &FitConfig::purity()).unwrap();
        assert_eq!(m.classify_tree_type(), TreeType::Other { splits: 0, distinct_features: 0 });
        assert_eq!(m.prevalence_integral_unit_cube(), 0.0);
    }

    #[test]
    fn classify_examples() {
        let rec = |feature| SplitRecord {
            feature,
            threshold: 0.5,
            depth: 0,
            summary: SplitSummary { n: 3, i: 1, j: 2, a: 1, k: 0 },
        };
        assert_eq!(classify_splits(&[rec(0)]), TreeType::Type1);
        assert_eq!(classify_splits(&[rec(0), rec(0)]), TreeType::Type2);
        assert_eq!(classify_splits(&[rec(0), rec(1)]), TreeType::Type3);
        assert_eq!(classify_splits(&[rec(0), rec(1), rec(0)]), TreeType::Type4);
        assert_eq!(
            classify_splits(&[rec(0), rec(1), rec(0), rec(2)]),
            TreeType::Other { splits: 4, distinct_features: 3 }
        );
    }

    #[test]
    fn empirical_prevalence_ratios() {
        let d = ordered(&[1, 0]);
        let m = fit(&d, &FitConfig::purity()).unwrap();
        let test = Dataset::new(vec![0.1, 0.9], 1, vec![1, 0], Some(vec![1.0, 0.0])).unwrap();
        assert_eq!(m.prevalence_empirical(&test).unwrap(), (0.5, Some(1.0)));
        let test = Dataset::new(vec![0.7, 0.9], 1, vec![0, 0], Some(vec![0.3, 0.2])).unwrap();
        assert_eq!(m.prevalence_empirical(&test).unwrap(), (0.0, Some(0.0)));
        let (mean, ratio) = prediction_summary(&[0.2, 0.4], Some(&[0.1, 0.2]));
        assert!((mean - 0.3).abs() < 1e-15);
        assert!((ratio.unwrap() - 2.0).abs() < 1e-15);
        let no_truth = Dataset::new(vec![0.7, 0.9], 1, vec![0, 0], None).unwrap();
        assert_eq!(m.prevalence_empirical(&no_truth).unwrap().1, None);
    }

    #[test]
    fn json_shape() {
        let d = ordered(&[1, 0]);
        let m = fit(&d, &FitConfig::purity()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["feature"], 0);
        assert_eq!(v["threshold"], 0.5);
        assert_eq!(v["left"]["n"], 1);
        assert_eq!(v["left"]["pos"], 1);
        assert_eq!(v["left"]["pred"], 1.0);
        assert_eq!(v["right"]["pred"], 0.0);
    }

    #[test]
    fn single_positive_uses_at_most_two_splits_restricted() {
        for seed in 0..500 {
            let d = generate_single_positive(20, 2, seed).unwrap();
            let m = fit(&d, &FitConfig::purity_on_feature(1)).unwrap();
            assert!(matches!(m.classify_tree_type(), TreeType::Type1 | TreeType::Type2));
        }
    }

    #[test]
    fn argmin_is_base_independent() {
        let mut rng = rng_from_seed(77);
        for _ in 0..300 {
            let n = rng.random_range(3..30usize);
            let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
            if labels.iter().all(|&y| y == labels[0]) {
                continue;
            }
            let argmin = |log: fn(f64) -> f64| {
                let h = |q: f64| if q <= 0.0 || q >= 1.0 { 0.0 } else { -q * log(q) - (1.0 - q) * log(1.0 - q) };
                let m: usize = labels.iter().map(|&y| y as usize).sum();
                let mut best = (f64::INFINITY, 0);
                let mut a = 0;
                for i in 1..n {
                    a += labels[i - 1] as usize;
                    let w = (i as f64 / n as f64) * h(a as f64 / i as f64)
                        + ((n - i) as f64 / n as f64) * h((m - a) as f64 / (n - i) as f64);
                    if w < best.0 - 1e-12 {
                        best = (w, i);
                    }
                }
                best.1
            };
            assert_eq!(argmin(f64::ln), argmin(f64::log2));
            let d = ordered(&labels);
            let s = best_split(&d, &all_rows(&d), &[0]).unwrap().unwrap();
            assert_eq!(s.summary.i, argmin(f64::ln));
        }
    }
}
