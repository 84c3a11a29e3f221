//! Regression trees grown by exhaustive axis-aligned split search.
//!
//! Each node predicts the mean of the training targets routed to it. A node is
//! split on the (feature, threshold) pair minimizing the split objective; rows
//! with `x[feature] <= threshold` go left.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::numeric::CompensatedSum;
use crate::samples::Samples;

/// Relative slack under which two objective values are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SplitWeighting {
    /// `|N1| var(N1) + |N2| var(N2)`, i.e. the children's summed squared error.
    #[default]
    SizeWeighted,
    /// `var(N1) + var(N2)`.
    Unweighted,
}

impl SplitWeighting {
    /// Objective contribution of a child with `n` rows and squared error `sse`.
    #[inline]
    pub fn child_term(self, sse: f64, n: usize) -> f64 {
        match self {
            SplitWeighting::SizeWeighted => sse,
            SplitWeighting::Unweighted => sse / n as f64,
        }
    }

    /// The same quantity for an unsplit node, which a split must beat.
    #[inline]
    pub fn node_term(self, sse: f64, n: usize) -> f64 {
        self.child_term(sse, n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    /// `None` grows until the other stopping rules fire.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    #[serde(default)]
    pub split_weighting: SplitWeighting,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            max_depth: Some(5),
            min_samples_split: 2,
            split_weighting: SplitWeighting::SizeWeighted,
        }
    }
}

impl TreeConfig {
    pub fn with_depth(max_depth: usize) -> Self {
        TreeConfig {
            max_depth: Some(max_depth),
            ..TreeConfig::default()
        }
    }

    pub fn unlimited() -> Self {
        TreeConfig {
            max_depth: None,
            ..TreeConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_depth == Some(0) {
            return Err(Error::InvalidConfig("max_depth must be >= 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidConfig("min_samples_split must be >= 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRule {
    pub feature_index: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TreeNode {
    Leaf {
        prediction: f64,
        n_samples: usize,
    },
    Internal {
        rule: SplitRule,
        /// Split objective achieved by `rule` on this node's rows.
        objective: f64,
        /// Mean target of the node's rows, kept for rendering.
        mean: f64,
        n_samples: usize,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
}

impl TreeNode {
    pub fn n_samples(&self) -> usize {
        match self {
            TreeNode::Leaf { n_samples, .. } | TreeNode::Internal { n_samples, .. } => *n_samples,
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Internal { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    fn visit_rules(&self, f: &mut impl FnMut(&SplitRule)) {
        if let TreeNode::Internal {
            rule, left, right, ..
        } = self
        {
            f(rule);
            left.visit_rules(f);
            right.visit_rules(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub root: TreeNode,
    pub config: TreeConfig,
    pub feature_names: Vec<String>,
    pub n_features: usize,
}

/// Best split of a set of rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature_index: usize,
    pub threshold: f64,
    pub objective: f64,
}

/// Threshold between two consecutive distinct values `a < b` such that
/// `a <= t < b`.
#[inline]
pub fn midpoint(a: f64, b: f64) -> f64 {
    let t = a / 2.0 + b / 2.0;
    if t < b {
        t
    } else {
        a
    }
}

pub fn fit_tree(
    data: &Samples,
    config: &TreeConfig,
    feature_subset: Option<&[usize]>,
) -> Result<RegressionTree> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let features = resolve_subset(feature_subset, data.n_features())?;

    // one index list per candidate feature, each sorted by that feature
    let sorted: Vec<Vec<usize>> = features
        .iter()
        .map(|&f| {
            let mut idx: Vec<usize> = (0..data.len()).collect();
            idx.sort_by(|&a, &b| data.value(a, f).total_cmp(&data.value(b, f)).then(a.cmp(&b)));
            idx
        })
        .collect();

    let mut builder = Builder {
        data,
        config,
        features: &features,
        goes_left: vec![false; data.len()],
    };
    let root = builder.grow(sorted, 0);
    Ok(RegressionTree {
        root,
        config: *config,
        feature_names: data.feature_names().to_vec(),
        n_features: data.n_features(),
    })
}

fn resolve_subset(subset: Option<&[usize]>, n_features: usize) -> Result<Vec<usize>> {
    let mut features = match subset {
        None => (0..n_features).collect::<Vec<_>>(),
        Some([]) => return Err(Error::InvalidConfig("feature subset is empty".into())),
        Some(s) => s.to_vec(),
    };
    features.sort_unstable();
    features.dedup();
    if let Some(&bad) = features.iter().find(|&&f| f >= n_features) {
        return Err(Error::InvalidConfig(format!(
            "feature index {bad} out of range for {n_features} features"
        )));
    }
    Ok(features)
}

struct Builder<'a> {
    data: &'a Samples,
    config: &'a TreeConfig,
    features: &'a [usize],
    goes_left: Vec<bool>,
}

impl Builder<'_> {
    fn grow(&mut self, sorted: Vec<Vec<usize>>, depth: usize) -> TreeNode {
        let rows = &sorted[0];
        let n = rows.len();
        let y = self.data.targets();
        let mean = rows.iter().map(|&i| y[i]).collect::<CompensatedSum>().value() / n as f64;
        let leaf = TreeNode::Leaf {
            prediction: mean,
            n_samples: n,
        };

        let depth_reached = self.config.max_depth.is_some_and(|d| depth >= d);
        let constant = rows.iter().all(|&i| y[i] == y[rows[0]]);
        if n < self.config.min_samples_split || depth_reached || constant {
            return leaf;
        }

        let Some(best) = best_split_sorted(
            self.data,
            &sorted,
            self.features,
            mean,
            self.config.split_weighting,
        ) else {
            return leaf;
        };

        let feature = best.feature_index;
        for &i in rows {
            self.goes_left[i] = self.data.value(i, feature) <= best.threshold;
        }
        let (mut left_lists, mut right_lists) = (Vec::new(), Vec::new());
        for list in sorted {
            let (l, r): (Vec<usize>, Vec<usize>) = list.into_iter().partition(|&i| self.goes_left[i]);
            left_lists.push(l);
            right_lists.push(r);
        }
        debug_assert!(!left_lists[0].is_empty() && !right_lists[0].is_empty());

        let left = self.grow(left_lists, depth + 1);
        let right = self.grow(right_lists, depth + 1);
        TreeNode::Internal {
            rule: SplitRule {
                feature_index: feature,
                threshold: best.threshold,
            },
            objective: best.objective,
            mean,
            n_samples: n,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// Single-node split search: lists `sorted[k]` hold the same rows ordered by
/// feature `features[k]`. Returns `None` when no split beats the unsplit node.
///
/// Sums run over targets centered on the node mean, forward for the left child
/// and backward for the right child, with compensated accumulation.
fn best_split_sorted(
    data: &Samples,
    sorted: &[Vec<usize>],
    features: &[usize],
    node_mean: f64,
    weighting: SplitWeighting,
) -> Option<SplitCandidate> {
    let y = data.targets();
    let n = sorted[0].len();
    let centered = |i: usize| y[i] - node_mean;

    let node_sse = sorted[0]
        .iter()
        .map(|&i| {
            let d = centered(i);
            d * d
        })
        .collect::<CompensatedSum>()
        .value();
    let parent = weighting.node_term(node_sse, n);
    let tol = TIE_TOLERANCE * parent.abs().max(f64::MIN_POSITIVE);

    let mut best: Option<SplitCandidate> = None;
    let mut suffix_sse = vec![0.0; n];

    for (list, &feature) in sorted.iter().zip(features) {
        // suffix_sse[p] = squared error of rows list[p..] about their own mean
        let (mut s, mut q) = (CompensatedSum::default(), CompensatedSum::default());
        for p in (1..n).rev() {
            let d = centered(list[p]);
            s.add(d);
            q.add(d * d);
            let m = (n - p) as f64;
            suffix_sse[p] = (q.value() - s.value() * s.value() / m).max(0.0);
        }

        let (mut s, mut q) = (CompensatedSum::default(), CompensatedSum::default());
        for p in 0..n - 1 {
            let d = centered(list[p]);
            s.add(d);
            q.add(d * d);
            let (a, b) = (data.value(list[p], feature), data.value(list[p + 1], feature));
            if a >= b {
                continue;
            }
            let n_left = p + 1;
            let left_sse = (q.value() - s.value() * s.value() / n_left as f64).max(0.0);
            let objective = weighting.child_term(left_sse, n_left)
                + weighting.child_term(suffix_sse[p + 1], n - n_left);
            if best.is_none_or(|b| objective < b.objective - tol) {
                best = Some(SplitCandidate {
                    feature_index: feature,
                    threshold: midpoint(a, b),
                    objective,
                });
            }
        }
    }
    best.filter(|b| b.objective < parent - tol)
}

/// Best split over all rows of `data`, as chosen at a tree root.
pub fn best_split(
    data: &Samples,
    feature_subset: Option<&[usize]>,
    weighting: SplitWeighting,
) -> Result<Option<SplitCandidate>> {
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let features = resolve_subset(feature_subset, data.n_features())?;
    if data.len() < 2 {
        return Ok(None);
    }
    let sorted: Vec<Vec<usize>> = features
        .iter()
        .map(|&f| {
            let mut idx: Vec<usize> = (0..data.len()).collect();
            idx.sort_by(|&a, &b| data.value(a, f).total_cmp(&data.value(b, f)).then(a.cmp(&b)));
            idx
        })
        .collect();
    let mean = crate::numeric::mean(data.targets());
    Ok(best_split_sorted(data, &sorted, &features, mean, weighting))
}

impl RegressionTree {
    pub fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features {
            return Err(Error::ArityMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        Ok(self.predict_unchecked(row))
    }

    /// Caller guarantees `row.len() == n_features`.
    pub fn predict_unchecked(&self, row: &[f64]) -> f64 {
        let mut node = &self.root;
        loop {
            match node {
                TreeNode::Leaf { prediction, .. } => return *prediction,
                TreeNode::Internal {
                    rule, left, right, ..
                } => {
                    node = if row[rule.feature_index] <= rule.threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn n_leaves(&self) -> usize {
        self.root.n_leaves()
    }

    pub fn n_train(&self) -> usize {
        self.root.n_samples()
    }

    /// Root split rule and its objective, if the root was split.
    pub fn root_split(&self) -> Option<SplitCandidate> {
        match &self.root {
            TreeNode::Leaf { .. } => None,
            TreeNode::Internal {
                rule, objective, ..
            } => Some(SplitCandidate {
                feature_index: rule.feature_index,
                threshold: rule.threshold,
                objective: *objective,
            }),
        }
    }

    /// Every feature index referenced by a split, ascending.
    pub fn split_features(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.root.visit_rules(&mut |r| out.push(r.feature_index));
        out.sort_unstable();
        out.dedup();
        out
    }

    fn share_pct(&self, n: usize) -> f64 {
        100.0 * n as f64 / self.n_train() as f64
    }

    /// Nested JSON: internal nodes carry `feature`, `threshold`, `left`, `right`;
    /// leaves carry `prediction` and `share_pct` of the training rows.
    pub fn export_json(&self) -> Value {
        fn node_json(tree: &RegressionTree, node: &TreeNode) -> Value {
            match node {
                TreeNode::Leaf {
                    prediction,
                    n_samples,
                } => json!({
                    "prediction": prediction,
                    "share_pct": tree.share_pct(*n_samples),
                }),
                TreeNode::Internal {
                    rule, left, right, ..
                } => json!({
                    "feature": tree.feature_names[rule.feature_index],
                    "threshold": rule.threshold,
                    "left": node_json(tree, left),
                    "right": node_json(tree, right),
                }),
            }
        }
        node_json(self, &self.root)
    }

    /// Indented rendering, one node per line, left subtree first.
    pub fn export_text(&self) -> String {
        fn walk(tree: &RegressionTree, node: &TreeNode, depth: usize, out: &mut String) {
            let pad = "  ".repeat(depth);
            match node {
                TreeNode::Leaf {
                    prediction,
                    n_samples,
                } => out.push_str(&format!(
                    "{pad}predict {prediction:.2} ({:.1}%)\n",
                    tree.share_pct(*n_samples)
                )),
                TreeNode::Internal {
                    rule,
                    mean,
                    n_samples,
                    left,
                    right,
                    ..
                } => {
                    out.push_str(&format!(
                        "{pad}{} <= {:.4} ({:.1}%, mean {mean:.2})\n",
                        tree.feature_names[rule.feature_index],
                        rule.threshold,
                        tree.share_pct(*n_samples)
                    ));
                    walk(tree, left, depth + 1, out);
                    walk(tree, right, depth + 1, out);
                }
            }
        }
        let mut out = String::new();
        walk(self, &self.root, 0, &mut out);
        out
    }

    /// Leaf shares in left-to-right order.
    pub fn leaf_shares(&self) -> Vec<f64> {
        fn walk(tree: &RegressionTree, node: &TreeNode, out: &mut Vec<f64>) {
            match node {
                TreeNode::Leaf { n_samples, .. } => out.push(tree.share_pct(*n_samples)),
                TreeNode::Internal { left, right, .. } => {
                    walk(tree, left, out);
                    walk(tree, right, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &self.root, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_d(xs: &[f64], ys: &[f64]) -> Samples {
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        Samples::from_rows(&rows, ys).unwrap()
    }

    fn train_rmse(tree: &RegressionTree, data: &Samples) -> f64 {
        let se: f64 = data
            .rows()
            .zip(data.targets())
            .map(|(r, y)| (tree.predict(r).unwrap() - y).powi(2))
            .sum();
        (se / data.len() as f64).sqrt()
    }

    fn random_samples(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Samples {
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
        let ys: Vec<f64> = rows.iter().map(|r| 10.0 * r[0] + rng.random::<f64>()).collect();
        Samples::from_rows(&rows, &ys).unwrap()
    }

    #[test]
    fn constant_targets_give_single_leaf() {
        let data = one_d(&[0.0, 1.0, 2.0, 3.0], &[7.0; 4]);
        let tree = fit_tree(&data, &TreeConfig::with_depth(5), None).unwrap();
        assert_eq!(tree.root, TreeNode::Leaf { prediction: 7.0, n_samples: 4 });
        assert_eq!(tree.export_text(), "predict 7.00 (100.0%)\n");
        assert_eq!(tree.export_json(), json!({"prediction": 7.0, "share_pct": 100.0}));
    }

    #[test]
    fn perfect_separation() {
        let data = one_d(&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.0, 10.0, 10.0]);
        for weighting in [SplitWeighting::SizeWeighted, SplitWeighting::Unweighted] {
            let cfg = TreeConfig {
                split_weighting: weighting,
                ..TreeConfig::with_depth(1)
            };
            let tree = fit_tree(&data, &cfg, None).unwrap();
            let root = tree.root_split().unwrap();
            assert_eq!(root.feature_index, 0);
            assert_eq!(root.threshold, 1.5);
            assert_eq!(root.objective, 0.0);
            assert_eq!(tree.predict(&[0.5]).unwrap(), 0.0);
            assert_eq!(tree.predict(&[2.5]).unwrap(), 10.0);
            assert_eq!(train_rmse(&tree, &data), 0.0);
        }
    }

    #[test]
    fn routing_uses_less_or_equal() {
        let data = one_d(&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.0, 10.0, 10.0]);
        let tree = fit_tree(&data, &TreeConfig::with_depth(1), None).unwrap();
        assert_eq!(tree.predict(&[1.5]).unwrap(), 0.0);
        assert_eq!(tree.predict(&[1.5000001]).unwrap(), 10.0);
    }

    #[test]
    fn errors() {
        let data = one_d(&[0.0, 1.0], &[0.0, 1.0]);
        let empty = Samples::new(1, vec![], vec![]).unwrap();
        assert!(matches!(
            fit_tree(&empty, &TreeConfig::default(), None),
            Err(Error::EmptyTrainingSet)
        ));
        assert!(fit_tree(&data, &TreeConfig::with_depth(0), None).is_err());
        let bad_split = TreeConfig {
            min_samples_split: 1,
            ..TreeConfig::default()
        };
        assert!(fit_tree(&data, &bad_split, None).is_err());
        assert!(fit_tree(&data, &TreeConfig::default(), Some(&[])).is_err());
        assert!(fit_tree(&data, &TreeConfig::default(), Some(&[1])).is_err());
        let tree = fit_tree(&data, &TreeConfig::default(), None).unwrap();
        assert!(matches!(
            tree.predict(&[0.0, 1.0]),
            Err(Error::ArityMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn min_samples_split_stops_growth() {
        let data = one_d(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 5.0, 6.0]);
        let cfg = TreeConfig {
            min_samples_split: 3,
            ..TreeConfig::unlimited()
        };
        let tree = fit_tree(&data, &cfg, None).unwrap();
        // root splits 2|2, children of size 2 < 3 stay leaves
        assert_eq!(tree.n_leaves(), 2);
        assert_eq!(tree.root_split().unwrap().threshold, 1.5);
    }

    #[test]
    fn constant_feature_is_never_split_on() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![3.0, i as f64]).collect();
        let ys: Vec<f64> = (0..8).map(|i| (i * i) as f64).collect();
        let data = Samples::from_rows(&rows, &ys).unwrap();
        let tree = fit_tree(&data, &TreeConfig::unlimited(), None).unwrap();
        assert_eq!(tree.split_features(), vec![1]);
    }

    #[test]
    fn subset_restricts_splits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let data = random_samples(&mut rng, 50, 3);
        let tree = fit_tree(&data, &TreeConfig::unlimited(), Some(&[2, 1])).unwrap();
        assert!(tree.split_features().iter().all(|f| [1, 2].contains(f)));
    }

    #[test]
    fn leaf_shares_sum_to_100_and_json_shape() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let data = random_samples(&mut rng, 200, 3);
        let tree = fit_tree(&data, &TreeConfig::with_depth(3), None).unwrap();
        assert_eq!(tree.n_leaves(), 8);
        let total: f64 = tree.leaf_shares().iter().sum();
        assert!((total - 100.0).abs() < 1e-9);
        let j = tree.export_json();
        assert!(j["feature"].is_string() && j["threshold"].is_number());
        assert!(j["left"]["left"]["left"]["share_pct"].is_number());
        assert_eq!(tree.export_text().lines().count(), 15);
    }

    #[test]
    fn unlimited_depth_interpolates_distinct_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let data = random_samples(&mut rng, 120, 2);
        let tree = fit_tree(&data, &TreeConfig::unlimited(), None).unwrap();
        assert_eq!(train_rmse(&tree, &data), 0.0);
        assert_eq!(tree.n_leaves(), 120);
    }

    #[test]
    fn serde_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let data = random_samples(&mut rng, 30, 2);
        let tree = fit_tree(&data, &TreeConfig::with_depth(3), None).unwrap();
        let back: RegressionTree = serde_json::from_str(&serde_json::to_string(&tree).unwrap()).unwrap();
        assert_eq!(back, tree);
    }

    fn check_node(node: &TreeNode, rows: &[usize], data: &Samples, depth: usize, max_depth: usize) {
        assert!(depth <= max_depth);
        assert_eq!(node.n_samples(), rows.len());
        match node {
            TreeNode::Leaf { prediction, .. } => {
                let m = rows.iter().map(|&i| data.targets()[i]).sum::<f64>() / rows.len() as f64;
                assert!((prediction - m).abs() <= 1e-9 * (1.0 + m.abs()));
            }
            TreeNode::Internal { rule, left, right, .. } => {
                let (l, r): (Vec<usize>, Vec<usize>) = rows
                    .iter()
                    .partition(|&&i| data.value(i, rule.feature_index) <= rule.threshold);
                assert!(!l.is_empty() && !r.is_empty());
                // threshold lies between observed values of the node
                let lmax = l.iter().map(|&i| data.value(i, rule.feature_index)).fold(f64::MIN, f64::max);
                let rmin = r.iter().map(|&i| data.value(i, rule.feature_index)).fold(f64::MAX, f64::min);
                assert!(lmax <= rule.threshold && rule.threshold < rmin);
                check_node(left, &l, data, depth + 1, max_depth);
                check_node(right, &r, data, depth + 1, max_depth);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn structure_invariants(seed: u64, n in 1usize..80, d in 1usize..4, depth in 1usize..8, unweighted: bool) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            // coarse grid values force ties and duplicate rows
            let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0..6) as f64).collect()).collect();
            let ys: Vec<f64> = (0..n).map(|_| rng.random_range(0..20) as f64).collect();
            let data = Samples::from_rows(&rows, &ys).unwrap();
            let cfg = TreeConfig {
                max_depth: Some(depth),
                min_samples_split: 2,
                split_weighting: if unweighted { SplitWeighting::Unweighted } else { SplitWeighting::SizeWeighted },
            };
            let tree = fit_tree(&data, &cfg, None).unwrap();
            let all: Vec<usize> = (0..n).collect();
            check_node(&tree.root, &all, &data, 0, depth);
        }

        #[test]
        fn deeper_never_fits_worse(seed: u64, n in 2usize..100) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let data = random_samples(&mut rng, n, 3);
            let mut prev = f64::INFINITY;
            for depth in 1..=10 {
                let tree = fit_tree(&data, &TreeConfig::with_depth(depth), None).unwrap();
                let rmse = train_rmse(&tree, &data);
                prop_assert!(rmse <= prev + 1e-12);
                prev = rmse;
            }
        }
    }
}
