//! Bagged ensembles of regression trees with per-tree feature subsets.

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::FoldPlan;
use crate::error::{Error, Result};
use crate::eval;
use crate::features::LabeledExample;
use crate::model::{ModelSpec, Regressor};
use crate::numeric;
use crate::rng::{self, Purpose};
use crate::samples::Samples;
use crate::tree::{fit_tree, RegressionTree, TreeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub tree: TreeConfig,
    pub features_per_tree: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 10,
            tree: TreeConfig::with_depth(5),
            features_per_tree: 3,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self, n_features: usize) -> Result<()> {
        self.tree.validate()?;
        if self.n_trees == 0 {
            return Err(Error::InvalidConfig("n_trees must be >= 1".into()));
        }
        if self.features_per_tree == 0 || self.features_per_tree > n_features {
            return Err(Error::InvalidConfig(format!(
                "features_per_tree must be in 1..={n_features}, got {}",
                self.features_per_tree
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestMember {
    pub tree: RegressionTree,
    /// Features this tree was allowed to split on, ascending.
    pub features: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<ForestMember>,
    pub config: ForestConfig,
}

/// Row indices of bootstrap sample `tree_index`: `n` uniform draws with
/// replacement from the `bootstrap` stream.
pub fn bootstrap_indices(n: usize, seed: u64, tree_index: usize) -> Vec<usize> {
    let mut rng = rng::stream(seed, Purpose::Bootstrap, tree_index as u64);
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

/// `k` distinct features drawn uniformly from the `features` stream, ascending.
pub fn feature_subset(n_features: usize, k: usize, seed: u64, tree_index: usize) -> Vec<usize> {
    let mut rng = rng::stream(seed, Purpose::FeatureSubset, tree_index as u64);
    let mut picked = index::sample(&mut rng, n_features, k).into_vec();
    picked.sort_unstable();
    picked
}

fn fit_member(data: &Samples, config: &ForestConfig, i: usize) -> Result<ForestMember> {
    let features = feature_subset(data.n_features(), config.features_per_tree, config.seed, i);
    let tree = if config.bootstrap {
        let sample = data.select(&bootstrap_indices(data.len(), config.seed, i));
        fit_tree(&sample, &config.tree, Some(&features))?
    } else {
        fit_tree(data, &config.tree, Some(&features))?
    };
    Ok(ForestMember { tree, features })
}

/// Trees are fitted in parallel; each depends only on `(seed, tree index)`, so
/// the result is identical to a sequential fit.
pub fn fit_forest(data: &Samples, config: &ForestConfig) -> Result<RandomForest> {
    if data.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    config.validate(data.n_features())?;
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|i| fit_member(data, config, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(RandomForest {
        trees,
        config: *config,
    })
}

impl RandomForest {
    pub fn n_features(&self) -> usize {
        self.trees[0].tree.n_features
    }

    /// The first `n` trees, which equal a forest fitted with `n_trees = n`.
    pub fn truncated(&self, n: usize) -> RandomForest {
        let n = n.clamp(1, self.trees.len());
        RandomForest {
            trees: self.trees[..n].to_vec(),
            config: ForestConfig {
                n_trees: n,
                ..self.config
            },
        }
    }

    pub fn member_predictions(&self, row: &[f64]) -> Vec<f64> {
        self.trees.iter().map(|m| m.tree.predict_unchecked(row)).collect()
    }
}

impl Regressor for RandomForest {
    fn n_features(&self) -> usize {
        RandomForest::n_features(self)
    }

    /// Mean of member predictions. Summed in sorted order so the result does
    /// not depend on the order of the trees.
    fn predict_unchecked(&self, row: &[f64]) -> f64 {
        let mut preds = self.member_predictions(row);
        preds.sort_by(f64::total_cmp);
        let mean = preds.iter().sum::<f64>() / preds.len() as f64;
        mean.clamp(preds[0], preds[preds.len() - 1])
    }
}

/// One cell of a depth by tree-count sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestSweepCell {
    pub depth: usize,
    pub n_trees: usize,
    pub rmse_mean: f64,
    pub rmse_std: f64,
}

pub const OPERATING_POINT: (usize, usize) = (5, 10);

/// Cross-validated RMSE for every `(depth, n_trees)` pair.
///
/// Per fold and depth a single forest with the largest tree count is fitted;
/// smaller counts are its prefixes, which is exactly what fitting them
/// separately with the same seed produces.
pub fn sweep_forest(
    examples: &[LabeledExample],
    depths: &[usize],
    tree_counts: &[usize],
    folds: &FoldPlan,
    base: &ForestConfig,
) -> Result<Vec<ForestSweepCell>> {
    if depths.is_empty() || tree_counts.is_empty() {
        return Err(Error::InvalidConfig("sweep grid is empty".into()));
    }
    let max_trees = *tree_counts.iter().max().unwrap();
    let split = eval::fold_split(examples, folds)?;

    let mut cells = Vec::new();
    for &depth in depths {
        let config = ForestConfig {
            n_trees: max_trees,
            tree: TreeConfig {
                max_depth: Some(depth),
                ..base.tree
            },
            ..*base
        };
        // per_fold[f][c] = RMSE of fold f with tree_counts[c] trees
        let per_fold = split
            .par_iter()
            .enumerate()
            .map(|(f, (train, test))| {
                let spec = ModelSpec::Forest(config).for_fold(f);
                let ModelSpec::Forest(fold_config) = spec else { unreachable!() };
                let forest = fit_forest(&Samples::from_examples(train.iter().copied()), &fold_config)?;
                tree_counts
                    .iter()
                    .map(|&c| eval::rmse_on(&forest.truncated(c), test))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        for (c, &n_trees) in tree_counts.iter().enumerate() {
            let fold_rmse: Vec<f64> = per_fold.iter().map(|r| r[c]).collect();
            cells.push(ForestSweepCell {
                depth,
                n_trees,
                rmse_mean: eval::mean_of_folds(&fold_rmse),
                rmse_std: numeric::std_devs(&fold_rmse).1,
            });
        }
    }
    Ok(cells)
}

pub fn write_forest_sweep_csv<W: std::io::Write>(out: W, cells: &[ForestSweepCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in cells {
        w.serialize(c)?;
    }
    w.flush().map_err(|e| Error::io("<sweep csv>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::SplitWeighting;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_samples(seed: u64, n: usize, d: usize) -> Samples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect();
        let ys: Vec<f64> = rows
            .iter()
            .map(|r| 20.0 * r[0] + 5.0 * r[d - 1] * r[0] + rng.random::<f64>() * 4.0)
            .collect();
        Samples::from_rows(&rows, &ys).unwrap()
    }

    #[test]
    fn single_unbagged_tree_matches_fit_tree() {
        let data = random_samples(1, 300, 4);
        let cfg = ForestConfig {
            n_trees: 1,
            features_per_tree: 4,
            bootstrap: false,
            ..ForestConfig::default()
        };
        let forest = fit_forest(&data, &cfg).unwrap();
        let tree = fit_tree(&data, &cfg.tree, None).unwrap();
        assert_eq!(forest.trees[0].tree, tree);
        for row in data.rows() {
            assert_eq!(forest.predict(row).unwrap(), tree.predict(row).unwrap());
        }
    }

    #[test]
    fn same_seed_same_forest() {
        let data = random_samples(2, 200, 4);
        let cfg = ForestConfig {
            seed: 99,
            ..ForestConfig::default()
        };
        assert_eq!(fit_forest(&data, &cfg).unwrap(), fit_forest(&data, &cfg).unwrap());
        let other = fit_forest(&data, &ForestConfig { seed: 100, ..cfg }).unwrap();
        assert_ne!(other, fit_forest(&data, &cfg).unwrap());
    }

    #[test]
    fn prefix_equals_smaller_fit() {
        let data = random_samples(3, 150, 4);
        let big = fit_forest(&data, &ForestConfig { n_trees: 12, ..ForestConfig::default() }).unwrap();
        let small = fit_forest(&data, &ForestConfig { n_trees: 5, ..ForestConfig::default() }).unwrap();
        assert_eq!(big.truncated(5), small);
    }

    #[test]
    fn members_use_only_their_subset() {
        let data = random_samples(4, 200, 4);
        let cfg = ForestConfig {
            n_trees: 20,
            tree: TreeConfig::unlimited(),
            ..ForestConfig::default()
        };
        let forest = fit_forest(&data, &cfg).unwrap();
        assert_eq!(forest.trees.len(), 20);
        for m in &forest.trees {
            assert_eq!(m.features.len(), 3);
            assert!(m.tree.split_features().iter().all(|f| m.features.contains(f)));
        }
    }

    #[test]
    fn two_member_mean() {
        let data = random_samples(5, 40, 1);
        let mut forest = fit_forest(&data, &ForestConfig {
            n_trees: 2,
            features_per_tree: 1,
            ..ForestConfig::default()
        })
        .unwrap();
        forest.trees[0].tree.root = crate::tree::TreeNode::Leaf { prediction: 10.0, n_samples: 40 };
        forest.trees[1].tree.root = crate::tree::TreeNode::Leaf { prediction: 20.0, n_samples: 40 };
        assert_eq!(forest.predict(&[0.3]).unwrap(), 15.0);
        assert!(matches!(forest.predict(&[0.3, 0.1]), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn config_errors() {
        let data = random_samples(6, 20, 4);
        for bad in [
            ForestConfig { n_trees: 0, ..ForestConfig::default() },
            ForestConfig { features_per_tree: 0, ..ForestConfig::default() },
            ForestConfig { features_per_tree: 5, ..ForestConfig::default() },
        ] {
            assert!(matches!(fit_forest(&data, &bad), Err(Error::InvalidConfig(_))));
        }
        let empty = Samples::new(4, vec![], vec![]).unwrap();
        assert!(matches!(fit_forest(&empty, &ForestConfig::default()), Err(Error::EmptyTrainingSet)));
    }

    #[test]
    fn bootstrap_draws_in_range() {
        let idx = bootstrap_indices(50, 1, 0);
        assert_eq!(idx.len(), 50);
        assert!(idx.iter().all(|&i| i < 50));
        assert_eq!(idx, bootstrap_indices(50, 1, 0));
        assert_ne!(idx, bootstrap_indices(50, 1, 1));
        assert_eq!(feature_subset(4, 4, 9, 3), vec![0, 1, 2, 3]);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn prediction_bounded_and_order_free(seed: u64, qx in proptest::collection::vec(0.0f64..1.0, 4)) {
            let data = random_samples(seed, 60, 4);
            let cfg = ForestConfig {
                n_trees: 7,
                seed,
                tree: TreeConfig { split_weighting: SplitWeighting::SizeWeighted, ..TreeConfig::with_depth(4) },
                ..ForestConfig::default()
            };
            let forest = fit_forest(&data, &cfg).unwrap();
            let members = forest.member_predictions(&qx);
            let p = forest.predict(&qx).unwrap();
            let lo = members.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = members.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(p >= lo && p <= hi);
            let mut reversed = forest.clone();
            reversed.trees.reverse();
            prop_assert_eq!(reversed.predict(&qx).unwrap(), p);
        }
    }
}
