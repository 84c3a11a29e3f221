//! Model-agnostic plumbing: the prediction trait, model specifications used by
//! cross-validation and the CLI, and the on-disk model file.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::LabeledExample;
use crate::forest::{fit_forest, ForestConfig, RandomForest};
use crate::nn::{self, EpochRecord, NetConfig, Network};
use crate::rng::{self, Purpose};
use crate::samples::Samples;
use crate::tree::{fit_tree, RegressionTree, TreeConfig};

pub trait Regressor {
    fn n_features(&self) -> usize;

    /// Caller guarantees `row.len() == self.n_features()`.
    fn predict_unchecked(&self, row: &[f64]) -> f64;

    fn predict(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.n_features() {
            return Err(Error::ArityMismatch {
                expected: self.n_features(),
                got: row.len(),
            });
        }
        Ok(self.predict_unchecked(row))
    }
}

impl Regressor for RegressionTree {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_unchecked(&self, row: &[f64]) -> f64 {
        RegressionTree::predict_unchecked(self, row)
    }
}

/// What to fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "config", rename_all = "snake_case")]
pub enum ModelSpec {
    Tree(TreeConfig),
    Forest(ForestConfig),
    Nn(NetConfig),
    /// Predicts the training-set mean target.
    Mean,
}

impl ModelSpec {
    pub fn name(&self) -> &'static str {
        match self {
            ModelSpec::Tree(_) => "tree",
            ModelSpec::Forest(_) => "forest",
            ModelSpec::Nn(_) => "nn",
            ModelSpec::Mean => "mean",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            ModelSpec::Forest(c) => Some(c.seed),
            ModelSpec::Nn(c) => Some(c.seed),
            ModelSpec::Tree(_) | ModelSpec::Mean => None,
        }
    }

    /// Spec for cross-validation fold `fold`: stochastic models get a seed
    /// derived from their own seed and the fold index.
    pub fn for_fold(&self, fold: usize) -> ModelSpec {
        let derive = |s| rng::derive_seed(s, Purpose::FoldSeed, fold as u64);
        match *self {
            ModelSpec::Forest(c) => ModelSpec::Forest(ForestConfig {
                seed: derive(c.seed),
                ..c
            }),
            ModelSpec::Nn(c) => ModelSpec::Nn(NetConfig {
                seed: derive(c.seed),
                ..c
            }),
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "fitted", rename_all = "snake_case")]
pub enum FittedModel {
    Tree(RegressionTree),
    Forest(RandomForest),
    Nn(Network),
    Mean { value: f64, n_features: usize },
}

impl Regressor for FittedModel {
    fn n_features(&self) -> usize {
        match self {
            FittedModel::Tree(t) => t.n_features,
            FittedModel::Forest(f) => f.n_features(),
            FittedModel::Nn(n) => n.input_dim(),
            FittedModel::Mean { n_features, .. } => *n_features,
        }
    }

    fn predict_unchecked(&self, row: &[f64]) -> f64 {
        match self {
            FittedModel::Tree(t) => t.predict_unchecked(row),
            FittedModel::Forest(f) => f.predict_unchecked(row),
            FittedModel::Nn(n) => n.predict_unchecked(row),
            FittedModel::Mean { value, .. } => *value,
        }
    }
}

/// Fits `spec` on `train`. Networks with early stopping hold out a seeded 20%
/// of the training days for validation.
pub fn fit_model(spec: &ModelSpec, train: &[LabeledExample]) -> Result<FittedModel> {
    fit_model_traced(spec, train).map(|(m, _)| m)
}

/// As [`fit_model`], also returning the per-epoch trace of a network.
pub fn fit_model_traced(spec: &ModelSpec, train: &[LabeledExample]) -> Result<(FittedModel, Option<Vec<EpochRecord>>)> {
    if train.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let data = Samples::from_examples(train);
    Ok(match spec {
        ModelSpec::Tree(c) => (FittedModel::Tree(fit_tree(&data, c, None)?), None),
        ModelSpec::Forest(c) => (FittedModel::Forest(fit_forest(&data, c)?), None),
        ModelSpec::Nn(c) => {
            let outcome = match c.early_stopping_patience {
                Some(_) => match holdout_days(train, c.seed) {
                    (fit, val) if !fit.is_empty() && !val.is_empty() => nn::train(
                        &Samples::from_examples(&fit),
                        c,
                        Some(&Samples::from_examples(&val)),
                    )?,
                    _ => nn::train(&data, c, None)?,
                },
                None => nn::train(&data, c, None)?,
            };
            (FittedModel::Nn(outcome.network), Some(outcome.trace))
        }
        ModelSpec::Mean => (
            FittedModel::Mean {
                value: crate::numeric::mean(data.targets()),
                n_features: data.n_features(),
            },
            None,
        ),
    })
}

fn holdout_days(examples: &[LabeledExample], seed: u64) -> (Vec<LabeledExample>, Vec<LabeledExample>) {
    use rand::seq::SliceRandom;
    let mut dates: Vec<_> = examples.iter().map(|e| e.date).collect::<BTreeSet<_>>().into_iter().collect();
    if dates.len() < 2 {
        return (examples.to_vec(), Vec::new());
    }
    dates.shuffle(&mut rng::stream(seed, Purpose::Validation, 0));
    let n_val = dates.len().div_ceil(5);
    let val: BTreeSet<_> = dates[..n_val].iter().copied().collect();
    examples.iter().copied().partition(|e| !val.contains(&e.date))
}

/// Saved model with the spec that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub spec: ModelSpec,
    pub model: FittedModel,
}
