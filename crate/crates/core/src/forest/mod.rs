//! Bagged CART forest with per-tree feature subsampling and gain importance.
//!
//! Every tree is grown best-first on a without-replacement row subsample of
//! size `round(bagging_fraction * n)` and sees a fixed random subset of
//! `ceil(feature_fraction * d)` features. Trees are grown in parallel, each
//! from its own random substream, so a fit is a pure function of its inputs
//! and the seed drawn from the caller's generator.

mod split;
mod tree;

use rand::seq::index;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{sample_rows, Dataset, Task};
use crate::error::{Error, Result};
use crate::rng::{master_seed, substream};

pub use split::{best_split, Split};
pub use tree::{Tree, TreeNode};

use tree::GrowLimits;

/// How [`Forest::score`] rates a fit. Both are higher-is-better and equal
/// negative mean absolute error for regression.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scoring {
    /// Accuracy of the majority vote.
    #[default]
    Vote,
    /// One minus the mean absolute difference between the averaged class-1
    /// probability and the label. Unlike accuracy it moves with every change
    /// in confidence, not only when a vote flips.
    Probability,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub feature_fraction: f64,
    pub num_leaves: usize,
    pub max_depth: usize,
    pub bagging_fraction: f64,
    pub min_samples_leaf: usize,
    pub scoring: Scoring,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            feature_fraction: 1.0,
            num_leaves: 32,
            max_depth: 5,
            bagging_fraction: 0.632,
            min_samples_leaf: 1,
            scoring: Scoring::Vote,
        }
    }
}

impl ForestParams {
    pub fn with_feature_fraction(mut self, fraction: f64) -> Self {
        self.feature_fraction = fraction;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |v: f64| v > 0.0 && v <= 1.0;
        if self.n_trees == 0 {
            return Err(Error::param("n_trees must be at least 1"));
        }
        if self.num_leaves == 0 || self.max_depth == 0 || self.min_samples_leaf == 0 {
            return Err(Error::param(
                "num_leaves, max_depth and min_samples_leaf must be positive",
            ));
        }
        if !in_unit(self.feature_fraction) {
            return Err(Error::param(format!(
                "feature_fraction {} not in (0, 1]",
                self.feature_fraction
            )));
        }
        if !in_unit(self.bagging_fraction) {
            return Err(Error::param(format!(
                "bagging_fraction {} not in (0, 1]",
                self.bagging_fraction
            )));
        }
        Ok(())
    }

    /// Number of features each tree may use out of `d`.
    pub fn features_per_tree(&self, d: usize) -> usize {
        // guard against 0.1 * 30 = 3.0000000000000004
        let k = (self.feature_fraction * d as f64 - 1e-9).ceil() as usize;
        k.clamp(1, d)
    }
}

/// Per-feature gain importance: summed split gains divided by the tree count.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct ImportanceVector(pub Vec<f64>);

impl ImportanceVector {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Forest {
    trees: Vec<Tree>,
    params: ForestParams,
    n_features: usize,
    task: Task,
}

impl Forest {
    pub fn fit<R: Rng + ?Sized>(params: &ForestParams, ds: &Dataset, rng: &mut R) -> Result<Forest> {
        params.validate()?;
        let n = ds.n_rows();
        let d = ds.n_features();
        if n == 0 || d == 0 {
            return Err(Error::InvalidDataset("cannot fit on an empty dataset".into()));
        }
        let k = params.features_per_tree(d);
        let limits = GrowLimits {
            num_leaves: params.num_leaves,
            max_depth: params.max_depth,
            min_samples_leaf: params.min_samples_leaf,
        };
        let master = master_seed(rng);
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut r = substream(master, t as u64);
                let rows = sample_rows(n, params.bagging_fraction, true, &mut r)?;
                let mut in_bag = vec![false; n];
                for i in rows {
                    in_bag[i] = true;
                }
                let mut features = if k == d {
                    (0..d).collect()
                } else {
                    index::sample(&mut r, d, k).into_vec()
                };
                features.sort_unstable();
                Ok(tree::grow(ds, &in_bag, &features, &limits))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Forest {
            trees,
            params: params.clone(),
            n_features: d,
            task: ds.task(),
        })
    }

    /// Assembles a forest from prebuilt trees.
    pub fn from_trees(trees: Vec<Tree>, params: ForestParams, n_features: usize, task: Task) -> Result<Forest> {
        if trees.is_empty() {
            return Err(Error::param("a forest needs at least one tree"));
        }
        for t in &trees {
            for node in t.nodes() {
                if let TreeNode::Split { feature, .. } = *node {
                    if feature >= n_features {
                        return Err(Error::FeatureIndex {
                            index: feature,
                            d: n_features,
                        });
                    }
                }
            }
        }
        Ok(Forest {
            trees,
            params,
            n_features,
            task,
        })
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn task(&self) -> Task {
        self.task
    }

    fn check_dims(&self, ds: &Dataset) -> Result<()> {
        if ds.n_features() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                found: ds.n_features(),
            });
        }
        Ok(())
    }

    /// Class labels by majority vote (ties go to the higher mean
    /// probability, then to class 0) or the mean regression prediction.
    pub fn predict(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.check_dims(ds)?;
        let n_trees = self.trees.len();
        let out = (0..ds.n_rows())
            .into_par_iter()
            .map(|i| match self.task {
                Task::Classification => {
                    let mut votes = 0usize;
                    let mut prob = 0.0;
                    for t in &self.trees {
                        let p = t.predict_row(ds, i);
                        prob += p;
                        if p > 0.5 {
                            votes += 1;
                        }
                    }
                    let label = match (2 * votes).cmp(&n_trees) {
                        std::cmp::Ordering::Greater => true,
                        std::cmp::Ordering::Less => false,
                        std::cmp::Ordering::Equal => prob / n_trees as f64 > 0.5,
                    };
                    if label {
                        1.0
                    } else {
                        0.0
                    }
                }
                Task::Regression => {
                    self.trees.iter().map(|t| t.predict_row(ds, i)).sum::<f64>() / n_trees as f64
                }
            })
            .collect();
        Ok(out)
    }

    /// Mean tree output per row: the class-1 probability for classification.
    pub fn predict_mean(&self, ds: &Dataset) -> Result<Vec<f64>> {
        self.check_dims(ds)?;
        let n_trees = self.trees.len() as f64;
        Ok((0..ds.n_rows())
            .into_par_iter()
            .map(|i| self.trees.iter().map(|t| t.predict_row(ds, i)).sum::<f64>() / n_trees)
            .collect())
    }

    /// Score under the forest's own [`Scoring`].
    pub fn score(&self, ds: &Dataset) -> Result<f64> {
        self.score_as(self.params.scoring, ds)
    }

    pub fn score_as(&self, scoring: Scoring, ds: &Dataset) -> Result<f64> {
        match (scoring, self.task) {
            (Scoring::Probability, Task::Classification) => {
                let p = self.predict_mean(ds)?;
                Ok(1.0 + score_predictions(Task::Regression, &p, ds.target()))
            }
            _ => {
                let pred = self.predict(ds)?;
                Ok(score_predictions(self.task, &pred, ds.target()))
            }
        }
    }

    pub fn importance_gain(&self) -> ImportanceVector {
        let mut out = vec![0.0; self.n_features];
        for t in &self.trees {
            t.add_gains(&mut out);
        }
        let n = self.trees.len() as f64;
        for v in &mut out {
            *v /= n;
        }
        ImportanceVector(out)
    }
}

pub fn score_predictions(task: Task, pred: &[f64], y: &[f64]) -> f64 {
    let n = y.len() as f64;
    match task {
        Task::Classification => {
            pred.iter().zip(y).filter(|(p, t)| p == t).count() as f64 / n
        }
        Task::Regression => -pred.iter().zip(y).map(|(p, t)| (p - t).abs()).sum::<f64>() / n,
    }
}

/// Score of a forest whose trees are all single leaves, i.e. of the
/// constant model. Used when a feature set becomes empty.
pub fn constant_score(scoring: Scoring, task: Task, y: &[f64]) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    match (scoring, task) {
        (Scoring::Probability, Task::Classification) => {
            1.0 + score_predictions(Task::Regression, &vec![mean; y.len()], y)
        }
        (_, Task::Classification) => {
            let label = if mean > 0.5 { 1.0 } else { 0.0 };
            score_predictions(task, &vec![label; y.len()], y)
        }
        (_, Task::Regression) => score_predictions(task, &vec![mean; y.len()], y),
    }
}
