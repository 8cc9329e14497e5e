//! Decomposition of the feature set into strong, weak and irrelevant parts.
//!
//! Boruta finds the all-relevant set A. On the data restricted to A, two null
//! distributions are sampled: training scores (Π) and shadow importances (Γ).
//! Features whose importance clears Γ's upper bound form the minimal set M,
//! and only those are tested for strong relevance: a feature is strong when
//! refitting without it drops the training score below Π's lower bound.
//! Everything else in A is weak, everything outside A irrelevant.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::boruta::{run_boruta, DEFAULT_LEVEL, DEFAULT_MAX_ITER};
use crate::data::{Dataset, FeatureIndexSet};
use crate::error::{Error, Result};
use crate::forest::{constant_score, Forest, ForestParams, ImportanceVector, Scoring};
use crate::rng::{master_seed, substream, StreamRng};
use crate::stats::{prediction_interval, sample_null, IntervalStatistic};

/// Leaf size floor of the Boruta and minimal-set forests. Small leaves let
/// noise columns collect split gain deep in the trees and drown the signal
/// of modestly informative features.
pub const PIPELINE_MIN_SAMPLES_LEAF: usize = 20;

/// Trees in each Boruta forest. Each tree sees only a tenth of the columns,
/// so a small ensemble leaves many features with few chances to beat the
/// best shadow.
pub const BORUTA_TREES: usize = 300;

/// Trees in each loss-comparison forest. The strong test compares a single
/// refit against the spread of the null scores, and that spread shrinks with
/// the size of the ensemble.
pub const COMPARISON_TREES: usize = 300;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub boruta: ForestParams,
    pub minimal_set: ForestParams,
    pub comparison: ForestParams,
    pub alpha: usize,
    pub p_value: f64,
    pub boruta_max_iter: usize,
    pub boruta_level: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        let base = ForestParams {
            min_samples_leaf: PIPELINE_MIN_SAMPLES_LEAF,
            ..ForestParams::default()
        };
        let comparison = ForestParams {
            n_trees: COMPARISON_TREES,
            scoring: Scoring::Probability,
            ..ForestParams::default()
        };
        PipelineConfig {
            boruta: ForestParams {
                n_trees: BORUTA_TREES,
                ..base.clone()
            }
            .with_feature_fraction(0.1),
            minimal_set: base.with_feature_fraction(1.0),
            comparison: comparison.with_feature_fraction(0.8),
            alpha: 50,
            p_value: 1e-6,
            boruta_max_iter: DEFAULT_MAX_ITER,
            boruta_level: DEFAULT_LEVEL,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.boruta.validate()?;
        self.minimal_set.validate()?;
        self.comparison.validate()?;
        if self.alpha < 2 {
            return Err(Error::param(format!("alpha must be at least 2, got {}", self.alpha)));
        }
        if !(self.p_value > 0.0 && self.p_value < 1.0) {
            return Err(Error::param(format!("p-value {} not in (0, 1)", self.p_value)));
        }
        Ok(())
    }
}

/// Per-feature details for members of the all-relevant set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureDiagnostic {
    pub index: usize,
    pub name: String,
    /// Gain importance in the minimal-set forest on the all-relevant data.
    pub importance: f64,
    pub in_minimal_set: bool,
    /// Training score after removing the feature; only for tested features.
    pub reduced_score: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub all_relevant: FeatureIndexSet,
    pub minimal_set: FeatureIndexSet,
    /// Null interval of training scores (Π).
    pub score_interval: Option<IntervalStatistic>,
    /// Null interval of shadow importances (Γ).
    pub importance_interval: Option<IntervalStatistic>,
    /// Training accuracy (majority vote) of a comparison forest on all of A.
    pub reference_score: Option<f64>,
    pub strong_tests: usize,
    pub features: Vec<FeatureDiagnostic>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RelevanceReport {
    pub strong: FeatureIndexSet,
    pub weak: FeatureIndexSet,
    pub irrelevant: FeatureIndexSet,
    pub diagnostics: Diagnostics,
}

impl RelevanceReport {
    /// Strong ∪ weak.
    pub fn selected(&self) -> FeatureIndexSet {
        self.strong.union(&self.weak)
    }

    pub fn n_features(&self) -> usize {
        self.strong.len() + self.weak.len() + self.irrelevant.len()
    }

    /// Checks S ∪ W = A, S ∩ W = ∅, I = G ∖ A and S ⊆ M ∩ A.
    pub fn check_invariants(&self, d: usize) -> bool {
        let a = &self.diagnostics.all_relevant;
        let m = &self.diagnostics.minimal_set;
        self.strong.union(&self.weak) == *a
            && self.strong.is_disjoint(&self.weak)
            && self.irrelevant == a.complement(d)
            && self.strong.is_subset(&m.intersection(a))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// Features of `ds` whose gain importance in one forest strictly exceeds
/// `gamma_upper`.
pub fn minimal_set<R: Rng + ?Sized>(
    params: &ForestParams,
    ds: &Dataset,
    gamma_upper: f64,
    rng: &mut R,
) -> Result<FeatureIndexSet> {
    Ok(minimal_set_with_importance(params, ds, gamma_upper, rng)?.0)
}

fn minimal_set_with_importance<R: Rng + ?Sized>(
    params: &ForestParams,
    ds: &Dataset,
    gamma_upper: f64,
    rng: &mut R,
) -> Result<(FeatureIndexSet, ImportanceVector)> {
    let imp = Forest::fit(params, ds, rng)?.importance_gain();
    let set = (0..imp.len()).filter(|&j| imp.get(j) > gamma_upper).collect();
    Ok((set, imp))
}

/// Refits without feature `j` and flags it strong when the training score
/// falls below `pi.lower`. Removing the last feature leaves the constant
/// model.
pub fn strong_test<R: Rng + ?Sized>(
    ds: &Dataset,
    j: usize,
    pi: &IntervalStatistic,
    params: &ForestParams,
    rng: &mut R,
) -> Result<(bool, f64)> {
    if j >= ds.n_features() {
        return Err(Error::FeatureIndex {
            index: j,
            d: ds.n_features(),
        });
    }
    let score = if ds.n_features() == 1 {
        constant_score(params.scoring, ds.task(), ds.target())
    } else {
        let reduced = ds.drop_feature(j)?;
        Forest::fit(params, &reduced, rng)?.score(&reduced)?
    };
    Ok((score < pi.lower, score))
}

// substream indices of the pipeline phases; strong tests use
// FIRST_TEST_STREAM + original feature index
const BORUTA_STREAM: u64 = 0;
const SCORE_NULL_STREAM: u64 = 1;
const IMPORTANCE_NULL_STREAM: u64 = 2;
const MINIMAL_SET_STREAM: u64 = 3;
const REFERENCE_STREAM: u64 = 4;
const FIRST_TEST_STREAM: u64 = 16;

pub fn decompose<R: Rng + ?Sized>(
    ds: &Dataset,
    config: &PipelineConfig,
    rng: &mut R,
) -> Result<RelevanceReport> {
    config.validate()?;
    let d = ds.n_features();
    let master = master_seed(rng);
    let stream = |k: u64| -> StreamRng { substream(master, k) };

    let a = run_boruta(
        &config.boruta,
        ds,
        config.boruta_max_iter,
        config.boruta_level,
        &mut stream(BORUTA_STREAM),
    )?;
    if a.is_empty() {
        return Ok(RelevanceReport {
            strong: FeatureIndexSet::new(),
            weak: FeatureIndexSet::new(),
            irrelevant: FeatureIndexSet::full(d),
            diagnostics: Diagnostics {
                all_relevant: a,
                minimal_set: FeatureIndexSet::new(),
                score_interval: None,
                importance_interval: None,
                reference_score: None,
                strong_tests: 0,
                features: Vec::new(),
            },
        });
    }

    let v = ds.select_features(&a)?;
    let pi_null = sample_null(&config.comparison, &v, config.alpha, &mut stream(SCORE_NULL_STREAM))?;
    let pi = prediction_interval(&pi_null.scores, config.p_value)?;
    let gamma_null = sample_null(
        &config.minimal_set,
        &v,
        config.alpha,
        &mut stream(IMPORTANCE_NULL_STREAM),
    )?;
    let gamma = prediction_interval(&gamma_null.shadow_importances, config.p_value)?;

    // positions are indices into V; a.as_slice() maps them back
    let (m_local, importance) = minimal_set_with_importance(
        &config.minimal_set,
        &v,
        gamma.upper,
        &mut stream(MINIMAL_SET_STREAM),
    )?;
    let reference = Forest::fit(&config.comparison, &v, &mut stream(REFERENCE_STREAM))?
        .score_as(Scoring::Vote, &v)?;

    let original = a.as_slice();
    let tests = m_local
        .as_slice()
        .par_iter()
        .map(|&local| {
            let mut r = stream(FIRST_TEST_STREAM + original[local] as u64);
            strong_test(&v, local, &pi, &config.comparison, &mut r).map(|res| (local, res))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reduced = vec![None; original.len()];
    let mut strong = FeatureIndexSet::new();
    for &(local, (is_strong, score)) in &tests {
        reduced[local] = Some(score);
        if is_strong {
            strong.insert(original[local]);
        }
    }
    let m: FeatureIndexSet = m_local.iter().map(|local| original[local]).collect();
    let features = original
        .iter()
        .enumerate()
        .map(|(local, &index)| FeatureDiagnostic {
            index,
            name: ds.names()[index].clone(),
            importance: importance.get(local),
            in_minimal_set: m_local.contains(local),
            reduced_score: reduced[local],
        })
        .collect();

    Ok(RelevanceReport {
        weak: a.difference(&strong),
        irrelevant: a.complement(d),
        strong,
        diagnostics: Diagnostics {
            all_relevant: a,
            minimal_set: m,
            score_interval: Some(pi),
            importance_interval: Some(gamma),
            reference_score: Some(reference),
            strong_tests: tests.len(),
            features,
        },
    })
}
