use serde::Serialize;

use crate::data::FeatureIndexSet;
use crate::decompose::RelevanceReport;
use crate::error::{Error, Result};
use crate::synth::GroundTruth;

/// Precision/recall/F1 of a selected set against a true set. A ratio with a
/// zero denominator is `None`; F1 is 0 whenever there are no true positives.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ClassMetrics {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize) -> Self {
        let ratio = |den: usize| (den > 0).then(|| tp as f64 / den as f64);
        let precision = ratio(tp + fp);
        let recall = ratio(tp + fn_);
        let f1 = match (precision, recall) {
            (Some(p), Some(r)) if tp > 0 => 2.0 * p * r / (p + r),
            _ => 0.0,
        };
        ClassMetrics {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
        }
    }

    pub fn compare(selected: &FeatureIndexSet, truth: &FeatureIndexSet) -> Self {
        let tp = selected.intersection(truth).len();
        ClassMetrics::from_counts(tp, selected.len() - tp, truth.len() - tp)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RelevanceMetrics {
    pub overall: ClassMetrics,
    pub strong: ClassMetrics,
    pub weak: ClassMetrics,
}

fn check_dims(found: usize, truth: &GroundTruth) -> Result<()> {
    if found != truth.n_features() {
        return Err(Error::DimensionMismatch {
            expected: truth.n_features(),
            found,
        });
    }
    Ok(())
}

/// Selected set vs strong ∪ weak, and each predicted class against its true
/// class independently.
pub fn relevance_metrics(report: &RelevanceReport, truth: &GroundTruth) -> Result<RelevanceMetrics> {
    check_dims(report.n_features(), truth)?;
    Ok(RelevanceMetrics {
        overall: ClassMetrics::compare(&report.selected(), &truth.relevant()),
        strong: ClassMetrics::compare(&report.strong, &truth.strong),
        weak: ClassMetrics::compare(&report.weak, &truth.weak),
    })
}

/// Overall metrics for a method that only returns a selected set.
pub fn selection_metrics(selected: &FeatureIndexSet, truth: &GroundTruth) -> Result<ClassMetrics> {
    if let Some(&last) = selected.as_slice().last() {
        if last >= truth.n_features() {
            return Err(Error::FeatureIndex {
                index: last,
                d: truth.n_features(),
            });
        }
    }
    Ok(ClassMetrics::compare(selected, &truth.relevant()))
}
