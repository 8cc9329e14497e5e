//! Recursive feature elimination with the set size chosen by k-fold
//! cross-validation, the usual wrapper baseline.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::data::{Dataset, FeatureIndexSet};
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams};
use crate::rng::{master_seed, substream};

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RfeStep {
    pub features: FeatureIndexSet,
    pub cv_score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RfeTrace {
    /// One entry per set size, from all features down to one.
    pub steps: Vec<RfeStep>,
    pub selected: FeatureIndexSet,
}

pub fn rfe_cv<R: Rng + ?Sized>(
    params: &ForestParams,
    ds: &Dataset,
    folds: usize,
    rng: &mut R,
) -> Result<FeatureIndexSet> {
    Ok(rfe_cv_trace(params, ds, folds, rng)?.selected)
}

/// Drops the least important feature (full refit each step) down to a
/// single feature, scoring every set size by mean k-fold CV score. The set
/// with the best mean score wins; ties go to the smaller set.
pub fn rfe_cv_trace<R: Rng + ?Sized>(
    params: &ForestParams,
    ds: &Dataset,
    folds: usize,
    rng: &mut R,
) -> Result<RfeTrace> {
    let n = ds.n_rows();
    if folds < 2 {
        return Err(Error::param(format!("need at least 2 folds, got {folds}")));
    }
    if n < 2 * folds {
        return Err(Error::param(format!(
            "{n} rows are too few for {folds}-fold cross-validation"
        )));
    }
    let master = master_seed(rng);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut substream(master, 0));
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..folds)
        .map(|f| {
            let (test, train): (Vec<_>, Vec<_>) =
                order.iter().enumerate().partition(|(pos, _)| pos % folds == f);
            let rows = |v: Vec<(usize, &usize)>| v.into_iter().map(|(_, &r)| r).collect();
            (rows(train), rows(test))
        })
        .collect();
    let fold_data = splits
        .iter()
        .map(|(train, test)| Ok((ds.take_rows(train)?, ds.take_rows(test)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut current = ds.all_features();
    let mut steps = Vec::with_capacity(ds.n_features());
    let mut stream = 1u64;
    loop {
        let mut total = 0.0;
        for (train, test) in &fold_data {
            let train = train.select_features(&current)?;
            let test = test.select_features(&current)?;
            let forest = Forest::fit(params, &train, &mut substream(master, stream))?;
            stream += 1;
            total += forest.score(&test)?;
        }
        steps.push(RfeStep {
            features: current.clone(),
            cv_score: total / folds as f64,
        });
        if current.len() == 1 {
            break;
        }
        let sub = ds.select_features(&current)?;
        let imp = Forest::fit(params, &sub, &mut substream(master, stream))?.importance_gain();
        stream += 1;
        let weakest = (0..imp.len())
            .min_by(|&a, &b| imp.get(a).total_cmp(&imp.get(b)))
            .expect("non-empty importance");
        current = current
            .iter()
            .enumerate()
            .filter(|&(pos, _)| pos != weakest)
            .map(|(_, j)| j)
            .collect();
    }

    // steps shrink, so `>=` lets later (smaller) sets win ties
    let mut best = 0;
    for (k, step) in steps.iter().enumerate() {
        if step.cv_score >= steps[best].cv_score {
            best = k;
        }
    }
    Ok(RfeTrace {
        selected: steps[best].features.clone(),
        steps,
    })
}
