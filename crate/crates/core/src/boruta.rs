//! Boruta all-relevant selection.
//!
//! Each iteration refits a forest on the features that are still in play
//! plus a freshly permuted shadow copy of each of them. A real
//! feature scores a hit when its importance strictly beats the best shadow.
//! Hit counts are tested against a fair coin with a Bonferroni-corrected
//! two-sided binomial test.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::Serialize;

use crate::data::{Dataset, FeatureIndexSet};
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams};
use crate::rng::{master_seed, substream};
use crate::stats::ln_gamma;

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_LEVEL: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Decision {
    Tentative,
    Confirmed,
    Rejected,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BorutaState {
    pub hits: Vec<usize>,
    pub decided: Vec<Decision>,
    pub iteration: usize,
    /// Importance of each feature in every iteration it was still undecided.
    #[serde(skip)]
    history: Vec<Vec<f64>>,
    #[serde(skip)]
    max_shadow: Vec<f64>,
}

impl BorutaState {
    fn new(d: usize) -> Self {
        BorutaState {
            hits: vec![0; d],
            decided: vec![Decision::Tentative; d],
            iteration: 0,
            history: vec![Vec::new(); d],
            max_shadow: Vec::new(),
        }
    }

    pub fn with(&self, decision: Decision) -> FeatureIndexSet {
        (0..self.decided.len())
            .filter(|&j| self.decided[j] == decision)
            .collect()
    }

    /// Confirmed features plus tentative ones whose median importance beats
    /// the median of the per-iteration maximum shadow importance.
    pub fn selected(&self) -> FeatureIndexSet {
        let shadow = median(&self.max_shadow);
        (0..self.decided.len())
            .filter(|&j| match self.decided[j] {
                Decision::Confirmed => true,
                Decision::Rejected => false,
                Decision::Tentative => match (median(&self.history[j]), shadow) {
                    (Some(m), Some(s)) => m > s,
                    _ => false,
                },
            })
            .collect()
    }
}

fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let m = s.len() / 2;
    Some(if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    })
}

/// Exact two-sided binomial p-value of `hits` successes in `trials` fair
/// coin flips: the total mass of outcomes no more likely than `hits`.
pub fn binomial_two_sided_p(hits: usize, trials: usize) -> f64 {
    assert!(hits <= trials, "hits {hits} > trials {trials}");
    let n = trials as f64;
    let ln_pmf = |k: usize| {
        let k = k as f64;
        ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0) - n * std::f64::consts::LN_2
    };
    let observed = ln_pmf(hits);
    // ln_gamma noise must not split symmetric outcomes
    let cutoff = observed + 1e-9;
    let p: f64 = (0..=trials)
        .map(ln_pmf)
        .filter(|&l| l <= cutoff)
        .map(f64::exp)
        .sum();
    p.min(1.0)
}

/// Runs Boruta and returns the selected set.
pub fn run_boruta<R: Rng + ?Sized>(
    params: &ForestParams,
    ds: &Dataset,
    max_iter: usize,
    test_level: f64,
    rng: &mut R,
) -> Result<FeatureIndexSet> {
    Ok(run_boruta_state(params, ds, max_iter, test_level, rng)?.selected())
}

/// Runs Boruta and returns the final state, hit counts included.
pub fn run_boruta_state<R: Rng + ?Sized>(
    params: &ForestParams,
    ds: &Dataset,
    max_iter: usize,
    test_level: f64,
    rng: &mut R,
) -> Result<BorutaState> {
    if max_iter < 10 {
        return Err(Error::param(format!("max_iter must be at least 10, got {max_iter}")));
    }
    if !(test_level > 0.0 && test_level < 1.0) {
        return Err(Error::param(format!("test level {test_level} not in (0, 1)")));
    }
    let d = ds.n_features();
    let level = test_level / d as f64;
    let master = master_seed(rng);
    let mut state = BorutaState::new(d);

    while state.iteration < max_iter {
        let undecided = state.with(Decision::Tentative);
        if undecided.is_empty() {
            break;
        }
        let mut r = substream(master, state.iteration as u64);
        let active: FeatureIndexSet = state.with(Decision::Rejected).complement(d);
        let real = ds.select_features(&active)?;
        let shadows = active
            .iter()
            .map(|j| {
                let values = ds.permute_feature(j, &mut r)?;
                Ok((format!("shadow_{}", ds.names()[j]), values))
            })
            .collect::<Result<Vec<_>>>()?;
        let extended = real.with_extra_columns(shadows);
        // Split ties go to the lowest column index, so exact duplicates would
        // always credit the same copy; a fresh column order each iteration
        // spreads that credit evenly over the run.
        let mut order: Vec<usize> = (0..extended.n_features()).collect();
        order.shuffle(&mut r);
        let shuffled = extended.reorder_features(&order);
        let forest = Forest::fit(params, &shuffled, &mut r)?;
        let shuffled_imp = forest.importance_gain();
        let mut imp = vec![0.0; order.len()];
        for (pos, &col) in order.iter().enumerate() {
            imp[col] = shuffled_imp.get(pos);
        }
        let max_shadow = imp[active.len()..]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);

        state.iteration += 1;
        state.max_shadow.push(max_shadow);
        for (pos, j) in active.iter().enumerate() {
            if state.decided[j] != Decision::Tentative {
                continue;
            }
            state.history[j].push(imp[pos]);
            if imp[pos] > max_shadow {
                state.hits[j] += 1;
            }
        }
        let t = state.iteration;
        for j in undecided.iter() {
            let h = state.hits[j];
            if binomial_two_sided_p(h, t) < level {
                if 2 * h > t {
                    state.decided[j] = Decision::Confirmed;
                } else if 2 * h < t {
                    state.decided[j] = Decision::Rejected;
                }
            }
        }
    }
    Ok(state)
}
