//! Exhaustive CART split search.

use serde::Serialize;

use crate::data::{Dataset, Task};

/// Relative tolerance under which two impurity decreases count as equal.
/// Keeps the lowest-feature / lowest-threshold tie-break stable when the
/// same partition is reached through floating-point paths that differ in
/// the last bit.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Split {
    pub feature: usize,
    /// Rows with `value <= threshold` go left.
    pub threshold: f64,
    /// Impurity decrease at the node:
    /// `impurity(parent) - n_l/n * impurity(left) - n_r/n * impurity(right)`.
    pub gain: f64,
    pub n_left: usize,
    pub n_right: usize,
}

/// Running target sums for a set of rows. For classification `sum` counts
/// the positive labels.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct NodeStats {
    pub n: usize,
    pub sum: f64,
    pub sumsq: f64,
}

impl NodeStats {
    pub fn from_rows(y: &[f64], rows: impl IntoIterator<Item = usize>) -> Self {
        let mut s = NodeStats::default();
        for i in rows {
            s.push(y[i]);
        }
        s
    }

    #[inline]
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        self.sum += v;
        self.sumsq += v * v;
    }

    #[inline]
    fn minus(&self, other: &NodeStats) -> NodeStats {
        NodeStats {
            n: self.n - other.n,
            sum: self.sum - other.sum,
            sumsq: self.sumsq - other.sumsq,
        }
    }

    /// `n * impurity`: gini for classification, variance for regression.
    #[inline]
    pub fn weighted_impurity(&self, task: Task) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let n = self.n as f64;
        match task {
            Task::Classification => 2.0 * self.sum * (n - self.sum) / n,
            Task::Regression => (self.sumsq - self.sum * self.sum / n).max(0.0),
        }
    }

    pub fn impurity(&self, task: Task) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.weighted_impurity(task) / self.n as f64
        }
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }
}

/// Best threshold on one feature.
///
/// `order` holds the node's rows sorted ascending by `values`. Thresholds are
/// midpoints between consecutive distinct values; the scan runs from low to
/// high and only a strictly better decrease replaces the incumbent.
#[allow(clippy::too_many_arguments)]
pub(crate) fn scan_feature(
    feature: usize,
    values: &[f64],
    y: &[f64],
    order: &[u32],
    task: Task,
    parent: &NodeStats,
    min_samples_leaf: usize,
    best: &mut Option<Split>,
) {
    let n = parent.n;
    let min_leaf = min_samples_leaf.max(1);
    if n < 2 * min_leaf {
        return;
    }
    let parent_imp = parent.weighted_impurity(task);
    let tol = TIE_TOLERANCE * (parent_imp / n as f64).max(f64::MIN_POSITIVE);
    let best_gain = best.as_ref().map_or(f64::NEG_INFINITY, |b| b.gain);
    // one monomorphic loop per task keeps the impurity branch out of it
    let found = match task {
        Task::Classification => best_cut(values, y, order, parent, min_leaf, tol, best_gain, |s| {
            s.weighted_impurity(Task::Classification)
        }),
        Task::Regression => best_cut(values, y, order, parent, min_leaf, tol, best_gain, |s| {
            s.weighted_impurity(Task::Regression)
        }),
    };
    if let Some((pos, gain)) = found {
        let lo = values[order[pos] as usize];
        let hi = values[order[pos + 1] as usize];
        *best = Some(Split {
            feature,
            threshold: midpoint(lo, hi),
            gain,
            n_left: pos + 1,
            n_right: n - pos - 1,
        });
    }
}

/// Position and gain of the first cut whose gain beats both `tol` and
/// `incumbent + tol`, scanning cuts with at least `min_leaf` rows per side.
#[allow(clippy::too_many_arguments)]
#[inline]
fn best_cut<F: Fn(&NodeStats) -> f64>(
    values: &[f64],
    y: &[f64],
    order: &[u32],
    parent: &NodeStats,
    min_leaf: usize,
    tol: f64,
    incumbent: f64,
    impurity: F,
) -> Option<(usize, f64)> {
    let n = parent.n;
    let parent_imp = impurity(parent);
    let mut best_gain = incumbent;
    let mut found = None;
    let mut left = NodeStats::default();
    // a cut after `pos` leaves pos + 1 rows on the left
    for &row in &order[..min_leaf - 1] {
        left.push(y[row as usize]);
    }
    let mut here = values[order[min_leaf - 1] as usize];
    for pos in min_leaf - 1..n - min_leaf {
        left.push(y[order[pos] as usize]);
        let next = values[order[pos + 1] as usize];
        if here < next {
            let right = parent.minus(&left);
            let children = impurity(&left) + impurity(&right);
            let gain = (parent_imp - children) / n as f64;
            if gain > tol && gain > best_gain + tol {
                best_gain = gain;
                found = Some((pos, gain));
            }
        }
        here = next;
    }
    found
}

/// Midpoint of `lo < hi` that still separates them.
#[inline]
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let mid = lo + (hi - lo) / 2.0;
    if mid >= hi || !mid.is_finite() {
        lo
    } else {
        mid
    }
}

/// Best split of `rows` over `candidates`, scanned in ascending feature order.
///
/// Returns `None` when no split has a positive impurity decrease (for example
/// when all labels agree). Ties go to the lowest feature index, then to the
/// lowest threshold.
pub fn best_split(
    ds: &Dataset,
    rows: &[usize],
    candidates: &[usize],
    min_samples_leaf: usize,
) -> Option<Split> {
    if rows.len() < 2 {
        return None;
    }
    let y = ds.target();
    let task = ds.task();
    let stats = NodeStats::from_rows(y, rows.iter().copied());
    let mut features = candidates.to_vec();
    features.sort_unstable();
    features.dedup();
    let mut best = None;
    let mut order: Vec<u32> = Vec::with_capacity(rows.len());
    for f in features {
        let values = ds.column(f);
        order.clear();
        order.extend(rows.iter().map(|&r| r as u32));
        order.sort_by(|&a, &b| values[a as usize].total_cmp(&values[b as usize]));
        scan_feature(f, values, y, &order, task, &stats, min_samples_leaf, &mut best);
    }
    best
}
