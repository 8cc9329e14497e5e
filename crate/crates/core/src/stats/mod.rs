//! Null distributions from shadow-extended refits and Student-t prediction
//! intervals over them.

mod student_t;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::forest::{Forest, ForestParams};
use crate::rng::{master_seed, substream};

pub use student_t::{ln_beta, ln_gamma, reg_inc_beta, t_cdf, t_pdf, t_quantile, t_sf};

/// Paired samples from `alpha` refits on the data extended by one shadow
/// column: the refit's training score and the shadow column's importance.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NullSamples {
    pub scores: Vec<f64>,
    pub shadow_importances: Vec<f64>,
}

impl NullSamples {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// For each of `alpha` independent substreams: append a permuted copy of a
/// uniformly chosen feature, fit a forest on the extended data, and record
/// the training score together with the shadow column's gain importance.
pub fn sample_null<R: Rng + ?Sized>(
    params: &ForestParams,
    ds: &Dataset,
    alpha: usize,
    rng: &mut R,
) -> Result<NullSamples> {
    if alpha < 2 {
        return Err(Error::param(format!("alpha must be at least 2, got {alpha}")));
    }
    let master = master_seed(rng);
    let pairs = (0..alpha)
        .into_par_iter()
        .map(|s| {
            let mut r = substream(master, s as u64);
            let (extended, shadow) = ds.extend_with_random_shadow(&mut r);
            let forest = Forest::fit(params, &extended, &mut r)?;
            let score = forest.score(&extended)?;
            Ok((score, forest.importance_gain().get(shadow)))
        })
        .collect::<Result<Vec<_>>>()?;
    let (scores, shadow_importances) = pairs.into_iter().unzip();
    Ok(NullSamples {
        scores,
        shadow_importances,
    })
}

/// Prediction interval for a single future observation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IntervalStatistic {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
    pub p: f64,
    pub lower: f64,
    pub upper: f64,
}

impl IntervalStatistic {
    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// `mean ± t(1 - p/2, n - 1) · sd · sqrt(1 + 1/n)` with the sample standard
/// deviation (n - 1 denominator). A fresh draw from the sampled distribution
/// falls outside with probability `p` under normality.
pub fn prediction_interval(samples: &[f64], p: f64) -> Result<IntervalStatistic> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::param(format!(
            "prediction interval needs at least 2 samples, got {n}"
        )));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::param(format!("significance {p} not in (0, 1)")));
    }
    let nf = n as f64;
    let mean = samples.iter().sum::<f64>() / nf;
    let var = samples.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let sd = var.sqrt();
    let half = if sd == 0.0 {
        0.0
    } else {
        t_quantile(1.0 - p / 2.0, (n - 1) as u64)? * sd * (1.0 + 1.0 / nf).sqrt()
    };
    Ok(IntervalStatistic {
        mean,
        sd,
        n,
        p,
        lower: mean - half,
        upper: mean + half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Task;
    use crate::rng::seeded;

    #[test]
    fn zero_variance_collapses() {
        let iv = prediction_interval(&[1.0, 1.0, 1.0, 1.0], 0.05).unwrap();
        assert_eq!((iv.lower, iv.mean, iv.upper, iv.sd), (1.0, 1.0, 1.0, 0.0));
    }

    #[test]
    fn two_point_hand_computation() {
        // mean 1, sd sqrt(2), t_1(0.75) = 1, factor sqrt(3/2): half-width sqrt(3)
        let iv = prediction_interval(&[0.0, 2.0], 0.5).unwrap();
        let h = 3f64.sqrt();
        assert!((iv.lower - (1.0 - h)).abs() < 1e-12);
        assert!((iv.upper - (1.0 + h)).abs() < 1e-12);
    }

    #[test]
    fn interval_errors() {
        assert!(prediction_interval(&[1.0], 0.1).is_err());
        assert!(prediction_interval(&[1.0, 2.0], 0.0).is_err());
        assert!(prediction_interval(&[1.0, 2.0], 1.0).is_err());
    }

    #[test]
    fn width_shrinks_with_p_and_n() {
        let s = [0.1, 0.5, -0.3, 0.8, 0.0, -0.6];
        let mut last = f64::INFINITY;
        for p in [1e-6, 1e-3, 0.01, 0.1, 0.5] {
            let w = prediction_interval(&s, p).unwrap().width();
            assert!(w < last);
            last = w;
        }
        // duplicating the samples keeps mean and roughly the sd but adds dof
        let doubled: Vec<f64> = s.iter().chain(s.iter()).copied().collect();
        let a = prediction_interval(&s, 0.01).unwrap();
        let b = prediction_interval(&doubled, 0.01).unwrap();
        assert!(b.width() / b.sd <= a.width() / a.sd);
    }

    #[test]
    fn null_samples_are_reproducible() {
        let n = 60;
        let x: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let z: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64).collect();
        let y = x.iter().map(|&v| if v > 30.0 { 1.0 } else { 0.0 }).collect();
        let ds = Dataset::from_columns(vec![x, z], y, Task::Classification).unwrap();
        let params = ForestParams {
            n_trees: 10,
            ..Default::default()
        };
        let a = sample_null(&params, &ds, 2, &mut seeded(11)).unwrap();
        let b = sample_null(&params, &ds, 2, &mut seeded(11)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert!(a.shadow_importances.iter().all(|&v| v >= 0.0));
        assert!(sample_null(&params, &ds, 1, &mut seeded(11)).is_err());
    }
}
