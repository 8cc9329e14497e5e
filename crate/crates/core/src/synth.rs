//! Synthetic binary classification problems with known relevance labels.
//!
//! Weakly relevant features are always exact affine copies `a·x + b` of a
//! latent informative feature that is itself left out of the data, so every
//! copy carries the full information of the latent and each one is
//! individually replaceable by its siblings.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureIndexSet, Task};
use crate::error::{Error, Result};

/// Ground-truth relevance labels of a generated dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub strong: FeatureIndexSet,
    pub weak: FeatureIndexSet,
    pub irrelevant: FeatureIndexSet,
}

impl GroundTruth {
    pub fn n_features(&self) -> usize {
        self.strong.len() + self.weak.len() + self.irrelevant.len()
    }

    /// Strong ∪ weak.
    pub fn relevant(&self) -> FeatureIndexSet {
        self.strong.union(&self.weak)
    }

    /// True when the three sets are disjoint and cover `0..d`.
    pub fn is_partition_of(&self, d: usize) -> bool {
        self.strong.is_disjoint(&self.weak)
            && self.strong.is_disjoint(&self.irrelevant)
            && self.weak.is_disjoint(&self.irrelevant)
            && self.n_features() == d
            && self.relevant().union(&self.irrelevant) == FeatureIndexSet::full(d)
    }
}

/// Linearly separable problem: labels are the side of a random hyperplane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearSpec {
    pub n: usize,
    pub n_strong: usize,
    pub n_weak: usize,
    pub n_irrelevant: usize,
    /// Standard deviation of Gaussian noise added to the decision value
    /// before thresholding. Zero gives a separable problem.
    pub noise: f64,
}

impl LinearSpec {
    pub fn new(n: usize, n_strong: usize, n_weak: usize, n_irrelevant: usize) -> Self {
        LinearSpec {
            n,
            n_strong,
            n_weak,
            n_irrelevant,
            noise: 0.0,
        }
    }

    pub fn n_features(&self) -> usize {
        self.n_strong + self.n_weak + self.n_irrelevant
    }

    fn validate(&self) -> Result<()> {
        if self.n_features() == 0 {
            return Err(Error::param("linear spec has no features"));
        }
        if self.n_weak == 1 {
            return Err(Error::param(
                "a single affine copy would be strongly relevant; n_weak must be 0 or >= 2",
            ));
        }
        if self.n < 4 {
            return Err(Error::param("linear spec needs at least 4 samples"));
        }
        let latent = self.n_strong + usize::from(self.n_weak > 0);
        if latent as f64 * MIN_WEIGHT * MIN_WEIGHT >= 1.0 {
            return Err(Error::param(format!(
                "{latent} hyperplane weights cannot all reach {MIN_WEIGHT} on a unit vector"
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::param("noise must be a finite non-negative number"));
        }
        Ok(())
    }
}

/// Clustered problem that no single hyperplane separates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonlinearSpec {
    pub n: usize,
    pub n_features: usize,
    pub n_strel: usize,
    pub n_redundant: usize,
    pub clusters_per_class: usize,
    /// Half the edge length of the hypercube whose vertices hold the
    /// cluster centres.
    pub class_sep: f64,
}

impl NonlinearSpec {
    pub fn new(n_features: usize, n_strel: usize, n_redundant: usize) -> Self {
        NonlinearSpec {
            n: 500,
            n_features,
            n_strel,
            n_redundant,
            clusters_per_class: 2,
            class_sep: 1.0,
        }
    }

    /// Latent informative features that get expanded into affine copies.
    pub fn redundant_groups(&self) -> usize {
        self.n_redundant.div_ceil(5)
    }

    fn validate(&self) -> Result<()> {
        if self.n_strel == 0 {
            return Err(Error::param("n_strel must be at least 1"));
        }
        if self.n_features < self.n_strel + self.n_redundant {
            return Err(Error::param(format!(
                "n_features {} < n_strel {} + n_redundant {}",
                self.n_features, self.n_strel, self.n_redundant
            )));
        }
        if self.n_redundant == 1 {
            return Err(Error::param("n_redundant must be 0 or >= 2"));
        }
        if self.clusters_per_class == 0 {
            return Err(Error::param("clusters_per_class must be at least 1"));
        }
        let clusters = 2 * self.clusters_per_class;
        let dim = self.n_strel + self.redundant_groups();
        if dim < 64 && (1u64 << dim) < clusters as u64 {
            return Err(Error::param(format!(
                "{dim} informative dimensions cannot host {clusters} distinct clusters"
            )));
        }
        if self.n < 5 * clusters {
            return Err(Error::param(format!(
                "{} samples cannot give {} clusters at least 5 samples each",
                self.n, clusters
            )));
        }
        if !(self.class_sep > 0.0 && self.class_sep.is_finite()) {
            return Err(Error::param("class_sep must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Preset {
    Linear(LinearSpec),
    Nonlinear(NonlinearSpec),
}

pub const LINEAR_PRESETS: [&str; 8] = [
    "Set 1", "Set 2", "Set 3", "Set 4", "Set 5", "Set 6", "Set 7", "Set 8",
];
pub const NONLINEAR_PRESETS: [&str; 4] = ["NL 1", "NL 2", "NL 3", "NL 4"];

/// Canonical display name ("Set 3", "NL 2") for a spelling such as
/// "set3", "Set 3" or "NL2".
pub fn canonical_preset_name(name: &str) -> Result<&'static str> {
    let key: String = name
        .chars()
        .filter(|c| !c.is_whitespace() && *c != '_' && *c != '-')
        .collect::<String>()
        .to_ascii_lowercase();
    LINEAR_PRESETS
        .iter()
        .chain(NONLINEAR_PRESETS.iter())
        .find(|p| p.replace(' ', "").to_ascii_lowercase() == key)
        .copied()
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

/// Parameters of the named benchmark dataset.
pub fn preset(name: &str) -> Result<Preset> {
    let spec = match canonical_preset_name(name)? {
        "Set 1" => Preset::Linear(LinearSpec::new(150, 6, 0, 6)),
        "Set 2" => Preset::Linear(LinearSpec::new(150, 0, 6, 6)),
        "Set 3" => Preset::Linear(LinearSpec::new(150, 3, 4, 3)),
        "Set 4" => Preset::Linear(LinearSpec::new(256, 6, 6, 6)),
        "Set 5" => Preset::Linear(LinearSpec::new(512, 1, 2, 11)),
        "Set 6" => Preset::Linear(LinearSpec::new(200, 1, 20, 0)),
        "Set 7" => Preset::Linear(LinearSpec::new(200, 1, 20, 20)),
        "Set 8" => Preset::Linear(LinearSpec::new(2000, 10, 10, 50)),
        "NL 1" => Preset::Nonlinear(NonlinearSpec::new(20, 10, 0)),
        "NL 2" => Preset::Nonlinear(NonlinearSpec::new(20, 4, 10)),
        "NL 3" => Preset::Nonlinear(NonlinearSpec::new(50, 10, 10)),
        "NL 4" => Preset::Nonlinear(NonlinearSpec::new(80, 10, 10)),
        other => unreachable!("preset table out of sync: {other}"),
    };
    Ok(spec)
}

/// Generates data for a preset specification.
pub fn generate<R: Rng + ?Sized>(spec: &Preset, rng: &mut R) -> Result<(Dataset, GroundTruth)> {
    match spec {
        Preset::Linear(s) => gen_linear(s, rng),
        Preset::Nonlinear(s) => gen_nonlinear(s, rng),
    }
}

/// Every prototype weight is at least this share of the balanced weight
/// 1/sqrt(k), and never below MIN_WEIGHT; a near-zero weight would leave a
/// nominally relevant feature with no detectable signal.
const MIN_WEIGHT_SHARE: f64 = 0.7;
const MIN_WEIGHT: f64 = 0.2;
const MIN_CLASS_SHARE: f64 = 0.25;
const MAX_RESAMPLES: usize = 1_000_000;

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn weight_floor(k: usize) -> f64 {
    (MIN_WEIGHT_SHARE / (k as f64).sqrt()).max(MIN_WEIGHT)
}

/// Random unit vector with every |w_i| >= weight_floor(k).
fn prototype<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Vec<f64>> {
    let floor = weight_floor(k);
    for _ in 0..MAX_RESAMPLES {
        let mut w: Vec<f64> = (0..k).map(|_| normal(rng)).collect();
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        w.iter_mut().for_each(|v| *v /= norm);
        if w.iter().all(|v| v.abs() >= floor) {
            return Ok(w);
        }
    }
    Err(Error::param(format!(
        "could not draw a {k}-dimensional prototype with all weights >= {floor}"
    )))
}

fn balanced(y: &[f64]) -> bool {
    let ones = y.iter().filter(|&&v| v == 1.0).count() as f64;
    let n = y.len() as f64;
    ones >= MIN_CLASS_SHARE * n && n - ones >= MIN_CLASS_SHARE * n
}

/// `count` affine copies `a·x + b` with `|a|` in [0.5, 2], random sign, and
/// `b` in [-2, 2].
fn affine_copies<R: Rng + ?Sized>(x: &[f64], count: usize, rng: &mut R) -> Vec<Vec<f64>> {
    (0..count)
        .map(|_| {
            let mut a = rng.random_range(0.5..=2.0);
            if rng.random::<bool>() {
                a = -a;
            }
            let b = rng.random_range(-2.0..=2.0);
            x.iter().map(|v| a * v + b).collect()
        })
        .collect()
}

/// Splits `total` copies into `groups` near-equal sizes.
fn group_sizes(total: usize, groups: usize) -> Vec<usize> {
    (0..groups)
        .map(|g| total / groups + usize::from(g < total % groups))
        .collect()
}

fn assemble(
    strong: Vec<Vec<f64>>,
    weak: Vec<Vec<f64>>,
    irrelevant: Vec<Vec<f64>>,
    y: Vec<f64>,
) -> Result<(Dataset, GroundTruth)> {
    let (s, w, i) = (strong.len(), weak.len(), irrelevant.len());
    let truth = GroundTruth {
        strong: (0..s).collect(),
        weak: (s..s + w).collect(),
        irrelevant: (s + w..s + w + i).collect(),
    };
    let columns: Vec<Vec<f64>> = strong.into_iter().chain(weak).chain(irrelevant).collect();
    let ds = Dataset::from_columns(columns, y, Task::Classification)?;
    Ok((ds, truth))
}

/// Hyperplane problem. Strong features are latent coordinates with non-zero
/// weight; when weak features are requested one extra latent coordinate is
/// replaced by `n_weak` affine copies of itself. Irrelevant features are
/// independent standard normals. Columns are ordered strong, weak, irrelevant.
pub fn gen_linear<R: Rng + ?Sized>(spec: &LinearSpec, rng: &mut R) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let n = spec.n;
    let k = spec.n_strong + usize::from(spec.n_weak > 0);
    let w = if k > 0 { prototype(k, rng)? } else { Vec::new() };

    let mut attempt = 0;
    let (latent, y) = loop {
        attempt += 1;
        if attempt > 1000 {
            return Err(Error::param("could not draw balanced labels"));
        }
        let latent: Vec<Vec<f64>> = (0..k).map(|_| (0..n).map(|_| normal(rng)).collect()).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let label = if k == 0 {
                    rng.random::<bool>()
                } else {
                    let mut v: f64 = (0..k).map(|j| w[j] * latent[j][i]).sum();
                    if spec.noise > 0.0 {
                        v += spec.noise * normal(rng);
                    }
                    v > 0.0
                };
                if label {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        if balanced(&y) {
            break (latent, y);
        }
    };

    let mut latent = latent;
    let weak = if spec.n_weak > 0 {
        let hidden = latent.pop().expect("latent for weak group");
        affine_copies(&hidden, spec.n_weak, rng)
    } else {
        Vec::new()
    };
    let irrelevant = (0..spec.n_irrelevant)
        .map(|_| (0..n).map(|_| normal(rng)).collect())
        .collect();
    assemble(latent, weak, irrelevant, y)
}

/// Cluster centres for the two classes on `{-1, 1}^dim`, listed as
/// `(vertex, class)`.
///
/// With two clusters per class every informative axis is either a "shift"
/// axis (both clusters of one class share the coordinate, the other class
/// has one cluster on each side) or a "mirror" axis (the second cluster of
/// each class sits opposite the first). Only two axes shift the class means,
/// which keeps linear models weak while every axis still separates clusters.
fn cluster_vertices<R: Rng + ?Sized>(
    dim: usize,
    per_class: usize,
    rng: &mut R,
) -> Result<Vec<(Vec<f64>, f64)>> {
    let sign = |rng: &mut R| if rng.random::<bool>() { 1.0 } else { -1.0 };
    for _ in 0..MAX_RESAMPLES {
        let centres: Vec<(Vec<f64>, f64)> = if per_class == 2 && dim >= 3 {
            let shift_axes = 2;
            let mut a = vec![0.0; dim];
            let mut b = vec![0.0; dim];
            let mut c = vec![0.0; dim];
            let mut d = vec![0.0; dim];
            for i in 0..dim {
                a[i] = sign(rng);
                b[i] = sign(rng);
                if i < shift_axes {
                    // one class is constant on this axis, the other straddles it
                    if i % 2 == 0 {
                        c[i] = a[i];
                        d[i] = -b[i];
                    } else {
                        c[i] = -a[i];
                        d[i] = b[i];
                    }
                } else {
                    c[i] = -a[i];
                    d[i] = -b[i];
                }
            }
            vec![(a, 0.0), (b, 1.0), (c, 0.0), (d, 1.0)]
        } else {
            (0..2 * per_class)
                .map(|k| ((0..dim).map(|_| sign(rng)).collect(), (k % 2) as f64))
                .collect()
        };
        let distinct = centres
            .iter()
            .enumerate()
            .all(|(i, (u, _))| centres[..i].iter().all(|(v, _)| u != v));
        // an axis on which all centres agree carries no information
        let informative = (0..dim).all(|j| centres.iter().any(|(v, _)| v[j] != centres[0].0[j]));
        if distinct && informative {
            return Ok(centres);
        }
    }
    Err(Error::param("could not place distinct cluster centres"))
}

/// Clustered problem: Gaussian blobs (unit variance) at hypercube vertices
/// scaled by `class_sep`, classes interleaved across clusters. The last
/// `ceil(n_redundant / 5)` informative axes are replaced by affine copies;
/// remaining columns are standard-normal noise. Columns are ordered strong,
/// weak, irrelevant.
pub fn gen_nonlinear<R: Rng + ?Sized>(
    spec: &NonlinearSpec,
    rng: &mut R,
) -> Result<(Dataset, GroundTruth)> {
    spec.validate()?;
    let n = spec.n;
    let groups = spec.redundant_groups();
    let dim = spec.n_strel + groups;
    let centres = cluster_vertices(dim, spec.clusters_per_class, rng)?;
    let n_clusters = centres.len();

    let mut latent = vec![Vec::with_capacity(n); dim];
    let mut y = Vec::with_capacity(n);
    for (k, (centre, label)) in centres.iter().enumerate() {
        let size = n / n_clusters + usize::from(k < n % n_clusters);
        for _ in 0..size {
            for (j, col) in latent.iter_mut().enumerate() {
                col.push(spec.class_sep * centre[j] + normal(rng));
            }
            y.push(*label);
        }
    }

    let hidden = latent.split_off(spec.n_strel);
    let weak: Vec<Vec<f64>> = hidden
        .iter()
        .zip(group_sizes(spec.n_redundant, groups))
        .flat_map(|(x, count)| affine_copies(x, count, rng))
        .collect();
    let n_noise = spec.n_features - spec.n_strel - spec.n_redundant;
    let irrelevant = (0..n_noise)
        .map(|_| (0..n).map(|_| normal(rng)).collect())
        .collect();
    assemble(latent, weak, irrelevant, y)
}
