//! Benchmark harness: runs selection methods on the synthetic presets and
//! scores them against the ground truth.

mod metrics;
mod rfe;

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::{Dataset, FeatureIndexSet};
use crate::decompose::{decompose, PipelineConfig};
use crate::error::{Error, Result};
use crate::forest::{constant_score, Forest, ForestParams, Scoring};
use crate::rng::substream;
use crate::synth::{canonical_preset_name, generate, preset, GroundTruth, Preset};

pub use metrics::{relevance_metrics, selection_metrics, ClassMetrics, RelevanceMetrics};
pub use rfe::{rfe_cv, rfe_cv_trace, RfeStep, RfeTrace, DEFAULT_FOLDS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    /// The sequential strong/weak decomposition.
    #[serde(rename = "sq")]
    Sq,
    /// Recursive feature elimination with cross-validated set size.
    #[serde(rename = "rfe")]
    Rfe,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Sq => "sq",
            Method::Rfe => "rfe",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sq" => Ok(Method::Sq),
            "rfe" | "rf-rfe" | "rfecv" => Ok(Method::Rfe),
            _ => Err(Error::UnknownMethod(s.to_string())),
        }
    }
}

/// Where the dataset of each repeat of a linear preset comes from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Resampling {
    /// A fresh draw from the generator.
    #[default]
    Regenerate,
    /// A full-size with-replacement bootstrap of one fixed draw. Duplicated
    /// rows let a real noise column isolate them while its permuted shadow
    /// cannot, which biases shadow-based selection towards noise.
    Bootstrap,
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub presets: Vec<String>,
    pub repeats: usize,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub pipeline: PipelineConfig,
    pub rfe_params: ForestParams,
    pub rfe_folds: usize,
    pub resampling: Resampling,
}

impl BenchConfig {
    pub fn new(presets: Vec<String>, repeats: usize, methods: Vec<Method>, seed: u64) -> Self {
        BenchConfig {
            presets,
            repeats,
            methods,
            seed,
            pipeline: PipelineConfig::default(),
            rfe_params: ForestParams::default(),
            rfe_folds: DEFAULT_FOLDS,
            resampling: Resampling::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub preset: String,
    pub repeat: usize,
    pub method: Method,
    pub overall: ClassMetrics,
    /// Per-class metrics exist only for methods that label strong and weak.
    pub strong: Option<ClassMetrics>,
    pub weak: Option<ClassMetrics>,
    pub train_accuracy: f64,
    pub seconds: f64,
    pub selected: FeatureIndexSet,
    pub strong_set: Option<FeatureIndexSet>,
}

/// Means over the rows of one preset and method; undefined entries are
/// left out of each mean.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchSummary {
    pub preset: String,
    pub method: Method,
    pub runs: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub strong_precision: Option<f64>,
    pub strong_recall: Option<f64>,
    pub weak_precision: Option<f64>,
    pub weak_recall: Option<f64>,
    pub train_accuracy: Option<f64>,
    pub seconds: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub rows: Vec<BenchRow>,
}

pub const CSV_HEADER: [&str; 12] = [
    "preset",
    "repeat",
    "method",
    "precision",
    "recall",
    "f1",
    "strong_precision",
    "strong_recall",
    "weak_precision",
    "weak_recall",
    "train_accuracy",
    "seconds",
];

impl BenchRow {
    /// Numeric CSV columns after `method`, `None` where undefined.
    pub fn values(&self) -> [Option<f64>; 9] {
        [
            self.overall.precision,
            self.overall.recall,
            Some(self.overall.f1),
            self.strong.and_then(|m| m.precision),
            self.strong.and_then(|m| m.recall),
            self.weak.and_then(|m| m.precision),
            self.weak.and_then(|m| m.recall),
            Some(self.train_accuracy),
            Some(self.seconds),
        ]
    }
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, count) = values.flatten().fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl BenchResult {
    pub fn rows_for<'a>(&'a self, preset: &'a str, method: Method) -> impl Iterator<Item = &'a BenchRow> {
        self.rows
            .iter()
            .filter(move |r| r.preset == preset && r.method == method)
    }

    /// One summary per (preset, method) pair in first-appearance order.
    pub fn summary(&self) -> Vec<BenchSummary> {
        let mut keys: Vec<(String, Method)> = Vec::new();
        for r in &self.rows {
            if !keys.iter().any(|(p, m)| *p == r.preset && *m == r.method) {
                keys.push((r.preset.clone(), r.method));
            }
        }
        keys.into_iter()
            .map(|(preset, method)| {
                let rows: Vec<[Option<f64>; 9]> =
                    self.rows_for(&preset, method).map(BenchRow::values).collect();
                let col = |k: usize| mean(rows.iter().map(|v| v[k]));
                BenchSummary {
                    runs: rows.len(),
                    precision: col(0),
                    recall: col(1),
                    f1: col(2),
                    strong_precision: col(3),
                    strong_recall: col(4),
                    weak_precision: col(5),
                    weak_recall: col(6),
                    train_accuracy: col(7),
                    seconds: col(8),
                    preset,
                    method,
                }
            })
            .collect()
    }

    /// Zeroes all timings so that emitted reports are reproducible.
    pub fn without_timing(mut self) -> Self {
        for r in &mut self.rows {
            r.seconds = 0.0;
        }
        self
    }

    /// Per-run rows; undefined values are written as `NA`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            let mut record = vec![r.preset.clone(), r.repeat.to_string(), r.method.to_string()];
            record.extend(
                r.values()
                    .iter()
                    .map(|v| v.map_or_else(|| "NA".to_string(), |x| x.to_string())),
            );
            w.write_record(&record)?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn summary_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.summary())?)
    }

    /// Writes `runs.csv` and `summary.json` into `dir`, creating it if needed.
    pub fn write_to_dir(&self, dir: &Path) -> Result<()> {
        let io_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| Error::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let csv_path = dir.join("runs.csv");
        let file = std::fs::File::create(&csv_path).map_err(io_err(&csv_path))?;
        self.write_csv(std::io::BufWriter::new(file))?;
        let json_path = dir.join("summary.json");
        std::fs::write(&json_path, self.summary_json()? + "\n").map_err(io_err(&json_path))?;
        Ok(())
    }
}

/// Result of one method on one dataset.
struct MethodOutcome {
    overall: ClassMetrics,
    strong: Option<ClassMetrics>,
    weak: Option<ClassMetrics>,
    train_accuracy: f64,
    seconds: f64,
    selected: FeatureIndexSet,
    strong_set: Option<FeatureIndexSet>,
}

fn run_method<R: Rng + ?Sized>(
    method: Method,
    config: &BenchConfig,
    ds: &Dataset,
    truth: &GroundTruth,
    rng: &mut R,
) -> Result<MethodOutcome> {
    let start = Instant::now();
    match method {
        Method::Sq => {
            let report = decompose(ds, &config.pipeline, rng)?;
            let seconds = start.elapsed().as_secs_f64();
            let m = relevance_metrics(&report, truth)?;
            let train_accuracy = report
                .diagnostics
                .reference_score
                .unwrap_or_else(|| constant_score(Scoring::Vote, ds.task(), ds.target()));
            Ok(MethodOutcome {
                overall: m.overall,
                strong: Some(m.strong),
                weak: Some(m.weak),
                train_accuracy,
                seconds,
                selected: report.selected(),
                strong_set: Some(report.strong),
            })
        }
        Method::Rfe => {
            let selected = rfe_cv(&config.rfe_params, ds, config.rfe_folds, rng)?;
            let seconds = start.elapsed().as_secs_f64();
            let sub = ds.select_features(&selected)?;
            let train_accuracy = Forest::fit(&config.rfe_params, &sub, rng)?.score_as(Scoring::Vote, &sub)?;
            Ok(MethodOutcome {
                overall: selection_metrics(&selected, truth)?,
                strong: None,
                weak: None,
                train_accuracy,
                seconds,
                selected,
                strong_set: None,
            })
        }
    }
}

/// Runs every method on `repeats` datasets per preset, drawn as
/// `config.resampling` says (non-linear presets are always regenerated).
/// All randomness derives from `config.seed`, so results do not depend on
/// scheduling.
pub fn run_bench(config: &BenchConfig) -> Result<BenchResult> {
    if config.repeats == 0 {
        return Err(Error::param("repeats must be at least 1"));
    }
    if config.methods.is_empty() {
        return Err(Error::param("no methods given"));
    }
    let specs = config
        .presets
        .iter()
        .map(|name| Ok((canonical_preset_name(name)?.to_string(), preset(name)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut jobs = Vec::new();
    for (p, (name, spec)) in specs.iter().enumerate() {
        let preset_stream = (p as u64) << 32;
        let base = match (spec, config.resampling) {
            (Preset::Linear(_), Resampling::Bootstrap) => {
                Some(generate(spec, &mut substream(config.seed, preset_stream))?)
            }
            _ => None,
        };
        for r in 0..config.repeats {
            let mut rng = substream(config.seed, preset_stream | (r as u64 + 1));
            let (ds, truth) = match &base {
                Some((ds, truth)) => (ds.bootstrap_rows(1.0, false, &mut rng)?, truth.clone()),
                None => generate(spec, &mut rng)?,
            };
            let method_master: u64 = rng.random();
            for (k, &method) in config.methods.iter().enumerate() {
                jobs.push((name.clone(), r, method, k, ds.clone(), truth.clone(), method_master));
            }
        }
    }

    let rows = jobs
        .into_par_iter()
        .map(|(preset, repeat, method, k, ds, truth, master)| {
            let mut rng = substream(master, k as u64);
            let o = run_method(method, config, &ds, &truth, &mut rng)?;
            Ok(BenchRow {
                preset,
                repeat,
                method,
                overall: o.overall,
                strong: o.strong,
                weak: o.weak,
                train_accuracy: o.train_accuracy,
                seconds: o.seconds,
                selected: o.selected,
                strong_set: o.strong_set,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BenchResult { rows })
}
