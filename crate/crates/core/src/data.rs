//! Immutable column-major datasets and the transformations the selection
//! pipeline applies to them.

use std::collections::HashSet;
use std::fs::File;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    /// Binary labels encoded as 0.0 / 1.0.
    Classification,
    Regression,
}

/// A feature column together with a lazily computed ascending sort order.
///
/// Columns are shared between datasets through `Arc`, so the sort order is
/// computed at most once per column no matter how many derived datasets
/// (shadow extensions, subsets) reuse it.
#[derive(Debug)]
pub struct Column {
    values: Box<[f64]>,
    order: OnceLock<Box<[u32]>>,
}

impl Column {
    fn new(values: Vec<f64>) -> Self {
        Column {
            values: values.into_boxed_slice(),
            order: OnceLock::new(),
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Row indices sorted by value; equal values keep row order.
    pub fn sorted_order(&self) -> &[u32] {
        self.order.get_or_init(|| {
            let mut idx: Vec<u32> = (0..self.values.len() as u32).collect();
            idx.sort_by(|&a, &b| self.values[a as usize].total_cmp(&self.values[b as usize]));
            idx.into_boxed_slice()
        })
    }
}

/// Sorted, duplicate-free set of feature indices.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureIndexSet(Vec<usize>);

impl FeatureIndexSet {
    pub fn new() -> Self {
        FeatureIndexSet(Vec::new())
    }

    /// All indices `0..d`.
    pub fn full(d: usize) -> Self {
        FeatureIndexSet((0..d).collect())
    }

    /// Builds a set, rejecting indices `>= d`.
    pub fn checked(indices: impl IntoIterator<Item = usize>, d: usize) -> Result<Self> {
        let set: Self = indices.into_iter().collect();
        if let Some(&index) = set.0.last() {
            if index >= d {
                return Err(Error::FeatureIndex { index, d });
            }
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn insert(&mut self, j: usize) {
        if let Err(pos) = self.0.binary_search(&j) {
            self.0.insert(pos, j);
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        self.iter().chain(other.iter()).collect()
    }

    pub fn intersection(&self, other: &Self) -> Self {
        self.iter().filter(|&j| other.contains(j)).collect()
    }

    pub fn difference(&self, other: &Self) -> Self {
        self.iter().filter(|&j| !other.contains(j)).collect()
    }

    /// `{0, …, d-1} ∖ self`.
    pub fn complement(&self, d: usize) -> Self {
        (0..d).filter(|&j| !self.contains(j)).collect()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.iter().all(|j| other.contains(j))
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.iter().all(|j| !other.contains(j))
    }
}

impl FromIterator<usize> for FeatureIndexSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut v: Vec<usize> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        FeatureIndexSet(v)
    }
}

impl<'a> IntoIterator for &'a FeatureIndexSet {
    type Item = usize;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, usize>>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter().copied()
    }
}

/// Feature matrix, target and column names. Never mutated after construction;
/// every transformation returns a new value sharing unchanged columns.
#[derive(Clone, Debug)]
pub struct Dataset {
    columns: Vec<Arc<Column>>,
    names: Vec<String>,
    target: Arc<[f64]>,
    task: Task,
}

impl Dataset {
    pub fn new(
        columns: Vec<Vec<f64>>,
        target: Vec<f64>,
        task: Task,
        names: Vec<String>,
    ) -> Result<Self> {
        let d = columns.len();
        if d == 0 {
            return Err(Error::InvalidDataset("no feature columns".into()));
        }
        if names.len() != d {
            return Err(Error::InvalidDataset(format!(
                "{} names for {} columns",
                names.len(),
                d
            )));
        }
        let n = target.len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 rows, got {n}")));
        }
        for (j, col) in columns.iter().enumerate() {
            if col.len() != n {
                return Err(Error::InvalidDataset(format!(
                    "column `{}` has {} rows, target has {}",
                    names[j],
                    col.len(),
                    n
                )));
            }
            if let Some(i) = col.iter().position(|v| !v.is_finite()) {
                return Err(Error::Cell {
                    row: i + 1,
                    column: names[j].clone(),
                    message: "non-finite value".into(),
                });
            }
        }
        check_target(&target, task, "target")?;
        Ok(Dataset {
            columns: columns.into_iter().map(|c| Arc::new(Column::new(c))).collect(),
            names,
            target: target.into(),
            task,
        })
    }

    /// Convenience constructor naming columns `f0, f1, ...`.
    pub fn from_columns(columns: Vec<Vec<f64>>, target: Vec<f64>, task: Task) -> Result<Self> {
        let names = (0..columns.len()).map(|j| format!("f{j}")).collect();
        Dataset::new(columns, target, task, names)
    }

    pub fn n_rows(&self) -> usize {
        self.target.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn task(&self) -> Task {
        self.task
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        self.columns[j].values()
    }

    pub(crate) fn column_handle(&self, j: usize) -> &Column {
        &self.columns[j]
    }

    pub fn all_features(&self) -> FeatureIndexSet {
        FeatureIndexSet::full(self.n_features())
    }

    fn check_index(&self, j: usize) -> Result<()> {
        if j >= self.n_features() {
            Err(Error::FeatureIndex {
                index: j,
                d: self.n_features(),
            })
        } else {
            Ok(())
        }
    }

    /// A uniformly random permutation of column `j`.
    pub fn permute_feature<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.check_index(j)?;
        let mut col = self.column(j).to_vec();
        col.shuffle(rng);
        Ok(col)
    }

    /// Appends a permuted copy of one uniformly chosen feature. Returns the
    /// extended dataset and the shadow column's position, which is always the
    /// old feature count.
    pub fn extend_with_random_shadow<R: Rng + ?Sized>(&self, rng: &mut R) -> (Dataset, usize) {
        let source = rng.random_range(0..self.n_features());
        self.extend_with_shadow_of(source, rng)
    }

    pub(crate) fn extend_with_shadow_of<R: Rng + ?Sized>(
        &self,
        source: usize,
        rng: &mut R,
    ) -> (Dataset, usize) {
        let shadow = self
            .permute_feature(source, rng)
            .expect("source index drawn in range");
        let pos = self.n_features();
        let ds = self.with_extra_columns(vec![(format!("shadow_{}", self.names[source]), shadow)]);
        (ds, pos)
    }

    /// Appends columns after the existing ones.
    pub(crate) fn with_extra_columns(&self, extra: Vec<(String, Vec<f64>)>) -> Dataset {
        let mut columns = self.columns.clone();
        let mut names = self.names.clone();
        for (name, values) in extra {
            debug_assert_eq!(values.len(), self.n_rows());
            columns.push(Arc::new(Column::new(values)));
            names.push(name);
        }
        Dataset {
            columns,
            names,
            target: self.target.clone(),
            task: self.task,
        }
    }

    /// Dataset without feature `j`. Fails if `j` is out of range or is the
    /// only feature.
    pub fn drop_feature(&self, j: usize) -> Result<Dataset> {
        self.check_index(j)?;
        if self.n_features() == 1 {
            return Err(Error::InvalidDataset("cannot drop the only feature".into()));
        }
        let keep: Vec<usize> = (0..self.n_features()).filter(|&k| k != j).collect();
        Ok(self.project(&keep))
    }

    /// Dataset restricted to the features in `set`, in index order.
    pub fn select_features(&self, set: &FeatureIndexSet) -> Result<Dataset> {
        if set.is_empty() {
            return Err(Error::InvalidDataset("empty feature selection".into()));
        }
        for j in set {
            self.check_index(j)?;
        }
        Ok(self.project(set.as_slice()))
    }

    /// Dataset whose column `k` is column `order[k]` of `self`. Indices may
    /// repeat or be omitted.
    pub(crate) fn reorder_features(&self, order: &[usize]) -> Dataset {
        self.project(order)
    }

    fn project(&self, keep: &[usize]) -> Dataset {
        Dataset {
            columns: keep.iter().map(|&j| self.columns[j].clone()).collect(),
            names: keep.iter().map(|&j| self.names[j].clone()).collect(),
            target: self.target.clone(),
            task: self.task,
        }
    }

    /// Dataset made of the given rows (repeats allowed), in the given order.
    pub fn take_rows(&self, rows: &[usize]) -> Result<Dataset> {
        if rows.len() < 2 {
            return Err(Error::InvalidDataset(format!(
                "row sample of size {} is too small",
                rows.len()
            )));
        }
        let columns = self
            .columns
            .iter()
            .map(|c| {
                let v = c.values();
                Arc::new(Column::new(rows.iter().map(|&i| v[i]).collect()))
            })
            .collect();
        let target: Vec<f64> = rows.iter().map(|&i| self.target[i]).collect();
        Ok(Dataset {
            columns,
            names: self.names.clone(),
            target: target.into(),
            task: self.task,
        })
    }

    /// Samples `round(fraction * n)` rows, with or without replacement.
    pub fn bootstrap_rows<R: Rng + ?Sized>(
        &self,
        fraction: f64,
        without_replacement: bool,
        rng: &mut R,
    ) -> Result<Dataset> {
        let rows = sample_rows(self.n_rows(), fraction, without_replacement, rng)?;
        self.take_rows(&rows)
    }

    /// Writes the dataset as CSV with the target as the last column.
    pub fn write_csv(&self, path: &Path, target_name: &str) -> Result<()> {
        let io_err = |source| Error::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut out = std::io::BufWriter::new(File::create(path).map_err(io_err)?);
        let mut header: Vec<&str> = self.names.iter().map(String::as_str).collect();
        header.push(target_name);
        writeln!(out, "{}", header.join(",")).map_err(io_err)?;
        for i in 0..self.n_rows() {
            let mut line = String::new();
            for col in &self.columns {
                line.push_str(&col.values()[i].to_string());
                line.push(',');
            }
            line.push_str(&self.target[i].to_string());
            writeln!(out, "{line}").map_err(io_err)?;
        }
        out.flush().map_err(io_err)
    }
}

/// Row indices for a bagging or bootstrap sample of size `round(fraction * n)`.
pub fn sample_rows<R: Rng + ?Sized>(
    n: usize,
    fraction: f64,
    without_replacement: bool,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::param(format!("row fraction {fraction} not in (0, 1]")));
    }
    let m = (fraction * n as f64).round() as usize;
    if m < 1 {
        return Err(Error::param(format!(
            "fraction {fraction} of {n} rows selects no rows"
        )));
    }
    Ok(if without_replacement {
        rand::seq::index::sample(rng, n, m).into_vec()
    } else {
        (0..m).map(|_| rng.random_range(0..n)).collect()
    })
}

fn check_target(target: &[f64], task: Task, column: &str) -> Result<()> {
    for (i, &v) in target.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::Cell {
                row: i + 1,
                column: column.to_string(),
                message: "non-finite value".into(),
            });
        }
        if task == Task::Classification && v != 0.0 && v != 1.0 {
            return Err(Error::Cell {
                row: i + 1,
                column: column.to_string(),
                message: format!("classification target must be 0 or 1, got {v}"),
            });
        }
    }
    Ok(())
}

/// Reads a numeric CSV with a header row. Features keep header order with the
/// target column removed. Row numbers in errors count data rows from 1.
pub fn load_csv(path: &Path, target_column: &str, task: Task) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let mut seen = HashSet::new();
    for name in &header {
        if !seen.insert(name.as_str()) && name == target_column {
            return Err(Error::DuplicateColumn(name.clone()));
        }
    }
    let target_idx = header
        .iter()
        .position(|h| h == target_column)
        .ok_or_else(|| Error::MissingTarget(target_column.to_string()))?;

    let feature_idx: Vec<usize> = (0..header.len()).filter(|&k| k != target_idx).collect();
    let mut columns = vec![Vec::new(); feature_idx.len()];
    let mut target = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let parse = |k: usize| -> Result<f64> {
            let raw = record.get(k).ok_or_else(|| Error::Cell {
                row,
                column: header[k].clone(),
                message: "missing cell".into(),
            })?;
            let v: f64 = raw.parse().map_err(|_| Error::Cell {
                row,
                column: header[k].clone(),
                message: format!("cannot parse `{raw}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Cell {
                    row,
                    column: header[k].clone(),
                    message: format!("non-finite value `{raw}`"),
                });
            }
            Ok(v)
        };
        for (c, &k) in feature_idx.iter().enumerate() {
            columns[c].push(parse(k)?);
        }
        target.push(parse(target_idx)?);
    }
    check_target(&target, task, target_column)?;
    let names = feature_idx.iter().map(|&k| header[k].clone()).collect();
    Dataset::new(columns, target, task, names)
}
