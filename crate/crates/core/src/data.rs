//! Datasets: CSV ingestion, z-score standardization and a seeded synthetic
//! fixture with labeled outliers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An N×D matrix of finite reals with optional 0/1 outlier labels.
///
/// Values are stored row-major. A `Dataset` is immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    n: usize,
    dim: usize,
    values: Vec<f64>,
    labels: Option<Vec<u8>>,
}

impl Dataset {
    /// Builds a dataset from row-major values, checking every invariant.
    pub fn from_flat(
        name: impl Into<String>,
        n: usize,
        dim: usize,
        values: Vec<f64>,
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if dim == 0 {
            return Err(Error::InvalidDataset("dimension must be at least 1".into()));
        }
        if values.len() != n * dim {
            return Err(Error::LengthMismatch {
                expected: n * dim,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        if let Some(labels) = &labels {
            if labels.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    found: labels.len(),
                });
            }
            if let Some(bad) = labels.iter().find(|&&l| l > 1) {
                return Err(Error::InvalidDataset(format!("label {bad} is not 0 or 1")));
            }
        }
        Ok(Self {
            name: name.into(),
            n,
            dim,
            values,
            labels,
        })
    }

    /// Builds a dataset from a list of equally long rows.
    pub fn from_rows(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Option<Vec<u8>>,
    ) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != dim) {
            return Err(Error::Ragged {
                row: i,
                expected: dim,
                found: row.len(),
            });
        }
        let values = rows.iter().flatten().copied().collect();
        Self::from_flat(name, rows.len(), dim, values, labels)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.n
    }

    /// Always false: a dataset holds at least one object.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> {
        self.values.chunks_exact(self.dim)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn n_outliers(&self) -> Option<usize> {
        self.labels
            .as_ref()
            .map(|l| l.iter().filter(|&&v| v == 1).count())
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Replaces the values, keeping name and labels.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::from_flat(
            self.name.clone(),
            self.n,
            self.dim,
            values,
            self.labels.clone(),
        )
    }
}

/// Selects the label column of a CSV file, by header name or 0-based index.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LabelColumn {
    Index(usize),
    Name(String),
}

impl From<usize> for LabelColumn {
    fn from(i: usize) -> Self {
        LabelColumn::Index(i)
    }
}

impl From<&str> for LabelColumn {
    fn from(s: &str) -> Self {
        LabelColumn::Name(s.to_owned())
    }
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_owned()),
        })
    }
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads a comma-separated file of numbers.
///
/// A first row in which no cell parses as a number is taken as a header.
/// Row numbers in errors are 1-based file lines.
pub fn load_csv(path: impl AsRef<Path>, label_column: Option<&LabelColumn>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_csv(&text, label_column, name)
}

/// Parses CSV text; see [`load_csv`].
pub fn parse_csv(
    text: &str,
    label_column: Option<&LabelColumn>,
    name: impl Into<String>,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        let line = rec.position().map_or(records.len() + 1, |p| p.line() as usize);
        records.push((line, rec));
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }

    let header = if records[0].1.iter().all(|c| parse_number(c).is_none()) {
        Some(records.remove(0).1)
    } else {
        None
    };
    let width = header
        .as_ref()
        .map_or_else(|| records.first().map_or(0, |r| r.1.len()), |h| h.len());

    let label_idx = match label_column {
        None => None,
        Some(LabelColumn::Index(i)) if *i < width => Some(*i),
        Some(LabelColumn::Index(i)) => return Err(Error::MissingLabelColumn(i.to_string())),
        Some(LabelColumn::Name(name)) => Some(
            header
                .as_ref()
                .and_then(|h| h.iter().position(|c| c == name))
                .ok_or_else(|| Error::MissingLabelColumn(name.clone()))?,
        ),
    };

    let n = records.len();
    let dim = width - usize::from(label_idx.is_some());
    let mut values = Vec::with_capacity(n * dim);
    let mut labels = label_idx.map(|_| Vec::with_capacity(n));
    for (line, rec) in &records {
        if rec.len() != width {
            return Err(Error::Ragged {
                row: *line,
                expected: width,
                found: rec.len(),
            });
        }
        for (col, cell) in rec.iter().enumerate() {
            if Some(col) == label_idx {
                let label = match parse_number(cell) {
                    Some(0.0) => 0,
                    Some(1.0) => 1,
                    _ => {
                        return Err(Error::Label {
                            row: *line,
                            value: cell.to_owned(),
                        })
                    }
                };
                labels.as_mut().expect("label vector").push(label);
            } else {
                values.push(parse_number(cell).ok_or_else(|| Error::Parse {
                    row: *line,
                    column: col,
                    value: cell.to_owned(),
                })?);
            }
        }
    }
    Dataset::from_flat(name, n, dim, values, labels)
}

/// Renders a dataset as CSV with a header row. Values carry 17 significant
/// digits so that [`parse_csv`] reproduces them exactly; labels, if present,
/// go in a trailing `label` column.
pub fn to_csv_string(d: &Dataset) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = (0..d.dim()).map(|j| format!("x{j}")).collect();
    if d.labels().is_some() {
        header.push("label".into());
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in d.rows().enumerate() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{v:.16e}");
        }
        if let Some(labels) = d.labels() {
            let _ = write!(out, ",{}", labels[i]);
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(d: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_csv_string(d)).map_err(|e| Error::io(path, e))
}

/// Z-score standardization per column, using the population standard
/// deviation. Constant columns become all zero. Labels are kept.
pub fn standardize(d: &Dataset) -> Dataset {
    let (n, dim) = (d.len(), d.dim());
    let mut values = d.values().to_vec();
    for j in 0..dim {
        let column = || (0..n).map(|i| d.values()[i * dim + j]);
        let (lo, hi) = column().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        if lo == hi {
            for i in 0..n {
                values[i * dim + j] = 0.0;
            }
            continue;
        }
        let mean = column().sum::<f64>() / n as f64;
        let var = column().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for i in 0..n {
            values[i * dim + j] = (values[i * dim + j] - mean) / sd;
        }
    }
    d.with_values(values)
        .expect("standardization keeps shape and finiteness")
}

/// Parameters of [`synth_clusters_with_outliers`], usable in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_inliers: usize,
    pub n_outliers: usize,
    pub dim: usize,
    pub spread: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn generate(&self) -> Result<Dataset> {
        synth_clusters_with_outliers(
            self.n_inliers,
            self.n_outliers,
            self.dim,
            self.spread,
            self.seed,
        )
    }

    pub fn name(&self) -> String {
        format!(
            "synth_{}_{}_{}d_s{}_seed{}",
            self.n_inliers, self.n_outliers, self.dim, self.spread, self.seed
        )
    }
}

/// Tight Gaussian clusters of inliers (label 0) plus outliers (label 1) drawn
/// uniformly over a box enclosing all cluster centers.
///
/// One cluster per 100 inliers, between 1 and 10 clusters. Cluster centers are
/// uniform in `[-25·spread, 25·spread]^dim`, each cluster's standard deviation
/// is uniform in `[0.5·spread, 1.5·spread]`, and outliers are uniform in
/// `[-30·spread, 30·spread]^dim`. Inliers come first, then outliers.
pub fn synth_clusters_with_outliers(
    n_inliers: usize,
    n_outliers: usize,
    dim: usize,
    spread: f64,
    seed: u64,
) -> Result<Dataset> {
    if n_inliers + n_outliers == 0 {
        return Err(Error::EmptyDataset);
    }
    if dim == 0 {
        return Err(Error::InvalidDataset("dimension must be at least 1".into()));
    }
    if !(spread > 0.0 && spread.is_finite()) {
        return Err(Error::InvalidConfig(format!("spread must be > 0, got {spread}")));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_clusters = (n_inliers / 100).clamp(1, 10);
    let half_width = 25.0 * spread;
    let clusters: Vec<(Vec<f64>, f64)> = (0..n_clusters)
        .map(|_| {
            let center = (0..dim)
                .map(|_| rng.random_range(-half_width..half_width))
                .collect();
            let sd = spread * rng.random_range(0.5..1.5);
            (center, sd)
        })
        .collect();

    let mut values = Vec::with_capacity((n_inliers + n_outliers) * dim);
    let mut labels = Vec::with_capacity(n_inliers + n_outliers);
    for i in 0..n_inliers {
        let (center, sd) = &clusters[i % n_clusters];
        let normal = Normal::new(0.0, *sd).expect("positive standard deviation");
        values.extend(center.iter().map(|c| c + normal.sample(&mut rng)));
        labels.push(0);
    }
    let box_half = 30.0 * spread;
    for _ in 0..n_outliers {
        values.extend((0..dim).map(|_| rng.random_range(-box_half..box_half)));
    }
    labels.resize(n_inliers + n_outliers, 1);
    Dataset::from_flat(
        SynthSpec {
            n_inliers,
            n_outliers,
            dim,
            spread,
            seed,
        }
        .name(),
        n_inliers + n_outliers,
        dim,
        values,
        Some(labels),
    )
}
