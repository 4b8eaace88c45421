use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize, Serializer};
use sha2::{Digest, Sha256};

use crate::data::{load_csv, standardize, Dataset, LabelColumn, SynthSpec};
use crate::detectors::DetectorConfig;
use crate::ensemble::Normalization;
use crate::error::{Error, Result};
use crate::na::{NaConfig, DEFAULT_ITERATIONS, DEFAULT_K};

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DatasetSource {
    Csv {
        path: PathBuf,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label_column: Option<LabelColumn>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
    Synthetic {
        synthetic: SynthSpec,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

impl DatasetSource {
    pub fn display_name(&self) -> String {
        match self {
            DatasetSource::Csv { name: Some(n), .. } | DatasetSource::Synthetic { name: Some(n), .. } => {
                n.clone()
            }
            DatasetSource::Csv { path, .. } => path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string()),
            DatasetSource::Synthetic { synthetic, .. } => synthetic.name(),
        }
    }

    /// Loads and z-scores the dataset. Labels are required for evaluation.
    pub fn load(&self) -> Result<Dataset> {
        let raw = match self {
            DatasetSource::Csv {
                path, label_column, ..
            } => load_csv(path, label_column.as_ref())?,
            DatasetSource::Synthetic { synthetic, .. } => synthetic.generate()?,
        };
        if raw.labels().is_none() {
            return Err(Error::InvalidDataset(format!(
                "{} has no label column",
                self.display_name()
            )));
        }
        Ok(standardize(&raw).with_name(self.display_name()))
    }

    fn resolve(&mut self, base: &Path) {
        if let DatasetSource::Csv { path, .. } = self {
            if path.is_relative() {
                *path = base.join(&*path);
            }
        }
    }
}

/// An NA setting of the grid: off, or on with a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NaVariant {
    Off,
    On(NaConfig),
}

impl NaVariant {
    /// Report coordinates `(na_k, na_iterations)`; `Off` is `(0, 0)`.
    pub fn coordinates(&self) -> (usize, usize) {
        match self {
            NaVariant::Off => (0, 0),
            NaVariant::On(c) => (c.k, c.iterations),
        }
    }
}

impl Serialize for NaVariant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NaVariant::Off => s.serialize_str("off"),
            NaVariant::On(c) => c.serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for NaVariant {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Word(String),
            Config(NaConfig),
        }
        match Raw::deserialize(d)? {
            Raw::Word(w) if w == "off" => Ok(NaVariant::Off),
            Raw::Word(w) => Err(de::Error::custom(format!("unknown na setting {w:?}"))),
            Raw::Config(c) => Ok(NaVariant::On(c)),
        }
    }
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeSpec {
    pub start: usize,
    pub end: usize,
}

impl RangeSpec {
    pub fn values(&self) -> std::ops::RangeInclusive<usize> {
        self.start..=self.end
    }
}

impl fmt::Display for RangeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}..={}", self.start, self.end)
    }
}

fn default_na() -> Vec<NaVariant> {
    vec![
        NaVariant::Off,
        NaVariant::On(NaConfig::new(DEFAULT_K, DEFAULT_ITERATIONS)),
    ]
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

/// One reproducible experiment, read from TOML.
///
/// ```toml
/// seed = 7
/// output_dir = "results"
/// na = ["off", { k = 100, iterations = 1 }]
/// k_sweep = { start = 1, end = 100 }
/// iteration_sweep = { start = 0, end = 10 }
/// ensemble_groups = [["knn", "lof"]]
///
/// [[datasets]]
/// path = "data/pima.csv"
/// label_column = "label"
///
/// [[datasets]]
/// synthetic = { n_inliers = 1000, n_outliers = 50, dim = 2, spread = 1.0, seed = 7 }
///
/// [[detectors]]
/// detector = "lof"
/// k = 40
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<DatasetSource>,
    pub detectors: Vec<DetectorConfig>,
    #[serde(default = "default_na")]
    pub na: Vec<NaVariant>,
    /// NA neighborhood sizes swept with the default iteration count; `k = 1`
    /// stands for NA off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sweep: Option<RangeSpec>,
    /// Iteration counts swept with the default NA `k`; 0 is NA off.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iteration_sweep: Option<RangeSpec>,
    /// Each group names configured detectors (by kind or label) whose scores
    /// are averaged into an extra ensemble detector.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ensemble_groups: Vec<Vec<String>>,
    #[serde(default)]
    pub ensemble_normalization: Normalization,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(datasets: Vec<DatasetSource>, detectors: Vec<DetectorConfig>) -> Self {
        Self {
            datasets,
            detectors,
            na: default_na(),
            k_sweep: None,
            iteration_sweep: None,
            ensemble_groups: Vec::new(),
            ensemble_normalization: Normalization::default(),
            seed: 0,
            output_dir: default_output_dir(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative dataset paths are taken relative to the
    /// file's directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.datasets.iter_mut().for_each(|d| d.resolve(base));
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(Error::Config("no datasets configured".into()));
        }
        if self.detectors.is_empty() {
            return Err(Error::Config("no detectors configured".into()));
        }
        for d in &self.detectors {
            d.validate()?;
        }
        for (name, range) in [("k_sweep", self.k_sweep), ("iteration_sweep", self.iteration_sweep)] {
            if let Some(r) = range {
                if r.start > r.end {
                    return Err(Error::Config(format!("{name} {r} is empty")));
                }
            }
        }
        if matches!(self.k_sweep, Some(r) if r.start == 0) {
            return Err(Error::Config("k_sweep must start at 1 or above".into()));
        }
        for v in &self.na {
            if let NaVariant::On(c) = v {
                if c.k == 0 {
                    return Err(Error::Config("na k must be >= 1".into()));
                }
            }
        }
        for group in &self.ensemble_groups {
            if group.is_empty() {
                return Err(Error::Config("empty ensemble group".into()));
            }
            for member in group {
                self.find_detector(member)?;
            }
        }
        Ok(())
    }

    pub(crate) fn find_detector(&self, name: &str) -> Result<usize> {
        self.detectors
            .iter()
            .position(|d| d.label() == name)
            .or_else(|| self.detectors.iter().position(|d| d.detector.as_str() == name))
            .ok_or_else(|| Error::Config(format!("ensemble member {name:?} is not a configured detector")))
    }

    /// All NA settings of the grid, in declaration order without duplicates:
    /// the `na` list, then the k sweep, then the iteration sweep.
    pub fn na_settings(&self) -> Vec<NaVariant> {
        let mut out: Vec<NaVariant> = Vec::new();
        let mut push = |v: NaVariant| {
            if !out.iter().any(|o| o.coordinates() == v.coordinates()) {
                out.push(v);
            }
        };
        self.na.iter().copied().for_each(&mut push);
        if let Some(r) = self.k_sweep {
            for k in r.values() {
                push(if k == 1 {
                    // k = 1 plots as the original detector
                    NaVariant::On(NaConfig::new(1, 0))
                } else {
                    NaVariant::On(NaConfig::new(k, DEFAULT_ITERATIONS))
                });
            }
        }
        if let Some(r) = self.iteration_sweep {
            for it in r.values() {
                push(NaVariant::On(NaConfig::new(DEFAULT_K, it)));
            }
        }
        out
    }

    /// SHA-256 over the canonical JSON form of the config.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detectors::DetectorKind;

    const SAMPLE: &str = r#"
seed = 3
na = ["off", { k = 50, iterations = 2 }]
k_sweep = { start = 1, end = 3 }
ensemble_groups = [["knn", "lof_k40"]]

[[datasets]]
synthetic = { n_inliers = 100, n_outliers = 5, dim = 2, spread = 1.0, seed = 1 }

[[datasets]]
path = "data/x.csv"
label_column = "label"

[[detectors]]
detector = "knn"

[[detectors]]
detector = "lof"
k = 40
"#;

    #[test]
    fn parses_sample() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(cfg.seed, 3);
        assert_eq!(cfg.detectors[1].detector, DetectorKind::Lof);
        assert_eq!(cfg.na[1], NaVariant::On(NaConfig::new(50, 2)));
        assert_eq!(cfg.output_dir, PathBuf::from("results"));
        assert!(matches!(cfg.datasets[1], DatasetSource::Csv { .. }));
        let coords: Vec<_> = cfg.na_settings().iter().map(NaVariant::coordinates).collect();
        assert_eq!(coords, vec![(0, 0), (50, 2), (1, 0), (2, 1), (3, 1)]);
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::from_toml("datasets = []\ndetectors = []").is_err());
        let bad_group = SAMPLE.replace("\"lof_k40\"", "\"abod\"");
        assert!(ExperimentConfig::from_toml(&bad_group).is_err());
        let bad_na = SAMPLE.replace("\"off\",", "\"maybe\",");
        assert!(ExperimentConfig::from_toml(&bad_na).is_err());
        let bad_range = SAMPLE.replace("end = 3", "end = 0");
        assert!(ExperimentConfig::from_toml(&bad_range).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let b = ExperimentConfig::from_toml(SAMPLE).unwrap();
        assert_eq!(a.content_hash(), b.content_hash());
        let mut c = a.clone();
        c.seed = 4;
        assert_ne!(a.content_hash(), c.content_hash());
    }

    #[test]
    fn relative_paths_follow_the_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.toml");
        std::fs::write(&path, SAMPLE).unwrap();
        let cfg = ExperimentConfig::from_file(&path).unwrap();
        match &cfg.datasets[1] {
            DatasetSource::Csv { path: p, .. } => assert_eq!(p, &dir.path().join("data/x.csv")),
            other => panic!("{other:?}"),
        }
    }
}
