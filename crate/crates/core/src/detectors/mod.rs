//! Baseline score-based outlier detectors.
//!
//! Every detector returns one finite score per object, oriented so that a
//! higher score means more outlying. Detectors whose natural statistic points
//! the other way are inverted internally (ODIN, ABOD).

mod abod;
mod copod;
mod iforest;
mod knn;
mod lof;
mod meanshift;
mod pcad;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::{knn_indexed_with, NeighborGraph};
use crate::par::Exec;

pub use abod::{abod_score, abod_score_with};
pub use copod::copod_score;
pub use iforest::{iforest_score, iforest_score_with};
pub use knn::{avg_knn_score, knn_score, odin_score};
pub use lof::{lof_score, lof_score_with, LRD_CAP};
pub use meanshift::{mod_score, mod_score_with};
pub use pcad::pcad_score;

/// One outlier score per object, higher meaning more outlying.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreVector {
    pub scores: Vec<f64>,
    pub detector_id: String,
    pub params: Option<DetectorConfig>,
}

impl ScoreVector {
    pub fn new(detector_id: impl Into<String>, scores: Vec<f64>) -> Self {
        Self {
            scores,
            detector_id: detector_id.into(),
            params: None,
        }
    }

    pub(crate) fn from_config(cfg: &DetectorConfig, scores: Vec<f64>) -> Self {
        debug_assert!(scores.iter().all(|s| s.is_finite()));
        Self {
            scores,
            detector_id: cfg.detector.to_string(),
            params: Some(cfg.clone()),
        }
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.scores
    }

    /// Same provenance, new values.
    pub fn with_scores(&self, detector_id: impl Into<String>, scores: Vec<f64>) -> Self {
        Self {
            scores,
            detector_id: detector_id.into(),
            params: self.params.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    Knn,
    AvgKnn,
    Odin,
    Lof,
    Mod,
    Abod,
    Iforest,
    Pcad,
    Copod,
}

impl DetectorKind {
    pub const ALL: [DetectorKind; 9] = [
        DetectorKind::Knn,
        DetectorKind::AvgKnn,
        DetectorKind::Odin,
        DetectorKind::Lof,
        DetectorKind::Mod,
        DetectorKind::Abod,
        DetectorKind::Iforest,
        DetectorKind::Pcad,
        DetectorKind::Copod,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DetectorKind::Knn => "knn",
            DetectorKind::AvgKnn => "avg_knn",
            DetectorKind::Odin => "odin",
            DetectorKind::Lof => "lof",
            DetectorKind::Mod => "mod",
            DetectorKind::Abod => "abod",
            DetectorKind::Iforest => "iforest",
            DetectorKind::Pcad => "pcad",
            DetectorKind::Copod => "copod",
        }
    }

    /// Whether the detector builds a k-NN graph on the input data that NA
    /// can reuse.
    pub fn builds_graph(self) -> bool {
        matches!(
            self,
            DetectorKind::Knn
                | DetectorKind::AvgKnn
                | DetectorKind::Odin
                | DetectorKind::Lof
                | DetectorKind::Mod
                | DetectorKind::Abod
        )
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DetectorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DetectorKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown detector {s:?}")))
    }
}

fn default_k() -> usize {
    10
}
fn default_trees() -> usize {
    100
}
fn default_subsample() -> usize {
    256
}
fn default_variance_fraction() -> f64 {
    0.9
}
fn default_mod_iterations() -> usize {
    3
}

/// Detector identity plus hyperparameters. Fields irrelevant to the chosen
/// detector are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub detector: DetectorKind,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_trees")]
    pub n_trees: usize,
    #[serde(default = "default_subsample")]
    pub subsample: usize,
    #[serde(default = "default_variance_fraction")]
    pub variance_fraction: f64,
    #[serde(default = "default_mod_iterations")]
    pub mod_iterations: usize,
    #[serde(default)]
    pub seed: u64,
}

impl DetectorConfig {
    pub fn new(detector: DetectorKind) -> Self {
        Self {
            detector,
            k: default_k(),
            n_trees: default_trees(),
            subsample: default_subsample(),
            variance_fraction: default_variance_fraction(),
            mod_iterations: default_mod_iterations(),
            seed: 0,
        }
    }

    pub fn with_k(mut self, k: usize) -> Self {
        self.k = k;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        match self.detector {
            DetectorKind::Iforest if self.n_trees == 0 => fail("n_trees must be >= 1".into()),
            DetectorKind::Iforest if self.subsample < 2 => fail("subsample must be >= 2".into()),
            DetectorKind::Pcad
                if !(self.variance_fraction > 0.0 && self.variance_fraction <= 1.0) =>
            {
                fail(format!(
                    "variance_fraction must be in (0, 1], got {}",
                    self.variance_fraction
                ))
            }
            DetectorKind::Abod if self.k < 2 => fail("abod needs k >= 2".into()),
            kind if kind.builds_graph() && self.k == 0 => fail("k must be >= 1".into()),
            _ => Ok(()),
        }
    }

    /// Short label including the parameters that matter for this detector.
    pub fn label(&self) -> String {
        match self.detector {
            DetectorKind::Iforest => format!("iforest_t{}_s{}", self.n_trees, self.subsample),
            DetectorKind::Pcad => format!("pcad_v{}", self.variance_fraction),
            DetectorKind::Copod => "copod".into(),
            DetectorKind::Mod => format!("mod_k{}_i{}", self.k, self.mod_iterations),
            kind => format!("{kind}_k{}", self.k),
        }
    }
}

/// Detector output plus the k-NN graph it built on the input data, if any.
#[derive(Debug, Clone)]
pub struct Detection {
    pub scores: ScoreVector,
    pub graph: Option<NeighborGraph>,
}

/// Runs the configured detector on `d`.
pub fn detect(d: &Dataset, cfg: &DetectorConfig) -> Result<Detection> {
    detect_with(d, cfg, Exec::default())
}

pub fn detect_with(d: &Dataset, cfg: &DetectorConfig, exec: Exec) -> Result<Detection> {
    cfg.validate()?;
    let graph_based = |f: fn(&Dataset, &NeighborGraph, Exec) -> Result<Vec<f64>>| {
        let g = knn_indexed_with(d, cfg.k, exec)?;
        let scores = f(d, &g, exec)?;
        Ok::<_, Error>(Detection {
            scores: ScoreVector::from_config(cfg, scores),
            graph: Some(g),
        })
    };
    match cfg.detector {
        DetectorKind::Knn => graph_based(|d, g, _| Ok(knn_score(d, g)?.scores)),
        DetectorKind::AvgKnn => graph_based(|d, g, _| Ok(avg_knn_score(d, g)?.scores)),
        DetectorKind::Odin => graph_based(|d, g, _| Ok(odin_score(d, g)?.scores)),
        DetectorKind::Lof => graph_based(|d, g, e| Ok(lof_score_with(d, g, e)?.scores)),
        DetectorKind::Abod => graph_based(|d, g, e| Ok(abod_score_with(d, g, e)?.scores)),
        DetectorKind::Mod => {
            let (scores, graph) = meanshift::run(d, cfg.k, cfg.mod_iterations, exec)?;
            Ok(Detection {
                scores: ScoreVector::from_config(cfg, scores),
                graph,
            })
        }
        DetectorKind::Iforest => Ok(Detection {
            scores: iforest_score_with(d, cfg, exec)?,
            graph: None,
        }),
        DetectorKind::Pcad => Ok(Detection {
            scores: pcad_score(d, cfg)?,
            graph: None,
        }),
        DetectorKind::Copod => Ok(Detection {
            scores: copod_score(d)?,
            graph: None,
        }),
    }
    .map(|mut det: Detection| {
        det.scores.params = Some(cfg.clone());
        det
    })
}

pub(crate) fn check_graph(d: &Dataset, g: &NeighborGraph) -> Result<()> {
    if d.len() != g.len() {
        return Err(Error::LengthMismatch {
            expected: d.len(),
            found: g.len(),
        });
    }
    Ok(())
}
