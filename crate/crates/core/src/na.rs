//! Neighborhood averaging of outlier scores.
//!
//! The revised score of object `i` is the uniform average of its own score
//! and the scores of its `k` nearest neighbors:
//!
//! ```text
//! S*_i = (S_i + sum_{j in kNN(i)} S_j) / (k + 1)
//! ```
//!
//! Iterating applies the same operator to the previous output. Updates are
//! synchronous: every revised score is computed from the previous vector
//! only. The neighbor graph is defined in feature space and therefore stays
//! the same across iterations.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::detectors::ScoreVector;
use crate::error::{Error, Result};
use crate::neighbors::{knn_indexed_with, NeighborGraph};
use crate::par::Exec;

/// Suffix appended to a detector id once its scores went through NA.
pub const NA_SUFFIX: &str = "+na";

pub const DEFAULT_K: usize = 100;
pub const DEFAULT_ITERATIONS: usize = 1;

fn default_k() -> usize {
    DEFAULT_K
}
fn default_iterations() -> usize {
    DEFAULT_ITERATIONS
}
fn default_reuse() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NaConfig {
    /// Neighborhood size; clamped to `N - 1` when applied.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    /// Use the detector's own graph when it has at least `k` neighbors.
    #[serde(default = "default_reuse")]
    pub reuse_graph: bool,
}

impl Default for NaConfig {
    fn default() -> Self {
        Self {
            k: DEFAULT_K,
            iterations: DEFAULT_ITERATIONS,
            reuse_graph: true,
        }
    }
}

impl NaConfig {
    pub fn new(k: usize, iterations: usize) -> Self {
        Self {
            k,
            iterations,
            reuse_graph: true,
        }
    }

    /// `k` clamped to `[1, n - 1]`.
    pub fn effective_k(&self, n: usize) -> usize {
        self.k.clamp(1, n.saturating_sub(1).max(1))
    }
}

/// One averaging pass over the whole graph.
pub fn neighborhood_average(g: &NeighborGraph, s: &ScoreVector) -> Result<ScoreVector> {
    neighborhood_average_with(g, s, Exec::default())
}

pub fn neighborhood_average_with(
    g: &NeighborGraph,
    s: &ScoreVector,
    exec: Exec,
) -> Result<ScoreVector> {
    na_iterate_with(g, s, 1, exec)
}

/// `iterations` synchronous averaging passes; zero passes return `s` as is.
pub fn na_iterate(g: &NeighborGraph, s: &ScoreVector, iterations: usize) -> Result<ScoreVector> {
    na_iterate_with(g, s, iterations, Exec::default())
}

pub fn na_iterate_with(
    g: &NeighborGraph,
    s: &ScoreVector,
    iterations: usize,
    exec: Exec,
) -> Result<ScoreVector> {
    if g.len() != s.len() {
        return Err(Error::LengthMismatch {
            expected: g.len(),
            found: s.len(),
        });
    }
    if iterations == 0 {
        return Ok(s.clone());
    }
    let mut current = s.scores.clone();
    for _ in 0..iterations {
        current = average_pass(g, &current, exec);
    }
    let id = if s.detector_id.ends_with(NA_SUFFIX) {
        s.detector_id.clone()
    } else {
        format!("{}{NA_SUFFIX}", s.detector_id)
    };
    Ok(s.with_scores(id, current))
}

fn average_pass(g: &NeighborGraph, scores: &[f64], exec: Exec) -> Vec<f64> {
    let denom = (g.k() + 1) as f64;
    exec.map(g.len(), |i| {
        let mut acc = scores[i];
        for &j in g.neighbors(i) {
            acc += scores[j];
        }
        acc / denom
    })
}

/// Result of [`apply_na`].
#[derive(Debug, Clone)]
pub struct NaOutcome {
    pub scores: ScoreVector,
    /// Neighborhood size actually used after clamping.
    pub k: usize,
    /// Whether an existing graph was used instead of building one.
    pub graph_reused: bool,
}

/// Full NA step on a dataset: picks or builds the graph, then iterates.
///
/// With `reuse_graph` set and an `existing_graph` of at least the effective
/// `k`, its leading `k` columns are used directly. Otherwise a graph is built
/// with [`knn_indexed_with`](crate::neighbors::knn_indexed_with).
pub fn apply_na(
    d: &Dataset,
    s: &ScoreVector,
    cfg: &NaConfig,
    existing_graph: Option<&NeighborGraph>,
) -> Result<NaOutcome> {
    apply_na_with(d, s, cfg, existing_graph, Exec::default())
}

pub fn apply_na_with(
    d: &Dataset,
    s: &ScoreVector,
    cfg: &NaConfig,
    existing_graph: Option<&NeighborGraph>,
    exec: Exec,
) -> Result<NaOutcome> {
    if d.len() != s.len() {
        return Err(Error::LengthMismatch {
            expected: d.len(),
            found: s.len(),
        });
    }
    if d.len() < 2 {
        return Err(Error::KOutOfRange { k: cfg.k, n: d.len() });
    }
    let k = cfg.effective_k(d.len());
    let reusable = existing_graph.filter(|g| cfg.reuse_graph && g.len() == d.len() && g.k() >= k);
    let (scores, graph_reused) = match reusable {
        Some(g) if g.k() == k => (na_iterate_with(g, s, cfg.iterations, exec)?, true),
        Some(g) => (na_iterate_with(&g.prefix(k)?, s, cfg.iterations, exec)?, true),
        None => {
            let g = knn_indexed_with(d, k, exec)?;
            (na_iterate_with(&g, s, cfg.iterations, exec)?, false)
        }
    };
    Ok(NaOutcome {
        scores,
        k,
        graph_reused,
    })
}
