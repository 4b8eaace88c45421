//! Neighborhood averaging (NA) for outlier scores.
//!
//! Any score-based outlier detector assigns one score per object. NA revises
//! each score to the uniform average of the object's own score and the scores
//! of its `k` nearest neighbors in feature space, so that similar objects end
//! up with similar scores.
//!
//! The crate bundles:
//! - [`data`]: CSV ingestion, z-score standardization and a seeded synthetic fixture;
//! - [`neighbors`]: exact k-NN graphs (brute force, KD-tree, Ball-tree);
//! - [`detectors`]: KNN, avg-kNN, ODIN, LOF, MOD, ABOD, iForest, PCAD and COPOD;
//! - [`na`]: the averaging operator itself;
//! - [`ensemble`]: average ensembles of normalized detector scores;
//! - [`eval`]: ROC/AUC and top-k precision/recall/F1;
//! - [`experiment`]: a config-driven sweep runner and report emitter.
//!
//! With the default `parallel` feature, per-object loops run on rayon. Without
//! it every [`Exec`] falls back to a sequential loop and produces identical
//! output.

pub mod data;
pub mod detectors;
pub mod ensemble;
mod error;
pub mod eval;
pub mod experiment;
pub mod na;
pub mod neighbors;
mod par;

pub use data::{Dataset, LabelColumn};
pub use detectors::{DetectorConfig, DetectorKind, ScoreVector};
pub use error::{Error, Result};
pub use na::{apply_na, na_iterate, neighborhood_average, NaConfig, NaOutcome};
pub use neighbors::NeighborGraph;
pub use par::Exec;
