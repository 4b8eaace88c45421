//! Average ensembles of detector scores.

use serde::{Deserialize, Serialize};

use crate::detectors::ScoreVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Z-score every member before averaging.
    #[default]
    Zscore,
    None,
}

#[derive(Debug, Clone)]
pub struct EnsembleInput {
    pub members: Vec<ScoreVector>,
    pub normalization: Normalization,
}

/// Z-score with population standard deviation; constant vectors map to zeros.
pub fn normalize_scores(s: &ScoreVector) -> ScoreVector {
    let xs = &s.scores;
    let n = xs.len() as f64;
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if xs.is_empty() || lo == hi {
        return s.with_scores(s.detector_id.clone(), vec![0.0; xs.len()]);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    s.with_scores(
        s.detector_id.clone(),
        xs.iter().map(|x| (x - mean) / sd).collect(),
    )
}

/// Per-object mean of the (optionally normalized) member scores.
pub fn average_ensemble(e: &EnsembleInput) -> Result<ScoreVector> {
    let first = e
        .members
        .first()
        .ok_or_else(|| Error::InvalidConfig("ensemble needs at least one member".into()))?;
    let n = first.len();
    if let Some(bad) = e.members.iter().find(|m| m.len() != n) {
        return Err(Error::LengthMismatch {
            expected: n,
            found: bad.len(),
        });
    }
    let id = format!(
        "ensemble({})",
        e.members
            .iter()
            .map(|m| m.detector_id.as_str())
            .collect::<Vec<_>>()
            .join("+")
    );
    if e.members.len() == 1 && e.normalization == Normalization::None {
        return Ok(first.clone());
    }
    let members: Vec<ScoreVector> = match e.normalization {
        Normalization::Zscore => e.members.iter().map(normalize_scores).collect(),
        Normalization::None => e.members.clone(),
    };
    let count = members.len() as f64;
    let scores = (0..n)
        .map(|i| members.iter().map(|m| m.scores[i]).sum::<f64>() / count)
        .collect();
    Ok(ScoreVector::new(id, scores))
}
