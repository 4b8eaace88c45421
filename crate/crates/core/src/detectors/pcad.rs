use nalgebra::{DMatrix, SymmetricEigen};

use super::{DetectorConfig, DetectorKind, ScoreVector};
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Eigen pairs of the population covariance, sorted by descending eigenvalue.
/// Negative eigenvalues from rounding are clamped to zero.
pub(crate) fn principal_axes(d: &Dataset) -> (Vec<f64>, Vec<Vec<f64>>, Vec<f64>) {
    let (n, dim) = (d.len(), d.dim());
    let mut mean = vec![0.0; dim];
    for row in d.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, dim, |i, j| d.row(i)[j] - mean[j]);
    let cov = (centered.transpose() * &centered) / n as f64;
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values = order.iter().map(|&t| eig.eigenvalues[t].max(0.0)).collect();
    let vectors = order
        .iter()
        .map(|&t| eig.eigenvectors.column(t).iter().copied().collect())
        .collect();
    (values, vectors, mean)
}

/// Smallest `q >= 1` whose leading eigenvalues hold at least `fraction` of
/// the total variance.
pub(crate) fn components_for(values: &[f64], fraction: f64) -> usize {
    let total: f64 = values.iter().sum();
    let target = fraction * total * (1.0 - 1e-12);
    let mut acc = 0.0;
    for (q, v) in values.iter().enumerate() {
        acc += v;
        if acc >= target {
            return q + 1;
        }
    }
    values.len()
}

/// PCA reconstruction error.
///
/// Keeps the fewest principal components covering `variance_fraction` of the
/// variance; the score is the squared norm of the residual outside those
/// components divided by the discarded eigenvalue mass. When nothing of
/// substance is discarded every score is 0.
pub fn pcad_score(d: &Dataset, cfg: &DetectorConfig) -> Result<ScoreVector> {
    if d.len() < 2 {
        return Err(Error::InvalidDataset("pcad needs at least 2 objects".into()));
    }
    if !(cfg.variance_fraction > 0.0 && cfg.variance_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "variance_fraction must be in (0, 1], got {}",
            cfg.variance_fraction
        )));
    }
    let mut cfg = cfg.clone();
    cfg.detector = DetectorKind::Pcad;

    let (values, vectors, mean) = principal_axes(d);
    let total: f64 = values.iter().sum();
    let q = components_for(&values, cfg.variance_fraction);
    let discarded: f64 = values[q..].iter().sum();
    if total <= 0.0 || q == values.len() || discarded <= 1e-12 * total {
        return Ok(ScoreVector::from_config(&cfg, vec![0.0; d.len()]));
    }
    let scores = d
        .rows()
        .map(|row| {
            vectors[q..]
                .iter()
                .map(|axis| {
                    let proj: f64 = row
                        .iter()
                        .zip(&mean)
                        .zip(axis)
                        .map(|((x, m), e)| (x - m) * e)
                        .sum();
                    proj * proj
                })
                .sum::<f64>()
                / discarded
        })
        .collect();
    Ok(ScoreVector::from_config(&cfg, scores))
}
