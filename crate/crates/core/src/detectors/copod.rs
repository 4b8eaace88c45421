use super::ScoreVector;
use crate::data::Dataset;
use crate::error::{Error, Result};

/// Copula-based outlier detection (COPOD).
///
/// Per dimension, empirical left and right tail probabilities are
/// `#{x_l <= x_i} / N` and `#{x_l >= x_i} / N`, so tied values share the
/// larger count. The skewness-corrected tail is the left tail for negatively
/// skewed dimensions and the right tail otherwise. The score is the largest
/// of the three sums of negative log tail probabilities.
pub fn copod_score(d: &Dataset) -> Result<ScoreVector> {
    let n = d.len();
    if n < 2 {
        return Err(Error::InvalidDataset("copod needs at least 2 objects".into()));
    }
    let mut left = vec![0.0; n];
    let mut right = vec![0.0; n];
    let mut skewed = vec![0.0; n];
    let nf = n as f64;
    for j in 0..d.dim() {
        let column: Vec<f64> = d.rows().map(|r| r[j]).collect();
        let mut sorted = column.clone();
        sorted.sort_by(f64::total_cmp);
        let use_left = skewness(&column) < 0.0;
        for (i, &x) in column.iter().enumerate() {
            let le = sorted.partition_point(|&v| v <= x);
            let ge = n - sorted.partition_point(|&v| v < x);
            let (l, r) = (-(le as f64 / nf).ln(), -(ge as f64 / nf).ln());
            left[i] += l;
            right[i] += r;
            skewed[i] += if use_left { l } else { r };
        }
    }
    let scores = (0..n)
        .map(|i| left[i].max(right[i]).max(skewed[i]))
        .collect();
    Ok(ScoreVector::new("copod", scores))
}

/// Population skewness `m3 / m2^1.5`; 0 for a constant column.
fn skewness(xs: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if m2 == 0.0 {
        return 0.0;
    }
    let m3 = xs.iter().map(|x| (x - mean).powi(3)).sum::<f64>() / n;
    m3 / m2.powf(1.5)
}
