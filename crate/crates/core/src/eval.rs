//! ROC/AUC and top-k thresholding metrics.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn class_counts(scores: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    if scores.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: scores.len(),
            found: labels.len(),
        });
    }
    let pos = labels.iter().filter(|&&l| l == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::DegenerateLabels);
    }
    Ok((pos, neg))
}

/// Groups of tied scores in ascending score order, as (positives, negatives).
fn tie_groups(scores: &[f64], labels: &[u8]) -> Vec<(usize, usize)> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut groups: Vec<(usize, usize)> = Vec::new();
    let mut prev: Option<f64> = None;
    for i in order {
        if prev != Some(scores[i]) {
            groups.push((0, 0));
            prev = Some(scores[i]);
        }
        let last = groups.last_mut().expect("group pushed above");
        if labels[i] == 1 {
            last.0 += 1;
        } else {
            last.1 += 1;
        }
    }
    groups
}

/// Area under the ROC curve as the Mann-Whitney statistic: the fraction of
/// (outlier, inlier) pairs in which the outlier scores higher, ties counting
/// one half. Labels are 1 for outliers.
pub fn roc_auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = class_counts(scores, labels)?;
    // twice the U statistic, kept integral
    let mut twice_u: u128 = 0;
    let mut negatives_below: u128 = 0;
    for (p, q) in tie_groups(scores, labels) {
        twice_u += 2 * p as u128 * negatives_below + (p * q) as u128;
        negatives_below += q as u128;
    }
    Ok((twice_u as f64 / 2.0) / (pos as f64 * neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC points from (0, 0) to (1, 1), one per distinct score threshold in
/// descending order.
pub fn roc_curve(scores: &[f64], labels: &[u8]) -> Result<Vec<RocPoint>> {
    let (pos, neg) = class_counts(scores, labels)?;
    let groups = tie_groups(scores, labels);
    let mut points = Vec::with_capacity(groups.len() + 1);
    points.push(RocPoint { fpr: 0.0, tpr: 0.0 });
    let (mut tp, mut fp) = (0usize, 0usize);
    for (p, q) in groups.into_iter().rev() {
        tp += p;
        fp += q;
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(points)
}

/// Trapezoidal area under a curve from [`roc_curve`].
pub fn trapezoid_area(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

/// Two-column `fpr,tpr` CSV.
pub fn roc_to_csv(points: &[RocPoint]) -> String {
    let mut out = String::from("fpr,tpr\n");
    for p in points {
        let _ = writeln!(out, "{},{}", p.fpr, p.tpr);
    }
    out
}

/// Marks the `n_outliers` highest scores as 1; ties at the cut go to the
/// lower object index.
pub fn top_k_threshold(scores: &[f64], n_outliers: usize) -> Result<Vec<u8>> {
    if n_outliers > scores.len() {
        return Err(Error::InvalidConfig(format!(
            "n_outliers {n_outliers} exceeds {} objects",
            scores.len()
        )));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let mut pred = vec![0; scores.len()];
    for &i in &order[..n_outliers] {
        pred[i] = 1;
    }
    Ok(pred)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    /// Standard F1, `2PR / (P + R)`.
    pub f1_harmonic: f64,
    /// Arithmetic mean `(P + R) / 2`.
    pub f1_paper: f64,
}

pub fn precision_recall_f1(pred: &[u8], truth: &[u8]) -> Result<Prf> {
    if pred.len() != truth.len() {
        return Err(Error::LengthMismatch {
            expected: truth.len(),
            found: pred.len(),
        });
    }
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (&p, &t) in pred.iter().zip(truth) {
        match (p, t) {
            (1, 1) => tp += 1,
            (1, _) => fp += 1,
            (_, 1) => fn_ += 1,
            _ => {}
        }
    }
    if tp + fn_ == 0 {
        return Err(Error::DegenerateLabels);
    }
    let precision = if tp + fp == 0 {
        0.0
    } else {
        tp as f64 / (tp + fp) as f64
    };
    let recall = tp as f64 / (tp + fn_) as f64;
    let f1_harmonic = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(Prf {
        precision,
        recall,
        f1_harmonic,
        f1_paper: (precision + recall) / 2.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub auc: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1_harmonic: f64,
    pub f1_paper: f64,
    /// Number of objects flagged by top-k thresholding.
    pub threshold_rank: usize,
}

/// AUC plus top-k metrics with `k` equal to the true number of outliers.
pub fn evaluate(scores: &[f64], labels: &[u8]) -> Result<EvalResult> {
    let auc = roc_auc(scores, labels)?;
    let n_outliers = labels.iter().filter(|&&l| l == 1).count();
    let pred = top_k_threshold(scores, n_outliers)?;
    let prf = precision_recall_f1(&pred, labels)?;
    Ok(EvalResult {
        auc,
        precision: prf.precision,
        recall: prf.recall,
        f1_harmonic: prf.f1_harmonic,
        f1_paper: prf.f1_paper,
        threshold_rank: n_outliers,
    })
}
