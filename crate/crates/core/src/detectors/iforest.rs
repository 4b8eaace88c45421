use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DetectorConfig, DetectorKind, ScoreVector};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::par::Exec;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

fn harmonic(i: usize) -> f64 {
    if i < 64 {
        (1..=i).map(|t| 1.0 / t as f64).sum()
    } else {
        let x = i as f64;
        x.ln() + EULER_GAMMA + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x)
    }
}

/// Average path length of an unsuccessful BST search among `m` points,
/// `2H(m-1) - 2(m-1)/m`, with `c(0) = c(1) = 0`.
pub(crate) fn average_path_length(m: usize) -> f64 {
    if m <= 1 {
        return 0.0;
    }
    let m1 = (m - 1) as f64;
    2.0 * harmonic(m - 1) - 2.0 * m1 / m as f64
}

#[derive(Debug)]
enum Node {
    Leaf {
        size: usize,
    },
    Split {
        feature: usize,
        cut: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

fn build(d: &Dataset, idx: &mut [usize], depth: usize, limit: usize, rng: &mut ChaCha8Rng) -> Node {
    if depth >= limit || idx.len() <= 1 {
        return Node::Leaf { size: idx.len() };
    }
    let ranges: Vec<(usize, f64, f64)> = (0..d.dim())
        .filter_map(|j| {
            let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                (lo.min(d.row(i)[j]), hi.max(d.row(i)[j]))
            });
            (hi > lo).then_some((j, lo, hi))
        })
        .collect();
    if ranges.is_empty() {
        return Node::Leaf { size: idx.len() };
    }
    let (feature, lo, hi) = ranges[rng.random_range(0..ranges.len())];
    let mut cut = rng.random_range(lo..hi);
    while cut <= lo {
        cut = rng.random_range(lo..hi);
    }

    let mut mid = 0;
    for t in 0..idx.len() {
        if d.row(idx[t])[feature] < cut {
            idx.swap(t, mid);
            mid += 1;
        }
    }
    let (left, right) = idx.split_at_mut(mid);
    Node::Split {
        feature,
        cut,
        left: Box::new(build(d, left, depth + 1, limit, rng)),
        right: Box::new(build(d, right, depth + 1, limit, rng)),
    }
}

fn path_length(node: &Node, x: &[f64]) -> f64 {
    let mut node = node;
    let mut depth = 0.0;
    loop {
        match node {
            Node::Leaf { size } => return depth + average_path_length(*size),
            Node::Split {
                feature,
                cut,
                left,
                right,
            } => {
                node = if x[*feature] < *cut { left } else { right };
                depth += 1.0;
            }
        }
    }
}

/// Isolation forest anomaly score `2^(-E[h(x)] / c(ψ))`, in (0, 1).
///
/// Each tree is grown on its own subsample of `min(subsample, N)` rows with a
/// height limit of `ceil(log2 ψ)`. Splits draw a feature uniformly among the
/// features that are not constant in the node, and a cut uniformly inside
/// that feature's range. Tree `t` draws from the ChaCha stream `t` of the
/// seed, so results do not depend on the execution strategy.
pub fn iforest_score(d: &Dataset, cfg: &DetectorConfig) -> Result<ScoreVector> {
    iforest_score_with(d, cfg, Exec::default())
}

pub fn iforest_score_with(d: &Dataset, cfg: &DetectorConfig, exec: Exec) -> Result<ScoreVector> {
    if cfg.n_trees == 0 || cfg.subsample < 2 {
        return Err(Error::InvalidConfig(
            "iforest needs n_trees >= 1 and subsample >= 2".into(),
        ));
    }
    if d.len() < 2 {
        return Err(Error::InvalidDataset("iforest needs at least 2 objects".into()));
    }
    let psi = cfg.subsample.min(d.len());
    let limit = (psi as f64).log2().ceil() as usize;
    let trees = exec.map(cfg.n_trees, |t| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(t as u64);
        let mut idx = sample(&mut rng, d.len(), psi).into_vec();
        build(d, &mut idx, 0, limit, &mut rng)
    });
    let norm = average_path_length(psi);
    let scores = exec.map(d.len(), |i| {
        let x = d.row(i);
        let mean = trees.iter().map(|t| path_length(t, x)).sum::<f64>() / trees.len() as f64;
        (-mean / norm).exp2()
    });
    let mut cfg = cfg.clone();
    cfg.detector = DetectorKind::Iforest;
    Ok(ScoreVector::from_config(&cfg, scores))
}
