use super::{check_graph, ScoreVector};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::neighbors::NeighborGraph;
use crate::par::Exec;

/// Fast angle-based outlier detection over the k-NN graph.
///
/// For every unordered pair of neighbors `(a, b)` of `i`, with `u = a - i`
/// and `v = b - i` both non-zero, the weighted cosine `<u, v> / (|u|² |v|²)`
/// is collected. The score is the negated population variance of those
/// values, or 0 when fewer than two pairs are usable.
pub fn abod_score(d: &Dataset, g: &NeighborGraph) -> Result<ScoreVector> {
    abod_score_with(d, g, Exec::default())
}

pub fn abod_score_with(d: &Dataset, g: &NeighborGraph, exec: Exec) -> Result<ScoreVector> {
    check_graph(d, g)?;
    if g.k() < 2 {
        return Err(Error::InvalidConfig("abod needs k >= 2".into()));
    }
    let scores = exec.map(g.len(), |i| -angle_variance(d, i, g.neighbors(i)));
    Ok(ScoreVector::new("abod", scores))
}

fn angle_variance(d: &Dataset, i: usize, neighbors: &[usize]) -> f64 {
    let origin = d.row(i);
    let diffs: Vec<(Vec<f64>, f64)> = neighbors
        .iter()
        .map(|&j| {
            let u: Vec<f64> = d.row(j).iter().zip(origin).map(|(a, o)| a - o).collect();
            let norm_sq = u.iter().map(|x| x * x).sum();
            (u, norm_sq)
        })
        .filter(|(_, norm_sq)| *norm_sq > 0.0)
        .collect();

    let mut values = Vec::with_capacity(diffs.len() * diffs.len().saturating_sub(1) / 2);
    for (a, (u, nu)) in diffs.iter().enumerate() {
        for (v, nv) in &diffs[a + 1..] {
            let dot: f64 = u.iter().zip(v).map(|(x, y)| x * y).sum();
            values.push(dot / (nu * nv));
        }
    }
    if values.len() < 2 {
        return 0.0;
    }
    let count = values.len() as f64;
    let mean = values.iter().sum::<f64>() / count;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / count
}
