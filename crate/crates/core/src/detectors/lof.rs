use super::{check_graph, ScoreVector};
use crate::data::Dataset;
use crate::error::Result;
use crate::neighbors::NeighborGraph;
use crate::par::Exec;

/// Local reachability density assigned when every reachability distance in a
/// neighborhood is zero (a pile of duplicates), in place of infinity.
pub const LRD_CAP: f64 = 1e12;

/// Local outlier factor over the given graph.
///
/// `reach(i <- j) = max(kdist(j), dist(i, j))`,
/// `lrd(i) = k / sum_j reach(i <- j)`, and the score is the mean of
/// `lrd(j) / lrd(i)` over the neighbors of `i`.
pub fn lof_score(d: &Dataset, g: &NeighborGraph) -> Result<ScoreVector> {
    lof_score_with(d, g, Exec::default())
}

pub fn lof_score_with(d: &Dataset, g: &NeighborGraph, exec: Exec) -> Result<ScoreVector> {
    check_graph(d, g)?;
    let k = g.k() as f64;
    let lrd = exec.map(g.len(), |i| {
        let reach: f64 = g
            .neighbors(i)
            .iter()
            .zip(g.distances(i))
            .map(|(&j, &dist)| g.kth_distance(j).max(dist))
            .sum();
        if reach > 0.0 {
            k / reach
        } else {
            LRD_CAP
        }
    });
    let scores = exec.map(g.len(), |i| {
        let sum: f64 = g.neighbors(i).iter().map(|&j| lrd[j]).sum();
        sum / lrd[i] / k
    });
    Ok(ScoreVector::new("lof", scores))
}
