use super::{check_graph, ScoreVector};
use crate::data::Dataset;
use crate::error::Result;
use crate::neighbors::{in_degree, NeighborGraph};

/// Distance to the k-th nearest neighbor.
pub fn knn_score(d: &Dataset, g: &NeighborGraph) -> Result<ScoreVector> {
    check_graph(d, g)?;
    let scores = (0..g.len()).map(|i| g.kth_distance(i)).collect();
    Ok(ScoreVector::new("knn", scores))
}

/// Mean distance to the k nearest neighbors.
pub fn avg_knn_score(d: &Dataset, g: &NeighborGraph) -> Result<ScoreVector> {
    check_graph(d, g)?;
    let k = g.k() as f64;
    let scores = (0..g.len())
        .map(|i| g.distances(i).iter().sum::<f64>() / k)
        .collect();
    Ok(ScoreVector::new("avg_knn", scores))
}

/// ODIN: `1 / (1 + in-degree)`, so objects rarely chosen as neighbors score
/// high. Range is (0, 1].
pub fn odin_score(d: &Dataset, g: &NeighborGraph) -> Result<ScoreVector> {
    check_graph(d, g)?;
    let scores = in_degree(g)
        .into_iter()
        .map(|deg| 1.0 / (1.0 + deg as f64))
        .collect();
    Ok(ScoreVector::new("odin", scores))
}
