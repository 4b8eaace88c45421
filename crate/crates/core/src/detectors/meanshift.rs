use super::ScoreVector;
use crate::data::Dataset;
use crate::error::Result;
use crate::neighbors::{check_k, knn_indexed_with, NeighborGraph};
use crate::par::Exec;

/// Mean-shift outlier detection (MOD).
///
/// Each round replaces every object by the mean of its `k` nearest neighbors
/// (self excluded), recomputing the graph on the shifted positions. The score
/// is how far an object moved from its original position after
/// `mod_iterations` rounds.
pub fn mod_score(d: &Dataset, k: usize, mod_iterations: usize) -> Result<ScoreVector> {
    mod_score_with(d, k, mod_iterations, Exec::default())
}

pub fn mod_score_with(
    d: &Dataset,
    k: usize,
    mod_iterations: usize,
    exec: Exec,
) -> Result<ScoreVector> {
    let (scores, _) = run(d, k, mod_iterations, exec)?;
    Ok(ScoreVector::new("mod", scores))
}

/// Returns the scores and the graph of the first round, which is built on the
/// original data.
pub(super) fn run(
    d: &Dataset,
    k: usize,
    mod_iterations: usize,
    exec: Exec,
) -> Result<(Vec<f64>, Option<NeighborGraph>)> {
    check_k(d.len(), k)?;
    let dim = d.dim();
    let mut current = d.clone();
    let mut first_graph = None;
    for _ in 0..mod_iterations {
        let g = knn_indexed_with(&current, k, exec)?;
        let shifted: Vec<Vec<f64>> = exec.map(d.len(), |i| {
            let mut mean = vec![0.0; dim];
            for &j in g.neighbors(i) {
                for (m, v) in mean.iter_mut().zip(current.row(j)) {
                    *m += v;
                }
            }
            mean.iter_mut().for_each(|m| *m /= k as f64);
            mean
        });
        current = current.with_values(shifted.concat())?;
        if first_graph.is_none() {
            first_graph = Some(g);
        }
    }
    let scores = (0..d.len())
        .map(|i| {
            d.row(i)
                .iter()
                .zip(current.row(i))
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    Ok((scores, first_graph))
}
