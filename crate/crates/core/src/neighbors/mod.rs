//! Exact Euclidean k-nearest-neighbor graphs.
//!
//! Every search path orders candidates by the pair (squared distance, index),
//! so ties are broken by ascending object index and all paths return
//! bit-identical graphs. The object itself is never its own neighbor.

mod balltree;
mod kdtree;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::par::Exec;

pub use balltree::BallTree;
pub use kdtree::KdTree;

/// Dimension at which [`knn_indexed`] switches from the KD-tree to the Ball-tree.
pub const BALL_TREE_MIN_DIM: usize = 20;

/// Squared Euclidean distance, summed left to right.
///
/// All search paths go through this function so that their distances agree
/// to the last bit.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Per-object ordered lists of the `k` nearest neighbors and their distances.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    k: usize,
    n: usize,
    neighbors: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborGraph {
    /// Builds a graph from explicit per-object lists, validating the graph
    /// invariants (row length `k`, no self loops, indices in range,
    /// non-decreasing distances).
    pub fn from_lists(neighbors: Vec<Vec<usize>>, distances: Vec<Vec<f64>>) -> Result<Self> {
        let n = neighbors.len();
        if distances.len() != n {
            return Err(Error::LengthMismatch {
                expected: n,
                found: distances.len(),
            });
        }
        let k = neighbors.first().map_or(0, Vec::len);
        if k == 0 || k >= n {
            return Err(Error::KOutOfRange { k, n });
        }
        for (i, (row, dist)) in neighbors.iter().zip(&distances).enumerate() {
            if row.len() != k || dist.len() != k {
                return Err(Error::InvalidDataset(format!(
                    "neighbor row {i} does not have {k} entries"
                )));
            }
            if row.iter().any(|&j| j == i || j >= n) {
                return Err(Error::InvalidDataset(format!(
                    "neighbor row {i} contains itself or an out-of-range index"
                )));
            }
            if dist.windows(2).any(|w| w[0] > w[1]) || dist.iter().any(|d| d.is_nan() || *d < 0.0) {
                return Err(Error::InvalidDataset(format!(
                    "distance row {i} is not non-decreasing and non-negative"
                )));
            }
        }
        Ok(Self {
            k,
            n,
            neighbors: neighbors.into_iter().flatten().collect(),
            distances: distances.into_iter().flatten().collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of objects.
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i * self.k..(i + 1) * self.k]
    }

    #[inline]
    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }

    /// Distance from `i` to its k-th nearest neighbor.
    #[inline]
    pub fn kth_distance(&self, i: usize) -> f64 {
        self.distances[(i + 1) * self.k - 1]
    }

    /// The graph restricted to the first `k` neighbors of every object.
    ///
    /// Because of the fixed tie rule this equals the graph built directly
    /// with `k`.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.k {
            return Err(Error::KOutOfRange { k, n: self.n });
        }
        if k == self.k {
            return Ok(self.clone());
        }
        let mut neighbors = Vec::with_capacity(self.n * k);
        let mut distances = Vec::with_capacity(self.n * k);
        for i in 0..self.n {
            neighbors.extend_from_slice(&self.neighbors(i)[..k]);
            distances.extend_from_slice(&self.distances(i)[..k]);
        }
        Ok(Self {
            k,
            n: self.n,
            neighbors,
            distances,
        })
    }

    /// Debug dump, one `i,rank,neighbor,distance` line per edge.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("i,rank,neighbor,distance\n");
        for i in 0..self.n {
            for (rank, (j, d)) in self.neighbors(i).iter().zip(self.distances(i)).enumerate() {
                let _ = writeln!(out, "{i},{rank},{j},{d:.17e}");
            }
        }
        out
    }

    fn from_candidates(k: usize, rows: Vec<Vec<Candidate>>) -> Self {
        let n = rows.len();
        let mut neighbors = Vec::with_capacity(n * k);
        let mut distances = Vec::with_capacity(n * k);
        for row in rows {
            debug_assert_eq!(row.len(), k);
            for c in row {
                neighbors.push(c.index);
                distances.push(c.sq.sqrt());
            }
        }
        Self {
            k,
            n,
            neighbors,
            distances,
        }
    }
}

/// Number of objects listing each object among their neighbors (ODIN's
/// in-degree). Sums to `N·k`.
pub fn in_degree(g: &NeighborGraph) -> Vec<usize> {
    let mut deg = vec![0; g.len()];
    for &j in &g.neighbors {
        deg[j] += 1;
    }
    deg
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || k >= n {
        Err(Error::KOutOfRange { k, n })
    } else {
        Ok(())
    }
}

/// A neighbor candidate, ordered by (squared distance, index).
#[derive(Debug, Clone, Copy)]
pub(crate) struct Candidate {
    pub sq: f64,
    pub index: usize,
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sq
            .total_cmp(&other.sq)
            .then(self.index.cmp(&other.index))
    }
}

/// Bounded max-heap keeping the `k` smallest candidates seen so far.
pub(crate) struct KBest {
    k: usize,
    heap: BinaryHeap<Candidate>,
}

impl KBest {
    pub fn new(k: usize) -> Self {
        Self {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    #[inline]
    pub fn offer(&mut self, c: Candidate) {
        if self.heap.len() < self.k {
            self.heap.push(c);
        } else if c < *self.heap.peek().expect("non-empty heap") {
            self.heap.pop();
            self.heap.push(c);
        }
    }

    pub fn is_full(&self) -> bool {
        self.heap.len() == self.k
    }

    /// Squared distance of the current k-th best, or infinity while not full.
    #[inline]
    pub fn worst_sq(&self) -> f64 {
        if self.is_full() {
            self.heap.peek().map_or(f64::INFINITY, |c| c.sq)
        } else {
            f64::INFINITY
        }
    }

    pub fn into_sorted(self) -> Vec<Candidate> {
        self.heap.into_sorted_vec()
    }
}

/// Exact k-NN by scanning all pairs.
pub fn knn_brute(d: &Dataset, k: usize) -> Result<NeighborGraph> {
    knn_brute_with(d, k, Exec::default())
}

pub fn knn_brute_with(d: &Dataset, k: usize, exec: Exec) -> Result<NeighborGraph> {
    check_k(d.len(), k)?;
    let n = d.len();
    let rows = exec.map(n, |i| {
        let q = d.row(i);
        let mut all: Vec<Candidate> = (0..n)
            .filter(|&j| j != i)
            .map(|j| Candidate {
                sq: sq_dist(q, d.row(j)),
                index: j,
            })
            .collect();
        all.select_nth_unstable(k - 1);
        all.truncate(k);
        all.sort_unstable();
        all
    });
    Ok(NeighborGraph::from_candidates(k, rows))
}

/// Exact k-NN through a spatial index: KD-tree below
/// [`BALL_TREE_MIN_DIM`] dimensions, Ball-tree from there on.
///
/// Output is identical to [`knn_brute`].
pub fn knn_indexed(d: &Dataset, k: usize) -> Result<NeighborGraph> {
    knn_indexed_with(d, k, Exec::default())
}

pub fn knn_indexed_with(d: &Dataset, k: usize, exec: Exec) -> Result<NeighborGraph> {
    check_k(d.len(), k)?;
    let rows = if d.dim() < BALL_TREE_MIN_DIM {
        let tree = KdTree::build(d);
        exec.map(d.len(), |i| tree.query_point(i, k))
    } else {
        let tree = BallTree::build(d);
        exec.map(d.len(), |i| tree.query_point(i, k))
    };
    Ok(NeighborGraph::from_candidates(k, rows))
}

/// Splits `idx` around its median along the dimension of widest spread.
/// Returns `None` when every point in `idx` coincides.
pub(crate) fn median_split(d: &Dataset, idx: &mut [usize]) -> Option<(usize, f64, usize)> {
    let dim = d.dim();
    let mut best = (0, 0.0);
    for j in 0..dim {
        let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
            let v = d.row(i)[j];
            (lo.min(v), hi.max(v))
        });
        if hi - lo > best.1 {
            best = (j, hi - lo);
        }
    }
    if best.1 <= 0.0 {
        return None;
    }
    let axis = best.0;
    let mid = idx.len() / 2;
    idx.select_nth_unstable_by(mid, |&a, &b| d.row(a)[axis].total_cmp(&d.row(b)[axis]));
    Some((axis, d.row(idx[mid])[axis], mid))
}
