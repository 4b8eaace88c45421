use super::{median_split, sq_dist, Candidate, KBest};
use crate::data::Dataset;

const LEAF_SIZE: usize = 16;

/// Relative slack on the triangle-inequality bound, covering rounding in
/// the center and radius computations so that no tied candidate is pruned.
const PRUNE_SLACK: f64 = 1e-9;

#[derive(Debug)]
struct Node {
    center: Vec<f64>,
    radius: f64,
    start: usize,
    end: usize,
    children: Option<(usize, usize)>,
}

/// Ball-tree with centroid centers, split at the median of the widest axis.
#[derive(Debug)]
pub struct BallTree<'a> {
    data: &'a Dataset,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> BallTree<'a> {
    pub fn build(data: &'a Dataset) -> Self {
        let mut tree = Self {
            data,
            order: (0..data.len()).collect(),
            nodes: Vec::new(),
        };
        tree.build_node(0, data.len());
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let dim = self.data.dim();
        let members = &self.order[start..end];
        let mut center = vec![0.0; dim];
        for &i in members {
            for (c, v) in center.iter_mut().zip(self.data.row(i)) {
                *c += v;
            }
        }
        let count = members.len() as f64;
        center.iter_mut().for_each(|c| *c /= count);
        let radius = members
            .iter()
            .map(|&i| sq_dist(&center, self.data.row(i)).sqrt())
            .fold(0.0, f64::max);

        let id = self.nodes.len();
        self.nodes.push(Node {
            center,
            radius,
            start,
            end,
            children: None,
        });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let Some((_, _, mid)) = median_split(self.data, &mut self.order[start..end]) else {
            return id;
        };
        let left = self.build_node(start, start + mid);
        let right = self.build_node(start + mid, end);
        self.nodes[id].children = Some((left, right));
        id
    }

    pub(crate) fn query_point(&self, i: usize, k: usize) -> Vec<Candidate> {
        let mut best = KBest::new(k);
        let q = self.data.row(i);
        let root_dist = sq_dist(q, &self.nodes[0].center).sqrt();
        self.search(0, root_dist, q, i, &mut best);
        best.into_sorted()
    }

    fn may_contain_better(&self, node: usize, center_dist: f64, best: &KBest) -> bool {
        let worst = best.worst_sq();
        if worst.is_infinite() {
            return true;
        }
        let worst = worst.sqrt();
        let radius = self.nodes[node].radius;
        let lower = center_dist - radius;
        lower <= worst + PRUNE_SLACK * (worst + center_dist + radius)
    }

    fn search(&self, node: usize, center_dist: f64, q: &[f64], skip: usize, best: &mut KBest) {
        if !self.may_contain_better(node, center_dist, best) {
            return;
        }
        let n = &self.nodes[node];
        match n.children {
            None => {
                for &j in &self.order[n.start..n.end] {
                    if j != skip {
                        best.offer(Candidate {
                            sq: sq_dist(q, self.data.row(j)),
                            index: j,
                        });
                    }
                }
            }
            Some((left, right)) => {
                let dl = sq_dist(q, &self.nodes[left].center).sqrt();
                let dr = sq_dist(q, &self.nodes[right].center).sqrt();
                if dl <= dr {
                    self.search(left, dl, q, skip, best);
                    self.search(right, dr, q, skip, best);
                } else {
                    self.search(right, dr, q, skip, best);
                    self.search(left, dl, q, skip, best);
                }
            }
        }
    }
}
