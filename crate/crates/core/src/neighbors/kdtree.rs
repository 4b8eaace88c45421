use super::{median_split, sq_dist, Candidate, KBest};
use crate::data::Dataset;

const LEAF_SIZE: usize = 16;

#[derive(Debug)]
enum Node {
    Leaf {
        start: usize,
        end: usize,
    },
    Split {
        axis: usize,
        value: f64,
        left: usize,
        right: usize,
    },
}

/// Median-split KD-tree over the rows of a dataset.
#[derive(Debug)]
pub struct KdTree<'a> {
    data: &'a Dataset,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
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
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= LEAF_SIZE {
            return id;
        }
        // left holds coordinates <= value, right holds coordinates >= value
        let Some((axis, value, mid)) = median_split(self.data, &mut self.order[start..end]) else {
            return id;
        };
        let left = self.build_node(start, start + mid);
        let right = self.build_node(start + mid, end);
        self.nodes[id] = Node::Split {
            axis,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest neighbors of dataset row `i`, excluding `i`, sorted.
    pub(crate) fn query_point(&self, i: usize, k: usize) -> Vec<Candidate> {
        let mut best = KBest::new(k);
        self.search(0, self.data.row(i), i, &mut best);
        best.into_sorted()
    }

    fn search(&self, node: usize, q: &[f64], skip: usize, best: &mut KBest) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &j in &self.order[start..end] {
                    if j != skip {
                        best.offer(Candidate {
                            sq: sq_dist(q, self.data.row(j)),
                            index: j,
                        });
                    }
                }
            }
            Node::Split {
                axis,
                value,
                left,
                right,
            } => {
                let diff = q[axis] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, skip, best);
                // Every point across the plane has a single-axis term of at
                // least diff², and a full squared distance at least that large.
                // Equality must still be searched for index tie-breaks.
                if diff * diff <= best.worst_sq() {
                    self.search(far, q, skip, best);
                }
            }
        }
    }
}
