//! Exact k-nearest-neighbour search.
//!
//! Neighbours are ordered by `(squared distance, index)`. The kd-tree only
//! prunes a subtree when its single-axis gap is strictly larger than the
//! current k-th squared distance, so its results are bit-identical to
//! [`brute_force`].

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::matrix::{squared_euclidean, Matrix};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub dist_sq: f64,
}

impl Neighbor {
    pub fn dist(&self) -> f64 {
        self.dist_sq.sqrt()
    }

    fn cmp_key(&self, other: &Neighbor) -> Ordering {
        self.dist_sq
            .total_cmp(&other.dist_sq)
            .then(self.index.cmp(&other.index))
    }
}

/// Reference implementation: scan every point.
pub fn brute_force(points: &Matrix, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
    let mut all: Vec<Neighbor> = (0..points.rows())
        .filter(|&i| Some(i) != exclude)
        .map(|i| Neighbor {
            index: i,
            dist_sq: squared_euclidean(query, points.row(i)),
        })
        .collect();
    all.sort_by(|a, b| a.cmp_key(b));
    all.truncate(k);
    all
}

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone, Serialize, Deserialize)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { axis: usize, value: f64, left: usize, right: usize },
}

/// Kd-tree over the rows of a matrix. Holds indices only; the caller passes
/// the same matrix at query time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KdTree {
    order: Vec<usize>,
    nodes: Vec<Node>,
    n_points: usize,
}

struct TopK {
    k: usize,
    items: Vec<Neighbor>,
}

impl TopK {
    fn worst(&self) -> f64 {
        if self.items.len() < self.k {
            f64::INFINITY
        } else {
            self.items[self.k - 1].dist_sq
        }
    }

    fn offer(&mut self, n: Neighbor) {
        if self.items.len() == self.k {
            if n.cmp_key(&self.items[self.k - 1]) != Ordering::Less {
                return;
            }
            self.items.pop();
        }
        let pos = self
            .items
            .binary_search_by(|probe| probe.cmp_key(&n))
            .unwrap_or_else(|p| p);
        self.items.insert(pos, n);
    }
}

impl KdTree {
    pub fn build(points: &Matrix) -> Self {
        let mut order: Vec<usize> = (0..points.rows()).collect();
        let mut nodes = Vec::new();
        if points.rows() > 0 {
            let n = order.len();
            Self::build_rec(points, &mut order, 0, n, &mut nodes);
        }
        KdTree {
            order,
            nodes,
            n_points: points.rows(),
        }
    }

    fn build_rec(points: &Matrix, order: &mut [usize], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
        let id = nodes.len();
        if end - start <= LEAF_SIZE {
            nodes.push(Node::Leaf { start, end });
            return id;
        }
        let slice = &mut order[start..end];
        let axis = (0..points.cols())
            .map(|j| {
                let (lo, hi) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = points.get(i, j);
                    (lo.min(v), hi.max(v))
                });
                (j, hi - lo)
            })
            .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
            .map(|(j, _)| j)
            .unwrap_or(0);
        let mid = slice.len() / 2;
        slice.select_nth_unstable_by(mid, |&a, &b| points.get(a, axis).total_cmp(&points.get(b, axis)).then(a.cmp(&b)));
        let value = points.get(slice[mid], axis);
        nodes.push(Node::Leaf { start: 0, end: 0 });
        let left = Self::build_rec(points, order, start, start + mid, nodes);
        let right = Self::build_rec(points, order, start + mid, end, nodes);
        nodes[id] = Node::Split { axis, value, left, right };
        id
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        self.n_points == 0
    }

    /// The `k` nearest rows of `points` to `query`, skipping `exclude`.
    pub fn query(&self, points: &Matrix, query: &[f64], k: usize, exclude: Option<usize>) -> Vec<Neighbor> {
        debug_assert_eq!(points.rows(), self.n_points);
        if k == 0 || self.nodes.is_empty() {
            return Vec::new();
        }
        let mut top = TopK {
            k,
            items: Vec::with_capacity(k + 1),
        };
        self.search(points, 0, query, exclude, &mut top);
        top.items
    }

    fn search(&self, points: &Matrix, node: usize, q: &[f64], exclude: Option<usize>, top: &mut TopK) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    top.offer(Neighbor {
                        index: i,
                        dist_sq: squared_euclidean(q, points.row(i)),
                    });
                }
            }
            Node::Split { axis, value, left, right } => {
                let diff = q[axis] - value;
                let (near, far) = if diff <= 0.0 { (left, right) } else { (right, left) };
                self.search(points, near, q, exclude, top);
                if diff * diff <= top.worst() {
                    self.search(points, far, q, exclude, top);
                }
            }
        }
    }
}
