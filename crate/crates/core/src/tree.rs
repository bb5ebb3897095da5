//! CART classification trees (Gini impurity, binary labels).
//!
//! Splits send `x[feature] <= threshold` left. Thresholds are midpoints
//! between consecutive distinct values. Shared by the random forest and the
//! global surrogate.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    All,
    Sqrt,
}

impl MaxFeatures {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            MaxFeatures::All => n_features,
            MaxFeatures::Sqrt => ((n_features as f64).sqrt() as usize).max(1),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::All,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n_samples: usize,
    },
    Leaf {
        /// Training samples per class `[benign, attack]`.
        counts: [usize; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<TreeNode>,
    pub n_features: usize,
}

impl TreeNode {
    pub fn leaf_class(counts: [usize; 2]) -> u8 {
        u8::from(counts[1] > counts[0])
    }
}

struct Builder<'a, R> {
    x: &'a Matrix,
    y: &'a [u8],
    params: TreeParams,
    n_try: usize,
    rng: &'a mut R,
    nodes: Vec<TreeNode>,
    features: Vec<usize>,
    scratch: Vec<(f64, u8)>,
}

fn class_counts(y: &[u8], idx: &[usize]) -> [usize; 2] {
    let mut c = [0usize; 2];
    for &i in idx {
        c[y[i] as usize] += 1;
    }
    c
}

impl<R: Rng> Builder<'_, R> {
    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        let counts = class_counts(self.y, idx);
        let n = idx.len();
        let pure = counts[0] == 0 || counts[1] == 0;
        let depth_ok = self.params.max_depth.is_none_or(|d| depth < d);
        if pure || !depth_ok || n < self.params.min_samples_split || n < 2 * self.params.min_samples_leaf {
            self.nodes.push(TreeNode::Leaf { counts });
            return id;
        }
        let Some((feature, threshold)) = self.best_split(idx, counts) else {
            self.nodes.push(TreeNode::Leaf { counts });
            return id;
        };
        let mut split = 0;
        for i in 0..n {
            if self.x.get(idx[i], feature) <= threshold {
                idx.swap(i, split);
                split += 1;
            }
        }
        self.nodes.push(TreeNode::Leaf { counts });
        let (l, r) = idx.split_at_mut(split);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
            n_samples: n,
        };
        id
    }

    fn best_split(&mut self, idx: &[usize], counts: [usize; 2]) -> Option<(usize, f64)> {
        let n = idx.len();
        let min_leaf = self.params.min_samples_leaf.max(1);
        let mut best: Option<(f64, usize, f64)> = None;
        self.features.shuffle(self.rng);
        let mut tried = 0;
        for fi in 0..self.features.len() {
            if tried >= self.n_try {
                break;
            }
            let f = self.features[fi];
            self.scratch.clear();
            self.scratch.extend(idx.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            self.scratch.sort_by(|a, b| a.0.total_cmp(&b.0));
            if self.scratch[0].0 == self.scratch[n - 1].0 {
                continue;
            }
            tried += 1;
            let mut left = [0usize; 2];
            for i in 0..n - 1 {
                left[self.scratch[i].1 as usize] += 1;
                let (v, next) = (self.scratch[i].0, self.scratch[i + 1].0);
                let nl = i + 1;
                if v == next || nl < min_leaf || n - nl < min_leaf {
                    continue;
                }
                let right = [counts[0] - left[0], counts[1] - left[1]];
                let nr = n - nl;
                let score = (left[0] * left[0] + left[1] * left[1]) as f64 / nl as f64
                    + (right[0] * right[0] + right[1] * right[1]) as f64 / nr as f64;
                if best.is_none_or(|b| score > b.0) {
                    let mut t = v + (next - v) / 2.0;
                    if t >= next {
                        t = v;
                    }
                    best = Some((score, f, t));
                }
            }
        }
        // Zero-gain splits are accepted, so impure nodes keep splitting
        // while any feature varies.
        best.map(|(_, f, t)| (f, t))
    }
}

impl DecisionTree {
    /// Fit on the rows listed in `sample` (repeats allowed, as in a
    /// bootstrap).
    pub fn fit(x: &Matrix, y: &[u8], sample: &[usize], params: TreeParams, rng: &mut impl Rng) -> Result<Self> {
        if x.rows() != y.len() {
            return Err(Error::Dimension {
                expected: x.rows(),
                got: y.len(),
            });
        }
        if sample.is_empty() {
            return Err(Error::Empty("no samples to grow a tree".into()));
        }
        let mut idx = sample.to_vec();
        let mut b = Builder {
            x,
            y,
            params,
            n_try: params.max_features.resolve(x.cols()),
            rng,
            nodes: Vec::new(),
            features: (0..x.cols()).collect(),
            scratch: Vec::with_capacity(sample.len()),
        };
        b.grow(&mut idx, 0);
        Ok(DecisionTree {
            nodes: b.nodes,
            n_features: x.cols(),
        })
    }

    pub fn fit_all(x: &Matrix, y: &[u8], params: TreeParams, rng: &mut impl Rng) -> Result<Self> {
        let all: Vec<usize> = (0..x.rows()).collect();
        Self::fit(x, y, &all, params, rng)
    }

    /// Node index of the leaf `point` falls into.
    pub fn leaf_index(&self, point: &[f64]) -> usize {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if point[*feature] <= *threshold { *left } else { *right },
                TreeNode::Leaf { .. } => return node,
            }
        }
    }

    pub fn leaf_counts(&self, point: &[f64]) -> [usize; 2] {
        match &self.nodes[self.leaf_index(point)] {
            TreeNode::Leaf { counts } => *counts,
            TreeNode::Split { .. } => unreachable!("leaf_index stops at leaves"),
        }
    }

    /// Majority class of the leaf; equal counts give benign.
    pub fn predict(&self, point: &[f64]) -> u8 {
        TreeNode::leaf_class(self.leaf_counts(point))
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], i: usize) -> usize {
            match &nodes[i] {
                TreeNode::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
                TreeNode::Leaf { .. } => 0,
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn n_leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, TreeNode::Leaf { .. })).count()
    }

    /// Leaf sizes, for checking `min_samples_leaf`.
    pub fn leaf_sizes(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                TreeNode::Leaf { counts } => Some(counts[0] + counts[1]),
                _ => None,
            })
            .collect()
    }
}
