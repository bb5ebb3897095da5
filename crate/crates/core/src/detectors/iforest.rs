//! Isolation forest.
//!
//! Each tree is grown on a subsample drawn without replacement. A node picks
//! a feature uniformly among those not constant in the node and a split value
//! uniformly in `(min, max)` of that feature; points `< value` go left.
//! Growth stops at a single point, an all-duplicate node, or depth
//! `ceil(log2(subsample_size))`.
//!
//! `score(x) = 2^(-E[h(x)] / c(psi))`, where `h` is the leaf depth plus
//! `c(leaf_size)`.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Harmonic number `H(n)`. Summed exactly for small `n`, asymptotic
/// expansion beyond that (absolute error below 1e-15 for n > 256).
pub fn harmonic(n: u64) -> f64 {
    if n <= 256 {
        (1..=n).rev().map(|i| 1.0 / i as f64).sum()
    } else {
        let x = n as f64;
        x.ln() + EULER_GAMMA + 1.0 / (2.0 * x) - 1.0 / (12.0 * x * x) + 1.0 / (120.0 * x.powi(4))
    }
}

/// Average path length of an unsuccessful BST search among `n` points.
pub fn average_path_length(n: u64) -> f64 {
    match n {
        0 | 1 => 0.0,
        2 => 1.0,
        _ => 2.0 * harmonic(n - 1) - 2.0 * (n - 1) as f64 / n as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "lowercase")]
pub enum MaxSamples {
    /// `min(256, n)`.
    Auto,
    Fraction(f64),
    Count(usize),
}

impl MaxSamples {
    pub fn resolve(self, n: usize) -> Result<usize> {
        let size = match self {
            MaxSamples::Auto => n.min(256),
            MaxSamples::Fraction(f) => {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(Error::invalid(format!("max_samples fraction {f} not in (0, 1]")));
                }
                ((f * n as f64) as usize).max(1)
            }
            MaxSamples::Count(c) => c.min(n),
        };
        if size < 2 {
            return Err(Error::invalid(format!("isolation forest subsample size {size} < 2")));
        }
        Ok(size)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ITreeNode {
    Split {
        feature: usize,
        value: f64,
        left: u32,
        right: u32,
    },
    Leaf {
        size: u32,
        depth: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ITree {
    pub nodes: Vec<ITreeNode>,
}

impl ITree {
    fn grow(data: &Matrix, idx: &mut [usize], max_depth: u32, rng: &mut impl Rng) -> ITree {
        let mut tree = ITree { nodes: Vec::new() };
        tree.grow_node(data, idx, 0, max_depth, rng);
        tree
    }

    fn grow_node(&mut self, data: &Matrix, idx: &mut [usize], depth: u32, max_depth: u32, rng: &mut impl Rng) -> u32 {
        let id = self.nodes.len() as u32;
        let leaf = ITreeNode::Leaf {
            size: idx.len() as u32,
            depth,
        };
        if idx.len() <= 1 || depth >= max_depth {
            self.nodes.push(leaf);
            return id;
        }
        let ranges: Vec<(usize, f64, f64)> = (0..data.cols())
            .filter_map(|j| {
                let (lo, hi) = idx.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| {
                    let v = data.get(i, j);
                    (lo.min(v), hi.max(v))
                });
                (hi > lo).then_some((j, lo, hi))
            })
            .collect();
        if ranges.is_empty() {
            self.nodes.push(leaf);
            return id;
        }
        let (feature, lo, hi) = ranges[rng.gen_range(0..ranges.len())];
        let mut value = rng.gen_range(lo..hi);
        if value <= lo {
            // Keep both children non-empty.
            value = lo + (hi - lo) * 0.5;
        }
        let mut split = 0;
        for i in 0..idx.len() {
            if data.get(idx[i], feature) < value {
                idx.swap(i, split);
                split += 1;
            }
        }
        self.nodes.push(leaf);
        let (l, r) = idx.split_at_mut(split);
        let left = self.grow_node(data, l, depth + 1, max_depth, rng);
        let right = self.grow_node(data, r, depth + 1, max_depth, rng);
        self.nodes[id as usize] = ITreeNode::Split {
            feature,
            value,
            left,
            right,
        };
        id
    }

    pub fn path_length(&self, point: &[f64]) -> f64 {
        let mut node = 0usize;
        loop {
            match self.nodes[node] {
                ITreeNode::Split {
                    feature,
                    value,
                    left,
                    right,
                } => node = if point[feature] < value { left } else { right } as usize,
                ITreeNode::Leaf { size, depth } => return depth as f64 + average_path_length(size as u64),
            }
        }
    }

    pub fn depth(&self) -> u32 {
        self.nodes
            .iter()
            .filter_map(|n| match n {
                ITreeNode::Leaf { depth, .. } => Some(*depth),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IForestModel {
    pub trees: Vec<ITree>,
    pub subsample_size: usize,
    pub n_trees: usize,
    pub dim: usize,
    pub seed: u64,
}

pub fn fit_iforest(train: &Matrix, n_trees: usize, max_samples: MaxSamples, seed_value: u64) -> Result<IForestModel> {
    if train.is_empty() {
        return Err(Error::Empty("isolation forest training set is empty".into()));
    }
    if n_trees == 0 {
        return Err(Error::invalid("isolation forest needs at least one tree"));
    }
    let psi = max_samples.resolve(train.rows())?;
    let max_depth = (psi as f64).log2().ceil() as u32;
    let mut rng = seed::rng(seed_value);
    let trees = (0..n_trees)
        .map(|_| {
            let mut idx = sample(&mut rng, train.rows(), psi).into_vec();
            ITree::grow(train, &mut idx, max_depth, &mut rng)
        })
        .collect();
    Ok(IForestModel {
        trees,
        subsample_size: psi,
        n_trees,
        dim: train.cols(),
        seed: seed_value,
    })
}

impl IForestModel {
    pub fn mean_path_length(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: point.len(),
            });
        }
        Ok(self.trees.iter().map(|t| t.path_length(point)).sum::<f64>() / self.trees.len() as f64)
    }

    /// Anomaly score in (0, 1); higher is more anomalous.
    pub fn score(&self, point: &[f64]) -> Result<f64> {
        let h = self.mean_path_length(point)?;
        Ok(score_from_path_length(h, self.subsample_size))
    }

    pub fn max_depth_limit(&self) -> u32 {
        (self.subsample_size as f64).log2().ceil() as u32
    }
}

pub fn score_from_path_length(mean_path: f64, subsample_size: usize) -> f64 {
    2f64.powf(-mean_path / average_path_length(subsample_size as u64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn normaliser_small_values() {
        assert_eq!(average_path_length(1), 0.0);
        assert_eq!(average_path_length(2), 1.0);
        // c(3) = 2 * (1 + 1/2) - 2 * 2/3
        assert!((average_path_length(3) - (3.0 - 4.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_scores_half() {
        let c = average_path_length(256);
        assert_eq!(score_from_path_length(c, 256), 0.5);
    }

    #[test]
    fn outlier_outscores_inlier() {
        let mut rng = crate::seed::rng(11);
        let rows: Vec<[f64; 2]> = (0..300).map(|_| [rng.gen::<f64>(), rng.gen::<f64>()]).collect();
        let m = Matrix::from_rows(&rows).unwrap();
        for s in 0..20 {
            let f = fit_iforest(&m, 50, MaxSamples::Auto, s).unwrap();
            assert!(f.score(&[8.0, 8.0]).unwrap() > f.score(&[0.5, 0.5]).unwrap());
            assert!(f.trees.iter().all(|t| t.depth() <= f.max_depth_limit()));
        }
    }

    #[test]
    fn determinism() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [2.0, 1.0], [3.0, 3.0], [0.0, 5.0]]).unwrap();
        let a = fit_iforest(&m, 10, MaxSamples::Fraction(1.0), 9).unwrap();
        let b = fit_iforest(&m, 10, MaxSamples::Fraction(1.0), 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parameter_errors() {
        let m = Matrix::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        assert!(fit_iforest(&m, 0, MaxSamples::Auto, 0).is_err());
        assert!(fit_iforest(&m, 1, MaxSamples::Fraction(0.25), 0).is_err());
        assert!(fit_iforest(&m, 1, MaxSamples::Count(1), 0).is_err());
        assert!(fit_iforest(&Matrix::with_cols(1), 1, MaxSamples::Auto, 0).is_err());
        let f = fit_iforest(&m, 1, MaxSamples::Auto, 0).unwrap();
        assert!(f.score(&[1.0, 2.0]).is_err());
    }

    #[test]
    fn all_duplicates_is_root_leaf() {
        let m = Matrix::from_rows(&[[1.0, 1.0]; 8]).unwrap();
        let f = fit_iforest(&m, 3, MaxSamples::Auto, 1).unwrap();
        let s = f.score(&[1.0, 1.0]).unwrap();
        assert_eq!(s, 0.5);
    }
}
