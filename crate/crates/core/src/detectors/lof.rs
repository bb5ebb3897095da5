//! Local Outlier Factor in novelty mode.
//!
//! The reference set is fixed at fit time. For a query `p` with k nearest
//! references `N(p)`:
//!
//! ```text
//! reach(p, o) = max(kdist(o), d(p, o))
//! lrd(p)      = 1 / max(mean_{o in N(p)} reach(p, o), 1e-12)
//! LOF(p)      = mean_{o in N(p)} lrd(o) / lrd(p)
//! ```
//!
//! For reference points the neighbourhood excludes the point itself (by
//! index; duplicates at distance zero still count).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::knn::{KdTree, Neighbor};
use crate::matrix::Matrix;

pub const LRD_FLOOR: f64 = 1e-12;

/// Serialised form keeps the reference set and `k` only; neighbourhood
/// statistics are recomputed on load, which is deterministic.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "LofRepr", into = "LofRepr")]
pub struct LofModel {
    reference: Matrix,
    k: usize,
    k_distance: Vec<f64>,
    lrd: Vec<f64>,
    index: KdTree,
}

#[derive(Serialize, Deserialize)]
struct LofRepr {
    reference: Matrix,
    k: usize,
}

impl TryFrom<LofRepr> for LofModel {
    type Error = Error;

    fn try_from(r: LofRepr) -> Result<Self> {
        fit_lof(&r.reference, r.k)
    }
}

impl From<LofModel> for LofRepr {
    fn from(m: LofModel) -> Self {
        LofRepr {
            reference: m.reference,
            k: m.k,
        }
    }
}

fn lrd_from(neighbors: &[Neighbor], k_distance: &[f64]) -> f64 {
    let total: f64 = neighbors.iter().map(|n| k_distance[n.index].max(n.dist())).sum();
    1.0 / (total / neighbors.len() as f64).max(LRD_FLOOR)
}

pub fn fit_lof(train: &Matrix, k: usize) -> Result<LofModel> {
    if k == 0 {
        return Err(Error::invalid("LOF needs k >= 1"));
    }
    if k >= train.rows() {
        return Err(Error::invalid(format!(
            "LOF needs more reference points ({}) than k ({k})",
            train.rows()
        )));
    }
    let index = KdTree::build(train);
    let neighborhoods: Vec<Vec<Neighbor>> = (0..train.rows())
        .map(|i| index.query(train, train.row(i), k, Some(i)))
        .collect();
    let k_distance: Vec<f64> = neighborhoods.iter().map(|n| n[k - 1].dist()).collect();
    let lrd = neighborhoods.iter().map(|n| lrd_from(n, &k_distance)).collect();
    Ok(LofModel {
        reference: train.clone(),
        k,
        k_distance,
        lrd,
        index,
    })
}

impl LofModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.reference.cols()
    }

    pub fn reference(&self) -> &Matrix {
        &self.reference
    }

    pub fn lrd(&self) -> &[f64] {
        &self.lrd
    }

    pub fn k_distance(&self) -> &[f64] {
        &self.k_distance
    }

    /// LOF of an unseen point. Higher is more anomalous; about 1 for inliers.
    pub fn score(&self, point: &[f64]) -> Result<f64> {
        if point.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: point.len(),
            });
        }
        let nb = self.index.query(&self.reference, point, self.k, None);
        let lrd_p = lrd_from(&nb, &self.k_distance);
        let ratio: f64 = nb.iter().map(|n| self.lrd[n.index]).sum::<f64>() / nb.len() as f64;
        Ok(ratio / lrd_p)
    }

    /// Scores of the reference points themselves (self excluded from each
    /// neighbourhood), used to calibrate the decision threshold.
    pub fn training_scores(&self) -> Vec<f64> {
        (0..self.reference.rows())
            .map(|i| {
                let nb = self.index.query(&self.reference, self.reference.row(i), self.k, Some(i));
                let ratio: f64 = nb.iter().map(|n| self.lrd[n.index]).sum::<f64>() / nb.len() as f64;
                ratio / self.lrd[i]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> Matrix {
        let rows: Vec<[f64; 2]> = (0..n * n).map(|i| [(i / n) as f64, (i % n) as f64]).collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn grid_inlier_scores_about_one() {
        let m = fit_lof(&grid(10), 2).unwrap();
        let s = m.score(&[4.0, 5.0]).unwrap();
        assert!((s - 1.0).abs() <= 0.05, "{s}");
        let s = m.score(&[4.5, 5.0]).unwrap();
        assert!((s - 1.0).abs() <= 0.3, "{s}");
    }

    #[test]
    fn far_point_scores_high() {
        let m = fit_lof(&grid(5), 3).unwrap();
        assert!(m.score(&[40.0, 40.0]).unwrap() > 10.0);
    }

    #[test]
    fn rejects_bad_k_and_dims() {
        let g = grid(2);
        assert!(fit_lof(&g, 0).is_err());
        assert!(fit_lof(&g, 4).is_err());
        let m = fit_lof(&g, 2).unwrap();
        assert!(matches!(m.score(&[1.0]), Err(Error::Dimension { .. })));
    }

    #[test]
    fn heavy_duplicates_stay_finite() {
        let m = Matrix::from_rows(&[[1.0, 1.0]; 6]).unwrap();
        let model = fit_lof(&m, 2).unwrap();
        assert!(model.lrd().iter().all(|v| v.is_finite() && *v > 0.0));
        assert!(model.score(&[1.0, 1.0]).unwrap().is_finite());
        assert!(model.score(&[2.0, 1.0]).unwrap() > 1.0);
    }

    #[test]
    fn serde_rebuilds_index() {
        let m = fit_lof(&grid(6), 3).unwrap();
        let back: LofModel = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        let p = [2.2, 3.7];
        assert_eq!(m.score(&p).unwrap().to_bits(), back.score(&p).unwrap().to_bits());
    }
}
