//! Principal component analysis.
//!
//! Fitted by thin SVD of the mean-centred data. Component signs are fixed so
//! that the largest-magnitude coordinate of each component is positive (first
//! such coordinate on ties), which makes fits reproducible bit-for-bit.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `n_components x n_features`, orthonormal rows.
    pub components: Matrix,
    pub explained_variance: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.rows()
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn project_row(&self, row: &[f64], out: &mut [f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: row.len(),
            });
        }
        for (k, o) in out.iter_mut().enumerate() {
            let c = self.components.row(k);
            *o = row.iter().zip(&self.mean).zip(c).map(|((x, m), w)| (x - m) * w).sum();
        }
        Ok(())
    }

    pub fn transform(&self, data: &Matrix) -> Result<Matrix> {
        if data.cols() != self.n_features() {
            return Err(Error::Dimension {
                expected: self.n_features(),
                got: data.cols(),
            });
        }
        let k = self.n_components();
        let mut out = Matrix::zeros(data.rows(), k);
        for i in 0..data.rows() {
            let (src, dst) = (data.row(i), out.row_mut(i));
            self.project_row(src, dst)?;
        }
        Ok(out)
    }

    /// Map projected coordinates back to the input space.
    pub fn inverse_transform(&self, projected: &Matrix) -> Result<Matrix> {
        if projected.cols() != self.n_components() {
            return Err(Error::Dimension {
                expected: self.n_components(),
                got: projected.cols(),
            });
        }
        let d = self.n_features();
        let mut out = Matrix::zeros(projected.rows(), d);
        for i in 0..projected.rows() {
            let z = projected.row(i);
            let row = out.row_mut(i);
            row.copy_from_slice(&self.mean);
            for (k, zk) in z.iter().enumerate() {
                for (r, c) in row.iter_mut().zip(self.components.row(k)) {
                    *r += zk * c;
                }
            }
        }
        Ok(out)
    }
}

pub fn fit_pca(data: &Matrix, n_components: usize) -> Result<PcaModel> {
    let (n, d) = (data.rows(), data.cols());
    if n_components == 0 || n_components > n.min(d) {
        return Err(Error::invalid(format!(
            "n_components = {n_components} must be in 1..={} for a {n}x{d} matrix",
            n.min(d)
        )));
    }
    let mut mean = vec![0.0; d];
    for row in data.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered = DMatrix::from_fn(n, d, |i, j| data.get(i, j) - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::invalid("SVD did not produce right singular vectors"))?;
    let sv = svd.singular_values;

    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]).then(a.cmp(&b)));

    let denom = (n.max(2) - 1) as f64;
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let mut components = Matrix::zeros(n_components, d);
    let mut explained_variance = Vec::with_capacity(n_components);
    let mut explained_variance_ratio = Vec::with_capacity(n_components);
    for (k, &src) in order.iter().take(n_components).enumerate() {
        let mut row: Vec<f64> = (0..d).map(|j| v_t[(src, j)]).collect();
        let pivot = row
            .iter()
            .enumerate()
            .fold((0usize, -1.0f64), |best, (j, v)| if v.abs() > best.1 { (j, v.abs()) } else { best })
            .0;
        if row[pivot] < 0.0 {
            for v in &mut row {
                *v = -*v;
            }
        }
        components.row_mut(k).copy_from_slice(&row);
        let s2 = sv[src] * sv[src];
        explained_variance.push(s2 / denom);
        explained_variance_ratio.push(if total > 0.0 { s2 / total } else { 0.0 });
    }
    Ok(PcaModel {
        mean,
        components,
        explained_variance,
        explained_variance_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = crate::seed::rng(seed);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|j| rng.gen::<f64>() * (j + 1) as f64).collect())
            .collect();
        Matrix::from_rows(&rows).unwrap()
    }

    #[test]
    fn collinear_points_have_one_direction() {
        let m = Matrix::from_rows(&[[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 5.0]]).unwrap();
        let p = fit_pca(&m, 1).unwrap();
        assert!((p.explained_variance_ratio[0] - 1.0).abs() < 1e-12);
        let c = p.components.row(0);
        assert!((c[0] - c[1]).abs() < 1e-12 && c[0] > 0.0);
    }

    #[test]
    fn mean_projects_to_origin() {
        let m = random(50, 4, 1);
        let p = fit_pca(&m, 3).unwrap();
        let z = p.transform(&Matrix::from_rows(&[p.mean.clone()]).unwrap()).unwrap();
        assert!(z.as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn full_rank_round_trip() {
        let m = random(40, 5, 2);
        let p = fit_pca(&m, 5).unwrap();
        let back = p.inverse_transform(&p.transform(&m).unwrap()).unwrap();
        for (a, b) in back.as_slice().iter().zip(m.as_slice()) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn orthonormal_and_variance_consistent() {
        let m = random(200, 6, 3);
        let p = fit_pca(&m, 6).unwrap();
        for a in 0..6 {
            for b in 0..6 {
                let dot: f64 = p.components.row(a).iter().zip(p.components.row(b)).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-8);
            }
        }
        let z = p.transform(&m).unwrap();
        for k in 0..6 {
            let col = z.column(k);
            let var = col.iter().map(|v| v * v).sum::<f64>() / (col.len() - 1) as f64;
            assert!((var - p.explained_variance[k]).abs() / p.explained_variance[k] < 1e-6);
        }
        let r = &p.explained_variance_ratio;
        assert!(r.windows(2).all(|w| w[0] >= w[1]));
        assert!(r.iter().sum::<f64>() <= 1.0 + 1e-8);
    }

    #[test]
    fn row_order_invariant() {
        let m = random(30, 3, 4);
        let rev: Vec<usize> = (0..30).rev().collect();
        let a = fit_pca(&m, 2).unwrap();
        let b = fit_pca(&m.select_rows(&rev), 2).unwrap();
        for (x, y) in a.components.as_slice().iter().zip(b.components.as_slice()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_component_count() {
        let m = random(5, 3, 5);
        assert!(fit_pca(&m, 0).is_err());
        assert!(fit_pca(&m, 4).is_err());
        let p = fit_pca(&m, 2).unwrap();
        assert!(p.transform(&random(2, 4, 6)).is_err());
    }
}
