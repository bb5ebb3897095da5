use serde::{Deserialize, Serialize};

use super::FlowDataset;
use crate::error::{Error, Result};

/// Per-feature min/max for min-max scaling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalerParams {
    pub fn n_features(&self) -> usize {
        self.min.len()
    }

    /// Scale one row in place. Values outside the fitted range clamp to
    /// [0, 1]; constant features map to 0.
    pub fn scale_row(&self, row: &mut [f64]) {
        for ((v, &lo), &hi) in row.iter_mut().zip(&self.min).zip(&self.max) {
            let span = hi - lo;
            *v = if span > 0.0 { ((*v - lo) / span).clamp(0.0, 1.0) } else { 0.0 };
        }
    }
}

pub fn fit_minmax(ds: &FlowDataset) -> Result<ScalerParams> {
    if ds.is_empty() {
        return Err(Error::Empty("cannot fit scaler on empty dataset".into()));
    }
    let d = ds.n_features();
    let mut min = vec![f64::INFINITY; d];
    let mut max = vec![f64::NEG_INFINITY; d];
    for row in ds.features.iter_rows() {
        for j in 0..d {
            min[j] = min[j].min(row[j]);
            max[j] = max[j].max(row[j]);
        }
    }
    Ok(ScalerParams { min, max })
}

pub fn apply_minmax(ds: &FlowDataset, params: &ScalerParams) -> Result<FlowDataset> {
    if ds.n_features() != params.n_features() {
        return Err(Error::Dimension {
            expected: params.n_features(),
            got: ds.n_features(),
        });
    }
    let mut out = ds.clone();
    for i in 0..out.len() {
        params.scale_row(out.features.row_mut(i));
    }
    out.provenance = format!("{}|minmax", ds.provenance);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use proptest::prelude::*;

    fn col(v: &[f64]) -> FlowDataset {
        let m = Matrix::from_vec(v.len(), 1, v.to_vec()).unwrap();
        FlowDataset::new(m, vec!["x".into()], None).unwrap()
    }

    #[test]
    fn scales_linear_column() {
        let d = col(&[2.0, 4.0, 6.0]);
        let p = fit_minmax(&d).unwrap();
        assert_eq!(apply_minmax(&d, &p).unwrap().features.column(0), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_feature_maps_to_zero() {
        let d = col(&[5.0, 5.0, 5.0]);
        let p = fit_minmax(&d).unwrap();
        assert_eq!(apply_minmax(&d, &p).unwrap().features.column(0), vec![0.0; 3]);
    }

    #[test]
    fn out_of_range_clamps() {
        let p = fit_minmax(&col(&[2.0, 4.0, 6.0])).unwrap();
        assert_eq!(apply_minmax(&col(&[8.0, -1.0]), &p).unwrap().features.column(0), vec![1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn fitted_data_lands_in_unit_interval(v in prop::collection::vec(-1e9f64..1e9, 1..50)) {
            let d = col(&v);
            let p = fit_minmax(&d).unwrap();
            let s = apply_minmax(&d, &p).unwrap();
            prop_assert!(s.features.as_slice().iter().all(|x| (0.0..=1.0).contains(x)));
        }
    }
}
