use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::FlowDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;
use crate::tree::{DecisionTree, MaxFeatures, TreeParams};

/// Random forest hyperparameters. `None` for depth or leaf size means the
/// library default (unlimited depth, leaves of one sample).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub min_samples_leaf: Option<usize>,
}

impl ForestParams {
    pub fn nsl_kdd() -> Self {
        ForestParams {
            n_estimators: 300,
            max_depth: Some(15),
            min_samples_split: 4,
            min_samples_leaf: None,
        }
    }

    pub fn cicids2017() -> Self {
        ForestParams {
            n_estimators: 100,
            max_depth: Some(10),
            min_samples_split: 8,
            min_samples_leaf: Some(2),
        }
    }

    fn tree_params(&self) -> TreeParams {
        TreeParams {
            max_depth: self.max_depth,
            min_samples_split: self.min_samples_split.max(2),
            min_samples_leaf: self.min_samples_leaf.unwrap_or(1),
            max_features: MaxFeatures::Sqrt,
        }
    }
}

impl std::fmt::Display for ForestParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let opt = |v: Option<usize>| v.map_or("default".to_string(), |v| v.to_string());
        write!(
            f,
            "n_estimators={} max_depth={} min_samples_split={} min_samples_leaf={}",
            self.n_estimators,
            opt(self.max_depth),
            self.min_samples_split,
            opt(self.min_samples_leaf)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub params: ForestParams,
    /// Input-space feature indices, in the order the trees see them.
    pub selected_features: Vec<usize>,
    pub feature_names: Vec<String>,
    pub n_input_features: usize,
    pub seed: u64,
}

/// Bagged CART forest, `sqrt(n_features)` candidates per split. Tree `t`
/// uses `seed::child_seed(seed, t)`.
pub fn fit_forest(x: &Matrix, y: &[u8], params: ForestParams, seed_value: u64) -> Result<Vec<DecisionTree>> {
    if params.n_estimators == 0 {
        return Err(Error::invalid("forest needs at least one tree"));
    }
    if x.is_empty() {
        return Err(Error::Empty("forest training set is empty".into()));
    }
    let tp = params.tree_params();
    (0..params.n_estimators)
        .into_par_iter()
        .map(|t| {
            let mut rng = seed::rng(seed::child_seed(seed_value, t as u64));
            let sample: Vec<usize> = (0..x.rows()).map(|_| rng.gen_range(0..x.rows())).collect();
            DecisionTree::fit(x, y, &sample, tp, &mut rng)
        })
        .collect()
}

impl ForestModel {
    /// Train on `ds` restricted to `selected_features`.
    pub fn train(ds: &FlowDataset, selected_features: &[usize], params: ForestParams, seed_value: u64) -> Result<Self> {
        if let Some(&bad) = selected_features.iter().find(|&&j| j >= ds.n_features()) {
            return Err(Error::invalid(format!("selected feature {bad} out of range")));
        }
        let x = ds.features.select_cols(selected_features);
        let trees = fit_forest(&x, ds.labels()?, params, seed_value)?;
        Ok(ForestModel {
            trees,
            params,
            selected_features: selected_features.to_vec(),
            feature_names: selected_features.iter().map(|&j| ds.feature_names[j].clone()).collect(),
            n_input_features: ds.n_features(),
            seed: seed_value,
        })
    }

    /// Fraction of trees voting attack, and the label (`prob > 0.5`; exactly
    /// one half is benign). `point` holds the selected features in order.
    pub fn predict_selected(&self, point: &[f64]) -> Result<(u8, f64)> {
        if point.len() != self.selected_features.len() {
            return Err(Error::Dimension {
                expected: self.selected_features.len(),
                got: point.len(),
            });
        }
        let attack = self.trees.iter().filter(|t| t.predict(point) == 1).count();
        let prob = attack as f64 / self.trees.len() as f64;
        Ok((u8::from(prob > 0.5), prob))
    }

    /// Like [`predict_selected`](Self::predict_selected) but takes a full
    /// input-space row.
    pub fn predict_full(&self, row: &[f64]) -> Result<(u8, f64)> {
        if row.len() != self.n_input_features {
            return Err(Error::Dimension {
                expected: self.n_input_features,
                got: row.len(),
            });
        }
        let p: Vec<f64> = self.selected_features.iter().map(|&j| row[j]).collect();
        self.predict_selected(&p)
    }

    pub fn predict_matrix(&self, data: &Matrix) -> Result<(Vec<u8>, Vec<f64>)> {
        let out: Vec<(u8, f64)> = (0..data.rows())
            .into_par_iter()
            .map(|i| self.predict_full(data.row(i)))
            .collect::<Result<_>>()?;
        Ok(out.into_iter().unzip())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ds() -> FlowDataset {
        let mut rng = seed::rng(4);
        let rows: Vec<[f64; 4]> = (0..300).map(|_| [rng.gen(), rng.gen(), rng.gen(), rng.gen()]).collect();
        let labels = rows.iter().map(|r| u8::from(r[1] > 0.6)).collect();
        FlowDataset::new(
            Matrix::from_rows(&rows).unwrap(),
            (0..4).map(|j| format!("f{j}")).collect(),
            Some(labels),
        )
        .unwrap()
    }

    #[test]
    fn learns_threshold_and_is_deterministic() {
        let d = ds();
        let p = ForestParams {
            n_estimators: 25,
            max_depth: None,
            min_samples_split: 2,
            min_samples_leaf: None,
        };
        let m = ForestModel::train(&d, &[0, 1, 2, 3], p, 7).unwrap();
        assert_eq!(m.trees.len(), 25);
        assert_eq!(m.predict_full(&[0.5, 0.95, 0.5, 0.5]).unwrap().0, 1);
        assert_eq!(m.predict_full(&[0.5, 0.05, 0.5, 0.5]).unwrap().0, 0);
        let again = ForestModel::train(&d, &[0, 1, 2, 3], p, 7).unwrap();
        assert_eq!(serde_json::to_string(&m).unwrap(), serde_json::to_string(&again).unwrap());
        assert!(m.predict_selected(&[0.1]).is_err());
        assert!(m.predict_full(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn half_vote_is_benign() {
        let d = ds();
        let p = ForestParams {
            n_estimators: 2,
            max_depth: Some(1),
            min_samples_split: 2,
            min_samples_leaf: None,
        };
        let mut m = ForestModel::train(&d, &[1], p, 1).unwrap();
        // Make one tree always vote attack and the other always benign.
        m.trees[0] = DecisionTree {
            nodes: vec![crate::tree::TreeNode::Leaf { counts: [0, 5] }],
            n_features: 1,
        };
        m.trees[1] = DecisionTree {
            nodes: vec![crate::tree::TreeNode::Leaf { counts: [5, 0] }],
            n_features: 1,
        };
        assert_eq!(m.predict_selected(&[0.9]).unwrap(), (0, 0.5));
    }

    #[test]
    fn selected_feature_bounds() {
        let p = ForestParams::nsl_kdd();
        assert!(ForestModel::train(&ds(), &[4], p, 0).is_err());
    }
}
