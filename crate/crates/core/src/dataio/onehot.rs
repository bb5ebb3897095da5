use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::FlowDataset;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

/// Fitted one-hot encoder. Categories per column are sorted
/// lexicographically; indicator columns are appended after the numeric
/// features in `columns` order and named `column=category`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneHotEncoder {
    pub columns: Vec<(String, Vec<String>)>,
}

impl OneHotEncoder {
    pub fn fit(ds: &FlowDataset, cols: &[String]) -> Result<Self> {
        let columns = cols
            .iter()
            .map(|name| {
                let col = ds
                    .categoricals
                    .iter()
                    .find(|c| &c.name == name)
                    .ok_or_else(|| Error::Schema(format!("{name:?} is not a categorical column")))?;
                let cats: BTreeSet<&String> = col.values.iter().collect();
                Ok((name.clone(), cats.into_iter().cloned().collect()))
            })
            .collect::<Result<_>>()?;
        Ok(OneHotEncoder { columns })
    }

    pub fn n_outputs(&self) -> usize {
        self.columns.iter().map(|(_, c)| c.len()).sum()
    }

    /// Encode. Unseen categories produce all-zero indicators and a warning.
    pub fn transform(&self, ds: &FlowDataset) -> Result<FlowDataset> {
        let sources = self
            .columns
            .iter()
            .map(|(name, _)| {
                ds.categoricals
                    .iter()
                    .find(|c| &c.name == name)
                    .ok_or_else(|| Error::Schema(format!("{name:?} is not a categorical column")))
            })
            .collect::<Result<Vec<_>>>()?;
        let width = ds.n_features() + self.n_outputs();
        let mut data = Vec::with_capacity(ds.len() * width);
        let mut unseen = 0usize;
        for i in 0..ds.len() {
            data.extend_from_slice(ds.features.row(i));
            for ((_, cats), src) in self.columns.iter().zip(&sources) {
                let hit = cats.binary_search(&src.values[i]).ok();
                if hit.is_none() {
                    unseen += 1;
                }
                data.extend((0..cats.len()).map(|k| if Some(k) == hit { 1.0 } else { 0.0 }));
            }
        }
        if unseen > 0 {
            log::warn!("one-hot: {unseen} unseen categorical values encoded as all-zero");
        }
        let mut names = ds.feature_names.clone();
        for (name, cats) in &self.columns {
            names.extend(cats.iter().map(|c| format!("{name}={c}")));
        }
        let mut out = ds.clone();
        out.features = Matrix::from_vec(ds.len(), width, data)?;
        out.feature_names = names;
        out.categoricals.retain(|c| !self.columns.iter().any(|(n, _)| n == &c.name));
        out.provenance = format!("{}|onehot", ds.provenance);
        Ok(out)
    }
}

/// Fit and apply a one-hot encoding of `cols` in one step.
pub fn one_hot(ds: &FlowDataset, cols: &[String]) -> Result<FlowDataset> {
    OneHotEncoder::fit(ds, cols)?.transform(ds)
}
