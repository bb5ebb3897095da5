//! Flow-record ingestion, cleaning, encoding, scaling and splitting.

mod clean;
mod load;
mod onehot;
mod scale;
mod schema;
mod split;

use serde::{Deserialize, Serialize};

pub use clean::{clean, CleaningReport};
pub use load::{load_flow_csv, load_flow_csvs};
pub use onehot::{one_hot, OneHotEncoder};
pub use scale::{apply_minmax, fit_minmax, ScalerParams};
pub use schema::{ColumnKind, ColumnSpec, FeatureSchema};
pub use split::stratified_split;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const BENIGN: u8 = 0;
pub const ATTACK: u8 = 1;

/// A categorical column that has not been one-hot encoded yet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoricalColumn {
    pub name: String,
    pub values: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum RowDefect {
    #[default]
    None,
    Missing,
    Invalid,
}

/// Labelled feature matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowDataset {
    pub features: Matrix,
    pub feature_names: Vec<String>,
    /// Binary labels, 0 = benign, 1 = attack.
    pub labels: Option<Vec<u8>>,
    /// Raw label strings (attack names), kept for class-level reporting.
    pub classes: Option<Vec<String>>,
    pub categoricals: Vec<CategoricalColumn>,
    pub provenance: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub(crate) defects: Vec<RowDefect>,
}

impl FlowDataset {
    pub fn new(features: Matrix, feature_names: Vec<String>, labels: Option<Vec<u8>>) -> Result<Self> {
        if feature_names.len() != features.cols() {
            return Err(Error::Dimension {
                expected: features.cols(),
                got: feature_names.len(),
            });
        }
        if let Some(l) = &labels {
            if l.len() != features.rows() {
                return Err(Error::Dimension {
                    expected: features.rows(),
                    got: l.len(),
                });
            }
        }
        Ok(FlowDataset {
            features,
            feature_names,
            labels,
            classes: None,
            categoricals: Vec::new(),
            provenance: String::new(),
            defects: Vec::new(),
        })
    }

    pub fn with_provenance(mut self, p: impl Into<String>) -> Self {
        self.provenance = p.into();
        self
    }

    pub fn with_classes(mut self, classes: Vec<String>) -> Self {
        self.classes = Some(classes);
        self
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    pub fn labels(&self) -> Result<&[u8]> {
        self.labels
            .as_deref()
            .ok_or_else(|| Error::MissingClass(format!("dataset {:?} has no labels", self.provenance)))
    }

    pub fn class_counts(&self) -> Result<[usize; 2]> {
        let mut c = [0usize; 2];
        for &l in self.labels()? {
            c[l as usize] += 1;
        }
        Ok(c)
    }

    /// Rows at `idx`, in order. Repeats are allowed.
    pub fn select(&self, idx: &[usize]) -> FlowDataset {
        FlowDataset {
            features: self.features.select_rows(idx),
            feature_names: self.feature_names.clone(),
            labels: self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i]).collect()),
            classes: self.classes.as_ref().map(|c| idx.iter().map(|&i| c[i].clone()).collect()),
            categoricals: self
                .categoricals
                .iter()
                .map(|c| CategoricalColumn {
                    name: c.name.clone(),
                    values: idx.iter().map(|&i| c.values[i].clone()).collect(),
                })
                .collect(),
            provenance: self.provenance.clone(),
            defects: if self.defects.is_empty() {
                Vec::new()
            } else {
                idx.iter().map(|&i| self.defects[i]).collect()
            },
        }
    }

    pub fn select_features(&self, cols: &[usize]) -> FlowDataset {
        let mut out = self.clone();
        out.features = self.features.select_cols(cols);
        out.feature_names = cols.iter().map(|&j| self.feature_names[j].clone()).collect();
        out
    }

    /// Rows whose binary label equals `label`.
    pub fn filter_label(&self, label: u8) -> Result<FlowDataset> {
        let idx: Vec<usize> = self
            .labels()?
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == label)
            .map(|(i, _)| i)
            .collect();
        Ok(self.select(&idx).with_provenance(format!("{}|label=={label}", self.provenance)))
    }

    /// Append rows of `other`. Feature names must agree.
    pub fn concat(&self, other: &FlowDataset) -> Result<FlowDataset> {
        if self.feature_names != other.feature_names {
            return Err(Error::Schema("cannot concatenate datasets with different features".into()));
        }
        let cat_names = |d: &FlowDataset| d.categoricals.iter().map(|c| c.name.clone()).collect::<Vec<_>>();
        if cat_names(self) != cat_names(other) {
            return Err(Error::Schema("cannot concatenate datasets with different categorical columns".into()));
        }
        let join = |a: &Option<Vec<u8>>, b: &Option<Vec<u8>>| match (a, b) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        let classes = match (&self.classes, &other.classes) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        let defects = if self.defects.is_empty() && other.defects.is_empty() {
            Vec::new()
        } else {
            let pad = |d: &FlowDataset| {
                if d.defects.is_empty() {
                    vec![RowDefect::None; d.len()]
                } else {
                    d.defects.clone()
                }
            };
            let mut v = pad(self);
            v.extend(pad(other));
            v
        };
        Ok(FlowDataset {
            features: self.features.vstack(&other.features)?,
            feature_names: self.feature_names.clone(),
            labels: join(&self.labels, &other.labels),
            classes,
            categoricals: self
                .categoricals
                .iter()
                .zip(&other.categoricals)
                .map(|(a, b)| CategoricalColumn {
                    name: a.name.clone(),
                    values: a.values.iter().chain(&b.values).cloned().collect(),
                })
                .collect(),
            provenance: format!("{}+{}", self.provenance, other.provenance),
            defects,
        })
    }

    /// Write features plus `label` (and `class` when known) as CSV.
    pub fn write_csv(&self, path: &std::path::Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?;
        let csv_err = |e: csv::Error| Error::Csv {
            path: path.into(),
            source: e,
        };
        let mut header: Vec<String> = self.feature_names.clone();
        if self.labels.is_some() {
            header.push("label".into());
        }
        if self.classes.is_some() {
            header.push("class".into());
        }
        w.write_record(&header).map_err(csv_err)?;
        for i in 0..self.len() {
            let mut rec: Vec<String> = self.features.row(i).iter().map(|v| format!("{v:?}")).collect();
            if let Some(l) = &self.labels {
                rec.push(l[i].to_string());
            }
            if let Some(c) = &self.classes {
                rec.push(c[i].clone());
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Read a file written by [`FlowDataset::write_csv`].
    pub fn read_csv(path: &std::path::Path) -> Result<FlowDataset> {
        let mut r = csv::Reader::from_path(path).map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?;
        let csv_err = |e: csv::Error| Error::Csv {
            path: path.into(),
            source: e,
        };
        let header: Vec<String> = r.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        let has_class = header.last().is_some_and(|h| h == "class");
        let label_pos = header.iter().position(|h| h == "label");
        let n_feat = label_pos.unwrap_or(header.len() - usize::from(has_class));
        let mut features = Matrix::with_cols(n_feat);
        let mut labels = Vec::new();
        let mut classes = Vec::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            let row: Vec<f64> = rec
                .iter()
                .take(n_feat)
                .map(|v| v.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Schema(format!("{}: {e}", path.display())))?;
            features.push_row(&row)?;
            if let Some(p) = label_pos {
                labels.push(
                    rec[p]
                        .parse::<u8>()
                        .map_err(|e| Error::Schema(format!("{}: bad label: {e}", path.display())))?,
                );
            }
            if has_class {
                classes.push(rec[rec.len() - 1].to_string());
            }
        }
        let mut ds = FlowDataset::new(
            features,
            header[..n_feat].to_vec(),
            label_pos.map(|_| labels),
        )?
        .with_provenance(path.display().to_string());
        if has_class {
            ds.classes = Some(classes);
        }
        Ok(ds)
    }
}
