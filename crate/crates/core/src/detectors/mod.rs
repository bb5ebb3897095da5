//! Novelty detectors trained on benign traffic only.

mod calibration;
mod iforest;
mod lof;

pub use calibration::{calibrate_threshold, quantile, ThresholdCalibration};
pub use iforest::{
    average_path_length, fit_iforest, harmonic, score_from_path_length, ITree, ITreeNode, IForestModel, MaxSamples,
};
pub use lof::{fit_lof, LofModel, LRD_FLOOR};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::matrix::Matrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DetectorKind {
    #[serde(rename = "lof")]
    Lof,
    #[serde(rename = "iforest")]
    IForest,
}

impl std::fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DetectorKind::Lof => "LOF",
            DetectorKind::IForest => "iForest",
        })
    }
}

/// A fitted detector. Scores follow the higher-is-more-anomalous convention.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Detector {
    Lof(LofModel),
    IForest(IForestModel),
}

impl Detector {
    pub fn kind(&self) -> DetectorKind {
        match self {
            Detector::Lof(_) => DetectorKind::Lof,
            Detector::IForest(_) => DetectorKind::IForest,
        }
    }

    pub fn score(&self, point: &[f64]) -> Result<f64> {
        match self {
            Detector::Lof(m) => m.score(point),
            Detector::IForest(m) => m.score(point),
        }
    }

    /// Scores on the detector's own training sample.
    pub fn training_scores(&self, train: &Matrix) -> Result<Vec<f64>> {
        match self {
            Detector::Lof(m) => Ok(m.training_scores()),
            Detector::IForest(m) => train.iter_rows().map(|r| m.score(r)).collect(),
        }
    }
}
