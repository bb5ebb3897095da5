//! Bagged LOF + isolation-forest ensemble with weighted or plain majority
//! voting.
//!
//! Learner `i` draws its bootstrap sample and any internal randomness from
//! `seed::child_seed(master_seed, i)`. LOF learners come first, then
//! isolation forests.

mod voting;

pub use voting::{majority_vote, weighted_vote, VotePrediction, VotingMode};

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataio::FlowDataset;
use crate::detectors::{
    calibrate_threshold, fit_iforest, fit_lof, Detector, DetectorKind, MaxSamples, ThresholdCalibration,
};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::confusion;
use crate::reduction::{fit_pca, PcaModel};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LofParams {
    pub n_neighbors: usize,
    pub contamination: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IForestParams {
    pub n_estimators: usize,
    pub max_samples: MaxSamples,
    pub contamination: f64,
}

/// Ensemble layout and detector hyperparameters.
///
/// `lof` and `iforest` hold one or more parameter sets; learner `j` of a kind
/// uses entry `j % len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub n_lof: usize,
    pub n_iforest: usize,
    pub lof_components: usize,
    pub iforest_components: usize,
    pub lof: Vec<LofParams>,
    pub iforest: Vec<IForestParams>,
    /// Bootstrap sample size per learner; `None` means the full benign
    /// training size.
    #[serde(default)]
    pub bootstrap_size: Option<usize>,
}

impl EnsembleConfig {
    /// NSL-KDD hyperparameters.
    pub fn nsl_kdd() -> Self {
        EnsembleConfig {
            n_lof: 50,
            n_iforest: 50,
            lof_components: 7,
            iforest_components: 16,
            lof: vec![LofParams {
                n_neighbors: 5,
                contamination: 0.14,
            }],
            iforest: vec![IForestParams {
                n_estimators: 100,
                max_samples: MaxSamples::Fraction(1.0),
                contamination: 0.10,
            }],
            bootstrap_size: None,
        }
    }

    /// CICIDS2017 hyperparameters.
    pub fn cicids2017() -> Self {
        EnsembleConfig {
            n_lof: 50,
            n_iforest: 50,
            lof_components: 7,
            iforest_components: 11,
            lof: vec![LofParams {
                n_neighbors: 30,
                contamination: 0.07,
            }],
            iforest: vec![IForestParams {
                n_estimators: 400,
                max_samples: MaxSamples::Fraction(0.25),
                contamination: 0.24,
            }],
            bootstrap_size: None,
        }
    }

    pub fn n_learners(&self) -> usize {
        self.n_lof + self.n_iforest
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Learner {
    pub kind: DetectorKind,
    pub detector: Detector,
    pub calibration: ThresholdCalibration,
    pub bootstrap_seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub config: EnsembleConfig,
    pub master_seed: u64,
    pub pca_lof: Option<PcaModel>,
    pub pca_iforest: Option<PcaModel>,
    pub learners: Vec<Learner>,
    /// Per-learner validation F1, once assigned.
    pub weights: Option<Vec<f64>>,
    pub bootstrap_size: usize,
}

/// Votes of every learner on every row, row-major (`n_rows x n_learners`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoteTable {
    pub n_rows: usize,
    pub n_learners: usize,
    pub votes: Vec<u8>,
}

impl VoteTable {
    pub fn row(&self, i: usize) -> &[u8] {
        &self.votes[i * self.n_learners..(i + 1) * self.n_learners]
    }

    pub fn learner_column(&self, j: usize) -> Vec<u8> {
        (0..self.n_rows).map(|i| self.votes[i * self.n_learners + j]).collect()
    }
}

pub fn build_ensemble(benign_train: &FlowDataset, config: &EnsembleConfig, master_seed: u64) -> Result<EnsembleModel> {
    if config.n_learners() == 0 {
        return Err(Error::invalid("ensemble needs at least one learner"));
    }
    if let Some(labels) = &benign_train.labels {
        if labels.iter().any(|&l| l != 0) {
            return Err(Error::invalid("ensemble training data must be benign only"));
        }
    }
    if benign_train.is_empty() {
        return Err(Error::Empty("benign training set is empty".into()));
    }
    if (config.n_lof > 0 && config.lof.is_empty()) || (config.n_iforest > 0 && config.iforest.is_empty()) {
        return Err(Error::invalid("missing detector hyperparameters"));
    }
    let x = &benign_train.features;
    let pca_lof = (config.n_lof > 0)
        .then(|| fit_pca(x, config.lof_components))
        .transpose()?;
    let pca_iforest = (config.n_iforest > 0)
        .then(|| fit_pca(x, config.iforest_components))
        .transpose()?;
    let z_lof = pca_lof.as_ref().map(|p| p.transform(x)).transpose()?;
    let z_if = pca_iforest.as_ref().map(|p| p.transform(x)).transpose()?;
    let bootstrap_size = config.bootstrap_size.unwrap_or(x.rows()).max(1);
    if bootstrap_size < x.rows() {
        log::info!(
            "bootstrap subsampling: {bootstrap_size} of {} benign rows per learner",
            x.rows()
        );
    }

    let learners = (0..config.n_learners())
        .into_par_iter()
        .map(|i| {
            let child = seed::child_seed(master_seed, i as u64);
            let mut rng = seed::rng(child);
            let idx: Vec<usize> = (0..bootstrap_size).map(|_| rng.gen_range(0..x.rows())).collect();
            let (detector, contamination, sample) = if i < config.n_lof {
                let p = config.lof[i % config.lof.len()];
                let sample = z_lof.as_ref().expect("LOF projection").select_rows(&idx);
                (Detector::Lof(fit_lof(&sample, p.n_neighbors)?), p.contamination, sample)
            } else {
                let j = i - config.n_lof;
                let p = config.iforest[j % config.iforest.len()];
                let sample = z_if.as_ref().expect("iForest projection").select_rows(&idx);
                let model = fit_iforest(&sample, p.n_estimators, p.max_samples, seed::splitmix64(child))?;
                (Detector::IForest(model), p.contamination, sample)
            };
            let scores = detector.training_scores(&sample)?;
            let calibration = calibrate_threshold(&scores, contamination)?;
            Ok(Learner {
                kind: detector.kind(),
                detector,
                calibration,
                bootstrap_seed: child,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(EnsembleModel {
        config: config.clone(),
        master_seed,
        pca_lof,
        pca_iforest,
        learners,
        weights: None,
        bootstrap_size,
    })
}

impl EnsembleModel {
    pub fn n_learners(&self) -> usize {
        self.learners.len()
    }

    pub fn input_dim(&self) -> usize {
        self.pca_lof
            .as_ref()
            .or(self.pca_iforest.as_ref())
            .map_or(0, PcaModel::n_features)
    }

    fn project(&self, data: &Matrix) -> Result<(Option<Matrix>, Option<Matrix>)> {
        Ok((
            self.pca_lof.as_ref().map(|p| p.transform(data)).transpose()?,
            self.pca_iforest.as_ref().map(|p| p.transform(data)).transpose()?,
        ))
    }

    /// Score every row with every learner. Learners run in parallel; the
    /// result does not depend on the thread count.
    pub fn votes(&self, data: &Matrix) -> Result<VoteTable> {
        let (z_lof, z_if) = self.project(data)?;
        let columns: Vec<Vec<u8>> = self
            .learners
            .par_iter()
            .map(|l| {
                let z = match l.kind {
                    DetectorKind::Lof => z_lof.as_ref(),
                    DetectorKind::IForest => z_if.as_ref(),
                }
                .expect("projection for learner kind");
                z.iter_rows()
                    .map(|r| Ok(l.calibration.predict(l.detector.score(r)?)))
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<_>>()?;
        let n_learners = self.learners.len();
        let mut votes = vec![0u8; data.rows() * n_learners];
        for (j, col) in columns.iter().enumerate() {
            for (i, &v) in col.iter().enumerate() {
                votes[i * n_learners + j] = v;
            }
        }
        Ok(VoteTable {
            n_rows: data.rows(),
            n_learners,
            votes,
        })
    }

    pub fn point_votes(&self, point: &[f64]) -> Result<Vec<u8>> {
        let m = Matrix::from_vec(1, point.len(), point.to_vec())?;
        Ok(self.votes(&m)?.votes)
    }

    pub fn weights(&self) -> Result<&[f64]> {
        self.weights.as_deref().ok_or(Error::Unweighted)
    }

    /// Validation F1 of each learner from cached votes.
    pub fn learner_f1(&self, votes: &VoteTable, truth: &[u8]) -> Result<Vec<f64>> {
        if truth.len() != votes.n_rows {
            return Err(Error::Dimension {
                expected: votes.n_rows,
                got: truth.len(),
            });
        }
        if !truth.contains(&0) || !truth.contains(&1) {
            return Err(Error::MissingClass("validation set must contain both classes".into()));
        }
        (0..votes.n_learners)
            .map(|j| Ok(confusion(&votes.learner_column(j), truth)?.f1().value))
            .collect()
    }

    /// Set each learner's weight to its F1 on `validation`. Returns the
    /// weights and the cached validation votes.
    pub fn weigh_learners(&mut self, validation: &FlowDataset) -> Result<(Vec<f64>, VoteTable)> {
        let votes = self.votes(&validation.features)?;
        let w = self.learner_f1(&votes, validation.labels()?)?;
        self.weights = Some(w.clone());
        Ok((w, votes))
    }

    pub fn combine(&self, votes: &[u8], mode: VotingMode) -> Result<VotePrediction> {
        match mode {
            VotingMode::Weighted => Ok(weighted_vote(self.weights()?, votes)),
            VotingMode::Majority => Ok(majority_vote(votes)),
        }
    }

    pub fn predict_table(&self, votes: &VoteTable, mode: VotingMode) -> Result<Vec<VotePrediction>> {
        (0..votes.n_rows).map(|i| self.combine(votes.row(i), mode)).collect()
    }

    pub fn wmv_predict(&self, point: &[f64]) -> Result<VotePrediction> {
        let w = self.weights()?;
        Ok(weighted_vote(w, &self.point_votes(point)?))
    }

    pub fn mv_predict(&self, point: &[f64]) -> Result<VotePrediction> {
        Ok(majority_vote(&self.point_votes(point)?))
    }
}

/// Fraction of predictions whose two class scores are exactly equal.
pub fn tie_rate(preds: &[VotePrediction]) -> f64 {
    if preds.is_empty() {
        return 0.0;
    }
    let ties = preds.iter().filter(|p| p.tie).count();
    ties as f64 / preds.len() as f64
}
