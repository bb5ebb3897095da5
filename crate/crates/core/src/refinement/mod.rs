//! Second-stage supervised refinement: pseudo-labels, information-gain
//! ranking, SMOTE, random forest and the cross-validated grid search.

mod cv;
mod forest;
mod ig;
mod pseudo;
mod smote;

pub use cv::{
    audit_folds, stratified_folds, train_refinement, CandidateResult, FoldAudit, ForestGrid, GridSearchReport,
    RefinementConfig, RowTag,
};
pub use forest::{fit_forest, ForestModel, ForestParams};
pub use ig::{discretize, information_gain, FeatureScore, IG_BINS};
pub use pseudo::{make_pseudo_labels, AnalystAction, PseudoLabelSet, PseudoMode, ReviewDecision};
pub use smote::{smote, smote_with_origins, SyntheticOrigin};

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::dataio::FlowDataset;
use crate::ensemble::EnsembleModel;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub pseudo_rows: usize,
    pub benign_rows: usize,
    pub duplicates_removed: usize,
    pub total: usize,
}

/// Pseudo-labelled rows of `detected` followed by the benign training rows,
/// with exact duplicates (features and label) removed, first kept.
pub fn build_training_corpus(
    detected: &FlowDataset,
    pseudo: &PseudoLabelSet,
    benign_train: &FlowDataset,
) -> Result<(FlowDataset, CorpusStats)> {
    let mut labelled = detected.select(&pseudo.rows);
    labelled.labels = Some(pseudo.pseudo_labels.clone());
    let mut benign = benign_train.clone();
    benign.labels = Some(vec![0; benign.len()]);
    // Class strings are not part of the training signal.
    labelled.classes = None;
    benign.classes = None;
    let joined = labelled.concat(&benign)?;
    let labels = joined.labels()?;
    let mut seen = HashSet::with_capacity(joined.len());
    let keep: Vec<usize> = (0..joined.len())
        .filter(|&i| {
            let mut key: Vec<u64> = joined.features.row(i).iter().map(|v| v.to_bits()).collect();
            key.push(labels[i] as u64);
            seen.insert(key)
        })
        .collect();
    let stats = CorpusStats {
        pseudo_rows: pseudo.len(),
        benign_rows: benign_train.len(),
        duplicates_removed: joined.len() - keep.len(),
        total: keep.len(),
    };
    log::info!(
        "refinement corpus: {} pseudo-labelled + {} benign, {} duplicates removed, {} rows",
        stats.pseudo_rows,
        stats.benign_rows,
        stats.duplicates_removed,
        stats.total
    );
    let out = joined.select(&keep).with_provenance("refinement-corpus");
    Ok((out, stats))
}

/// Final label for one scaled input-space row: the forest decides.
/// The ensemble's role is producing the training corpus; it is accepted here
/// so callers can pass both stages together.
pub fn combined_predict(_ensemble: &EnsembleModel, forest: &ForestModel, row: &[f64]) -> Result<u8> {
    forest.predict_full(row).map(|(label, _)| label)
}
