//! Post-hoc explanations: LIME-style local explanations, a CART surrogate
//! of the refinement forest and rules read off the surrogate.

mod lime;
mod surrogate;

pub use lime::{
    explain_batch, fit_local_model, lime_explain, lime_sample, Contribution, FeatureBins, LimeConfig, LimeDesign,
    LocalExplanation, TrainStats,
};
pub use surrogate::{
    agreement, extract_rules, fit_surrogate, Condition, Rule, RuleSet, SurrogateConfig, SurrogateTree,
};

use crate::error::Result;
use crate::refinement::ForestModel;

/// A binary classifier with an attack probability.
pub trait Classifier: Sync {
    fn n_features(&self) -> usize;

    fn predict_proba(&self, row: &[f64]) -> Result<f64>;

    /// Attack iff the probability is above one half.
    fn predict_label(&self, row: &[f64]) -> Result<u8> {
        Ok(u8::from(self.predict_proba(row)? > 0.5))
    }
}

/// The forest seen through its selected features only, so explanations
/// cover the inputs it actually uses.
impl Classifier for ForestModel {
    fn n_features(&self) -> usize {
        self.selected_features.len()
    }

    fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        self.predict_selected(row).map(|(_, p)| p)
    }

    fn predict_label(&self, row: &[f64]) -> Result<u8> {
        self.predict_selected(row).map(|(l, _)| l)
    }
}

/// Wraps a closure as a classifier.
pub struct FnClassifier<F> {
    n_features: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> FnClassifier<F> {
    pub fn new(n_features: usize, f: F) -> Self {
        FnClassifier { n_features, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> Classifier for FnClassifier<F> {
    fn n_features(&self) -> usize {
        self.n_features
    }

    fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        Ok((self.f)(row))
    }
}
