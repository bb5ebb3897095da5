//! Zero-day network intrusion detection from flow records.
//!
//! The crate is organised as a two-stage pipeline:
//!
//! 1. [`ensemble`]: one hundred novelty detectors ([`detectors`]) trained on
//!    bootstrapped benign traffic in a PCA space ([`reduction`]), combined by
//!    F1-weighted majority voting or by plain majority voting.
//! 2. [`refinement`]: a random forest trained on pseudo-labelled detections,
//!    with information-gain feature ranking, SMOTE and a cross-validated grid
//!    search.
//!
//! [`explain`] produces local perturbation explanations and a global
//! decision-tree surrogate with extracted rules. [`pipeline`] wires the stages
//! into CLI commands, persists run artifacts and serves the analyst review API.

pub mod dataio;
pub mod detectors;
pub mod ensemble;
pub mod error;
pub mod explain;
pub mod knn;
pub mod matrix;
pub mod metrics;
pub mod pipeline;
pub mod reduction;
pub mod refinement;
pub mod seed;
pub mod synth;
pub mod tree;

pub use error::{Error, Result};
pub use matrix::Matrix;
