//! Orchestration: configuration, the run artifact, CLI commands and the
//! review service.

mod artifact;
mod commands;
mod config;
pub mod review;

pub use artifact::{
    load_artifact, save_artifact, EnsembleErrorDiagnostic, EnsembleReport, FinalReport, FprAblation, PreparedInfo,
    RefinementStage, RunArtifact, SplitSizes, SurrogateStage, TieRates, ARTIFACT_FORMAT, ARTIFACT_VERSION,
};
pub use commands::{
    cmd_evaluate, cmd_evaluate_final, cmd_explain, cmd_prepare, cmd_refine, cmd_run_all, cmd_surrogate,
    cmd_train_ensemble, load_split, pseudo_labels, ExplainTarget, Layout,
};
pub use config::{DatasetConfig, PipelineConfig, QueueOrder, ReviewConfig, SchemaRef};
