//! Versioned run artifact.
//!
//! On disk: one JSON header line `{"format", "version", "checksum"}` followed
//! by the JSON payload. The checksum is the SHA-256 of the payload bytes.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::PipelineConfig;
use crate::dataio::{CleaningReport, FeatureSchema, OneHotEncoder, ScalerParams};
use crate::ensemble::{EnsembleModel, VotingMode};
use crate::error::{Error, Result};
use crate::explain::{RuleSet, SurrogateTree, TrainStats};
use crate::matrix::Matrix;
use crate::metrics::{ClassRateTable, MetricsRow};
use crate::refinement::{CorpusStats, FeatureScore, ForestModel, GridSearchReport, PseudoLabelSet};

pub const ARTIFACT_FORMAT: &str = "flowsentry-run";
pub const ARTIFACT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train_benign: usize,
    pub validation: usize,
    pub validation_attack: usize,
    pub test: usize,
    pub test_attack: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedInfo {
    pub schema: FeatureSchema,
    pub encoder: OneHotEncoder,
    pub scaler: ScalerParams,
    pub feature_names: Vec<String>,
    pub cleaning: Vec<(String, CleaningReport)>,
    pub sizes: SplitSizes,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TieRates {
    pub majority: f64,
    pub weighted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub metrics: Vec<MetricsRow>,
    pub tie_rates: TieRates,
    pub class_rates: ClassRateTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStage {
    pub pseudo: PseudoLabelSet,
    pub corpus: CorpusStats,
    pub ig_ranking: Vec<FeatureScore>,
    pub forest: ForestModel,
    pub grid: GridSearchReport,
    /// Explanation statistics over the selected features of the corpus.
    pub explain_stats: TrainStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FprAblation {
    pub ensemble_fpr: f64,
    pub final_fpr: f64,
    /// `(ensemble - final) / ensemble`; zero when the ensemble FPR is zero.
    pub relative_reduction: f64,
}

/// How the forest does on the flows the ensemble got wrong.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleErrorDiagnostic {
    pub ensemble_errors: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub corrected_by_forest: usize,
    pub corrected_rate: f64,
    pub metrics: Option<MetricsRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalReport {
    pub metrics: Vec<MetricsRow>,
    pub fpr_ablation: FprAblation,
    pub class_rates_ensemble: ClassRateTable,
    pub class_rates_final: ClassRateTable,
    pub ensemble_errors: EnsembleErrorDiagnostic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateStage {
    pub surrogate: SurrogateTree,
    pub rules: RuleSet,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunArtifact {
    pub config: PipelineConfig,
    #[serde(default)]
    pub prepared: Option<PreparedInfo>,
    #[serde(default)]
    pub ensemble: Option<EnsembleModel>,
    #[serde(default)]
    pub ensemble_report: Option<EnsembleReport>,
    #[serde(default)]
    pub refinement: Option<RefinementStage>,
    #[serde(default)]
    pub final_report: Option<FinalReport>,
    #[serde(default)]
    pub surrogate: Option<SurrogateStage>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    checksum: String,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Write `payload` as an artifact. The file is written next to `path` and
/// renamed into place.
pub fn save_artifact<T: Serialize>(path: &Path, payload: &T) -> Result<String> {
    let body = serde_json::to_vec(payload)?;
    let checksum = hex(&Sha256::digest(&body));
    let header = serde_json::to_string(&Header {
        format: ARTIFACT_FORMAT.into(),
        version: ARTIFACT_VERSION,
        checksum: checksum.clone(),
    })?;
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut f = std::io::BufWriter::new(std::fs::File::create(&tmp).map_err(|e| Error::io(&tmp, e))?);
        f.write_all(header.as_bytes())
            .and_then(|_| f.write_all(b"\n"))
            .and_then(|_| f.write_all(&body))
            .and_then(|_| f.flush())
            .map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))?;
    Ok(checksum)
}

pub fn load_artifact<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(f);
    let mut line = String::new();
    r.read_line(&mut line).map_err(|e| Error::io(path, e))?;
    let header: Header = serde_json::from_str(line.trim_end())
        .map_err(|e| Error::Artifact(format!("{}: bad header: {e}", path.display())))?;
    if header.format != ARTIFACT_FORMAT {
        return Err(Error::Artifact(format!("{}: not a {ARTIFACT_FORMAT} artifact", path.display())));
    }
    if header.version != ARTIFACT_VERSION {
        return Err(Error::Artifact(format!(
            "{}: artifact version {} (this build reads {ARTIFACT_VERSION})",
            path.display(),
            header.version
        )));
    }
    let mut body = Vec::new();
    r.read_to_end(&mut body).map_err(|e| Error::io(path, e))?;
    let got = hex(&Sha256::digest(&body));
    if got != header.checksum {
        return Err(Error::Artifact(format!("{}: checksum mismatch", path.display())));
    }
    Ok(serde_json::from_slice(&body)?)
}

impl RunArtifact {
    pub fn new(config: PipelineConfig) -> Self {
        RunArtifact {
            config,
            prepared: None,
            ensemble: None,
            ensemble_report: None,
            refinement: None,
            final_report: None,
            surrogate: None,
        }
    }

    pub fn save(&self, path: &Path) -> Result<String> {
        save_artifact(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        load_artifact(path)
    }

    pub fn ensemble(&self) -> Result<&EnsembleModel> {
        self.ensemble
            .as_ref()
            .ok_or_else(|| Error::NotFound("run has no ensemble; run train-ensemble first".into()))
    }

    pub fn refinement(&self) -> Result<&RefinementStage> {
        self.refinement
            .as_ref()
            .ok_or_else(|| Error::NotFound("run has no refinement model; run refine first".into()))
    }

    /// Ensemble labels and attack shares for scaled input rows.
    pub fn predict_ensemble(&self, rows: &Matrix, mode: VotingMode) -> Result<(Vec<u8>, Vec<f64>)> {
        let ens = self.ensemble()?;
        let votes = ens.votes(rows)?;
        let preds = ens.predict_table(&votes, mode)?;
        Ok(preds.iter().map(|p| (p.label, p.attack_share())).unzip())
    }

    /// Final labels and forest attack probabilities for scaled input rows.
    pub fn predict_final(&self, rows: &Matrix) -> Result<(Vec<u8>, Vec<f64>)> {
        self.refinement()?.forest.predict_matrix(rows)
    }
}
