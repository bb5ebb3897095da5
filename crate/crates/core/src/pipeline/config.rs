use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataio::FeatureSchema;
use crate::ensemble::{EnsembleConfig, VotingMode};
use crate::error::{Error, Result};
use crate::explain::{LimeConfig, SurrogateConfig};
use crate::refinement::{ForestGrid, ForestParams, PseudoMode, RefinementConfig};

/// A built-in schema name (`nsl-kdd`, `cicids2017`) or a path to a schema
/// TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SchemaRef(pub String);

impl SchemaRef {
    pub fn load(&self, base: &Path) -> Result<FeatureSchema> {
        match self.0.as_str() {
            "nsl-kdd" | "nsl_kdd" => Ok(FeatureSchema::nsl_kdd()),
            "cicids2017" | "cic-ids2017" => Ok(FeatureSchema::cicids2017()),
            path => FeatureSchema::from_file(&base.join(path)),
        }
    }
}

/// Input files and how they become train / validation / test.
///
/// `primary` files are cleaned and encoded, then split by `train_fraction`
/// (stratified). The benign rows of the first part are the detector training
/// set and that part also fits the scaler. The remainder plus the `extra`
/// files form a pool that is split by `validation_fraction` into validation
/// and test. With `train_fraction = 1` all primary rows form the first part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub schema: SchemaRef,
    pub primary: Vec<PathBuf>,
    #[serde(default)]
    pub extra: Vec<PathBuf>,
    pub train_fraction: f64,
    pub validation_fraction: f64,
    /// Stratified subsample of every cleaned input, applied before
    /// splitting.
    #[serde(default)]
    pub subsample: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueueOrder {
    /// Smallest |score_attack - score_benign| first.
    Uncertainty,
    /// Row order.
    Index,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewConfig {
    pub queue_order: QueueOrder,
    pub page_size: usize,
    /// Approve every pending item without an analyst, through the same
    /// decision log.
    pub auto_accept: bool,
    /// Perturbation samples for item explanations (the ensemble is slower
    /// to query than the forest).
    pub explanation_samples: usize,
}

impl Default for ReviewConfig {
    fn default() -> Self {
        ReviewConfig {
            queue_order: QueueOrder::Uncertainty,
            page_size: 50,
            auto_accept: true,
            explanation_samples: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    pub voting: VotingMode,
    pub pseudo_mode: PseudoMode,
    pub dataset: DatasetConfig,
    pub ensemble: EnsembleConfig,
    pub refinement: RefinementConfig,
    #[serde(default)]
    pub explain: LimeConfig,
    #[serde(default)]
    pub surrogate: SurrogateConfig,
    #[serde(default)]
    pub review: ReviewConfig,
}

impl PipelineConfig {
    /// NSL-KDD defaults; `data_dir` holds `KDDTrain+.txt` and `KDDTest+.txt`.
    pub fn nsl_kdd(data_dir: &Path, output_dir: &Path) -> Self {
        PipelineConfig {
            seed: 42,
            output_dir: output_dir.to_path_buf(),
            voting: VotingMode::Weighted,
            pseudo_mode: PseudoMode::Oracle,
            dataset: DatasetConfig {
                schema: SchemaRef("nsl-kdd".into()),
                primary: vec![data_dir.join("KDDTrain+.txt")],
                extra: vec![data_dir.join("KDDTest+.txt")],
                train_fraction: 0.6,
                // 37,791 / (37,791 + 35,140)
                validation_fraction: 37_791.0 / 72_931.0,
                subsample: None,
            },
            ensemble: EnsembleConfig::nsl_kdd(),
            refinement: RefinementConfig {
                grid: ForestGrid::single(ForestParams::nsl_kdd()),
                cv_max_rows: Some(10_000),
                ..RefinementConfig::default()
            },
            explain: LimeConfig::default(),
            surrogate: SurrogateConfig::default(),
            review: ReviewConfig::default(),
        }
    }

    /// CICIDS2017 defaults: Monday (benign) trains the detectors, the other
    /// days form the validation / test pool.
    pub fn cicids2017(data_dir: &Path, output_dir: &Path) -> Self {
        let days = [
            "Tuesday-WorkingHours.pcap_ISCX.csv",
            "Wednesday-workingHours.pcap_ISCX.csv",
            "Thursday-WorkingHours-Morning-WebAttacks.pcap_ISCX.csv",
            "Thursday-WorkingHours-Afternoon-Infilteration.pcap_ISCX.csv",
            "Friday-WorkingHours-Morning.pcap_ISCX.csv",
            "Friday-WorkingHours-Afternoon-PortScan.pcap_ISCX.csv",
            "Friday-WorkingHours-Afternoon-DDos.pcap_ISCX.csv",
        ];
        PipelineConfig {
            seed: 42,
            output_dir: output_dir.to_path_buf(),
            voting: VotingMode::Weighted,
            pseudo_mode: PseudoMode::Oracle,
            dataset: DatasetConfig {
                schema: SchemaRef("cicids2017".into()),
                primary: vec![data_dir.join("Monday-WorkingHours.pcap_ISCX.csv")],
                extra: days.iter().map(|d| data_dir.join(d)).collect(),
                train_fraction: 1.0,
                validation_fraction: 0.5,
                subsample: None,
            },
            ensemble: EnsembleConfig::cicids2017(),
            refinement: RefinementConfig {
                grid: ForestGrid::single(ForestParams::cicids2017()),
                cv_max_rows: Some(10_000),
                ..RefinementConfig::default()
            },
            explain: LimeConfig::default(),
            surrogate: SurrogateConfig::default(),
            review: ReviewConfig::default(),
        }
    }

    /// NSL-KDD layout with a small ensemble and forest, for quick end-to-end
    /// runs over synthetic data.
    pub fn smoke(data_dir: &Path, output_dir: &Path) -> Self {
        let mut cfg = Self::nsl_kdd(data_dir, output_dir);
        cfg.ensemble.n_lof = 6;
        cfg.ensemble.n_iforest = 6;
        cfg.ensemble.iforest[0].n_estimators = 25;
        cfg.refinement = RefinementConfig {
            grid: ForestGrid::single(ForestParams {
                n_estimators: 15,
                max_depth: Some(8),
                min_samples_split: 4,
                min_samples_leaf: None,
            }),
            folds: 3,
            min_subset: 5,
            max_subset: 7,
            cv_max_rows: Some(1_000),
            ..RefinementConfig::default()
        };
        cfg.explain.n_samples = 400;
        cfg.review.explanation_samples = 200;
        cfg
    }

    pub fn preset(name: &str, data_dir: &Path, output_dir: &Path) -> Result<Self> {
        match name {
            "nsl-kdd" | "nsl_kdd" => Ok(Self::nsl_kdd(data_dir, output_dir)),
            "cicids2017" => Ok(Self::cicids2017(data_dir, output_dir)),
            "smoke" => Ok(Self::smoke(data_dir, output_dir)),
            other => Err(Error::Config(format!("unknown preset {other:?} (expected nsl-kdd, cicids2017 or smoke)"))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: PipelineConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load a config file. Relative paths inside it resolve against the
    /// file's directory.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.rebase(base);
        Ok(cfg)
    }

    fn rebase(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        self.dataset.primary.iter_mut().for_each(fix);
        self.dataset.extra.iter_mut().for_each(fix);
        if !matches!(self.dataset.schema.0.as_str(), "nsl-kdd" | "nsl_kdd" | "cicids2017" | "cic-ids2017") {
            self.dataset.schema.0 = base.join(&self.dataset.schema.0).to_string_lossy().into_owned();
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        self.dataset.schema.load(Path::new("."))
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let d = &self.dataset;
        if d.primary.is_empty() {
            return bad("dataset.primary lists no files".into());
        }
        if !(d.train_fraction > 0.0 && d.train_fraction <= 1.0) {
            return bad(format!("dataset.train_fraction = {} not in (0, 1]", d.train_fraction));
        }
        if !(d.validation_fraction > 0.0 && d.validation_fraction < 1.0) {
            return bad(format!("dataset.validation_fraction = {} not in (0, 1)", d.validation_fraction));
        }
        if let Some(s) = d.subsample {
            if !(s > 0.0 && s <= 1.0) {
                return bad(format!("dataset.subsample = {s} not in (0, 1]"));
            }
        }
        let e = &self.ensemble;
        if e.n_lof + e.n_iforest == 0 {
            return bad("ensemble has no learners".into());
        }
        if (e.n_lof > 0 && e.lof.is_empty()) || (e.n_iforest > 0 && e.iforest.is_empty()) {
            return bad("ensemble is missing detector hyperparameters".into());
        }
        let contaminations = e.lof.iter().map(|p| p.contamination).chain(e.iforest.iter().map(|p| p.contamination));
        for c in contaminations {
            if !(c > 0.0 && c <= 0.5) {
                return bad(format!("contamination {c} not in (0, 0.5]"));
            }
        }
        if e.lof.iter().any(|p| p.n_neighbors == 0) {
            return bad("LOF n_neighbors must be positive".into());
        }
        let r = &self.refinement;
        if r.folds < 2 {
            return bad("refinement.folds must be at least 2".into());
        }
        if r.min_subset == 0 || r.min_subset > r.max_subset {
            return bad(format!("refinement subset range {}..={} is empty", r.min_subset, r.max_subset));
        }
        if r.grid.points().is_empty() {
            return bad("refinement grid is empty".into());
        }
        if r.grid.n_estimators.contains(&0) {
            return bad("refinement grid has a forest with zero trees".into());
        }
        if self.explain.top_k == 0 || self.explain.n_samples < 10 * self.explain.top_k {
            return bad("explain.n_samples must be at least 10 * explain.top_k".into());
        }
        if self.review.page_size == 0 {
            return bad("review.page_size must be positive".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_round_trip_through_toml() {
        for name in ["nsl-kdd", "cicids2017"] {
            let cfg = PipelineConfig::preset(name, Path::new("data"), Path::new("out")).unwrap();
            cfg.validate().unwrap();
            let text = cfg.to_toml().unwrap();
            assert_eq!(PipelineConfig::from_toml_str(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn invalid_values_are_rejected() {
        let cfg = PipelineConfig::nsl_kdd(Path::new("d"), Path::new("o"));
        let text = cfg.to_toml().unwrap().replace("train_fraction = 0.6", "train_fraction = 1.5");
        assert!(matches!(PipelineConfig::from_toml_str(&text), Err(Error::Config(_))));
        assert!(PipelineConfig::from_toml_str("seed = 1").is_err());
    }
}
