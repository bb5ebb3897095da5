use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::forest::{ForestModel, ForestParams};
use super::ig::FeatureScore;
use super::smote::smote_with_origins;
use crate::dataio::FlowDataset;
use crate::error::{Error, Result};
use crate::metrics::confusion;
use crate::seed;

/// Hyperparameter grid; the search evaluates the Cartesian product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestGrid {
    pub n_estimators: Vec<usize>,
    #[serde(with = "default_or_value")]
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_split: Vec<usize>,
    #[serde(with = "default_or_value")]
    pub min_samples_leaf: Vec<Option<usize>>,
}

/// Grid levels are written as integers or the string `"default"`, since
/// config formats without null cannot hold `None` in a list.
mod default_or_value {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Level {
        Value(usize),
        Name(String),
    }

    pub fn serialize<S: Serializer>(v: &[Option<usize>], s: S) -> Result<S::Ok, S::Error> {
        let levels: Vec<Level> = v
            .iter()
            .map(|x| x.map_or_else(|| Level::Name("default".into()), Level::Value))
            .collect();
        levels.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Option<usize>>, D::Error> {
        Vec::<Level>::deserialize(d)?
            .into_iter()
            .map(|l| match l {
                Level::Value(v) => Ok(Some(v)),
                Level::Name(n) if n == "default" => Ok(None),
                Level::Name(n) => Err(serde::de::Error::custom(format!("expected an integer or \"default\", got {n:?}"))),
            })
            .collect()
    }
}

impl ForestGrid {
    /// Estimators 100..=500 step 50, depth {default, 5, 10, 15}, split
    /// 2..=8 step 2, leaf {default, 2, 4, 6}.
    pub fn full() -> Self {
        ForestGrid {
            n_estimators: (100..=500).step_by(50).collect(),
            max_depth: vec![None, Some(5), Some(10), Some(15)],
            min_samples_split: vec![2, 4, 6, 8],
            min_samples_leaf: vec![None, Some(2), Some(4), Some(6)],
        }
    }

    pub fn single(p: ForestParams) -> Self {
        ForestGrid {
            n_estimators: vec![p.n_estimators],
            max_depth: vec![p.max_depth],
            min_samples_split: vec![p.min_samples_split],
            min_samples_leaf: vec![p.min_samples_leaf],
        }
    }

    pub fn points(&self) -> Vec<ForestParams> {
        let mut out = Vec::new();
        for &n_estimators in &self.n_estimators {
            for &max_depth in &self.max_depth {
                for &min_samples_split in &self.min_samples_split {
                    for &min_samples_leaf in &self.min_samples_leaf {
                        out.push(ForestParams {
                            n_estimators,
                            max_depth,
                            min_samples_split,
                            min_samples_leaf,
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementConfig {
    pub grid: ForestGrid,
    pub folds: usize,
    pub min_subset: usize,
    pub max_subset: usize,
    /// Neighbours for SMOTE.
    pub smote_k: usize,
    /// Cap on rows used during the search (stratified subsample); the
    /// winner is always retrained on all rows.
    #[serde(default)]
    pub cv_max_rows: Option<usize>,
}

impl Default for RefinementConfig {
    fn default() -> Self {
        RefinementConfig {
            grid: ForestGrid::full(),
            folds: 10,
            min_subset: 5,
            max_subset: 30,
            smote_k: 5,
            cv_max_rows: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateResult {
    pub subset_size: usize,
    pub params: ForestParams,
    pub mean_f1: f64,
    pub std_f1: f64,
    pub fold_f1: Vec<f64>,
    /// False when some fold lacked a class.
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearchReport {
    pub candidates: Vec<CandidateResult>,
    pub winner: usize,
    pub selected_features: Vec<usize>,
    pub selected_names: Vec<String>,
    pub cv_rows: usize,
    pub train_rows: usize,
}

impl GridSearchReport {
    pub fn winner(&self) -> &CandidateResult {
        &self.candidates[self.winner]
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(
            "subset_size,n_estimators,max_depth,min_samples_split,min_samples_leaf,mean_cv_f1,std_cv_f1,valid,winner\n",
        );
        let opt = |v: Option<usize>| v.map_or("default".to_string(), |v| v.to_string());
        for (i, c) in self.candidates.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{:.6},{:.6},{},{}",
                c.subset_size,
                c.params.n_estimators,
                opt(c.params.max_depth),
                c.params.min_samples_split,
                opt(c.params.min_samples_leaf),
                c.mean_f1,
                c.std_f1,
                c.valid,
                i == self.winner
            );
        }
        s
    }

    pub fn summary(&self) -> String {
        let w = self.winner();
        let valid = self.candidates.iter().filter(|c| c.valid).count();
        format!(
            "grid search: {} candidates ({} valid) on {} rows, {}-fold CV\nwinner: top {} features, {}\nmean CV F1 = {:.4} (std {:.4})\nfeatures: {}\n",
            self.candidates.len(),
            valid,
            self.cv_rows,
            w.fold_f1.len(),
            w.subset_size,
            w.params,
            w.mean_f1,
            w.std_f1,
            self.selected_names.join(", ")
        )
    }
}

/// Origin of a row in a CV training fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RowTag {
    Original(usize),
    Synthetic { parent: usize, neighbor: usize },
}

/// Row provenance of one fold, for leak audits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldAudit {
    pub train: Vec<RowTag>,
    pub validation: Vec<RowTag>,
}

/// Stratified fold assignment: each class is shuffled and dealt round-robin.
pub fn stratified_folds(labels: &[u8], folds: usize, seed_value: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::invalid("cross-validation needs at least 2 folds"));
    }
    let mut rng = seed::rng(seed_value);
    let mut out = vec![Vec::new(); folds];
    let mut offset = 0;
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        for (k, i) in idx.into_iter().enumerate() {
            out[(k + offset) % folds].push(i);
        }
        offset = out.iter().map(Vec::len).sum::<usize>() % folds;
    }
    for f in &mut out {
        f.sort_unstable();
    }
    Ok(out)
}

struct FoldData {
    /// SMOTE-balanced training rows over all features, or `None` when the
    /// fold lacks a class.
    train: Option<FlowDataset>,
    validation: FlowDataset,
    audit: FoldAudit,
}

fn prepare_folds(ds: &FlowDataset, features: &[usize], cfg: &RefinementConfig, seed_value: u64) -> Result<Vec<FoldData>> {
    let labels = ds.labels()?;
    let folds = stratified_folds(labels, cfg.folds, seed::stream_seed(seed_value, "cv-folds"))?;
    let restricted = ds.select_features(features);
    folds
        .iter()
        .enumerate()
        .map(|(f, val_idx)| {
            let train_idx: Vec<usize> = folds
                .iter()
                .enumerate()
                .filter(|(g, _)| *g != f)
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            let train = restricted.select(&train_idx);
            let validation = restricted.select(val_idx);
            let mut tags: Vec<RowTag> = train_idx.iter().map(|&i| RowTag::Original(i)).collect();
            let counts = train.class_counts()?;
            let balanced = if counts[0] >= 2 && counts[1] >= 2 {
                let (b, origins) =
                    smote_with_origins(&train, cfg.smote_k, seed::child_seed(seed::stream_seed(seed_value, "cv-smote"), f as u64))?;
                tags.extend(origins.iter().map(|o| RowTag::Synthetic {
                    parent: train_idx[o.parent],
                    neighbor: train_idx[o.neighbor],
                }));
                Some(b)
            } else {
                None
            };
            Ok(FoldData {
                train: balanced,
                validation,
                audit: FoldAudit {
                    train: tags,
                    validation: val_idx.iter().map(|&i| RowTag::Original(i)).collect(),
                },
            })
        })
        .collect()
}

/// Fold-level CV audit for the given feature subset: which rows each fold
/// trains and validates on after SMOTE.
pub fn audit_folds(ds: &FlowDataset, features: &[usize], cfg: &RefinementConfig, seed_value: u64) -> Result<Vec<FoldAudit>> {
    Ok(prepare_folds(ds, features, cfg, seed_value)?
        .into_iter()
        .map(|f| f.audit)
        .collect())
}

fn fold_f1(fold: &FoldData, cols: &[usize], params: ForestParams, seed_value: u64) -> Result<Option<f64>> {
    let Some(train) = &fold.train else {
        return Ok(None);
    };
    let truth = fold.validation.labels()?;
    if !truth.contains(&0) || !truth.contains(&1) {
        return Ok(None);
    }
    let model = ForestModel::train(train, cols, params, seed_value)?;
    let (pred, _) = model.predict_matrix(&fold.validation.features)?;
    Ok(Some(confusion(&pred, truth)?.f1().value))
}

/// Ordering used to pick the winner: higher mean F1, then smaller subset,
/// fewer trees, shallower depth (unlimited counts as deepest), smaller
/// split size, smaller leaf size.
fn better(a: &CandidateResult, b: &CandidateResult) -> bool {
    let depth = |d: Option<usize>| d.unwrap_or(usize::MAX);
    let leaf = |l: Option<usize>| l.unwrap_or(1);
    if a.valid != b.valid {
        return a.valid;
    }
    if a.mean_f1 != b.mean_f1 {
        return a.mean_f1 > b.mean_f1;
    }
    (a.subset_size, a.params.n_estimators, depth(a.params.max_depth), a.params.min_samples_split, leaf(a.params.min_samples_leaf))
        < (b.subset_size, b.params.n_estimators, depth(b.params.max_depth), b.params.min_samples_split, leaf(b.params.min_samples_leaf))
}

fn stratified_cap(ds: &FlowDataset, cap: Option<usize>, seed_value: u64) -> Result<FlowDataset> {
    match cap {
        Some(c) if c < ds.len() => {
            let (part, _) = crate::dataio::stratified_split(ds, c as f64 / ds.len() as f64, seed_value)?;
            log::info!("grid search on a stratified subsample of {} / {} rows", part.len(), ds.len());
            Ok(part)
        }
        _ => Ok(ds.clone()),
    }
}

/// Incremental feature-subset grid search with SMOTE inside each CV
/// training fold, then a final fit of the winner on the SMOTE-balanced full
/// training set.
pub fn train_refinement(
    train: &FlowDataset,
    ig_ranking: &[FeatureScore],
    cfg: &RefinementConfig,
    seed_value: u64,
) -> Result<(ForestModel, GridSearchReport)> {
    let points = cfg.grid.points();
    if points.is_empty() {
        return Err(Error::invalid("refinement grid is empty"));
    }
    let n_feat = ig_ranking.len().min(train.n_features());
    let max_subset = cfg.max_subset.min(n_feat);
    if cfg.max_subset > n_feat {
        log::info!("feature subsets capped at {n_feat} available features");
    }
    let min_subset = cfg.min_subset.min(max_subset).max(1);
    let ranked: Vec<usize> = ig_ranking.iter().map(|s| s.feature).collect();

    let search = stratified_cap(train, cfg.cv_max_rows, seed::stream_seed(seed_value, "cv-cap"))?;
    // SMOTE neighbours depend on the feature space, so each subset gets
    // its own balanced folds. Fold membership is identical across subsets.
    let subsets: Vec<usize> = (min_subset..=max_subset).collect();
    let fold_sets: Vec<Vec<FoldData>> = subsets
        .par_iter()
        .map(|&s| prepare_folds(&search, &ranked[..s], cfg, seed_value))
        .collect::<Result<_>>()?;
    let forest_seed = seed::stream_seed(seed_value, "cv-forest");

    let jobs: Vec<(usize, ForestParams)> = (0..subsets.len())
        .flat_map(|si| points.iter().map(move |&p| (si, p)))
        .collect();
    let candidates: Vec<CandidateResult> = jobs
        .par_iter()
        .map(|&(si, params)| {
            let s = subsets[si];
            let cols: Vec<usize> = (0..s).collect();
            let scores: Vec<Option<f64>> = fold_sets[si]
                .iter()
                .enumerate()
                .map(|(f, fold)| fold_f1(fold, &cols, params, seed::child_seed(forest_seed, f as u64)))
                .collect::<Result<_>>()?;
            let valid = scores.iter().all(Option::is_some);
            let fold_f1: Vec<f64> = scores.into_iter().flatten().collect();
            let mean = if fold_f1.is_empty() {
                0.0
            } else {
                fold_f1.iter().sum::<f64>() / fold_f1.len() as f64
            };
            let var = if fold_f1.is_empty() {
                0.0
            } else {
                fold_f1.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / fold_f1.len() as f64
            };
            Ok(CandidateResult {
                subset_size: s,
                params,
                mean_f1: mean,
                std_f1: var.sqrt(),
                fold_f1,
                valid,
            })
        })
        .collect::<Result<_>>()?;

    let winner = (0..candidates.len())
        .reduce(|best, i| if better(&candidates[i], &candidates[best]) { i } else { best })
        .expect("non-empty grid");
    if !candidates[winner].valid {
        return Err(Error::MissingClass("every grid point had a single-class fold".into()));
    }
    let w = &candidates[winner];
    let selected: Vec<usize> = ranked[..w.subset_size].to_vec();
    let restricted = train.select_features(&selected);
    let balanced = smote_with_origins(&restricted, cfg.smote_k, seed::stream_seed(seed_value, "final-smote"))?.0;
    let all: Vec<usize> = (0..selected.len()).collect();
    let mut model = ForestModel::train(&balanced, &all, w.params, seed::stream_seed(seed_value, "final-forest"))?;
    model.selected_features = selected.clone();
    model.feature_names = selected.iter().map(|&j| train.feature_names[j].clone()).collect();
    model.n_input_features = train.n_features();

    let report = GridSearchReport {
        winner,
        selected_names: model.feature_names.clone(),
        selected_features: selected,
        cv_rows: search.len(),
        train_rows: train.len(),
        candidates,
    };
    Ok((model, report))
}
