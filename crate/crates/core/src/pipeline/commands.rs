use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use super::artifact::{
    EnsembleErrorDiagnostic, EnsembleReport, FinalReport, FprAblation, PreparedInfo, RefinementStage, RunArtifact,
    SplitSizes, SurrogateStage, TieRates,
};
use super::config::PipelineConfig;
use super::review::ReviewSession;
use crate::dataio::{
    apply_minmax, clean, fit_minmax, load_flow_csvs, stratified_split, CleaningReport, FeatureSchema, FlowDataset,
    OneHotEncoder,
};
use crate::ensemble::{build_ensemble, tie_rate, VotingMode};
use crate::error::{Error, Result};
use crate::explain::{explain_batch, extract_rules, fit_surrogate, LocalExplanation, TrainStats};
use crate::metrics::{class_rates, metrics_csv, metrics_text, ClassRateTable, MetricsRow};
use crate::refinement::{
    build_training_corpus, information_gain, make_pseudo_labels, train_refinement, PseudoLabelSet, PseudoMode,
};
use crate::seed;

/// File locations under the output directory.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout { root: root.to_path_buf() }
    }

    pub fn run(&self) -> PathBuf {
        self.root.join("run.json")
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.resolved.toml")
    }

    pub fn split(&self, name: &str) -> PathBuf {
        self.root.join("prepared").join(format!("{name}.csv"))
    }

    pub fn report(&self, name: &str) -> PathBuf {
        self.root.join("reports").join(name)
    }

    pub fn decision_log(&self) -> PathBuf {
        self.root.join("review").join("decisions.jsonl")
    }

    pub fn reviewed_set(&self) -> PathBuf {
        self.root.join("review").join("reviewed_pseudo_labels.json")
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(d) = path.parent() {
        std::fs::create_dir_all(d).map_err(|e| Error::io(d, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_config(cfg: &PipelineConfig) -> Result<()> {
    write_text(&Layout::new(&cfg.output_dir).config(), &cfg.to_toml()?)
}

fn load_run(cfg: &PipelineConfig) -> Result<RunArtifact> {
    let path = Layout::new(&cfg.output_dir).run();
    if !path.exists() {
        return Err(Error::Artifact(format!("{} not found; run prepare first", path.display())));
    }
    let mut run = RunArtifact::load(&path)?;
    run.config = cfg.clone();
    Ok(run)
}

fn save_run(run: &RunArtifact) -> Result<()> {
    write_config(&run.config)?;
    run.save(&Layout::new(&run.config.output_dir).run())?;
    Ok(())
}

/// Load a prepared split.
pub fn load_split(cfg: &PipelineConfig, name: &str) -> Result<FlowDataset> {
    let path = Layout::new(&cfg.output_dir).split(name);
    Ok(FlowDataset::read_csv(&path)?.with_provenance(name))
}

/// Per-class random subsample keeping `round(f * n_c)` rows of each class
/// (at least one of any class present). Works on single-class inputs.
fn subsample(ds: &FlowDataset, fraction: f64, seed_value: u64) -> Result<FlowDataset> {
    if fraction >= 1.0 {
        return Ok(ds.clone());
    }
    let labels = ds.labels()?;
    let mut rng = seed::rng(seed_value);
    let mut keep = Vec::new();
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        idx.shuffle(&mut rng);
        let take = ((fraction * idx.len() as f64).round() as usize).max(1);
        keep.extend_from_slice(&idx[..take]);
    }
    keep.sort_unstable();
    log::info!("subsample {fraction}: {} of {} rows", keep.len(), ds.len());
    Ok(ds.select(&keep))
}

fn load_and_clean(paths: &[PathBuf], schema: &FeatureSchema, tag: &str) -> Result<(FlowDataset, CleaningReport)> {
    let raw = load_flow_csvs(paths, schema)?;
    let (ds, report) = clean(&raw)?;
    log::info!("{tag}: {}", report.to_string().replace('\n', "; "));
    Ok((ds.with_provenance(tag), report))
}

/// Load, clean, encode, split and scale. Writes the three splits and starts
/// a fresh run artifact.
pub fn cmd_prepare(cfg: &PipelineConfig) -> Result<String> {
    cfg.validate()?;
    let layout = Layout::new(&cfg.output_dir);
    let schema = cfg.schema()?;
    let d = &cfg.dataset;
    let (mut primary, rep_p) = load_and_clean(&d.primary, &schema, "primary")?;
    let mut cleaning = vec![("primary".to_string(), rep_p)];
    let mut extra = None;
    if !d.extra.is_empty() {
        let (e, rep_e) = load_and_clean(&d.extra, &schema, "extra")?;
        cleaning.push(("extra".to_string(), rep_e));
        extra = Some(e);
    }
    if let Some(f) = d.subsample {
        primary = subsample(&primary, f, seed::stream_seed(cfg.seed, "subsample-primary"))?;
        extra = extra
            .map(|e| subsample(&e, f, seed::stream_seed(cfg.seed, "subsample-extra")))
            .transpose()?;
    }

    let cats: Vec<String> = primary.categoricals.iter().map(|c| c.name.clone()).collect();
    let encoder = OneHotEncoder::fit(&primary, &cats)?;
    let primary = encoder.transform(&primary)?;
    let extra = extra.map(|e| encoder.transform(&e)).transpose()?;

    let (part, rest) = if d.train_fraction < 1.0 {
        let (a, b) = stratified_split(&primary, d.train_fraction, seed::stream_seed(cfg.seed, "split-train"))?;
        (a, Some(b))
    } else {
        (primary, None)
    };
    let scaler = fit_minmax(&part)?;
    let part = apply_minmax(&part, &scaler)?;
    let train = part.filter_label(0)?;
    let pool = match (rest, extra) {
        (Some(r), Some(e)) => r.concat(&e)?,
        (Some(r), None) => r,
        (None, Some(e)) => e,
        (None, None) => return Err(Error::Config("no rows left for validation and test".into())),
    };
    let pool = apply_minmax(&pool, &scaler)?;
    let (validation, test) = stratified_split(&pool, d.validation_fraction, seed::stream_seed(cfg.seed, "split-val"))?;

    std::fs::create_dir_all(layout.root.join("prepared")).map_err(|e| Error::io(&layout.root, e))?;
    train.write_csv(&layout.split("train"))?;
    validation.write_csv(&layout.split("validation"))?;
    test.write_csv(&layout.split("test"))?;

    let sizes = SplitSizes {
        train_benign: train.len(),
        validation: validation.len(),
        validation_attack: validation.class_counts()?[1],
        test: test.len(),
        test_attack: test.class_counts()?[1],
    };
    let mut run = RunArtifact::new(cfg.clone());
    run.prepared = Some(PreparedInfo {
        schema,
        encoder,
        scaler,
        feature_names: train.feature_names.clone(),
        cleaning: cleaning.clone(),
        sizes: sizes.clone(),
    });
    save_run(&run)?;

    let mut s = String::new();
    for (tag, r) in &cleaning {
        let _ = writeln!(s, "[{tag}]\n{r}");
    }
    let _ = writeln!(
        s,
        "features: {}\ntrain (benign only): {}\nvalidation: {} ({} attack)\ntest: {} ({} attack)",
        train.n_features(),
        sizes.train_benign,
        sizes.validation,
        sizes.validation_attack,
        sizes.test,
        sizes.test_attack
    );
    write_text(&layout.report("prepare.txt"), &s)?;
    Ok(s)
}

/// Fit the ensemble on benign training rows and weight learners by their
/// validation F1.
pub fn cmd_train_ensemble(cfg: &PipelineConfig) -> Result<String> {
    let mut run = load_run(cfg)?;
    let train = load_split(cfg, "train")?;
    let validation = load_split(cfg, "validation")?;
    let mut model = build_ensemble(&train, &cfg.ensemble, cfg.seed)?;
    let (weights, _) = model.weigh_learners(&validation)?;
    let mut csv = String::from("learner,kind,weight\n");
    for (i, (l, w)) in model.learners.iter().zip(&weights).enumerate() {
        let _ = writeln!(csv, "{i},{},{w}", l.kind);
    }
    write_text(&Layout::new(&cfg.output_dir).report("learner_weights.csv"), &csv)?;
    let mean = weights.iter().sum::<f64>() / weights.len() as f64;
    let summary = format!(
        "ensemble: {} learners ({} LOF, {} iForest), bootstrap size {}\nmean learner validation F1 = {mean:.4}\n",
        model.n_learners(),
        cfg.ensemble.n_lof,
        cfg.ensemble.n_iforest,
        model.bootstrap_size
    );
    run.ensemble = Some(model);
    run.ensemble_report = None;
    run.refinement = None;
    run.final_report = None;
    run.surrogate = None;
    save_run(&run)?;
    Ok(summary)
}

fn grouped_classes(run: &RunArtifact, ds: &FlowDataset) -> Result<Vec<String>> {
    let schema = &run
        .prepared
        .as_ref()
        .ok_or_else(|| Error::Artifact("run has no preparation record".into()))?
        .schema;
    let classes = ds
        .classes
        .as_ref()
        .ok_or_else(|| Error::MissingClass("dataset has no class column".into()))?;
    Ok(classes.iter().map(|c| schema.group_of(c).to_string()).collect())
}

/// Test-set metrics for both voting rules plus tie rates.
pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<String> {
    let mut run = load_run(cfg)?;
    let test = load_split(cfg, "test")?;
    let truth = test.labels()?;
    let ens = run.ensemble()?;
    let votes = ens.votes(&test.features)?;
    let mv = ens.predict_table(&votes, VotingMode::Majority)?;
    let wmv = ens.predict_table(&votes, VotingMode::Weighted)?;
    let labels = |p: &[crate::ensemble::VotePrediction]| p.iter().map(|v| v.label).collect::<Vec<u8>>();
    let shares = |p: &[crate::ensemble::VotePrediction]| p.iter().map(|v| v.attack_share()).collect::<Vec<f64>>();
    let metrics = vec![
        MetricsRow::evaluate("Majority-vote ensemble", &labels(&mv), truth, Some(&shares(&mv)))?,
        MetricsRow::evaluate("Weighted-vote ensemble", &labels(&wmv), truth, Some(&shares(&wmv)))?,
    ];
    let ties = TieRates {
        majority: tie_rate(&mv),
        weighted: tie_rate(&wmv),
    };
    let chosen = if cfg.voting == VotingMode::Weighted { &wmv } else { &mv };
    let rates = class_rates(&labels(chosen), truth, &grouped_classes(&run, &test)?)?;

    let layout = Layout::new(&cfg.output_dir);
    write_text(&layout.report("ensemble_metrics.csv"), &metrics_csv(&metrics))?;
    let tie_csv = format!("mode,tie_rate\nmv,{}\nwmv,{}\n", ties.majority, ties.weighted);
    write_text(&layout.report("tie_rates.csv"), &tie_csv)?;
    write_text(&layout.report("ensemble_class_rates.csv"), &rates.to_csv())?;
    let text = format!(
        "{}\ntie rate: MV {:.4}% / WMV {:.4}%\n",
        metrics_text(&metrics),
        100.0 * ties.majority,
        100.0 * ties.weighted
    );
    write_text(&layout.report("ensemble_metrics.txt"), &text)?;
    run.ensemble_report = Some(EnsembleReport {
        metrics,
        tie_rates: ties,
        class_rates: rates,
    });
    save_run(&run)?;
    Ok(text)
}

/// Pseudo-labels for the validation set under the configured mode.
pub fn pseudo_labels(cfg: &PipelineConfig, run: &RunArtifact, validation: &FlowDataset) -> Result<PseudoLabelSet> {
    let (preds, _) = run.predict_ensemble(&validation.features, cfg.voting)?;
    match cfg.pseudo_mode {
        PseudoMode::Reviewed => {
            let layout = Layout::new(&cfg.output_dir);
            if cfg.review.auto_accept && !layout.reviewed_set().exists() {
                let mut session = ReviewSession::open(cfg, run, validation)?;
                let n = session.auto_accept()?;
                log::info!("auto-accept approved {n} pending items");
                session.finalize()?;
            }
            let path = layout.reviewed_set();
            if !path.exists() {
                return Err(Error::NotFound(format!(
                    "{} not found; finalize a review session first",
                    path.display()
                )));
            }
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let set: PseudoLabelSet = serde_json::from_str(&text)?;
            if set.mode != PseudoMode::Reviewed {
                return Err(Error::Artifact("reviewed set has the wrong mode".into()));
            }
            Ok(set)
        }
        mode => make_pseudo_labels(&preds, mode, Some(validation.labels()?), None),
    }
}

/// Build the pseudo-labelled corpus and train the refinement forest.
pub fn cmd_refine(cfg: &PipelineConfig) -> Result<String> {
    let mut run = load_run(cfg)?;
    let train = load_split(cfg, "train")?;
    let validation = load_split(cfg, "validation")?;
    let pseudo = pseudo_labels(cfg, &run, &validation)?;
    if pseudo.is_empty() {
        return Err(Error::Empty("no pseudo-labelled rows".into()));
    }
    let (corpus, stats) = build_training_corpus(&validation, &pseudo, &train)?;
    let ig = information_gain(&corpus)?;
    let (forest, report) = train_refinement(&corpus, &ig, &cfg.refinement, cfg.seed)?;
    let selected = corpus.select_features(&forest.selected_features);
    let explain_stats = TrainStats::fit(&selected.features, &selected.feature_names)?;

    let layout = Layout::new(&cfg.output_dir);
    let mut ig_csv = String::from("rank,feature,name,information_gain\n");
    for (r, s) in ig.iter().enumerate() {
        let _ = writeln!(ig_csv, "{},{},{},{}", r + 1, s.feature, s.name, s.ig);
    }
    write_text(&layout.report("ig_ranking.csv"), &ig_csv)?;
    write_text(&layout.report("grid_search.csv"), &report.to_csv())?;
    let summary = format!(
        "pseudo-labels ({:?}): {} rows ({} undecided)\ncorpus: {} pseudo + {} benign - {} duplicates = {}\n{}",
        pseudo.mode,
        pseudo.len(),
        pseudo.undecided,
        stats.pseudo_rows,
        stats.benign_rows,
        stats.duplicates_removed,
        stats.total,
        report.summary()
    );
    write_text(&layout.report("refinement.txt"), &summary)?;
    run.refinement = Some(RefinementStage {
        pseudo,
        corpus: stats,
        ig_ranking: ig,
        forest,
        grid: report,
        explain_stats,
    });
    run.final_report = None;
    run.surrogate = None;
    save_run(&run)?;
    Ok(summary)
}

fn class_rate_comparison(a: &ClassRateTable, b: &ClassRateTable) -> String {
    let mut s = String::from("class,count,ensemble_rate,final_rate\n");
    for (name, r) in &a.rows {
        let f = b.rate(name).unwrap_or(f64::NAN);
        let _ = writeln!(s, "{name},{},{},{}", r.count, r.rate, f);
    }
    s
}

/// Final-framework metrics, FPR ablation, class rates and the
/// ensemble-errors diagnostic on the test set.
pub fn cmd_evaluate_final(cfg: &PipelineConfig) -> Result<String> {
    let mut run = load_run(cfg)?;
    let test = load_split(cfg, "test")?;
    let truth = test.labels()?;
    let ens = run.ensemble()?;
    let votes = ens.votes(&test.features)?;
    let mv = ens.predict_table(&votes, VotingMode::Majority)?;
    let wmv = ens.predict_table(&votes, VotingMode::Weighted)?;
    let chosen = if cfg.voting == VotingMode::Weighted { &wmv } else { &mv };
    let ens_pred: Vec<u8> = chosen.iter().map(|p| p.label).collect();
    let ens_score: Vec<f64> = chosen.iter().map(|p| p.attack_share()).collect();
    let mv_pred: Vec<u8> = mv.iter().map(|p| p.label).collect();
    let mv_score: Vec<f64> = mv.iter().map(|p| p.attack_share()).collect();
    let (final_pred, final_prob) = run.predict_final(&test.features)?;

    let metrics = vec![
        MetricsRow::evaluate("Majority-vote ensemble", &mv_pred, truth, Some(&mv_score))?,
        MetricsRow::evaluate("Weighted-vote ensemble", &ens_pred, truth, Some(&ens_score))?,
        MetricsRow::evaluate("Final combined", &final_pred, truth, Some(&final_prob))?,
    ];
    let ens_fpr = metrics[1].fpr.value;
    let fin_fpr = metrics[2].fpr.value;
    let ablation = FprAblation {
        ensemble_fpr: ens_fpr,
        final_fpr: fin_fpr,
        relative_reduction: if ens_fpr > 0.0 { (ens_fpr - fin_fpr) / ens_fpr } else { 0.0 },
    };
    let groups = grouped_classes(&run, &test)?;
    let rates_ens = class_rates(&ens_pred, truth, &groups)?;
    let rates_fin = class_rates(&final_pred, truth, &groups)?;

    let wrong: Vec<usize> = (0..truth.len()).filter(|&i| ens_pred[i] != truth[i]).collect();
    let fp = wrong.iter().filter(|&&i| truth[i] == 0).count();
    let corrected = wrong.iter().filter(|&&i| final_pred[i] == truth[i]).count();
    let sub_truth: Vec<u8> = wrong.iter().map(|&i| truth[i]).collect();
    let sub_pred: Vec<u8> = wrong.iter().map(|&i| final_pred[i]).collect();
    let diag = EnsembleErrorDiagnostic {
        ensemble_errors: wrong.len(),
        false_positives: fp,
        false_negatives: wrong.len() - fp,
        corrected_by_forest: corrected,
        corrected_rate: if wrong.is_empty() { 0.0 } else { corrected as f64 / wrong.len() as f64 },
        metrics: if wrong.is_empty() {
            None
        } else {
            Some(MetricsRow::evaluate("Forest on ensemble errors", &sub_pred, &sub_truth, None)?)
        },
    };

    let layout = Layout::new(&cfg.output_dir);
    write_text(&layout.report("final_metrics.csv"), &metrics_csv(&metrics))?;
    write_text(
        &layout.report("fpr_ablation.csv"),
        &format!(
            "stage,fpr\nweighted_ensemble,{}\nfinal_combined,{}\nrelative_reduction,{}\n",
            ablation.ensemble_fpr, ablation.final_fpr, ablation.relative_reduction
        ),
    )?;
    write_text(&layout.report("class_rates.csv"), &class_rate_comparison(&rates_ens, &rates_fin))?;
    let mut text = metrics_text(&metrics);
    let _ = writeln!(
        text,
        "\nFPR: ensemble {:.2}% -> final {:.2}% (relative reduction {:.1}%)",
        100.0 * ablation.ensemble_fpr,
        100.0 * ablation.final_fpr,
        100.0 * ablation.relative_reduction
    );
    let _ = writeln!(text, "\nclass detection rates (ensemble -> final):");
    for (name, r) in &rates_ens.rows {
        let _ = writeln!(
            text,
            "  {name:<16} n={:<7} {:>7.2}% -> {:>7.2}%",
            r.count,
            100.0 * r.rate,
            100.0 * rates_fin.rate(name).unwrap_or(f64::NAN)
        );
    }
    let _ = writeln!(
        text,
        "\nensemble errors: {} ({} FP, {} FN); forest corrects {} ({:.2}%)",
        diag.ensemble_errors,
        diag.false_positives,
        diag.false_negatives,
        diag.corrected_by_forest,
        100.0 * diag.corrected_rate
    );
    write_text(&layout.report("final_metrics.txt"), &text)?;
    run.final_report = Some(FinalReport {
        metrics,
        fpr_ablation: ablation,
        class_rates_ensemble: rates_ens,
        class_rates_final: rates_fin,
        ensemble_errors: diag,
    });
    save_run(&run)?;
    Ok(text)
}

/// Which test rows to explain.
#[derive(Debug, Clone)]
pub enum ExplainTarget {
    Ids(Vec<usize>),
    /// Rows the final model misclassifies, at most this many.
    Errors(usize),
}

/// LIME explanations of test rows under the refinement forest. Returns the
/// explanations and whether each row was misclassified.
pub fn cmd_explain(cfg: &PipelineConfig, target: &ExplainTarget) -> Result<(Vec<LocalExplanation>, Vec<bool>, String)> {
    let run = load_run(cfg)?;
    let stage = run.refinement()?;
    let test = load_split(cfg, "test")?;
    let truth = test.labels()?;
    let sel = test.select_features(&stage.forest.selected_features);
    let (pred, _) = stage.forest.predict_matrix(&test.features)?;
    let ids: Vec<usize> = match target {
        ExplainTarget::Ids(ids) => {
            if let Some(&bad) = ids.iter().find(|&&i| i >= test.len()) {
                return Err(Error::NotFound(format!("test row {bad} (test set has {} rows)", test.len())));
            }
            ids.clone()
        }
        ExplainTarget::Errors(limit) => (0..test.len()).filter(|&i| pred[i] != truth[i]).take(*limit).collect(),
    };
    let instances: Vec<(String, Vec<f64>)> = ids.iter().map(|&i| (i.to_string(), sel.features.row(i).to_vec())).collect();
    let seed_value = seed::stream_seed(cfg.seed, "explain");
    let expl = explain_batch(&stage.forest, &instances, &stage.explain_stats, &cfg.explain, seed_value)?;
    let wrong: Vec<bool> = ids.iter().map(|&i| pred[i] != truth[i]).collect();

    let layout = Layout::new(&cfg.output_dir);
    let mut text = String::new();
    for ((e, &w), &i) in expl.iter().zip(&wrong).zip(&ids) {
        let truth_name = if truth[i] == 1 { "attack" } else { "benign" };
        let class = test.classes.as_ref().map_or("", |c| c[i].as_str());
        let _ = writeln!(
            text,
            "{}truth: {truth_name} ({class}){}",
            e.to_text(),
            if w { "  MISCLASSIFIED" } else { "" }
        );
        write_text(
            &layout.report(&format!("explanations/test_{i}.json")),
            &serde_json::to_string_pretty(e)?,
        )?;
    }
    write_text(&layout.report("explanations/summary.txt"), &text)?;
    Ok((expl, wrong, text))
}

/// Fit the global surrogate to the forest on the test set and extract rules.
pub fn cmd_surrogate(cfg: &PipelineConfig) -> Result<String> {
    let mut run = load_run(cfg)?;
    let stage = run.refinement()?;
    let test = load_split(cfg, "test")?;
    let sel = test.select_features(&stage.forest.selected_features);
    let surrogate = fit_surrogate(
        &stage.forest,
        &sel.features,
        &sel.feature_names,
        &cfg.surrogate,
        seed::stream_seed(cfg.seed, "surrogate"),
    )?;
    let rules = extract_rules(&surrogate.tree, &surrogate.feature_names, &sel.features, &surrogate.reference_labels)?;
    let layout = Layout::new(&cfg.output_dir);
    write_text(&layout.report("surrogate_rules.txt"), &rules.to_text())?;
    write_text(&layout.report("surrogate_rules.csv"), &rules.to_csv())?;
    let summary = format!(
        "surrogate: depth {}, {} leaves, fidelity {:.4}% on {} rows\n",
        surrogate.tree.depth(),
        surrogate.tree.n_leaves(),
        100.0 * surrogate.fidelity,
        surrogate.training_size
    );
    write_text(&layout.report("surrogate.txt"), &summary)?;
    run.surrogate = Some(SurrogateStage { surrogate, rules });
    save_run(&run)?;
    Ok(summary)
}

/// prepare, train-ensemble, evaluate, refine, evaluate-final, surrogate.
pub fn cmd_run_all(cfg: &PipelineConfig) -> Result<String> {
    let steps: [(&str, fn(&PipelineConfig) -> Result<String>); 6] = [
        ("prepare", cmd_prepare),
        ("train-ensemble", cmd_train_ensemble),
        ("evaluate", cmd_evaluate),
        ("refine", cmd_refine),
        ("evaluate-final", cmd_evaluate_final),
        ("surrogate", cmd_surrogate),
    ];
    let mut out = String::new();
    for (name, f) in steps {
        let t = std::time::Instant::now();
        let s = f(cfg)?;
        let _ = writeln!(out, "== {name} ({:.1}s)\n{s}", t.elapsed().as_secs_f64());
        log::info!("{name} finished in {:.1}s", t.elapsed().as_secs_f64());
    }
    Ok(out)
}
