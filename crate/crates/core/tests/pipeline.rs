mod common;

use flowsentry::ensemble::{build_ensemble, EnsembleConfig, VotingMode};
use flowsentry::pipeline::{
    cmd_explain, load_artifact, load_split, ExplainTarget, Layout, PipelineConfig, RunArtifact,
};
use flowsentry::refinement::{ForestModel, ForestParams};
use flowsentry::Error;

#[test]
fn synthetic_run_writes_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::smoke_run(dir.path());
    let layout = Layout::new(&cfg.output_dir);
    for report in [
        "prepare.txt",
        "learner_weights.csv",
        "ensemble_metrics.csv",
        "tie_rates.csv",
        "ig_ranking.csv",
        "grid_search.csv",
        "final_metrics.csv",
        "fpr_ablation.csv",
        "class_rates.csv",
        "surrogate_rules.txt",
        "surrogate_rules.csv",
    ] {
        assert!(layout.report(report).exists(), "{report} missing");
    }
    assert!(layout.config().exists());

    let run = RunArtifact::load(&layout.run()).unwrap();
    let ens = run.ensemble().unwrap();
    assert_eq!(ens.n_learners(), 12);
    let stage = run.refinement().unwrap();
    assert!((5..=7).contains(&stage.forest.selected_features.len()));
    let fin = run.final_report.as_ref().expect("final report");
    assert_eq!(fin.metrics.len(), 3);
    let s = run.surrogate.as_ref().expect("surrogate");
    assert!(s.surrogate.fidelity > 0.8, "{}", s.surrogate.fidelity);
    // Rules partition the surrogate's training rows.
    let covered: usize = s.rules.rules.iter().map(|r| r.coverage).sum();
    assert_eq!(covered, s.rules.n_rows);

    // Reloaded config matches what was run.
    let back = PipelineConfig::from_file(&layout.config()).unwrap();
    assert_eq!(back, cfg);

    let (expl, wrong, text) = cmd_explain(&cfg, &ExplainTarget::Ids(vec![0, 3])).unwrap();
    assert_eq!(expl.len(), 2);
    assert_eq!(wrong.len(), 2);
    assert!(text.contains("instance 3"));
    assert!(layout.report("explanations/test_3.json").exists());
    let err = cmd_explain(&cfg, &ExplainTarget::Ids(vec![1_000_000])).unwrap_err();
    assert!(matches!(err, Error::NotFound(_)), "{err}");
    let (errs, wrong, _) = cmd_explain(&cfg, &ExplainTarget::Errors(2)).unwrap();
    assert!(errs.len() <= 2 && wrong.iter().all(|&w| w));
}

#[test]
fn artifact_round_trip_is_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::smoke_run(dir.path());
    let layout = Layout::new(&cfg.output_dir);
    let run = RunArtifact::load(&layout.run()).unwrap();

    // 1,000-row probe cycled from the test split.
    let test = load_split(&cfg, "test").unwrap();
    let idx: Vec<usize> = (0..1000).map(|i| (i * 7) % test.len()).collect();
    let probe = test.features.select_rows(&idx);

    let copy = dir.path().join("copy.json");
    run.save(&copy).unwrap();
    let back = RunArtifact::load(&copy).unwrap();
    for mode in [VotingMode::Majority, VotingMode::Weighted] {
        let (la, sa) = run.predict_ensemble(&probe, mode).unwrap();
        let (lb, sb) = back.predict_ensemble(&probe, mode).unwrap();
        assert_eq!(la, lb);
        assert!(sa.iter().zip(&sb).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
    let (la, pa) = run.predict_final(&probe).unwrap();
    let (lb, pb) = back.predict_final(&probe).unwrap();
    assert_eq!(la, lb);
    assert!(pa.iter().zip(&pb).all(|(a, b)| a.to_bits() == b.to_bits()));

    // Saving the reloaded run reproduces the file byte for byte.
    let again = dir.path().join("again.json");
    back.save(&again).unwrap();
    assert_eq!(std::fs::read(&copy).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn tampered_artifact_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("a.json");
    let payload = vec![1.5f64, 2.5, -0.25];
    flowsentry::pipeline::save_artifact(&path, &payload).unwrap();
    let back: Vec<f64> = load_artifact(&path).unwrap();
    assert_eq!(back, payload);

    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("2.5", "2.75")).unwrap();
    assert!(matches!(load_artifact::<Vec<f64>>(&path), Err(Error::Artifact(_))));
    std::fs::write(&path, "{\"format\":\"something-else\"}\n[]").unwrap();
    assert!(load_artifact::<Vec<f64>>(&path).is_err());
    assert!(load_artifact::<Vec<f64>>(&dir.path().join("missing.json")).is_err());
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::smoke_config(dir.path());
    flowsentry::pipeline::cmd_prepare(&cfg).unwrap();
    let train = load_split(&cfg, "train").unwrap();
    let validation = load_split(&cfg, "validation").unwrap();

    let ens_cfg = EnsembleConfig {
        n_lof: 3,
        n_iforest: 3,
        ..cfg.ensemble.clone()
    };
    let fit = |threads| {
        in_pool(threads, || {
            let mut e = build_ensemble(&train, &ens_cfg, 5).unwrap();
            e.weigh_learners(&validation).unwrap();
            let votes = e.votes(&validation.features).unwrap();
            let preds = e.predict_table(&votes, VotingMode::Weighted).unwrap();
            (serde_json::to_string(&e).unwrap(), serde_json::to_string(&preds).unwrap())
        })
    };
    assert_eq!(fit(1), fit(4));

    let features: Vec<usize> = (0..8).collect();
    let params = ForestParams {
        n_estimators: 12,
        max_depth: Some(6),
        min_samples_split: 2,
        min_samples_leaf: None,
    };
    let forest = |threads| {
        in_pool(threads, || {
            let m = ForestModel::train(&validation, &features, params, 9).unwrap();
            let (_, p) = m.predict_matrix(&validation.features).unwrap();
            (serde_json::to_string(&m).unwrap(), p.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        })
    };
    assert_eq!(forest(1), forest(3));
}

#[test]
fn prepared_splits_respect_the_protocol() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = common::smoke_config(dir.path());
    flowsentry::pipeline::cmd_prepare(&cfg).unwrap();
    let train = load_split(&cfg, "train").unwrap();
    let val = load_split(&cfg, "validation").unwrap();
    let test = load_split(&cfg, "test").unwrap();
    // Detectors see benign traffic only.
    assert_eq!(train.class_counts().unwrap()[1], 0);
    assert_eq!(train.n_features(), val.n_features());
    assert_eq!(val.feature_names, test.feature_names);
    let pool = val.len() + test.len();
    let want = (cfg.dataset.validation_fraction * pool as f64).round() as usize;
    assert!(val.len().abs_diff(want) <= 2, "{} vs {want}", val.len());
    // Scaled into the unit range on the fitting split; held-out rows may
    // exceed it slightly but stay finite.
    assert!(train.features.as_slice().iter().all(|v| (-1e-9..=1.0 + 1e-9).contains(v)));
    assert!(test.features.as_slice().iter().all(|v| v.is_finite()));
}
