//! Acceptance checks, one line per criterion.
//!
//! Criteria that need the public corpora look for them in
//! `FLOWSENTRY_NSLKDD_DIR` (KDDTrain+.txt, KDDTest+.txt) and
//! `FLOWSENTRY_CICIDS_DIR` (the eight CICIDS2017 day files), falling back to
//! `data/nsl-kdd` and `data/cicids2017` under the workspace root. Without
//! the data those lines print FAIL with the reason; they do not change the
//! exit status, which reflects only criteria that could be evaluated.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::Rng;

use flowsentry::dataio::FlowDataset;
use flowsentry::detectors::{average_path_length, calibrate_threshold, fit_iforest, fit_lof, MaxSamples};
use flowsentry::ensemble::{
    build_ensemble, majority_vote, weighted_vote, EnsembleConfig, IForestParams, VotePrediction, VotingMode,
};
use flowsentry::explain::{extract_rules, lime_explain, FnClassifier, LimeConfig, TrainStats};
use flowsentry::pipeline::review::{replay, ReviewSession};
use flowsentry::pipeline::{
    cmd_evaluate, cmd_evaluate_final, cmd_prepare, cmd_refine, cmd_run_all, cmd_train_ensemble,
    load_split, Layout, PipelineConfig, QueueOrder, RunArtifact,
};
use flowsentry::refinement::{
    audit_folds, information_gain, smote_with_origins, AnalystAction, PseudoMode, RefinementConfig, RowTag,
};
use flowsentry::synth::{write_synthetic_kdd, SynthKddConfig};
use flowsentry::tree::{DecisionTree, TreeNode};
use flowsentry::{seed, Matrix};

enum Outcome {
    Pass(String),
    Fail(String),
    /// Needs a dataset that is not present.
    NoData(String),
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn data_dir(var: &str, fallback: &str) -> PathBuf {
    std::env::var_os(var)
        .map(PathBuf::from)
        .unwrap_or_else(|| workspace_root().join("data").join(fallback))
}

fn matrix(rng: &mut impl Rng, n: usize, d: usize) -> Matrix {
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
    Matrix::from_rows(&rows).unwrap()
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

// ---------------------------------------------------------------- LOF

/// LOF from all pairwise distances.
struct BruteLof {
    refs: Vec<Vec<f64>>,
    k: usize,
    kdist: Vec<f64>,
    lrd: Vec<f64>,
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

impl BruteLof {
    fn neighbours(refs: &[Vec<f64>], p: &[f64], k: usize, skip: Option<usize>) -> Vec<(f64, usize)> {
        let mut d: Vec<(f64, usize)> = refs
            .iter()
            .enumerate()
            .filter(|(i, _)| Some(*i) != skip)
            .map(|(i, r)| (dist(p, r), i))
            .collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        d.truncate(k);
        d
    }

    fn new(refs: Vec<Vec<f64>>, k: usize) -> Self {
        let nb: Vec<_> = (0..refs.len()).map(|i| Self::neighbours(&refs, &refs[i], k, Some(i))).collect();
        let kdist: Vec<f64> = nb.iter().map(|n| n[k - 1].0).collect();
        let lrd = nb.iter().map(|n| Self::lrd_of(n, &kdist)).collect();
        BruteLof { refs, k, kdist, lrd }
    }

    fn lrd_of(nb: &[(f64, usize)], kdist: &[f64]) -> f64 {
        let reach: f64 = nb.iter().map(|&(d, o)| d.max(kdist[o])).sum::<f64>() / nb.len() as f64;
        1.0 / reach.max(1e-12)
    }

    fn score(&self, q: &[f64]) -> f64 {
        let nb = Self::neighbours(&self.refs, q, self.k, None);
        let lrd_q = Self::lrd_of(&nb, &self.kdist);
        nb.iter().map(|&(_, o)| self.lrd[o]).sum::<f64>() / nb.len() as f64 / lrd_q
    }
}

fn lof_oracle() -> Outcome {
    let t = Instant::now();
    let mut rng = seed::rng(0x10f);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for _ in 0..200 {
        let n = rng.gen_range(3..=200);
        let d = rng.gen_range(1..=10);
        let k = rng.gen_range(1..n.min(30));
        let refs = matrix(&mut rng, n, d);
        let model = fit_lof(&refs, k).unwrap();
        let oracle = BruteLof::new(refs.iter_rows().map(|r| r.to_vec()).collect(), k);
        for _ in 0..5 {
            let q: Vec<f64> = (0..d).map(|_| rng.gen_range(-0.2..1.2)).collect();
            worst = worst.max((model.score(&q).unwrap() - oracle.score(&q)).abs());
            compared += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    check(
        worst <= 1e-9 && secs < 60.0,
        format!("200 instances, {compared} queries, max |diff| = {worst:.2e}, {secs:.1}s"),
    )
}

// ---------------------------------------------------------------- iForest

fn iforest_normaliser() -> Outcome {
    let mut worst = 0.0f64;
    for n in 2..=4096u64 {
        let h: f64 = (1..n).map(|i| 1.0 / i as f64).sum();
        let want = if n == 2 { 1.0 } else { 2.0 * h - 2.0 * (n - 1) as f64 / n as f64 };
        worst = worst.max((average_path_length(n) - want).abs());
    }

    let mut rng = seed::rng(0x1f);
    let train = matrix(&mut rng, 600, 5);
    let probe = matrix(&mut rng, 300, 5);
    let mut in_range = true;
    for (trees, ms) in [(50, MaxSamples::Auto), (20, MaxSamples::Count(2)), (10, MaxSamples::Fraction(1.0))] {
        let m = fit_iforest(&train, trees, ms, 4).unwrap();
        in_range &= probe
            .iter_rows()
            .chain(train.iter_rows())
            .all(|r| m.score(r).map(|s| s > 0.0 && s < 1.0).unwrap_or(false));
    }

    let rows: Vec<Vec<f64>> = train.iter_rows().map(|r| r.to_vec()).collect();
    let ds = FlowDataset::new(
        Matrix::from_rows(&rows).unwrap(),
        (0..5).map(|j| format!("f{j}")).collect(),
        Some(vec![0; rows.len()]),
    )
    .unwrap();
    let cfg = EnsembleConfig {
        n_lof: 0,
        n_iforest: 8,
        lof_components: 2,
        iforest_components: 4,
        lof: Vec::new(),
        iforest: vec![IForestParams {
            n_estimators: 40,
            max_samples: MaxSamples::Auto,
            contamination: 0.1,
        }],
        bootstrap_size: None,
    };
    let run = |threads| {
        in_pool(threads, || {
            let e = build_ensemble(&ds, &cfg, 21).unwrap();
            let v = e.votes(&probe).unwrap();
            (serde_json::to_string(&e).unwrap(), v.votes)
        })
    };
    let deterministic = run(1) == run(4);
    check(
        worst <= 1e-9 && in_range && deterministic,
        format!("max |c(n) - oracle| = {worst:.2e} for n in 2..=4096, scores in (0,1): {in_range}, 1 vs 4 threads identical: {deterministic}"),
    )
}

// ---------------------------------------------------------------- calibration

fn calibration() -> Outcome {
    let mut rng = seed::rng(0xca1);
    let mut worst = 0.0f64;
    let mut bad = 0;
    let mut cases = 0;
    for &n in &[50usize, 101, 256, 1000, 4096] {
        for _ in 0..4 {
            let scores: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() * 3.0).collect();
            for c in 1..=50 {
                let contamination = c as f64 / 100.0;
                let cal = calibrate_threshold(&scores, contamination).unwrap();
                let flagged = scores.iter().filter(|&&s| cal.predict(s) == 1).count() as f64 / n as f64;
                let err = (flagged - contamination).abs();
                worst = worst.max(err * n as f64);
                if err > 1.0 / n as f64 + 1e-12 {
                    bad += 1;
                }
                cases += 1;
            }
        }
    }
    check(
        bad == 0,
        format!("{cases} cases (contamination 0.01..0.50, n in 50..4096), worst |error| = {worst:.3}/n, {bad} outside 1/n"),
    )
}

// ---------------------------------------------------------------- WMV

/// Weighted vote written from the definition: per-class weight sums,
/// argmax, ties to benign.
fn wmv_reference(weights: &[f64], preds: &[u8]) -> (u8, f64, f64) {
    let mut sums = [0.0f64; 2];
    for i in 0..preds.len() {
        let c = preds[i] as usize;
        sums[c] += weights[i];
    }
    let label = if sums[1] > sums[0] { 1 } else { 0 };
    (label, sums[0], sums[1])
}

fn wmv_correctness() -> Outcome {
    let mut rng = seed::rng(0x3a1);
    let (mut disagree, mut mv_mismatch, mut scale_mismatch) = (0, 0, 0);
    for case in 0..10_000 {
        let n = rng.gen_range(1..=100);
        let preds: Vec<u8> = (0..n).map(|_| u8::from(rng.gen_bool(0.5))).collect();
        let weights: Vec<f64> = (0..n)
            .map(|_| match case % 4 {
                0 => rng.gen::<f64>(),
                1 => f64::from(rng.gen_range(0..4u8)) / 4.0,
                2 => 1.0,
                _ => rng.gen_range(0.0..1e-3),
            })
            .collect();
        let got: VotePrediction = weighted_vote(&weights, &preds);
        let (label, b, a) = wmv_reference(&weights, &preds);
        if got.label != label || got.score_benign.to_bits() != b.to_bits() || got.score_attack.to_bits() != a.to_bits() {
            disagree += 1;
        }
        if weighted_vote(&vec![1.0; n], &preds).label != majority_vote(&preds).label {
            mv_mismatch += 1;
        }
        // Powers of two rescale every partial sum exactly; the general
        // factor is checked away from exact ties.
        let pow2 = 2f64.powi(rng.gen_range(-20..20));
        let lambda = rng.gen_range(1e-3..1e3);
        let scaled = |f: f64| weights.iter().map(|w| w * f).collect::<Vec<_>>();
        if weighted_vote(&scaled(pow2), &preds).label != got.label {
            scale_mismatch += 1;
        }
        let gap = (a - b).abs() / (a + b).max(f64::MIN_POSITIVE);
        if gap > 1e-9 && weighted_vote(&scaled(lambda), &preds).label != got.label {
            scale_mismatch += 1;
        }
    }
    check(
        disagree == 0 && mv_mismatch == 0 && scale_mismatch == 0,
        format!("10000 cases: {disagree} disagreements with reference, {mv_mismatch} unit-weight vs MV mismatches, {scale_mismatch} rescaling flips"),
    )
}

// ---------------------------------------------------------------- datasets

struct NslRun {
    run: RunArtifact,
    secs: f64,
}

fn nsl_kdd_run() -> Result<NslRun, String> {
    let dir = data_dir("FLOWSENTRY_NSLKDD_DIR", "nsl-kdd");
    for f in ["KDDTrain+.txt", "KDDTest+.txt"] {
        if !dir.join(f).exists() {
            return Err(format!("NSL-KDD not found ({} missing; set FLOWSENTRY_NSLKDD_DIR)", dir.join(f).display()));
        }
    }
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = PipelineConfig::nsl_kdd(&dir, out.path());
    let t = Instant::now();
    cmd_run_all(&cfg).map_err(|e| format!("pipeline failed: {e}"))?;
    let run = RunArtifact::load(&Layout::new(out.path()).run()).map_err(|e| e.to_string())?;
    eprintln!(
        "NSL-KDD run: {:.0}s, bootstrap size {}",
        t.elapsed().as_secs_f64(),
        run.ensemble.as_ref().map_or(0, |e| e.bootstrap_size)
    );
    Ok(NslRun {
        run,
        secs: t.elapsed().as_secs_f64(),
    })
}

fn tie_elimination(nsl: &Result<NslRun, String>) -> Outcome {
    let r = match nsl {
        Ok(r) => r,
        Err(e) => return Outcome::NoData(e.clone()),
    };
    let t = &r.run.ensemble_report.as_ref().unwrap().tie_rates;
    check(
        t.weighted == 0.0 && (t.majority - 0.025).abs() <= 0.015,
        format!("WMV tie rate {:.4}%, MV tie rate {:.4}% (target 2.5 +/- 1.5)", 100.0 * t.weighted, 100.0 * t.majority),
    )
}

fn nsl_reproduction(nsl: &Result<NslRun, String>) -> Outcome {
    let r = match nsl {
        Ok(r) => r,
        Err(e) => return Outcome::NoData(e.clone()),
    };
    let f = r.run.final_report.as_ref().unwrap();
    let wmv_f1 = f.metrics[1].f1.value;
    let fin_f1 = f.metrics[2].f1.value;
    let a = &f.fpr_ablation;
    let ok = (wmv_f1 - 0.9316).abs() <= 0.03
        && (fin_f1 - 0.9825).abs() <= 0.02
        && a.final_fpr < a.ensemble_fpr
        && a.relative_reduction >= 0.40;
    check(
        ok,
        format!(
            "WMV F1 {:.2}% (93.16 +/- 3), final F1 {:.2}% (98.25 +/- 2), FPR {:.2}% -> {:.2}% ({:.1}% reduction), {:.0}s",
            100.0 * wmv_f1,
            100.0 * fin_f1,
            100.0 * a.ensemble_fpr,
            100.0 * a.final_fpr,
            100.0 * a.relative_reduction,
            r.secs
        ),
    )
}

fn class_direction(nsl: &Result<NslRun, String>) -> Outcome {
    let r = match nsl {
        Ok(r) => r,
        Err(e) => return Outcome::NoData(e.clone()),
    };
    let f = r.run.final_report.as_ref().unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    for class in ["R2L", "U2R"] {
        let e = f.class_rates_ensemble.rows.get(class).map(|c| c.rate);
        let g = f.class_rates_final.rows.get(class).map(|c| c.rate);
        match (e, g) {
            (Some(e), Some(g)) => {
                ok &= g - e >= 0.20;
                parts.push(format!("{class} {:.2}% -> {:.2}%", 100.0 * e, 100.0 * g));
            }
            _ => {
                ok = false;
                parts.push(format!("{class} absent from test split"));
            }
        }
    }
    check(ok, parts.join(", "))
}

fn cicids_proxy() -> Outcome {
    let dir = data_dir("FLOWSENTRY_CICIDS_DIR", "cicids2017");
    let out = match tempfile::tempdir() {
        Ok(d) => d,
        Err(e) => return Outcome::Fail(e.to_string()),
    };
    let mut cfg = PipelineConfig::cicids2017(&dir, out.path());
    if let Some(missing) = cfg.dataset.primary.iter().chain(&cfg.dataset.extra).find(|p| !p.exists()) {
        return Outcome::NoData(format!(
            "CICIDS2017 not found ({} missing; set FLOWSENTRY_CICIDS_DIR)",
            missing.display()
        ));
    }
    cfg.dataset.subsample = Some(0.05);
    let steps = [cmd_prepare, cmd_train_ensemble, cmd_evaluate, cmd_refine, cmd_evaluate_final];
    for step in steps {
        if let Err(e) = step(&cfg) {
            return Outcome::Fail(format!("pipeline failed: {e}"));
        }
    }
    let run = RunArtifact::load(&Layout::new(out.path()).run()).unwrap();
    let f = run.final_report.unwrap();
    let (ens_f1, fin_f1) = (f.metrics[1].f1.value, f.metrics[2].f1.value);
    let a = f.fpr_ablation;
    check(
        a.final_fpr <= 0.25 * a.ensemble_fpr && fin_f1 - ens_f1 >= 0.10,
        format!(
            "5% subsample: FPR {:.2}% -> {:.2}%, F1 {:.2}% -> {:.2}%",
            100.0 * a.ensemble_fpr,
            100.0 * a.final_fpr,
            100.0 * ens_f1,
            100.0 * fin_f1
        ),
    )
}

// ---------------------------------------------------------------- refinement

fn labelled(rows: Vec<Vec<f64>>, labels: Vec<u8>) -> FlowDataset {
    let d = rows[0].len();
    FlowDataset::new(Matrix::from_rows(&rows).unwrap(), (0..d).map(|j| format!("f{j}")).collect(), Some(labels)).unwrap()
}

fn entropy(ps: &[f64]) -> f64 {
    ps.iter().filter(|&&p| p > 0.0).map(|&p| -p * p.log2()).sum()
}

fn refinement_properties() -> Outcome {
    // SMOTE: 1,200 benign vs 200 attack rows gives 1,000 synthetic rows.
    let mut rng = seed::rng(0x5e);
    let (n0, n1) = (1200, 200);
    let rows: Vec<Vec<f64>> = (0..n0 + n1).map(|_| (0..4).map(|_| rng.gen::<f64>()).collect()).collect();
    let labels: Vec<u8> = (0..n0 + n1).map(|i| u8::from(i >= n0)).collect();
    let ds = labelled(rows.clone(), labels);
    let (out, origins) = smote_with_origins(&ds, 5, 17).unwrap();
    let balanced = out.class_counts().unwrap() == [n0, n0] && origins.len() == 1000;
    let minority = &rows[n0..];
    let mut convex_bad = 0;
    for (s, o) in origins.iter().enumerate() {
        let row = out.features.row(ds.len() + s);
        let (p, q) = (o.parent - n0, o.neighbor - n0);
        let nb = BruteLof::neighbours(minority, &minority[p], 5, Some(p));
        let on_segment = (0..4).all(|j| {
            let (a, b) = (minority[p][j], minority[q][j]);
            (row[j] - (a + o.gap * (b - a))).abs() < 1e-12
        });
        if !nb.iter().any(|&(_, i)| i == q) || !(0.0..=1.0).contains(&o.gap) || !on_segment {
            convex_bad += 1;
        }
    }

    // IG on the 8-row table.
    let f0 = [1.0, 1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 3.0];
    let f1 = [0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0];
    let y = vec![1, 1, 0, 0, 0, 1, 0, 1];
    let ig = information_gain(&labelled((0..8).map(|i| vec![f0[i], f1[i], 5.0]).collect(), y)).unwrap();
    let want = [
        1.0 - 2.0 * 3.0 / 8.0 * entropy(&[2.0 / 3.0, 1.0 / 3.0]),
        1.0 - entropy(&[0.75, 0.25]),
        0.0,
    ];
    let ig_err = (0..3)
        .map(|j| (ig.iter().find(|s| s.feature == j).unwrap().ig - want[j]).abs())
        .fold(0.0, f64::max);

    // CV leak audit.
    let mut rng = seed::rng(0x1ea);
    let rows: Vec<Vec<f64>> = (0..400).map(|_| (0..6).map(|_| rng.gen::<f64>()).collect()).collect();
    let labels: Vec<u8> = (0..400).map(|i| u8::from(i % 4 == 0)).collect();
    let ds = labelled(rows, labels);
    let audits = audit_folds(&ds, &[0, 1, 2, 3, 4, 5], &RefinementConfig::default(), 3).unwrap();
    let mut leaks = 0;
    let mut synthetic_in_train = 0;
    for a in &audits {
        let val: Vec<usize> = a
            .validation
            .iter()
            .filter_map(|t| match t {
                RowTag::Original(i) => Some(*i),
                RowTag::Synthetic { .. } => {
                    leaks += 1;
                    None
                }
            })
            .collect();
        for t in &a.train {
            match t {
                RowTag::Original(i) if val.contains(i) => leaks += 1,
                RowTag::Synthetic { parent, neighbor } => {
                    synthetic_in_train += 1;
                    if val.contains(parent) || val.contains(neighbor) {
                        leaks += 1;
                    }
                }
                _ => {}
            }
        }
    }
    check(
        balanced && convex_bad == 0 && ig_err <= 1e-9 && leaks == 0 && synthetic_in_train > 0,
        format!(
            "SMOTE 1:1 {balanced}, {convex_bad}/1000 off-segment; IG max err {ig_err:.1e}; {} folds, {leaks} leaked rows",
            audits.len()
        ),
    )
}

// ---------------------------------------------------------------- explainability

fn rule_partition() -> (bool, String) {
    let split = |feature, threshold, left, right| TreeNode::Split {
        feature,
        threshold,
        left,
        right,
        n_samples: 0,
    };
    let tree = DecisionTree {
        nodes: vec![
            split(0, 0.5, 1, 2),
            split(1, 0.3, 3, 4),
            split(0, 0.8, 5, 6),
            TreeNode::Leaf { counts: [5, 0] },
            split(2, 0.6, 7, 8),
            TreeNode::Leaf { counts: [1, 4] },
            TreeNode::Leaf { counts: [0, 3] },
            TreeNode::Leaf { counts: [2, 1] },
            TreeNode::Leaf { counts: [0, 2] },
        ],
        n_features: 3,
    };
    let data = matrix(&mut seed::rng(0xe1), 2000, 3);
    let labels: Vec<u8> = data.iter_rows().map(|r| tree.predict(r)).collect();
    let names: Vec<String> = (0..3).map(|j| format!("f{j}")).collect();
    let rs = extract_rules(&tree, &names, &data, &labels).unwrap();
    let once = data.iter_rows().all(|r| rs.rules.iter().filter(|rule| rule.matches(r)).count() == 1);
    let covered: usize = rs.rules.iter().map(|r| r.coverage).sum();
    (once && covered == 2000, format!("rules cover {covered}/2000 rows once: {once}"))
}

fn top1_rate() -> (usize, String) {
    let d = 8;
    let train = matrix(&mut seed::rng(0xe2), 600, d);
    let names: Vec<String> = (0..d).map(|j| format!("f{j}")).collect();
    let stats = TrainStats::fit(&train, &names).unwrap();
    let mut rng = seed::rng(0xe3);
    let mut top = 0;
    for s in 0..20u64 {
        let f = rng.gen_range(0..d);
        let model = FnClassifier::new(d, move |x: &[f64]| f64::from(u8::from(x[f] > 0.5)));
        let inst: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let e = lime_explain(&model, "probe", &inst, &stats, &LimeConfig::default(), s).unwrap();
        top += usize::from(e.contributions[0].feature == f);
    }
    (top, format!("threshold feature top-1 in {top}/20 seeds"))
}

fn explainability(nsl: &Result<NslRun, String>) -> Outcome {
    let (partition_ok, p) = rule_partition();
    let (top, t) = top1_rate();
    let local_ok = partition_ok && top >= 19;
    match nsl {
        Ok(r) => {
            let s = r.run.surrogate.as_ref().unwrap();
            let covered: usize = s.rules.rules.iter().map(|r| r.coverage).sum();
            check(
                local_ok && s.surrogate.fidelity >= 0.99 && covered == s.rules.n_rows,
                format!("NSL-KDD surrogate fidelity {:.3}%; {p}; {t}", 100.0 * s.surrogate.fidelity),
            )
        }
        Err(e) if local_ok => Outcome::NoData(format!("{p}; {t}; fidelity needs the corpus: {e}")),
        Err(e) => Outcome::Fail(format!("{p}; {t}; fidelity needs the corpus: {e}")),
    }
}

// ---------------------------------------------------------------- artifacts

fn artifact_round_trip() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    write_synthetic_kdd(
        &data,
        &SynthKddConfig {
            train_rows: 1500,
            test_rows: 800,
            seed: 23,
        },
    )
    .unwrap();
    // Reviewed pseudo-labels in auto-accept mode: no client involved.
    let mut cfg = PipelineConfig::smoke(&data, &dir.path().join("run"));
    cfg.pseudo_mode = PseudoMode::Reviewed;
    cfg.review.auto_accept = true;
    if let Err(e) = cmd_run_all(&cfg) {
        return Outcome::Fail(format!("pipeline failed: {e}"));
    }
    let layout = Layout::new(&cfg.output_dir);
    let run = RunArtifact::load(&layout.run()).unwrap();
    let test = load_split(&cfg, "test").unwrap();
    let idx: Vec<usize> = (0..1000).map(|i| (i * 13) % test.len()).collect();
    let probe = test.features.select_rows(&idx);
    let copy = dir.path().join("copy.json");
    run.save(&copy).unwrap();
    let back = RunArtifact::load(&copy).unwrap();
    let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    let mut identical = true;
    for mode in [VotingMode::Majority, VotingMode::Weighted] {
        let (a, b) = (run.predict_ensemble(&probe, mode).unwrap(), back.predict_ensemble(&probe, mode).unwrap());
        identical &= a.0 == b.0 && bits(a.1) == bits(b.1);
    }
    let (a, b) = (run.predict_final(&probe).unwrap(), back.predict_final(&probe).unwrap());
    identical &= a.0 == b.0 && bits(a.1) == bits(b.1);

    // The auto-accepted set used for refinement equals a replay of the log.
    let ens = run.ensemble().unwrap();
    let validation = load_split(&cfg, "validation").unwrap();
    let preds: Vec<u8> = ens
        .predict_table(&ens.votes(&validation.features).unwrap(), cfg.voting)
        .unwrap()
        .iter()
        .map(|p| p.label)
        .collect();
    let replayed = replay(&preds, &layout.decision_log()).unwrap();
    let used = &run.refinement().unwrap().pseudo;
    let auto_ok = replayed == *used && used.len() == validation.len();

    // Mixed decisions through a session, then a fresh session from the log.
    let log_dir = dir.path().join("review");
    let make = || {
        let preds = (0..6).map(|i| majority_vote(&[1, (i % 2) as u8, (i % 3 == 0) as u8])).collect();
        ReviewSession::new(
            Matrix::zeros(6, 2),
            vec!["a".into(), "b".into()],
            preds,
            QueueOrder::Index,
            10,
            log_dir.join("decisions.jsonl"),
            log_dir.join("reviewed.json"),
            None,
        )
        .unwrap()
    };
    let mut s = make();
    s.decide(0, AnalystAction::Approve).unwrap();
    s.decide(2, AnalystAction::Reject).unwrap();
    s.decide(3, AnalystAction::Relabel(0)).unwrap();
    s.decide(5, AnalystAction::Approve).unwrap();
    let conflict = s.decide(2, AnalystAction::Approve).is_err();
    let before = s.pseudo_labels().unwrap();
    drop(s);
    let again = make().pseudo_labels().unwrap();
    let replay_ok = before == again && conflict && before.rows == vec![0, 3, 5];

    check(
        identical && auto_ok && replay_ok,
        format!(
            "1000-row probe bit-identical: {identical}; auto-accept set = log replay ({} rows): {auto_ok}; session log replay exact: {replay_ok}; no client component involved",
            used.len()
        ),
    )
}

fn main() {
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = {
        let nsl = std::rc::Rc::new(nsl_kdd_run());
        let (a, b, c, d) = (nsl.clone(), nsl.clone(), nsl.clone(), nsl);
        vec![
            ("oracle equivalence, LOF", Box::new(lof_oracle)),
            ("iForest normaliser", Box::new(iforest_normaliser)),
            ("calibration", Box::new(calibration)),
            ("WMV correctness", Box::new(wmv_correctness)),
            ("tie elimination (NSL-KDD)", Box::new(move || tie_elimination(&a))),
            ("NSL-KDD reproduction", Box::new(move || nsl_reproduction(&b))),
            ("class-level direction (NSL-KDD)", Box::new(move || class_direction(&c))),
            ("CICIDS2017 5% proxy", Box::new(cicids_proxy)),
            ("refinement properties", Box::new(refinement_properties)),
            ("explainability", Box::new(move || explainability(&d))),
            ("artifact round trip and log replay", Box::new(artifact_round_trip)),
        ]
    };
    let mut failed = 0;
    let mut missing = 0;
    for (name, f) in &criteria {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Outcome::Pass(d) => println!("PASS  {name}: {d} [{secs:.1}s]"),
            Outcome::Fail(d) => {
                failed += 1;
                println!("FAIL  {name}: {d} [{secs:.1}s]");
            }
            Outcome::NoData(d) => {
                missing += 1;
                println!("FAIL  {name}: dataset not available: {d}");
            }
        }
    }
    println!(
        "{} criteria: {} passed, {failed} failed, {missing} not evaluable without data",
        criteria.len(),
        criteria.len() - failed - missing
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
