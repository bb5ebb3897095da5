use flowsentry::explain::{
    extract_rules, fit_local_model, fit_surrogate, lime_explain, lime_sample, FnClassifier, LimeConfig,
    SurrogateConfig, TrainStats,
};
use flowsentry::tree::{DecisionTree, TreeNode};
use flowsentry::{seed, Matrix};
use rand::Rng;

fn uniform(n: usize, d: usize, s: u64) -> Matrix {
    let mut rng = seed::rng(s);
    let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen::<f64>()).collect()).collect();
    Matrix::from_rows(&rows).unwrap()
}

fn names(d: usize) -> Vec<String> {
    (0..d).map(|j| format!("f{j}")).collect()
}

/// Weighted ridge with unpenalised intercept via the augmented normal
/// equations, solved by Gauss-Jordan elimination with partial pivoting.
fn wls_oracle(x: &Matrix, y: &[f64], w: &[f64], alpha: f64) -> (Vec<f64>, f64) {
    let d = x.cols();
    let p = d + 1; // last column is the intercept
    let mut a = vec![vec![0.0; p + 1]; p];
    for i in 0..x.rows() {
        let mut z: Vec<f64> = x.row(i).to_vec();
        z.push(1.0);
        for r in 0..p {
            for c in 0..p {
                a[r][c] += w[i] * z[r] * z[c];
            }
            a[r][p] += w[i] * z[r] * y[i];
        }
    }
    for (r, row) in a.iter_mut().enumerate().take(d) {
        row[r] += alpha;
    }
    for col in 0..p {
        let piv = (col..p).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        let div = a[col][col];
        for v in a[col].iter_mut() {
            *v /= div;
        }
        for r in 0..p {
            if r != col {
                let f = a[r][col];
                let src = a[col].clone();
                for (v, s) in a[r].iter_mut().zip(src) {
                    *v -= f * s;
                }
            }
        }
    }
    let sol: Vec<f64> = a.iter().map(|r| r[p]).collect();
    (sol[..d].to_vec(), sol[d])
}

#[test]
fn local_fit_matches_least_squares_oracle() {
    let train = uniform(500, 6, 1);
    let stats = TrainStats::fit(&train, &names(6)).unwrap();
    let model = FnClassifier::new(6, |x: &[f64]| 0.6 * x[0] + 0.3 * f64::from(u8::from(x[4] > 0.5)) + 0.05 * x[2]);
    let cfg = LimeConfig {
        n_samples: 2000,
        ..LimeConfig::default()
    };
    let design = lime_sample(&model, &[0.9, 0.1, 0.5, 0.3, 0.7, 0.2], &stats, &cfg, 5).unwrap();
    let (beta, b0, _) = fit_local_model(&design, 1.0).unwrap();
    let (ob, ob0) = wls_oracle(&design.masks, &design.targets, &design.weights, 1.0);
    for (a, b) in beta.iter().zip(&ob) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
    assert!((b0 - ob0).abs() < 1e-9);
    // Kernel weights follow exp(-h / (0.75^2 d)).
    for i in 0..design.weights.len() {
        let h = design.masks.row(i).iter().filter(|&&m| m == 0.0).count() as f64;
        assert!((design.weights[i] - (-h / (0.5625 * 6.0)).exp()).abs() < 1e-15);
    }
}

#[test]
fn threshold_model_feature_ranks_first() {
    let d = 8;
    let train = uniform(600, d, 2);
    let stats = TrainStats::fit(&train, &names(d)).unwrap();
    let mut rng = seed::rng(3);
    let mut top = 0;
    for s in 0..20u64 {
        let f = rng.gen_range(0..d);
        let model = FnClassifier::new(d, move |x: &[f64]| f64::from(u8::from(x[f] > 0.5)));
        let inst: Vec<f64> = (0..d).map(|_| rng.gen::<f64>()).collect();
        let e = lime_explain(&model, "i", &inst, &stats, &LimeConfig::default(), s).unwrap();
        if e.contributions[0].feature == f {
            top += 1;
        }
    }
    assert!(top >= 19, "top-1 in {top}/20 seeds");
}

fn hand_tree() -> DecisionTree {
    // 0: f0 <= 0.5 ? 1 : 2
    // 1: f1 <= 0.3 ? 3 : 4
    // 2: f0 <= 0.8 ? 5 : 6
    // 4: f2 <= 0.6 ? 7 : 8
    let split = |feature, threshold, left, right| TreeNode::Split {
        feature,
        threshold,
        left,
        right,
        n_samples: 0,
    };
    DecisionTree {
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
    }
}

#[test]
fn rules_enumerate_hand_tree_paths() {
    let tree = hand_tree();
    let data = uniform(1000, 3, 4);
    let labels: Vec<u8> = (0..1000).map(|i| tree.predict(data.row(i))).collect();
    let rs = extract_rules(&tree, &names(3), &data, &labels).unwrap();
    let text: Vec<String> = rs.rules.iter().map(|r| format!("{} -> {}", r.antecedent(), r.class)).collect();
    assert_eq!(
        text,
        vec![
            "f0 <= 0.5 AND f1 <= 0.3 -> 0",
            "f0 <= 0.5 AND f1 > 0.3 AND f2 <= 0.6 -> 0",
            "f0 <= 0.5 AND f1 > 0.3 AND f2 > 0.6 -> 1",
            "0.5 < f0 <= 0.8 -> 1",
            "f0 > 0.8 -> 1",
        ]
    );
    for i in 0..data.rows() {
        let row = data.row(i);
        assert_eq!(rs.rules.iter().filter(|r| r.matches(row)).count(), 1);
    }
    assert_eq!(rs.rules.iter().map(|r| r.coverage).sum::<usize>(), 1000);
    assert!(rs.rules.iter().all(|r| r.purity == Some(1.0)));
    assert_eq!(rs.to_csv().lines().count(), 6);
}

#[test]
fn fidelity_is_recomputable() {
    let data = uniform(400, 4, 6);
    let model = FnClassifier::new(4, |x: &[f64]| f64::from(u8::from(x[0] * x[1] > 0.2)));
    let s = fit_surrogate(&model, &data, &names(4), &SurrogateConfig::default(), 1).unwrap();
    let agree = (0..400).filter(|&i| s.predict(data.row(i)) == s.reference_labels[i]).count();
    assert_eq!(s.fidelity, agree as f64 / 400.0);
    let rs = extract_rules(&s.tree, &s.feature_names, &data, &s.reference_labels).unwrap();
    for i in 0..400 {
        assert_eq!(rs.rules.iter().filter(|r| r.matches(data.row(i))).count(), 1);
    }
}
