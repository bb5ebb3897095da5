use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Classifier;
use crate::detectors::quantile;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seed;

/// Quartile discretisation of one training feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureBins {
    /// Increasing bin edges (at most three); value `v` is in bin
    /// `#{e : e < v}`.
    pub edges: Vec<f64>,
    /// Training rows per bin.
    pub counts: Vec<usize>,
    /// Observed training range per bin, `[min, max]`. Empty bins keep the
    /// surrounding edges.
    pub ranges: Vec<[f64; 2]>,
}

impl FeatureBins {
    pub fn bin(&self, v: f64) -> usize {
        self.edges.partition_point(|&e| e < v)
    }

    pub fn n_bins(&self) -> usize {
        self.counts.len()
    }

    /// Human-readable condition for bin `b` of a feature called `name`.
    pub fn describe(&self, b: usize, name: &str) -> String {
        let e = &self.edges;
        if e.is_empty() {
            return format!("{name} = any");
        }
        if b == 0 {
            format!("{name} <= {:.4}", e[0])
        } else if b == e.len() {
            format!("{name} > {:.4}", e[b - 1])
        } else {
            format!("{:.4} < {name} <= {:.4}", e[b - 1], e[b])
        }
    }
}

/// Training-set statistics LIME samples from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainStats {
    pub feature_names: Vec<String>,
    pub bins: Vec<FeatureBins>,
}

impl TrainStats {
    pub fn fit(data: &Matrix, feature_names: &[String]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::Empty("no training rows for explanation statistics".into()));
        }
        if feature_names.len() != data.cols() {
            return Err(Error::Dimension {
                expected: data.cols(),
                got: feature_names.len(),
            });
        }
        let bins = (0..data.cols())
            .map(|j| {
                let mut col = data.column(j);
                col.sort_by(f64::total_cmp);
                let mut edges: Vec<f64> = [0.25, 0.5, 0.75].iter().map(|&q| quantile(&col, q)).collect();
                edges.dedup();
                // A top edge equal to the maximum would leave the last bin empty.
                if edges.last() == col.last() {
                    edges.pop();
                }
                let nb = edges.len() + 1;
                let mut counts = vec![0; nb];
                let mut ranges = vec![[f64::INFINITY, f64::NEG_INFINITY]; nb];
                let fb = FeatureBins {
                    edges: edges.clone(),
                    counts: Vec::new(),
                    ranges: Vec::new(),
                };
                for &v in &col {
                    let b = fb.bin(v);
                    counts[b] += 1;
                    ranges[b][0] = ranges[b][0].min(v);
                    ranges[b][1] = ranges[b][1].max(v);
                }
                for (b, r) in ranges.iter_mut().enumerate() {
                    if counts[b] == 0 {
                        let lo = if b == 0 { col[0] } else { edges[b - 1] };
                        let hi = if b == edges.len() { col[col.len() - 1] } else { edges[b] };
                        *r = [lo, hi];
                    }
                }
                FeatureBins { edges, counts, ranges }
            })
            .collect();
        Ok(TrainStats {
            feature_names: feature_names.to_vec(),
            bins,
        })
    }

    pub fn n_features(&self) -> usize {
        self.bins.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimeConfig {
    pub n_samples: usize,
    pub top_k: usize,
    /// Ridge penalty on the coefficients; the intercept is not penalised.
    pub ridge_alpha: f64,
    /// Kernel width; `None` means `0.75 * sqrt(n_features)`.
    pub kernel_width: Option<f64>,
}

impl Default for LimeConfig {
    fn default() -> Self {
        LimeConfig {
            n_samples: 5000,
            top_k: 10,
            ridge_alpha: 1.0,
            kernel_width: None,
        }
    }
}

/// The perturbation sample behind one explanation. Row 0 is the instance
/// itself.
#[derive(Debug, Clone, PartialEq)]
pub struct LimeDesign {
    /// 1 where a feature stayed in the instance's bin.
    pub masks: Matrix,
    /// The perturbed inputs fed to the model.
    pub inputs: Matrix,
    pub weights: Vec<f64>,
    /// Model attack probability per perturbed input.
    pub targets: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contribution {
    pub feature: usize,
    pub name: String,
    /// Bin condition the instance satisfies.
    pub condition: String,
    pub weight: f64,
    /// `attack` for positive weights, `benign` otherwise.
    pub direction: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalExplanation {
    pub instance_id: String,
    pub predicted_label: u8,
    pub attack_probability: f64,
    pub contributions: Vec<Contribution>,
    pub intercept: f64,
    pub local_fit_r2: f64,
    pub n_samples: usize,
    pub seed: u64,
}

impl LocalExplanation {
    /// Signed bars, one line per contribution, scaled to the largest weight.
    pub fn to_text(&self) -> String {
        const WIDTH: usize = 30;
        let label = if self.predicted_label == 1 { "attack" } else { "benign" };
        let mut s = format!(
            "instance {}: {label} (p_attack = {:.4}), local R^2 = {:.3}, intercept = {:.4}\n",
            self.instance_id, self.attack_probability, self.local_fit_r2, self.intercept
        );
        let max = self.contributions.iter().map(|c| c.weight.abs()).fold(0.0, f64::max);
        let cw = self.contributions.iter().map(|c| c.condition.len()).max().unwrap_or(0);
        for c in &self.contributions {
            let n = if max > 0.0 {
                (c.weight.abs() / max * WIDTH as f64).round() as usize
            } else {
                0
            };
            let (left, right) = if c.weight < 0.0 {
                (format!("{:>WIDTH$}", "#".repeat(n)), String::new())
            } else {
                (" ".repeat(WIDTH), "#".repeat(n))
            };
            let _ = writeln!(s, "  {:<cw$} {left}|{right:<WIDTH$} {:+.4}", c.condition, c.weight);
        }
        s
    }
}

fn sample_bin(fb: &FeatureBins, rng: &mut impl Rng) -> usize {
    let total: usize = fb.counts.iter().sum();
    let mut r = rng.gen_range(0..total);
    for (b, &c) in fb.counts.iter().enumerate() {
        if r < c {
            return b;
        }
        r -= c;
    }
    fb.counts.len() - 1
}

/// Draw the perturbation sample. Each feature draws a bin from the training
/// bin frequencies; if that is the instance's bin the instance value is
/// kept (mask 1), otherwise a value is drawn uniformly from the bin's
/// training range (mask 0). Kernel weights are `exp(-h / width^2)` with `h`
/// the number of changed features.
pub fn lime_sample(
    model: &dyn Classifier,
    instance: &[f64],
    stats: &TrainStats,
    cfg: &LimeConfig,
    seed_value: u64,
) -> Result<LimeDesign> {
    let d = stats.n_features();
    if instance.len() != d || model.n_features() != d {
        return Err(Error::Dimension {
            expected: d,
            got: if instance.len() != d { instance.len() } else { model.n_features() },
        });
    }
    if cfg.n_samples < 10 * cfg.top_k.max(1) {
        return Err(Error::invalid(format!(
            "n_samples = {} is below 10 * top_k = {}",
            cfg.n_samples,
            10 * cfg.top_k.max(1)
        )));
    }
    let width = cfg.kernel_width.unwrap_or(0.75 * (d as f64).sqrt());
    if !(width > 0.0) {
        return Err(Error::invalid("kernel width must be positive"));
    }
    let inst_bins: Vec<usize> = stats.bins.iter().zip(instance).map(|(fb, &v)| fb.bin(v)).collect();
    let mut rng = seed::rng(seed_value);
    let n = cfg.n_samples;
    let mut masks = Matrix::zeros(n, d);
    let mut inputs = Matrix::zeros(n, d);
    masks.row_mut(0).fill(1.0);
    inputs.row_mut(0).copy_from_slice(instance);
    for i in 1..n {
        for j in 0..d {
            let fb = &stats.bins[j];
            let b = sample_bin(fb, &mut rng);
            if b == inst_bins[j] {
                masks.set(i, j, 1.0);
                inputs.set(i, j, instance[j]);
            } else {
                let [lo, hi] = fb.ranges[b];
                let v = if hi > lo { rng.gen_range(lo..=hi) } else { lo };
                inputs.set(i, j, v);
            }
        }
    }
    let targets: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| model.predict_proba(inputs.row(i)))
        .collect::<Result<_>>()?;
    let w2 = width * width;
    let weights = (0..n)
        .map(|i| {
            let changed = masks.row(i).iter().filter(|&&m| m == 0.0).count() as f64;
            (-changed / w2).exp()
        })
        .collect();
    Ok(LimeDesign {
        masks,
        inputs,
        weights,
        targets,
    })
}

/// Weighted ridge fit of `targets` on the mask columns. Returns
/// `(coefficients, intercept, weighted R^2)`.
pub fn fit_local_model(design: &LimeDesign, alpha: f64) -> Result<(Vec<f64>, f64, f64)> {
    let x = &design.masks;
    let (n, d) = (x.rows(), x.cols());
    let w = &design.weights;
    let y = &design.targets;
    let wsum: f64 = w.iter().sum();
    if !(wsum > 0.0) {
        return Err(Error::invalid("all LIME kernel weights are zero"));
    }
    let ybar = w.iter().zip(y).map(|(a, b)| a * b).sum::<f64>() / wsum;
    let mut xbar = vec![0.0; d];
    for i in 0..n {
        for (m, &v) in xbar.iter_mut().zip(x.row(i)) {
            *m += w[i] * v;
        }
    }
    xbar.iter_mut().for_each(|m| *m /= wsum);

    let mut a = DMatrix::<f64>::zeros(d, d);
    let mut rhs = DVector::<f64>::zeros(d);
    let mut xc = vec![0.0; d];
    for i in 0..n {
        for (c, (&v, &m)) in xc.iter_mut().zip(x.row(i).iter().zip(&xbar)) {
            *c = v - m;
        }
        let yc = y[i] - ybar;
        for p in 0..d {
            let wp = w[i] * xc[p];
            if wp == 0.0 {
                continue;
            }
            rhs[p] += wp * yc;
            for q in p..d {
                a[(p, q)] += wp * xc[q];
            }
        }
    }
    for p in 0..d {
        a[(p, p)] += alpha;
        for q in 0..p {
            a[(p, q)] = a[(q, p)];
        }
    }
    let beta = a
        .cholesky()
        .ok_or_else(|| Error::invalid("local model system is not positive definite"))?
        .solve(&rhs);
    let intercept = ybar - beta.iter().zip(&xbar).map(|(b, m)| b * m).sum::<f64>();

    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for i in 0..n {
        let pred = intercept + x.row(i).iter().zip(beta.iter()).map(|(v, b)| v * b).sum::<f64>();
        ss_res += w[i] * (y[i] - pred).powi(2);
        ss_tot += w[i] * (y[i] - ybar).powi(2);
    }
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok((beta.iter().copied().collect(), intercept, r2))
}

/// Local explanation of one instance: the `top_k` largest-magnitude
/// coefficients of the weighted ridge surrogate, ties by feature index.
pub fn lime_explain(
    model: &dyn Classifier,
    instance_id: &str,
    instance: &[f64],
    stats: &TrainStats,
    cfg: &LimeConfig,
    seed_value: u64,
) -> Result<LocalExplanation> {
    let design = lime_sample(model, instance, stats, cfg, seed_value)?;
    let (beta, intercept, r2) = fit_local_model(&design, cfg.ridge_alpha)?;
    let mut order: Vec<usize> = (0..beta.len()).collect();
    order.sort_by(|&a, &b| beta[b].abs().total_cmp(&beta[a].abs()).then(a.cmp(&b)));
    let contributions = order
        .into_iter()
        .take(cfg.top_k)
        .map(|j| {
            let fb = &stats.bins[j];
            Contribution {
                feature: j,
                name: stats.feature_names[j].clone(),
                condition: fb.describe(fb.bin(instance[j]), &stats.feature_names[j]),
                weight: beta[j],
                direction: if beta[j] > 0.0 { "attack" } else { "benign" }.to_string(),
            }
        })
        .collect();
    let p = design.targets[0];
    Ok(LocalExplanation {
        instance_id: instance_id.to_string(),
        predicted_label: model.predict_label(instance)?,
        attack_probability: p,
        contributions,
        intercept,
        local_fit_r2: r2,
        n_samples: cfg.n_samples,
        seed: seed_value,
    })
}

/// Explain several instances in parallel, all with the same seed.
pub fn explain_batch(
    model: &dyn Classifier,
    instances: &[(String, Vec<f64>)],
    stats: &TrainStats,
    cfg: &LimeConfig,
    seed_value: u64,
) -> Result<Vec<LocalExplanation>> {
    instances
        .par_iter()
        .map(|(id, x)| lime_explain(model, id, x, stats, cfg, seed_value))
        .collect()
}
