use serde::{Deserialize, Serialize};

use crate::dataio::FlowDataset;
use crate::detectors::quantile;
use crate::error::Result;

pub const IG_BINS: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub feature: usize,
    pub name: String,
    pub ig: f64,
}

fn entropy(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

/// Bin index per value. Features with at most `IG_BINS` distinct values keep
/// one bin per value; others use equal-frequency bins with edges at the
/// interpolated `i / IG_BINS` quantiles (a value equal to an edge falls in
/// the lower bin).
pub fn discretize(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut distinct = sorted.clone();
    distinct.dedup();
    let edges: Vec<f64> = if distinct.len() <= IG_BINS {
        distinct[..distinct.len().saturating_sub(1)].to_vec()
    } else {
        let mut e: Vec<f64> = (1..IG_BINS).map(|i| quantile(&sorted, i as f64 / IG_BINS as f64)).collect();
        e.dedup();
        e
    };
    values.iter().map(|v| edges.partition_point(|e| e < v)).collect()
}

/// Information gain `H(label) - H(label | binned feature)` in bits, one
/// entry per feature, sorted descending with ties broken by feature index.
pub fn information_gain(ds: &FlowDataset) -> Result<Vec<FeatureScore>> {
    let labels = ds.labels()?;
    let base = entropy(&ds.class_counts()?);
    let n = labels.len();
    let mut out: Vec<FeatureScore> = (0..ds.n_features())
        .map(|j| {
            let bins = discretize(&ds.features.column(j));
            let n_bins = bins.iter().max().map_or(0, |m| m + 1);
            let mut counts = vec![[0usize; 2]; n_bins];
            for (&b, &l) in bins.iter().zip(labels) {
                counts[b][l as usize] += 1;
            }
            let cond: f64 = counts
                .iter()
                .map(|c| (c[0] + c[1]) as f64 / n as f64 * entropy(c))
                .sum();
            FeatureScore {
                feature: j,
                name: ds.feature_names[j].clone(),
                ig: (base - cond).max(0.0),
            }
        })
        .collect();
    out.sort_by(|a, b| b.ig.total_cmp(&a.ig).then(a.feature.cmp(&b.feature)));
    Ok(out)
}
