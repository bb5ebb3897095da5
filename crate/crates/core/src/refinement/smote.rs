use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataio::FlowDataset;
use crate::error::{Error, Result};
use crate::knn::KdTree;
use crate::seed;

/// Where a synthetic row came from: `parent + gap * (neighbor - parent)`,
/// indices into the input dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticOrigin {
    pub parent: usize,
    pub neighbor: usize,
    pub gap: f64,
}

/// Oversample the minority class to the majority count. Originals come
/// first, unchanged; synthetic rows are appended and described in the
/// returned origins (row `input.len() + i` comes from `origins[i]`).
pub fn smote_with_origins(ds: &FlowDataset, k: usize, seed_value: u64) -> Result<(FlowDataset, Vec<SyntheticOrigin>)> {
    let labels = ds.labels()?;
    let counts = ds.class_counts()?;
    if counts[0] == 0 || counts[1] == 0 {
        return Err(Error::MissingClass("SMOTE needs both classes".into()));
    }
    if counts[0] == counts[1] {
        return Ok((ds.clone(), Vec::new()));
    }
    let minority = u8::from(counts[1] < counts[0]);
    let n_min = counts[minority as usize];
    if n_min < 2 {
        return Err(Error::MissingClass("SMOTE needs at least two minority rows".into()));
    }
    let k = if n_min <= k {
        log::info!("SMOTE: k lowered from {k} to {} (minority has {n_min} rows)", n_min - 1);
        n_min - 1
    } else {
        k
    };
    let k = k.max(1);
    let minority_rows: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == minority).collect();
    let points = ds.features.select_rows(&minority_rows);
    let tree = KdTree::build(&points);
    let needed = counts[1 - minority as usize] - n_min;

    let mut rng = seed::rng(seed_value);
    let mut origins = Vec::with_capacity(needed);
    let mut out = ds.clone();
    let mut row = vec![0.0; ds.n_features()];
    let mut cache: Vec<Option<Vec<usize>>> = vec![None; n_min];
    for _ in 0..needed {
        let p = rng.gen_range(0..n_min);
        let nbrs = cache[p]
            .get_or_insert_with(|| tree.query(&points, points.row(p), k, Some(p)).iter().map(|n| n.index).collect());
        let q = nbrs[rng.gen_range(0..nbrs.len())];
        let gap: f64 = rng.gen();
        let (a, b) = (points.row(p), points.row(q));
        for ((r, x), y) in row.iter_mut().zip(a).zip(b) {
            *r = x + gap * (y - x);
        }
        out.features.push_row(&row)?;
        origins.push(SyntheticOrigin {
            parent: minority_rows[p],
            neighbor: minority_rows[q],
            gap,
        });
    }
    out.labels.as_mut().expect("labels checked").extend(std::iter::repeat_n(minority, needed));
    if let Some(c) = out.classes.as_mut() {
        c.extend(std::iter::repeat_n("synthetic".to_string(), needed));
    }
    for c in &mut out.categoricals {
        c.values.extend(std::iter::repeat_n(String::new(), needed));
    }
    out.provenance = format!("{}|smote(k={k})", ds.provenance);
    Ok((out, origins))
}

pub fn smote(ds: &FlowDataset, k: usize, seed_value: u64) -> Result<FlowDataset> {
    smote_with_origins(ds, k, seed_value).map(|(d, _)| d)
}
