use rand::seq::SliceRandom;

use super::FlowDataset;
use crate::error::{Error, Result};
use crate::seed;

/// Split into `(part, rest)` where `part` holds `round(fraction * n_c)` rows
/// of each binary class `c`. Row order within each part follows the input.
pub fn stratified_split(ds: &FlowDataset, fraction: f64, seed_value: u64) -> Result<(FlowDataset, FlowDataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("split fraction {fraction} not in (0, 1)")));
    }
    let labels = ds.labels()?;
    let mut rng = seed::rng(seed_value);
    let mut in_part = vec![false; ds.len()];
    for class in [0u8, 1] {
        let mut idx: Vec<usize> = (0..ds.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < 2 {
            return Err(Error::MissingClass(format!(
                "class {class} has {} row(s); stratified split needs at least 2",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng);
        let take = ((fraction * idx.len() as f64).round() as usize).clamp(1, idx.len() - 1);
        for &i in &idx[..take] {
            in_part[i] = true;
        }
    }
    let (a, b): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|&i| in_part[i]);
    let part = ds.select(&a).with_provenance(format!("{}|split({fraction},{seed_value}).0", ds.provenance));
    let rest = ds.select(&b).with_provenance(format!("{}|split({fraction},{seed_value}).1", ds.provenance));
    Ok((part, rest))
}
