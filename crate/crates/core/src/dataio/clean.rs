use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{FlowDataset, RowDefect};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub input_rows: usize,
    pub missing: usize,
    pub invalid: usize,
    pub duplicates: usize,
    pub output_rows: usize,
}

impl fmt::Display for CleaningReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input_rows = {}", self.input_rows)?;
        writeln!(f, "removed_missing = {}", self.missing)?;
        writeln!(f, "removed_invalid = {}", self.invalid)?;
        writeln!(f, "removed_duplicates = {}", self.duplicates)?;
        writeln!(f, "output_rows = {}", self.output_rows)
    }
}

/// Drop rows with missing or non-finite cells, then exact duplicates
/// (first occurrence kept). Duplicates compare every parsed field: feature
/// bit patterns, categorical values and the raw label.
pub fn clean(ds: &FlowDataset) -> Result<(FlowDataset, CleaningReport)> {
    let mut report = CleaningReport {
        input_rows: ds.len(),
        ..Default::default()
    };
    let mut seen: HashSet<Vec<u8>> = HashSet::with_capacity(ds.len());
    let mut keep = Vec::with_capacity(ds.len());
    for i in 0..ds.len() {
        let row = ds.features.row(i);
        let defect = ds.defects.get(i).copied().unwrap_or_default();
        let missing = defect == RowDefect::Missing
            || row.iter().any(|v| v.is_nan())
            || ds.categoricals.iter().any(|c| c.values[i].is_empty());
        if defect == RowDefect::Invalid || row.iter().any(|v| v.is_infinite()) {
            report.invalid += 1;
            continue;
        }
        if missing {
            report.missing += 1;
            continue;
        }
        if !seen.insert(row_key(ds, i)) {
            report.duplicates += 1;
            continue;
        }
        keep.push(i);
    }
    if keep.is_empty() {
        return Err(Error::Empty(format!("no rows left after cleaning {}", ds.provenance)));
    }
    let mut out = ds.select(&keep);
    out.defects.clear();
    out.provenance = format!("{}|clean", ds.provenance);
    report.output_rows = out.len();
    Ok((out, report))
}

fn row_key(ds: &FlowDataset, i: usize) -> Vec<u8> {
    let mut key = Vec::with_capacity(ds.n_features() * 8 + 16);
    for v in ds.features.row(i) {
        // +0.0 and -0.0 parse from different text but are the same value.
        let v = if *v == 0.0 { 0.0f64 } else { *v };
        key.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    for c in &ds.categoricals {
        key.extend_from_slice(c.values[i].as_bytes());
        key.push(0);
    }
    match (&ds.classes, &ds.labels) {
        (Some(c), _) => key.extend_from_slice(c[i].as_bytes()),
        (None, Some(l)) => key.push(l[i]),
        _ => {}
    }
    key
}
