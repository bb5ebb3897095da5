use std::path::Path;

use super::schema::{ColumnKind, FeatureSchema};
use super::{CategoricalColumn, FlowDataset, RowDefect, ATTACK, BENIGN};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

fn parse_cell(cell: &str) -> (f64, RowDefect) {
    let t = cell.trim();
    if t.is_empty() || t == "?" || t.eq_ignore_ascii_case("nan") {
        return (f64::NAN, RowDefect::Missing);
    }
    match t.parse::<f64>() {
        Ok(v) if v.is_finite() => (v, RowDefect::None),
        Ok(v) => (v, RowDefect::Invalid),
        Err(_) => (f64::NAN, RowDefect::Invalid),
    }
}

/// Load one flow CSV. Drop columns are discarded, the label column is
/// binarised against `schema.benign_label_values` and numeric cells parsed.
/// Cells that fail to parse are kept as defects and removed by
/// [`clean`](super::clean).
pub fn load_flow_csv(path: &Path, schema: &FeatureSchema) -> Result<FlowDataset> {
    if !path.exists() {
        return Err(Error::io(
            path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "input file not found"),
        ));
    }
    let csv_err = |e: csv::Error| Error::Csv {
        path: path.into(),
        source: e,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(schema.has_header)
        .flexible(true)
        .from_path(path)
        .map_err(csv_err)?;

    let resolved = if schema.has_header {
        let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
        schema.resolve(&header)?
    } else {
        schema.validate()?;
        schema.clone()
    };

    let numeric: Vec<usize> = kind_positions(&resolved, ColumnKind::Numeric);
    let categorical: Vec<usize> = kind_positions(&resolved, ColumnKind::Categorical);
    let label_pos = kind_positions(&resolved, ColumnKind::Label)[0];
    let n_cols = resolved.columns.len();

    let mut features = Matrix::with_cols(numeric.len());
    let mut labels = Vec::new();
    let mut classes = Vec::new();
    let mut cats: Vec<Vec<String>> = vec![Vec::new(); categorical.len()];
    let mut defects = Vec::new();
    let mut row = vec![0.0; numeric.len()];

    for rec in reader.records() {
        let rec = rec.map_err(csv_err)?;
        if rec.len() == 1 && rec[0].trim().is_empty() {
            continue;
        }
        let mut defect = RowDefect::None;
        if rec.len() != n_cols {
            // Ragged rows keep their shape but count as invalid.
            defect = RowDefect::Invalid;
            row.fill(f64::NAN);
        } else {
            for (slot, &p) in row.iter_mut().zip(&numeric) {
                let (v, d) = parse_cell(&rec[p]);
                *slot = v;
                defect = worse(defect, d);
            }
        }
        features.push_row(&row)?;
        for (dst, &p) in cats.iter_mut().zip(&categorical) {
            let v = rec.get(p).map(str::trim).unwrap_or("");
            if v.is_empty() {
                defect = worse(defect, RowDefect::Missing);
            }
            dst.push(v.to_string());
        }
        let raw = rec.get(label_pos).map(str::trim).unwrap_or("").to_string();
        if raw.is_empty() {
            defect = worse(defect, RowDefect::Missing);
        }
        labels.push(if resolved.is_benign(&raw) { BENIGN } else { ATTACK });
        classes.push(raw);
        defects.push(defect);
    }

    let names = numeric.iter().map(|&p| resolved.columns[p].name.clone()).collect();
    let mut ds = FlowDataset::new(features, names, Some(labels))?
        .with_classes(classes)
        .with_provenance(path.display().to_string());
    ds.categoricals = categorical
        .iter()
        .zip(cats)
        .map(|(&p, values)| CategoricalColumn {
            name: resolved.columns[p].name.clone(),
            values,
        })
        .collect();
    ds.defects = defects;
    Ok(ds)
}

/// Load several files with the same schema and concatenate them in order.
/// Typical use is selecting a subset of per-day capture files.
pub fn load_flow_csvs<P: AsRef<Path>>(paths: &[P], schema: &FeatureSchema) -> Result<FlowDataset> {
    let mut out: Option<FlowDataset> = None;
    for p in paths {
        let ds = load_flow_csv(p.as_ref(), schema)?;
        out = Some(match out {
            None => ds,
            Some(acc) => acc.concat(&ds)?,
        });
    }
    out.ok_or_else(|| Error::Empty("no input files given".into()))
}

fn kind_positions(schema: &FeatureSchema, kind: ColumnKind) -> Vec<usize> {
    schema
        .columns
        .iter()
        .enumerate()
        .filter(|(_, c)| c.kind == kind)
        .map(|(i, _)| i)
        .collect()
}

fn worse(a: RowDefect, b: RowDefect) -> RowDefect {
    match (a, b) {
        (RowDefect::Invalid, _) | (_, RowDefect::Invalid) => RowDefect::Invalid,
        (RowDefect::Missing, _) | (_, RowDefect::Missing) => RowDefect::Missing,
        _ => RowDefect::None,
    }
}
