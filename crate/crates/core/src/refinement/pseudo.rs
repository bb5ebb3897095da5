use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PseudoMode {
    /// Keep detections that agree with ground truth.
    Oracle,
    /// Keep what an analyst approved or relabelled.
    Reviewed,
    /// Keep every detection as-is.
    Raw,
}

impl std::str::FromStr for PseudoMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "oracle" => Ok(PseudoMode::Oracle),
            "reviewed" => Ok(PseudoMode::Reviewed),
            "raw" => Ok(PseudoMode::Raw),
            other => Err(Error::invalid(format!("unknown pseudo-label mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", content = "label", rename_all = "lowercase")]
pub enum AnalystAction {
    Approve,
    Reject,
    Relabel(u8),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub row: usize,
    #[serde(flatten)]
    pub action: AnalystAction,
    /// Milliseconds since the Unix epoch.
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoLabelSet {
    /// Indices into the dataset the predictions were made on; ascending.
    pub rows: Vec<usize>,
    pub pseudo_labels: Vec<u8>,
    pub mode: PseudoMode,
    #[serde(default)]
    pub decisions: Option<Vec<ReviewDecision>>,
    /// Rows left out because no analyst decision was recorded.
    #[serde(default)]
    pub undecided: usize,
}

impl PseudoLabelSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Turn first-stage predictions into a pseudo-labelled subset.
///
/// In reviewed mode the last decision recorded for a row wins; rows without a
/// decision are excluded and counted in `undecided`.
pub fn make_pseudo_labels(
    preds: &[u8],
    mode: PseudoMode,
    truth: Option<&[u8]>,
    decisions: Option<&[ReviewDecision]>,
) -> Result<PseudoLabelSet> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut undecided = 0;
    match mode {
        PseudoMode::Raw => {
            rows.extend(0..preds.len());
            labels.extend_from_slice(preds);
        }
        PseudoMode::Oracle => {
            let truth = truth.ok_or_else(|| Error::invalid("oracle pseudo-labels need ground truth"))?;
            if truth.len() != preds.len() {
                return Err(Error::Dimension {
                    expected: preds.len(),
                    got: truth.len(),
                });
            }
            for (i, (&p, &t)) in preds.iter().zip(truth).enumerate() {
                if p == t {
                    rows.push(i);
                    labels.push(p);
                }
            }
        }
        PseudoMode::Reviewed => {
            let decisions = decisions.ok_or_else(|| Error::invalid("reviewed pseudo-labels need analyst decisions"))?;
            let mut latest: BTreeMap<usize, AnalystAction> = BTreeMap::new();
            for d in decisions {
                if d.row >= preds.len() {
                    return Err(Error::NotFound(format!("decision for unknown row {}", d.row)));
                }
                if let AnalystAction::Relabel(l) = d.action {
                    if l > 1 {
                        return Err(Error::invalid(format!("relabel to {l}; labels are 0 or 1")));
                    }
                }
                latest.insert(d.row, d.action);
            }
            for (i, &p) in preds.iter().enumerate() {
                match latest.get(&i) {
                    Some(AnalystAction::Approve) => {
                        rows.push(i);
                        labels.push(p);
                    }
                    Some(AnalystAction::Relabel(l)) => {
                        rows.push(i);
                        labels.push(*l);
                    }
                    Some(AnalystAction::Reject) => {}
                    None => undecided += 1,
                }
            }
            if undecided > 0 {
                log::info!("{undecided} rows without an analyst decision left out of the reviewed set");
            }
        }
    }
    Ok(PseudoLabelSet {
        rows,
        pseudo_labels: labels,
        mode,
        decisions: decisions.map(<[ReviewDecision]>::to_vec),
        undecided,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn oracle_keeps_agreeing_rows() {
        let preds = [1, 0, 1, 1, 0, 0, 1, 0, 1, 0];
        let truth = [1, 0, 0, 1, 1, 0, 1, 1, 1, 0];
        let set = make_pseudo_labels(&preds, PseudoMode::Oracle, Some(&truth), None).unwrap();
        // Elementwise: rows 2, 4 and 7 disagree.
        let expected: Vec<usize> = (0..10).filter(|&i| preds[i] == truth[i]).collect();
        assert_eq!(expected.len(), 7);
        assert_eq!(set.rows, expected);
        assert!(set.rows.iter().zip(&set.pseudo_labels).all(|(&r, &l)| truth[r] == l));
    }

    #[test]
    fn oracle_identity_when_all_correct() {
        let p = [0, 1, 1];
        let set = make_pseudo_labels(&p, PseudoMode::Oracle, Some(&p), None).unwrap();
        assert_eq!(set.rows, [0, 1, 2]);
    }

    #[test]
    fn oracle_without_truth_is_error() {
        assert!(make_pseudo_labels(&[1], PseudoMode::Oracle, None, None).is_err());
        assert!(make_pseudo_labels(&[1], PseudoMode::Reviewed, None, None).is_err());
    }

    #[test]
    fn reviewed_relabel_and_reject() {
        let d = |row, action| ReviewDecision {
            row,
            action,
            timestamp: 0,
        };
        let decisions = [
            d(0, AnalystAction::Relabel(0)),
            d(1, AnalystAction::Approve),
            d(2, AnalystAction::Reject),
        ];
        let set = make_pseudo_labels(&[1, 1, 1, 0], PseudoMode::Reviewed, None, Some(&decisions)).unwrap();
        assert_eq!(set.rows, [0, 1]);
        assert_eq!(set.pseudo_labels, [0, 1]);
        assert_eq!(set.undecided, 1);
    }

    #[test]
    fn raw_keeps_everything() {
        let set = make_pseudo_labels(&[1, 0], PseudoMode::Raw, None, None).unwrap();
        assert_eq!(set.pseudo_labels, [1, 0]);
    }
}
