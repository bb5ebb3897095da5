//! Binary detection metrics with attack as the positive class.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

/// A ratio metric. When its denominator is zero the value is 0 and
/// `defined` is false.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub value: f64,
    pub defined: bool,
}

impl Metric {
    fn ratio(num: usize, den: usize) -> Metric {
        if den == 0 {
            Metric {
                value: 0.0,
                defined: false,
            }
        } else {
            Metric {
                value: num as f64 / den as f64,
                defined: true,
            }
        }
    }
}

pub fn confusion(preds: &[u8], truth: &[u8]) -> Result<ConfusionMatrix> {
    if preds.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: preds.len(),
        });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in preds.iter().zip(truth) {
        match (p != 0, t != 0) {
            (true, true) => cm.tp += 1,
            (true, false) => cm.fp += 1,
            (false, true) => cm.fn_ += 1,
            (false, false) => cm.tn += 1,
        }
    }
    Ok(cm)
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn precision(&self) -> Metric {
        Metric::ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> Metric {
        Metric::ratio(self.tp, self.tp + self.fn_)
    }

    /// `2tp / (2tp + fp + fn)`, the harmonic mean of precision and recall.
    pub fn f1(&self) -> Metric {
        Metric::ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }

    pub fn accuracy(&self) -> Metric {
        Metric::ratio(self.tp + self.tn, self.total())
    }

    pub fn fpr(&self) -> Metric {
        Metric::ratio(self.fp, self.fp + self.tn)
    }
}

/// Area under the ROC curve via the rank statistic: the probability that a
/// random attack outscores a random benign flow, ties counting one half.
pub fn roc_auc(scores: &[f64], truth: &[u8]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: scores.len(),
        });
    }
    let n_pos = truth.iter().filter(|&&t| t != 0).count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::MissingClass("ROC-AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Sum of midranks of positives (Mann-Whitney U).
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let midrank = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += order[i..=j].iter().filter(|&&k| truth[k] != 0).count() as f64 * midrank;
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Per original class: the fraction of rows whose binary prediction matches
/// the binary truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassRateTable {
    pub rows: BTreeMap<String, ClassRate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassRate {
    pub count: usize,
    pub correct: usize,
    pub rate: f64,
}

pub fn class_rates(preds: &[u8], truth: &[u8], classes: &[String]) -> Result<ClassRateTable> {
    if preds.len() != truth.len() || preds.len() != classes.len() {
        return Err(Error::Dimension {
            expected: truth.len(),
            got: preds.len().min(classes.len()),
        });
    }
    let mut rows: BTreeMap<String, ClassRate> = BTreeMap::new();
    for ((p, t), c) in preds.iter().zip(truth).zip(classes) {
        let e = rows.entry(c.clone()).or_insert(ClassRate {
            count: 0,
            correct: 0,
            rate: 0.0,
        });
        e.count += 1;
        e.correct += usize::from(p == t);
    }
    for r in rows.values_mut() {
        r.rate = r.correct as f64 / r.count as f64;
    }
    Ok(ClassRateTable { rows })
}

impl ClassRateTable {
    pub fn rate(&self, class: &str) -> Option<f64> {
        self.rows.get(class).map(|r| r.rate)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("class,count,correct,detection_rate\n");
        for (c, r) in &self.rows {
            let _ = writeln!(s, "{c},{},{},{:.6}", r.count, r.correct, r.rate);
        }
        s
    }
}

/// One row of a results table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub setting: String,
    pub confusion: ConfusionMatrix,
    pub precision: Metric,
    pub recall: Metric,
    pub f1: Metric,
    pub accuracy: Metric,
    pub fpr: Metric,
    pub roc_auc: Option<f64>,
}

impl MetricsRow {
    pub fn evaluate(setting: &str, preds: &[u8], truth: &[u8], scores: Option<&[f64]>) -> Result<Self> {
        let cm = confusion(preds, truth)?;
        let roc_auc = match scores {
            Some(s) => roc_auc(s, truth).ok(),
            None => None,
        };
        Ok(MetricsRow {
            setting: setting.to_string(),
            confusion: cm,
            precision: cm.precision(),
            recall: cm.recall(),
            f1: cm.f1(),
            accuracy: cm.accuracy(),
            fpr: cm.fpr(),
            roc_auc,
        })
    }
}

/// Rows rendered as CSV (percentages, one setting per row) plus a text table.
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut s = String::from("setting,precision,recall,f1,roc_auc,fpr,accuracy,tp,fp,fn,tn,undefined\n");
    for r in rows {
        let undefined: Vec<&str> = [
            ("precision", r.precision),
            ("recall", r.recall),
            ("f1", r.f1),
            ("fpr", r.fpr),
        ]
        .iter()
        .filter(|(_, m)| !m.defined)
        .map(|(n, _)| *n)
        .collect();
        let _ = writeln!(
            s,
            "{},{:.4},{:.4},{:.4},{},{:.4},{:.4},{},{},{},{},{}",
            r.setting,
            100.0 * r.precision.value,
            100.0 * r.recall.value,
            100.0 * r.f1.value,
            r.roc_auc.map_or(String::new(), |a| format!("{:.4}", 100.0 * a)),
            100.0 * r.fpr.value,
            100.0 * r.accuracy.value,
            r.confusion.tp,
            r.confusion.fp,
            r.confusion.fn_,
            r.confusion.tn,
            undefined.join("|")
        );
    }
    s
}

pub fn metrics_text(rows: &[MetricsRow]) -> String {
    let mut s = format!(
        "{:<28} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
        "Setting", "Precision", "Recall", "F1", "ROC-AUC", "FPR"
    );
    for r in rows {
        let flag = |m: Metric| if m.defined { "" } else { "*" };
        let _ = writeln!(
            s,
            "{:<28} {:>8.2}{} {:>8.2}{} {:>8.2}{} {:>9} {:>8.2}{}",
            r.setting,
            100.0 * r.precision.value,
            flag(r.precision),
            100.0 * r.recall.value,
            flag(r.recall),
            100.0 * r.f1.value,
            flag(r.f1),
            r.roc_auc.map_or("-".to_string(), |a| format!("{:.2}", 100.0 * a)),
            100.0 * r.fpr.value,
            flag(r.fpr),
        );
    }
    if rows
        .iter()
        .any(|r| !(r.precision.defined && r.recall.defined && r.f1.defined && r.fpr.defined))
    {
        s.push_str("* undefined (zero denominator), reported as 0\n");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn perfect_predictions() {
        let t = [1, 0, 1, 0];
        let cm = confusion(&t, &t).unwrap();
        assert_eq!(cm.precision().value, 1.0);
        assert_eq!(cm.recall().value, 1.0);
        assert_eq!(cm.f1().value, 1.0);
        assert_eq!(cm.fpr().value, 0.0);
    }

    #[test]
    fn hand_computed_counts() {
        let cm = ConfusionMatrix {
            tp: 2,
            fp: 1,
            fn_: 1,
            tn: 6,
        };
        assert!((cm.precision().value - 2.0 / 3.0).abs() < 1e-15);
        assert!((cm.recall().value - 2.0 / 3.0).abs() < 1e-15);
        assert!((cm.f1().value - 2.0 / 3.0).abs() < 1e-15);
        assert!((cm.fpr().value - 1.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn all_benign_predictor() {
        let cm = confusion(&[0, 0, 0], &[1, 0, 1]).unwrap();
        assert_eq!(cm.recall().value, 0.0);
        assert_eq!(cm.f1().value, 0.0);
        assert!(!cm.precision().defined);
        assert!(confusion(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn auc_edge_cases() {
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(roc_auc(&[0.5; 4], &[0, 1, 0, 1]).unwrap(), 0.5);
        assert!(roc_auc(&[0.5, 0.6], &[1, 1]).is_err());
    }

    #[test]
    fn auc_matches_pair_counting() {
        let scores = [0.3, 0.1, 0.7, 0.7, 0.2, 0.9, 0.4, 0.4, 0.6, 0.05];
        let truth = [0u8, 0, 1, 0, 1, 1, 0, 1, 1, 0];
        let mut wins = 0.0;
        let mut pairs = 0.0;
        for i in 0..10 {
            for j in 0..10 {
                if truth[i] == 1 && truth[j] == 0 {
                    pairs += 1.0;
                    wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                        std::cmp::Ordering::Greater => 1.0,
                        std::cmp::Ordering::Equal => 0.5,
                        std::cmp::Ordering::Less => 0.0,
                    };
                }
            }
        }
        assert!((roc_auc(&scores, &truth).unwrap() - wins / pairs).abs() < 1e-12);
    }

    #[test]
    fn class_rates_basic() {
        let classes: Vec<String> = ["a", "a", "b", "n"].iter().map(|s| s.to_string()).collect();
        let t = class_rates(&[1, 1, 0, 0], &[1, 1, 1, 0], &classes).unwrap();
        assert_eq!(t.rate("a"), Some(1.0));
        assert_eq!(t.rate("b"), Some(0.0));
        assert_eq!(t.rate("n"), Some(1.0));
    }

    proptest! {
        #[test]
        fn auc_invariant_under_monotone_transform(
            pairs in prop::collection::vec((-5.0f64..5.0, 0u8..2), 2..60)
        ) {
            let scores: Vec<f64> = pairs.iter().map(|p| p.0).collect();
            let truth: Vec<u8> = pairs.iter().map(|p| p.1).collect();
            prop_assume!(truth.contains(&0) && truth.contains(&1));
            let t: Vec<f64> = scores.iter().map(|s| s.exp() * 3.0 + 1.0).collect();
            prop_assert_eq!(roc_auc(&scores, &truth).unwrap(), roc_auc(&t, &truth).unwrap());
        }

        #[test]
        fn class_rates_reproduce_accuracy(
            rows in prop::collection::vec((0u8..2, 0u8..2, 0usize..4), 1..80)
        ) {
            let preds: Vec<u8> = rows.iter().map(|r| r.0).collect();
            let truth: Vec<u8> = rows.iter().map(|r| r.1).collect();
            let classes: Vec<String> = rows.iter().map(|r| format!("c{}", r.2)).collect();
            let t = class_rates(&preds, &truth, &classes).unwrap();
            let weighted: usize = t.rows.values().map(|r| r.correct).sum();
            let counted: usize = t.rows.values().map(|r| r.count).sum();
            prop_assert_eq!(counted, rows.len());
            let acc = confusion(&preds, &truth).unwrap().accuracy().value;
            prop_assert_eq!(weighted as f64 / rows.len() as f64, acc);
        }

        #[test]
        fn f1_invariant_under_row_swap(
            rows in prop::collection::vec((0u8..2, 0u8..2), 2..40), a in 0usize..40, b in 0usize..40
        ) {
            let (a, b) = (a % rows.len(), b % rows.len());
            let mut swapped = rows.clone();
            swapped.swap(a, b);
            let f = |r: &[(u8, u8)]| {
                let p: Vec<u8> = r.iter().map(|x| x.0).collect();
                let t: Vec<u8> = r.iter().map(|x| x.1).collect();
                confusion(&p, &t).unwrap().f1().value
            };
            prop_assert_eq!(f(&rows), f(&swapped));
        }
    }
}
