use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Decision threshold derived from the training score distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdCalibration {
    pub contamination: f64,
    pub threshold: f64,
    /// The quantile level used, `1 - contamination`.
    pub train_score_quantile: f64,
}

impl ThresholdCalibration {
    /// 1 (attack) when the score is strictly above the threshold.
    #[inline]
    pub fn predict(&self, score: f64) -> u8 {
        u8::from(score > self.threshold)
    }
}

/// Empirical quantile with linear interpolation between order statistics:
/// position `h = (n - 1) q`, value `x[floor h] + (h - floor h) (x[floor h + 1] - x[floor h])`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn calibrate_threshold(train_scores: &[f64], contamination: f64) -> Result<ThresholdCalibration> {
    if !(contamination > 0.0 && contamination <= 0.5) {
        return Err(Error::invalid(format!("contamination {contamination} not in (0, 0.5]")));
    }
    if train_scores.is_empty() {
        return Err(Error::Empty("no training scores to calibrate on".into()));
    }
    let mut sorted = train_scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = 1.0 - contamination;
    Ok(ThresholdCalibration {
        contamination,
        threshold: quantile(&sorted, q),
        train_score_quantile: q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_top_ten_of_hundred() {
        let scores: Vec<f64> = (1..=100).map(f64::from).collect();
        let c = calibrate_threshold(&scores, 0.10).unwrap();
        let flagged: Vec<f64> = scores.iter().copied().filter(|&s| c.predict(s) == 1).collect();
        assert_eq!(flagged, (91..=100).map(f64::from).collect::<Vec<_>>());
    }

    #[test]
    fn half_contamination_flags_upper_half() {
        let scores: Vec<f64> = (-50..50).map(|i| i as f64 + 0.5).collect();
        let c = calibrate_threshold(&scores, 0.5).unwrap();
        assert_eq!(c.threshold, 0.0);
        assert_eq!(scores.iter().filter(|&&s| c.predict(s) == 1).count(), 50);
    }

    #[test]
    fn rejects_out_of_range_contamination() {
        assert!(calibrate_threshold(&[1.0], 0.0).is_err());
        assert!(calibrate_threshold(&[1.0], 0.51).is_err());
        assert!(calibrate_threshold(&[], 0.1).is_err());
    }
}
