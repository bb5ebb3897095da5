use serde::{Deserialize, Serialize};

use crate::dataio::{ATTACK, BENIGN};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VotingMode {
    /// Unweighted majority, ties resolved to benign.
    #[serde(rename = "mv")]
    Majority,
    /// F1-weighted majority; attack only when its weight sum is strictly larger.
    #[serde(rename = "wmv")]
    Weighted,
}

impl std::str::FromStr for VotingMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mv" | "majority" => Ok(VotingMode::Majority),
            "wmv" | "weighted" => Ok(VotingMode::Weighted),
            other => Err(Error::invalid(format!("unknown voting mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VotePrediction {
    pub label: u8,
    pub score_benign: f64,
    pub score_attack: f64,
    pub tie: bool,
}

impl VotePrediction {
    /// Attack share of the total vote mass, used as a ranking score.
    pub fn attack_share(&self) -> f64 {
        let total = self.score_benign + self.score_attack;
        if total > 0.0 {
            self.score_attack / total
        } else {
            0.0
        }
    }

    pub fn margin(&self) -> f64 {
        (self.score_attack - self.score_benign).abs()
    }
}

/// Weighted majority vote. Weights are summed in learner order.
pub fn weighted_vote(weights: &[f64], votes: &[u8]) -> VotePrediction {
    debug_assert_eq!(weights.len(), votes.len());
    let mut score_benign = 0.0;
    let mut score_attack = 0.0;
    for (&w, &v) in weights.iter().zip(votes) {
        if v == BENIGN {
            score_benign += w;
        } else {
            score_attack += w;
        }
    }
    VotePrediction {
        label: if score_attack > score_benign { ATTACK } else { BENIGN },
        score_benign,
        score_attack,
        tie: score_attack == score_benign && !votes.is_empty(),
    }
}

/// Simple majority vote; equal counts go to benign and set `tie`.
pub fn majority_vote(votes: &[u8]) -> VotePrediction {
    let attack = votes.iter().filter(|&&v| v != BENIGN).count();
    let benign = votes.len() - attack;
    VotePrediction {
        label: if attack > benign { ATTACK } else { BENIGN },
        score_benign: benign as f64,
        score_attack: attack as f64,
        tie: attack == benign && !votes.is_empty(),
    }
}
