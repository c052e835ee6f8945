use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;

/// Rank-selection criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Mml,
    Bic,
    Laplace,
}

impl Criterion {
    pub const ALL: [Criterion; 3] = [Criterion::Mml, Criterion::Bic, Criterion::Laplace];

    pub fn as_str(self) -> &'static str {
        match self {
            Criterion::Mml => "mml",
            Criterion::Bic => "bic",
            Criterion::Laplace => "laplace",
        }
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Criterion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mml" => Ok(Criterion::Mml),
            "bic" => Ok(Criterion::Bic),
            "laplace" | "bayes" => Ok(Criterion::Laplace),
            other => Err(Error::InvalidConfig(format!("unknown criterion '{other}'"))),
        }
    }
}

/// Scores for every candidate rank under one criterion. Lower is better for
/// all criteria; the Laplace log-evidence is negated.
///
/// Every candidate rank appears in exactly one of `scores` or `skipped`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionReport {
    pub criterion: Criterion,
    pub scores: BTreeMap<usize, f64>,
    pub selected_rank: usize,
    pub skipped: BTreeMap<usize, String>,
}

impl SelectionReport {
    /// Picks the smallest finite score, breaking ties toward the smaller rank.
    /// Non-finite scores are moved to `skipped`.
    pub(crate) fn from_candidates(
        criterion: Criterion,
        candidates: impl IntoIterator<Item = (usize, Result<f64, Error>)>,
    ) -> Self {
        let mut scores = BTreeMap::new();
        let mut skipped = BTreeMap::new();
        for (rank, outcome) in candidates {
            match outcome {
                Ok(score) if score.is_finite() => {
                    scores.insert(rank, score);
                }
                Ok(score) => {
                    skipped.insert(rank, format!("non-finite score {score}"));
                }
                Err(e) => {
                    skipped.insert(rank, format!("{}: {e}", e.kind()));
                }
            }
        }
        let mut selected_rank = 0;
        let mut best = f64::INFINITY;
        for (&rank, &score) in &scores {
            if score < best {
                best = score;
                selected_rank = rank;
            }
        }
        Self {
            criterion,
            scores,
            selected_rank,
            skipped,
        }
    }
}
