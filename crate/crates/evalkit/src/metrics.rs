//! Ranking metrics over retrieval sets.

use serde::{Deserialize, Serialize};

/// 1-based rank of `positive` after a stable descending sort of `scores`,
/// so ties go to the lower candidate index.
pub fn rank_of_positive(scores: &[f64], positive: usize) -> usize {
    let p = scores[positive];
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(k, &s)| s > p || (s == p && k < positive) || (p.is_nan() && !s.is_nan()))
        .count()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankingResult {
    /// Rank of the positive and candidate count, per query.
    pub ranks: Vec<(usize, usize)>,
    pub mrr: f64,
    pub mr: f64,
    /// Fractions in [0, 1].
    pub r_at_1: f64,
    pub r_at_10: f64,
}

/// Cutoff rank for the top `k` percent of `n` candidates.
pub fn recall_cutoff(k: usize, n: usize) -> usize {
    (k * n).div_ceil(100)
}

impl RankingResult {
    pub fn from_ranks(ranks: Vec<(usize, usize)>) -> Self {
        let q = ranks.len().max(1) as f64;
        let mrr = ranks.iter().map(|&(r, _)| 1.0 / r as f64).sum::<f64>() / q;
        let mr = ranks.iter().map(|&(r, _)| r as f64).sum::<f64>() / q;
        let recall = |k| ranks.iter().filter(|&&(r, n)| r <= recall_cutoff(k, n)).count() as f64 / q;
        let (r_at_1, r_at_10) = (recall(1), recall(10));
        RankingResult { ranks, mrr, mr, r_at_1, r_at_10 }
    }
}
