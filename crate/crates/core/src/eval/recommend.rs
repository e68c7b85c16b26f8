//! Top-n recommendation lists built from each user's test items.

use crate::data::Rating;

/// How candidates are filtered before ranking.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RecommendMode {
    /// Rank by probability of liking; keep items whose probability is at
    /// least `min_probability`.
    ByReliability { min_probability: f64 },
    /// Rank by predicted rating; drop predictions below `like_threshold`.
    ByPrediction { like_threshold: f64 },
}

impl RecommendMode {
    fn cutoff(self) -> f64 {
        match self {
            RecommendMode::ByReliability { min_probability } => min_probability,
            RecommendMode::ByPrediction { like_threshold } => like_threshold,
        }
    }
}

/// For every user, ranks that user's test items by `ranker` (descending,
/// ties to the lower item index), drops those below the mode's cutoff or
/// without a score, and keeps at most `n`.
///
/// `ranker` returns the probability of liking under
/// [`RecommendMode::ByReliability`] and the predicted rating under
/// [`RecommendMode::ByPrediction`].
pub fn build_recommendations(
    test: &[Rating],
    num_users: usize,
    n: usize,
    mode: RecommendMode,
    ranker: impl Fn(usize, usize) -> Option<f64>,
) -> Vec<Vec<usize>> {
    let scored: Vec<(usize, usize, Option<f64>)> = test
        .iter()
        .map(|r| (r.user, r.item, ranker(r.user, r.item)))
        .collect();
    recommend_from_scores(&scored, num_users, n, mode.cutoff())
}

/// Shared by [`build_recommendations`] and the sweeps, which score every
/// candidate once and re-filter per threshold.
pub(crate) fn recommend_from_scores(
    scored: &[(usize, usize, Option<f64>)],
    num_users: usize,
    n: usize,
    cutoff: f64,
) -> Vec<Vec<usize>> {
    let mut per_user: Vec<Vec<(f64, usize)>> = vec![Vec::new(); num_users];
    for &(u, i, s) in scored {
        if let Some(s) = s {
            if s >= cutoff {
                per_user[u].push((s, i));
            }
        }
    }
    per_user
        .into_iter()
        .map(|mut c| {
            c.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            c.into_iter().take(n).map(|(_, i)| i).collect()
        })
        .collect()
}
