//! Prediction and recommendation quality measures.

use std::collections::{HashMap, HashSet};

use crate::data::Rating;
use crate::error::{Error, Result};
use crate::scores::ScoreSet;

/// `(actual value, predicted value)`; `None` marks an abstention.
pub type PredictionPair = (f64, Option<f64>);

/// Mean absolute error over the pairs that were predicted.
pub fn mae(pairs: &[PredictionPair]) -> Result<f64> {
    let (sum, count) = pairs
        .iter()
        .filter_map(|&(a, p)| p.map(|p| (a - p).abs()))
        .fold((0.0, 0usize), |(s, c), e| (s + e, c + 1));
    if count == 0 {
        return Err(Error::AllAbstained);
    }
    Ok(sum / count as f64)
}

/// Fraction of pairs that were predicted.
pub fn coverage(pairs: &[PredictionPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument(
            "coverage of an empty test set".into(),
        ));
    }
    let predicted = pairs.iter().filter(|p| p.1.is_some()).count();
    Ok(predicted as f64 / pairs.len() as f64)
}

/// Reliability quality: the negated Pearson correlation between reliability
/// and absolute error. Positive when high reliability goes with low error;
/// zero when either side has no variance or fewer than two pairs are given.
pub fn rpi(pairs: &[(f64, f64)]) -> f64 {
    let weights = vec![1.0; pairs.len()];
    rpi_weighted(pairs, &weights)
}

/// [`rpi`] with per-pair non-negative weights.
pub fn rpi_weighted(pairs: &[(f64, f64)], weights: &[f64]) -> f64 {
    assert_eq!(pairs.len(), weights.len(), "one weight per pair");
    let total: f64 = weights.iter().sum();
    if pairs.len() < 2 || !(total > 0.0) {
        return 0.0;
    }
    let mean = |f: fn(&(f64, f64)) -> f64| -> f64 {
        pairs
            .iter()
            .zip(weights)
            .map(|(p, w)| w * f(p))
            .sum::<f64>()
            / total
    };
    let (mr, me) = (mean(|p| p.0), mean(|p| p.1));
    let (mut cov, mut vr, mut ve) = (0.0, 0.0, 0.0);
    for (&(r, e), &w) in pairs.iter().zip(weights) {
        cov += w * (r - mr) * (e - me);
        vr += w * (r - mr) * (r - mr);
        ve += w * (e - me) * (e - me);
    }
    let scale = (vr * ve).sqrt();
    if !(scale > 1e-300) || vr <= 1e-24 * total || ve <= 1e-24 * total {
        return 0.0;
    }
    -cov / scale
}

/// Counts of `(actual, predicted)` score indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionMatrix {
    size: usize,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn count(&self, actual: usize, predicted: usize) -> u64 {
        self.counts[actual * self.size + predicted]
    }

    /// Row-normalized fractions; rows without samples are all zero.
    pub fn fractions(&self) -> Vec<Vec<f64>> {
        (0..self.size)
            .map(|a| {
                let row = &self.counts[a * self.size..(a + 1) * self.size];
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| {
                        if total == 0 {
                            0.0
                        } else {
                            c as f64 / total as f64
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Rows are actual labels, columns predicted labels.
pub fn confusion_matrix(pairs: &[(usize, usize)], size: usize) -> Result<ConfusionMatrix> {
    let mut counts = vec![0u64; size * size];
    for &(a, p) in pairs {
        if a >= size || p >= size {
            return Err(Error::InvalidArgument(format!(
                "label ({a}, {p}) outside {size} classes"
            )));
        }
        counts[a * size + p] += 1;
    }
    Ok(ConfusionMatrix { size, counts })
}

pub const HISTOGRAM_BINS: usize = 20;

/// Counts of reliabilities in 20 bins of width 0.05 over `[0, 1]`; the last
/// bin is closed on the right.
pub fn reliability_histogram(values: &[f64]) -> Vec<u64> {
    let mut bins = vec![0u64; HISTOGRAM_BINS];
    for &v in values {
        let j = ((v.clamp(0.0, 1.0) * HISTOGRAM_BINS as f64) + 1e-9).floor() as usize;
        bins[j.min(HISTOGRAM_BINS - 1)] += 1;
    }
    bins
}

/// Mean precision and recall of top-`n` lists, indexed by user.
///
/// Precision averages over users with a non-empty list; recall averages
/// over users with at least one liked test item. An average over no users
/// is 0.
pub fn precision_recall_at_n(
    recommendations: &[Vec<usize>],
    test: &[Rating],
    scores: &ScoreSet,
    n: usize,
    like_threshold: f64,
) -> Result<(f64, f64)> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be positive".into()));
    }
    if let Some((u, l)) = recommendations
        .iter()
        .enumerate()
        .find(|(_, l)| l.len() > n)
    {
        return Err(Error::InvalidArgument(format!(
            "user {u} has {} recommendations, more than n = {n}",
            l.len()
        )));
    }
    let mut liked: HashMap<usize, HashSet<usize>> = HashMap::new();
    for r in test {
        if scores.value(r.score) >= like_threshold - 1e-12 {
            liked.entry(r.user).or_default().insert(r.item);
        }
    }
    let empty = HashSet::new();
    let (mut p_sum, mut p_users) = (0.0, 0usize);
    for (u, list) in recommendations.iter().enumerate() {
        if list.is_empty() {
            continue;
        }
        let likes = liked.get(&u).unwrap_or(&empty);
        let hits = list.iter().filter(|i| likes.contains(i)).count();
        p_sum += hits as f64 / list.len() as f64;
        p_users += 1;
    }
    let mut users: Vec<_> = liked.keys().copied().collect();
    users.sort_unstable();
    let mut r_sum = 0.0;
    for u in &users {
        let likes = &liked[u];
        let hits = recommendations
            .get(*u)
            .map_or(0, |l| l.iter().filter(|i| likes.contains(i)).count());
        r_sum += hits as f64 / likes.len() as f64;
    }
    let avg = |s: f64, c: usize| if c == 0 { 0.0 } else { s / c as f64 };
    Ok((avg(p_sum, p_users), avg(r_sum, users.len())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mae_and_coverage_basics() {
        assert_eq!(mae(&[(4.0, Some(4.0)), (2.0, Some(2.0))]).unwrap(), 0.0);
        assert_eq!(mae(&[(4.0, Some(5.0)), (2.0, Some(2.0))]).unwrap(), 0.5);
        assert_eq!(mae(&[(4.0, Some(5.0)), (2.0, None)]).unwrap(), 1.0);
        assert!(matches!(mae(&[(1.0, None)]), Err(Error::AllAbstained)));
        assert!(matches!(mae(&[]), Err(Error::AllAbstained)));

        assert_eq!(
            coverage(&[(1.0, Some(1.0)), (1.0, Some(2.0))]).unwrap(),
            1.0
        );
        let pairs = [
            (1.0, Some(1.0)),
            (1.0, None),
            (3.0, Some(1.0)),
            (2.0, Some(2.0)),
        ];
        assert_eq!(coverage(&pairs).unwrap(), 0.75);
        assert!(coverage(&[]).is_err());
    }

    #[test]
    fn rpi_conventions() {
        let inverse: Vec<(f64, f64)> = (0..10).map(|j| (1.0 - j as f64 / 10.0, j as f64)).collect();
        assert!((rpi(&inverse) - 1.0).abs() < 1e-12);
        let constant: Vec<(f64, f64)> = (0..10).map(|j| (0.4, j as f64)).collect();
        assert_eq!(rpi(&constant), 0.0);
        assert_eq!(rpi(&[(0.3, 1.0)]), 0.0);
        assert_eq!(rpi(&[]), 0.0);
        let zero_error: Vec<(f64, f64)> = (0..10).map(|j| (j as f64 / 10.0, 0.0)).collect();
        assert_eq!(rpi(&zero_error), 0.0);
    }

    #[test]
    fn rpi_weights_duplicate_pairs() {
        let pairs = [(0.9, 0.0), (0.5, 1.0), (0.2, 1.0), (0.6, 2.0)];
        let dup = [(0.9, 0.0), (0.5, 1.0), (0.5, 1.0), (0.2, 1.0), (0.6, 2.0)];
        let w = rpi_weighted(&pairs, &[1.0, 2.0, 1.0, 1.0]);
        assert!((w - rpi(&dup)).abs() < 1e-12);
    }

    #[test]
    fn confusion_basics() {
        let perfect: Vec<(usize, usize)> = (0..15).map(|j| (j % 5, j % 5)).collect();
        let m = confusion_matrix(&perfect, 5).unwrap();
        for (a, row) in m.fractions().iter().enumerate() {
            for (p, &x) in row.iter().enumerate() {
                assert_eq!(x, if a == p { 1.0 } else { 0.0 });
            }
        }
        let top: Vec<(usize, usize)> = (0..10).map(|j| (j % 5, 4)).collect();
        let m = confusion_matrix(&top, 5).unwrap();
        for row in m.fractions() {
            assert_eq!(row, vec![0.0, 0.0, 0.0, 0.0, 1.0]);
        }
        assert!(confusion_matrix(&[(5, 0)], 5).is_err());
        let sparse = confusion_matrix(&[(0, 1)], 3).unwrap();
        assert_eq!(sparse.fractions()[2], vec![0.0; 3]);
    }

    #[test]
    fn histogram_bins() {
        let h = reliability_histogram(&[0.0, 0.049, 0.05, 0.15, 0.5, 0.999, 1.0]);
        assert_eq!(h.len(), 20);
        assert_eq!(h[0], 2);
        assert_eq!(h[1], 1);
        assert_eq!(h[3], 1);
        assert_eq!(h[10], 1);
        assert_eq!(h[19], 2);
    }

    #[test]
    fn precision_recall_basics() {
        let five = ScoreSet::from_range(1.0, 5.0, 1.0).unwrap();
        let r = |user, item, score| Rating { user, item, score };
        // user 0 likes items 0..=3 (4 or 5 stars) and dislikes item 4
        let test = vec![r(0, 0, 4), r(0, 1, 4), r(0, 2, 3), r(0, 3, 4), r(0, 4, 0)];
        let recs = vec![vec![0, 1]];
        let (p, rec) = precision_recall_at_n(&recs, &test, &five, 10, 4.0).unwrap();
        assert_eq!(p, 1.0);
        assert_eq!(rec, 0.5);

        // second user with an empty list and liked items: no precision
        // contribution, zero recall contribution
        let mut test2 = test.clone();
        test2.push(r(1, 0, 4));
        let recs2 = vec![vec![0, 4], vec![]];
        let (p, rec) = precision_recall_at_n(&recs2, &test2, &five, 10, 4.0).unwrap();
        assert_eq!(p, 0.5);
        assert_eq!(rec, 0.125);

        assert!(precision_recall_at_n(&recs, &test, &five, 0, 4.0).is_err());
        assert!(precision_recall_at_n(&[vec![0, 1, 2]], &test, &five, 2, 4.0).is_err());
        assert_eq!(
            precision_recall_at_n(&[vec![]], &[], &five, 10, 4.0).unwrap(),
            (0.0, 0.0)
        );
    }
}
