//! Reliability-threshold sweeps for predictions and recommendations.

use rayon::prelude::*;

use crate::data::Rating;
use crate::error::{Error, Result};
use crate::eval::metrics::{mae, precision_recall_at_n, PredictionPair};
use crate::eval::recommend::recommend_from_scores;
use crate::predictor::ReliablePredictor;
use crate::scores::ScoreSet;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PredictionCurvePoint {
    pub threshold: f64,
    /// `None` when every prediction was filtered out.
    pub mae: Option<f64>,
    pub coverage: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecommendationCurvePoint {
    pub threshold: f64,
    pub precision: f64,
    pub recall: f64,
}

/// One evaluated test pair: actual value and, if predicted,
/// `(value, reliability)`.
pub type ScoredPair = (f64, Option<(f64, f64)>);

/// Runs the predictor over the test set once, in parallel, in test order.
pub fn score_test_set<P: ReliablePredictor + ?Sized>(
    predictor: &P,
    test: &[Rating],
    scores: &ScoreSet,
) -> Vec<ScoredPair> {
    test.par_iter()
        .map(|r| {
            (
                scores.value(r.score),
                predictor.predict_with_reliability(r.user, r.item),
            )
        })
        .collect()
}

/// Prediction pairs after discarding predictions with reliability below
/// `threshold`.
pub fn filter_by_reliability(scored: &[ScoredPair], threshold: f64) -> Vec<PredictionPair> {
    scored
        .iter()
        .map(|&(a, p)| (a, p.filter(|&(_, rel)| rel >= threshold).map(|(v, _)| v)))
        .collect()
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument(
            "thresholds must be sorted ascending".into(),
        ));
    }
    Ok(())
}

/// `(threshold, MAE, coverage)` for each reliability threshold.
pub fn threshold_sweep<P: ReliablePredictor + ?Sized>(
    predictor: &P,
    test: &[Rating],
    scores: &ScoreSet,
    thresholds: &[f64],
) -> Result<Vec<PredictionCurvePoint>> {
    check_thresholds(thresholds)?;
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let scored = score_test_set(predictor, test, scores);
    Ok(sweep_scored(&scored, thresholds))
}

pub fn sweep_scored(scored: &[ScoredPair], thresholds: &[f64]) -> Vec<PredictionCurvePoint> {
    thresholds
        .iter()
        .map(|&t| {
            let pairs = filter_by_reliability(scored, t);
            let kept = pairs.iter().filter(|p| p.1.is_some()).count();
            PredictionCurvePoint {
                threshold: t,
                mae: mae(&pairs).ok(),
                coverage: kept as f64 / pairs.len() as f64,
            }
        })
        .collect()
}

/// `(threshold, precision, recall)` of top-`n` lists built from each user's
/// test items, keeping items whose `ranker` value reaches the threshold.
pub fn recommendation_sweep(
    test: &[Rating],
    scores: &ScoreSet,
    num_users: usize,
    thresholds: &[f64],
    n: usize,
    like_threshold: f64,
    ranker: impl Fn(usize, usize) -> Option<f64> + Sync,
) -> Result<Vec<RecommendationCurvePoint>> {
    check_thresholds(thresholds)?;
    let scored: Vec<(usize, usize, Option<f64>)> = test
        .par_iter()
        .map(|r| (r.user, r.item, ranker(r.user, r.item)))
        .collect();
    thresholds
        .iter()
        .map(|&t| {
            let recs = recommend_from_scores(&scored, num_users, n, t);
            let (precision, recall) =
                precision_recall_at_n(&recs, test, scores, n, like_threshold)?;
            Ok(RecommendationCurvePoint {
                threshold: t,
                precision,
                recall,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Fixed(Vec<Option<(f64, f64)>>);

    impl ReliablePredictor for Fixed {
        fn predict_with_reliability(&self, user: usize, _item: usize) -> Option<(f64, f64)> {
            self.0[user]
        }
    }

    fn setup() -> (Fixed, Vec<Rating>, ScoreSet) {
        let five = ScoreSet::from_range(1.0, 5.0, 1.0).unwrap();
        let preds = Fixed(vec![
            Some((5.0, 0.9)),
            Some((3.0, 0.2)),
            Some((1.0, 0.6)),
            None,
        ]);
        let test = vec![
            Rating {
                user: 0,
                item: 0,
                score: 4,
            },
            Rating {
                user: 1,
                item: 0,
                score: 0,
            },
            Rating {
                user: 2,
                item: 0,
                score: 1,
            },
            Rating {
                user: 3,
                item: 0,
                score: 2,
            },
        ];
        (preds, test, five)
    }

    #[test]
    fn sweep_matches_direct_filtering() {
        let (p, test, five) = setup();
        let curve = threshold_sweep(&p, &test, &five, &[0.0, 0.5, 0.95]).unwrap();
        assert_eq!(curve[0].coverage, 0.75);
        assert!((curve[0].mae.unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(curve[1].coverage, 0.5);
        assert!((curve[1].mae.unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(curve[2].coverage, 0.0);
        assert_eq!(curve[2].mae, None);
    }

    #[test]
    fn rejects_unsorted_thresholds() {
        let (p, test, five) = setup();
        assert!(threshold_sweep(&p, &test, &five, &[0.5, 0.1]).is_err());
        assert!(threshold_sweep(&p, &[], &five, &[0.0]).is_err());
    }
}
