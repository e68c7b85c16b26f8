use std::collections::HashMap;

use bemf_core::baselines::{EnforcedPredictor, ReliabilityAddOn};
use bemf_core::eval::metrics::{confusion_matrix, reliability_histogram, rpi};
use bemf_core::eval::sweep::{filter_by_reliability, score_test_set, sweep_scored, ScoredPair};
use bemf_core::eval::{
    build_recommendations, coverage, mae, precision_recall_at_n, EvalReport, RecommendMode,
    RecommendationCurvePoint,
};
use bemf_core::{ScoreSet, SplitDataset};

use crate::config::{EvaluationConfig, RecommendBy};
use crate::error::CliError;
use crate::models::{Trained, WithReliability};

/// MAE and coverage at one reliability threshold.
pub fn accuracy(
    model: &Trained,
    addon: Option<&ReliabilityAddOn>,
    split: &SplitDataset,
    threshold: f64,
) -> Result<(Option<f64>, f64), CliError> {
    let scores = split.train.score_set();
    if split.test.is_empty() {
        return Err(CliError::Validation("the test set is empty".into()));
    }
    let scored = score_test_set(&WithReliability { model, addon }, &split.test, scores);
    let pairs = filter_by_reliability(&scored, threshold);
    Ok((
        mae(&pairs).ok(),
        coverage(&pairs).map_err(CliError::from_core)?,
    ))
}

/// Index of the score nearest to `value`, lower on ties.
fn nearest_score(scores: &ScoreSet, value: f64) -> usize {
    (0..scores.len())
        .min_by(|&a, &b| {
            (scores.value(a) - value)
                .abs()
                .total_cmp(&(scores.value(b) - value).abs())
                .then(a.cmp(&b))
        })
        .expect("non-empty score set")
}

fn rpi_of(scored: &[ScoredPair]) -> f64 {
    let pairs: Vec<(f64, f64)> = scored
        .iter()
        .filter_map(|&(a, p)| p.map(|(v, r)| (r, (a - v).abs())))
        .collect();
    rpi(&pairs)
}

pub fn evaluate(
    model: &Trained,
    addon: Option<&ReliabilityAddOn>,
    split: &SplitDataset,
    eval: &EvaluationConfig,
    recommend_by: RecommendBy,
) -> Result<EvalReport, CliError> {
    let scores = split.train.score_set();
    let test = &split.test;
    if test.is_empty() {
        return Err(CliError::Validation("the test set is empty".into()));
    }
    let num_users = split.train.num_users();
    let has_reliability = model.as_bemf().is_some() || addon.is_some();
    // BeMF keeps its native reliability; an add-on is reported alongside.
    let primary = WithReliability {
        model,
        addon: if model.as_bemf().is_some() {
            None
        } else {
            addon
        },
    };
    log::info!("scoring {} test ratings", test.len());
    let scored = score_test_set(&primary, test, scores);

    let mut report = EvalReport::default();
    report.prediction_curve = sweep_scored(&scored, &eval.thresholds);

    let pairs = filter_by_reliability(&scored, eval.threshold);
    report.set("test_ratings", Some(test.len() as f64));
    report.set("threshold", Some(eval.threshold));
    report.set("mae", mae(&pairs).ok());
    report.set(
        "coverage",
        Some(coverage(&pairs).map_err(CliError::from_core)?),
    );

    if has_reliability {
        let key = if model.as_bemf().is_some() {
            "rpi_native"
        } else {
            "rpi_enforced"
        };
        report.set(key, Some(rpi_of(&scored)));
        let rels: Vec<f64> = scored.iter().filter_map(|p| p.1.map(|(_, r)| r)).collect();
        report.histogram = Some(reliability_histogram(&rels));
    }
    if let (Some(bemf), Some(addon)) = (model.as_bemf(), addon) {
        let enforced = score_test_set(&EnforcedPredictor { base: bemf, addon }, test, scores);
        report.set("rpi_enforced", Some(rpi_of(&enforced)));
    }

    let labels: Vec<(usize, usize)> = test
        .iter()
        .zip(&pairs)
        .filter_map(|(r, p)| p.1.map(|v| (r.score, nearest_score(scores, v))))
        .collect();
    report.confusion = Some(confusion_matrix(&labels, scores.len()).map_err(CliError::from_core)?);

    let n = eval.n;
    let theta = eval.like_threshold;
    let like: HashMap<(usize, usize), f64> = match (recommend_by, model.as_bemf()) {
        (RecommendBy::Reliability, Some(bemf)) => test
            .iter()
            .map(|r| {
                (
                    (r.user, r.item),
                    bemf.like_probability(r.user, r.item, theta),
                )
            })
            .collect(),
        (RecommendBy::Reliability, None) => {
            return Err(CliError::Validation(
                "ranking by reliability needs a bemf model".into(),
            ))
        }
        (RecommendBy::Prediction, _) => HashMap::new(),
    };
    let predicted: HashMap<(usize, usize), (f64, f64)> = test
        .iter()
        .zip(&scored)
        .filter_map(|(r, s)| s.1.map(|p| ((r.user, r.item), p)))
        .collect();
    let at = |t: f64| -> Result<RecommendationCurvePoint, CliError> {
        let recs = match recommend_by {
            RecommendBy::Reliability => build_recommendations(
                test,
                num_users,
                n,
                RecommendMode::ByReliability { min_probability: t },
                |u, i| like.get(&(u, i)).copied(),
            ),
            RecommendBy::Prediction => build_recommendations(
                test,
                num_users,
                n,
                RecommendMode::ByPrediction {
                    like_threshold: theta,
                },
                |u, i| predicted.get(&(u, i)).filter(|p| p.1 >= t).map(|p| p.0),
            ),
        };
        let (precision, recall) =
            precision_recall_at_n(&recs, test, scores, n, theta).map_err(CliError::from_core)?;
        Ok(RecommendationCurvePoint {
            threshold: t,
            precision,
            recall,
        })
    };
    report.recommendation_curve = eval
        .thresholds
        .iter()
        .map(|&t| at(t))
        .collect::<Result<_, _>>()?;
    let summary = at(eval.threshold)?;
    report.set("n", Some(n as f64));
    report.set("like_threshold", Some(theta));
    report.set("precision_at_n", Some(summary.precision));
    report.set("recall_at_n", Some(summary.recall));
    Ok(report)
}
