//! Quality measures, recommendation lists, threshold sweeps and CSV reports.

pub mod metrics;
pub mod recommend;
pub mod report;
pub mod sweep;

pub use metrics::{
    confusion_matrix, coverage, mae, precision_recall_at_n, reliability_histogram, rpi,
    rpi_weighted, ConfusionMatrix, PredictionPair,
};
pub use recommend::{build_recommendations, RecommendMode};
pub use report::{format_number, EvalReport};
pub use sweep::{
    recommendation_sweep, threshold_sweep, PredictionCurvePoint, RecommendationCurvePoint,
};
