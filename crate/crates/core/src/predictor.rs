//! Common prediction interfaces shared by BeMF, the baselines and the
//! evaluation code.

/// A model that predicts a rating value, possibly abstaining.
pub trait RatingPredictor: Sync {
    fn predict_value(&self, user: usize, item: usize) -> Option<f64>;
}

/// A model that attaches a reliability in `[0, 1]` to each prediction.
pub trait ReliablePredictor: Sync {
    /// `(predicted value, reliability)`, or `None` when the model cannot
    /// predict the pair at all.
    fn predict_with_reliability(&self, user: usize, item: usize) -> Option<(f64, f64)>;
}

impl<P: RatingPredictor + ?Sized> RatingPredictor for &P {
    fn predict_value(&self, user: usize, item: usize) -> Option<f64> {
        (**self).predict_value(user, item)
    }
}

impl<P: ReliablePredictor + ?Sized> ReliablePredictor for &P {
    fn predict_with_reliability(&self, user: usize, item: usize) -> Option<(f64, f64)> {
        (**self).predict_with_reliability(user, item)
    }
}
