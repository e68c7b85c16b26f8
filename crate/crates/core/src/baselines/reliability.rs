//! Reliability retrofitted onto an arbitrary predictor by factorizing the
//! matrix of its absolute training errors.

use crate::baselines::mf::{MfHyperparams, MfModel, MfVariant, Observation};
use crate::data::RatingDataset;
use crate::error::{Error, Result};
use crate::predictor::{RatingPredictor, ReliablePredictor};

#[derive(Clone, Debug, PartialEq)]
pub struct ReliabilityAddOn {
    error_model: MfModel,
}

impl ReliabilityAddOn {
    /// Builds `E(u, i) = |R(u, i) - base(u, i)|` over the training ratings the
    /// base model can predict and fits a PMF to it.
    pub fn fit<P: RatingPredictor + ?Sized>(
        base: &P,
        train: &RatingDataset,
        hp: MfHyperparams,
    ) -> Result<Self> {
        let scores = train.score_set();
        let errors: Vec<Observation> = train
            .iter()
            .filter_map(|r| {
                base.predict_value(r.user, r.item)
                    .map(|p| (r.user, r.item, (scores.value(r.score) - p).abs()))
            })
            .collect();
        if errors.is_empty() {
            return Err(Error::AllAbstained);
        }
        let error_model = MfModel::fit_observations(
            train.num_users(),
            train.num_items(),
            &errors,
            MfVariant::Pmf,
            hp,
            None,
        )?;
        Ok(ReliabilityAddOn { error_model })
    }

    pub fn from_error_model(error_model: MfModel) -> Self {
        ReliabilityAddOn { error_model }
    }

    pub fn error_model(&self) -> &MfModel {
        &self.error_model
    }

    pub fn predicted_error(&self, user: usize, item: usize) -> f64 {
        self.error_model.predict_raw(user, item)
    }

    /// `1 / (1 + max(0, predicted error))`, in `(0, 1]`.
    pub fn reliability(&self, user: usize, item: usize) -> f64 {
        reliability_from_error(self.predicted_error(user, item))
    }
}

pub fn reliability_from_error(predicted_error: f64) -> f64 {
    1.0 / (1.0 + predicted_error.max(0.0))
}

/// A base predictor paired with an add-on reliability.
pub struct EnforcedPredictor<'a, P: ?Sized> {
    pub base: &'a P,
    pub addon: &'a ReliabilityAddOn,
}

impl<P: RatingPredictor + ?Sized> ReliablePredictor for EnforcedPredictor<'_, P> {
    fn predict_with_reliability(&self, user: usize, item: usize) -> Option<(f64, f64)> {
        self.base
            .predict_value(user, item)
            .map(|v| (v, self.addon.reliability(user, item)))
    }
}
