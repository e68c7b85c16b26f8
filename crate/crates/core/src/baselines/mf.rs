//! Regression matrix factorization (PMF and biased MF) trained by SGD on
//! squared error.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bemf::{dot, FactorMatrix};
use crate::data::RatingDataset;
use crate::error::{Error, Result};
use crate::predictor::RatingPredictor;
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MfVariant {
    Pmf,
    BiasedMf,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MfHyperparams {
    pub k: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub iterations: usize,
    pub seed: u64,
}

impl MfHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }
}

/// A real-valued observation `(user, item, target)`.
pub type Observation = (usize, usize, f64);

#[derive(Clone, Debug, PartialEq)]
pub struct MfModel {
    pub variant: MfVariant,
    pub hyperparams: MfHyperparams,
    pub user_factors: FactorMatrix,
    pub item_factors: FactorMatrix,
    pub global_mean: f64,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    /// Predictions are clamped to this range when present.
    pub bounds: Option<(f64, f64)>,
}

impl MfModel {
    /// Fits to a rating dataset; predictions are clamped to the score range.
    pub fn fit(train: &RatingDataset, variant: MfVariant, hp: MfHyperparams) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let scores = train.score_set();
        let obs: Vec<Observation> = train
            .iter()
            .map(|r| (r.user, r.item, scores.value(r.score)))
            .collect();
        Self::fit_observations(
            train.num_users(),
            train.num_items(),
            &obs,
            variant,
            hp,
            Some((scores.min(), scores.max())),
        )
    }

    /// Fits to arbitrary real targets. Factors start i.i.d. U[0, 1) scaled by
    /// `1/k`; each epoch visits the observations in a seeded random order.
    pub fn fit_observations(
        num_users: usize,
        num_items: usize,
        obs: &[Observation],
        variant: MfVariant,
        hp: MfHyperparams,
        bounds: Option<(f64, f64)>,
    ) -> Result<Self> {
        hp.validate()?;
        if obs.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if let Some(&(u, i, _)) = obs
            .iter()
            .find(|&&(u, i, _)| u >= num_users || i >= num_items)
        {
            return Err(Error::DimensionMismatch(format!(
                "observation ({u}, {i}) outside {num_users}x{num_items}"
            )));
        }
        let k = hp.k;
        let init = |side: u64, rows: usize| {
            let data = (0..rows * k)
                .map(|j| rng::uniform(hp.seed, &[side, (j / k) as u64, (j % k) as u64]) / k as f64)
                .collect();
            FactorMatrix::from_vec(rows, k, data).unwrap()
        };
        let global_mean = match variant {
            MfVariant::Pmf => 0.0,
            MfVariant::BiasedMf => obs.iter().map(|o| o.2).sum::<f64>() / obs.len() as f64,
        };
        let mut model = MfModel {
            variant,
            hyperparams: hp,
            user_factors: init(0, num_users),
            item_factors: init(1, num_items),
            global_mean,
            user_bias: vec![0.0; num_users],
            item_bias: vec![0.0; num_items],
            bounds,
        };

        let mut order: Vec<usize> = (0..obs.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let (gamma, lambda) = (hp.gamma, hp.lambda);
        for iteration in 1..=hp.iterations {
            order.shuffle(&mut rng);
            for &j in &order {
                let (u, i, target) = obs[j];
                let err = target - model.predict_raw(u, i);
                if variant == MfVariant::BiasedMf {
                    model.user_bias[u] += gamma * (err - lambda * model.user_bias[u]);
                    model.item_bias[i] += gamma * (err - lambda * model.item_bias[i]);
                }
                for f in 0..k {
                    let uf = model.user_factors.row(u)[f];
                    let vf = model.item_factors.row(i)[f];
                    model.user_factors.row_mut(u)[f] += gamma * (err * vf - lambda * uf);
                    model.item_factors.row_mut(i)[f] += gamma * (err * uf - lambda * vf);
                }
            }
            let finite = model.user_factors.is_finite()
                && model.item_factors.is_finite()
                && model
                    .user_bias
                    .iter()
                    .chain(&model.item_bias)
                    .all(|b| b.is_finite());
            if !finite {
                return Err(Error::Divergence { iteration });
            }
        }
        Ok(model)
    }

    /// Unclamped model output.
    pub fn predict_raw(&self, user: usize, item: usize) -> f64 {
        let x = dot(self.user_factors.row(user), self.item_factors.row(item));
        match self.variant {
            MfVariant::Pmf => x,
            MfVariant::BiasedMf => {
                self.global_mean + self.user_bias[user] + self.item_bias[item] + x
            }
        }
    }

    pub fn predict(&self, user: usize, item: usize) -> f64 {
        let x = self.predict_raw(user, item);
        match self.bounds {
            Some((lo, hi)) => x.clamp(lo, hi),
            None => x,
        }
    }

    pub fn num_users(&self) -> usize {
        self.user_factors.rows()
    }

    pub fn num_items(&self) -> usize {
        self.item_factors.rows()
    }

    /// Root mean squared error of clamped predictions over `obs`.
    pub fn rmse(&self, obs: &[Observation]) -> f64 {
        let sse: f64 = obs
            .iter()
            .map(|&(u, i, t)| (t - self.predict(u, i)).powi(2))
            .sum();
        (sse / obs.len() as f64).sqrt()
    }
}

impl RatingPredictor for MfModel {
    fn predict_value(&self, user: usize, item: usize) -> Option<f64> {
        Some(self.predict(user, item))
    }
}
