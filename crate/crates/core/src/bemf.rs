//! Bernoulli matrix factorization.
//!
//! One independent factorization is trained per score. Each known rating is a
//! Bernoulli trial in every per-score view: a success for the score it carries
//! and a failure for every other score. At prediction time the per-score
//! activations are normalized into a distribution over the rating scale; its
//! mode is the prediction and the mode's mass is the reliability.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{BinaryScoreView, RatingDataset};
use crate::error::{Error, Result};
use crate::predictor::{RatingPredictor, ReliablePredictor};
use crate::rng;
use crate::scores::ScoreSet;

/// Activations are clamped to `[ACTIVATION_EPS, 1 - ACTIVATION_EPS]`.
pub const ACTIVATION_EPS: f64 = 1e-12;

const USER_SIDE: u64 = 0;
const ITEM_SIDE: u64 = 1;

/// Logistic function, evaluated without overflow for large `|x|`.
pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Maps an inner product to a success probability.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Logistic,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        let p = match self {
            Activation::Logistic => logistic(x),
        };
        p.clamp(ACTIVATION_EPS, 1.0 - ACTIVATION_EPS)
    }

    /// `psi'(x) / psi(x)`: the step weight of a positive entry.
    pub fn positive_weight(self, x: f64) -> f64 {
        match self {
            Activation::Logistic => 1.0 - self.apply(x),
        }
    }

    /// `psi'(x) / (1 - psi(x))`: the step weight of a negative entry.
    pub fn negative_weight(self, x: f64) -> f64 {
        match self {
            Activation::Logistic => self.apply(x),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    /// Number of latent factors.
    pub k: usize,
    /// Learning rate.
    pub gamma: f64,
    /// L2 regularization, shared by user and item factors.
    pub eta: f64,
    /// Number of full passes over all scores.
    pub iterations: usize,
    #[serde(default)]
    pub activation: Activation,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams {
            k: 2,
            gamma: 0.006,
            eta: 0.16,
            iterations: 100,
            activation: Activation::Logistic,
            seed: 0,
        }
    }
}

impl Hyperparams {
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
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "eta must be non-negative, got {}",
                self.eta
            )));
        }
        Ok(())
    }
}

/// Row-major `rows x k` matrix of latent factors.
#[derive(Clone, Debug, PartialEq)]
pub struct FactorMatrix {
    rows: usize,
    k: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(rows: usize, k: usize) -> Self {
        FactorMatrix {
            rows,
            k,
            data: vec![0.0; rows * k],
        }
    }

    pub fn from_vec(rows: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * k {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {rows}x{k} matrix",
                data.len()
            )));
        }
        Ok(FactorMatrix { rows, k, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::DimensionMismatch("ragged factor rows".into()));
        }
        Self::from_vec(rows.len(), k, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.k..(r + 1) * self.k]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.k..(r + 1) * self.k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn squared_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gradient of the per-score cost with respect to both factor matrices.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradient {
    pub users: FactorMatrix,
    pub items: FactorMatrix,
}

/// Output for one user/item pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionOutput {
    /// Normalized per-score probabilities.
    pub probabilities: Vec<f64>,
    /// Index of the predicted score, `None` when abstaining.
    pub predicted: Option<usize>,
    /// Probability mass of the mode.
    pub reliability: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BemfModel {
    score_set: ScoreSet,
    hyperparams: Hyperparams,
    user_factors: Vec<FactorMatrix>,
    item_factors: Vec<FactorMatrix>,
}

impl BemfModel {
    /// Factors drawn i.i.d. from U[0, 1), keyed by (side, score, row, factor).
    pub fn initialize(
        score_set: ScoreSet,
        num_users: usize,
        num_items: usize,
        hyperparams: Hyperparams,
    ) -> Result<Self> {
        hyperparams.validate()?;
        let (k, seed) = (hyperparams.k, hyperparams.seed);
        let draw = |side: u64, s: usize, rows: usize| {
            let data = (0..rows * k)
                .map(|j| rng::uniform(seed, &[side, s as u64, (j / k) as u64, (j % k) as u64]))
                .collect();
            FactorMatrix { rows, k, data }
        };
        let d = score_set.len();
        Ok(BemfModel {
            user_factors: (0..d).map(|s| draw(USER_SIDE, s, num_users)).collect(),
            item_factors: (0..d).map(|s| draw(ITEM_SIDE, s, num_items)).collect(),
            score_set,
            hyperparams,
        })
    }

    /// Wraps explicit factors, one matrix per score on each side.
    pub fn from_factors(
        score_set: ScoreSet,
        hyperparams: Hyperparams,
        user_factors: Vec<FactorMatrix>,
        item_factors: Vec<FactorMatrix>,
    ) -> Result<Self> {
        hyperparams.validate()?;
        let d = score_set.len();
        if user_factors.len() != d || item_factors.len() != d {
            return Err(Error::DimensionMismatch(format!(
                "expected {d} factor matrices per side, got {} and {}",
                user_factors.len(),
                item_factors.len()
            )));
        }
        let (n, m, k) = (user_factors[0].rows, item_factors[0].rows, hyperparams.k);
        let consistent = user_factors.iter().all(|f| f.rows == n && f.k == k)
            && item_factors.iter().all(|f| f.rows == m && f.k == k);
        if !consistent {
            return Err(Error::DimensionMismatch(format!(
                "factor matrices must all be {n}x{k} (users) and {m}x{k} (items)"
            )));
        }
        Ok(BemfModel {
            score_set,
            hyperparams,
            user_factors,
            item_factors,
        })
    }

    /// Initializes from `hyperparams.seed` and runs `hyperparams.iterations`
    /// training iterations.
    pub fn fit(train: &RatingDataset, hyperparams: Hyperparams) -> Result<Self> {
        Self::fit_with(train, hyperparams, |_, _| {})
    }

    /// Like [`fit`](Self::fit), calling `observer(iteration, model)` after
    /// each completed iteration (1-based).
    pub fn fit_with(
        train: &RatingDataset,
        hyperparams: Hyperparams,
        observer: impl FnMut(usize, &BemfModel),
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let mut model = Self::initialize(
            train.score_set().clone(),
            train.num_users(),
            train.num_items(),
            hyperparams,
        )?;
        model.train_with(train, hyperparams.iterations, observer)?;
        Ok(model)
    }

    pub fn train(&mut self, train: &RatingDataset, iterations: usize) -> Result<()> {
        self.train_with(train, iterations, |_, _| {})
    }

    /// Runs `iterations` passes. Each pass visits every score in order; for
    /// each score all user rows are updated against the current item factors,
    /// then all item rows against the updated user factors.
    pub fn train_with(
        &mut self,
        train: &RatingDataset,
        iterations: usize,
        mut observer: impl FnMut(usize, &BemfModel),
    ) -> Result<()> {
        self.check_dataset(train)?;
        for iteration in 1..=iterations {
            for s in 0..self.num_scores() {
                self.update_score(train, s);
                if !self.user_factors[s].is_finite() || !self.item_factors[s].is_finite() {
                    return Err(Error::NonFinite {
                        iteration,
                        score: s,
                    });
                }
            }
            observer(iteration, self);
        }
        Ok(())
    }

    /// One user phase followed by one item phase for score `s`. Only the
    /// factors of score `s` are touched.
    pub fn update_score(&mut self, train: &RatingDataset, s: usize) {
        let hp = self.hyperparams;
        phase(
            &mut self.user_factors[s],
            &self.item_factors[s],
            |u| train.user_ratings(u),
            s,
            hp,
        );
        phase(
            &mut self.item_factors[s],
            &self.user_factors[s],
            |i| train.item_ratings(i),
            s,
            hp,
        );
    }

    fn check_dataset(&self, data: &RatingDataset) -> Result<()> {
        if data.score_set() != &self.score_set {
            return Err(Error::DimensionMismatch(
                "dataset and model use different score sets".into(),
            ));
        }
        if data.num_users() != self.num_users() || data.num_items() != self.num_items() {
            return Err(Error::DimensionMismatch(format!(
                "dataset is {}x{}, model is {}x{}",
                data.num_users(),
                data.num_items(),
                self.num_users(),
                self.num_items()
            )));
        }
        Ok(())
    }

    /// Negative log-posterior of one score's binary view, up to a constant.
    pub fn cost(&self, view: &BinaryScoreView<'_>) -> Result<f64> {
        self.check_dataset(view.dataset())?;
        let s = view.score();
        let (uf, vf) = (&self.user_factors[s], &self.item_factors[s]);
        let act = self.hyperparams.activation;
        let data = view.dataset();
        let per_user: Vec<f64> = (0..data.num_users())
            .into_par_iter()
            .map(|u| {
                let urow = uf.row(u);
                data.user_ratings(u)
                    .iter()
                    .map(|&(i, score)| {
                        let p = act.apply(dot(urow, vf.row(i)));
                        if score == s {
                            -p.ln()
                        } else {
                            -(1.0 - p).ln()
                        }
                    })
                    .sum()
            })
            .collect();
        let loss: f64 = per_user.iter().sum();
        Ok(loss + 0.5 * self.hyperparams.eta * (uf.squared_norm() + vf.squared_norm()))
    }

    /// Sum of [`cost`](Self::cost) over all scores.
    pub fn total_cost(&self, data: &RatingDataset) -> Result<f64> {
        crate::data::score_views(data)
            .iter()
            .map(|v| self.cost(v))
            .sum()
    }

    /// Analytic gradient of [`cost`](Self::cost).
    pub fn gradient(&self, view: &BinaryScoreView<'_>) -> Result<Gradient> {
        self.check_dataset(view.dataset())?;
        let s = view.score();
        let (uf, vf) = (&self.user_factors[s], &self.item_factors[s]);
        let (act, eta, k) = (self.hyperparams.activation, self.hyperparams.eta, self.k());
        let mut gu = FactorMatrix::zeros(uf.rows, k);
        let mut gv = FactorMatrix::zeros(vf.rows, k);
        for (u, i, positive) in view.entries() {
            let x = dot(uf.row(u), vf.row(i));
            let w = if positive {
                -act.positive_weight(x)
            } else {
                act.negative_weight(x)
            };
            for f in 0..k {
                gu.row_mut(u)[f] += w * vf.row(i)[f];
                gv.row_mut(i)[f] += w * uf.row(u)[f];
            }
        }
        for (g, x) in gu.data.iter_mut().zip(&uf.data) {
            *g += eta * x;
        }
        for (g, x) in gv.data.iter_mut().zip(&vf.data) {
            *g += eta * x;
        }
        Ok(Gradient {
            users: gu,
            items: gv,
        })
    }

    /// Unnormalized per-score activations for `(user, item)`.
    pub fn activations(&self, user: usize, item: usize) -> Vec<f64> {
        assert!(
            user < self.num_users() && item < self.num_items(),
            "pair out of range"
        );
        let act = self.hyperparams.activation;
        (0..self.num_scores())
            .map(|s| {
                act.apply(dot(
                    self.user_factors[s].row(user),
                    self.item_factors[s].row(item),
                ))
            })
            .collect()
    }

    /// The normalized distribution, its mode (lowest index on ties) and the
    /// mode's mass. Never abstains.
    ///
    /// # Panics
    /// If `user` or `item` is out of range.
    pub fn predict_distribution(&self, user: usize, item: usize) -> PredictionOutput {
        let raw = self.activations(user, item);
        let total: f64 = raw.iter().sum();
        let probabilities: Vec<f64> = raw.iter().map(|a| a / total).collect();
        let (mode, reliability) = argmax(&probabilities);
        PredictionOutput {
            probabilities,
            predicted: Some(mode),
            reliability,
        }
    }

    /// Predicted score index, or `None` when the reliability is below
    /// `threshold`. Returns the reliability either way.
    pub fn predict(
        &self,
        user: usize,
        item: usize,
        threshold: f64,
    ) -> Result<(Option<usize>, f64)> {
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidArgument(format!(
                "reliability threshold must be in [0, 1], got {threshold}"
            )));
        }
        let out = self.predict_distribution(user, item);
        let predicted = if out.reliability < threshold {
            None
        } else {
            out.predicted
        };
        Ok((predicted, out.reliability))
    }

    /// Probability mass on scores whose value is at least `like_threshold`.
    pub fn like_probability(&self, user: usize, item: usize, like_threshold: f64) -> f64 {
        let out = self.predict_distribution(user, item);
        self.score_set
            .indices_at_least(like_threshold)
            .map(|j| out.probabilities[j])
            .sum()
    }

    pub fn score_set(&self) -> &ScoreSet {
        &self.score_set
    }

    pub fn hyperparams(&self) -> &Hyperparams {
        &self.hyperparams
    }

    pub fn num_scores(&self) -> usize {
        self.score_set.len()
    }

    pub fn num_users(&self) -> usize {
        self.user_factors[0].rows
    }

    pub fn num_items(&self) -> usize {
        self.item_factors[0].rows
    }

    pub fn k(&self) -> usize {
        self.hyperparams.k
    }

    pub fn user_factors(&self, score: usize) -> &FactorMatrix {
        &self.user_factors[score]
    }

    pub fn item_factors(&self, score: usize) -> &FactorMatrix {
        &self.item_factors[score]
    }

    pub fn user_factors_mut(&mut self, score: usize) -> &mut FactorMatrix {
        &mut self.user_factors[score]
    }

    pub fn item_factors_mut(&mut self, score: usize) -> &mut FactorMatrix {
        &mut self.item_factors[score]
    }
}

/// Updates every row of `target` from its rated neighbours in `other`.
/// Rows are independent, so they run in parallel with identical results for
/// any worker count.
fn phase<'a>(
    target: &mut FactorMatrix,
    other: &FactorMatrix,
    neighbours: impl Fn(usize) -> &'a [(usize, usize)] + Sync,
    s: usize,
    hp: Hyperparams,
) {
    let k = target.k;
    target
        .data
        .par_chunks_mut(k)
        .with_min_len(64)
        .enumerate()
        .for_each(|(r, row)| {
            let mut delta = vec![0.0; k];
            for &(j, score) in neighbours(r) {
                let orow = other.row(j);
                let x = dot(row, orow);
                let w = if score == s {
                    hp.activation.positive_weight(x)
                } else {
                    -hp.activation.negative_weight(x)
                };
                for (d, o) in delta.iter_mut().zip(orow) {
                    *d += w * o;
                }
            }
            for (x, d) in row.iter_mut().zip(&delta) {
                *x += hp.gamma * (d - hp.eta * *x);
            }
        });
}

/// Index and value of the maximum; the lowest index wins ties.
pub(crate) fn argmax(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (j, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (j, v);
        }
    }
    best
}

impl RatingPredictor for BemfModel {
    fn predict_value(&self, user: usize, item: usize) -> Option<f64> {
        let out = self.predict_distribution(user, item);
        out.predicted.map(|j| self.score_set.value(j))
    }
}

impl ReliablePredictor for BemfModel {
    fn predict_with_reliability(&self, user: usize, item: usize) -> Option<(f64, f64)> {
        let out = self.predict_distribution(user, item);
        out.predicted
            .map(|j| (self.score_set.value(j), out.reliability))
    }
}
