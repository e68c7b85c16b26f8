//! Bernoulli matrix factorization for collaborative filtering.
//!
//! A rating matrix over a discrete score set is split into one binary
//! matrix per score, each factorized with a logistic likelihood. Normalizing
//! the per-score activations gives a probability distribution over the
//! scale: its argmax is the prediction and its maximum is a native
//! reliability value.

pub mod baselines;
pub mod bemf;
pub mod data;
pub mod error;
pub mod eval;
pub mod model_io;
pub mod predictor;
pub mod rng;
pub mod scores;
pub mod synthetic;

pub use bemf::{Activation, BemfModel, FactorMatrix, Hyperparams, PredictionOutput};
pub use data::{
    parse_ratings, parse_ratings_with_ids, score_views, split_train_test, write_ratings,
    BinaryScoreView, Delimiter, IdMap, Rating, RatingDataset, RatingFormat, SplitDataset,
};
pub use error::{Error, Result};
pub use model_io::{read_model, write_model, SavedModel};
pub use predictor::{RatingPredictor, ReliablePredictor};
pub use scores::ScoreSet;
