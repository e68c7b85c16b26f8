//! Python bindings: score sets, rating data, BeMF training and prediction,
//! model files and the accuracy metrics.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use bemf_core::eval::metrics;
use bemf_core::{Delimiter, Hyperparams, Rating, RatingFormat, SavedModel};

fn to_py(e: bemf_core::Error) -> PyErr {
    if e.is_validation() {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

/// Ordered set of admissible rating values.
#[pyclass(module = "bemf", frozen, skip_from_py_object)]
#[derive(Clone)]
struct ScoreSet(bemf_core::ScoreSet);

#[pymethods]
impl ScoreSet {
    #[new]
    fn new(values: Vec<f64>) -> PyResult<Self> {
        bemf_core::ScoreSet::new(&values)
            .map(ScoreSet)
            .map_err(to_py)
    }

    /// Evenly spaced values from `min` to `max` inclusive.
    #[staticmethod]
    fn from_range(min: f64, max: f64, step: f64) -> PyResult<Self> {
        bemf_core::ScoreSet::from_range(min, max, step)
            .map(ScoreSet)
            .map_err(to_py)
    }

    fn values(&self) -> Vec<f64> {
        self.0.values()
    }

    fn index_of(&self, value: f64) -> Option<usize> {
        self.0.index_of(value)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __repr__(&self) -> String {
        format!("ScoreSet({:?})", self.0.values())
    }
}

/// Sparse user x item matrix of score indices.
#[pyclass(module = "bemf", frozen, skip_from_py_object)]
#[derive(Clone)]
struct RatingDataset(bemf_core::RatingDataset);

#[pymethods]
impl RatingDataset {
    /// `ratings` holds `(user, item, score_index)` triples.
    #[new]
    fn new(
        scores: &ScoreSet,
        num_users: usize,
        num_items: usize,
        ratings: Vec<(usize, usize, usize)>,
    ) -> PyResult<Self> {
        let ratings: Vec<Rating> = ratings
            .into_iter()
            .map(|(user, item, score)| Rating { user, item, score })
            .collect();
        bemf_core::RatingDataset::from_ratings(scores.0.clone(), num_users, num_items, &ratings)
            .map(RatingDataset)
            .map_err(to_py)
    }

    /// Reads `user<delim>item<delim>rating` lines.
    #[staticmethod]
    #[pyo3(signature = (path, scores, delimiter = ",", has_header = false))]
    fn load(path: &str, scores: &ScoreSet, delimiter: &str, has_header: bool) -> PyResult<Self> {
        let delimiter = match delimiter {
            "," => Delimiter::Comma,
            "\t" => Delimiter::Tab,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unsupported delimiter {other:?}"
                )))
            }
        };
        let f = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        bemf_core::parse_ratings(
            BufReader::new(f),
            &scores.0,
            RatingFormat {
                delimiter,
                has_header,
            },
        )
        .map(RatingDataset)
        .map_err(to_py)
    }

    /// Random train/test split: `(train, [(user, item, score_index), ...])`.
    fn split(
        &self,
        test_ratio: f64,
        seed: u64,
    ) -> PyResult<(RatingDataset, Vec<(usize, usize, usize)>)> {
        let s = bemf_core::split_train_test(&self.0, test_ratio, seed).map_err(to_py)?;
        let test = s.test.iter().map(|r| (r.user, r.item, r.score)).collect();
        Ok((RatingDataset(s.train), test))
    }

    fn ratings(&self) -> Vec<(usize, usize, usize)> {
        self.0.iter().map(|r| (r.user, r.item, r.score)).collect()
    }

    #[getter]
    fn scores(&self) -> ScoreSet {
        ScoreSet(self.0.score_set().clone())
    }

    #[getter]
    fn num_users(&self) -> usize {
        self.0.num_users()
    }

    #[getter]
    fn num_items(&self) -> usize {
        self.0.num_items()
    }

    fn __len__(&self) -> usize {
        self.0.num_ratings()
    }
}

/// One Bernoulli factorization per score.
#[pyclass(module = "bemf")]
struct BemfModel(bemf_core::BemfModel);

#[pymethods]
impl BemfModel {
    #[staticmethod]
    #[pyo3(signature = (train, k = 2, gamma = 0.006, eta = 0.16, iterations = 100, seed = 0))]
    fn fit(
        py: Python<'_>,
        train: &RatingDataset,
        k: usize,
        gamma: f64,
        eta: f64,
        iterations: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let hp = Hyperparams {
            k,
            gamma,
            eta,
            iterations,
            seed,
            ..Default::default()
        };
        let data = &train.0;
        py.detach(|| bemf_core::BemfModel::fit(data, hp))
            .map(BemfModel)
            .map_err(to_py)
    }

    /// Runs more training iterations in place.
    fn train(&mut self, py: Python<'_>, data: &RatingDataset, iterations: usize) -> PyResult<()> {
        let model = &mut self.0;
        py.detach(|| model.train(&data.0, iterations))
            .map_err(to_py)
    }

    /// `(probabilities, predicted score index, reliability)`.
    fn predict_distribution(
        &self,
        user: usize,
        item: usize,
    ) -> PyResult<(Vec<f64>, Option<usize>, f64)> {
        self.check(user, item)?;
        let out = self.0.predict_distribution(user, item);
        Ok((out.probabilities, out.predicted, out.reliability))
    }

    /// Predicted score value, or `None` when reliability is below `threshold`.
    #[pyo3(signature = (user, item, threshold = 0.0))]
    fn predict(&self, user: usize, item: usize, threshold: f64) -> PyResult<(Option<f64>, f64)> {
        self.check(user, item)?;
        let (index, reliability) = self.0.predict(user, item, threshold).map_err(to_py)?;
        Ok((index.map(|s| self.0.score_set().value(s)), reliability))
    }

    fn like_probability(&self, user: usize, item: usize, like_threshold: f64) -> PyResult<f64> {
        self.check(user, item)?;
        Ok(self.0.like_probability(user, item, like_threshold))
    }

    fn total_cost(&self, data: &RatingDataset) -> PyResult<f64> {
        self.0.total_cost(&data.0).map_err(to_py)
    }

    /// Rows of the user factor matrix for one score index.
    fn user_factors(&self, score: usize) -> PyResult<Vec<Vec<f64>>> {
        self.check_score(score)?;
        let m = self.0.user_factors(score);
        Ok((0..m.rows()).map(|r| m.row(r).to_vec()).collect())
    }

    fn item_factors(&self, score: usize) -> PyResult<Vec<Vec<f64>>> {
        self.check_score(score)?;
        let m = self.0.item_factors(score);
        Ok((0..m.rows()).map(|r| m.row(r).to_vec()).collect())
    }

    fn save(&self, path: &str) -> PyResult<()> {
        let io = |e: std::io::Error| PyIOError::new_err(format!("{path}: {e}"));
        let mut w = BufWriter::new(File::create(path).map_err(io)?);
        bemf_core::write_model(&mut w, &SavedModel::Bemf(self.0.clone())).map_err(to_py)?;
        w.flush().map_err(io)
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        let f = File::open(path).map_err(|e| PyIOError::new_err(format!("{path}: {e}")))?;
        match bemf_core::read_model(BufReader::new(f)).map_err(to_py)? {
            SavedModel::Bemf(m) => Ok(BemfModel(m)),
            other => Err(PyValueError::new_err(format!(
                "{path} holds a {} model",
                other.kind()
            ))),
        }
    }

    #[getter]
    fn scores(&self) -> ScoreSet {
        ScoreSet(self.0.score_set().clone())
    }

    #[getter]
    fn num_users(&self) -> usize {
        self.0.num_users()
    }

    #[getter]
    fn num_items(&self) -> usize {
        self.0.num_items()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }
}

impl BemfModel {
    fn check(&self, user: usize, item: usize) -> PyResult<()> {
        if user >= self.0.num_users() || item >= self.0.num_items() {
            return Err(PyValueError::new_err(format!(
                "({user}, {item}) is outside the {}x{} model",
                self.0.num_users(),
                self.0.num_items()
            )));
        }
        Ok(())
    }

    fn check_score(&self, score: usize) -> PyResult<()> {
        if score >= self.0.num_scores() {
            return Err(PyValueError::new_err(format!(
                "score index {score} out of range"
            )));
        }
        Ok(())
    }
}

/// Mean absolute error over `(actual, predicted or None)` pairs.
#[pyfunction]
fn mae(pairs: Vec<(f64, Option<f64>)>) -> PyResult<f64> {
    metrics::mae(&pairs).map_err(to_py)
}

/// Fraction of pairs with a prediction.
#[pyfunction]
fn coverage(pairs: Vec<(f64, Option<f64>)>) -> PyResult<f64> {
    metrics::coverage(&pairs).map_err(to_py)
}

/// Reliability-prediction index over `(reliability, absolute error)` pairs.
#[pyfunction]
fn rpi(pairs: Vec<(f64, f64)>) -> f64 {
    metrics::rpi(&pairs)
}

#[pymodule]
fn bemf(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ScoreSet>()?;
    m.add_class::<RatingDataset>()?;
    m.add_class::<BemfModel>()?;
    m.add_function(wrap_pyfunction!(mae, m)?)?;
    m.add_function(wrap_pyfunction!(coverage, m)?)?;
    m.add_function(wrap_pyfunction!(rpi, m)?)?;
    Ok(())
}
