use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use bemf_core::baselines::{KnnModel, MfModel, ReliabilityAddOn};
use bemf_core::{
    read_model, write_model, BemfModel, RatingDataset, RatingPredictor, ReliablePredictor,
    SavedModel,
};

use crate::config::{ModelConfig, ModelKind};
use crate::error::{io_error, CliError};

/// A model ready to predict.
pub enum Trained {
    Bemf(BemfModel),
    Mf(MfModel),
    Knn(KnnModel),
}

impl Trained {
    pub fn kind(&self) -> &'static str {
        match self {
            Trained::Bemf(_) => "bemf",
            Trained::Mf(m) => SavedModel::Mf(m.clone()).kind(),
            Trained::Knn(m) => SavedModel::Knn(m.config()).kind(),
        }
    }

    pub fn saved(&self) -> SavedModel {
        match self {
            Trained::Bemf(m) => SavedModel::Bemf(m.clone()),
            Trained::Mf(m) => SavedModel::Mf(m.clone()),
            Trained::Knn(m) => SavedModel::Knn(m.config()),
        }
    }

    pub fn as_bemf(&self) -> Option<&BemfModel> {
        match self {
            Trained::Bemf(m) => Some(m),
            _ => None,
        }
    }

    /// Rebuilds a predictor from a model file. KNN predicts from `train`.
    pub fn from_saved(saved: SavedModel, train: &RatingDataset) -> Result<Self, CliError> {
        let mismatch = |what: String| {
            Err(CliError::Validation(format!(
                "model does not match the data: {what}"
            )))
        };
        match saved {
            SavedModel::Bemf(m) => {
                if m.score_set() != train.score_set() {
                    return mismatch("score sets differ".into());
                }
                if (m.num_users(), m.num_items()) != (train.num_users(), train.num_items()) {
                    return mismatch(format!(
                        "model is {}x{}, data is {}x{}",
                        m.num_users(),
                        m.num_items(),
                        train.num_users(),
                        train.num_items()
                    ));
                }
                Ok(Trained::Bemf(m))
            }
            SavedModel::Mf(m) => {
                let scores = train.score_set();
                if m.bounds != Some((scores.min(), scores.max())) {
                    return mismatch("score ranges differ".into());
                }
                if (m.num_users(), m.num_items()) != (train.num_users(), train.num_items()) {
                    return mismatch(format!(
                        "model is {}x{}, data is {}x{}",
                        m.num_users(),
                        m.num_items(),
                        train.num_users(),
                        train.num_items()
                    ));
                }
                Ok(Trained::Mf(m))
            }
            SavedModel::Knn(c) => Ok(Trained::Knn(
                KnnModel::new(train.clone(), c)
                    .map_err(CliError::from_core)?
                    .with_cache(),
            )),
        }
    }
}

impl RatingPredictor for Trained {
    fn predict_value(&self, user: usize, item: usize) -> Option<f64> {
        match self {
            Trained::Bemf(m) => m.predict_value(user, item),
            Trained::Mf(m) => m.predict_value(user, item),
            Trained::Knn(m) => m.predict_value(user, item),
        }
    }
}

/// Native reliability for BeMF, add-on reliability when one is given, and a
/// constant 1 otherwise.
pub struct WithReliability<'a> {
    pub model: &'a Trained,
    pub addon: Option<&'a ReliabilityAddOn>,
}

impl ReliablePredictor for WithReliability<'_> {
    fn predict_with_reliability(&self, user: usize, item: usize) -> Option<(f64, f64)> {
        if let (Trained::Bemf(m), None) = (self.model, self.addon) {
            return m.predict_with_reliability(user, item);
        }
        let v = self.model.predict_value(user, item)?;
        Some((v, self.addon.map_or(1.0, |a| a.reliability(user, item))))
    }
}

/// Per-iteration training costs: `(iteration, score index, cost)`.
pub type CostLog = Vec<(usize, usize, f64)>;

pub fn train(
    config: &ModelConfig,
    train: &RatingDataset,
    log: &mut CostLog,
) -> Result<Trained, CliError> {
    let core = CliError::from_core;
    Ok(match config.kind {
        ModelKind::Bemf => {
            let hp = config.bemf();
            let total = hp.iterations;
            let model = BemfModel::fit_with(train, hp, |it, m| {
                let views = bemf_core::score_views(train);
                for v in &views {
                    if let Ok(c) = m.cost(v) {
                        log.push((it, v.score(), c));
                    }
                }
                if it % 10 == 0 || it == total {
                    log::info!("iteration {it}/{total}");
                }
            })
            .map_err(core)?;
            Trained::Bemf(model)
        }
        ModelKind::Pmf | ModelKind::Biasedmf => {
            let variant = config.mf_variant().expect("mf kind");
            Trained::Mf(MfModel::fit(train, variant, config.mf()).map_err(core)?)
        }
        ModelKind::KnnUser | ModelKind::KnnItem => {
            let c = config.knn().expect("knn kind");
            Trained::Knn(KnnModel::new(train.clone(), c).map_err(core)?.with_cache())
        }
    })
}

pub fn save(path: &Path, model: &SavedModel) -> Result<(), CliError> {
    let what = path.display().to_string();
    let f = File::create(path).map_err(io_error(&what))?;
    let mut w = BufWriter::new(f);
    write_model(&mut w, model).map_err(CliError::from_core)?;
    w.flush().map_err(io_error(&what))
}

pub fn load(path: &Path) -> Result<SavedModel, CliError> {
    let f = File::open(path)
        .map_err(|e| CliError::Validation(format!("cannot open model {}: {e}", path.display())))?;
    read_model(BufReader::new(f))
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}
