//! Experiment configuration (TOML).

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use bemf_core::baselines::{KnnConfig, KnnMode, MfHyperparams, MfVariant};
use bemf_core::{
    parse_ratings, parse_ratings_with_ids, split_train_test, Delimiter, Hyperparams, RatingFormat,
    ScoreSet, SplitDataset,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub output_dir: PathBuf,
    pub data: DataConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitConfig>,
    pub model: ModelConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reliability: Option<AddOnConfig>,
    #[serde(default)]
    pub evaluation: EvaluationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScoreSpec {
    /// `"min,max,step"`
    Range(String),
    List(Vec<f64>),
}

impl ScoreSpec {
    pub fn build(&self) -> bemf_core::Result<ScoreSet> {
        match self {
            ScoreSpec::Range(s) => ScoreSet::parse_range(s),
            ScoreSpec::List(v) => ScoreSet::new(v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DelimiterName {
    Tab,
    Comma,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// A single ratings file to be split; mutually exclusive with
    /// `train`/`test`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<PathBuf>,
    pub delimiter: DelimiterName,
    #[serde(default)]
    pub has_header: bool,
    pub scores: ScoreSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitConfig {
    pub ratio: f64,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Bemf,
    Pmf,
    Biasedmf,
    KnnUser,
    KnnItem,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bemf => "bemf",
            ModelKind::Pmf => "pmf",
            ModelKind::Biasedmf => "biasedmf",
            ModelKind::KnnUser => "knn-user",
            ModelKind::KnnItem => "knn-item",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub kind: ModelKind,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    /// BeMF regularization.
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// PMF / biased MF regularization.
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
    /// KNN neighbourhood size.
    #[serde(default = "default_neighbors")]
    pub neighbors: usize,
}

fn default_k() -> usize {
    2
}
fn default_gamma() -> f64 {
    0.006
}
fn default_eta() -> f64 {
    0.16
}
fn default_lambda() -> f64 {
    0.055
}
fn default_iterations() -> usize {
    100
}
fn default_neighbors() -> usize {
    50
}

impl ModelConfig {
    pub fn bemf(&self) -> Hyperparams {
        Hyperparams {
            k: self.k,
            gamma: self.gamma,
            eta: self.eta,
            iterations: self.iterations,
            seed: self.seed,
            ..Default::default()
        }
    }

    pub fn mf(&self) -> MfHyperparams {
        MfHyperparams {
            k: self.k,
            gamma: self.gamma,
            lambda: self.lambda,
            iterations: self.iterations,
            seed: self.seed,
        }
    }

    pub fn mf_variant(&self) -> Option<MfVariant> {
        match self.kind {
            ModelKind::Pmf => Some(MfVariant::Pmf),
            ModelKind::Biasedmf => Some(MfVariant::BiasedMf),
            _ => None,
        }
    }

    pub fn knn(&self) -> Option<KnnConfig> {
        let mode = match self.kind {
            ModelKind::KnnUser => KnnMode::UserBased,
            ModelKind::KnnItem => KnnMode::ItemBased,
            _ => return None,
        };
        Some(KnnConfig {
            mode,
            neighbors: self.neighbors,
        })
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let field = |e: bemf_core::Error| CliError::Validation(format!("model: {e}"));
        match self.kind {
            ModelKind::Bemf => self.bemf().validate().map_err(field),
            ModelKind::Pmf | ModelKind::Biasedmf => self.mf().validate().map_err(field),
            ModelKind::KnnUser | ModelKind::KnnItem => {
                if self.neighbors == 0 {
                    Err(CliError::Validation(
                        "model.neighbors must be at least 1".into(),
                    ))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Error-matrix reliability add-on trained on the base model's errors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AddOnConfig {
    #[serde(default = "yes")]
    pub enabled: bool,
    #[serde(default = "default_addon_k")]
    pub k: usize,
    #[serde(default = "default_addon_gamma")]
    pub gamma: f64,
    #[serde(default = "default_addon_lambda")]
    pub lambda: f64,
    #[serde(default = "default_addon_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub seed: u64,
}

fn yes() -> bool {
    true
}
fn default_addon_k() -> usize {
    4
}
fn default_addon_gamma() -> f64 {
    0.01
}
fn default_addon_lambda() -> f64 {
    0.05
}
fn default_addon_iterations() -> usize {
    50
}

impl AddOnConfig {
    pub fn hyperparams(&self) -> MfHyperparams {
        MfHyperparams {
            k: self.k,
            gamma: self.gamma,
            lambda: self.lambda,
            iterations: self.iterations,
            seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecommendBy {
    /// Rank by probability of liking (BeMF only).
    Reliability,
    /// Rank by predicted rating.
    Prediction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationConfig {
    #[serde(default = "default_n")]
    pub n: usize,
    /// Minimum rating counted as liked.
    #[serde(default = "default_like_threshold")]
    pub like_threshold: f64,
    /// Reliability thresholds swept in the curve files, ascending.
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    /// Reliability threshold used for the summary metrics.
    #[serde(default)]
    pub threshold: f64,
    /// Defaults to `reliability` for BeMF and `prediction` otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recommend_by: Option<RecommendBy>,
}

fn default_n() -> usize {
    10
}
fn default_like_threshold() -> f64 {
    4.0
}
fn default_thresholds() -> Vec<f64> {
    (0..10).map(|j| j as f64 / 10.0).collect()
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            n: default_n(),
            like_threshold: default_like_threshold(),
            thresholds: default_thresholds(),
            threshold: 0.0,
            recommend_by: None,
        }
    }
}

impl EvaluationConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n == 0 {
            return Err(CliError::Validation(
                "evaluation.n must be at least 1".into(),
            ));
        }
        if self.thresholds.is_empty() {
            return Err(CliError::Validation(
                "evaluation.thresholds must not be empty".into(),
            ));
        }
        let in_unit = |t: f64| (0.0..=1.0).contains(&t);
        if !self.thresholds.iter().all(|&t| in_unit(t)) || !in_unit(self.threshold) {
            return Err(CliError::Validation(
                "evaluation thresholds must lie in [0, 1]".into(),
            ));
        }
        if self.thresholds.windows(2).any(|w| w[0] > w[1]) {
            return Err(CliError::Validation(
                "evaluation.thresholds must be ascending".into(),
            ));
        }
        Ok(())
    }
}

/// Values to try for each hyperparameter. Missing keys keep the value from
/// `[model]`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<GridValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<GridValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<GridValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub neighbors: Option<Vec<usize>>,
}

/// Explicit values or an inclusive `{ start, stop, step }` range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridValues {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl GridValues {
    /// Range points are computed as `start + j * step` and rounded to 12
    /// decimals so that e.g. `0.002..=0.02` yields exactly ten values.
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        match self {
            GridValues::List(v) => Ok(v.clone()),
            GridValues::Range { start, stop, step } => {
                if !(*step > 0.0) || stop < start {
                    return Err(CliError::Validation(format!(
                        "grid range needs step > 0 and stop >= start, got {start}..{stop} step {step}"
                    )));
                }
                let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                Ok((0..count)
                    .map(|j| ((start + j as f64 * step) * 1e12).round() / 1e12)
                    .collect())
            }
        }
    }
}

/// Training and test data resolved from the config.
pub struct LoadedData {
    pub split: SplitDataset,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Validation(format!("cannot read config {}: {e}", path.display()))
        })?;
        let mut config: ExperimentConfig = toml::from_str(&text)
            .map_err(|e| CliError::Validation(format!("config {}: {e}", path.display())))?;
        // relative paths are taken from the config file's directory
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [
            &mut config.data.path,
            &mut config.data.train,
            &mut config.data.test,
        ]
        .into_iter()
        .flatten()
        {
            resolve(p);
        }
        resolve(&mut config.output_dir);
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.data
            .scores
            .build()
            .map_err(|e| CliError::Validation(format!("data.scores: {e}")))?;
        match (&self.data.path, &self.data.train, &self.data.test) {
            (Some(p), None, None) => {
                check_file("data.path", p)?;
                let split = self.split.ok_or_else(|| {
                    CliError::Validation("data.path needs a [split] section".into())
                })?;
                if !(split.ratio > 0.0 && split.ratio < 1.0) {
                    return Err(CliError::Validation(format!(
                        "split.ratio must be in (0, 1), got {}",
                        split.ratio
                    )));
                }
            }
            (None, Some(train), Some(test)) => {
                check_file("data.train", train)?;
                check_file("data.test", test)?;
            }
            _ => {
                return Err(CliError::Validation(
                    "set either data.path or both data.train and data.test".into(),
                ))
            }
        }
        self.model.validate()?;
        self.evaluation.validate()?;
        if self.evaluation.recommend_by == Some(RecommendBy::Reliability)
            && self.model.kind != ModelKind::Bemf
        {
            return Err(CliError::Validation(
                "evaluation.recommend_by = \"reliability\" needs a bemf model".into(),
            ));
        }
        if let Some(addon) = &self.reliability {
            addon
                .hyperparams()
                .validate()
                .map_err(|e| CliError::Validation(format!("reliability: {e}")))?;
        }
        Ok(())
    }

    pub fn score_set(&self) -> Result<ScoreSet, CliError> {
        self.data
            .scores
            .build()
            .map_err(|e| CliError::Validation(format!("data.scores: {e}")))
    }

    pub fn format(&self) -> RatingFormat {
        RatingFormat {
            delimiter: match self.data.delimiter {
                DelimiterName::Tab => Delimiter::Tab,
                DelimiterName::Comma => Delimiter::Comma,
            },
            has_header: self.data.has_header,
        }
    }

    pub fn addon(&self) -> Option<&AddOnConfig> {
        self.reliability.as_ref().filter(|a| a.enabled)
    }

    pub fn recommend_by(&self) -> RecommendBy {
        self.evaluation
            .recommend_by
            .unwrap_or(match self.model.kind {
                ModelKind::Bemf => RecommendBy::Reliability,
                _ => RecommendBy::Prediction,
            })
    }

    /// Reads the ratings and produces the train/test partition.
    pub fn load_data(&self) -> Result<LoadedData, CliError> {
        let scores = self.score_set()?;
        let format = self.format();
        let open = |p: &Path| {
            File::open(p)
                .map(BufReader::new)
                .map_err(|e| CliError::Validation(format!("cannot open {}: {e}", p.display())))
        };
        if let Some(path) = &self.data.path {
            let split = self
                .split
                .ok_or_else(|| CliError::Validation("data.path needs a [split] section".into()))?;
            let data = parse_ratings(open(path)?, &scores, format).map_err(|e| in_file(path, e))?;
            let split =
                split_train_test(&data, split.ratio, split.seed).map_err(CliError::from_core)?;
            return Ok(LoadedData { split });
        }
        let (train_path, test_path) = match (&self.data.train, &self.data.test) {
            (Some(a), Some(b)) => (a, b),
            _ => {
                return Err(CliError::Validation(
                    "set either data.path or both data.train and data.test".into(),
                ))
            }
        };
        let train = parse_ratings(open(train_path)?, &scores, format)
            .map_err(|e| in_file(train_path, e))?;
        let test = parse_ratings_with_ids(
            open(test_path)?,
            &scores,
            format,
            train.user_ids(),
            train.item_ids(),
        )
        .map_err(|e| in_file(test_path, e))?;
        Ok(LoadedData {
            split: SplitDataset {
                train,
                test,
                seed: 0,
                test_ratio: f64::NAN,
            },
        })
    }
}

fn in_file(p: &Path, e: bemf_core::Error) -> CliError {
    CliError::from_core(e).context(&p.display().to_string())
}

fn check_file(field: &str, p: &Path) -> Result<(), CliError> {
    if p.is_file() {
        Ok(())
    } else {
        Err(CliError::Validation(format!(
            "{field}: file {} does not exist",
            p.display()
        )))
    }
}
