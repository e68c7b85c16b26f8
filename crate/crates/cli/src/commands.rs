use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use bemf_core::baselines::ReliabilityAddOn;
use bemf_core::eval::format_number;
use bemf_core::{write_ratings, RatingFormat, SavedModel};
use rayon::prelude::*;

use crate::config::{ExperimentConfig, GridValues, ModelConfig, ModelKind};
use crate::error::{io_error, CliError};
use crate::evaluate;
use crate::models::{self, Trained};

pub const MODEL_FILE: &str = "model.bin";
pub const ADDON_FILE: &str = "reliability.bin";
pub const TRAIN_LOG: &str = "train_log.csv";
pub const GRID_FILE: &str = "grid.csv";

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_error(&dir.display().to_string()))
}

fn write_text(path: &Path, contents: &str) -> Result<(), CliError> {
    let what = path.display().to_string();
    let mut f = BufWriter::new(File::create(path).map_err(io_error(&what))?);
    f.write_all(contents.as_bytes()).map_err(io_error(&what))?;
    f.flush().map_err(io_error(&what))
}

pub fn train(config: &ExperimentConfig) -> Result<(), CliError> {
    config.validate()?;
    let data = config.load_data()?;
    let train = &data.split.train;
    log::info!(
        "training {} on {} users, {} items, {} ratings",
        config.model.kind.name(),
        train.num_users(),
        train.num_items(),
        train.num_ratings()
    );
    let mut costs = Vec::new();
    let model = models::train(&config.model, train, &mut costs)?;
    let addon = match config.addon() {
        Some(a) => {
            log::info!("fitting the reliability add-on");
            Some(
                ReliabilityAddOn::fit(&model, train, a.hyperparams())
                    .map_err(CliError::from_core)?,
            )
        }
        None => None,
    };

    let dir = &config.output_dir;
    create_dir(dir)?;
    models::save(&dir.join(MODEL_FILE), &model.saved())?;
    if let Some(a) = addon {
        models::save(
            &dir.join(ADDON_FILE),
            &SavedModel::Mf(a.error_model().clone()),
        )?;
    }
    if let Trained::Bemf(m) = &model {
        let scores = m.score_set();
        let mut log = String::from("iteration,score,cost\n");
        for (it, s, c) in costs {
            log.push_str(&format!("{it},{},{}\n", scores.format(s), format_number(c)));
        }
        write_text(&dir.join(TRAIN_LOG), &log)?;
    }
    log::info!("wrote {}", dir.join(MODEL_FILE).display());
    Ok(())
}

pub fn evaluate(
    config: &ExperimentConfig,
    model_path: &Path,
    addon_path: Option<&Path>,
) -> Result<(), CliError> {
    config.validate()?;
    let data = config.load_data()?;
    let train = &data.split.train;
    let model = Trained::from_saved(models::load(model_path)?, train)?;
    if model.kind() != config.model.kind.name() {
        log::warn!(
            "model file holds {}, config says {}; using the file",
            model.kind(),
            config.model.kind.name()
        );
    }
    let addon = match config.addon() {
        Some(_) => {
            let path = addon_path
                .map(Path::to_path_buf)
                .unwrap_or_else(|| model_path.with_file_name(ADDON_FILE));
            match models::load(&path)? {
                SavedModel::Mf(m)
                    if m.num_users() == train.num_users() && m.num_items() == train.num_items() =>
                {
                    Some(ReliabilityAddOn::from_error_model(m))
                }
                _ => {
                    return Err(CliError::Validation(format!(
                        "{} is not a reliability model for this data",
                        path.display()
                    )))
                }
            }
        }
        None => None,
    };
    let report = evaluate::evaluate(
        &model,
        addon.as_ref(),
        &data.split,
        &config.evaluation,
        config.recommend_by(),
    )?;
    report
        .write_dir(&config.output_dir, train.score_set())
        .map_err(CliError::from_core)?;
    log::info!("wrote evaluation report to {}", config.output_dir.display());
    Ok(())
}

/// One grid point.
#[derive(Clone, Debug)]
pub struct Cell {
    pub index: usize,
    pub model: ModelConfig,
}

fn values(g: &Option<GridValues>, default: f64) -> Result<Vec<f64>, CliError> {
    match g {
        Some(v) => v.values(),
        None => Ok(vec![default]),
    }
}

/// Cells in lexicographic order of (k, gamma, regularization, iterations),
/// or of neighbours for KNN.
pub fn grid_cells(config: &ExperimentConfig) -> Result<Vec<Cell>, CliError> {
    let base = &config.model;
    let grid = config.grid.clone().unwrap_or_default();
    let mut models = Vec::new();
    match base.kind {
        ModelKind::KnnUser | ModelKind::KnnItem => {
            for neighbors in grid.neighbors.unwrap_or_else(|| vec![base.neighbors]) {
                models.push(ModelConfig {
                    neighbors,
                    ..base.clone()
                });
            }
        }
        kind => {
            let ks = grid.k.clone().unwrap_or_else(|| vec![base.k]);
            let gammas = values(&grid.gamma, base.gamma)?;
            let regs = if kind == ModelKind::Bemf {
                values(&grid.eta, base.eta)?
            } else {
                values(&grid.lambda, base.lambda)?
            };
            let iters = grid
                .iterations
                .clone()
                .unwrap_or_else(|| vec![base.iterations]);
            for &k in &ks {
                for &gamma in &gammas {
                    for &reg in &regs {
                        for &iterations in &iters {
                            let mut m = ModelConfig {
                                k,
                                gamma,
                                iterations,
                                ..base.clone()
                            };
                            if kind == ModelKind::Bemf {
                                m.eta = reg;
                            } else {
                                m.lambda = reg;
                            }
                            models.push(m);
                        }
                    }
                }
            }
        }
    }
    if models.is_empty() {
        return Err(CliError::Validation("the grid is empty".into()));
    }
    for m in &models {
        m.validate()?;
    }
    Ok(models
        .into_iter()
        .enumerate()
        .map(|(index, model)| Cell { index, model })
        .collect())
}

pub struct CellResult {
    pub cell: Cell,
    pub mae: Option<f64>,
    pub coverage: Option<f64>,
    pub status: String,
}

pub fn grid_search(
    config: &ExperimentConfig,
    confirmed: bool,
    max_cells: Option<usize>,
) -> Result<(), CliError> {
    config.validate()?;
    let cells = grid_cells(config)?;
    eprintln!("grid has {} combinations", cells.len());
    if let Some(max) = max_cells {
        if cells.len() > max {
            return Err(CliError::Validation(format!(
                "{} combinations exceed --max-cells {max}",
                cells.len()
            )));
        }
    }
    if !confirmed {
        eprintln!("dry run; pass --yes to train and evaluate every combination");
        return Ok(());
    }
    let data = config.load_data()?;
    let split = &data.split;
    let threshold = config.evaluation.threshold;
    let mut results: Vec<CellResult> = cells
        .into_par_iter()
        .map(|cell| {
            let outcome = models::train(&cell.model, &split.train, &mut Vec::new())
                .and_then(|m| evaluate::accuracy(&m, None, split, threshold));
            let r = match outcome {
                Ok((mae, coverage)) => CellResult {
                    cell,
                    mae,
                    coverage: Some(coverage),
                    status: "ok".into(),
                },
                Err(e) => CellResult {
                    cell,
                    mae: None,
                    coverage: None,
                    status: e.to_string().replace([',', '\n'], ";"),
                },
            };
            log::info!("cell {} done", r.cell.index);
            r
        })
        .collect();
    results.sort_by(|a, b| match (a.mae, b.mae) {
        (Some(x), Some(y)) => x.total_cmp(&y).then(a.cell.index.cmp(&b.cell.index)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cell.index.cmp(&b.cell.index),
    });

    let knn = matches!(config.model.kind, ModelKind::KnnUser | ModelKind::KnnItem);
    let reg = if config.model.kind == ModelKind::Bemf {
        "eta"
    } else {
        "lambda"
    };
    let mut out = if knn {
        String::from("rank,cell,neighbors,mae,coverage,status\n")
    } else {
        format!("rank,cell,k,gamma,{reg},iterations,mae,coverage,status\n")
    };
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), format_number);
    for (rank, r) in results.iter().enumerate() {
        let m = &r.cell.model;
        let params = if knn {
            m.neighbors.to_string()
        } else {
            let reg = if config.model.kind == ModelKind::Bemf {
                m.eta
            } else {
                m.lambda
            };
            format!(
                "{},{},{},{}",
                m.k,
                format_number(m.gamma),
                format_number(reg),
                m.iterations
            )
        };
        out.push_str(&format!(
            "{},{},{params},{},{},{}\n",
            rank + 1,
            r.cell.index,
            opt(r.mae),
            opt(r.coverage),
            r.status
        ));
    }
    create_dir(&config.output_dir)?;
    write_text(&config.output_dir.join(GRID_FILE), &out)?;
    if let Some(best) = results.first().filter(|r| r.mae.is_some()) {
        log::info!("best cell {} with MAE {}", best.cell.index, opt(best.mae));
    }
    Ok(())
}

pub fn split(config: &ExperimentConfig) -> Result<(), CliError> {
    config.validate()?;
    if config.data.path.is_none() {
        return Err(CliError::Validation(
            "split needs data.path and a [split] section".into(),
        ));
    }
    let data = config.load_data()?;
    let split = &data.split;
    let format = RatingFormat {
        has_header: true,
        ..config.format()
    };
    let ext = match format.delimiter {
        bemf_core::Delimiter::Comma => "csv",
        bemf_core::Delimiter::Tab => "tsv",
    };
    create_dir(&config.output_dir)?;
    let write = |name: &str, ratings: Vec<bemf_core::Rating>| -> Result<PathBuf, CliError> {
        let path = config.output_dir.join(format!("{name}.{ext}"));
        let what = path.display().to_string();
        let mut w = BufWriter::new(File::create(&path).map_err(io_error(&what))?);
        write_ratings(&mut w, &split.train, ratings, format).map_err(CliError::from_core)?;
        w.flush().map_err(io_error(&what))?;
        Ok(path)
    };
    let train = write("train", split.train.ratings())?;
    let test = write("test", split.test.clone())?;
    log::info!(
        "{} training ratings -> {}, {} test ratings -> {}",
        split.train.num_ratings(),
        train.display(),
        split.test.len(),
        test.display()
    );
    Ok(())
}

/// Prints `key,value` lines describing a config's data and/or a model file.
pub fn info(config: Option<&ExperimentConfig>, model: Option<&Path>) -> Result<String, CliError> {
    if config.is_none() && model.is_none() {
        return Err(CliError::Validation(
            "info needs --config and/or --model".into(),
        ));
    }
    let mut out = String::from("key,value\n");
    if let Some(config) = config {
        config.validate()?;
        let data = config.load_data()?;
        let train = &data.split.train;
        let scores = train.score_set();
        out.push_str(&format!("users,{}\n", train.num_users()));
        out.push_str(&format!("items,{}\n", train.num_items()));
        out.push_str(&format!("train_ratings,{}\n", train.num_ratings()));
        out.push_str(&format!("test_ratings,{}\n", data.split.test.len()));
        let values: Vec<String> = (0..scores.len()).map(|j| scores.format(j)).collect();
        out.push_str(&format!("scores,{}\n", values.join(" ")));
        for (j, c) in train.score_counts().iter().enumerate() {
            out.push_str(&format!("train_count_{},{c}\n", scores.format(j)));
        }
        let cells = grid_cells(config)?;
        out.push_str(&format!("grid_combinations,{}\n", cells.len()));
    }
    if let Some(path) = model {
        let f = File::open(path)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        let header = bemf_core::model_io::read_header(std::io::BufReader::new(f))
            .map_err(CliError::from_core)?;
        out.push_str(&format!("model_kind,{}\n", header.kind));
        for t in &header.tensors {
            out.push_str(&format!("tensor_{},{}x{}\n", t.name, t.rows, t.cols));
        }
        if let Some(s) = &header.score_set {
            let values: Vec<String> = (0..s.len()).map(|j| s.format(j)).collect();
            out.push_str(&format!("model_scores,{}\n", values.join(" ")));
        }
    }
    Ok(out)
}
