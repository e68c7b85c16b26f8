//! Self-describing model files.
//!
//! Layout: the 8-byte magic `BEMFMDL\0`, a little-endian `u32` header length,
//! a JSON header, then every tensor listed in the header as little-endian
//! `f64` values in row-major order. Factors are stored as raw bits, so a
//! write/read round trip is exact.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::baselines::{KnnConfig, KnnMode, MfHyperparams, MfModel, MfVariant};
use crate::bemf::{BemfModel, FactorMatrix, Hyperparams};
use crate::error::{Error, Result};
use crate::scores::ScoreSet;

const MAGIC: &[u8; 8] = b"BEMFMDL\0";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub enum SavedModel {
    Bemf(BemfModel),
    Mf(MfModel),
    /// KNN keeps no learned state beyond its configuration; predictions read
    /// the training data supplied at evaluation time.
    Knn(KnnConfig),
}

impl SavedModel {
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::Bemf(_) => "bemf",
            SavedModel::Mf(m) => match m.variant {
                MfVariant::Pmf => "pmf",
                MfVariant::BiasedMf => "biasedmf",
            },
            SavedModel::Knn(c) => match c.mode {
                KnnMode::UserBased => "knn-user",
                KnnMode::ItemBased => "knn-item",
            },
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TensorInfo {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelHeader {
    pub format: String,
    pub version: u32,
    pub kind: String,
    #[serde(default)]
    pub score_set: Option<ScoreSet>,
    pub params: Value,
    pub tensors: Vec<TensorInfo>,
}

fn tensor(name: String, m: &FactorMatrix) -> (TensorInfo, &[f64]) {
    (
        TensorInfo {
            name,
            rows: m.rows(),
            cols: m.k(),
        },
        m.as_slice(),
    )
}

pub fn write_model<W: Write>(mut out: W, model: &SavedModel) -> Result<()> {
    let json = |v: &dyn erased::Ser| v.to_value();
    let mut tensors: Vec<(TensorInfo, Vec<f64>)> = Vec::new();
    let (score_set, params) = match model {
        SavedModel::Bemf(m) => {
            for s in 0..m.num_scores() {
                let (info, data) = tensor(format!("user_factors/{s}"), m.user_factors(s));
                tensors.push((info, data.to_vec()));
            }
            for s in 0..m.num_scores() {
                let (info, data) = tensor(format!("item_factors/{s}"), m.item_factors(s));
                tensors.push((info, data.to_vec()));
            }
            (Some(m.score_set().clone()), json(m.hyperparams()))
        }
        SavedModel::Mf(m) => {
            let (info, data) = tensor("user_factors".into(), &m.user_factors);
            tensors.push((info, data.to_vec()));
            let (info, data) = tensor("item_factors".into(), &m.item_factors);
            tensors.push((info, data.to_vec()));
            let row = |name: &str, v: Vec<f64>| {
                (
                    TensorInfo {
                        name: name.into(),
                        rows: 1,
                        cols: v.len(),
                    },
                    v,
                )
            };
            tensors.push(row("global_mean", vec![m.global_mean]));
            tensors.push(row("user_bias", m.user_bias.clone()));
            tensors.push(row("item_bias", m.item_bias.clone()));
            if let Some((lo, hi)) = m.bounds {
                tensors.push(row("bounds", vec![lo, hi]));
            }
            (None, json(&m.hyperparams))
        }
        SavedModel::Knn(c) => (None, json(c)),
    };
    let header = ModelHeader {
        format: "bemf-model".into(),
        version: VERSION,
        kind: model.kind().into(),
        score_set,
        params,
        tensors: tensors.iter().map(|t| t.0.clone()).collect(),
    };
    let header = serde_json::to_vec(&header).map_err(|e| Error::ModelFormat(e.to_string()))?;
    out.write_all(MAGIC)?;
    out.write_all(&(header.len() as u32).to_le_bytes())?;
    out.write_all(&header)?;
    for (_, data) in &tensors {
        let mut buf = Vec::with_capacity(data.len() * 8);
        for x in data {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        out.write_all(&buf)?;
    }
    Ok(())
}

/// Reads only the header.
pub fn read_header<R: Read>(mut input: R) -> Result<ModelHeader> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::ModelFormat("not a model file".into()));
    }
    let mut len = [0u8; 4];
    input.read_exact(&mut len)?;
    let mut header = vec![0u8; u32::from_le_bytes(len) as usize];
    input.read_exact(&mut header)?;
    let header: ModelHeader =
        serde_json::from_slice(&header).map_err(|e| Error::ModelFormat(e.to_string()))?;
    if header.format != "bemf-model" || header.version != VERSION {
        return Err(Error::ModelFormat(format!(
            "unsupported format {} v{}",
            header.format, header.version
        )));
    }
    Ok(header)
}

pub fn read_model<R: Read>(mut input: R) -> Result<SavedModel> {
    let header = read_header(&mut input)?;
    let mut tensors = Vec::with_capacity(header.tensors.len());
    for info in &header.tensors {
        let mut buf = vec![0u8; info.rows * info.cols * 8];
        input.read_exact(&mut buf)?;
        let data: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        tensors.push((info.clone(), data));
    }
    let take = |name: &str| -> Result<FactorMatrix> {
        let (info, data) = tensors
            .iter()
            .find(|(i, _)| i.name == name)
            .ok_or_else(|| Error::ModelFormat(format!("missing tensor {name}")))?;
        FactorMatrix::from_vec(info.rows, info.cols, data.clone())
    };
    let params = |e: serde_json::Error| Error::ModelFormat(format!("bad params: {e}"));
    match header.kind.as_str() {
        "bemf" => {
            let scores = header
                .score_set
                .ok_or_else(|| Error::ModelFormat("missing score set".into()))?;
            let hp: Hyperparams = serde_json::from_value(header.params).map_err(params)?;
            let d = scores.len();
            let users = (0..d)
                .map(|s| take(&format!("user_factors/{s}")))
                .collect::<Result<_>>()?;
            let items = (0..d)
                .map(|s| take(&format!("item_factors/{s}")))
                .collect::<Result<_>>()?;
            Ok(SavedModel::Bemf(BemfModel::from_factors(
                scores, hp, users, items,
            )?))
        }
        "pmf" | "biasedmf" => {
            let variant = if header.kind == "pmf" {
                MfVariant::Pmf
            } else {
                MfVariant::BiasedMf
            };
            let hp: MfHyperparams = serde_json::from_value(header.params).map_err(params)?;
            let bounds = take("bounds")
                .ok()
                .map(|b| (b.as_slice()[0], b.as_slice()[1]));
            Ok(SavedModel::Mf(MfModel {
                variant,
                hyperparams: hp,
                user_factors: take("user_factors")?,
                item_factors: take("item_factors")?,
                global_mean: take("global_mean")?.as_slice()[0],
                user_bias: take("user_bias")?.as_slice().to_vec(),
                item_bias: take("item_bias")?.as_slice().to_vec(),
                bounds,
            }))
        }
        "knn-user" | "knn-item" => {
            let c: KnnConfig = serde_json::from_value(header.params).map_err(params)?;
            Ok(SavedModel::Knn(c))
        }
        other => Err(Error::ModelFormat(format!("unknown model kind {other:?}"))),
    }
}

mod erased {
    use serde::Serialize;
    use serde_json::Value;

    pub trait Ser {
        fn to_value(&self) -> Value;
    }

    impl<T: Serialize> Ser for T {
        fn to_value(&self) -> Value {
            serde_json::to_value(self).expect("params serialize")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Rating, RatingDataset};

    fn roundtrip(m: &SavedModel) -> SavedModel {
        let mut buf = Vec::new();
        write_model(&mut buf, m).unwrap();
        read_model(buf.as_slice()).unwrap()
    }

    #[test]
    fn bemf_round_trip_is_bit_exact() {
        let scores = ScoreSet::parse_range("0.5,4,0.5").unwrap();
        let hp = Hyperparams {
            k: 3,
            gamma: 0.02,
            eta: 0.06,
            iterations: 0,
            seed: 17,
            ..Default::default()
        };
        let mut m = BemfModel::initialize(scores, 7, 5, hp).unwrap();
        m.user_factors_mut(2).row_mut(1)[0] = -1.0 / 3.0;
        m.item_factors_mut(7).row_mut(4)[2] = f64::MIN_POSITIVE;
        let back = roundtrip(&SavedModel::Bemf(m.clone()));
        let SavedModel::Bemf(b) = back else {
            panic!("kind")
        };
        assert_eq!(b.hyperparams(), m.hyperparams());
        for s in 0..m.num_scores() {
            let bits =
                |f: &FactorMatrix| f.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(b.user_factors(s)), bits(m.user_factors(s)));
            assert_eq!(bits(b.item_factors(s)), bits(m.item_factors(s)));
        }
    }

    #[test]
    fn mf_and_knn_round_trip() {
        let five = ScoreSet::from_range(1.0, 5.0, 1.0).unwrap();
        let ratings: Vec<Rating> = (0..12)
            .map(|j| Rating {
                user: j % 4,
                item: j / 4,
                score: j % 5,
            })
            .collect();
        let ds = RatingDataset::from_ratings(five, 4, 3, &ratings).unwrap();
        let hp = MfHyperparams {
            k: 2,
            gamma: 0.01,
            lambda: 0.055,
            iterations: 5,
            seed: 1,
        };
        for variant in [MfVariant::Pmf, MfVariant::BiasedMf] {
            let m = SavedModel::Mf(MfModel::fit(&ds, variant, hp).unwrap());
            assert_eq!(roundtrip(&m), m);
        }
        let k = SavedModel::Knn(KnnConfig {
            mode: KnnMode::ItemBased,
            neighbors: 30,
        });
        assert_eq!(roundtrip(&k), k);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_model(&b"not a model"[..]).is_err());
        let mut buf = Vec::new();
        write_model(
            &mut buf,
            &SavedModel::Knn(KnnConfig {
                mode: KnnMode::UserBased,
                neighbors: 3,
            }),
        )
        .unwrap();
        buf[8] = buf[8].wrapping_add(1);
        assert!(read_model(buf.as_slice()).is_err());
    }
}
