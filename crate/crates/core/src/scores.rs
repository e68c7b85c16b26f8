//! The ordered discrete rating scale.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_DECIMALS: u32 = 6;

/// An ordered set of rating values, stored as integer ticks of a fixed
/// decimal resolution so that half-star scales compare exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ScoreSet {
    decimals: u32,
    ticks: Vec<i64>,
}

impl ScoreSet {
    /// Builds a score set from explicit values.
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidScoreSet(format!(
                "need at least 2 scores, got {}",
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidScoreSet(format!("non-finite score {v}")));
        }
        let decimals = (0..=MAX_DECIMALS)
            .find(|&d| values.iter().all(|&v| to_ticks(v, d).is_some()))
            .ok_or_else(|| {
                Error::InvalidScoreSet(format!(
                    "scores need more than {MAX_DECIMALS} decimal places"
                ))
            })?;
        let ticks: Vec<i64> = values
            .iter()
            .map(|&v| to_ticks(v, decimals).unwrap())
            .collect();
        if ticks.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidScoreSet(
                "scores must be strictly increasing".into(),
            ));
        }
        Ok(ScoreSet { decimals, ticks })
    }

    /// Builds `min, min + step, ..., max`.
    pub fn from_range(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(max > min) {
            return Err(Error::InvalidScoreSet(format!(
                "bad range min={min} max={max} step={step}"
            )));
        }
        let count = ((max - min) / step).round();
        if ((min + count * step) - max).abs() > 1e-9 * max.abs().max(1.0) {
            return Err(Error::InvalidScoreSet(format!(
                "step {step} does not divide [{min}, {max}]"
            )));
        }
        let values: Vec<f64> = (0..=count as usize)
            .map(|j| min + j as f64 * step)
            .collect();
        Self::new(&values)
    }

    /// Parses `"min,max,step"`.
    pub fn parse_range(spec: &str) -> Result<Self> {
        let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidScoreSet(format!(
                "expected min,max,step but got {spec:?}"
            )));
        }
        let nums = parts
            .iter()
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::InvalidScoreSet(format!("not a number: {p:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_range(nums[0], nums[1], nums[2])
    }

    /// Number of scores (D).
    pub fn len(&self) -> usize {
        self.ticks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ticks.is_empty()
    }

    pub fn value(&self, index: usize) -> f64 {
        self.ticks[index] as f64 / 10f64.powi(self.decimals as i32)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|j| self.value(j)).collect()
    }

    pub fn min(&self) -> f64 {
        self.value(0)
    }

    pub fn max(&self) -> f64 {
        self.value(self.len() - 1)
    }

    /// Index of a score given as a float; the value must match exactly at
    /// the set's decimal resolution.
    pub fn index_of(&self, value: f64) -> Option<usize> {
        let t = to_ticks(value, self.decimals)?;
        self.ticks.binary_search(&t).ok()
    }

    /// Index of a score given as decimal text, without going through floats.
    pub fn index_of_str(&self, text: &str) -> Option<usize> {
        let t = parse_ticks(text, self.decimals)?;
        self.ticks.binary_search(&t).ok()
    }

    /// Canonical text for the score at `index` (e.g. `"4"` or `"3.5"`).
    pub fn format(&self, index: usize) -> String {
        let t = self.ticks[index];
        if self.decimals == 0 {
            return t.to_string();
        }
        let scale = 10i64.pow(self.decimals);
        let sign = if t < 0 { "-" } else { "" };
        let (whole, frac) = (t.abs() / scale, t.abs() % scale);
        let frac = format!("{:0width$}", frac, width = self.decimals as usize);
        let frac = frac.trim_end_matches('0');
        if frac.is_empty() {
            format!("{sign}{whole}")
        } else {
            format!("{sign}{whole}.{frac}")
        }
    }

    /// Indices of scores whose value is at least `threshold`.
    pub fn indices_at_least(&self, threshold: f64) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&j| self.value(j) >= threshold - 1e-12)
    }
}

impl TryFrom<Vec<f64>> for ScoreSet {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        ScoreSet::new(&values)
    }
}

impl From<ScoreSet> for Vec<f64> {
    fn from(s: ScoreSet) -> Vec<f64> {
        s.values()
    }
}

fn to_ticks(v: f64, decimals: u32) -> Option<i64> {
    let scaled = v * 10f64.powi(decimals as i32);
    let r = scaled.round();
    if (scaled - r).abs() <= 1e-9 * r.abs().max(1.0) && r.abs() < 1e15 {
        Some(r as i64)
    } else {
        None
    }
}

/// Exact decimal text to ticks; extra fractional digits must be zero.
fn parse_ticks(text: &str, decimals: u32) -> Option<i64> {
    let text = text.trim();
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, text.strip_prefix('+').unwrap_or(text)),
    };
    let (whole, frac) = match body.split_once('.') {
        Some((w, f)) => (w, f),
        None => (body, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let (kept, extra) = frac.split_at(frac.len().min(decimals as usize));
    if !extra.bytes().all(|b| b == b'0') {
        return None;
    }
    let whole: i64 = if whole.is_empty() {
        0
    } else {
        whole.parse().ok()?
    };
    let mut t = whole.checked_mul(10i64.pow(decimals))?;
    if !kept.is_empty() {
        let f: i64 = kept.parse().ok()?;
        t += f * 10i64.pow(decimals - kept.len() as u32);
    }
    Some(if neg { -t } else { t })
}
