//! CSV output for evaluation reports.
//!
//! Files and headers:
//!
//! * `summary.csv`: `metric,value`
//! * `prediction_curve.csv`: `threshold,mae,coverage` (`NA` when every
//!   prediction was filtered out)
//! * `recommendation_curve.csv`: `threshold,precision,recall`
//! * `confusion.csv`: `actual,` followed by one column per predicted score
//! * `histogram.csv`: `bin_start,bin_end,count`
//!
//! Numbers carry 10 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::Result;
use crate::eval::metrics::{ConfusionMatrix, HISTOGRAM_BINS};
use crate::eval::sweep::{PredictionCurvePoint, RecommendationCurvePoint};
use crate::scores::ScoreSet;

pub const MISSING: &str = "NA";

/// Formats `x` with 10 significant digits in positional notation. Integral
/// values print without a fraction.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x.fract() == 0.0 && x.abs() < 1e15 {
        return format!("{}", x as i64);
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-6..=15).contains(&magnitude) {
        return format!("{:.9e}", x);
    }
    let decimals = (9 - magnitude).max(0) as usize;
    format!("{:.*}", decimals, x)
}

#[derive(Clone, Debug, Default)]
pub struct EvalReport {
    pub summary: Vec<(String, Option<f64>)>,
    pub prediction_curve: Vec<PredictionCurvePoint>,
    pub recommendation_curve: Vec<RecommendationCurvePoint>,
    pub confusion: Option<ConfusionMatrix>,
    pub histogram: Option<Vec<u64>>,
}

impl EvalReport {
    pub fn set(&mut self, metric: &str, value: Option<f64>) {
        self.summary.push((metric.to_string(), value));
    }

    pub fn get(&self, metric: &str) -> Option<f64> {
        self.summary
            .iter()
            .find(|(m, _)| m == metric)
            .and_then(|(_, v)| *v)
    }

    /// Renders every CSV as `(file name, contents)`.
    pub fn render(&self, scores: &ScoreSet) -> Vec<(&'static str, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| MISSING.to_string(), format_number);
        let mut files = Vec::new();

        let mut s = String::from("metric,value\n");
        for (m, v) in &self.summary {
            s.push_str(&format!("{m},{}\n", opt(*v)));
        }
        files.push(("summary.csv", s));

        let mut s = String::from("threshold,mae,coverage\n");
        for p in &self.prediction_curve {
            s.push_str(&format!(
                "{},{},{}\n",
                format_number(p.threshold),
                opt(p.mae),
                format_number(p.coverage)
            ));
        }
        files.push(("prediction_curve.csv", s));

        if !self.recommendation_curve.is_empty() {
            let mut s = String::from("threshold,precision,recall\n");
            for p in &self.recommendation_curve {
                s.push_str(&format!(
                    "{},{},{}\n",
                    format_number(p.threshold),
                    format_number(p.precision),
                    format_number(p.recall)
                ));
            }
            files.push(("recommendation_curve.csv", s));
        }

        if let Some(c) = &self.confusion {
            let labels: Vec<String> = (0..scores.len()).map(|j| scores.format(j)).collect();
            let mut s = format!("actual,{}\n", labels.join(","));
            for (a, row) in c.fractions().iter().enumerate() {
                let cells: Vec<String> = row.iter().map(|&x| format_number(x)).collect();
                s.push_str(&format!("{},{}\n", labels[a], cells.join(",")));
            }
            files.push(("confusion.csv", s));
        }

        if let Some(h) = &self.histogram {
            let mut s = String::from("bin_start,bin_end,count\n");
            let width = 1.0 / HISTOGRAM_BINS as f64;
            for (j, c) in h.iter().enumerate() {
                s.push_str(&format!(
                    "{},{},{c}\n",
                    format_number(j as f64 * width),
                    format_number((j + 1) as f64 * width)
                ));
            }
            files.push(("histogram.csv", s));
        }
        files
    }

    /// Renders everything first, then writes, so a failure while building
    /// the report leaves no partial output.
    pub fn write_dir(&self, dir: &Path, scores: &ScoreSet) -> Result<()> {
        let files = self.render(scores);
        fs::create_dir_all(dir)?;
        for (name, contents) in files {
            let mut f = fs::File::create(dir.join(name))?;
            f.write_all(contents.as_bytes())?;
        }
        Ok(())
    }
}
