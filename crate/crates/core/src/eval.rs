//! Scoring and profile diagnostics: R², daily average profiles, and the
//! sign-match analysis of predicted versus observed daily RoCoF patterns.

use serde::Serialize;
use thiserror::Error;

use crate::signal::RocofSeries;
use crate::time;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least 2 valid aligned pairs, got {0}")]
    TooFewPairs(usize),
    #[error("R² undefined: observed values are constant")]
    UndefinedScore,
    #[error("inputs are not aligned: {0}")]
    Misaligned(String),
}

/// Per hour-of-day mean and sample count. The mean is NaN where no samples
/// fell on that hour.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyProfile {
    pub mean: Vec<f64>,
    pub count: Vec<usize>,
}

impl DailyProfile {
    pub fn is_defined(&self, hour: usize) -> bool {
        self.count[hour] > 0
    }
}

/// `1 - SSE/SST`, SST about the mean of the observed values.
pub fn r2_score_values(y_true: &[f64], y_pred: &[f64]) -> Result<f64, EvalError> {
    if y_true.len() != y_pred.len() {
        return Err(EvalError::Misaligned("length mismatch".into()));
    }
    let n = y_true.len();
    if n < 2 {
        return Err(EvalError::TooFewPairs(n));
    }
    let mean = y_true.iter().sum::<f64>() / n as f64;
    let sst: f64 = y_true.iter().map(|y| (y - mean) * (y - mean)).sum();
    if sst == 0.0 {
        return Err(EvalError::UndefinedScore);
    }
    let sse: f64 = y_true
        .iter()
        .zip(y_pred)
        .map(|(t, p)| (t - p) * (t - p))
        .sum();
    Ok(1.0 - sse / sst)
}

/// R² over the hours valid in both series.
pub fn r2_score(y_true: &RocofSeries, y_pred: &RocofSeries) -> Result<f64, EvalError> {
    if y_true.hour_timestamps() != y_pred.hour_timestamps() {
        return Err(EvalError::Misaligned(
            "series cover different hours".into(),
        ));
    }
    let mut t = Vec::new();
    let mut p = Vec::new();
    for i in 0..y_true.len() {
        if y_true.valid()[i] && y_pred.valid()[i] {
            t.push(y_true.rocof()[i]);
            p.push(y_pred.rocof()[i]);
        }
    }
    r2_score_values(&t, &p)
}

/// Group labelled values by hour-of-day and average them.
pub fn daily_profile_values(hours_of_day: &[u32], values: &[f64]) -> DailyProfile {
    let mut sum = [0.0f64; 24];
    let mut count = [0usize; 24];
    for (&h, &v) in hours_of_day.iter().zip(values) {
        let h = h as usize % 24;
        sum[h] += v;
        count[h] += 1;
    }
    let mean = (0..24)
        .map(|h| if count[h] > 0 { sum[h] / count[h] as f64 } else { f64::NAN })
        .collect();
    DailyProfile {
        mean,
        count: count.to_vec(),
    }
}

/// Daily average profile of the valid hours of a RoCoF series.
pub fn daily_profile(series: &RocofSeries) -> DailyProfile {
    let mut hours = Vec::new();
    let mut values = Vec::new();
    for i in 0..series.len() {
        if series.valid()[i] {
            hours.push(time::hour_of_day(series.hour_timestamps()[i]));
            values.push(series.rocof()[i]);
        }
    }
    daily_profile_values(&hours, &values)
}

/// Outcome of comparing a predicted profile against the data profile.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignMatchReport {
    /// Hours whose mean signs agree (zero matches any sign).
    pub matches: usize,
    pub mismatched_hours: Vec<u32>,
    /// Hours with no samples in one of the profiles, excluded from the count.
    pub excluded_hours: Vec<u32>,
}

/// Per hour-of-day: match iff `sign(pred mean) == sign(data mean)`, with
/// exact zeros matching either sign.
pub fn sign_match(pred: &DailyProfile, data: &DailyProfile) -> SignMatchReport {
    let mut matches = 0;
    let mut mismatched_hours = Vec::new();
    let mut excluded_hours = Vec::new();
    for h in 0..24 {
        if !pred.is_defined(h) || !data.is_defined(h) {
            excluded_hours.push(h as u32);
            continue;
        }
        let (p, d) = (pred.mean[h], data.mean[h]);
        if p == 0.0 || d == 0.0 || (p > 0.0) == (d > 0.0) {
            matches += 1;
        } else {
            mismatched_hours.push(h as u32);
        }
    }
    SignMatchReport {
        matches,
        mismatched_hours,
        excluded_hours,
    }
}
