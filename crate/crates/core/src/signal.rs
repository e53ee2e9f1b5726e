//! Hourly RoCoF extraction from a frequency trace.
//!
//! The extraction pipeline mirrors how the hourly deviations are measured:
//! per-sample increments `f(t+1s) - f(t)` estimate the derivative, a
//! rectangular rolling window of length `L` smooths it, and the signed value
//! at the argmax of `|df/dt|` inside `[t_i - T, t_i + T]` around the hour
//! boundary `t_i` is the RoCoF of that hour. Defaults are `T = L = 30 s`.
//!
//! Units: traces are in Hz, every derivative here is reported in mHz/s.

use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::ingest::FrequencyTrace;
use crate::time;

/// Default half-width of the search interval around the hour boundary (s).
pub const DEFAULT_SEARCH_HALF_WIDTH_S: u32 = 30;
/// Default length of the rectangular smoothing window (s).
pub const DEFAULT_SMOOTHING_WINDOW_S: u32 = 30;

#[derive(Debug, Error)]
pub enum SignalError {
    #[error("trace too short: need at least {need} samples, got {got}")]
    TooShort { need: usize, got: usize },
    #[error("window of {window_samples} samples does not fit a series of length {len}")]
    WindowTooLong { window_samples: usize, len: usize },
    #[error("window length {0} s is not a positive multiple of the sample period {1} s")]
    WindowNotMultiple(u32, u32),
    #[error("extraction window around {} is incomplete or contaminated", time::format_utc(*.0))]
    InvalidWindow(i64),
    #[error("boundary {} does not fall on the sample grid", time::format_utc(*.0))]
    OffGridBoundary(i64),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(String),
}

/// Estimated derivative series, one value per pair of adjacent samples.
///
/// `values[k]` is the derivative estimate over `[t_k, t_k + period]`, in
/// mHz/s; it is NaN whenever either contributing sample is NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeSeries {
    start_time: i64,
    sample_period_s: u32,
    values: Vec<f64>,
}

impl DerivativeSeries {
    pub fn start_time(&self) -> i64 {
        self.start_time
    }

    pub fn sample_period_s(&self) -> u32 {
        self.sample_period_s
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One signed RoCoF value (mHz/s) per hour boundary.
///
/// Invalid hours carry no value: `rocof` holds NaN there and `valid` is
/// false.
#[derive(Debug, Clone, PartialEq)]
pub struct RocofSeries {
    hour_timestamps: Vec<i64>,
    rocof: Vec<f64>,
    valid: Vec<bool>,
}

impl RocofSeries {
    pub fn new(hour_timestamps: Vec<i64>, rocof: Vec<f64>, valid: Vec<bool>) -> Self {
        assert_eq!(hour_timestamps.len(), rocof.len());
        assert_eq!(hour_timestamps.len(), valid.len());
        Self {
            hour_timestamps,
            rocof,
            valid,
        }
    }

    pub fn hour_timestamps(&self) -> &[i64] {
        &self.hour_timestamps
    }

    pub fn rocof(&self) -> &[f64] {
        &self.rocof
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn len(&self) -> usize {
        self.rocof.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rocof.is_empty()
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }
}

/// Per-sample increments of the trace, rescaled to mHz/s.
///
/// NaN samples propagate to both increments they touch.
pub fn increments(trace: &FrequencyTrace) -> Result<DerivativeSeries, SignalError> {
    let f = trace.values();
    if f.len() < 2 {
        return Err(SignalError::TooShort {
            need: 2,
            got: f.len(),
        });
    }
    let scale = 1000.0 / trace.sample_period_s() as f64;
    let values = f.windows(2).map(|w| (w[1] - w[0]) * scale).collect();
    Ok(DerivativeSeries {
        start_time: trace.start_time(),
        sample_period_s: trace.sample_period_s(),
        values,
    })
}

/// Centered rectangular mean of width `window_len_s`.
///
/// For a window of `w` samples the value at index `k` averages indices
/// `[k - w/2, k + w - 1 - w/2]`; for the even default `w = 30` that spans
/// raw samples `[t_k - 15 s, t_k + 15 s]`, centered on `t_k`. The output is
/// NaN wherever the full window does not fit or contains NaN.
pub fn rolling_mean(
    d: &DerivativeSeries,
    window_len_s: u32,
) -> Result<DerivativeSeries, SignalError> {
    let period = d.sample_period_s;
    if window_len_s == 0 || !window_len_s.is_multiple_of(period) {
        return Err(SignalError::WindowNotMultiple(window_len_s, period));
    }
    let w = (window_len_s / period) as usize;
    if w > d.values.len() {
        return Err(SignalError::WindowTooLong {
            window_samples: w,
            len: d.values.len(),
        });
    }
    let left = w / 2;
    let right = w - 1 - left;
    let n = d.values.len();
    let mut out = vec![f64::NAN; n];
    for (k, slot) in out.iter_mut().enumerate().take(n.saturating_sub(right)).skip(left) {
        let window = &d.values[k - left..=k + right];
        if window.iter().any(|v| v.is_nan()) {
            continue;
        }
        *slot = window.iter().sum::<f64>() / w as f64;
    }
    Ok(DerivativeSeries {
        start_time: d.start_time,
        sample_period_s: d.sample_period_s,
        values: out,
    })
}

/// Signed smoothed derivative at the argmax of its absolute value over the
/// closed interval `[k_lo, k_hi]`; ties break to the earliest index.
///
/// NaN anywhere in the interval (which covers both contamination and a
/// window that does not fit) invalidates the extraction.
fn argmax_abs_signed(values: &[f64], k_lo: usize, k_hi: usize) -> Option<f64> {
    if k_hi >= values.len() || k_lo > k_hi {
        return None;
    }
    let mut best: Option<f64> = None;
    for &v in &values[k_lo..=k_hi] {
        if v.is_nan() {
            return None;
        }
        match best {
            Some(b) if v.abs() <= b.abs() => {}
            _ => best = Some(v),
        }
    }
    best
}

fn extract_from_smoothed(
    smoothed: &DerivativeSeries,
    boundary: i64,
    search_half_width_s: u32,
) -> Result<f64, SignalError> {
    let period = smoothed.sample_period_s as i64;
    let offset = boundary - smoothed.start_time;
    if offset.rem_euclid(period) != 0 {
        return Err(SignalError::OffGridBoundary(boundary));
    }
    let t = search_half_width_s as i64;
    // Positions whose sample time lies in [boundary - T, boundary + T].
    let lo = offset - t;
    let hi = offset + t;
    let k_lo = lo.div_euclid(period) + i64::from(lo.rem_euclid(period) != 0);
    let k_hi = hi.div_euclid(period);
    if k_lo < 0 || k_hi < k_lo {
        return Err(SignalError::InvalidWindow(boundary));
    }
    argmax_abs_signed(&smoothed.values, k_lo as usize, k_hi as usize)
        .ok_or(SignalError::InvalidWindow(boundary))
}

/// Extract the signed RoCoF (mHz/s) at one boundary.
///
/// Looks for the largest `|df/dt|` of the smoothed derivative within
/// `[boundary - T, boundary + T]`, endpoints inclusive. The raw window
/// `[boundary - T - L/2, boundary + T + L/2]` must lie inside the trace and
/// be NaN-free, otherwise the hour is reported invalid.
pub fn extract_rocof(
    trace: &FrequencyTrace,
    boundary: i64,
    search_half_width_s: u32,
    smoothing_window_s: u32,
) -> Result<f64, SignalError> {
    let d = increments(trace)?;
    let s = rolling_mean(&d, smoothing_window_s)?;
    extract_from_smoothed(&s, boundary, search_half_width_s)
}

/// Apply [`extract_rocof`] at every boundary; extraction failures become
/// invalid flags instead of errors, so one bad hour never poisons the rest.
///
/// Boundaries are expected sorted and hour-aligned.
pub fn rocof_series(
    trace: &FrequencyTrace,
    hours: &[i64],
    search_half_width_s: u32,
    smoothing_window_s: u32,
) -> Result<RocofSeries, SignalError> {
    let d = increments(trace)?;
    let s = rolling_mean(&d, smoothing_window_s)?;
    let mut rocof = Vec::with_capacity(hours.len());
    let mut valid = Vec::with_capacity(hours.len());
    for &h in hours {
        match extract_from_smoothed(&s, h, search_half_width_s) {
            Ok(v) => {
                rocof.push(v);
                valid.push(true);
            }
            Err(_) => {
                rocof.push(f64::NAN);
                valid.push(false);
            }
        }
    }
    Ok(RocofSeries {
        hour_timestamps: hours.to_vec(),
        rocof,
        valid,
    })
}

/// Write a RoCoF series as `hour_utc,rocof_mhz_per_s,valid`.
///
/// Invalid hours carry an empty value cell.
pub fn write_rocof_csv<W: Write>(series: &RocofSeries, writer: W) -> Result<(), SignalError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["hour_utc", "rocof_mhz_per_s", "valid"])
        .map_err(|e| SignalError::Csv(e.to_string()))?;
    for i in 0..series.len() {
        let value = if series.valid[i] {
            series.rocof[i].to_string()
        } else {
            String::new()
        };
        w.write_record([
            time::format_utc(series.hour_timestamps[i]),
            value,
            series.valid[i].to_string(),
        ])
        .map_err(|e| SignalError::Csv(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// Read a RoCoF series written by [`write_rocof_csv`].
pub fn read_rocof_csv<R: Read>(reader: R) -> Result<RocofSeries, SignalError> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers().map_err(|e| SignalError::Csv(e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != ["hour_utc", "rocof_mhz_per_s", "valid"] {
        return Err(SignalError::Csv(format!(
            "unexpected header {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut hour_timestamps = Vec::new();
    let mut rocof = Vec::new();
    let mut valid = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| SignalError::Csv(e.to_string()))?;
        let ts = time::parse_utc(&record[0]).map_err(SignalError::Csv)?;
        let is_valid: bool = record[2]
            .parse()
            .map_err(|_| SignalError::Csv(format!("bad valid flag {:?}", &record[2])))?;
        let value = if is_valid {
            record[1]
                .parse::<f64>()
                .map_err(|e| SignalError::Csv(format!("bad rocof value {:?}: {e}", &record[1])))?
        } else {
            f64::NAN
        };
        hour_timestamps.push(ts);
        rocof.push(value);
        valid.push(is_valid);
    }
    Ok(RocofSeries {
        hour_timestamps,
        rocof,
        valid,
    })
}

/// Read a RoCoF series from a file path.
pub fn read_rocof_csv_path(path: &Path) -> Result<RocofSeries, SignalError> {
    read_rocof_csv(std::fs::File::open(path)?)
}

/// Write a RoCoF series to a file path.
pub fn write_rocof_csv_path(series: &RocofSeries, path: &Path) -> Result<(), SignalError> {
    write_rocof_csv(series, std::fs::File::create(path)?)
}
