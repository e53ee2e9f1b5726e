//! File ingestion and synthetic dataset generation.
//!
//! Two CSV formats are understood:
//!
//! * `timestamp_utc,frequency_hz` — a uniformly sampled 1 s frequency
//!   record. Timestamp gaps are filled with explicit NaN samples so that
//!   downstream extraction can refuse contaminated windows.
//! * `hour_utc,<feature...>` — hourly external features. Rows with an empty
//!   cell are masked, never dropped, and masked rows are excluded from every
//!   fit and score downstream.
//!
//! The synthetic generator builds a desk-scale dataset whose frequency trace
//! carries one engineered deviation per hour boundary: the scheduled
//! generation step `ΔP = load ramp − solar ramp` is integrated into the
//! trace as a 5-minute linear frequency ramp centered on the boundary, so
//! the extractor has a well-defined maximal slope to find, and the
//! noise-free slope is returned as ground truth.

use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::signal::RocofSeries;
use crate::time;

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {msg}")]
    Parse { line: u64, msg: String },
    #[error("line {line}: non-monotonic timestamp ({msg})")]
    Ordering { line: u64, msg: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("line {line}: timestamp {ts} is not hour-aligned")]
    Alignment { line: u64, ts: String },
    #[error("invalid trace: {0}")]
    InvalidTrace(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("invalid synthetic config: {0}")]
    Config(String),
}

/// Uniformly sampled grid-frequency record in Hz.
///
/// Missing samples are explicit NaN entries; there is no gap encoding.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyTrace {
    start_time: i64,
    sample_period_s: u32,
    values: Vec<f64>,
}

impl FrequencyTrace {
    pub fn new(start_time: i64, sample_period_s: u32, values: Vec<f64>) -> Result<Self, IngestError> {
        if sample_period_s == 0 {
            return Err(IngestError::InvalidTrace(
                "sample period must be strictly positive".into(),
            ));
        }
        if values.len() < 2 {
            return Err(IngestError::InvalidTrace(format!(
                "need at least 2 samples, got {}",
                values.len()
            )));
        }
        Ok(Self {
            start_time,
            sample_period_s,
            values,
        })
    }

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

    /// Timestamp of sample `k`.
    pub fn time_at(&self, k: usize) -> i64 {
        self.start_time + k as i64 * self.sample_period_s as i64
    }

    /// Timestamp one period past the last sample.
    pub fn end_time(&self) -> i64 {
        self.time_at(self.values.len())
    }
}

/// One named feature column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureColumn {
    pub name: String,
    pub values: Vec<f64>,
}

/// Hourly rows of named external features with a per-row validity mask.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    hour_timestamps: Vec<i64>,
    columns: Vec<FeatureColumn>,
    row_mask: Vec<bool>,
}

impl FeatureTable {
    pub fn new(
        hour_timestamps: Vec<i64>,
        columns: Vec<FeatureColumn>,
        row_mask: Vec<bool>,
    ) -> Result<Self, IngestError> {
        let n = hour_timestamps.len();
        if row_mask.len() != n {
            return Err(IngestError::InvalidTable(
                "row mask length differs from row count".into(),
            ));
        }
        for c in &columns {
            if c.values.len() != n {
                return Err(IngestError::InvalidTable(format!(
                    "column {:?} has {} values for {} rows",
                    c.name,
                    c.values.len(),
                    n
                )));
            }
        }
        let mut names: Vec<&str> = columns.iter().map(|c| c.name.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(IngestError::Schema("duplicate column name".into()));
        }
        for w in hour_timestamps.windows(2) {
            if w[1] <= w[0] {
                return Err(IngestError::InvalidTable(
                    "hour timestamps must be strictly increasing".into(),
                ));
            }
        }
        if let Some(ts) = hour_timestamps.iter().find(|ts| !time::is_hour_aligned(**ts)) {
            return Err(IngestError::InvalidTable(format!(
                "timestamp {} is not hour-aligned",
                time::format_utc(*ts)
            )));
        }
        Ok(Self {
            hour_timestamps,
            columns,
            row_mask,
        })
    }

    pub fn hour_timestamps(&self) -> &[i64] {
        &self.hour_timestamps
    }

    pub fn row_mask(&self) -> &[bool] {
        &self.row_mask
    }

    pub fn n_rows(&self) -> usize {
        self.hour_timestamps.len()
    }

    pub fn n_columns(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    /// All feature values of row `i`, in column order.
    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c.values[i]).collect()
    }

    pub fn n_masked(&self) -> usize {
        self.row_mask.iter().filter(|m| !**m).count()
    }

    /// A copy of the table with one extra column appended.
    pub fn with_column(&self, name: &str, values: Vec<f64>) -> Result<Self, IngestError> {
        let mut columns = self.columns.clone();
        columns.push(FeatureColumn {
            name: name.to_string(),
            values,
        });
        Self::new(self.hour_timestamps.clone(), columns, self.row_mask.clone())
    }
}

/// Read a `timestamp_utc,frequency_hz` file into a trace.
///
/// Timestamps must be strictly increasing at a 1 s base period; gaps are
/// filled with NaN samples (one per missing second).
pub fn read_frequency_csv<R: Read>(reader: R) -> Result<FrequencyTrace, IngestError> {
    const PERIOD: i64 = 1;
    let mut r = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = r
        .headers()
        .map_err(|e| IngestError::Schema(e.to_string()))?
        .clone();
    let header: Vec<&str> = headers.iter().collect();
    if header != ["timestamp_utc", "frequency_hz"] {
        return Err(IngestError::Schema(format!(
            "expected header timestamp_utc,frequency_hz, got {header:?}"
        )));
    }
    let mut start_time = None;
    let mut prev_ts = None;
    let mut values: Vec<f64> = Vec::new();
    for record in r.records() {
        let record = record.map_err(|e| IngestError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let ts = time::parse_utc(&record[0]).map_err(|msg| IngestError::Parse { line, msg })?;
        let value: f64 = record[1].trim().parse().map_err(|e| IngestError::Parse {
            line,
            msg: format!("bad frequency value {:?}: {e}", &record[1]),
        })?;
        if start_time.is_none() {
            start_time = Some(ts);
        }
        if let Some(prev) = prev_ts {
            if ts <= prev {
                return Err(IngestError::Ordering {
                    line,
                    msg: format!(
                        "{} follows {}",
                        time::format_utc(ts),
                        time::format_utc(prev)
                    ),
                });
            }
            let gap = ts - prev;
            for _ in PERIOD..gap {
                values.push(f64::NAN);
            }
        }
        values.push(value);
        prev_ts = Some(ts);
    }
    let start_time =
        start_time.ok_or_else(|| IngestError::InvalidTrace("file has no data rows".into()))?;
    FrequencyTrace::new(start_time, PERIOD as u32, values)
}

pub fn read_frequency_csv_path(path: &Path) -> Result<FrequencyTrace, IngestError> {
    read_frequency_csv(std::fs::File::open(path)?)
}

/// Write a trace as `timestamp_utc,frequency_hz`; NaN samples are written
/// literally so that `write(read(x)) = x`.
pub fn write_frequency_csv<W: Write>(trace: &FrequencyTrace, writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["timestamp_utc", "frequency_hz"])
        .map_err(|e| IngestError::Schema(e.to_string()))?;
    for (k, v) in trace.values().iter().enumerate() {
        w.write_record([time::format_utc(trace.time_at(k)), v.to_string()])
            .map_err(|e| IngestError::Schema(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_frequency_csv_path(trace: &FrequencyTrace, path: &Path) -> Result<(), IngestError> {
    write_frequency_csv(trace, std::fs::File::create(path)?)
}

/// Read a `hour_utc,<feature...>` file.
///
/// Any row with an empty (or non-finite) cell is masked, not dropped.
pub fn read_feature_csv<R: Read>(reader: R) -> Result<FeatureTable, IngestError> {
    let mut r = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = r
        .headers()
        .map_err(|e| IngestError::Schema(e.to_string()))?
        .clone();
    let header: Vec<&str> = headers.iter().collect();
    if header.first() != Some(&"hour_utc") {
        return Err(IngestError::Schema(format!(
            "first column must be hour_utc, got {:?}",
            header.first()
        )));
    }
    let names: Vec<String> = header[1..].iter().map(|s| s.to_string()).collect();
    {
        let mut sorted = names.clone();
        sorted.sort_unstable();
        if let Some(dup) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(IngestError::Schema(format!(
                "duplicate column name {:?}",
                dup[0]
            )));
        }
    }
    let mut hour_timestamps = Vec::new();
    let mut row_mask = Vec::new();
    let mut columns: Vec<FeatureColumn> = names
        .into_iter()
        .map(|name| FeatureColumn {
            name,
            values: Vec::new(),
        })
        .collect();
    let mut prev_ts = None;
    for record in r.records() {
        let record = record.map_err(|e| IngestError::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let ts = time::parse_utc(&record[0]).map_err(|msg| IngestError::Parse { line, msg })?;
        if !time::is_hour_aligned(ts) {
            return Err(IngestError::Alignment {
                line,
                ts: time::format_utc(ts),
            });
        }
        if let Some(prev) = prev_ts {
            if ts <= prev {
                return Err(IngestError::Ordering {
                    line,
                    msg: format!(
                        "{} follows {}",
                        time::format_utc(ts),
                        time::format_utc(prev)
                    ),
                });
            }
        }
        prev_ts = Some(ts);
        let mut row_ok = true;
        for (j, col) in columns.iter_mut().enumerate() {
            let cell = record[j + 1].trim();
            if cell.is_empty() {
                col.values.push(f64::NAN);
                row_ok = false;
            } else {
                let v: f64 = cell.parse().map_err(|e| IngestError::Parse {
                    line,
                    msg: format!("bad value {cell:?} in column {:?}: {e}", col.name),
                })?;
                if !v.is_finite() {
                    row_ok = false;
                }
                col.values.push(v);
            }
        }
        hour_timestamps.push(ts);
        row_mask.push(row_ok);
    }
    FeatureTable::new(hour_timestamps, columns, row_mask)
}

pub fn read_feature_csv_path(path: &Path) -> Result<FeatureTable, IngestError> {
    read_feature_csv(std::fs::File::open(path)?)
}

/// Write a feature table; NaN cells are written empty so the mask survives
/// a round trip.
pub fn write_feature_csv<W: Write>(table: &FeatureTable, writer: W) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["hour_utc".to_string()];
    header.extend(table.columns().iter().map(|c| c.name.clone()));
    w.write_record(&header)
        .map_err(|e| IngestError::Schema(e.to_string()))?;
    for i in 0..table.n_rows() {
        let mut record = vec![time::format_utc(table.hour_timestamps()[i])];
        for c in table.columns() {
            let v = c.values[i];
            record.push(if v.is_finite() { v.to_string() } else { String::new() });
        }
        w.write_record(&record)
            .map_err(|e| IngestError::Schema(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_feature_csv_path(table: &FeatureTable, path: &Path) -> Result<(), IngestError> {
    write_feature_csv(table, std::fs::File::create(path)?)
}

/// Configuration of the synthetic dataset generator.
///
/// `load_profile` and `solar_profile` give the 24 hourly mean levels (MW)
/// repeated every day; `hour_effect` adds a fixed per-hour-of-day offset
/// (mHz/s) to the boundary slope on top of the step mechanism, which models
/// schedule effects that no step size can express (it defaults to zero).
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub n_days: u32,
    /// Gaussian noise scale on every frequency sample (Hz).
    pub noise_std: f64,
    /// RoCoF per unit power step (mHz/s per MW).
    pub imbalance_gain: f64,
    pub load_profile: [f64; 24],
    pub solar_profile: [f64; 24],
    pub hour_effect: [f64; 24],
    pub rng_seed: u64,
}

/// First sample of every synthetic trace: 2016-11-30T23:00:00Z, one pad
/// hour before the first boundary at 2016-12-01T00:00:00Z.
pub const SYNTH_TRACE_START: i64 = 1480546800;

/// Half-width of the linear frequency ramp integrated at each boundary (s).
const RAMP_HALF_WIDTH_S: i64 = 150;
/// The accumulated excursion relaxes back to 50 Hz between these offsets
/// after the boundary, well clear of every extraction window.
const RELAX_START_S: i64 = 600;
const RELAX_END_S: i64 = 3000;

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.n_days < 1 {
            return Err(IngestError::Config("n_days must be at least 1".into()));
        }
        if !self.noise_std.is_finite() || self.noise_std < 0.0 {
            return Err(IngestError::Config("noise_std must be finite and >= 0".into()));
        }
        if !self.imbalance_gain.is_finite() {
            return Err(IngestError::Config("imbalance_gain must be finite".into()));
        }
        for (name, profile) in [
            ("load_profile", &self.load_profile),
            ("solar_profile", &self.solar_profile),
            ("hour_effect", &self.hour_effect),
        ] {
            if profile.iter().any(|v| !v.is_finite()) {
                return Err(IngestError::Config(format!("{name} must be finite")));
            }
        }
        Ok(())
    }

    /// Parse a flat `key=value` text file. Lines starting with `#` and blank
    /// lines are skipped; profiles are 24 comma-separated values.
    pub fn parse(text: &str) -> Result<Self, IngestError> {
        let mut n_days = None;
        let mut noise_std = None;
        let mut imbalance_gain = None;
        let mut load_profile = None;
        let mut solar_profile = None;
        let mut hour_effect = [0.0; 24];
        let mut rng_seed = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| IngestError::Config(
                format!("line {}: expected key=value, got {line:?}", lineno + 1),
            ))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |e: String| IngestError::Config(format!("line {}: {e}", lineno + 1));
            match key {
                "n_days" => n_days = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "noise_std" => noise_std = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                "imbalance_gain" => {
                    imbalance_gain = Some(value.parse().map_err(|e| bad(format!("{e}")))?)
                }
                "load_profile" => load_profile = Some(parse_profile(value).map_err(bad)?),
                "solar_profile" => solar_profile = Some(parse_profile(value).map_err(bad)?),
                "hour_effect" => hour_effect = parse_profile(value).map_err(bad)?,
                "rng_seed" => rng_seed = Some(value.parse().map_err(|e| bad(format!("{e}")))?),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        let cfg = SyntheticConfig {
            n_days: n_days.ok_or_else(|| IngestError::Config("missing n_days".into()))?,
            noise_std: noise_std.ok_or_else(|| IngestError::Config("missing noise_std".into()))?,
            imbalance_gain: imbalance_gain
                .ok_or_else(|| IngestError::Config("missing imbalance_gain".into()))?,
            load_profile: load_profile
                .ok_or_else(|| IngestError::Config("missing load_profile".into()))?,
            solar_profile: solar_profile
                .ok_or_else(|| IngestError::Config("missing solar_profile".into()))?,
            hour_effect,
            rng_seed: rng_seed.ok_or_else(|| IngestError::Config("missing rng_seed".into()))?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse_path(path: &Path) -> Result<Self, IngestError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Render as the `key=value` text format understood by [`Self::parse`].
    pub fn render(&self) -> String {
        fn profile(p: &[f64; 24]) -> String {
            p.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        }
        format!(
            "n_days={}\nnoise_std={}\nimbalance_gain={}\nload_profile={}\nsolar_profile={}\nhour_effect={}\nrng_seed={}\n",
            self.n_days,
            self.noise_std,
            self.imbalance_gain,
            profile(&self.load_profile),
            profile(&self.solar_profile),
            profile(&self.hour_effect),
            self.rng_seed
        )
    }

    /// The noise-free boundary slope (mHz/s) for hour-of-day `h`:
    /// gain · (load ramp − solar ramp) + hour effect, ramps taken cyclically.
    pub fn true_slope(&self, h: usize) -> f64 {
        let prev = (h + 23) % 24;
        let load_ramp = self.load_profile[h] - self.load_profile[prev];
        let solar_ramp = self.solar_profile[h] - self.solar_profile[prev];
        self.imbalance_gain * (load_ramp - solar_ramp) + self.hour_effect[h]
    }

    /// A typical winter-day system: load rising through the morning and
    /// evening, solar peaking around noon hard enough that the mid-morning
    /// and mid-afternoon refined steps flip sign against the load ramp.
    pub fn typical(n_days: u32, noise_std: f64, rng_seed: u64) -> Self {
        Self {
            n_days,
            noise_std,
            imbalance_gain: 0.0025,
            load_profile: [
                42_000.0, 40_500.0, 39_500.0, 39_000.0, 39_500.0, 41_500.0, 46_000.0, 52_000.0,
                56_500.0, 59_000.0, 60_500.0, 61_000.0, 60_500.0, 59_500.0, 58_500.0, 58_000.0,
                57_500.0, 58_500.0, 60_500.0, 61_500.0, 59_500.0, 55_500.0, 50_500.0, 46_000.0,
            ],
            solar_profile: [
                0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 500.0, 2_000.0, 5_500.0, 10_000.0, 14_500.0,
                17_500.0, 19_000.0, 19_000.0, 17_500.0, 14_500.0, 10_500.0, 6_500.0, 3_000.0,
                1_000.0, 0.0, 0.0, 0.0, 0.0,
            ],
            hour_effect: [0.0; 24],
            rng_seed,
        }
    }
}

fn parse_profile(value: &str) -> Result<[f64; 24], String> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 24 {
        return Err(format!("profile needs 24 values, got {}", parts.len()));
    }
    let mut out = [0.0; 24];
    for (i, p) in parts.iter().enumerate() {
        out[i] = p.parse().map_err(|e| format!("bad value {p:?}: {e}"))?;
    }
    Ok(out)
}

/// Generate a synthetic frequency trace, feature table and ground-truth
/// RoCoF series from `cfg`. Identical configs give identical outputs.
///
/// The trace covers one pad hour, then `24 · n_days` scheduled hours, then
/// one pad hour, at 1 s sampling. Boundary `h` (the start of scheduled hour
/// `h`) carries a linear frequency ramp of the noise-free slope
/// [`SyntheticConfig::true_slope`] spanning ±150 s around it.
pub fn synthesize_dataset(
    cfg: &SyntheticConfig,
) -> Result<(FrequencyTrace, FeatureTable, RocofSeries), IngestError> {
    cfg.validate()?;
    let n_hours = 24 * cfg.n_days as usize;
    let n_samples = (n_hours + 2) * 3600 + 1;
    let mut values = vec![50.0f64; n_samples];

    // Deterministic slope per boundary; boundary h sits at sample (h+1)*3600.
    let slopes: Vec<f64> = (0..n_hours).map(|h| cfg.true_slope(h % 24)).collect();
    for (h, &slope_mhz) in slopes.iter().enumerate() {
        if slope_mhz == 0.0 {
            continue;
        }
        let slope_hz = slope_mhz * 1e-3;
        let rise_hz = slope_hz * (2 * RAMP_HALF_WIDTH_S) as f64;
        let b = ((h + 1) * 3600) as i64;
        for k in (b - RAMP_HALF_WIDTH_S)..=(b + RELAX_END_S) {
            let dt = k - b;
            let contribution = if dt <= RAMP_HALF_WIDTH_S {
                slope_hz * (dt + RAMP_HALF_WIDTH_S) as f64
            } else if dt <= RELAX_START_S {
                rise_hz
            } else {
                rise_hz * (RELAX_END_S - dt) as f64 / (RELAX_END_S - RELAX_START_S) as f64
            };
            values[k as usize] += contribution;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    if cfg.noise_std > 0.0 {
        let noise = Normal::new(0.0, cfg.noise_std)
            .map_err(|e| IngestError::Config(format!("bad noise_std: {e}")))?;
        for v in &mut values {
            *v += noise.sample(&mut rng);
        }
    }
    let trace = FrequencyTrace::new(SYNTH_TRACE_START, 1, values)?;

    // Hourly features for the scheduled hours.
    let boundaries: Vec<i64> = (0..n_hours)
        .map(|h| SYNTH_TRACE_START + ((h + 1) * 3600) as i64)
        .collect();
    let price_noise = Normal::new(0.0, 2.0).expect("fixed std");
    let mut load = Vec::with_capacity(n_hours);
    let mut solar = Vec::with_capacity(n_hours);
    let mut load_ramp = Vec::with_capacity(n_hours);
    let mut solar_ramp = Vec::with_capacity(n_hours);
    let mut price = Vec::with_capacity(n_hours);
    let mut hour = Vec::with_capacity(n_hours);
    let mut wday = Vec::with_capacity(n_hours);
    let mut month = Vec::with_capacity(n_hours);
    for (h, &ts) in boundaries.iter().enumerate() {
        let hod = h % 24;
        let prev = (hod + 23) % 24;
        load.push(cfg.load_profile[hod]);
        solar.push(cfg.solar_profile[hod]);
        load_ramp.push(cfg.load_profile[hod] - cfg.load_profile[prev]);
        solar_ramp.push(cfg.solar_profile[hod] - cfg.solar_profile[prev]);
        let base_price = 30.0 + 20.0 * (2.0 * std::f64::consts::PI * (hod as f64 - 9.0) / 24.0).sin();
        price.push(base_price + price_noise.sample(&mut rng));
        hour.push(time::hour_of_day(ts) as f64);
        wday.push(time::weekday(ts) as f64);
        month.push(time::month(ts) as f64);
    }
    let columns = vec![
        FeatureColumn { name: "load".into(), values: load },
        FeatureColumn { name: "solar".into(), values: solar },
        FeatureColumn { name: "load_ramp".into(), values: load_ramp },
        FeatureColumn { name: "solar_ramp".into(), values: solar_ramp },
        FeatureColumn { name: "price".into(), values: price },
        FeatureColumn { name: "hour".into(), values: hour },
        FeatureColumn { name: "weekday".into(), values: wday },
        FeatureColumn { name: "month".into(), values: month },
    ];
    let table = FeatureTable::new(boundaries.clone(), columns, vec![true; n_hours])?;

    let ground_truth = RocofSeries::new(boundaries, slopes, vec![true; n_hours]);
    Ok((trace, table, ground_truth))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_cfg() -> SyntheticConfig {
        SyntheticConfig {
            n_days: 1,
            noise_std: 0.0,
            imbalance_gain: 0.002,
            load_profile: [50_000.0; 24],
            solar_profile: [0.0; 24],
            hour_effect: [0.0; 24],
            rng_seed: 7,
        }
    }

    #[test]
    fn read_three_constant_rows() {
        let csv = "timestamp_utc,frequency_hz\n\
                   2016-12-01T00:00:00Z,50.0\n\
                   2016-12-01T00:00:01Z,50.0\n\
                   2016-12-01T00:00:02Z,50.0\n";
        let t = read_frequency_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.values().iter().all(|v| *v == 50.0));
        assert_eq!(t.sample_period_s(), 1);
    }

    #[test]
    fn gap_becomes_explicit_nan() {
        let csv = "timestamp_utc,frequency_hz\n\
                   2016-12-01T00:00:00Z,50.0\n\
                   2016-12-01T00:00:02Z,50.1\n";
        let t = read_frequency_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.values()[0], 50.0);
        assert!(t.values()[1].is_nan());
        assert_eq!(t.values()[2], 50.1);
    }

    #[test]
    fn non_monotonic_timestamps_rejected() {
        let csv = "timestamp_utc,frequency_hz\n\
                   2016-12-01T00:00:01Z,50.0\n\
                   2016-12-01T00:00:00Z,50.0\n";
        assert!(matches!(
            read_frequency_csv(csv.as_bytes()),
            Err(IngestError::Ordering { line: 3, .. })
        ));
    }

    #[test]
    fn malformed_row_reports_line_number() {
        let csv = "timestamp_utc,frequency_hz\n\
                   2016-12-01T00:00:00Z,50.0\n\
                   2016-12-01T00:00:01Z,fifty\n";
        match read_frequency_csv(csv.as_bytes()) {
            Err(IngestError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn feature_table_basic_and_masking() {
        let csv = "hour_utc,load,solar\n\
                   2016-12-01T00:00:00Z,100,1\n\
                   2016-12-01T01:00:00Z,200,\n";
        let t = read_feature_csv(csv.as_bytes()).unwrap();
        assert_eq!(t.n_rows(), 2);
        assert_eq!(t.n_columns(), 2);
        assert_eq!(t.row_mask(), &[true, false]);
        assert_eq!(t.column("load").unwrap(), &[100.0, 200.0]);
        assert!(t.column("solar").unwrap()[1].is_nan());
        assert_eq!(t.n_masked() + t.row_mask().iter().filter(|m| **m).count(), 2);
    }

    #[test]
    fn duplicate_column_rejected() {
        let csv = "hour_utc,load,load\n2016-12-01T00:00:00Z,1,2\n";
        assert!(matches!(
            read_feature_csv(csv.as_bytes()),
            Err(IngestError::Schema(_))
        ));
    }

    #[test]
    fn misaligned_hour_rejected() {
        let csv = "hour_utc,load\n2016-12-01T00:30:00Z,1\n";
        assert!(matches!(
            read_feature_csv(csv.as_bytes()),
            Err(IngestError::Alignment { .. })
        ));
    }

    #[test]
    fn synth_flat_profiles_give_zero_truth() {
        let (_, _, truth) = synthesize_dataset(&flat_cfg()).unwrap();
        assert_eq!(truth.len(), 24);
        assert!(truth.rocof().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn synth_deterministic_per_seed() {
        let mut cfg = flat_cfg();
        cfg.noise_std = 0.002;
        cfg.load_profile[7] = 53_000.0;
        let (t1, f1, g1) = synthesize_dataset(&cfg).unwrap();
        let (t2, f2, g2) = synthesize_dataset(&cfg).unwrap();
        assert_eq!(t1, t2);
        assert_eq!(f1, f2);
        assert_eq!(g1, g2);
        cfg.rng_seed += 1;
        let (t3, _, _) = synthesize_dataset(&cfg).unwrap();
        assert_ne!(t1, t3);
    }

    #[test]
    fn synth_known_step_gives_known_slope() {
        let mut cfg = flat_cfg();
        // A single 1000 MW load step into hour 6 at gain 0.002 mHz/s/MW.
        cfg.load_profile[6] = 51_000.0;
        let (_, table, truth) = synthesize_dataset(&cfg).unwrap();
        assert!((truth.rocof()[6] - 2.0).abs() < 1e-12);
        // The step back down an hour later.
        assert!((truth.rocof()[7] + 2.0).abs() < 1e-12);
        assert_eq!(table.column("load_ramp").unwrap()[6], 1000.0);
    }

    #[test]
    fn synth_config_text_roundtrip() {
        let mut cfg = flat_cfg();
        cfg.hour_effect[22] = -4.0;
        cfg.noise_std = 0.002;
        let text = cfg.render();
        let back = SyntheticConfig::parse(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn synth_config_rejects_unknown_key() {
        assert!(matches!(
            SyntheticConfig::parse("bogus=1\n"),
            Err(IngestError::Config(_))
        ));
    }

    #[test]
    fn synth_config_defaults_hour_effect_to_zero() {
        let cfg = flat_cfg();
        let mut text = cfg.render();
        text = text
            .lines()
            .filter(|l| !l.starts_with("hour_effect"))
            .collect::<Vec<_>>()
            .join("\n");
        let parsed = SyntheticConfig::parse(&text).unwrap();
        assert_eq!(parsed.hour_effect, [0.0; 24]);
    }

    #[test]
    fn frequency_roundtrip_with_nan() {
        let t = FrequencyTrace::new(1480550400, 1, vec![50.0, f64::NAN, 49.99]).unwrap();
        let mut buf = Vec::new();
        write_frequency_csv(&t, &mut buf).unwrap();
        let back = read_frequency_csv(&buf[..]).unwrap();
        assert_eq!(back.start_time(), t.start_time());
        assert_eq!(back.values()[0], 50.0);
        assert!(back.values()[1].is_nan());
        assert_eq!(back.values()[2], 49.99);
    }
}
