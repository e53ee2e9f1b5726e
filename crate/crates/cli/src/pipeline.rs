//! Shared plumbing: data-source resolution, split-masked series, curve
//! exports.

use std::path::Path;

use anyhow::{bail, Context, Result};

use gridfreq::curves::{
    refined_generation_curve, spline_from_hourly, step_sizes_from_hourly, write_minute_csv_path,
    KnotAnchor, StepCurve,
};
use gridfreq::ingest::{
    read_feature_csv_path, read_frequency_csv_path, synthesize_dataset, FeatureTable,
    FrequencyTrace, SyntheticConfig,
};
use gridfreq::signal::rocof_series;
use gridfreq::time;
use gridfreq::{RocofSeries, StepSizes};

use crate::{SourceArgs, WindowArgs};

pub struct LoadedData {
    pub trace: FrequencyTrace,
    pub table: Option<FeatureTable>,
}

/// Resolve the data source; `need_features` demands a feature table.
pub fn load(source: &SourceArgs, need_features: bool) -> Result<LoadedData> {
    match (&source.synth_config, &source.freq) {
        (Some(cfg_path), None) => {
            let cfg = SyntheticConfig::parse_path(cfg_path)
                .with_context(|| format!("reading synthetic config {}", cfg_path.display()))?;
            let (trace, table, _) = synthesize_dataset(&cfg)?;
            Ok(LoadedData {
                trace,
                table: Some(table),
            })
        }
        (None, Some(freq_path)) => {
            let trace = read_frequency_csv_path(freq_path)
                .with_context(|| format!("reading frequency file {}", freq_path.display()))?;
            let table = match &source.features {
                Some(p) => Some(
                    read_feature_csv_path(p)
                        .with_context(|| format!("reading feature file {}", p.display()))?,
                ),
                None if need_features => {
                    bail!("this command needs --features alongside --freq")
                }
                None => None,
            };
            Ok(LoadedData { trace, table })
        }
        (Some(_), Some(_)) => bail!("give either --synth-config or --freq, not both"),
        (None, None) => bail!("no data source: give --synth-config or --freq"),
    }
}

/// Hour boundaries to extract: the feature table's hours when present,
/// otherwise every aligned hour whose window fits inside the trace.
pub fn boundaries(data: &LoadedData, windows: &WindowArgs) -> Vec<i64> {
    if let Some(table) = &data.table {
        return table.hour_timestamps().to_vec();
    }
    let margin = (windows.window_t + windows.window_l / 2) as i64;
    let lo = data.trace.start_time() + margin;
    let hi = data.trace.time_at(data.trace.len() - 1) - margin;
    let first = lo.div_euclid(time::HOUR_S) + i64::from(lo.rem_euclid(time::HOUR_S) != 0);
    let last = hi.div_euclid(time::HOUR_S);
    (first..=last).map(|k| k * time::HOUR_S).collect()
}

pub fn extract(data: &LoadedData, hours: &[i64], windows: &WindowArgs) -> Result<RocofSeries> {
    Ok(rocof_series(
        &data.trace,
        hours,
        windows.window_t,
        windows.window_l,
    )?)
}

/// Keep only `indices` valid; everything else masked.
pub fn restrict_rocof(series: &RocofSeries, indices: &[usize]) -> RocofSeries {
    let mut valid = vec![false; series.len()];
    for &i in indices {
        valid[i] = series.valid()[i];
    }
    RocofSeries::new(
        series.hour_timestamps().to_vec(),
        series.rocof().to_vec(),
        valid,
    )
}

pub fn restrict_steps(steps: &StepSizes, indices: &[usize]) -> StepSizes {
    let mut valid = vec![false; steps.len()];
    for &i in indices {
        valid[i] = steps.valid()[i];
    }
    StepSizes::new(
        steps.hour_timestamps().to_vec(),
        steps.delta().to_vec(),
        valid,
    )
}

/// Column lookup that names the missing column in the error.
pub fn column<'t>(table: &'t FeatureTable, name: &str) -> Result<&'t [f64]> {
    table
        .column(name)
        .with_context(|| format!("feature table has no {name:?} column"))
}

pub fn steps_of(table: &FeatureTable, name: &str) -> Result<StepSizes> {
    Ok(step_sizes_from_hourly(
        table.hour_timestamps(),
        column(table, name)?,
        table.row_mask(),
    )?)
}

/// Export the minute-resolution curve sketches: the interpolated load, the
/// stepped schedule that tracks it, and the refined curve whose steps
/// exclude the continuous solar ramp.
pub fn export_curves(table: &FeatureTable, out: &Path) -> Result<()> {
    let ts = table.hour_timestamps();
    let mask = table.row_mask();
    let load = column(table, "load")?;
    let solar = column(table, "solar")?;

    let valid_hours: Vec<i64> = (0..table.n_rows())
        .filter(|&i| mask[i])
        .map(|i| ts[i])
        .collect();
    if valid_hours.len() < 3 {
        bail!("need at least 3 unmasked hours to draw curves");
    }
    let minutes: Vec<i64> = {
        let (first, last) = (valid_hours[0], *valid_hours.last().unwrap());
        (0..=(last - first) / 60).map(|m| first + m * 60).collect()
    };

    let load_spline = spline_from_hourly(ts, load, mask, KnotAnchor::HourStart)?;
    let values: Vec<f64> = minutes
        .iter()
        .map(|&m| load_spline.eval(m as f64))
        .collect::<Result<_, _>>()?;
    write_minute_csv_path(&minutes, &values, &out.join("load_spline.csv"))?;

    let load_levels: Vec<f64> = (0..table.n_rows())
        .filter(|&i| mask[i])
        .map(|i| load[i])
        .collect();
    let load_steps_curve = StepCurve::new(valid_hours.clone(), load_levels.clone())?;
    let values: Vec<f64> = minutes
        .iter()
        .map(|&m| load_steps_curve.value_at(m))
        .collect::<Result<_, _>>()?;
    write_minute_csv_path(&minutes, &values, &out.join("generation_load_steps.csv"))?;

    // Refined schedule: steps of (load − solar) plus the solar spline.
    let residual_levels: Vec<f64> = (0..table.n_rows())
        .filter(|&i| mask[i])
        .map(|i| load[i] - solar[i])
        .collect();
    let residual_curve = StepCurve::new(valid_hours, residual_levels)?;
    let solar_spline = spline_from_hourly(ts, solar, mask, KnotAnchor::HourStart)?;
    let refined = refined_generation_curve(&residual_curve, &solar_spline, &minutes)?;
    write_minute_csv_path(&minutes, &refined, &out.join("generation_refined.csv"))?;
    Ok(())
}
