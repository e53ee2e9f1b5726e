//! Minute-resolution load and generation curves, and the hourly step sizes
//! that drive the linear models.
//!
//! Hourly published values become continuous curves in two ways: a natural
//! cubic spline interpolates smooth quantities (load, solar generation),
//! and a right-continuous step curve models schedule-based generation that
//! jumps to a new set point at the start of each hour. The signed jump at
//! each boundary is the step size; subtracting the solar ramp from the load
//! ramp yields the refined step size used by the refined linear model.

use std::io::Write;
use std::path::Path;

use thiserror::Error;

use crate::time;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("need at least {need} knots, got {got}")]
    TooFewKnots { need: usize, got: usize },
    #[error("knot abscissae must be strictly increasing and finite")]
    BadKnots,
    #[error("knot ordinates must be finite")]
    BadValues,
    #[error("x = {x} outside the spline domain [{lo}, {hi}]")]
    Extrapolation { x: f64, lo: f64, hi: f64 },
    #[error("timestamp {} outside the curve domain", time::format_utc(*.0))]
    OutOfDomain(i64),
    #[error("inputs are not aligned: {0}")]
    Misaligned(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Natural cubic spline through a set of knots.
///
/// Natural boundary conditions: zero curvature at both end knots. The
/// spline interpolates every knot exactly and is C² on the interior.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline {
    knot_xs: Vec<f64>,
    knot_ys: Vec<f64>,
    second_derivatives: Vec<f64>,
}

/// Fit a natural cubic spline: solves the tridiagonal system for the
/// per-knot second derivatives with the Thomas algorithm.
pub fn fit_natural_spline(knot_xs: &[f64], knot_ys: &[f64]) -> Result<CubicSpline, CurveError> {
    let n = knot_xs.len();
    if n < 3 || knot_ys.len() != n {
        return Err(CurveError::TooFewKnots {
            need: 3,
            got: n.min(knot_ys.len()),
        });
    }
    if knot_xs.iter().any(|x| !x.is_finite()) || knot_xs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CurveError::BadKnots);
    }
    if knot_ys.iter().any(|y| !y.is_finite()) {
        return Err(CurveError::BadValues);
    }

    // Interior equations, i = 1..n-2:
    //   h[i-1]/6 * M[i-1] + (h[i-1]+h[i])/3 * M[i] + h[i]/6 * M[i+1]
    //     = (y[i+1]-y[i])/h[i] - (y[i]-y[i-1])/h[i-1]
    // with M[0] = M[n-1] = 0.
    let h: Vec<f64> = knot_xs.windows(2).map(|w| w[1] - w[0]).collect();
    let m = n - 2;
    let mut diag = vec![0.0; m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        diag[i] = (h[i] + h[i + 1]) / 3.0;
        rhs[i] = (knot_ys[i + 2] - knot_ys[i + 1]) / h[i + 1]
            - (knot_ys[i + 1] - knot_ys[i]) / h[i];
    }
    // Forward sweep: sub-diagonal h[i]/6, super-diagonal h[i+1]/6.
    for i in 1..m {
        let w = (h[i] / 6.0) / diag[i - 1];
        diag[i] -= w * h[i] / 6.0;
        rhs[i] -= w * rhs[i - 1];
    }
    let mut second = vec![0.0; n];
    if m > 0 {
        second[m] = rhs[m - 1] / diag[m - 1];
        for i in (0..m - 1).rev() {
            second[i + 1] = (rhs[i] - (h[i + 1] / 6.0) * second[i + 2]) / diag[i];
        }
    }
    Ok(CubicSpline {
        knot_xs: knot_xs.to_vec(),
        knot_ys: knot_ys.to_vec(),
        second_derivatives: second,
    })
}

impl CubicSpline {
    pub fn knot_xs(&self) -> &[f64] {
        &self.knot_xs
    }

    pub fn knot_ys(&self) -> &[f64] {
        &self.knot_ys
    }

    pub fn second_derivatives(&self) -> &[f64] {
        &self.second_derivatives
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knot_xs[0], *self.knot_xs.last().unwrap())
    }

    /// Piecewise-cubic evaluation; no silent extrapolation.
    pub fn eval(&self, x: f64) -> Result<f64, CurveError> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(CurveError::Extrapolation { x, lo, hi });
        }
        // Segment index such that x ∈ [x[i], x[i+1]].
        let i = match self.knot_xs.partition_point(|k| *k <= x) {
            0 => 0,
            p if p >= self.knot_xs.len() => self.knot_xs.len() - 2,
            p => p - 1,
        };
        let (x0, x1) = (self.knot_xs[i], self.knot_xs[i + 1]);
        let (y0, y1) = (self.knot_ys[i], self.knot_ys[i + 1]);
        let (m0, m1) = (self.second_derivatives[i], self.second_derivatives[i + 1]);
        let h = x1 - x0;
        let a = (x1 - x) / h;
        let b = (x - x0) / h;
        Ok(a * y0
            + b * y1
            + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * h * h / 6.0)
    }
}

/// Free-function form of [`CubicSpline::eval`].
pub fn eval_spline(s: &CubicSpline, x: f64) -> Result<f64, CurveError> {
    s.eval(x)
}

/// How hourly values anchor spline knots: at the hour start (default), or
/// mid-hour, reading the published value as the hourly average.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KnotAnchor {
    #[default]
    HourStart,
    MidHour,
}

/// Spline through hourly values; masked or non-finite hours are skipped, so
/// the spline bridges gaps.
pub fn spline_from_hourly(
    hour_timestamps: &[i64],
    values: &[f64],
    valid: &[bool],
    anchor: KnotAnchor,
) -> Result<CubicSpline, CurveError> {
    if hour_timestamps.len() != values.len() || values.len() != valid.len() {
        return Err(CurveError::Misaligned("input lengths differ".into()));
    }
    let shift = match anchor {
        KnotAnchor::HourStart => 0.0,
        KnotAnchor::MidHour => 1800.0,
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for i in 0..values.len() {
        if valid[i] && values[i].is_finite() {
            xs.push(hour_timestamps[i] as f64 + shift);
            ys.push(values[i]);
        }
    }
    fit_natural_spline(&xs, &ys)
}

/// Piecewise-constant hourly schedule, right-continuous at the boundaries:
/// the level of hour `i` applies on `[ts[i], ts[i+1])`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepCurve {
    hour_timestamps: Vec<i64>,
    levels: Vec<f64>,
}

impl StepCurve {
    pub fn new(hour_timestamps: Vec<i64>, levels: Vec<f64>) -> Result<Self, CurveError> {
        if hour_timestamps.len() != levels.len() || hour_timestamps.is_empty() {
            return Err(CurveError::Misaligned(
                "timestamps and levels must be equal-length and nonempty".into(),
            ));
        }
        if hour_timestamps.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CurveError::BadKnots);
        }
        Ok(Self {
            hour_timestamps,
            levels,
        })
    }

    pub fn hour_timestamps(&self) -> &[i64] {
        &self.hour_timestamps
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Level in force at `ts`; the last hour extends one hour past its start.
    pub fn value_at(&self, ts: i64) -> Result<f64, CurveError> {
        let first = self.hour_timestamps[0];
        let last = *self.hour_timestamps.last().unwrap();
        if ts < first || ts >= last + time::HOUR_S {
            return Err(CurveError::OutOfDomain(ts));
        }
        let i = self.hour_timestamps.partition_point(|t| *t <= ts) - 1;
        Ok(self.levels[i])
    }
}

/// Signed step per hour boundary (MW). The first boundary has no delta,
/// and a masked neighbour hour masks the delta.
#[derive(Debug, Clone, PartialEq)]
pub struct StepSizes {
    hour_timestamps: Vec<i64>,
    delta: Vec<f64>,
    valid: Vec<bool>,
}

impl StepSizes {
    pub fn new(hour_timestamps: Vec<i64>, delta: Vec<f64>, valid: Vec<bool>) -> Self {
        assert_eq!(hour_timestamps.len(), delta.len());
        assert_eq!(hour_timestamps.len(), valid.len());
        Self {
            hour_timestamps,
            delta,
            valid,
        }
    }

    pub fn hour_timestamps(&self) -> &[i64] {
        &self.hour_timestamps
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }
}

/// Backward boundary differences of hourly values: the delta at boundary
/// `t_i` is the value of the hour starting at `t_i` minus the value of the
/// hour ending there.
pub fn step_sizes_from_hourly(
    hour_timestamps: &[i64],
    values: &[f64],
    valid: &[bool],
) -> Result<StepSizes, CurveError> {
    let n = values.len();
    if hour_timestamps.len() != n || valid.len() != n {
        return Err(CurveError::Misaligned("input lengths differ".into()));
    }
    if n < 2 {
        return Err(CurveError::TooFewKnots { need: 2, got: n });
    }
    let mut delta = vec![f64::NAN; n];
    let mut out_valid = vec![false; n];
    for i in 1..n {
        if valid[i] && valid[i - 1] && values[i].is_finite() && values[i - 1].is_finite() {
            delta[i] = values[i] - values[i - 1];
            out_valid[i] = true;
        }
    }
    Ok(StepSizes::new(hour_timestamps.to_vec(), delta, out_valid))
}

/// Refined step sizes: load step minus solar step, per boundary. A masked
/// delta on either side masks the result.
pub fn refined_step_sizes(
    load_steps: &StepSizes,
    solar_steps: &StepSizes,
) -> Result<StepSizes, CurveError> {
    if load_steps.hour_timestamps != solar_steps.hour_timestamps {
        return Err(CurveError::Misaligned(
            "load and solar step timestamps differ".into(),
        ));
    }
    let n = load_steps.len();
    let mut delta = vec![f64::NAN; n];
    let mut valid = vec![false; n];
    for i in 0..n {
        if load_steps.valid[i] && solar_steps.valid[i] {
            delta[i] = load_steps.delta[i] - solar_steps.delta[i];
            valid[i] = true;
        }
    }
    Ok(StepSizes::new(
        load_steps.hour_timestamps.clone(),
        delta,
        valid,
    ))
}

/// Per-minute sum of a step curve and a spline: the refined generation
/// curve combining stepped schedule and continuous solar output.
pub fn refined_generation_curve(
    step_curve: &StepCurve,
    solar_spline: &CubicSpline,
    minutes: &[i64],
) -> Result<Vec<f64>, CurveError> {
    minutes
        .iter()
        .map(|&ts| Ok(step_curve.value_at(ts)? + solar_spline.eval(ts as f64)?))
        .collect()
}

/// Write a minute-resolution curve as `minute_utc,value_mw`.
pub fn write_minute_csv<W: Write>(
    minutes: &[i64],
    values: &[f64],
    writer: W,
) -> Result<(), CurveError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["minute_utc", "value_mw"])
        .map_err(|e| CurveError::Misaligned(e.to_string()))?;
    for (ts, v) in minutes.iter().zip(values) {
        w.write_record([time::format_utc(*ts), v.to_string()])
            .map_err(|e| CurveError::Misaligned(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_minute_csv_path(minutes: &[i64], values: &[f64], path: &Path) -> Result<(), CurveError> {
    write_minute_csv(minutes, values, std::fs::File::create(path)?)
}
