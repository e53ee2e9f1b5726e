//! Linear RoCoF predictors over hourly step sizes.
//!
//! Three variants are used: the load-based model `y = a·ΔP_L` (no
//! intercept), the same with a fitted bias, and the refined model
//! `y = a·ΔP_S + b` over solar-corrected steps. All fits are closed-form
//! least squares over the valid, unmasked hour pairs, with compensated
//! accumulation so the two-parameter solve stays exact at dataset scale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curves::StepSizes;
use crate::signal::RocofSeries;

#[derive(Debug, Error)]
pub enum LinModelError {
    #[error("need at least 2 valid aligned pairs, got {0}")]
    TooFewPairs(usize),
    #[error("degenerate design: {0}")]
    Rank(String),
    #[error("inputs are not aligned: {0}")]
    Misaligned(String),
    #[error("model has non-finite coefficients")]
    NonFinite,
}

/// Which step series the model consumes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    LoadStep,
    RefinedStep,
}

/// Fitted linear RoCoF model: `y = slope·x + intercept` (mHz/s), with the
/// intercept pinned at zero when `uses_intercept` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearDfdModel {
    /// mHz/s per MW.
    pub slope: f64,
    /// mHz/s.
    pub intercept: f64,
    pub uses_intercept: bool,
    pub input_kind: StepKind,
}

/// Neumaier-compensated summation.
fn csum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

fn paired<'a>(
    x: &'a StepSizes,
    y: &'a RocofSeries,
) -> Result<Vec<(f64, f64)>, LinModelError> {
    if x.hour_timestamps() != y.hour_timestamps() {
        return Err(LinModelError::Misaligned(
            "step sizes and rocof series cover different hours".into(),
        ));
    }
    Ok((0..x.len())
        .filter(|&i| x.valid()[i] && y.valid()[i] && x.delta()[i].is_finite() && y.rocof()[i].is_finite())
        .map(|i| (x.delta()[i], y.rocof()[i]))
        .collect())
}

/// Least-squares fit over the valid unmasked pairs.
///
/// Without an intercept this is `a = Σxy / Σx²`; with one, the centered
/// normal equations. All-equal x values (or all-zero without intercept)
/// are a rank error.
pub fn fit_least_squares(
    x: &StepSizes,
    y: &RocofSeries,
    with_intercept: bool,
    input_kind: StepKind,
) -> Result<LinearDfdModel, LinModelError> {
    let pairs = paired(x, y)?;
    let n = pairs.len();
    if n < 2 {
        return Err(LinModelError::TooFewPairs(n));
    }
    let nf = n as f64;
    let (slope, intercept) = if with_intercept {
        let mean_x = csum(pairs.iter().map(|p| p.0)) / nf;
        let mean_y = csum(pairs.iter().map(|p| p.1)) / nf;
        let sxx = csum(pairs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)));
        let sxy = csum(pairs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)));
        if sxx == 0.0 {
            return Err(LinModelError::Rank(
                "all x values are equal; intercept fit needs two distinct values".into(),
            ));
        }
        let a = sxy / sxx;
        (a, mean_y - a * mean_x)
    } else {
        let sxx = csum(pairs.iter().map(|p| p.0 * p.0));
        let sxy = csum(pairs.iter().map(|p| p.0 * p.1));
        if sxx == 0.0 {
            return Err(LinModelError::Rank("all x values are zero".into()));
        }
        (sxy / sxx, 0.0)
    };
    if !slope.is_finite() || !intercept.is_finite() {
        return Err(LinModelError::NonFinite);
    }
    Ok(LinearDfdModel {
        slope,
        intercept,
        uses_intercept: with_intercept,
        input_kind,
    })
}

/// Apply the model per hour; masked in, masked out.
pub fn predict(m: &LinearDfdModel, x: &StepSizes) -> RocofSeries {
    let mut rocof = Vec::with_capacity(x.len());
    let mut valid = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        if x.valid()[i] && x.delta()[i].is_finite() {
            rocof.push(m.slope * x.delta()[i] + m.intercept);
            valid.push(true);
        } else {
            rocof.push(f64::NAN);
            valid.push(false);
        }
    }
    RocofSeries::new(x.hour_timestamps().to_vec(), rocof, valid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hours(n: usize) -> Vec<i64> {
        (0..n as i64).map(|i| i * 3600).collect()
    }

    fn steps(values: &[f64]) -> StepSizes {
        StepSizes::new(hours(values.len()), values.to_vec(), vec![true; values.len()])
    }

    fn series(values: &[f64]) -> RocofSeries {
        RocofSeries::new(hours(values.len()), values.to_vec(), vec![true; values.len()])
    }

    #[test]
    fn exact_fit_through_origin() {
        let m = fit_least_squares(
            &steps(&[1.0, 2.0]),
            &series(&[2.0, 4.0]),
            false,
            StepKind::LoadStep,
        )
        .unwrap();
        assert!((m.slope - 2.0).abs() < 1e-14);
        assert_eq!(m.intercept, 0.0);
        assert!(!m.uses_intercept);
    }

    #[test]
    fn exact_fit_with_intercept() {
        let m = fit_least_squares(
            &steps(&[0.0, 1.0]),
            &series(&[1.0, 3.0]),
            true,
            StepKind::RefinedStep,
        )
        .unwrap();
        assert!((m.slope - 2.0).abs() < 1e-14);
        assert!((m.intercept - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rank_errors() {
        assert!(matches!(
            fit_least_squares(&steps(&[0.0, 0.0]), &series(&[1.0, 2.0]), false, StepKind::LoadStep),
            Err(LinModelError::Rank(_))
        ));
        assert!(matches!(
            fit_least_squares(&steps(&[5.0, 5.0]), &series(&[1.0, 2.0]), true, StepKind::LoadStep),
            Err(LinModelError::Rank(_))
        ));
    }

    #[test]
    fn masked_pairs_excluded() {
        let x = StepSizes::new(hours(3), vec![1.0, 99.0, 2.0], vec![true, false, true]);
        let y = series(&[2.0, 0.0, 4.0]);
        let m = fit_least_squares(&x, &y, false, StepKind::LoadStep).unwrap();
        assert!((m.slope - 2.0).abs() < 1e-14);
    }

    #[test]
    fn predict_masks_propagate() {
        let m = LinearDfdModel {
            slope: 0.5,
            intercept: -0.1,
            uses_intercept: true,
            input_kind: StepKind::RefinedStep,
        };
        let x = StepSizes::new(hours(3), vec![0.0, 1.0, f64::NAN], vec![true, true, false]);
        let p = predict(&m, &x);
        assert!((p.rocof()[0] + 0.1).abs() < 1e-15);
        assert!((p.rocof()[1] - 0.4).abs() < 1e-15);
        assert!(!p.valid()[2]);
        assert!(p.rocof()[2].is_nan());
    }

    #[test]
    fn zero_solar_collapse_identity() {
        // With zero solar the refined steps equal the load steps, so the
        // no-intercept refined fit reproduces the load-based fit.
        let x = steps(&[-3.0, 1.5, 2.0, -0.5, 4.0]);
        let y = series(&[-6.1, 3.2, 3.9, -1.2, 8.1]);
        let load = fit_least_squares(&x, &y, false, StepKind::LoadStep).unwrap();
        let refined_b0 = fit_least_squares(&x, &y, false, StepKind::RefinedStep).unwrap();
        assert_eq!(load.slope, refined_b0.slope);
        let pl = predict(&load, &x);
        let pr = predict(&refined_b0, &x);
        assert_eq!(pl.rocof(), pr.rocof());
    }

    #[test]
    fn misaligned_inputs_rejected() {
        let x = StepSizes::new(vec![0, 3600], vec![1.0, 2.0], vec![true, true]);
        let y = RocofSeries::new(vec![0, 7200], vec![1.0, 2.0], vec![true, true]);
        assert!(matches!(
            fit_least_squares(&x, &y, false, StepKind::LoadStep),
            Err(LinModelError::Misaligned(_))
        ));
    }

    #[test]
    fn json_shape() {
        let m = LinearDfdModel {
            slope: 0.002,
            intercept: -0.3,
            uses_intercept: true,
            input_kind: StepKind::RefinedStep,
        };
        let json = serde_json::to_string(&m).unwrap();
        assert!(json.contains("\"input_kind\":\"refined_step\""));
        let back: LinearDfdModel = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
    }
}
