//! Exact SHAP attributions for tree ensembles.
//!
//! [`tree_shap`] computes exact Shapley values in polynomial time for the
//! path-dependent value function: the cover-weighted conditional
//! expectation of tree traversal, where covers are training hessian
//! weights. [`brute_force_shap`] evaluates the same value function over
//! every feature subset (2^m enumeration) and applies the Shapley formula
//! directly; it exists purely to verify the fast path and is capped at 12
//! features.
//!
//! The baseline is the expected ensemble output `v(∅)`, so local accuracy
//! reads `base_value + Σφ = prediction` per row. Daily aggregation averages
//! the signed attributions per hour-of-day over the explained rows, which
//! keeps that identity exact at the profile level too.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::gbt::{TreeEnsemble, TreeNode};
use crate::time;

#[derive(Debug, Error)]
pub enum ShapError {
    #[error("model integrity: {0}")]
    ModelIntegrity(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("brute force capped at {cap} features, ensemble has {got}")]
    Capacity { cap: usize, got: usize },
}

/// Per-sample, per-feature attributions sharing one expected-value baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapMatrix {
    feature_names: Vec<String>,
    base_value: f64,
    rows: Vec<Vec<f64>>,
}

impl ShapMatrix {
    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn base_value(&self) -> f64 {
        self.base_value
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    /// `base_value + Σφ` of row `i` — the model prediction it explains.
    pub fn reconstructed_prediction(&self, i: usize) -> f64 {
        self.base_value + self.rows[i].iter().sum::<f64>()
    }

    pub fn feature_index(&self, name: &str) -> Option<usize> {
        self.feature_names.iter().position(|n| n == name)
    }
}

/// Mean attributions, prediction and observed RoCoF for one hour of day.
#[derive(Debug, Clone, PartialEq)]
pub struct HourAggregate {
    pub mean_attribution: Vec<f64>,
    pub mean_prediction: f64,
    pub mean_observed: f64,
    pub count: usize,
}

/// Daily aggregated SHAP profile: one optional aggregate per hour of day.
#[derive(Debug, Clone, PartialEq)]
pub struct DailyShapProfile {
    pub feature_names: Vec<String>,
    pub base_value: f64,
    pub hours: Vec<Option<HourAggregate>>,
}

/// Cover-weighted expected output of one tree.
fn expectation(node: &TreeNode) -> f64 {
    match node {
        TreeNode::Leaf { value, .. } => *value,
        TreeNode::Split { left, right, .. } => {
            let (cl, cr) = (left.cover(), right.cover());
            (cl * expectation(left) + cr * expectation(right)) / (cl + cr)
        }
    }
}

/// Expected ensemble output `v(∅)`: the SHAP baseline.
pub fn expected_value(ensemble: &TreeEnsemble) -> f64 {
    ensemble.base_score
        + ensemble.shrinkage * ensemble.trees.iter().map(expectation).sum::<f64>()
}

fn check_covers(ensemble: &TreeEnsemble) -> Result<(), ShapError> {
    for (t, tree) in ensemble.trees.iter().enumerate() {
        let mut bad = false;
        tree.visit(&mut |node| {
            if !node.cover().is_finite() || node.cover() <= 0.0 {
                bad = true;
            }
        });
        if bad {
            return Err(ShapError::ModelIntegrity(format!(
                "tree {t} carries a zero or negative cover"
            )));
        }
    }
    Ok(())
}

/// One step of the feature path threaded through the recursion.
#[derive(Debug, Clone, Copy)]
struct PathItem {
    feature: Option<usize>,
    zero_fraction: f64,
    one_fraction: f64,
    pweight: f64,
}

fn extend_path(path: &mut Vec<PathItem>, zero_fraction: f64, one_fraction: f64, feature: Option<usize>) {
    path.push(PathItem {
        feature,
        zero_fraction,
        one_fraction,
        pweight: if path.is_empty() { 1.0 } else { 0.0 },
    });
    let d = path.len() - 1;
    if d == 0 {
        return;
    }
    for i in (0..d).rev() {
        path[i + 1].pweight +=
            one_fraction * path[i].pweight * (i + 1) as f64 / (d + 1) as f64;
        path[i].pweight = zero_fraction * path[i].pweight * (d - i) as f64 / (d + 1) as f64;
    }
}

fn unwind_path(path: &mut Vec<PathItem>, index: usize) {
    let d = path.len() - 1;
    let one_fraction = path[index].one_fraction;
    let zero_fraction = path[index].zero_fraction;
    let mut next_one_portion = path[d].pweight;
    for i in (0..d).rev() {
        if one_fraction != 0.0 {
            let tmp = path[i].pweight;
            path[i].pweight = next_one_portion * (d + 1) as f64 / ((i + 1) as f64 * one_fraction);
            next_one_portion =
                tmp - path[i].pweight * zero_fraction * (d - i) as f64 / (d + 1) as f64;
        } else {
            path[i].pweight = path[i].pweight * (d + 1) as f64 / (zero_fraction * (d - i) as f64);
        }
    }
    for i in index..d {
        path[i].feature = path[i + 1].feature;
        path[i].zero_fraction = path[i + 1].zero_fraction;
        path[i].one_fraction = path[i + 1].one_fraction;
    }
    path.pop();
}

fn unwound_path_sum(path: &[PathItem], index: usize) -> f64 {
    let d = path.len() - 1;
    let one_fraction = path[index].one_fraction;
    let zero_fraction = path[index].zero_fraction;
    let mut next_one_portion = path[d].pweight;
    let mut total = 0.0;
    if one_fraction != 0.0 {
        for i in (0..d).rev() {
            let tmp = next_one_portion / ((i + 1) as f64 * one_fraction);
            total += tmp;
            next_one_portion = path[i].pweight - tmp * zero_fraction * (d - i) as f64;
        }
    } else {
        for i in (0..d).rev() {
            total += path[i].pweight / (zero_fraction * (d - i) as f64);
        }
    }
    total * (d + 1) as f64
}

fn tree_shap_recurse(
    node: &TreeNode,
    row: &[f64],
    mut path: Vec<PathItem>,
    parent_zero_fraction: f64,
    parent_one_fraction: f64,
    parent_feature: Option<usize>,
    phi: &mut [f64],
) {
    extend_path(&mut path, parent_zero_fraction, parent_one_fraction, parent_feature);
    match node {
        TreeNode::Leaf { value, .. } => {
            for i in 1..path.len() {
                let w = unwound_path_sum(&path, i);
                let item = path[i];
                phi[item.feature.expect("interior path items carry features")] +=
                    w * (item.one_fraction - item.zero_fraction) * value;
            }
        }
        TreeNode::Split {
            feature,
            threshold,
            default_left,
            cover,
            left,
            right,
        } => {
            let v = row[*feature];
            let go_left = if v.is_nan() { *default_left } else { v < *threshold };
            let (hot, cold) = if go_left {
                (left.as_ref(), right.as_ref())
            } else {
                (right.as_ref(), left.as_ref())
            };
            let hot_zero_fraction = hot.cover() / cover;
            let cold_zero_fraction = cold.cover() / cover;
            let mut incoming_zero_fraction = 1.0;
            let mut incoming_one_fraction = 1.0;
            // A feature that already split above contributes its previous
            // fractions and leaves the path before re-entering.
            if let Some(k) = (1..path.len()).find(|&i| path[i].feature == Some(*feature)) {
                incoming_zero_fraction = path[k].zero_fraction;
                incoming_one_fraction = path[k].one_fraction;
                unwind_path(&mut path, k);
            }
            tree_shap_recurse(
                hot,
                row,
                path.clone(),
                hot_zero_fraction * incoming_zero_fraction,
                incoming_one_fraction,
                Some(*feature),
                phi,
            );
            tree_shap_recurse(
                cold,
                row,
                path,
                cold_zero_fraction * incoming_zero_fraction,
                0.0,
                Some(*feature),
                phi,
            );
        }
    }
}

/// Exact per-feature attributions for one row, plus the shared baseline.
///
/// Polynomial-time Shapley values of the cover-weighted tree traversal
/// game; `base_value + Σφ` equals the ensemble prediction for the row.
pub fn tree_shap(ensemble: &TreeEnsemble, row: &[f64]) -> Result<(Vec<f64>, f64), ShapError> {
    if row.len() != ensemble.feature_names.len() {
        return Err(ShapError::Schema(format!(
            "row has {} features, model expects {}",
            row.len(),
            ensemble.feature_names.len()
        )));
    }
    check_covers(ensemble)?;
    let mut phi = vec![0.0; row.len()];
    for tree in &ensemble.trees {
        let mut tree_phi = vec![0.0; row.len()];
        tree_shap_recurse(tree, row, Vec::new(), 1.0, 1.0, None, &mut tree_phi);
        for (p, t) in phi.iter_mut().zip(&tree_phi) {
            *p += ensemble.shrinkage * t;
        }
    }
    Ok((phi, expected_value(ensemble)))
}

/// Cap on the exponential subset enumeration.
pub const BRUTE_FORCE_FEATURE_CAP: usize = 12;

/// Value of the traversal game for the feature coalition `mask`: features
/// in the coalition follow the row, the rest average both branches by
/// cover fraction.
fn coalition_value(node: &TreeNode, row: &[f64], mask: u32) -> f64 {
    match node {
        TreeNode::Leaf { value, .. } => *value,
        TreeNode::Split {
            feature,
            threshold,
            default_left,
            left,
            right,
            ..
        } => {
            if mask & (1 << feature) != 0 {
                let v = row[*feature];
                let go_left = if v.is_nan() { *default_left } else { v < *threshold };
                if go_left {
                    coalition_value(left, row, mask)
                } else {
                    coalition_value(right, row, mask)
                }
            } else {
                let (cl, cr) = (left.cover(), right.cover());
                (cl * coalition_value(left, row, mask) + cr * coalition_value(right, row, mask))
                    / (cl + cr)
            }
        }
    }
}

/// Exponential-time Shapley values over all feature subsets; the
/// verification oracle for [`tree_shap`].
pub fn brute_force_shap(ensemble: &TreeEnsemble, row: &[f64]) -> Result<Vec<f64>, ShapError> {
    let m = ensemble.feature_names.len();
    if m > BRUTE_FORCE_FEATURE_CAP {
        return Err(ShapError::Capacity {
            cap: BRUTE_FORCE_FEATURE_CAP,
            got: m,
        });
    }
    if row.len() != m {
        return Err(ShapError::Schema(format!(
            "row has {} features, model expects {m}",
            row.len()
        )));
    }
    check_covers(ensemble)?;
    // v(S) for every subset, memoized once.
    let n_masks = 1usize << m;
    let mut v = vec![0.0f64; n_masks];
    for (mask, slot) in v.iter_mut().enumerate() {
        let sum: f64 = ensemble
            .trees
            .iter()
            .map(|t| coalition_value(t, row, mask as u32))
            .sum();
        *slot = ensemble.base_score + ensemble.shrinkage * sum;
    }
    // Shapley weight |S|! (m - |S| - 1)! / m! by subset size.
    let factorial = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
    let weights: Vec<f64> = (0..m)
        .map(|s| factorial(s) * factorial(m - s - 1) / factorial(m))
        .collect();
    let mut phi = vec![0.0; m];
    for (f, slot) in phi.iter_mut().enumerate() {
        let bit = 1usize << f;
        for mask in 0..n_masks {
            if mask & bit == 0 {
                let s = (mask as u32).count_ones() as usize;
                *slot += weights[s] * (v[mask | bit] - v[mask]);
            }
        }
    }
    Ok(phi)
}

/// Row-parallel [`tree_shap`] over a batch, assembled in input order.
pub fn shap_matrix(ensemble: &TreeEnsemble, rows: &[Vec<f64>]) -> Result<ShapMatrix, ShapError> {
    check_covers(ensemble)?;
    let base_value = expected_value(ensemble);
    let attributions: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|row| tree_shap(ensemble, row).map(|(phi, _)| phi))
        .collect::<Result<_, _>>()?;
    Ok(ShapMatrix {
        feature_names: ensemble.feature_names.clone(),
        base_value,
        rows: attributions,
    })
}

/// Per hour-of-day arithmetic means of attributions, predictions and
/// observed values over the explained rows. Hours with no rows stay empty.
pub fn daily_aggregate(
    matrix: &ShapMatrix,
    hour_of_day: &[u32],
    observed: &[f64],
) -> Result<DailyShapProfile, ShapError> {
    if hour_of_day.len() != matrix.n_rows() || observed.len() != matrix.n_rows() {
        return Err(ShapError::Schema(
            "hour labels and observed values must cover every row".into(),
        ));
    }
    if let Some(h) = hour_of_day.iter().find(|h| **h > 23) {
        return Err(ShapError::Schema(format!("hour of day {h} out of range")));
    }
    let nf = matrix.feature_names.len();
    let mut sums = vec![vec![0.0f64; nf]; 24];
    let mut pred_sum = [0.0f64; 24];
    let mut obs_sum = [0.0f64; 24];
    let mut count = [0usize; 24];
    for (i, (&h, &obs)) in hour_of_day.iter().zip(observed).enumerate() {
        let h = h as usize;
        for (f, phi) in matrix.rows[i].iter().enumerate() {
            sums[h][f] += phi;
        }
        pred_sum[h] += matrix.reconstructed_prediction(i);
        obs_sum[h] += obs;
        count[h] += 1;
    }
    let hours = (0..24)
        .map(|h| {
            (count[h] > 0).then(|| {
                let n = count[h] as f64;
                HourAggregate {
                    mean_attribution: sums[h].iter().map(|s| s / n).collect(),
                    mean_prediction: pred_sum[h] / n,
                    mean_observed: obs_sum[h] / n,
                    count: count[h],
                }
            })
        })
        .collect();
    Ok(DailyShapProfile {
        feature_names: matrix.feature_names.clone(),
        base_value: matrix.base_value,
        hours,
    })
}

/// Per-row (feature value, attribution) pairs for dependency scatter plots.
pub fn dependency_pairs(
    matrix: &ShapMatrix,
    feature: &str,
    feature_values: &[f64],
) -> Result<Vec<(f64, f64)>, ShapError> {
    let f = matrix
        .feature_index(feature)
        .ok_or_else(|| ShapError::Schema(format!("unknown feature {feature:?}")))?;
    if feature_values.len() != matrix.n_rows() {
        return Err(ShapError::Schema(
            "feature values must cover every row".into(),
        ));
    }
    Ok(feature_values
        .iter()
        .zip(&matrix.rows)
        .map(|(&v, phi)| (v, phi[f]))
        .collect())
}

/// Write a SHAP matrix as CSV: hour, one `phi_*` column per feature, the
/// baseline and the reconstructed prediction.
pub fn write_shap_matrix_csv<W: Write>(
    matrix: &ShapMatrix,
    hour_timestamps: &[i64],
    writer: W,
) -> Result<(), ShapError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["hour_utc".to_string()];
    header.extend(matrix.feature_names.iter().map(|n| format!("phi_{n}_mhz_per_s")));
    header.push("base_mhz_per_s".into());
    header.push("prediction_mhz_per_s".into());
    w.write_record(&header)
        .map_err(|e| ShapError::Schema(e.to_string()))?;
    for (i, phi) in matrix.rows.iter().enumerate() {
        let mut record = vec![time::format_utc(hour_timestamps[i])];
        record.extend(phi.iter().map(|v| v.to_string()));
        record.push(matrix.base_value.to_string());
        record.push(matrix.reconstructed_prediction(i).to_string());
        w.write_record(&record)
            .map_err(|e| ShapError::Schema(e.to_string()))?;
    }
    w.flush().map_err(|e| ShapError::Schema(e.to_string()))?;
    Ok(())
}

pub fn write_shap_matrix_csv_path(
    matrix: &ShapMatrix,
    hour_timestamps: &[i64],
    path: &Path,
) -> Result<(), ShapError> {
    let file = std::fs::File::create(path).map_err(|e| ShapError::Schema(e.to_string()))?;
    write_shap_matrix_csv(matrix, hour_timestamps, file)
}

/// Write a daily SHAP profile as a 24-row CSV.
pub fn write_daily_shap_csv<W: Write>(
    profile: &DailyShapProfile,
    writer: W,
) -> Result<(), ShapError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["hour_of_day".to_string()];
    header.extend(
        profile
            .feature_names
            .iter()
            .map(|n| format!("mean_phi_{n}_mhz_per_s")),
    );
    header.extend([
        "base_mhz_per_s".into(),
        "mean_prediction_mhz_per_s".into(),
        "mean_observed_mhz_per_s".into(),
        "count".into(),
    ]);
    w.write_record(&header)
        .map_err(|e| ShapError::Schema(e.to_string()))?;
    for (h, agg) in profile.hours.iter().enumerate() {
        let mut record = vec![h.to_string()];
        match agg {
            Some(a) => {
                record.extend(a.mean_attribution.iter().map(|v| v.to_string()));
                record.push(profile.base_value.to_string());
                record.push(a.mean_prediction.to_string());
                record.push(a.mean_observed.to_string());
                record.push(a.count.to_string());
            }
            None => {
                record.extend(std::iter::repeat_n(String::new(), profile.feature_names.len() + 3));
                record.push("0".into());
            }
        }
        w.write_record(&record)
            .map_err(|e| ShapError::Schema(e.to_string()))?;
    }
    w.flush().map_err(|e| ShapError::Schema(e.to_string()))?;
    Ok(())
}

pub fn write_daily_shap_csv_path(profile: &DailyShapProfile, path: &Path) -> Result<(), ShapError> {
    let file = std::fs::File::create(path).map_err(|e| ShapError::Schema(e.to_string()))?;
    write_daily_shap_csv(profile, file)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Stump on feature 0 at 0.5, leaves 10/20, equal covers.
    fn stump_10_20(n_features: usize) -> TreeEnsemble {
        TreeEnsemble {
            trees: vec![TreeNode::Split {
                feature: 0,
                threshold: 0.5,
                default_left: true,
                cover: 100.0,
                left: Box::new(TreeNode::Leaf {
                    value: 10.0,
                    cover: 50.0,
                }),
                right: Box::new(TreeNode::Leaf {
                    value: 20.0,
                    cover: 50.0,
                }),
            }],
            base_score: 0.0,
            shrinkage: 1.0,
            feature_names: (0..n_features).map(|i| format!("f{i}")).collect(),
        }
    }

    #[test]
    fn stump_attribution_by_hand() {
        // Base 15; row below the threshold reaches the 10-leaf, so the
        // split feature carries -5 and everything else exactly 0.
        let e = stump_10_20(3);
        let row = vec![0.3, 7.0, -2.0];
        let (phi, base) = tree_shap(&e, &row).unwrap();
        assert!((base - 15.0).abs() < 1e-12);
        assert!((phi[0] + 5.0).abs() < 1e-12);
        assert_eq!(phi[1], 0.0);
        assert_eq!(phi[2], 0.0);
        let bf = brute_force_shap(&e, &row).unwrap();
        assert!((bf[0] + 5.0).abs() < 1e-12);
        assert_eq!(bf[1], 0.0);

        let row_high = vec![0.7, 7.0, -2.0];
        let (phi_high, _) = tree_shap(&e, &row_high).unwrap();
        assert!((phi_high[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn local_accuracy_on_stump() {
        let e = stump_10_20(2);
        for row in [vec![0.0, 0.0], vec![1.0, 5.0], vec![f64::NAN, 1.0]] {
            let (phi, base) = tree_shap(&e, &row).unwrap();
            let pred = e.predict_row(&row).unwrap();
            assert!((base + phi.iter().sum::<f64>() - pred).abs() < 1e-12);
        }
    }

    #[test]
    fn empty_ensemble_brute_force_is_zero() {
        let e = TreeEnsemble {
            trees: vec![],
            base_score: 1.5,
            shrinkage: 0.3,
            feature_names: vec!["a".into(), "b".into()],
        };
        let phi = brute_force_shap(&e, &[0.0, 0.0]).unwrap();
        assert_eq!(phi, vec![0.0, 0.0]);
        let (fast, base) = tree_shap(&e, &[0.0, 0.0]).unwrap();
        assert_eq!(fast, vec![0.0, 0.0]);
        assert_eq!(base, 1.5);
    }

    #[test]
    fn shapley_efficiency_axiom() {
        let e = stump_10_20(4);
        let row = vec![0.9, 1.0, 2.0, 3.0];
        let phi = brute_force_shap(&e, &row).unwrap();
        let v_empty = expected_value(&e);
        let pred = e.predict_row(&row).unwrap();
        assert!((phi.iter().sum::<f64>() - (pred - v_empty)).abs() < 1e-12);
    }

    #[test]
    fn capacity_error_beyond_cap() {
        let e = stump_10_20(13);
        let row = vec![0.0; 13];
        assert!(matches!(
            brute_force_shap(&e, &row),
            Err(ShapError::Capacity { .. })
        ));
    }

    #[test]
    fn zero_cover_is_model_integrity_error() {
        let mut e = stump_10_20(1);
        if let TreeNode::Split { left, .. } = &mut e.trees[0] {
            if let TreeNode::Leaf { cover, .. } = left.as_mut() {
                *cover = 0.0;
            }
        }
        assert!(matches!(
            tree_shap(&e, &[0.3]),
            Err(ShapError::ModelIntegrity(_))
        ));
    }

    #[test]
    fn symmetric_duplicate_features_share_credit() {
        // Two identical stumps, one on each feature: literal symmetry, so a
        // symmetric row must split the credit equally.
        let tree = |feature: usize| TreeNode::Split {
            feature,
            threshold: 0.5,
            default_left: true,
            cover: 10.0,
            left: Box::new(TreeNode::Leaf { value: -1.0, cover: 5.0 }),
            right: Box::new(TreeNode::Leaf { value: 1.0, cover: 5.0 }),
        };
        let e = TreeEnsemble {
            trees: vec![tree(0), tree(1)],
            base_score: 0.0,
            shrinkage: 1.0,
            feature_names: vec!["a".into(), "b".into()],
        };
        let (phi, _) = tree_shap(&e, &[0.9, 0.9]).unwrap();
        assert!((phi[0] - phi[1]).abs() < 1e-12);
        let bf = brute_force_shap(&e, &[0.9, 0.9]).unwrap();
        assert!((bf[0] - bf[1]).abs() < 1e-12);
    }

    #[test]
    fn matrix_constant_model_is_all_zero() {
        let e = TreeEnsemble {
            trees: vec![TreeNode::Leaf {
                value: 3.0,
                cover: 10.0,
            }],
            base_score: 1.0,
            shrinkage: 0.5,
            feature_names: vec!["a".into()],
        };
        let rows = vec![vec![1.0], vec![2.0], vec![3.0]];
        let m = shap_matrix(&e, &rows).unwrap();
        assert_eq!(m.n_rows(), 3);
        assert!(m.rows().iter().flatten().all(|p| *p == 0.0));
        assert!((m.base_value() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn single_row_matrix() {
        let e = stump_10_20(2);
        let m = shap_matrix(&e, &[vec![0.1, 0.0]]).unwrap();
        assert_eq!(m.n_rows(), 1);
        assert!((m.reconstructed_prediction(0) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn daily_aggregate_single_hour_and_additivity() {
        let e = stump_10_20(2);
        let rows = vec![vec![0.1, 0.0], vec![0.9, 1.0], vec![0.2, -1.0]];
        let m = shap_matrix(&e, &rows).unwrap();
        let profile = daily_aggregate(&m, &[7, 7, 7], &[9.5, 21.0, 10.1]).unwrap();
        for (h, agg) in profile.hours.iter().enumerate() {
            if h == 7 {
                let agg = agg.as_ref().unwrap();
                assert_eq!(agg.count, 3);
                let sum: f64 = agg.mean_attribution.iter().sum();
                assert!((profile.base_value + sum - agg.mean_prediction).abs() < 1e-9);
            } else {
                assert!(agg.is_none());
            }
        }
    }

    #[test]
    fn daily_aggregate_rejects_bad_labels() {
        let e = stump_10_20(1);
        let m = shap_matrix(&e, &[vec![0.1]]).unwrap();
        assert!(daily_aggregate(&m, &[24], &[0.0]).is_err());
        assert!(daily_aggregate(&m, &[1, 2], &[0.0]).is_err());
    }

    #[test]
    fn dependency_pairs_shapes() {
        let e = stump_10_20(2);
        let rows = vec![vec![0.1, 5.0], vec![0.9, 6.0], vec![0.3, 7.0]];
        let m = shap_matrix(&e, &rows).unwrap();
        let values: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        let pairs = dependency_pairs(&m, "f0", &values).unwrap();
        assert_eq!(pairs.len(), 3);
        // The stump forces exactly two attribution levels.
        let mut levels: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        levels.sort_by(f64::total_cmp);
        levels.dedup();
        assert_eq!(levels.len(), 2);
        // Dummy feature: zero attribution on every row.
        let dummy = dependency_pairs(&m, "f1", &values).unwrap();
        assert!(dummy.iter().all(|p| p.1 == 0.0));
        assert!(dependency_pairs(&m, "nope", &values).is_err());
    }

    #[test]
    fn depth_two_tree_matches_brute_force() {
        // Depth-2 tree reusing feature 0 on a sub-path: exercises the
        // duplicated-feature unwind.
        let tree = TreeNode::Split {
            feature: 0,
            threshold: 0.0,
            default_left: false,
            cover: 12.0,
            left: Box::new(TreeNode::Split {
                feature: 1,
                threshold: 1.0,
                default_left: true,
                cover: 7.0,
                left: Box::new(TreeNode::Leaf { value: 2.0, cover: 3.0 }),
                right: Box::new(TreeNode::Leaf { value: -4.0, cover: 4.0 }),
            }),
            right: Box::new(TreeNode::Split {
                feature: 0,
                threshold: 2.5,
                default_left: true,
                cover: 5.0,
                left: Box::new(TreeNode::Leaf { value: 1.0, cover: 2.0 }),
                right: Box::new(TreeNode::Leaf { value: 7.0, cover: 3.0 }),
            }),
        };
        let e = TreeEnsemble {
            trees: vec![tree],
            base_score: 0.25,
            shrinkage: 0.6,
            feature_names: vec!["a".into(), "b".into()],
        };
        for row in [
            vec![-1.0, 0.5],
            vec![-1.0, 2.0],
            vec![1.0, 0.0],
            vec![3.0, 0.0],
            vec![f64::NAN, 2.0],
        ] {
            let (fast, base) = tree_shap(&e, &row).unwrap();
            let slow = brute_force_shap(&e, &row).unwrap();
            for (f, s) in fast.iter().zip(&slow) {
                assert!((f - s).abs() < 1e-12, "row {row:?}: {fast:?} vs {slow:?}");
            }
            let pred = e.predict_row(&row).unwrap();
            assert!((base + fast.iter().sum::<f64>() - pred).abs() < 1e-12);
        }
    }
}
