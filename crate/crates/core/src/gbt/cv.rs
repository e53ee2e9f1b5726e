//! Seeded train/test splitting and cross-validated grid search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{fit, DataSet, GbtError, Hyperparams};
use crate::eval;
use crate::ingest::FeatureTable;
use crate::signal::RocofSeries;
use crate::time;

/// Row indices (into the feature table) of a train/test split.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Split the eligible rows (unmasked features, valid target) into train and
/// test. The pinned block — 24 consecutive hours starting at
/// `pinned_block` — goes entirely to the test set regardless of the seed;
/// the remaining rows split uniformly at random, with
/// `round(test_frac · remaining)` of them joining the test side.
pub fn train_test_split(
    table: &FeatureTable,
    targets: &RocofSeries,
    test_frac: f64,
    pinned_block: Option<i64>,
    seed: u64,
) -> Result<SplitIndices, GbtError> {
    if table.hour_timestamps() != targets.hour_timestamps() {
        return Err(GbtError::Misaligned(
            "feature table and targets cover different hours".into(),
        ));
    }
    if !(0.0..1.0).contains(&test_frac) {
        return Err(GbtError::Config(format!(
            "test_frac must be in [0, 1), got {test_frac}"
        )));
    }
    let eligible = |i: usize| {
        table.row_mask()[i] && targets.valid()[i] && targets.rocof()[i].is_finite()
    };
    let mut pinned = Vec::new();
    if let Some(block_start) = pinned_block {
        if !time::is_hour_aligned(block_start) {
            return Err(GbtError::Config(format!(
                "pinned block start {} is not hour-aligned",
                time::format_utc(block_start)
            )));
        }
        for k in 0..24 {
            let ts = block_start + k * time::HOUR_S;
            let idx = table
                .hour_timestamps()
                .binary_search(&ts)
                .map_err(|_| GbtError::Config(format!(
                    "pinned hour {} missing from the table",
                    time::format_utc(ts)
                )))?;
            if !eligible(idx) {
                return Err(GbtError::Config(format!(
                    "pinned hour {} is masked or has no valid target",
                    time::format_utc(ts)
                )));
            }
            pinned.push(idx);
        }
    }
    let mut rest: Vec<usize> = (0..table.n_rows())
        .filter(|&i| eligible(i) && !pinned.contains(&i))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rest.shuffle(&mut rng);
    let n_test_rest = (test_frac * rest.len() as f64).round() as usize;
    let mut test: Vec<usize> = pinned;
    test.extend_from_slice(&rest[..n_test_rest]);
    let mut train: Vec<usize> = rest[n_test_rest..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok(SplitIndices { train, test })
}

/// Mean validation R² of one grid point across the folds.
#[derive(Debug, Clone, PartialEq)]
pub struct CvScore {
    pub hp: Hyperparams,
    pub fold_r2: Vec<f64>,
    pub mean_r2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSearchResult {
    pub best: Hyperparams,
    pub scores: Vec<CvScore>,
}

/// K-fold cross-validated grid search over the training set.
///
/// Folds are seeded once and identical for every grid point; the best point
/// is the argmax of the mean validation R², ties resolving to the first
/// point in grid order. Grid points evaluate in parallel.
pub fn grid_search_cv(
    train: &DataSet,
    grid: &[Hyperparams],
    k: usize,
    seed: u64,
) -> Result<GridSearchResult, GbtError> {
    if grid.is_empty() {
        return Err(GbtError::Config("empty hyperparameter grid".into()));
    }
    if k < 2 {
        return Err(GbtError::Config(format!("need k >= 2 folds, got {k}")));
    }
    let n = train.n_rows();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let base = n / k;
    let extra = n % k;
    let mut folds: Vec<Vec<usize>> = Vec::with_capacity(k);
    let mut at = 0;
    for f in 0..k {
        let size = base + usize::from(f < extra);
        if size < 2 {
            return Err(GbtError::FoldTooSmall { fold: f, size });
        }
        folds.push(order[at..at + size].to_vec());
        at += size;
    }

    let fold_masks: Vec<Vec<bool>> = folds
        .iter()
        .map(|fold| {
            let mut mask = vec![false; n];
            for &i in fold {
                mask[i] = true;
            }
            mask
        })
        .collect();

    let scores: Vec<CvScore> = grid
        .par_iter()
        .map(|hp| -> Result<CvScore, GbtError> {
            hp.validate()?;
            let mut fold_r2 = Vec::with_capacity(k);
            for (fold, mask) in folds.iter().zip(&fold_masks) {
                let train_idx: Vec<usize> = (0..n).filter(|&i| !mask[i]).collect();
                let model = fit(&train.subset(&train_idx), hp)?;
                let truth: Vec<f64> = fold.iter().map(|&i| train.targets()[i]).collect();
                let preds: Vec<f64> = fold
                    .iter()
                    .map(|&i| model.predict_row(&train.row(i)))
                    .collect::<Result<_, _>>()?;
                fold_r2.push(eval::r2_score_values(&truth, &preds)?);
            }
            let mean_r2 = fold_r2.iter().sum::<f64>() / k as f64;
            Ok(CvScore {
                hp: hp.clone(),
                fold_r2,
                mean_r2,
            })
        })
        .collect::<Result<_, _>>()?;

    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if s.mean_r2 > scores[best].mean_r2 {
            best = i;
        }
    }
    Ok(GridSearchResult {
        best: scores[best].hp.clone(),
        scores,
    })
}
