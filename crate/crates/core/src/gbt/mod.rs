//! Gradient tree boosting for hourly RoCoF regression.
//!
//! A from-scratch boosted-trees regressor with the second-order (Newton)
//! squared-error formulation: each round fits one regression tree to the
//! current gradients and hessians by exact greedy split search over sorted
//! unique feature values, and leaves carry `-Σg / (Σh + λ)`. Node covers
//! are hessian sums, which makes the ensemble directly explainable by the
//! tree SHAP algorithm in [`crate::shap`].
//!
//! Prediction is `base_score + shrinkage · Σ tree outputs`; leaf values are
//! stored unscaled. Everything is deterministic given the seed, including
//! the parallel split search (candidates reduce under a total order).

mod cv;
mod train;

pub use cv::{grid_search_cv, train_test_split, CvScore, GridSearchResult, SplitIndices};
pub use train::fit;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::FeatureTable;
use crate::signal::RocofSeries;

#[derive(Debug, Error)]
pub enum GbtError {
    #[error("training set too small: need at least {need} rows, got {got}")]
    TooFewRows { need: usize, got: usize },
    #[error("targets must be finite (row {0})")]
    NonFiniteTarget(usize),
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("fold {fold} has {size} rows; folds need at least 2")]
    FoldTooSmall { fold: usize, size: usize },
    #[error("inputs are not aligned: {0}")]
    Misaligned(String),
    #[error("score error: {0}")]
    Score(#[from] crate::eval::EvalError),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// One node of a regression tree. Split nodes route a row left when its
/// feature value is strictly below the threshold; NaN routes to the learned
/// default side. `cover` is the training hessian weight through the node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        default_left: bool,
        cover: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
        cover: f64,
    },
}

impl TreeNode {
    pub fn is_leaf(&self) -> bool {
        matches!(self, TreeNode::Leaf { .. })
    }

    pub fn cover(&self) -> f64 {
        match self {
            TreeNode::Split { cover, .. } | TreeNode::Leaf { cover, .. } => *cover,
        }
    }

    /// Leaf value reached by threshold routing.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value, .. } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    default_left,
                    left,
                    right,
                    ..
                } => {
                    let v = row[*feature];
                    let go_left = if v.is_nan() { *default_left } else { v < *threshold };
                    node = if go_left { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
        }
    }

    /// Visit every node, parents before children.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        f(self);
        if let TreeNode::Split { left, right, .. } = self {
            left.visit(f);
            right.visit(f);
        }
    }
}

/// Boosted regression trees plus base score and shrinkage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub trees: Vec<TreeNode>,
    /// mHz/s added to every prediction (the training target mean).
    pub base_score: f64,
    /// Learning rate applied to every tree output, in (0, 1].
    pub shrinkage: f64,
    pub feature_names: Vec<String>,
}

impl TreeEnsemble {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// `base_score + shrinkage · Σ tree outputs` for one row.
    pub fn predict_row(&self, row: &[f64]) -> Result<f64, GbtError> {
        if row.len() != self.feature_names.len() {
            return Err(GbtError::Schema(format!(
                "row has {} features, model expects {}",
                row.len(),
                self.feature_names.len()
            )));
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict(row)).sum();
        Ok(self.base_score + self.shrinkage * sum)
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>, GbtError> {
        rows.iter().map(|r| self.predict_row(r)).collect()
    }

    /// Structural checks: feature ids in range, finite thresholds and leaf
    /// values, positive covers, children covers summing to the parent.
    pub fn validate(&self) -> Result<(), GbtError> {
        for (t, tree) in self.trees.iter().enumerate() {
            let mut err = None;
            tree.visit(&mut |node| {
                if err.is_some() {
                    return;
                }
                match node {
                    TreeNode::Leaf { value, cover } => {
                        if !value.is_finite() {
                            err = Some(format!("tree {t}: non-finite leaf value"));
                        } else if !cover.is_finite() || *cover <= 0.0 {
                            err = Some(format!("tree {t}: non-positive leaf cover"));
                        }
                    }
                    TreeNode::Split {
                        feature,
                        threshold,
                        cover,
                        left,
                        right,
                        ..
                    } => {
                        if *feature >= self.feature_names.len() {
                            err = Some(format!("tree {t}: feature id {feature} out of range"));
                        } else if !threshold.is_finite() {
                            err = Some(format!("tree {t}: non-finite threshold"));
                        } else if !cover.is_finite() || *cover <= 0.0 {
                            err = Some(format!("tree {t}: non-positive cover"));
                        } else {
                            let child_sum = left.cover() + right.cover();
                            if (child_sum - cover).abs() > 1e-6 * cover.abs().max(1.0) {
                                err = Some(format!(
                                    "tree {t}: children covers {child_sum} do not sum to parent {cover}"
                                ));
                            }
                        }
                    }
                }
            });
            if let Some(msg) = err {
                return Err(GbtError::InvalidModel(msg));
            }
        }
        if !self.shrinkage.is_finite() || self.shrinkage <= 0.0 || self.shrinkage > 1.0 {
            return Err(GbtError::InvalidModel("shrinkage outside (0, 1]".into()));
        }
        if !self.base_score.is_finite() {
            return Err(GbtError::InvalidModel("non-finite base score".into()));
        }
        Ok(())
    }
}

/// Boosting hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub min_child_weight: f64,
    pub l2_leaf_penalty: f64,
    pub row_subsample: f64,
    pub rng_seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: 3,
            learning_rate: 0.1,
            min_child_weight: 1.0,
            l2_leaf_penalty: 1.0,
            row_subsample: 1.0,
            rng_seed: 0,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<(), GbtError> {
        if self.n_trees < 1 {
            return Err(GbtError::InvalidHyperparams("n_trees must be >= 1".into()));
        }
        if self.max_depth < 1 {
            return Err(GbtError::InvalidHyperparams("max_depth must be >= 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.learning_rate > 1.0 {
            return Err(GbtError::InvalidHyperparams(
                "learning_rate must be in (0, 1]".into(),
            ));
        }
        if self.min_child_weight.is_nan()
            || self.min_child_weight < 0.0
            || self.l2_leaf_penalty.is_nan()
            || self.l2_leaf_penalty < 0.0
        {
            return Err(GbtError::InvalidHyperparams("penalties must be >= 0".into()));
        }
        if self.row_subsample.is_nan() || self.row_subsample <= 0.0 || self.row_subsample > 1.0 {
            return Err(GbtError::InvalidHyperparams(
                "row_subsample must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

/// A small search grid for desk-scale runs: 4 points.
pub fn small_grid(rng_seed: u64) -> Vec<Hyperparams> {
    let mut grid = Vec::new();
    for &max_depth in &[2, 4] {
        for &learning_rate in &[0.1, 0.3] {
            grid.push(Hyperparams {
                n_trees: 50,
                max_depth,
                learning_rate,
                min_child_weight: 1.0,
                l2_leaf_penalty: 1.0,
                row_subsample: 1.0,
                rng_seed,
            });
        }
    }
    grid
}

/// The default full search grid: depth {3,5,7} × lr {0.05,0.1,0.3} ×
/// trees {100,300} × min child weight {1,10} × l2 {0,1}, 72 points.
pub fn full_grid(rng_seed: u64) -> Vec<Hyperparams> {
    let mut grid = Vec::new();
    for &max_depth in &[3, 5, 7] {
        for &learning_rate in &[0.05, 0.1, 0.3] {
            for &n_trees in &[100, 300] {
                for &min_child_weight in &[1.0, 10.0] {
                    for &l2_leaf_penalty in &[0.0, 1.0] {
                        grid.push(Hyperparams {
                            n_trees,
                            max_depth,
                            learning_rate,
                            min_child_weight,
                            l2_leaf_penalty,
                            row_subsample: 1.0,
                            rng_seed,
                        });
                    }
                }
            }
        }
    }
    grid
}

/// Column-major training data: features plus targets.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    feature_names: Vec<String>,
    columns: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl DataSet {
    pub fn new(
        feature_names: Vec<String>,
        columns: Vec<Vec<f64>>,
        targets: Vec<f64>,
    ) -> Result<Self, GbtError> {
        if feature_names.len() != columns.len() {
            return Err(GbtError::Schema(
                "feature names and columns differ in count".into(),
            ));
        }
        if columns.iter().any(|c| c.len() != targets.len()) {
            return Err(GbtError::Schema("column lengths differ from targets".into()));
        }
        Ok(Self {
            feature_names,
            columns,
            targets,
        })
    }

    /// Select `indices` rows of a feature table and its aligned targets.
    pub fn from_table(
        table: &FeatureTable,
        targets: &RocofSeries,
        indices: &[usize],
    ) -> Result<Self, GbtError> {
        if table.hour_timestamps() != targets.hour_timestamps() {
            return Err(GbtError::Misaligned(
                "feature table and targets cover different hours".into(),
            ));
        }
        let feature_names: Vec<String> =
            table.columns().iter().map(|c| c.name.clone()).collect();
        let columns = table
            .columns()
            .iter()
            .map(|c| indices.iter().map(|&i| c.values[i]).collect())
            .collect();
        let t = indices.iter().map(|&i| targets.rocof()[i]).collect();
        Self::new(feature_names, columns, t)
    }

    pub fn n_rows(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.columns.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.columns
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.columns.iter().map(|c| c[i]).collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.row(i)).collect()
    }

    /// Row subset as a new data set.
    pub fn subset(&self, indices: &[usize]) -> DataSet {
        DataSet {
            feature_names: self.feature_names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| indices.iter().map(|&i| c[i]).collect())
                .collect(),
            targets: indices.iter().map(|&i| self.targets[i]).collect(),
        }
    }
}
