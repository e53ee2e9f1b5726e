//! Analysis of deterministic frequency deviations (DFDs) in power-grid
//! frequency records.
//!
//! Power grids exhibit regular frequency excursions at the start of trading
//! intervals, when schedule-based generation jumps to a new set point while
//! the load moves smoothly. This crate quantifies those excursions as hourly
//! Rate-of-Change-of-Frequency (RoCoF) values and explains them with three
//! models of increasing power:
//!
//! * a load-based linear model driven by the hourly load ramp,
//! * a refined linear model driven by the load ramp minus the solar ramp,
//! * a gradient-boosted tree model over all external features, explained
//!   with exact per-sample SHAP attributions and daily aggregated profiles.
//!
//! The pipeline runs in stages, each a module of this crate:
//!
//! 1. [`ingest`] reads 1 s frequency records and hourly feature tables from
//!    CSV, and can synthesize desk-scale datasets with known ground truth.
//! 2. [`signal`] extracts the signed hourly RoCoF from a frequency trace
//!    (increments, rectangular smoothing, windowed argmax of `|df/dt|`).
//! 3. [`curves`] builds minute-resolution load/generation curves (natural
//!    cubic splines, hourly step curves) and the hourly step sizes that
//!    drive the linear models.
//! 4. [`linmodel`] fits and applies the linear RoCoF predictors.
//! 5. [`gbt`] trains the boosted regression trees with seeded train/test
//!    splitting and cross-validated grid search.
//! 6. [`shap`] computes exact tree SHAP values, a brute-force Shapley
//!    oracle, and the daily aggregation used to explain the DFD pattern.
//! 7. [`eval`] scores predictions (R², daily profiles, sign matching).

pub mod curves;
pub mod eval;
pub mod gbt;
pub mod ingest;
pub mod linmodel;
pub mod shap;
pub mod signal;
pub mod time;

pub use curves::{CubicSpline, StepCurve, StepSizes};
pub use eval::DailyProfile;
pub use gbt::{DataSet, Hyperparams, TreeEnsemble, TreeNode};
pub use ingest::{FeatureTable, FrequencyTrace, SyntheticConfig};
pub use linmodel::LinearDfdModel;
pub use shap::{DailyShapProfile, ShapMatrix};
pub use signal::{DerivativeSeries, RocofSeries};
