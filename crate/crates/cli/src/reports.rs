//! JSON report schemas written by `fit-linear` and `fit-ml`.

use serde::Serialize;

use gridfreq::eval::{DailyProfile, SignMatchReport};
use gridfreq::gbt::Hyperparams;
use gridfreq::linmodel::LinearDfdModel;

/// One scored model: coefficients plus train/test R².
#[derive(Serialize)]
pub struct ScoredModel {
    pub model: LinearDfdModel,
    pub r2_train: f64,
    pub r2_test: f64,
}

/// Daily profiles over the full run and over the test rows only.
#[derive(Serialize)]
pub struct ProfilePair {
    pub all: DailyProfile,
    pub test: DailyProfile,
}

#[derive(Serialize)]
pub struct SignMatchPair {
    pub all: SignMatchReport,
    pub test: SignMatchReport,
}

#[derive(Serialize)]
pub struct LinearReport {
    pub n_hours: usize,
    pub n_valid_hours: usize,
    /// Hours dropped because extraction failed; excluded from every fit.
    pub n_invalid_hours: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub split_seed: u64,
    pub models: LinearModels,
    pub profiles: LinearProfiles,
    pub sign_match: LinearSignMatches,
}

#[derive(Serialize)]
pub struct LinearModels {
    pub load_based: ScoredModel,
    pub load_based_bias: ScoredModel,
    pub refined: ScoredModel,
    /// Diagnostic variant with the intercept pinned at zero; collapses to
    /// `load_based` whenever the solar steps vanish.
    pub refined_zero_bias: ScoredModel,
}

#[derive(Serialize)]
pub struct LinearProfiles {
    pub data: ProfilePair,
    pub load_based: ProfilePair,
    pub load_based_bias: ProfilePair,
    pub refined: ProfilePair,
    pub refined_zero_bias: ProfilePair,
}

#[derive(Serialize)]
pub struct LinearSignMatches {
    pub load_based: SignMatchPair,
    pub load_based_bias: SignMatchPair,
    pub refined: SignMatchPair,
    pub refined_zero_bias: SignMatchPair,
}

#[derive(Serialize)]
pub struct CvEntry {
    pub hp: Hyperparams,
    pub mean_r2: f64,
    pub fold_r2: Vec<f64>,
}

#[derive(Serialize)]
pub struct MlReport {
    pub n_hours: usize,
    pub n_valid_hours: usize,
    pub n_invalid_hours: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub split_seed: u64,
    pub grid: String,
    pub best_hp: Hyperparams,
    pub cv: Vec<CvEntry>,
    pub r2_train: f64,
    pub r2_test: f64,
    pub base_value: f64,
    pub profiles: MlProfiles,
    pub sign_match: SignMatchPair,
}

#[derive(Serialize)]
pub struct MlProfiles {
    pub data: ProfilePair,
    pub ml: ProfilePair,
}
