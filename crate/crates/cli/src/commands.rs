//! The four pipeline subcommands.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use gridfreq::curves::refined_step_sizes;
use gridfreq::eval::{daily_profile, r2_score, sign_match};
use gridfreq::gbt::{
    fit, full_grid, grid_search_cv, small_grid, train_test_split, DataSet, SplitIndices,
};
use gridfreq::ingest::{
    synthesize_dataset, write_feature_csv_path, write_frequency_csv_path, FeatureTable,
    SyntheticConfig,
};
use gridfreq::linmodel::{fit_least_squares, predict, LinearDfdModel, StepKind};
use gridfreq::shap::{
    daily_aggregate, dependency_pairs, shap_matrix, write_daily_shap_csv_path,
    write_shap_matrix_csv_path,
};
use gridfreq::signal::write_rocof_csv_path;
use gridfreq::time;
use gridfreq::{RocofSeries, StepSizes};

use crate::pipeline::{
    boundaries, column, export_curves, extract, load, restrict_rocof, restrict_steps, steps_of,
};
use crate::reports::{
    CvEntry, LinearModels, LinearProfiles, LinearReport, LinearSignMatches, MlProfiles, MlReport,
    ProfilePair, ScoredModel, SignMatchPair,
};
use crate::{GridChoice, SourceArgs, WindowArgs};

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(value)?;
    fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn synth(config_path: &Path, out: &Path) -> Result<()> {
    let cfg = SyntheticConfig::parse_path(config_path)
        .with_context(|| format!("reading synthetic config {}", config_path.display()))?;
    fs::create_dir_all(out)?;
    let (trace, table, truth) = synthesize_dataset(&cfg)?;
    write_frequency_csv_path(&trace, &out.join("frequency.csv"))?;
    write_feature_csv_path(&table, &out.join("features.csv"))?;
    write_rocof_csv_path(&truth, &out.join("ground_truth.csv"))?;
    println!(
        "synth: {} days -> {} samples, {} hourly rows",
        cfg.n_days,
        trace.len(),
        table.n_rows()
    );
    Ok(())
}

pub fn rocof(source: &SourceArgs, windows: &WindowArgs, out: &Path) -> Result<()> {
    let data = load(source, false)?;
    fs::create_dir_all(out)?;
    let hours = boundaries(&data, windows);
    let series = extract(&data, &hours, windows)?;
    write_rocof_csv_path(&series, &out.join("rocof.csv"))?;
    println!(
        "rocof: {} hours extracted, {} valid",
        series.len(),
        series.n_valid()
    );
    Ok(())
}

fn parse_pin(pin_block: Option<&str>) -> Result<Option<i64>> {
    pin_block
        .map(|s| time::parse_utc(s).map_err(anyhow::Error::msg))
        .transpose()
}

/// Everything both fitting commands need: observed targets and the split.
struct FitContext {
    table: FeatureTable,
    observed: RocofSeries,
    split: SplitIndices,
}

fn fit_context(
    source: &SourceArgs,
    windows: &WindowArgs,
    seed: u64,
    pin_block: Option<&str>,
) -> Result<FitContext> {
    let data = load(source, true)?;
    let hours = boundaries(&data, windows);
    let observed = extract(&data, &hours, windows)?;
    let table = data.table.expect("feature table required");
    let split = train_test_split(&table, &observed, 0.2, parse_pin(pin_block)?, seed)?;
    Ok(FitContext {
        table,
        observed,
        split,
    })
}

struct LinearFit {
    model: LinearDfdModel,
    scored: ScoredModel,
    profiles: ProfilePair,
    signs: SignMatchPair,
}

fn score_linear(
    ctx: &FitContext,
    steps: &StepSizes,
    with_intercept: bool,
    kind: StepKind,
) -> Result<LinearFit> {
    let y_train = restrict_rocof(&ctx.observed, &ctx.split.train);
    let y_test = restrict_rocof(&ctx.observed, &ctx.split.test);
    let model = fit_least_squares(
        &restrict_steps(steps, &ctx.split.train),
        &y_train,
        with_intercept,
        kind,
    )?;
    let predictions = predict(&model, steps);
    let r2_train = r2_score(&y_train, &restrict_rocof(&predictions, &ctx.split.train))?;
    let r2_test = r2_score(&y_test, &restrict_rocof(&predictions, &ctx.split.test))?;
    let profiles = ProfilePair {
        all: daily_profile(&predictions),
        test: daily_profile(&restrict_rocof(&predictions, &ctx.split.test)),
    };
    let data_all = daily_profile(&ctx.observed);
    let data_test = daily_profile(&y_test);
    let signs = SignMatchPair {
        all: sign_match(&profiles.all, &data_all),
        test: sign_match(&profiles.test, &data_test),
    };
    Ok(LinearFit {
        model: model.clone(),
        scored: ScoredModel {
            model,
            r2_train,
            r2_test,
        },
        profiles,
        signs,
    })
}

pub fn fit_linear(
    source: &SourceArgs,
    windows: &WindowArgs,
    out: &Path,
    seed: u64,
    pin_block: Option<&str>,
) -> Result<()> {
    let ctx = fit_context(source, windows, seed, pin_block)?;
    fs::create_dir_all(out)?;

    let load_steps = steps_of(&ctx.table, "load")?;
    let solar_steps = steps_of(&ctx.table, "solar")?;
    let refined_steps = refined_step_sizes(&load_steps, &solar_steps)?;

    let load_based = score_linear(&ctx, &load_steps, false, StepKind::LoadStep)?;
    let load_based_bias = score_linear(&ctx, &load_steps, true, StepKind::LoadStep)?;
    let refined = score_linear(&ctx, &refined_steps, true, StepKind::RefinedStep)?;
    let refined_zero_bias = score_linear(&ctx, &refined_steps, false, StepKind::RefinedStep)?;

    write_json(&load_based.model, &out.join("model_load_based.json"))?;
    write_json(&load_based_bias.model, &out.join("model_load_bias.json"))?;
    write_json(&refined.model, &out.join("model_refined.json"))?;

    write_rocof_csv_path(&ctx.observed, &out.join("rocof.csv"))?;
    export_curves(&ctx.table, out)?;

    let report = LinearReport {
        n_hours: ctx.observed.len(),
        n_valid_hours: ctx.observed.n_valid(),
        n_invalid_hours: ctx.observed.len() - ctx.observed.n_valid(),
        n_train: ctx.split.train.len(),
        n_test: ctx.split.test.len(),
        split_seed: seed,
        profiles: LinearProfiles {
            data: ProfilePair {
                all: daily_profile(&ctx.observed),
                test: daily_profile(&restrict_rocof(&ctx.observed, &ctx.split.test)),
            },
            load_based: load_based.profiles,
            load_based_bias: load_based_bias.profiles,
            refined: refined.profiles,
            refined_zero_bias: refined_zero_bias.profiles,
        },
        sign_match: LinearSignMatches {
            load_based: load_based.signs,
            load_based_bias: load_based_bias.signs,
            refined: refined.signs,
            refined_zero_bias: refined_zero_bias.signs,
        },
        models: LinearModels {
            load_based: load_based.scored,
            load_based_bias: load_based_bias.scored,
            refined: refined.scored,
            refined_zero_bias: refined_zero_bias.scored,
        },
    };
    write_json(&report, &out.join("linear_report.json"))?;
    println!(
        "fit-linear: test R² load={:.3} load+bias={:.3} refined={:.3}",
        report.models.load_based.r2_test,
        report.models.load_based_bias.r2_test,
        report.models.refined.r2_test
    );
    Ok(())
}

pub fn fit_ml(
    source: &SourceArgs,
    windows: &WindowArgs,
    out: &Path,
    seed: u64,
    grid_choice: GridChoice,
    pin_block: Option<&str>,
) -> Result<()> {
    let ctx = fit_context(source, windows, seed, pin_block)?;
    fs::create_dir_all(out)?;

    let grid = match grid_choice {
        GridChoice::Small => small_grid(seed.wrapping_add(2)),
        GridChoice::Paper => full_grid(seed.wrapping_add(2)),
    };
    let train_set = DataSet::from_table(&ctx.table, &ctx.observed, &ctx.split.train)?;
    let search = grid_search_cv(&train_set, &grid, 5, seed.wrapping_add(1))?;
    let model = fit(&train_set, &search.best)?;
    write_json(&model, &out.join("ensemble.json"))?;

    {
        let mut w = csv::Writer::from_path(out.join("cv_results.csv"))?;
        w.write_record([
            "n_trees",
            "max_depth",
            "learning_rate",
            "min_child_weight",
            "l2_leaf_penalty",
            "row_subsample",
            "mean_r2",
            "fold_r2_1",
            "fold_r2_2",
            "fold_r2_3",
            "fold_r2_4",
            "fold_r2_5",
        ])?;
        for s in &search.scores {
            let mut record = vec![
                s.hp.n_trees.to_string(),
                s.hp.max_depth.to_string(),
                s.hp.learning_rate.to_string(),
                s.hp.min_child_weight.to_string(),
                s.hp.l2_leaf_penalty.to_string(),
                s.hp.row_subsample.to_string(),
                s.mean_r2.to_string(),
            ];
            record.extend(s.fold_r2.iter().map(|r| r.to_string()));
            w.write_record(&record)?;
        }
        w.flush()?;
    }

    // Test predictions and scores.
    let test_set = DataSet::from_table(&ctx.table, &ctx.observed, &ctx.split.test)?;
    let test_rows = test_set.rows();
    let test_preds = model.predict_rows(&test_rows)?;
    let train_preds = model.predict_rows(&train_set.rows())?;
    let r2_test = gridfreq::eval::r2_score_values(test_set.targets(), &test_preds)?;
    let r2_train = gridfreq::eval::r2_score_values(train_set.targets(), &train_preds)?;

    let test_hours: Vec<i64> = ctx
        .split
        .test
        .iter()
        .map(|&i| ctx.table.hour_timestamps()[i])
        .collect();
    {
        let mut w = csv::Writer::from_path(out.join("test_predictions.csv"))?;
        w.write_record(["hour_utc", "observed_mhz_per_s", "predicted_mhz_per_s"])?;
        for ((ts, obs), pred) in test_hours.iter().zip(test_set.targets()).zip(&test_preds) {
            w.write_record([time::format_utc(*ts), obs.to_string(), pred.to_string()])?;
        }
        w.flush()?;
    }

    // SHAP attributions on the test set, plus the daily aggregation.
    let matrix = shap_matrix(&model, &test_rows)?;
    write_shap_matrix_csv_path(&matrix, &test_hours, &out.join("shap_matrix.csv"))?;
    let hour_labels: Vec<u32> = test_hours.iter().map(|&ts| time::hour_of_day(ts)).collect();
    let daily = daily_aggregate(&matrix, &hour_labels, test_set.targets())?;
    write_daily_shap_csv_path(&daily, &out.join("daily_shap.csv"))?;

    {
        let mut w = csv::Writer::from_path(out.join("dependency_pairs.csv"))?;
        w.write_record(["feature", "hour_utc", "value", "phi_mhz_per_s"])?;
        for name in ctx.table.column_names() {
            let values: Vec<f64> = ctx
                .split
                .test
                .iter()
                .map(|&i| column(&ctx.table, name).map(|c| c[i]))
                .collect::<Result<_>>()?;
            for (k, (value, phi)) in dependency_pairs(&matrix, name, &values)?.iter().enumerate() {
                w.write_record([
                    name.to_string(),
                    time::format_utc(test_hours[k]),
                    value.to_string(),
                    phi.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }

    // Predictions over every eligible row, for the full daily profile.
    let eligible: Vec<usize> = (0..ctx.table.n_rows())
        .filter(|&i| ctx.table.row_mask()[i] && ctx.observed.valid()[i])
        .collect();
    let mut all_pred = vec![f64::NAN; ctx.table.n_rows()];
    let mut all_valid = vec![false; ctx.table.n_rows()];
    for &i in &eligible {
        all_pred[i] = model.predict_row(&ctx.table.row(i))?;
        all_valid[i] = true;
    }
    let predictions_all = RocofSeries::new(
        ctx.table.hour_timestamps().to_vec(),
        all_pred,
        all_valid,
    );
    let pred_profiles = ProfilePair {
        all: daily_profile(&predictions_all),
        test: daily_profile(&restrict_rocof(&predictions_all, &ctx.split.test)),
    };
    let data_profiles = ProfilePair {
        all: daily_profile(&ctx.observed),
        test: daily_profile(&restrict_rocof(&ctx.observed, &ctx.split.test)),
    };
    let signs = SignMatchPair {
        all: sign_match(&pred_profiles.all, &data_profiles.all),
        test: sign_match(&pred_profiles.test, &data_profiles.test),
    };

    let report = MlReport {
        n_hours: ctx.observed.len(),
        n_valid_hours: ctx.observed.n_valid(),
        n_invalid_hours: ctx.observed.len() - ctx.observed.n_valid(),
        n_train: ctx.split.train.len(),
        n_test: ctx.split.test.len(),
        split_seed: seed,
        grid: format!("{grid_choice:?}").to_lowercase(),
        best_hp: search.best.clone(),
        cv: search
            .scores
            .iter()
            .map(|s| CvEntry {
                hp: s.hp.clone(),
                mean_r2: s.mean_r2,
                fold_r2: s.fold_r2.clone(),
            })
            .collect(),
        r2_train,
        r2_test,
        base_value: matrix.base_value(),
        profiles: MlProfiles {
            data: data_profiles,
            ml: pred_profiles,
        },
        sign_match: signs,
    };
    write_json(&report, &out.join("ml_report.json"))?;
    println!(
        "fit-ml: best depth={} lr={} trees={}; test R²={:.4}",
        report.best_hp.max_depth, report.best_hp.learning_rate, report.best_hp.n_trees, r2_test
    );
    Ok(())
}
