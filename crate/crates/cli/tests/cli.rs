//! End-to-end checks of the `gridfreq` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn gridfreq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gridfreq"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = gridfreq(args);
    assert!(
        out.status.success(),
        "gridfreq {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn write_config(dir: &Path, n_days: u32, noise: f64, solar: bool, hour22: f64) -> PathBuf {
    let solar_profile = if solar {
        "0,0,0,0,0,0,500,2000,5500,10000,14500,17500,19000,19000,17500,14500,10500,6500,3000,1000,0,0,0,0"
    } else {
        "0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0,0"
    };
    let mut hour_effect = vec!["0".to_string(); 24];
    hour_effect[22] = hour22.to_string();
    let text = format!(
        "n_days={n_days}\nnoise_std={noise}\nimbalance_gain=0.0025\n\
         load_profile=42000,40500,39500,39000,39500,41500,46000,52000,56500,59000,60500,61000,60500,59500,58500,58000,57500,58500,60500,61500,59500,55500,50500,46000\n\
         solar_profile={solar_profile}\nhour_effect={}\nrng_seed=7\n",
        hour_effect.join(",")
    );
    let path = dir.join("config.txt");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn missing_input_path_names_the_path_and_fails() {
    let out = gridfreq(&["rocof", "--freq", "/no/such/file.csv", "--out", "/tmp"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(
        stderr.contains("/no/such/file.csv"),
        "stderr should name the path: {stderr}"
    );
}

#[test]
fn conflicting_sources_rejected() {
    let out = gridfreq(&[
        "rocof",
        "--freq",
        "a.csv",
        "--synth-config",
        "b.txt",
        "--out",
        "/tmp",
    ]);
    assert!(!out.status.success());
}

#[test]
fn rocof_of_constant_frequency_is_all_zero() {
    let dir = tempfile::tempdir().unwrap();
    let freq = dir.path().join("flat.csv");
    let mut text = String::from("timestamp_utc,frequency_hz\n");
    // Two hours of flat 50 Hz around a single extractable boundary.
    for k in 0..7200 {
        let h = k / 3600;
        let m = (k % 3600) / 60;
        let s = k % 60;
        text.push_str(&format!("2016-12-01T{h:02}:{m:02}:{s:02}Z,50.0\n"));
    }
    fs::write(&freq, text).unwrap();
    let out_dir = dir.path().join("out");
    ok(&[
        "rocof",
        "--freq",
        freq.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    let rocof = fs::read_to_string(out_dir.join("rocof.csv")).unwrap();
    let mut rows = 0;
    for line in rocof.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[1], "0");
        assert_eq!(cells[2], "true");
        rows += 1;
    }
    assert!(rows >= 1);
}

#[test]
fn noiseless_synth_rocof_matches_ground_truth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 2, 0.0, true, -4.0);
    let data = dir.path().join("data");
    ok(&[
        "synth",
        "--synth-config",
        cfg.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    let out = dir.path().join("rocof");
    ok(&[
        "rocof",
        "--freq",
        data.join("frequency.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let truth: Vec<(String, f64)> = read_rocof(&data.join("ground_truth.csv"));
    let extracted: Vec<(String, f64)> = read_rocof(&out.join("rocof.csv"));
    // Every ground-truth hour appears in the extraction with the same value.
    for (hour, value) in &truth {
        let found = extracted
            .iter()
            .find(|(h, _)| h == hour)
            .unwrap_or_else(|| panic!("hour {hour} missing from extraction"));
        assert!(
            (found.1 - value).abs() < 1e-9,
            "{hour}: extracted {} vs truth {value}",
            found.1
        );
    }
}

fn read_rocof(path: &Path) -> Vec<(String, f64)> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .filter(|l| l.ends_with("true"))
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            (cells[0].to_string(), cells[1].parse().unwrap())
        })
        .collect()
}

#[test]
fn fit_linear_zero_solar_collapses_models() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 6, 0.002, false, 0.0);
    let out = dir.path().join("lin");
    ok(&[
        "fit-linear",
        "--synth-config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "3",
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("linear_report.json")).unwrap()).unwrap();
    // With zero solar the refined steps equal the load steps, so the
    // zero-bias refined fit is the load-based fit, and the biased refined
    // fit is the load+bias fit.
    let models = &report["models"];
    assert_eq!(
        models["refined_zero_bias"]["model"]["slope"],
        models["load_based"]["model"]["slope"]
    );
    assert_eq!(
        models["refined_zero_bias"]["r2_test"],
        models["load_based"]["r2_test"]
    );
    assert_eq!(
        models["refined"]["model"]["slope"],
        models["load_based_bias"]["model"]["slope"]
    );
    assert_eq!(
        models["refined"]["r2_test"],
        models["load_based_bias"]["r2_test"]
    );
}

#[test]
fn fit_linear_strong_solar_report_schema_and_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 8, 0.002, true, 0.0);
    let out = dir.path().join("lin");
    ok(&[
        "fit-linear",
        "--synth-config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("linear_report.json")).unwrap()).unwrap();
    // Documented schema: counts, per-model scores, profiles, sign matches.
    for key in [
        "n_hours",
        "n_valid_hours",
        "n_invalid_hours",
        "n_train",
        "n_test",
        "models",
        "profiles",
        "sign_match",
    ] {
        assert!(report.get(key).is_some(), "report lacks {key}");
    }
    let r2_load = report["models"]["load_based"]["r2_test"].as_f64().unwrap();
    let r2_refined = report["models"]["refined"]["r2_test"].as_f64().unwrap();
    assert!(
        r2_refined > r2_load,
        "refined {r2_refined} should beat load-based {r2_load} under strong solar"
    );
    assert!(report["profiles"]["data"]["all"]["mean"].as_array().unwrap().len() == 24);
    // Model files parse as the documented shape.
    let model: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("model_refined.json")).unwrap()).unwrap();
    for key in ["slope", "intercept", "uses_intercept", "input_kind"] {
        assert!(model.get(key).is_some());
    }
    // Curve sketches exist and carry the documented header.
    let spline = fs::read_to_string(out.join("load_spline.csv")).unwrap();
    assert!(spline.starts_with("minute_utc,value_mw"));
}

#[test]
fn fit_ml_is_byte_deterministic_and_beats_refined() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 8, 0.002, true, -4.0);
    let lin = dir.path().join("lin");
    let ml1 = dir.path().join("ml1");
    let ml2 = dir.path().join("ml2");
    ok(&[
        "fit-linear",
        "--synth-config",
        cfg.to_str().unwrap(),
        "--out",
        lin.to_str().unwrap(),
        "--seed",
        "9",
    ]);
    for out in [&ml1, &ml2] {
        ok(&[
            "fit-ml",
            "--synth-config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--seed",
            "9",
            "--grid",
            "small",
        ]);
    }
    for name in [
        "ml_report.json",
        "ensemble.json",
        "shap_matrix.csv",
        "daily_shap.csv",
        "cv_results.csv",
        "test_predictions.csv",
    ] {
        let a = fs::read(ml1.join(name)).unwrap();
        let b = fs::read(ml2.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    let lin_report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(lin.join("linear_report.json")).unwrap()).unwrap();
    let ml_report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(ml1.join("ml_report.json")).unwrap()).unwrap();
    let r2_refined = lin_report["models"]["refined"]["r2_test"].as_f64().unwrap();
    let r2_ml = ml_report["r2_test"].as_f64().unwrap();
    assert!(
        r2_ml >= r2_refined,
        "ML test R² {r2_ml} below refined {r2_refined} on mechanism data"
    );
}

#[test]
fn fit_ml_dummy_feature_gets_zero_shap() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 6, 0.002, true, 0.0);
    let data = dir.path().join("data");
    ok(&[
        "synth",
        "--synth-config",
        cfg.to_str().unwrap(),
        "--out",
        data.to_str().unwrap(),
    ]);
    // Append a constant column; constant features can never split.
    let features = fs::read_to_string(data.join("features.csv")).unwrap();
    let mut lines = features.lines();
    let mut doctored = format!("{},dummy\n", lines.next().unwrap());
    for line in lines {
        doctored.push_str(line);
        doctored.push_str(",1\n");
    }
    let doctored_path = data.join("features_dummy.csv");
    fs::write(&doctored_path, doctored).unwrap();

    let out = dir.path().join("ml");
    ok(&[
        "fit-ml",
        "--freq",
        data.join("frequency.csv").to_str().unwrap(),
        "--features",
        doctored_path.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--seed",
        "4",
    ]);
    let daily = fs::read_to_string(out.join("daily_shap.csv")).unwrap();
    let header: Vec<&str> = daily.lines().next().unwrap().split(',').collect();
    let col = header
        .iter()
        .position(|h| *h == "mean_phi_dummy_mhz_per_s")
        .expect("dummy column present");
    for line in daily.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        if !cells[col].is_empty() {
            assert_eq!(cells[col], "0", "dummy feature drew attribution: {line}");
        }
    }
    // And per-sample too.
    let matrix = fs::read_to_string(out.join("shap_matrix.csv")).unwrap();
    let header: Vec<&str> = matrix.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "phi_dummy_mhz_per_s").unwrap();
    for line in matrix.lines().skip(1) {
        assert_eq!(line.split(',').nth(col).unwrap(), "0");
    }
}
