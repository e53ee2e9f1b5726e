//! Performance-regression guard for the boosting core: fits 40,000 rows ×
//! 30 features with 300 trees at depth 6 once and reports the wall time.
//! This should stay minutes-scale on a desktop; it is a guard, not a gate.
//!
//! Run with `cargo run --release -p gridfreq-bench --bin gbt_stress`.

use std::time::Instant;

use gridfreq::gbt::{fit, Hyperparams};
use gridfreq_bench::regression_data;

fn main() {
    let (n_rows, n_features) = (40_000, 30);
    println!("generating {n_rows} rows x {n_features} features...");
    let data = regression_data(n_rows, n_features, 99);
    let hp = Hyperparams {
        n_trees: 300,
        max_depth: 6,
        learning_rate: 0.1,
        min_child_weight: 1.0,
        l2_leaf_penalty: 1.0,
        row_subsample: 1.0,
        rng_seed: 0,
    };
    println!("fitting 300 trees at depth 6...");
    let start = Instant::now();
    let ensemble = fit(&data, &hp).expect("fit succeeds");
    let elapsed = start.elapsed();
    let n_leaves: usize = ensemble.trees.iter().map(|t| t.n_leaves()).sum();
    let preds = ensemble.predict_rows(&data.rows()).expect("predict");
    let mse: f64 = preds
        .iter()
        .zip(data.targets())
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / n_rows as f64;
    println!(
        "fit in {elapsed:.2?} ({:.1} trees/s), {n_leaves} leaves, training MSE {mse:.4}",
        300.0 / elapsed.as_secs_f64()
    );
}
