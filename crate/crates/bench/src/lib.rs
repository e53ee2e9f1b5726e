//! Seeded data generators shared by the benchmarks and the stress binary.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gridfreq::gbt::DataSet;

/// Regression data with a planted signal: a few linear terms, one
/// interaction, and noise, so split search has real structure to chase.
pub fn regression_data(n_rows: usize, n_features: usize, seed: u64) -> DataSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let columns: Vec<Vec<f64>> = (0..n_features)
        .map(|_| (0..n_rows).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect())
        .collect();
    let targets: Vec<f64> = (0..n_rows)
        .map(|i| {
            let linear = 0.7 * columns[0][i] - 0.4 * columns[1 % n_features][i];
            let interaction = if columns[2 % n_features][i] > 0.0 {
                columns[3 % n_features][i]
            } else {
                0.0
            };
            linear + interaction + rng.random::<f64>() * 0.5
        })
        .collect();
    DataSet::new(
        (0..n_features).map(|f| format!("f{f}")).collect(),
        columns,
        targets,
    )
    .unwrap()
}
