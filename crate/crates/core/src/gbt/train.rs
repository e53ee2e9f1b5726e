//! Boosting rounds and the exact greedy split search.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{DataSet, GbtError, Hyperparams, TreeEnsemble, TreeNode};

/// A split proposal for one node; candidates are totally ordered so the
/// parallel reduction over features is schedule-independent.
#[derive(Debug, Clone, Copy)]
struct SplitCandidate {
    gain: f64,
    feature: usize,
    threshold: f64,
    default_left: bool,
}

impl SplitCandidate {
    /// Higher gain wins; ties fall to the lower feature index, then the
    /// lower threshold, then sending missing left.
    fn better(self, other: SplitCandidate) -> SplitCandidate {
        if self.gain != other.gain {
            return if self.gain > other.gain { self } else { other };
        }
        if self.feature != other.feature {
            return if self.feature < other.feature { self } else { other };
        }
        if self.threshold != other.threshold {
            return if self.threshold < other.threshold { self } else { other };
        }
        if self.default_left {
            self
        } else {
            other
        }
    }
}

struct TreeBuilder<'a> {
    data: &'a DataSet,
    grad: &'a [f64],
    hess: &'a [f64],
    hp: &'a Hyperparams,
}

fn leaf_objective(g: f64, h: f64, lambda: f64) -> f64 {
    g * g / (h + lambda)
}

impl TreeBuilder<'_> {
    fn build(&self, rows: &[u32], depth: usize) -> TreeNode {
        let g: f64 = rows.iter().map(|&i| self.grad[i as usize]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i as usize]).sum();
        let lambda = self.hp.l2_leaf_penalty;
        let leaf = TreeNode::Leaf {
            value: -g / (h + lambda),
            cover: h,
        };
        if depth >= self.hp.max_depth || rows.len() < 2 {
            return leaf;
        }
        let best = (0..self.data.n_features())
            .into_par_iter()
            .filter_map(|f| self.best_split_for_feature(f, rows, g, h))
            .reduce_with(SplitCandidate::better);
        let Some(best) = best else { return leaf };
        if best.gain.is_nan() || best.gain <= 0.0 {
            return leaf;
        }
        let column = &self.data.columns()[best.feature];
        let (left_rows, right_rows): (Vec<u32>, Vec<u32>) = rows.iter().partition(|&&i| {
            let v = column[i as usize];
            if v.is_nan() {
                best.default_left
            } else {
                v < best.threshold
            }
        });
        if left_rows.is_empty() || right_rows.is_empty() {
            return leaf;
        }
        TreeNode::Split {
            feature: best.feature,
            threshold: best.threshold,
            default_left: best.default_left,
            cover: h,
            left: Box::new(self.build(&left_rows, depth + 1)),
            right: Box::new(self.build(&right_rows, depth + 1)),
        }
    }

    /// Exact greedy scan of one feature: sort the node's values, walk the
    /// boundaries between distinct values with midpoint thresholds, and try
    /// both default directions for the missing bucket.
    fn best_split_for_feature(
        &self,
        feature: usize,
        rows: &[u32],
        g_total: f64,
        h_total: f64,
    ) -> Option<SplitCandidate> {
        let column = &self.data.columns()[feature];
        let lambda = self.hp.l2_leaf_penalty;
        let mcw = self.hp.min_child_weight;
        let mut sorted: Vec<(f64, f64, f64)> = Vec::with_capacity(rows.len());
        let mut g_missing = 0.0;
        let mut h_missing = 0.0;
        for &i in rows {
            let i = i as usize;
            let v = column[i];
            if v.is_nan() {
                g_missing += self.grad[i];
                h_missing += self.hess[i];
            } else {
                sorted.push((v, self.grad[i], self.hess[i]));
            }
        }
        if sorted.len() < 2 {
            return None;
        }
        sorted.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let parent_score = leaf_objective(g_total, h_total, lambda);
        let mut best: Option<SplitCandidate> = None;
        let mut g_left = 0.0;
        let mut h_left = 0.0;
        for w in 0..sorted.len() - 1 {
            g_left += sorted[w].1;
            h_left += sorted[w].2;
            let (lo, hi) = (sorted[w].0, sorted[w + 1].0);
            if lo == hi {
                continue;
            }
            // Midpoint threshold; if rounding collapses it onto the lower
            // value, the upper value still separates the two sides.
            let mid = lo + (hi - lo) / 2.0;
            let threshold = if mid > lo { mid } else { hi };
            for default_left in [true, false] {
                let (gl, hl) = if default_left {
                    (g_left + g_missing, h_left + h_missing)
                } else {
                    (g_left, h_left)
                };
                let (gr, hr) = (g_total - gl, h_total - hl);
                if hl < mcw || hr < mcw {
                    continue;
                }
                let gain = 0.5
                    * (leaf_objective(gl, hl, lambda) + leaf_objective(gr, hr, lambda)
                        - parent_score);
                let candidate = SplitCandidate {
                    gain,
                    feature,
                    threshold,
                    default_left,
                };
                best = Some(match best {
                    None => candidate,
                    Some(b) if candidate.gain > b.gain => candidate,
                    Some(b) => b,
                });
            }
        }
        best
    }
}

fn predict_from_columns(node: &TreeNode, columns: &[Vec<f64>], i: usize) -> f64 {
    let mut node = node;
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
                let v = columns[*feature][i];
                let go_left = if v.is_nan() { *default_left } else { v < *threshold };
                node = if go_left { left } else { right };
            }
        }
    }
}

/// Train a boosted ensemble on the data set.
///
/// The base score is the training target mean; each round fits one tree to
/// the current residual gradients over a seeded row subsample and the
/// predictions of every row advance by `learning_rate` times the tree
/// output. With full subsampling the training loss never increases.
pub fn fit(data: &DataSet, hp: &Hyperparams) -> Result<TreeEnsemble, GbtError> {
    hp.validate()?;
    let n = data.n_rows();
    if n < 2 {
        return Err(GbtError::TooFewRows { need: 2, got: n });
    }
    if let Some(bad) = data.targets().iter().position(|t| !t.is_finite()) {
        return Err(GbtError::NonFiniteTarget(bad));
    }
    let base_score = data.targets().iter().sum::<f64>() / n as f64;
    let mut preds = vec![base_score; n];
    let mut rng = ChaCha8Rng::seed_from_u64(hp.rng_seed);
    let mut trees = Vec::with_capacity(hp.n_trees);
    let hess = vec![1.0; n];
    for _ in 0..hp.n_trees {
        let rows: Vec<u32> = if hp.row_subsample < 1.0 {
            let k = ((hp.row_subsample * n as f64).round() as usize).clamp(1, n);
            let mut picked = rand::seq::index::sample(&mut rng, n, k).into_vec();
            picked.sort_unstable();
            picked.into_iter().map(|i| i as u32).collect()
        } else {
            (0..n as u32).collect()
        };
        let grad: Vec<f64> = (0..n).map(|i| preds[i] - data.targets()[i]).collect();
        let builder = TreeBuilder {
            data,
            grad: &grad,
            hess: &hess,
            hp,
        };
        let tree = builder.build(&rows, 0);
        for (i, pred) in preds.iter_mut().enumerate() {
            *pred += hp.learning_rate * predict_from_columns(&tree, data.columns(), i);
        }
        trees.push(tree);
    }
    Ok(TreeEnsemble {
        trees,
        base_score,
        shrinkage: hp.learning_rate,
        feature_names: data.feature_names().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_point_data() -> DataSet {
        DataSet::new(
            vec!["x".into()],
            vec![vec![0.0, 1.0]],
            vec![0.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn two_point_stump_is_exact() {
        // One tree, depth 1, lr 1, no penalty: base 0.5, gradients ±0.5,
        // Newton leaves -(-0.5)/1 and -(0.5)/1, so predictions 0 and 1.
        let hp = Hyperparams {
            n_trees: 1,
            max_depth: 1,
            learning_rate: 1.0,
            min_child_weight: 0.0,
            l2_leaf_penalty: 0.0,
            row_subsample: 1.0,
            rng_seed: 0,
        };
        let e = fit(&two_point_data(), &hp).unwrap();
        assert_eq!(e.base_score, 0.5);
        assert_eq!(e.predict_row(&[0.0]).unwrap(), 0.0);
        assert_eq!(e.predict_row(&[1.0]).unwrap(), 1.0);
        match &e.trees[0] {
            TreeNode::Split { left, right, .. } => {
                assert_eq!(left.cover(), 1.0);
                assert_eq!(right.cover(), 1.0);
                match (left.as_ref(), right.as_ref()) {
                    (TreeNode::Leaf { value: l, .. }, TreeNode::Leaf { value: r, .. }) => {
                        assert_eq!(*l, -0.5);
                        assert_eq!(*r, 0.5);
                    }
                    other => panic!("expected two leaves, got {other:?}"),
                }
            }
            other => panic!("expected a stump, got {other:?}"),
        }
    }

    #[test]
    fn constant_targets_predict_the_constant() {
        let data = DataSet::new(
            vec!["x".into(), "y".into()],
            vec![vec![1.0, 2.0, 3.0, 4.0], vec![0.0, 1.0, 0.0, 1.0]],
            vec![2.5; 4],
        )
        .unwrap();
        for hp in [Hyperparams::default(), Hyperparams {
            max_depth: 6,
            learning_rate: 1.0,
            l2_leaf_penalty: 0.0,
            ..Hyperparams::default()
        }] {
            let e = fit(&data, &hp).unwrap();
            for i in 0..4 {
                assert_eq!(e.predict_row(&data.row(i)).unwrap(), 2.5);
            }
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let data = DataSet::new(
            vec!["a".into(), "b".into()],
            vec![
                (0..40).map(|i| (i * 7 % 13) as f64).collect(),
                (0..40).map(|i| (i * 3 % 11) as f64).collect(),
            ],
            (0..40).map(|i| ((i * 5) % 17) as f64).collect(),
        )
        .unwrap();
        let hp = Hyperparams {
            n_trees: 10,
            row_subsample: 0.7,
            rng_seed: 42,
            ..Hyperparams::default()
        };
        let a = fit(&data, &hp).unwrap();
        let b = fit(&data, &hp).unwrap();
        assert_eq!(a, b);
        let c = fit(
            &data,
            &Hyperparams {
                rng_seed: 43,
                ..hp
            },
        )
        .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn training_set_size_checked() {
        let tiny = DataSet::new(vec!["x".into()], vec![vec![1.0]], vec![1.0]).unwrap();
        assert!(matches!(
            fit(&tiny, &Hyperparams::default()),
            Err(GbtError::TooFewRows { .. })
        ));
    }

    #[test]
    fn non_finite_target_rejected() {
        let bad = DataSet::new(
            vec!["x".into()],
            vec![vec![0.0, 1.0]],
            vec![0.0, f64::NAN],
        )
        .unwrap();
        assert!(matches!(
            fit(&bad, &Hyperparams::default()),
            Err(GbtError::NonFiniteTarget(1))
        ));
    }

    #[test]
    fn missing_values_route_to_learned_side() {
        // Rows with NaN x cluster with the high-target group, so the learned
        // default must send missing right.
        let data = DataSet::new(
            vec!["x".into()],
            vec![vec![0.0, 0.1, 0.2, 1.0, 1.1, f64::NAN, f64::NAN]],
            vec![0.0, 0.0, 0.0, 10.0, 10.0, 10.0, 10.0],
        )
        .unwrap();
        let hp = Hyperparams {
            n_trees: 1,
            max_depth: 1,
            learning_rate: 1.0,
            min_child_weight: 0.0,
            l2_leaf_penalty: 0.0,
            ..Hyperparams::default()
        };
        let e = fit(&data, &hp).unwrap();
        let low = e.predict_row(&[0.0]).unwrap();
        let high = e.predict_row(&[1.0]).unwrap();
        let missing = e.predict_row(&[f64::NAN]).unwrap();
        assert!((low - 0.0).abs() < 1e-12);
        assert!((high - 10.0).abs() < 1e-12);
        assert_eq!(missing, high);
    }

    #[test]
    fn cover_conservation_holds_everywhere() {
        let data = DataSet::new(
            vec!["a".into(), "b".into()],
            vec![
                (0..30).map(|i| (i % 7) as f64).collect(),
                (0..30).map(|i| (i % 5) as f64).collect(),
            ],
            (0..30).map(|i| (i % 3) as f64 - 1.0).collect(),
        )
        .unwrap();
        let e = fit(
            &data,
            &Hyperparams {
                n_trees: 5,
                max_depth: 4,
                ..Hyperparams::default()
            },
        )
        .unwrap();
        e.validate().unwrap();
        // Root cover equals the (full) subsample size.
        for tree in &e.trees {
            assert_eq!(tree.cover(), 30.0);
        }
    }
}
