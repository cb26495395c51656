//! Random forest of regression trees.
//!
//! Each tree trains on a bootstrap resample of the rows and examines a
//! random subset of features at every split. Per-tree RNG seeds are
//! drawn once from a master stream, so refitting with the same seed
//! reproduces the ensemble exactly and tree order never matters.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predict::tree::{validate_dataset, TreeBuilder, TreeNode, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
    /// Features examined per split; None picks ceil(d / 3) at fit time.
    pub features_per_split: Option<usize>,
    /// When false every tree sees the full training set in order.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 50,
            max_depth: 20,
            min_samples_leaf: 5,
            min_samples_split: 2,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub params: ForestParams,
    /// Seed actually used by each tree, recorded for reproducibility.
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<TreeNode>,
}

impl Forest {
    /// Mean of the individual tree predictions.
    pub fn predict(&self, features: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.predict(features)).sum();
        sum / self.trees.len() as f64
    }
}

pub fn fit_forest(x: &[Vec<f64>], y: &[f64], params: &ForestParams) -> Result<Forest> {
    validate_dataset(x, y)?;
    if params.n_trees == 0 {
        return Err(Error::validation("forest needs at least one tree"));
    }
    let d = x[0].len();
    let features_per_split = match params.features_per_split {
        Some(0) => return Err(Error::validation("features_per_split must be at least 1")),
        Some(m) => m.min(d),
        None => d.div_ceil(3),
    };

    let mut master = ChaCha8Rng::seed_from_u64(params.seed);
    let tree_seeds: Vec<u64> = (0..params.n_trees).map(|_| master.random()).collect();

    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        min_samples_split: params.min_samples_split,
    };

    let n = x.len();
    let trees = tree_seeds
        .iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let indices: Vec<usize> = if params.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut builder =
                TreeBuilder::new(x, y, &tree_params, features_per_split, Some(&mut rng));
            builder.build(indices)
        })
        .collect();

    Ok(Forest {
        params: params.clone(),
        tree_seeds,
        trees,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::predict::tree::fit_tree;
    use rand::{Rng, SeedableRng};

    fn small_dataset(seed: u64, n: usize, d: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random::<f64>() * 10.0).collect())
            .collect();
        let y: Vec<f64> = x
            .iter()
            .map(|r| r[0] * 3.0 - r[1 % d] + rng.random::<f64>())
            .collect();
        (x, y)
    }

    #[test]
    fn single_tree_without_bootstrap_matches_plain_tree() {
        let (x, y) = small_dataset(9, 40, 3);
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            features_per_split: Some(3),
            max_depth: 6,
            min_samples_leaf: 2,
            min_samples_split: 2,
            seed: 123,
        };
        let forest = fit_forest(&x, &y, &params).unwrap();
        let tree_params = TreeParams {
            max_depth: 6,
            min_samples_leaf: 2,
            min_samples_split: 2,
        };
        let tree = fit_tree(&x, &y, &tree_params).unwrap();
        assert_eq!(forest.trees[0], tree);
        for row in &x {
            assert_eq!(forest.predict(row), tree.predict(row));
        }
    }

    #[test]
    fn refit_with_same_seed_is_identical() {
        let (x, y) = small_dataset(2, 60, 4);
        let params = ForestParams {
            n_trees: 8,
            seed: 77,
            ..ForestParams::default()
        };
        let a = fit_forest(&x, &y, &params).unwrap();
        let b = fit_forest(&x, &y, &params).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn different_seeds_give_different_forests() {
        let (x, y) = small_dataset(2, 60, 4);
        let a = fit_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 8,
                seed: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let b = fit_forest(
            &x,
            &y,
            &ForestParams {
                n_trees: 8,
                seed: 2,
                ..Default::default()
            },
        )
        .unwrap();
        assert_ne!(a.tree_seeds, b.tree_seeds);
        assert_ne!(a.trees, b.trees);
    }

    #[test]
    fn prediction_bounded_by_tree_extremes() {
        let (x, y) = small_dataset(15, 80, 3);
        let params = ForestParams {
            n_trees: 12,
            seed: 4,
            ..ForestParams::default()
        };
        let forest = fit_forest(&x, &y, &params).unwrap();
        for row in x.iter().take(20) {
            let preds: Vec<f64> = forest.trees.iter().map(|t| t.predict(row)).collect();
            let lo = preds.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = preds.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let p = forest.predict(row);
            // mean of n floats can drift past the extremes by rounding only
            assert!(p >= lo - 1e-9 && p <= hi + 1e-9);
        }
    }

    #[test]
    fn zero_trees_rejected() {
        let (x, y) = small_dataset(1, 10, 2);
        let params = ForestParams {
            n_trees: 0,
            ..ForestParams::default()
        };
        assert!(fit_forest(&x, &y, &params).is_err());
    }

    #[test]
    fn default_feature_subset_is_third_of_columns() {
        // d = 7 -> ceil(7/3) = 3; just verify the fit accepts None and runs
        let (x, y) = small_dataset(6, 30, 7);
        let params = ForestParams {
            n_trees: 3,
            seed: 9,
            ..ForestParams::default()
        };
        let forest = fit_forest(&x, &y, &params).unwrap();
        assert_eq!(forest.trees.len(), 3);
    }
}
