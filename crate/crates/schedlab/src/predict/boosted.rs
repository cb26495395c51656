//! Gradient-boosted regression trees with squared-error loss.
//!
//! Stage t fits a shallow tree to the residuals y - F_{t-1}(x) and the
//! model advances by learning_rate times that tree. With squared error
//! the residual fit is the steepest-descent direction, so training MSE
//! cannot increase for learning rates in (0, 1].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predict::tree::{fit_tree, TreeNode, TreeParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedParams {
    pub n_stages: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    pub min_samples_split: usize,
}

impl Default for BoostedParams {
    fn default() -> Self {
        BoostedParams {
            n_stages: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
            min_samples_split: 2,
        }
    }
}

/// One boosting stage: a residual-fitted tree and the rate it enters
/// the ensemble with.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostStage {
    pub learning_rate: f64,
    pub tree: TreeNode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostedEnsemble {
    pub params: BoostedParams,
    /// Constant initial model: the training-target mean.
    pub base_value: f64,
    pub stages: Vec<BoostStage>,
    /// Training MSE measured after each stage was added.
    pub stage_train_mse: Vec<f64>,
}

impl BoostedEnsemble {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let mut out = self.base_value;
        for stage in &self.stages {
            out += stage.learning_rate * stage.tree.predict(features);
        }
        out
    }
}

pub fn fit_boosted(x: &[Vec<f64>], y: &[f64], params: &BoostedParams) -> Result<BoostedEnsemble> {
    crate::predict::tree::validate_dataset(x, y)?;
    if params.n_stages == 0 {
        return Err(Error::validation("boosting needs at least one stage"));
    }
    if !(params.learning_rate > 0.0 && params.learning_rate <= 1.0) {
        return Err(Error::validation(format!(
            "learning_rate must be in (0, 1], got {}",
            params.learning_rate
        )));
    }

    let n = x.len();
    let base_value = y.iter().sum::<f64>() / n as f64;
    let mut preds = vec![base_value; n];

    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_samples_leaf: params.min_samples_leaf,
        min_samples_split: params.min_samples_split,
    };

    let mut stages = Vec::with_capacity(params.n_stages);
    let mut stage_train_mse = Vec::with_capacity(params.n_stages);
    for _ in 0..params.n_stages {
        let residuals: Vec<f64> = y.iter().zip(&preds).map(|(t, p)| t - p).collect();
        let tree = fit_tree(x, &residuals, &tree_params)?;
        for (p, row) in preds.iter_mut().zip(x) {
            *p += params.learning_rate * tree.predict(row);
        }
        let mse = y
            .iter()
            .zip(&preds)
            .map(|(t, p)| {
                let e = t - p;
                e * e
            })
            .sum::<f64>()
            / n as f64;
        stages.push(BoostStage {
            learning_rate: params.learning_rate,
            tree,
        });
        stage_train_mse.push(mse);
    }

    Ok(BoostedEnsemble {
        params: params.clone(),
        base_value,
        stages,
        stage_train_mse,
    })
}
