//! CART regression tree.
//!
//! Greedy top-down induction: at every node the split minimizing the
//! summed squared error of the two children is chosen among all
//! (feature, threshold) candidates, where thresholds are midpoints
//! between consecutive distinct sorted feature values. Equal-quality
//! splits resolve to the lowest feature index, then the smallest
//! threshold, so tree construction is fully deterministic.

use rand::seq::index::sample;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    /// Maximum number of internal edges from root to leaf.
    pub max_depth: usize,
    /// No leaf may cover fewer training rows than this.
    pub min_samples_leaf: usize,
    /// Nodes with fewer rows become leaves.
    pub min_samples_split: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: 20,
            min_samples_leaf: 5,
            min_samples_split: 2,
        }
    }
}

impl TreeParams {
    /// Parameters that let the tree grow until every leaf is pure.
    pub fn unlimited() -> Self {
        TreeParams {
            max_depth: usize::MAX,
            min_samples_leaf: 1,
            min_samples_split: 2,
        }
    }
}

/// A fitted regression tree node. Routing rule: `x[feature] <= threshold`
/// goes left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Internal {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        value: f64,
    },
}

impl TreeNode {
    pub fn predict(&self, features: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Internal {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if features[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Internal { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }

    /// Smallest number of training rows covered by any leaf of the tree,
    /// when re-routing the given training set.
    pub fn min_leaf_coverage(&self, x: &[Vec<f64>]) -> usize {
        let mut counts = std::collections::HashMap::new();
        for row in x {
            let mut node = self;
            loop {
                match node {
                    TreeNode::Leaf { .. } => break,
                    TreeNode::Internal {
                        feature,
                        threshold,
                        left,
                        right,
                    } => {
                        node = if row[*feature] <= *threshold {
                            left
                        } else {
                            right
                        };
                    }
                }
            }
            *counts.entry(node as *const TreeNode).or_insert(0usize) += 1;
        }
        counts.values().copied().min().unwrap_or(0)
    }
}

/// Best split of a set of rows: feature, threshold and resulting summed
/// child squared error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice {
    pub feature: usize,
    pub threshold: f64,
    pub child_sse: f64,
}

pub(crate) struct TreeBuilder<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    params: &'a TreeParams,
    /// Number of features examined per split; fewer than the total
    /// enables random-subspace mode and requires an RNG.
    features_per_split: usize,
    rng: Option<&'a mut ChaCha8Rng>,
}

impl<'a> TreeBuilder<'a> {
    pub fn new(
        x: &'a [Vec<f64>],
        y: &'a [f64],
        params: &'a TreeParams,
        features_per_split: usize,
        rng: Option<&'a mut ChaCha8Rng>,
    ) -> Self {
        TreeBuilder {
            x,
            y,
            params,
            features_per_split,
            rng,
        }
    }

    pub fn build(&mut self, indices: Vec<usize>) -> TreeNode {
        self.build_node(indices, 0)
    }

    fn build_node(&mut self, indices: Vec<usize>, depth: usize) -> TreeNode {
        let leaf = |y: &[f64], idx: &[usize]| TreeNode::Leaf {
            value: idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64,
        };

        let n = indices.len();
        if n < self.params.min_samples_split
            || n < 2 * self.params.min_samples_leaf
            || depth >= self.params.max_depth
            || targets_constant(self.y, &indices)
        {
            return leaf(self.y, &indices);
        }

        let candidates = self.candidate_features();
        let split = match best_split(
            self.x,
            self.y,
            &indices,
            &candidates,
            self.params.min_samples_leaf,
        ) {
            Some(s) => s,
            None => return leaf(self.y, &indices),
        };

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| self.x[i][split.feature] <= split.threshold);

        TreeNode::Internal {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.build_node(left_idx, depth + 1)),
            right: Box::new(self.build_node(right_idx, depth + 1)),
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x[0].len();
        if self.features_per_split >= d {
            return (0..d).collect();
        }
        let rng = self
            .rng
            .as_deref_mut()
            .expect("random feature subsets need an rng");
        let mut chosen = sample(rng, d, self.features_per_split).into_vec();
        chosen.sort_unstable();
        chosen
    }
}

fn targets_constant(y: &[f64], indices: &[usize]) -> bool {
    let first = y[indices[0]];
    indices.iter().all(|&i| y[i] == first)
}

/// Exhaustively scores every admissible (feature, midpoint-threshold)
/// candidate over the given rows and returns the one with the smallest
/// summed child SSE, ties resolved to the lowest feature index then the
/// smallest threshold. Returns None when no candidate is admissible.
///
/// Scoring runs in two phases. A prefix-sum sweep finds the minimum
/// cheaply, but its rounding depends on the feature's sort order, so two
/// candidates inducing the same partition through different features can
/// land a few ulps apart and defeat the tie-break. Every candidate within
/// a noise band of the sweep minimum is therefore re-scored with mean-
/// centered sums taken in node-row order, which gives identical bits to
/// identical partitions.
pub fn best_split(
    x: &[Vec<f64>],
    y: &[f64],
    indices: &[usize],
    features: &[usize],
    min_samples_leaf: usize,
) -> Option<SplitChoice> {
    let n = indices.len();
    let mut near_best: Vec<SplitChoice> = Vec::new();
    let mut best_score = f64::INFINITY;

    // Band wide enough to absorb prefix-sum rounding: n additions at the
    // magnitude of the raw second moment, which dominates when the
    // targets sit far from zero.
    let sq_scale: f64 = indices.iter().map(|&i| y[i] * y[i]).sum();
    let parent_sse = exact_sse(y, indices.iter().copied());
    let band = (parent_sse * 1e-9).max(sq_scale * n as f64 * f64::EPSILON * 8.0);

    let mut order: Vec<usize> = indices.to_vec();
    for &feature in features {
        order.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]));

        // prefix sums over targets in feature order
        let mut prefix_sum = Vec::with_capacity(n + 1);
        let mut prefix_sq = Vec::with_capacity(n + 1);
        prefix_sum.push(0.0);
        prefix_sq.push(0.0);
        for &i in &order {
            prefix_sum.push(prefix_sum.last().unwrap() + y[i]);
            prefix_sq.push(prefix_sq.last().unwrap() + y[i] * y[i]);
        }
        let total_sum = prefix_sum[n];
        let total_sq = prefix_sq[n];

        for p in 1..n {
            let lo = x[order[p - 1]][feature];
            let hi = x[order[p]][feature];
            if lo == hi {
                continue;
            }
            if p < min_samples_leaf || n - p < min_samples_leaf {
                continue;
            }
            let threshold = split_threshold(lo, hi);

            let left_n = p as f64;
            let right_n = (n - p) as f64;
            let left_sse = (prefix_sq[p] - prefix_sum[p] * prefix_sum[p] / left_n).max(0.0);
            let right_sum = total_sum - prefix_sum[p];
            let right_sse = ((total_sq - prefix_sq[p]) - right_sum * right_sum / right_n).max(0.0);
            let child_sse = left_sse + right_sse;

            if child_sse <= best_score + band {
                best_score = best_score.min(child_sse);
                near_best.push(SplitChoice {
                    feature,
                    threshold,
                    child_sse,
                });
                if near_best.len() >= 64 {
                    near_best.retain(|c| c.child_sse <= best_score + band);
                }
            }
        }
    }

    near_best.retain(|c| c.child_sse <= best_score + band);
    near_best.sort_by(|a, b| {
        a.feature
            .cmp(&b.feature)
            .then(a.threshold.total_cmp(&b.threshold))
    });

    let mut best: Option<SplitChoice> = None;
    for candidate in near_best {
        let left = indices
            .iter()
            .copied()
            .filter(|&i| x[i][candidate.feature] <= candidate.threshold);
        let right = indices
            .iter()
            .copied()
            .filter(|&i| x[i][candidate.feature] > candidate.threshold);
        let child_sse = exact_sse(y, left) + exact_sse(y, right);
        if best.is_none_or(|b| child_sse < b.child_sse) {
            best = Some(SplitChoice {
                child_sse,
                ..candidate
            });
        }
    }
    best
}

/// Two-pass sum of squared deviations from the mean over the given rows.
fn exact_sse(y: &[f64], rows: impl Iterator<Item = usize> + Clone) -> f64 {
    let (mut sum, mut count) = (0.0, 0usize);
    for i in rows.clone() {
        sum += y[i];
        count += 1;
    }
    if count == 0 {
        return 0.0;
    }
    let mean = sum / count as f64;
    rows.map(|i| (y[i] - mean).powi(2)).sum()
}

/// Midpoint between two consecutive distinct values, nudged down to the
/// lower value if rounding lands on the upper one (so the upper value
/// always routes right).
pub fn split_threshold(lo: f64, hi: f64) -> f64 {
    let mid = (lo + hi) / 2.0;
    if mid >= hi {
        lo
    } else {
        mid
    }
}

/// Fits a regression tree on raw (unscaled) features.
pub fn fit_tree(x: &[Vec<f64>], y: &[f64], params: &TreeParams) -> Result<TreeNode> {
    validate_dataset(x, y)?;
    let d = x[0].len();
    let mut builder = TreeBuilder::new(x, y, params, d, None);
    Ok(builder.build((0..x.len()).collect()))
}

pub(crate) fn validate_dataset(x: &[Vec<f64>], y: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    if x.len() != y.len() {
        return Err(Error::validation(format!(
            "feature matrix has {} rows but targets have {}",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].len();
    if d == 0 {
        return Err(Error::validation("feature matrix has no columns"));
    }
    if x.iter().any(|r| r.len() != d) {
        return Err(Error::validation(
            "feature matrix rows have inconsistent widths",
        ));
    }
    Ok(())
}

#[cfg(test)]
pub(crate) fn train_mse(node: &TreeNode, x: &[Vec<f64>], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    x.iter()
        .zip(y)
        .map(|(row, &t)| {
            let e = node.predict(row) - t;
            e * e
        })
        .sum::<f64>()
        / n
}
