//! Runtime prediction: four regressor families behind one model type.
//!
//! A fitted `RuntimeModel` bundles the estimator with everything needed
//! to score a raw job record: the user aggregates for feature
//! augmentation, the min-max scaler (applied only for the network,
//! trees consume raw features), the safety margin added to every
//! estimate and the output clamp range.

pub mod boosted;
pub mod forest;
pub mod network;
pub mod tree;

pub use boosted::{fit_boosted, BoostedEnsemble, BoostedParams};
pub use forest::{fit_forest, Forest, ForestParams};
pub use network::{fit_network, huber, huber_grad, Network, NetworkParams};
pub use tree::{fit_tree, TreeNode, TreeParams};

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::{augment, FeatureScaler, JobRecord, UserAggregates};

/// Shortest representable runtime in minutes (about one second).
pub const PREDICT_CLAMP_MIN: f64 = 0.017;

/// Largest representable runtime in minutes (one day).
pub const PREDICT_CLAMP_MAX: f64 = 1440.0;

/// The "safe prediction" correction: one hour added to every estimate
/// so that almost no job is underestimated. Models default to a margin
/// of zero; scheduling configs typically opt into this value.
pub const SAFE_MARGIN_MINUTES: f64 = 60.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Tree,
    Forest,
    Boosted,
    Network,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [
        ModelKind::Tree,
        ModelKind::Forest,
        ModelKind::Boosted,
        ModelKind::Network,
    ];
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tree" => Ok(ModelKind::Tree),
            "forest" => Ok(ModelKind::Forest),
            "boosted" => Ok(ModelKind::Boosted),
            "network" => Ok(ModelKind::Network),
            other => Err(Error::validation(format!(
                "unknown model kind '{other}' (expected tree, forest, boosted or network)"
            ))),
        }
    }
}

impl std::fmt::Display for ModelKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ModelKind::Tree => write!(f, "tree"),
            ModelKind::Forest => write!(f, "forest"),
            ModelKind::Boosted => write!(f, "boosted"),
            ModelKind::Network => write!(f, "network"),
        }
    }
}

/// A fitted estimator of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Estimator {
    Tree { params: TreeParams, root: TreeNode },
    Forest(Forest),
    Boosted(BoostedEnsemble),
    Network(Network),
}

impl Estimator {
    pub fn predict(&self, features: &[f64]) -> f64 {
        match self {
            Estimator::Tree { root, .. } => root.predict(features),
            Estimator::Forest(f) => f.predict(features),
            Estimator::Boosted(b) => b.predict(features),
            Estimator::Network(n) => n.predict(features),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            Estimator::Tree { .. } => ModelKind::Tree,
            Estimator::Forest(_) => ModelKind::Forest,
            Estimator::Boosted(_) => ModelKind::Boosted,
            Estimator::Network(_) => ModelKind::Network,
        }
    }
}

/// A complete prediction pipeline for job runtimes (minutes).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuntimeModel {
    pub estimator: Estimator,
    /// Fitted on the training features; applied only when the estimator
    /// is a network.
    pub scaler: FeatureScaler,
    /// Per-user request means for feature augmentation; None means the
    /// model was trained on base features only.
    pub aggregates: Option<UserAggregates>,
    pub safety_margin_minutes: f64,
    pub clamp_min_minutes: f64,
    pub clamp_max_minutes: f64,
}

impl RuntimeModel {
    /// The feature vector this model scores: augmented when aggregates
    /// are present, base otherwise, scaled only for the network.
    pub fn features(&self, record: &JobRecord) -> Vec<f64> {
        let raw = match &self.aggregates {
            Some(aggs) => augment(record, aggs),
            None => record.base_features(),
        };
        if matches!(self.estimator, Estimator::Network(_)) {
            self.scaler.transform_row(&raw)
        } else {
            raw
        }
    }

    /// Predicted runtime in minutes: estimate + safety margin, clamped
    /// to the representable range.
    pub fn predict(&self, record: &JobRecord) -> f64 {
        let est = self.estimator.predict(&self.features(record));
        (est + self.safety_margin_minutes).clamp(self.clamp_min_minutes, self.clamp_max_minutes)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<RuntimeModel> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path)?;
        serde_json::to_writer(BufWriter::new(file), self)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<RuntimeModel> {
        let file = File::open(path)?;
        Ok(serde_json::from_reader(BufReader::new(file))?)
    }
}
