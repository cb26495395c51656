//! Experiment configuration.
//!
//! Experiments are described by a flat `key = value` file plus
//! command-line overrides. Every key has a default, so all commands run
//! without a config file; `--set key=value` overrides single keys and
//! `--seed` overrides the master seed. Unknown keys are rejected so
//! typos fail loudly instead of silently running the default.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::predict::{BoostedParams, ForestParams, ModelKind, NetworkParams, TreeParams};
use crate::sim::PolicyKind;
use crate::trace::SyntheticSpec;

/// How a trace is partitioned into training and held-out jobs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    /// Seeded uniform sample of `test_fraction` of the jobs.
    Random,
    /// The last `test_size` jobs by submission order.
    Temporal,
    /// Jobs submitted within 24 hours of the last submission.
    Window24h,
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "random" => Ok(SplitMode::Random),
            "temporal" => Ok(SplitMode::Temporal),
            "window24h" => Ok(SplitMode::Window24h),
            other => Err(Error::validation(format!(
                "unknown split mode '{other}' (expected random, temporal or window24h)"
            ))),
        }
    }
}

/// A fully resolved experiment description.
///
/// All randomness in a run derives from `seed`: the synthetic generator
/// uses it directly, the random splitter, forest and network use fixed
/// offsets of it, so one number reproduces the entire pipeline.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Trace to load; `None` means generate synthetically.
    pub trace_file: Option<PathBuf>,
    pub synth: SyntheticSpec,
    pub split: SplitMode,
    pub test_fraction: f64,
    /// Explicit temporal test-set size; defaults to the cardinality a
    /// random split of `test_fraction` would produce.
    pub test_size: Option<usize>,
    pub model: ModelKind,
    /// Extend the base features with per-user request means.
    pub augment: bool,
    pub safety_margin_minutes: f64,
    pub tree: TreeParams,
    pub forest: ForestParams,
    pub boosted: BoostedParams,
    pub network: NetworkParams,
    /// Where `train` persists the model and the other commands load it.
    pub model_file: Option<PathBuf>,
    pub capacity: u64,
    pub policy: PolicyKind,
    pub policies: Vec<PolicyKind>,
    pub kill_at_walltime: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let seed = 1;
        let mut config = ExperimentConfig {
            seed,
            trace_file: None,
            synth: SyntheticSpec::default(),
            split: SplitMode::Random,
            test_fraction: 0.3,
            test_size: None,
            model: ModelKind::Tree,
            augment: true,
            safety_margin_minutes: 0.0,
            tree: TreeParams::default(),
            forest: ForestParams::default(),
            boosted: BoostedParams::default(),
            network: NetworkParams::default(),
            model_file: None,
            capacity: 512,
            policy: PolicyKind::Easy,
            policies: vec![PolicyKind::Easy, PolicyKind::Diws],
            kill_at_walltime: false,
        };
        config.reseed(seed);
        config
    }
}

impl ExperimentConfig {
    /// Builds a config from an optional file, `--set` overrides applied
    /// on top, and the `--seed` flag on top of both.
    pub fn load(
        config_path: Option<&Path>,
        overrides: &[String],
        seed_flag: Option<u64>,
    ) -> Result<ExperimentConfig> {
        let mut pairs = BTreeMap::new();
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::validation(format!("cannot read config file '{}': {e}", path.display()))
            })?;
            parse_kv_lines(&text, &mut pairs)?;
        }
        for item in overrides {
            let (key, value) = item.split_once('=').ok_or_else(|| {
                Error::validation(format!("--set expects key=value, got '{item}'"))
            })?;
            pairs.insert(key.trim().to_string(), value.trim().to_string());
        }
        let mut config = ExperimentConfig::from_pairs(pairs)?;
        if let Some(seed) = seed_flag {
            config.reseed(seed);
        }
        Ok(config)
    }

    fn from_pairs(pairs: BTreeMap<String, String>) -> Result<ExperimentConfig> {
        let mut kv = KvMap(pairs);
        let mut config = ExperimentConfig::default();

        if let Some(seed) = kv.take_parse("seed")? {
            config.reseed(seed);
        }
        config.trace_file = kv.take_path("trace_file");
        kv.set_parse("n_jobs", &mut config.synth.n_jobs)?;
        kv.set_parse("lognormal_mu", &mut config.synth.lognormal_mu)?;
        kv.set_parse("lognormal_sigma", &mut config.synth.lognormal_sigma)?;
        kv.set_parse("inflation_min", &mut config.synth.inflation_min)?;
        kv.set_parse(
            "underestimate_fraction",
            &mut config.synth.underestimate_fraction,
        )?;
        kv.set_parse("n_users", &mut config.synth.n_users)?;
        kv.set_parse(
            "arrival_rate_per_hour",
            &mut config.synth.arrival_rate_per_hour,
        )?;
        kv.set_parse(
            "walltime_cap_minutes",
            &mut config.synth.walltime_cap_minutes,
        )?;

        kv.set_parse("split", &mut config.split)?;
        kv.set_parse("test_fraction", &mut config.test_fraction)?;
        config.test_size = kv.take_parse("test_size")?;

        kv.set_parse("model", &mut config.model)?;
        kv.set_parse("augment", &mut config.augment)?;
        kv.set_parse("safety_margin_minutes", &mut config.safety_margin_minutes)?;

        kv.set_parse("tree_max_depth", &mut config.tree.max_depth)?;
        kv.set_parse("tree_min_samples_leaf", &mut config.tree.min_samples_leaf)?;
        kv.set_parse("tree_min_samples_split", &mut config.tree.min_samples_split)?;

        kv.set_parse("forest_n_trees", &mut config.forest.n_trees)?;
        kv.set_parse("forest_max_depth", &mut config.forest.max_depth)?;
        kv.set_parse(
            "forest_min_samples_leaf",
            &mut config.forest.min_samples_leaf,
        )?;
        kv.set_parse(
            "forest_min_samples_split",
            &mut config.forest.min_samples_split,
        )?;
        if let Some(m) = kv.take_parse("forest_features_per_split")? {
            config.forest.features_per_split = Some(m);
        }
        kv.set_parse("forest_bootstrap", &mut config.forest.bootstrap)?;

        kv.set_parse("boost_n_stages", &mut config.boosted.n_stages)?;
        kv.set_parse("boost_learning_rate", &mut config.boosted.learning_rate)?;
        kv.set_parse("boost_max_depth", &mut config.boosted.max_depth)?;
        kv.set_parse(
            "boost_min_samples_leaf",
            &mut config.boosted.min_samples_leaf,
        )?;
        kv.set_parse(
            "boost_min_samples_split",
            &mut config.boosted.min_samples_split,
        )?;

        if let Some(raw) = kv.take_string("net_hidden") {
            config.network.hidden = parse_list(&raw, "net_hidden")?;
        }
        kv.set_parse("net_dropout", &mut config.network.dropout)?;
        kv.set_parse("net_huber_delta", &mut config.network.huber_delta)?;
        kv.set_parse("net_epochs", &mut config.network.epochs)?;
        kv.set_parse("net_batch_size", &mut config.network.batch_size)?;
        kv.set_parse("net_step_size", &mut config.network.step_size)?;

        config.model_file = kv.take_path("model_file");
        kv.set_parse("capacity", &mut config.capacity)?;
        kv.set_parse("policy", &mut config.policy)?;
        if let Some(raw) = kv.take_string("policies") {
            config.policies = parse_list(&raw, "policies")?;
        }
        kv.set_parse("kill_at_walltime", &mut config.kill_at_walltime)?;

        kv.reject_leftovers()?;
        config.validate()?;
        Ok(config)
    }

    /// Installs a new master seed and rederives the per-stage seeds.
    /// The offsets keep the generator, splitter, forest and network on
    /// distinct deterministic streams.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.synth.seed = seed;
        self.forest.seed = seed.wrapping_add(2);
        self.network.seed = seed.wrapping_add(3);
    }

    /// Seed of the random train/test split.
    pub fn split_seed(&self) -> u64 {
        self.seed.wrapping_add(1)
    }

    fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::validation("capacity must be positive"));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::validation(format!(
                "test_fraction must be in (0,1), got {}",
                self.test_fraction
            )));
        }
        if !(self.safety_margin_minutes >= 0.0 && self.safety_margin_minutes.is_finite()) {
            return Err(Error::validation(format!(
                "safety_margin_minutes must be non-negative, got {}",
                self.safety_margin_minutes
            )));
        }
        if self.policies.is_empty() {
            return Err(Error::validation("policies must name at least one policy"));
        }
        Ok(())
    }
}

fn parse_kv_lines(text: &str, pairs: &mut BTreeMap<String, String>) -> Result<()> {
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
            line: idx + 1,
            column: "config".to_string(),
            message: format!("expected 'key = value', got '{line}'"),
        })?;
        pairs.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(())
}

fn parse_list<T: FromStr>(raw: &str, key: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    raw.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<T>()
                .map_err(|e| Error::validation(format!("config key '{key}': {e}")))
        })
        .collect()
}

/// Key-value pool that records which keys were consumed.
struct KvMap(BTreeMap<String, String>);

impl KvMap {
    fn take_string(&mut self, key: &str) -> Option<String> {
        self.0.remove(key)
    }

    fn take_path(&mut self, key: &str) -> Option<PathBuf> {
        self.take_string(key).map(PathBuf::from)
    }

    fn take_parse<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.take_string(key) {
            None => Ok(None),
            Some(raw) => raw.parse::<T>().map(Some).map_err(|e| {
                Error::validation(format!("config key '{key}': invalid value '{raw}': {e}"))
            }),
        }
    }

    /// Overwrites `slot` when the key is present.
    fn set_parse<T: FromStr>(&mut self, key: &str, slot: &mut T) -> Result<()>
    where
        T::Err: std::fmt::Display,
    {
        if let Some(value) = self.take_parse(key)? {
            *slot = value;
        }
        Ok(())
    }

    fn reject_leftovers(&self) -> Result<()> {
        if self.0.is_empty() {
            return Ok(());
        }
        let keys: Vec<&str> = self.0.keys().map(String::as_str).collect();
        Err(Error::validation(format!(
            "unknown config key(s): {}",
            keys.join(", ")
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_documented_values() {
        let config = ExperimentConfig::default();
        assert_eq!(config.seed, 1);
        assert_eq!(config.synth.n_jobs, 1000);
        assert_eq!(config.split, SplitMode::Random);
        assert_eq!(config.test_fraction, 0.3);
        assert_eq!(config.model, ModelKind::Tree);
        assert!(config.augment);
        assert_eq!(config.safety_margin_minutes, 0.0);
        assert_eq!(config.capacity, 512);
        assert_eq!(config.policies, vec![PolicyKind::Easy, PolicyKind::Diws]);
        assert!(!config.kill_at_walltime);
    }

    #[test]
    fn file_then_set_then_seed_flag_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.conf");
        std::fs::write(&path, "seed = 7\nn_jobs = 50\n# comment\n\ncapacity = 8\n").unwrap();
        let config =
            ExperimentConfig::load(Some(&path), &["n_jobs=60".to_string()], Some(99)).unwrap();
        assert_eq!(config.synth.n_jobs, 60, "--set beats the file");
        assert_eq!(config.capacity, 8, "file beats the default");
        assert_eq!(config.seed, 99, "--seed beats everything");
        assert_eq!(config.synth.seed, 99);
        assert_eq!(config.forest.seed, 101);
        assert_eq!(config.network.seed, 102);
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = ExperimentConfig::load(None, &["njobs=50".to_string()], None).unwrap_err();
        assert!(
            err.to_string().contains("njobs"),
            "message names the key: {err}"
        );
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn malformed_value_names_the_key() {
        let err = ExperimentConfig::load(None, &["capacity=many".to_string()], None).unwrap_err();
        assert!(err.to_string().contains("capacity"), "{err}");
    }

    #[test]
    fn malformed_set_without_equals_is_rejected() {
        let err = ExperimentConfig::load(None, &["capacity".to_string()], None).unwrap_err();
        assert!(err.to_string().contains("key=value"), "{err}");
    }

    #[test]
    fn list_keys_parse() {
        let config = ExperimentConfig::load(
            None,
            &[
                "net_hidden=8, 4".to_string(),
                "policies=fcfs,easy,diws".to_string(),
            ],
            None,
        )
        .unwrap();
        assert_eq!(config.network.hidden, vec![8, 4]);
        assert_eq!(
            config.policies,
            vec![PolicyKind::Fcfs, PolicyKind::Easy, PolicyKind::Diws]
        );
    }

    #[test]
    fn unknown_model_kind_lists_valid_kinds() {
        let err = ExperimentConfig::load(None, &["model=svm".to_string()], None).unwrap_err();
        let msg = err.to_string();
        for kind in ["tree", "forest", "boosted", "network"] {
            assert!(msg.contains(kind), "missing '{kind}' in: {msg}");
        }
    }

    #[test]
    fn degenerate_values_are_rejected() {
        for bad in [
            "capacity=0",
            "test_fraction=1.0",
            "safety_margin_minutes=-5",
            "policies=",
        ] {
            let err = ExperimentConfig::load(None, &[bad.to_string()], None).unwrap_err();
            assert_eq!(err.exit_code(), 1, "{bad} must be a validation error");
        }
    }

    #[test]
    fn missing_config_file_is_a_validation_error() {
        let err = ExperimentConfig::load(Some(Path::new("/nonexistent/exp.conf")), &[], None)
            .unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn config_file_rejects_garbage_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("exp.conf");
        std::fs::write(&path, "seed\n").unwrap();
        let err = ExperimentConfig::load(Some(&path), &[], None).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }
}
