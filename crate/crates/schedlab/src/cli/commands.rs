//! The five experiment commands.
//!
//! Each command reads an [`ExperimentConfig`], works purely from it,
//! and writes its artifacts under the output directory. Everything a
//! command does is a function of config + seed, so reruns reproduce
//! output files byte for byte (the `scheduling_time` metric, a wall
//! clock measurement, is the one exception).

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::eval::prediction_report;
use crate::predict::{
    fit_boosted, fit_forest, fit_network, fit_tree, Estimator, ModelKind, RuntimeModel,
    PREDICT_CLAMP_MAX, PREDICT_CLAMP_MIN,
};
use crate::sim::{
    outcomes_to_csv, simulate, to_sim_jobs, Platform, Policy, PolicyKind, ScheduleMetrics,
    SimOptions,
};
use crate::trace::{
    augment, fit_user_aggregates, generate_synthetic_trace, parse_trace, random_test_count,
    split_random, split_temporal, trace_to_string, FeatureScaler, WorkloadTrace,
};

use super::config::{ExperimentConfig, SplitMode};

/// Length of the trailing scheduling window under `split = window24h`.
pub const SCHEDULING_WINDOW_SECONDS: f64 = 86_400.0;

/// What a command reports back to `main`: lines for stdout and the
/// files it wrote.
#[derive(Debug, Default)]
pub struct CommandOutput {
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

impl CommandOutput {
    fn wrote(&mut self, path: PathBuf) {
        self.files.push(path);
    }
}

fn write_artifact(
    out_dir: &Path,
    name: &str,
    content: &str,
    output: &mut CommandOutput,
) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join(name);
    fs::write(&path, content)?;
    output.wrote(path.clone());
    Ok(path)
}

/// Loads the trace named by the config, or generates one.
fn load_trace(config: &ExperimentConfig) -> Result<WorkloadTrace> {
    match &config.trace_file {
        Some(path) => {
            let file = fs::File::open(path).map_err(|e| {
                Error::validation(format!("cannot open trace file '{}': {e}", path.display()))
            })?;
            parse_trace(file)
        }
        None => generate_synthetic_trace(&config.synth),
    }
}

/// Partitions a trace per the configured split mode. The second half is
/// the held-out set: scored by `train`, replayed by `compare`.
fn split_trace(
    config: &ExperimentConfig,
    trace: &WorkloadTrace,
) -> Result<(WorkloadTrace, WorkloadTrace)> {
    match config.split {
        SplitMode::Random => split_random(trace, config.test_fraction, config.split_seed()),
        SplitMode::Temporal => {
            let size = config
                .test_size
                .unwrap_or_else(|| random_test_count(trace.len(), config.test_fraction));
            split_temporal(trace, size)
        }
        SplitMode::Window24h => split_last_window(trace, SCHEDULING_WINDOW_SECONDS),
    }
}

/// Splits off the jobs submitted within `window_seconds` of the last
/// submission: the scheduling window. Everything earlier is history.
fn split_last_window(
    trace: &WorkloadTrace,
    window_seconds: f64,
) -> Result<(WorkloadTrace, WorkloadTrace)> {
    if trace.is_empty() {
        return Err(Error::validation("cannot split an empty trace"));
    }
    let last = trace
        .jobs
        .iter()
        .map(|j| j.submit_time)
        .fold(f64::NEG_INFINITY, f64::max);
    let cutoff = last - window_seconds;
    let (window, history): (Vec<_>, Vec<_>) = trace
        .jobs
        .iter()
        .cloned()
        .partition(|j| j.submit_time > cutoff);
    if history.is_empty() {
        return Err(Error::validation(
            "the last-24h window covers the whole trace; nothing left to train on",
        ));
    }
    debug_assert!(
        !window.is_empty(),
        "the last submission is always inside the window"
    );
    Ok((
        WorkloadTrace {
            jobs: history,
            epoch: trace.epoch,
        },
        WorkloadTrace {
            jobs: window,
            epoch: trace.epoch,
        },
    ))
}

/// Fits the configured model family on a training trace and wraps it
/// into the full prediction pipeline.
fn fit_model(config: &ExperimentConfig, train: &WorkloadTrace) -> Result<RuntimeModel> {
    if train.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    let aggregates = if config.augment {
        Some(fit_user_aggregates(train)?)
    } else {
        None
    };
    let features: Vec<Vec<f64>> = match &aggregates {
        Some(aggs) => train.jobs.iter().map(|j| augment(j, aggs)).collect(),
        None => train.base_feature_matrix(),
    };
    let targets = train.targets();
    let scaler = FeatureScaler::fit(&features)?;
    let estimator = match config.model {
        ModelKind::Tree => Estimator::Tree {
            params: config.tree.clone(),
            root: fit_tree(&features, &targets, &config.tree)?,
        },
        ModelKind::Forest => Estimator::Forest(fit_forest(&features, &targets, &config.forest)?),
        ModelKind::Boosted => {
            Estimator::Boosted(fit_boosted(&features, &targets, &config.boosted)?)
        }
        ModelKind::Network => {
            let scaled = scaler.transform(&features);
            Estimator::Network(fit_network(&scaled, &targets, &config.network)?)
        }
    };
    Ok(RuntimeModel {
        estimator,
        scaler,
        aggregates,
        safety_margin_minutes: config.safety_margin_minutes,
        clamp_min_minutes: PREDICT_CLAMP_MIN,
        clamp_max_minutes: PREDICT_CLAMP_MAX,
    })
}

fn load_model(path: &Path) -> Result<RuntimeModel> {
    if !path.exists() {
        return Err(Error::validation(format!(
            "model file '{}' does not exist",
            path.display()
        )));
    }
    RuntimeModel::load(path)
}

/// Renders a prediction report with its provenance header.
fn report_document(
    model: &RuntimeModel,
    scored: &str,
    counts: &[(&str, usize)],
    report_body: &str,
) -> String {
    let mut text = format!("model = {}\nscored = {}\n", model.estimator.kind(), scored);
    for (name, value) in counts {
        text.push_str(&format!("{name} = {value}\n"));
    }
    text.push_str(report_body);
    text
}

/// Scores a model on every job of a trace.
fn score(model: &RuntimeModel, trace: &WorkloadTrace) -> Result<String> {
    let predictions: Vec<f64> = trace.jobs.iter().map(|j| model.predict(j)).collect();
    let actuals = trace.targets();
    let limits: Vec<f64> = trace.jobs.iter().map(|j| j.time_limit).collect();
    Ok(prediction_report(&predictions, &actuals, &limits)?.to_kv_string())
}

/// Generates a synthetic trace and writes it as `trace.csv`.
pub fn cmd_generate(config: &ExperimentConfig, out_dir: &Path) -> Result<CommandOutput> {
    let trace = generate_synthetic_trace(&config.synth)?;
    let mut output = CommandOutput::default();
    let path = write_artifact(out_dir, "trace.csv", &trace_to_string(&trace), &mut output)?;
    output.stdout = format!(
        "generated {} jobs (seed {}) -> {}\n",
        trace.len(),
        config.synth.seed,
        path.display()
    );
    Ok(output)
}

/// Trains the configured model on the training split, persists it, and
/// reports prediction quality on the held-out split.
pub fn cmd_train(config: &ExperimentConfig, out_dir: &Path) -> Result<CommandOutput> {
    let trace = load_trace(config)?;
    let (train, test) = split_trace(config, &trace)?;
    let model = fit_model(config, &train)?;

    let mut output = CommandOutput::default();
    fs::create_dir_all(out_dir)?;
    let model_path = config
        .model_file
        .clone()
        .unwrap_or_else(|| out_dir.join("model.json"));
    if let Some(parent) = model_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    model.save(&model_path)?;
    output.wrote(model_path.clone());

    let scored_as = match config.split {
        SplitMode::Random => "random held-out split",
        SplitMode::Temporal => "temporal held-out split",
        SplitMode::Window24h => "last-24h window",
    };
    let document = report_document(
        &model,
        scored_as,
        &[("train_jobs", train.len()), ("test_jobs", test.len())],
        &score(&model, &test)?,
    );
    write_artifact(out_dir, "prediction_report.txt", &document, &mut output)?;
    output.stdout = format!("{document}model written to {}\n", model_path.display());
    Ok(output)
}

/// Scores a persisted model against a whole trace.
pub fn cmd_evaluate(config: &ExperimentConfig, out_dir: &Path) -> Result<CommandOutput> {
    let model_path = config.model_file.as_deref().ok_or_else(|| {
        Error::validation("evaluate needs model_file = <path> pointing at a trained model")
    })?;
    let model = load_model(model_path)?;
    let trace = load_trace(config)?;
    if trace.is_empty() {
        return Err(Error::validation("trace has no jobs to evaluate"));
    }
    let document = report_document(
        &model,
        "whole trace",
        &[("jobs", trace.len())],
        &score(&model, &trace)?,
    );
    let mut output = CommandOutput::default();
    write_artifact(out_dir, "evaluation_report.txt", &document, &mut output)?;
    output.stdout = document;
    Ok(output)
}

fn policy_for(kind: PolicyKind, model: Option<&RuntimeModel>) -> Result<Policy> {
    match kind {
        PolicyKind::Fcfs => Ok(Policy::Fcfs),
        PolicyKind::Easy => Ok(Policy::Easy),
        PolicyKind::Diws => match model {
            Some(m) => Ok(Policy::Diws(Box::new(m.clone()))),
            None => Err(Error::validation(
                "policy 'diws' needs a trained model: set model_file",
            )),
        },
    }
}

/// Runs one policy over one replay set; writes its metrics and per-job
/// outcome files and returns the metrics for aggregation.
fn run_policy(
    kind: PolicyKind,
    model: Option<&RuntimeModel>,
    replay: &WorkloadTrace,
    config: &ExperimentConfig,
    out_dir: &Path,
    output: &mut CommandOutput,
) -> Result<(ScheduleMetrics, Vec<String>)> {
    let policy = policy_for(kind, model)?;
    let platform = Platform {
        capacity: config.capacity,
    };
    let (jobs, warnings) = to_sim_jobs(replay, platform, &policy)?;
    let options = SimOptions {
        kill_at_walltime: config.kill_at_walltime,
    };
    let outcome = simulate(&jobs, platform, &policy, options)?;
    write_artifact(
        out_dir,
        &format!("metrics_{kind}.txt"),
        &outcome.metrics.to_kv_string(),
        output,
    )?;
    write_artifact(
        out_dir,
        &format!("outcomes_{kind}.csv"),
        &outcomes_to_csv(&outcome.outcomes),
        output,
    )?;
    Ok((outcome.metrics, warnings))
}

/// Replays the whole trace under one policy.
pub fn cmd_simulate(config: &ExperimentConfig, out_dir: &Path) -> Result<CommandOutput> {
    let trace = load_trace(config)?;
    let model = match (config.policy, &config.model_file) {
        (PolicyKind::Diws, Some(path)) => Some(load_model(path)?),
        _ => None,
    };
    let mut output = CommandOutput::default();
    let (metrics, warnings) = run_policy(
        config.policy,
        model.as_ref(),
        &trace,
        config,
        out_dir,
        &mut output,
    )?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    output.stdout = format!(
        "policy = {}\njobs = {}\n{}",
        config.policy,
        trace.len(),
        metrics.to_kv_string()
    );
    Ok(output)
}

/// Metric rows compared across policies. `scheduling_time` is excluded:
/// it measures the host's wall clock, not the schedule.
fn comparable_rows(metrics: &ScheduleMetrics) -> Vec<(String, f64)> {
    let mut rows: Vec<(String, f64)> = metrics
        .rows()
        .iter()
        .filter(|(name, _)| *name != "scheduling_time")
        .map(|(name, value)| (name.to_string(), *value))
        .collect();
    for (label, count) in crate::sim::WAIT_BUCKET_LABELS
        .iter()
        .zip(metrics.wait_buckets)
    {
        rows.push((format!("waits_under_{label}"), count as f64));
    }
    rows
}

/// Percent change of `candidate` relative to `baseline`; negative means
/// the candidate lowered the metric. Equal values compare to exactly
/// zero so a self-comparison never shows rounding noise.
fn improvement_cell(baseline: f64, candidate: f64) -> String {
    if candidate == baseline {
        return "0.0000%".to_string();
    }
    if baseline == 0.0 {
        return "n/a".to_string();
    }
    format!("{:.4}%", 100.0 * (candidate - baseline) / baseline)
}

fn render_comparison(
    policies: &[PolicyKind],
    all_metrics: &[ScheduleMetrics],
    jobs: usize,
) -> String {
    let names: Vec<String> = policies.iter().map(|p| p.to_string()).collect();
    let mut text = format!("policies = {}\njobs = {}\n\n", names.join(", "), jobs);

    let mut header = format!("{:<28}", "metric");
    for name in &names {
        header.push_str(&format!("{name:>16}"));
    }
    for name in names.iter().skip(1) {
        header.push_str(&format!("{:>20}", format!("improvement_{name}")));
    }
    text.push_str(&header);
    text.push('\n');

    let tables: Vec<Vec<(String, f64)>> = all_metrics.iter().map(comparable_rows).collect();
    for (row_idx, (metric, baseline)) in tables[0].iter().enumerate() {
        let mut line = format!("{metric:<28}");
        for table in &tables {
            line.push_str(&format!("{:>16.4}", table[row_idx].1));
        }
        for table in tables.iter().skip(1) {
            line.push_str(&format!(
                "{:>20}",
                improvement_cell(*baseline, table[row_idx].1)
            ));
        }
        text.push_str(&line);
        text.push('\n');
    }
    text
}

/// Replays identical jobs under every configured policy and tabulates
/// the metrics side by side with improvement percentages relative to
/// the first policy.
///
/// When `diws` is configured without a model file, the trace is split
/// per the config, the model trains on the history part, and only the
/// held-out part is replayed, keeping training and scheduling jobs
/// disjoint. Otherwise the whole trace is replayed.
pub fn cmd_compare(config: &ExperimentConfig, out_dir: &Path) -> Result<CommandOutput> {
    if config.policies.len() < 2 {
        return Err(Error::validation(format!(
            "compare needs at least 2 policies, got {}",
            config.policies.len()
        )));
    }
    let trace = load_trace(config)?;
    let needs_training = config.policies.contains(&PolicyKind::Diws) && config.model_file.is_none();
    let (model, replay) = if needs_training {
        let (history, window) = split_trace(config, &trace)?;
        (Some(fit_model(config, &history)?), window)
    } else {
        let model = match &config.model_file {
            Some(path) if config.policies.contains(&PolicyKind::Diws) => Some(load_model(path)?),
            _ => None,
        };
        (model, trace)
    };

    let mut output = CommandOutput::default();
    let mut all_metrics = Vec::with_capacity(config.policies.len());
    let mut all_warnings: Vec<String> = Vec::new();
    for &kind in &config.policies {
        let (metrics, warnings) =
            run_policy(kind, model.as_ref(), &replay, config, out_dir, &mut output)?;
        all_metrics.push(metrics);
        all_warnings.extend(warnings);
    }
    all_warnings.sort();
    all_warnings.dedup();
    for w in &all_warnings {
        eprintln!("warning: {w}");
    }

    let document = render_comparison(&config.policies, &all_metrics, replay.len());
    write_artifact(out_dir, "comparison.txt", &document, &mut output)?;
    output.stdout = document;
    Ok(output)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::JobRecord;

    fn record(job_id: u64, submit: f64) -> JobRecord {
        JobRecord {
            job_id,
            submit_time: submit,
            cpu: 1,
            mem_gb: 1.0,
            nodes: 1,
            gpus: 0,
            user_id: 1,
            qos: 0,
            time_limit: 10.0,
            run_time: 5.0,
        }
    }

    #[test]
    fn window_split_keeps_only_trailing_day() {
        let jobs = vec![record(1, 0.0), record(2, 86_000.0), record(3, 200_000.0)];
        let trace = WorkloadTrace::from_jobs(jobs);
        let (history, window) = split_last_window(&trace, SCHEDULING_WINDOW_SECONDS).unwrap();
        // cutoff = 200000 - 86400 = 113600: jobs 1 and 2 are history
        assert_eq!(
            history.jobs.iter().map(|j| j.job_id).collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert_eq!(
            window.jobs.iter().map(|j| j.job_id).collect::<Vec<_>>(),
            vec![3]
        );
    }

    #[test]
    fn window_split_boundary_is_strict() {
        // exactly 24h before the last submission is history, not window
        let jobs = vec![record(1, 0.0), record(2, 13_600.0), record(3, 100_000.0)];
        let trace = WorkloadTrace::from_jobs(jobs);
        let (history, window) = split_last_window(&trace, SCHEDULING_WINDOW_SECONDS).unwrap();
        assert_eq!(
            history.jobs.iter().map(|j| j.job_id).collect::<Vec<_>>(),
            vec![1, 2]
        );
        assert_eq!(
            window.jobs.iter().map(|j| j.job_id).collect::<Vec<_>>(),
            vec![3]
        );
    }

    #[test]
    fn window_split_rejects_all_window_trace() {
        let jobs = vec![record(1, 0.0), record(2, 50.0)];
        let trace = WorkloadTrace::from_jobs(jobs);
        assert!(split_last_window(&trace, SCHEDULING_WINDOW_SECONDS).is_err());
    }

    #[test]
    fn improvement_cell_conventions() {
        assert_eq!(improvement_cell(200.0, 150.0), "-25.0000%");
        assert_eq!(improvement_cell(200.0, 250.0), "25.0000%");
        assert_eq!(improvement_cell(0.0, 0.0), "0.0000%");
        assert_eq!(improvement_cell(0.0, 3.0), "n/a");
        assert_eq!(improvement_cell(123.456, 123.456), "0.0000%");
    }

    #[test]
    fn diws_without_model_fails_validation() {
        let err = policy_for(PolicyKind::Diws, None).unwrap_err();
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn comparable_rows_exclude_scheduling_time() {
        let metrics = ScheduleMetrics {
            makespan: 900.0,
            scheduling_time: 0.123,
            mean_waiting_time: 200.0,
            mean_turnaround_time: 500.0,
            mean_slowdown: 1.6,
            max_waiting_time: 600.0,
            max_turnaround_time: 900.0,
            max_slowdown: 3.0,
            wait_buckets: [1, 2, 2, 3, 3],
        };
        let rows = comparable_rows(&metrics);
        assert_eq!(rows.len(), 12, "7 scalars + 5 buckets");
        assert!(rows.iter().all(|(name, _)| name != "scheduling_time"));
        assert_eq!(rows[7], ("waits_under_1_minute".to_string(), 1.0));
    }
}
