//! Aggregate schedule quality and artifact rendering.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::JobOutcome;
use crate::error::{Error, Result};

/// Waiting-time bucket thresholds, seconds: one minute, ten minutes,
/// one hour, six hours, one day.
pub const WAIT_BUCKET_SECONDS: [f64; 5] = [60.0, 600.0, 3600.0, 21600.0, 86400.0];

pub const WAIT_BUCKET_LABELS: [&str; 5] = ["1_minute", "10_minutes", "1_hour", "6_hours", "1_day"];

pub const OUTCOME_HEADER: &str = "job_id,submit,start,end,wait,turnaround,slowdown";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleMetrics {
    /// Completion of the last job minus the first submission, seconds.
    pub makespan: f64,
    /// Wall-clock seconds spent inside policy steps; hardware-
    /// dependent, excluded from reproducibility guarantees.
    pub scheduling_time: f64,
    pub mean_waiting_time: f64,
    pub mean_turnaround_time: f64,
    pub mean_slowdown: f64,
    pub max_waiting_time: f64,
    pub max_turnaround_time: f64,
    pub max_slowdown: f64,
    /// Cumulative counts of jobs whose wait is strictly below each
    /// threshold in `WAIT_BUCKET_SECONDS`.
    pub wait_buckets: [u64; 5],
}

impl ScheduleMetrics {
    /// The scalar metrics in report order, with their document keys.
    pub fn rows(&self) -> [(&'static str, f64); 8] {
        [
            ("makespan", self.makespan),
            ("scheduling_time", self.scheduling_time),
            ("mean_waiting_time", self.mean_waiting_time),
            ("mean_turnaround_time", self.mean_turnaround_time),
            ("mean_slowdown", self.mean_slowdown),
            ("max_waiting_time", self.max_waiting_time),
            ("max_turnaround_time", self.max_turnaround_time),
            ("max_slowdown", self.max_slowdown),
        ]
    }

    /// Flat key-value rendering, 4 decimal places.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.rows() {
            out.push_str(&format!("{key} = {value:.4}\n"));
        }
        for (label, count) in WAIT_BUCKET_LABELS.iter().zip(self.wait_buckets) {
            out.push_str(&format!("waits_under_{label} = {count}\n"));
        }
        out
    }
}

/// Aggregates per-job outcomes; `scheduling_time` is the accumulated
/// wall clock the engine measured around policy steps.
pub fn schedule_metrics(outcomes: &[JobOutcome], scheduling_time: f64) -> Result<ScheduleMetrics> {
    if outcomes.is_empty() {
        return Err(Error::validation("cannot aggregate an empty schedule"));
    }
    let n = outcomes.len() as f64;
    let first_submit = outcomes
        .iter()
        .map(|o| o.submit_time)
        .fold(f64::INFINITY, f64::min);
    let last_end = outcomes
        .iter()
        .map(|o| o.end_time)
        .fold(f64::NEG_INFINITY, f64::max);

    let sum_max = |field: fn(&JobOutcome) -> f64| {
        let sum: f64 = outcomes.iter().map(field).sum();
        let max = outcomes.iter().map(field).fold(f64::NEG_INFINITY, f64::max);
        (sum / n, max)
    };
    let (mean_waiting_time, max_waiting_time) = sum_max(|o| o.waiting_time);
    let (mean_turnaround_time, max_turnaround_time) = sum_max(|o| o.turnaround_time);
    let (mean_slowdown, max_slowdown) = sum_max(|o| o.slowdown);

    let mut wait_buckets = [0u64; 5];
    for outcome in outcomes {
        for (slot, threshold) in wait_buckets.iter_mut().zip(WAIT_BUCKET_SECONDS) {
            if outcome.waiting_time < threshold {
                *slot += 1;
            }
        }
    }

    Ok(ScheduleMetrics {
        makespan: last_end - first_submit,
        scheduling_time,
        mean_waiting_time,
        mean_turnaround_time,
        mean_slowdown,
        max_waiting_time,
        max_turnaround_time,
        max_slowdown,
        wait_buckets,
    })
}

/// Writes per-job outcomes as CSV. Floats use the shortest
/// representation that round-trips.
pub fn write_outcomes_csv<W: Write>(outcomes: &[JobOutcome], mut writer: W) -> Result<()> {
    writeln!(writer, "{OUTCOME_HEADER}")?;
    for o in outcomes {
        writeln!(
            writer,
            "{},{},{},{},{},{},{}",
            o.job_id,
            o.submit_time,
            o.start_time,
            o.end_time,
            o.waiting_time,
            o.turnaround_time,
            o.slowdown
        )?;
    }
    Ok(())
}

pub fn outcomes_to_csv(outcomes: &[JobOutcome]) -> String {
    let mut buf = Vec::new();
    write_outcomes_csv(outcomes, &mut buf).expect("write to Vec cannot fail");
    String::from_utf8(buf).expect("outcome CSV is UTF-8")
}
