//! Deterministic discrete-event replay of a workload on a homogeneous
//! platform.
//!
//! The platform is a single pool of identical resources. Jobs demand a
//! resource count and occupy it for their actual runtime; the scheduler
//! plans with the requested time, which under DIWS comes from a fitted
//! runtime model instead of the user's limit. All times are seconds.

mod engine;
mod metrics;
mod policies;

pub use engine::{simulate, ReservationRecord, SimOptions, SimulationOutcome};
pub use metrics::{
    outcomes_to_csv, schedule_metrics, write_outcomes_csv, ScheduleMetrics, OUTCOME_HEADER,
    WAIT_BUCKET_LABELS, WAIT_BUCKET_SECONDS,
};
pub use policies::{
    policy_step_diws, policy_step_easy, policy_step_fcfs, PolicyDecision, QueuedJob, Reservation,
    RunningJob,
};

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predict::RuntimeModel;
use crate::trace::WorkloadTrace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Platform {
    /// Total identical compute resources.
    pub capacity: u64,
}

/// One job as the simulator sees it. Times in seconds, demand in
/// resources.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimJob {
    pub job_id: u64,
    pub submit_time: f64,
    pub demand: u64,
    /// Walltime the scheduler plans with.
    pub requested_time: f64,
    pub actual_runtime: f64,
}

/// What one job experienced in a finished schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JobOutcome {
    pub job_id: u64,
    pub submit_time: f64,
    pub start_time: f64,
    pub end_time: f64,
    pub waiting_time: f64,
    pub turnaround_time: f64,
    /// turnaround / execution time; 1 means the job never waited.
    pub slowdown: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    Fcfs,
    Easy,
    Diws,
}

impl FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "fcfs" => Ok(PolicyKind::Fcfs),
            "easy" => Ok(PolicyKind::Easy),
            "diws" => Ok(PolicyKind::Diws),
            other => Err(Error::validation(format!(
                "unknown policy '{other}' (expected fcfs, easy or diws)"
            ))),
        }
    }
}

impl std::fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            PolicyKind::Fcfs => "fcfs",
            PolicyKind::Easy => "easy",
            PolicyKind::Diws => "diws",
        };
        f.write_str(s)
    }
}

/// A scheduling policy. DIWS carries the model its requested times come
/// from.
#[derive(Debug, Clone)]
pub enum Policy {
    Fcfs,
    Easy,
    Diws(Box<RuntimeModel>),
}

impl Policy {
    pub fn kind(&self) -> PolicyKind {
        match self {
            Policy::Fcfs => PolicyKind::Fcfs,
            Policy::Easy => PolicyKind::Easy,
            Policy::Diws(_) => PolicyKind::Diws,
        }
    }

    /// The walltime (minutes) the scheduler will plan with for a job.
    fn requested_minutes(&self, record: &crate::trace::JobRecord) -> f64 {
        match self {
            Policy::Fcfs | Policy::Easy => record.time_limit,
            Policy::Diws(model) => model.predict(record),
        }
    }
}

/// Maps trace records onto simulator jobs under a policy: demand is the
/// requested core count (clamped to the platform, with a warning),
/// requested and actual times convert from minutes to seconds. The
/// result preserves the trace's submit order.
pub fn to_sim_jobs(
    trace: &WorkloadTrace,
    platform: Platform,
    policy: &Policy,
) -> Result<(Vec<SimJob>, Vec<String>)> {
    if platform.capacity == 0 {
        return Err(Error::validation("platform capacity must be positive"));
    }
    let mut warnings = Vec::new();
    let jobs = trace
        .jobs
        .iter()
        .map(|record| {
            let mut demand = u64::from(record.cpu);
            if demand > platform.capacity {
                warnings.push(format!(
                    "job {} demands {} resources, clamped to platform capacity {}",
                    record.job_id, demand, platform.capacity
                ));
                demand = platform.capacity;
            }
            SimJob {
                job_id: record.job_id,
                submit_time: record.submit_time,
                demand,
                requested_time: policy.requested_minutes(record) * 60.0,
                actual_runtime: record.run_time * 60.0,
            }
        })
        .collect();
    Ok((jobs, warnings))
}
