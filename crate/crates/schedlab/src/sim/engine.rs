//! The discrete-event loop.
//!
//! Events are job submissions and completions. At every distinct event
//! time the engine first applies all completions, then all submissions,
//! then runs exactly one policy pass; ties inside a class break by job
//! id. The outcome is a pure function of (jobs, platform, policy); only
//! the measured scheduling wall-clock varies between runs.

use std::collections::{BinaryHeap, HashSet};
use std::time::{Duration, Instant};

use super::policies::{
    policy_step_diws, policy_step_easy, policy_step_fcfs, QueuedJob, RunningJob,
};
use super::{schedule_metrics, JobOutcome, Platform, Policy, PolicyKind, ScheduleMetrics, SimJob};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SimOptions {
    /// Terminate jobs at their requested time instead of letting them
    /// run to their actual runtime.
    pub kill_at_walltime: bool,
}

/// One reservation as computed during a policy pass, kept for auditing
/// the head-protection guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReservationRecord {
    pub job_id: u64,
    pub computed_at: f64,
    pub reserved_start: f64,
}

#[derive(Debug, Clone)]
pub struct SimulationOutcome {
    /// One entry per job, sorted by job id.
    pub outcomes: Vec<JobOutcome>,
    pub metrics: ScheduleMetrics,
    pub reservations: Vec<ReservationRecord>,
}

/// Heap key; completions sort before submissions at equal times.
#[derive(Debug, Clone, Copy, PartialEq)]
struct EventKey {
    time: f64,
    class: u8,
    id: u64,
}

const COMPLETION: u8 = 0;
const SUBMISSION: u8 = 1;

impl Eq for EventKey {}

impl Ord for EventKey {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.class.cmp(&other.class))
            .then(self.id.cmp(&other.id))
    }
}

impl PartialOrd for EventKey {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

fn validate(jobs: &[SimJob], platform: Platform) -> Result<()> {
    if platform.capacity == 0 {
        return Err(Error::validation("platform capacity must be positive"));
    }
    if jobs.is_empty() {
        return Err(Error::validation("no jobs to simulate"));
    }
    let mut ids = HashSet::with_capacity(jobs.len());
    for job in jobs {
        if !ids.insert(job.job_id) {
            return Err(Error::validation(format!(
                "duplicate job id {}",
                job.job_id
            )));
        }
        if job.demand == 0 || job.demand > platform.capacity {
            return Err(Error::validation(format!(
                "job {} demand {} outside platform capacity {}",
                job.job_id, job.demand, platform.capacity
            )));
        }
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(job.actual_runtime) || !positive(job.requested_time) {
            return Err(Error::validation(format!(
                "job {} has non-positive runtime or request",
                job.job_id
            )));
        }
        if !job.submit_time.is_finite() || job.submit_time < 0.0 {
            return Err(Error::validation(format!(
                "job {} has invalid submit time {}",
                job.job_id, job.submit_time
            )));
        }
    }
    for pair in jobs.windows(2) {
        if pair[0].submit_time > pair[1].submit_time {
            return Err(Error::validation("jobs must be sorted by submit time"));
        }
    }
    Ok(())
}

/// Replays the jobs under the policy and aggregates the schedule.
pub fn simulate(
    jobs: &[SimJob],
    platform: Platform,
    policy: &Policy,
    options: SimOptions,
) -> Result<SimulationOutcome> {
    validate(jobs, platform)?;

    let mut heap: BinaryHeap<std::cmp::Reverse<EventKey>> = jobs
        .iter()
        .enumerate()
        .map(|(i, j)| {
            std::cmp::Reverse(EventKey {
                time: j.submit_time,
                class: SUBMISSION,
                id: i as u64,
            })
        })
        .collect();

    let mut queue: Vec<QueuedJob> = Vec::new();
    let mut running: Vec<RunningJob> = Vec::new();
    let mut free = platform.capacity;
    let mut outcomes: Vec<JobOutcome> = Vec::with_capacity(jobs.len());
    let mut reservations: Vec<ReservationRecord> = Vec::new();
    let mut sched_clock = Duration::ZERO;
    // engine-private view of each queued job's hidden actual runtime
    let mut actual_by_id: std::collections::HashMap<u64, f64> = std::collections::HashMap::new();

    while let Some(&std::cmp::Reverse(next)) = heap.peek() {
        let now = next.time;

        while let Some(&std::cmp::Reverse(key)) = heap.peek() {
            if key.time != now {
                break;
            }
            heap.pop();
            match key.class {
                COMPLETION => {
                    let pos = running
                        .iter()
                        .position(|r| r.job_id == key.id)
                        .expect("completion event for a job that is not running");
                    let done = running.swap_remove(pos);
                    free += done.demand;
                }
                _ => {
                    let job = &jobs[key.id as usize];
                    queue.push(QueuedJob {
                        job_id: job.job_id,
                        submit_time: job.submit_time,
                        demand: job.demand,
                        requested_time: job.requested_time,
                    });
                    actual_by_id.insert(job.job_id, job.actual_runtime);
                }
            }
        }

        let stamp = Instant::now();
        let decision = match policy.kind() {
            PolicyKind::Fcfs => policy_step_fcfs(&queue, free, now),
            PolicyKind::Easy => policy_step_easy(&queue, &running, free, now),
            PolicyKind::Diws => policy_step_diws(&queue, &running, free, now),
        };
        sched_clock += stamp.elapsed();

        if let Some(res) = decision.reservation {
            reservations.push(ReservationRecord {
                job_id: res.job_id,
                computed_at: now,
                reserved_start: res.start,
            });
        }

        for job_id in decision.starts {
            let pos = queue
                .iter()
                .position(|q| q.job_id == job_id)
                .expect("policy started a job that is not queued");
            let q = queue.remove(pos);
            let actual = actual_by_id[&job_id];
            let duration = if options.kill_at_walltime {
                q.requested_time.min(actual)
            } else {
                actual
            };
            let end = now + duration;

            free -= q.demand;
            running.push(RunningJob {
                job_id,
                demand: q.demand,
                expected_end: now + q.requested_time,
            });
            heap.push(std::cmp::Reverse(EventKey {
                time: end,
                class: COMPLETION,
                id: job_id,
            }));
            outcomes.push(JobOutcome {
                job_id,
                submit_time: q.submit_time,
                start_time: now,
                end_time: end,
                waiting_time: now - q.submit_time,
                turnaround_time: end - q.submit_time,
                slowdown: (end - q.submit_time) / duration,
            });
        }
    }

    if !queue.is_empty() || outcomes.len() != jobs.len() {
        return Err(Error::runtime(format!(
            "schedule incomplete: {} of {} jobs finished",
            outcomes.len(),
            jobs.len()
        )));
    }

    outcomes.sort_by_key(|o| o.job_id);
    let metrics = schedule_metrics(&outcomes, sched_clock.as_secs_f64())?;
    Ok(SimulationOutcome {
        outcomes,
        metrics,
        reservations,
    })
}
