//! Scheduling policy steps.
//!
//! Each step is a pure function of the queue, the running set, the free
//! resource count and the clock. It decides which queued jobs start now
//! and, for the backfilling policies, where the blocked head job is
//! reserved. The engine owns all state mutation.

/// A waiting job as the policies see it. `requested_time` is what the
/// scheduler plans with (seconds); the actual runtime is deliberately
/// not visible here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueuedJob {
    pub job_id: u64,
    pub submit_time: f64,
    pub demand: u64,
    pub requested_time: f64,
}

/// A running job reduced to what reservations need.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunningJob {
    pub job_id: u64,
    pub demand: u64,
    /// start + requested_time; the job may in fact run longer.
    pub expected_end: f64,
}

/// Planned earliest start of the blocked queue head.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reservation {
    pub job_id: u64,
    pub start: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PolicyDecision {
    /// Jobs to start now, in decision order.
    pub starts: Vec<u64>,
    pub reservation: Option<Reservation>,
}

/// First-come first-served: start jobs strictly in queue order, stop at
/// the first one that does not fit. No job ever skips ahead.
pub fn policy_step_fcfs(queue: &[QueuedJob], free: u64, _now: f64) -> PolicyDecision {
    let mut free = free;
    let mut starts = Vec::new();
    for job in queue {
        if job.demand > free {
            break;
        }
        free -= job.demand;
        starts.push(job.job_id);
    }
    PolicyDecision {
        starts,
        reservation: None,
    }
}

/// EASY backfilling: serve the queue in order until a job does not fit,
/// reserve that head job at the earliest time enough resources are
/// expected free, then let later jobs start now if they cannot delay
/// the reservation: either they are expected to finish by it, or they
/// fit into the resources left over at the reserved start.
pub fn policy_step_easy(
    queue: &[QueuedJob],
    running: &[RunningJob],
    free: u64,
    now: f64,
) -> PolicyDecision {
    let mut free = free;
    let mut starts = Vec::new();
    let mut started: Vec<(f64, u64)> = Vec::new();

    let mut head_pos = 0;
    while head_pos < queue.len() && queue[head_pos].demand <= free {
        let job = &queue[head_pos];
        free -= job.demand;
        starts.push(job.job_id);
        started.push((now + job.requested_time, job.demand));
        head_pos += 1;
    }
    if head_pos >= queue.len() {
        return PolicyDecision {
            starts,
            reservation: None,
        };
    }
    let head = &queue[head_pos];

    // Planned resource releases: running jobs at their expected ends
    // (never before now, even if already overdue), plus jobs started in
    // this very step.
    let mut releases: Vec<(f64, u64)> = running
        .iter()
        .map(|r| (r.expected_end.max(now), r.demand))
        .chain(started)
        .collect();
    releases.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut avail = free;
    let mut reserved = None;
    let mut k = 0;
    while k < releases.len() {
        let t = releases[k].0;
        while k < releases.len() && releases[k].0 == t {
            avail += releases[k].1;
            k += 1;
        }
        if avail >= head.demand {
            reserved = Some((t, avail));
            break;
        }
    }
    let Some((reserved_start, avail_at_start)) = reserved else {
        // head demand exceeds capacity; nothing sensible to plan
        return PolicyDecision {
            starts,
            reservation: None,
        };
    };
    // resources the head will not need at its reserved start
    let mut shadow = avail_at_start - head.demand;

    for job in &queue[head_pos + 1..] {
        if job.demand > free {
            continue;
        }
        if now + job.requested_time <= reserved_start {
            // fills a hole: gone again before the reservation
            free -= job.demand;
            starts.push(job.job_id);
        } else if job.demand <= shadow {
            // outlives the reservation but only uses spare resources
            shadow -= job.demand;
            free -= job.demand;
            starts.push(job.job_id);
        }
    }

    PolicyDecision {
        starts,
        reservation: Some(Reservation {
            job_id: head.job_id,
            start: reserved_start,
        }),
    }
}

/// Duration-informed scheduling: reorder the waiting queue by requested
/// time ascending (ties: submit time, then job id), then run EASY on
/// the reordered queue.
pub fn policy_step_diws(
    queue: &[QueuedJob],
    running: &[RunningJob],
    free: u64,
    now: f64,
) -> PolicyDecision {
    let mut sorted = queue.to_vec();
    sorted.sort_by(|a, b| {
        a.requested_time
            .total_cmp(&b.requested_time)
            .then(a.submit_time.total_cmp(&b.submit_time))
            .then(a.job_id.cmp(&b.job_id))
    });
    policy_step_easy(&sorted, running, free, now)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(job_id: u64, demand: u64, requested_time: f64) -> QueuedJob {
        QueuedJob {
            job_id,
            submit_time: 0.0,
            demand,
            requested_time,
        }
    }

    #[test]
    fn fcfs_empty_queue_decides_nothing() {
        let d = policy_step_fcfs(&[], 10, 0.0);
        assert!(d.starts.is_empty());
        assert!(d.reservation.is_none());
    }

    #[test]
    fn fcfs_starts_fitting_head() {
        let d = policy_step_fcfs(&[q(1, 2, 100.0), q(2, 3, 100.0)], 4, 0.0);
        assert_eq!(d.starts, vec![1]);
    }

    #[test]
    fn fcfs_never_skips_a_blocked_head() {
        // head needs 2, only 1 free, second would fit
        let d = policy_step_fcfs(&[q(1, 2, 100.0), q(2, 1, 100.0)], 1, 0.0);
        assert!(d.starts.is_empty());
    }

    #[test]
    fn easy_without_blocked_head_equals_fcfs() {
        let queue = [q(1, 2, 100.0), q(2, 2, 50.0)];
        let fcfs = policy_step_fcfs(&queue, 5, 0.0);
        let easy = policy_step_easy(&queue, &[], 5, 0.0);
        assert_eq!(easy.starts, fcfs.starts);
        assert!(easy.reservation.is_none());
    }

    #[test]
    fn easy_backfills_into_the_head_hole() {
        // capacity 2: J1 (1 unit, 600 s) starts; J2 (2 units) reserves
        // at 600; J3 (1 unit, 600 s) ends exactly at the reservation
        let queue = [q(1, 1, 600.0), q(2, 2, 300.0), q(3, 1, 600.0)];
        let d = policy_step_easy(&queue, &[], 2, 0.0);
        assert_eq!(d.starts, vec![1, 3]);
        assert_eq!(
            d.reservation,
            Some(Reservation {
                job_id: 2,
                start: 600.0
            })
        );
    }

    #[test]
    fn easy_rejects_backfill_that_would_delay_the_head() {
        // J3 now outlives the hole and the head needs every resource
        let queue = [q(1, 1, 600.0), q(2, 2, 300.0), q(3, 1, 601.0)];
        let d = policy_step_easy(&queue, &[], 2, 0.0);
        assert_eq!(d.starts, vec![1]);
        assert_eq!(
            d.reservation,
            Some(Reservation {
                job_id: 2,
                start: 600.0
            })
        );
    }

    #[test]
    fn easy_backfills_into_shadow_resources() {
        // capacity 3, one unit free; head needs 2 of the 3 freed at 500,
        // leaving a 1-unit shadow a long job may take
        let running = [RunningJob {
            job_id: 9,
            demand: 2,
            expected_end: 500.0,
        }];
        let queue = [q(1, 2, 400.0), q(2, 1, 5000.0)];
        let d = policy_step_easy(&queue, &running, 1, 0.0);
        assert_eq!(
            d.reservation,
            Some(Reservation {
                job_id: 1,
                start: 500.0
            })
        );
        assert_eq!(d.starts, vec![2]);
    }

    #[test]
    fn easy_shadow_is_exhausted_by_earlier_backfills() {
        // capacity 4, two free now, 1-unit shadow at the reservation:
        // both long jobs fit the free resources but only one the shadow
        let running = [RunningJob {
            job_id: 9,
            demand: 2,
            expected_end: 500.0,
        }];
        let queue = [q(1, 3, 400.0), q(2, 1, 5000.0), q(3, 1, 5000.0)];
        let d = policy_step_easy(&queue, &running, 2, 0.0);
        assert_eq!(
            d.reservation,
            Some(Reservation {
                job_id: 1,
                start: 500.0
            })
        );
        assert_eq!(d.starts, vec![2]);
    }

    #[test]
    fn easy_overdue_running_job_releases_no_earlier_than_now() {
        // the running job's expected end is in the past; the reservation
        // must be at `now`, not in the past
        let running = [RunningJob {
            job_id: 9,
            demand: 2,
            expected_end: 100.0,
        }];
        let queue = [q(1, 3, 50.0)];
        let d = policy_step_easy(&queue, &running, 1, 250.0);
        assert_eq!(
            d.reservation,
            Some(Reservation {
                job_id: 1,
                start: 250.0
            })
        );
    }

    #[test]
    fn diws_prefers_shorter_requested_times() {
        let queue = [q(1, 1, 500.0), q(2, 1, 5.0)];
        let d = policy_step_diws(&queue, &[], 1, 0.0);
        // only one unit free: the short job is the new head and starts
        assert_eq!(d.starts, vec![2]);
    }

    #[test]
    fn diws_ties_fall_back_to_submit_order() {
        let queue = [
            QueuedJob {
                job_id: 4,
                submit_time: 10.0,
                demand: 1,
                requested_time: 5.0,
            },
            QueuedJob {
                job_id: 3,
                submit_time: 5.0,
                demand: 1,
                requested_time: 5.0,
            },
            QueuedJob {
                job_id: 1,
                submit_time: 0.0,
                demand: 1,
                requested_time: 500.0,
            },
        ];
        let d = policy_step_diws(&queue, &[], 3, 0.0);
        assert_eq!(d.starts, vec![3, 4, 1]);
    }

    #[test]
    fn diws_with_equal_requests_matches_easy() {
        let queue = [q(1, 1, 42.0), q(2, 2, 42.0), q(3, 1, 42.0)];
        let running = [RunningJob {
            job_id: 9,
            demand: 1,
            expected_end: 300.0,
        }];
        let easy = policy_step_easy(&queue, &running, 1, 0.0);
        let diws = policy_step_diws(&queue, &running, 1, 0.0);
        assert_eq!(diws, easy);
    }
}
