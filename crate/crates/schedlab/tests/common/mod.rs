//! Shared test oracles and helpers for the integration suites.
//!
//! The scheduling oracle here is written independently of the library
//! engine on purpose: it time-steps with flat scans and recomputes
//! availability from scratch at every decision, where the engine uses
//! an event heap and incremental bookkeeping. Agreement between the two
//! is evidence, not tautology.

#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;

/// A job as the oracle sees it. Times in seconds.
#[derive(Debug, Clone, Copy)]
pub struct OJob {
    pub id: u64,
    pub submit: f64,
    pub demand: u64,
    pub requested: f64,
    pub actual: f64,
}

/// Queue discipline of the oracle replay.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrderRule {
    /// Queue stays in submission order.
    Submit,
    /// Queue re-sorted by requested time at every pass (duration-informed).
    ShortestRequested,
}

#[derive(Debug, Clone, Copy)]
struct RunningRec {
    id: u64,
    demand: u64,
    actual_end: f64,
    expected_end: f64,
}

/// Replays the jobs and returns each job's start time.
///
/// Protocol mirrored from the engine's published contract: at every
/// distinct event time, completions release resources first, then
/// submissions enqueue, then exactly one policy pass runs. With
/// `backfill` off the pass is plain first-come-first-served.
pub fn oracle_starts(
    jobs: &[OJob],
    capacity: u64,
    order: OrderRule,
    backfill: bool,
) -> BTreeMap<u64, f64> {
    let mut pending: Vec<OJob> = jobs.to_vec();
    pending.sort_by(|a, b| a.submit.total_cmp(&b.submit).then(a.id.cmp(&b.id)));
    let mut queue: Vec<OJob> = Vec::new();
    let mut running: Vec<RunningRec> = Vec::new();
    let mut starts = BTreeMap::new();

    while !(pending.is_empty() && queue.is_empty() && running.is_empty()) {
        // Next moment anything can happen: a completion or a submission.
        let mut now = f64::INFINITY;
        for r in &running {
            now = now.min(r.actual_end);
        }
        if let Some(first) = pending.first() {
            now = now.min(first.submit);
        }
        assert!(now.is_finite(), "stalled: queued jobs but no future event");

        running.retain(|r| r.actual_end != now);
        while pending.first().is_some_and(|j| j.submit == now) {
            queue.push(pending.remove(0));
        }

        let mut work: Vec<OJob> = queue.clone();
        if order == OrderRule::ShortestRequested {
            work.sort_by(|a, b| {
                a.requested
                    .total_cmp(&b.requested)
                    .then(a.submit.total_cmp(&b.submit))
                    .then(a.id.cmp(&b.id))
            });
        }

        let used: u64 = running.iter().map(|r| r.demand).sum();
        let mut free = capacity - used;
        let mut started: Vec<u64> = Vec::new();
        let mut start_job = |j: &OJob, t: f64, running: &mut Vec<RunningRec>, free: &mut u64| {
            *free -= j.demand;
            running.push(RunningRec {
                id: j.id,
                demand: j.demand,
                actual_end: t + j.actual,
                expected_end: t + j.requested,
            });
            started.push(j.id);
        };

        let mut idx = 0;
        while idx < work.len() && work[idx].demand <= free {
            start_job(&work[idx], now, &mut running, &mut free);
            idx += 1;
        }

        if backfill && idx < work.len() {
            let head = work[idx];
            // Availability at a future instant, assuming every running
            // job releases at its expected end (never before now).
            let free_at = |t: f64, running: &[RunningRec]| -> u64 {
                let held: u64 = running
                    .iter()
                    .filter(|r| r.expected_end.max(now) > t)
                    .map(|r| r.demand)
                    .sum();
                capacity - held
            };
            let mut candidates: Vec<f64> =
                running.iter().map(|r| r.expected_end.max(now)).collect();
            candidates.push(now);
            candidates.sort_by(f64::total_cmp);
            let reserved = candidates
                .into_iter()
                .find(|&t| free_at(t, &running) >= head.demand)
                .expect("capacity fits every job, so some candidate works");
            let mut shadow = free_at(reserved, &running) - head.demand;

            for &j in &work[idx + 1..] {
                if j.demand > free {
                    continue;
                }
                if now + j.requested <= reserved {
                    start_job(&j, now, &mut running, &mut free);
                } else if j.demand <= shadow {
                    shadow -= j.demand;
                    start_job(&j, now, &mut running, &mut free);
                }
            }
        }

        for id in started {
            starts.insert(id, now);
            queue.retain(|j| j.id != id);
        }
    }
    starts
}

/// Exhaustive best-split search: every feature, every midpoint between
/// adjacent distinct values, child SSE by direct two-pass summation.
/// Ties resolve to the lowest feature, then the smallest threshold.
/// Returns `(feature, threshold, child_sse)`.
pub fn exhaustive_root_split(
    x: &[Vec<f64>],
    y: &[f64],
    min_samples_leaf: usize,
) -> Option<(usize, f64, f64)> {
    let n = x.len();
    let d = x[0].len();
    let sse = |idx: &[usize]| -> f64 {
        let mean = idx.iter().map(|&i| y[i]).sum::<f64>() / idx.len() as f64;
        idx.iter().map(|&i| (y[i] - mean).powi(2)).sum()
    };
    let mut best: Option<(usize, f64, f64)> = None;
    for f in 0..d {
        let mut values: Vec<f64> = x.iter().map(|row| row[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let (lo, hi) = (pair[0], pair[1]);
            let mut thr = (lo + hi) / 2.0;
            if thr >= hi {
                thr = lo;
            }
            let left: Vec<usize> = (0..n).filter(|&i| x[i][f] <= thr).collect();
            let right: Vec<usize> = (0..n).filter(|&i| x[i][f] > thr).collect();
            if left.len() < min_samples_leaf || right.len() < min_samples_leaf {
                continue;
            }
            let score = sse(&left) + sse(&right);
            let better = match best {
                None => true,
                Some((_, _, best_score)) => score < best_score,
            };
            if better {
                best = Some((f, thr, score));
            }
        }
    }
    best
}

/// Parses a flat `key = value` document into a map.
pub fn parse_kv(text: &str) -> BTreeMap<String, String> {
    text.lines()
        .filter_map(|line| {
            let (k, v) = line.split_once('=')?;
            Some((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

/// Numeric field from a parsed kv document.
pub fn kv_num(map: &BTreeMap<String, String>, key: &str) -> f64 {
    map.get(key)
        .unwrap_or_else(|| panic!("missing key '{key}'"))
        .parse()
        .unwrap_or_else(|e| panic!("key '{key}': {e}"))
}

/// Runs the compiled binary; returns (exit code, stdout, stderr).
pub fn run_cli(args: &[&str], cwd: &Path) -> (i32, String, String) {
    let exe = env!("CARGO_BIN_EXE_schedlab");
    let out = Command::new(exe)
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&out.stdout).into_owned(),
        String::from_utf8_lossy(&out.stderr).into_owned(),
    )
}
