//! Train/test splitting.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::WorkloadTrace;
use crate::error::{Error, Result};

/// Test-set cardinality of a random split: `round(test_fraction * n)`.
pub fn random_test_count(n: usize, test_fraction: f64) -> usize {
    (test_fraction * n as f64).round() as usize
}

/// Randomly partitions a trace into train and test sets.
///
/// The partition is deterministic for a fixed seed. Both halves keep
/// their jobs in original (submit-sorted) order, so they remain valid
/// traces.
pub fn split_random(
    trace: &WorkloadTrace,
    test_fraction: f64,
    seed: u64,
) -> Result<(WorkloadTrace, WorkloadTrace)> {
    let n = trace.len();
    if n < 2 {
        return Err(Error::validation(format!(
            "random split needs at least 2 jobs, trace has {n}"
        )));
    }
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::validation(format!(
            "test_fraction must be in (0,1), got {test_fraction}"
        )));
    }

    let test_count = random_test_count(n, test_fraction);
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    indices.shuffle(&mut rng);
    let mut in_test = vec![false; n];
    for &i in indices.iter().take(test_count) {
        in_test[i] = true;
    }

    let mut train = Vec::with_capacity(n - test_count);
    let mut test = Vec::with_capacity(test_count);
    for (i, job) in trace.jobs.iter().enumerate() {
        if in_test[i] {
            test.push(job.clone());
        } else {
            train.push(job.clone());
        }
    }
    Ok((
        WorkloadTrace {
            jobs: train,
            epoch: trace.epoch,
        },
        WorkloadTrace {
            jobs: test,
            epoch: trace.epoch,
        },
    ))
}

/// Splits off the last `test_size` jobs by submission order.
pub fn split_temporal(
    trace: &WorkloadTrace,
    test_size: usize,
) -> Result<(WorkloadTrace, WorkloadTrace)> {
    let n = trace.len();
    if test_size == 0 {
        return Err(Error::validation(
            "temporal split needs a non-empty test set",
        ));
    }
    if test_size >= n {
        return Err(Error::validation(format!(
            "test_size {test_size} must be smaller than the trace size {n}"
        )));
    }
    let cut = n - test_size;
    Ok((
        WorkloadTrace {
            jobs: trace.jobs[..cut].to_vec(),
            epoch: trace.epoch,
        },
        WorkloadTrace {
            jobs: trace.jobs[cut..].to_vec(),
            epoch: trace.epoch,
        },
    ))
}
