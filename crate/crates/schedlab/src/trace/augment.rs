//! Per-user request averages appended to the base feature vector.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{JobRecord, WorkloadTrace, AUGMENTED_FEATURES};
use crate::error::{Error, Result};

/// Mean requested resources of one user over the fitting set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAggregate {
    pub user_id: u32,
    pub mean_cpu: f64,
    pub mean_mem_gb: f64,
    pub mean_nodes: f64,
    pub mean_gpus: f64,
    pub mean_time_limit: f64,
}

/// Fitted per-user aggregates plus the global fallback means used for
/// users unseen at fit time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserAggregates {
    pub per_user: BTreeMap<u32, UserAggregate>,
    /// Means over the whole fitting set: cpu, mem_gb, nodes, gpus,
    /// time_limit.
    pub global: [f64; 5],
}

fn column_sums(jobs: &[&JobRecord]) -> [f64; 5] {
    let mut s = [0.0; 5];
    for j in jobs {
        s[0] += j.cpu as f64;
        s[1] += j.mem_gb;
        s[2] += j.nodes as f64;
        s[3] += j.gpus as f64;
        s[4] += j.time_limit;
    }
    s
}

/// Computes per-user mean requested resources over the training trace.
pub fn fit_user_aggregates(train: &WorkloadTrace) -> Result<UserAggregates> {
    if train.is_empty() {
        return Err(Error::validation(
            "cannot fit user aggregates on an empty trace",
        ));
    }

    let mut by_user: BTreeMap<u32, Vec<&JobRecord>> = BTreeMap::new();
    for job in &train.jobs {
        by_user.entry(job.user_id).or_default().push(job);
    }

    let mut per_user = BTreeMap::new();
    for (user_id, jobs) in &by_user {
        let n = jobs.len() as f64;
        let s = column_sums(jobs);
        per_user.insert(
            *user_id,
            UserAggregate {
                user_id: *user_id,
                mean_cpu: s[0] / n,
                mean_mem_gb: s[1] / n,
                mean_nodes: s[2] / n,
                mean_gpus: s[3] / n,
                mean_time_limit: s[4] / n,
            },
        );
    }

    let all: Vec<&JobRecord> = train.jobs.iter().collect();
    let n = all.len() as f64;
    let s = column_sums(&all);
    Ok(UserAggregates {
        per_user,
        global: [s[0] / n, s[1] / n, s[2] / n, s[3] / n, s[4] / n],
    })
}

/// Extends a record's 7 base features with the submitting user's mean
/// requests. Users unseen at fit time fall back to the global means.
pub fn augment(record: &JobRecord, aggregates: &UserAggregates) -> Vec<f64> {
    let mut features = record.base_features();
    features.reserve(AUGMENTED_FEATURES - features.len());
    match aggregates.per_user.get(&record.user_id) {
        Some(a) => {
            features.push(a.mean_cpu);
            features.push(a.mean_mem_gb);
            features.push(a.mean_nodes);
            features.push(a.mean_gpus);
            features.push(a.mean_time_limit);
        }
        None => features.extend_from_slice(&aggregates.global),
    }
    features
}
