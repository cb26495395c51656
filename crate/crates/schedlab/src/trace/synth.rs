//! Synthetic workload generation.
//!
//! Produces traces with the statistical shape of production batch
//! workloads: log-normal runtimes spanning several orders of magnitude,
//! walltime requests that overwhelmingly overestimate the real runtime,
//! a small pool of users with recognizable per-user habits, and
//! power-of-two resource requests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};

use super::{JobRecord, WorkloadTrace};
use crate::error::{Error, Result};

/// Smallest runtime ever observed, minutes (one second, rounded).
pub const MIN_RUNTIME_MINUTES: f64 = 0.017;

/// Mean of the exponential part of the walltime inflation factor. The
/// factor itself is `inflation_min + Exp(1/INFLATION_EXP_MEAN)`, so its
/// mean is `inflation_min + INFLATION_EXP_MEAN`.
pub const INFLATION_EXP_MEAN: f64 = 4.0;

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub n_jobs: usize,
    pub seed: u64,
    /// Location of the log-normal runtime distribution (log-minutes).
    pub lognormal_mu: f64,
    /// Scale of the log-normal runtime distribution.
    pub lognormal_sigma: f64,
    /// Floor of the walltime inflation factor; at least 1.
    pub inflation_min: f64,
    /// Fraction of jobs whose walltime underestimates the runtime.
    pub underestimate_fraction: f64,
    pub n_users: u32,
    pub arrival_rate_per_hour: f64,
    /// Queue-imposed walltime ceiling, minutes.
    pub walltime_cap_minutes: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_jobs: 1000,
            seed: 1,
            lognormal_mu: 1.0,
            lognormal_sigma: 2.0,
            inflation_min: 1.0,
            underestimate_fraction: 0.014,
            n_users: 20,
            arrival_rate_per_hour: 120.0,
            walltime_cap_minutes: 1440.0,
        }
    }
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.n_jobs == 0 {
            return Err(Error::validation("n_jobs must be at least 1"));
        }
        if !self.lognormal_mu.is_finite() {
            return Err(Error::validation("lognormal_mu must be finite"));
        }
        if !(self.lognormal_sigma >= 0.0 && self.lognormal_sigma.is_finite()) {
            return Err(Error::validation("lognormal_sigma must be non-negative"));
        }
        if !(self.inflation_min >= 1.0 && self.inflation_min.is_finite()) {
            return Err(Error::validation("inflation_min must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.underestimate_fraction) {
            return Err(Error::validation("underestimate_fraction must be in [0,1]"));
        }
        if self.n_users == 0 {
            return Err(Error::validation("n_users must be at least 1"));
        }
        if !(self.arrival_rate_per_hour > 0.0 && self.arrival_rate_per_hour.is_finite()) {
            return Err(Error::validation("arrival_rate_per_hour must be positive"));
        }
        if !(self.walltime_cap_minutes >= 1.0 && self.walltime_cap_minutes.is_finite()) {
            return Err(Error::validation("walltime_cap_minutes must be at least 1"));
        }
        Ok(())
    }

    /// Length of the arrival window in seconds: the span that realizes
    /// the configured mean arrival rate for `n_jobs` submissions.
    pub fn arrival_window_seconds(&self) -> f64 {
        self.n_jobs as f64 / self.arrival_rate_per_hour * 3600.0
    }
}

struct UserProfile {
    /// Additive shift of the log-runtime; gives each user a
    /// characteristic runtime scale the models can learn.
    runtime_shift: f64,
    /// log2 of the user's typical core request.
    cpu_pow: u32,
    uses_gpus: bool,
}

/// Generates a workload deterministically from the spec. Same spec,
/// same trace, byte for byte.
pub fn generate_synthetic_trace(spec: &SyntheticSpec) -> Result<WorkloadTrace> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    // Half the configured variance lives between users, half within a
    // user, so the marginal runtime stays LogNormal(mu, sigma).
    let between = Normal::new(0.0, spec.lognormal_sigma / f64::sqrt(2.0))
        .map_err(|e| Error::validation(format!("lognormal parameters: {e}")))?;
    let within = Normal::new(0.0, spec.lognormal_sigma / f64::sqrt(2.0)).unwrap();
    let inflation_tail = Exp::new(1.0 / INFLATION_EXP_MEAN).unwrap();

    let profiles: Vec<UserProfile> = (0..spec.n_users)
        .map(|_| UserProfile {
            runtime_shift: between.sample(&mut rng),
            cpu_pow: rng.random_range(0..=6),
            uses_gpus: rng.random::<f64>() < 0.3,
        })
        .collect();

    let window = spec.arrival_window_seconds();
    let mut jobs: Vec<JobRecord> = (0..spec.n_jobs)
        .map(|_| {
            let user_id = rng.random_range(0..spec.n_users);
            let profile = &profiles[user_id as usize];

            let submit_time = rng.random::<f64>() * window;

            let log_runtime = spec.lognormal_mu + profile.runtime_shift + within.sample(&mut rng);
            let run_time = log_runtime
                .exp()
                .clamp(MIN_RUNTIME_MINUTES, spec.walltime_cap_minutes);

            let raw_limit = if rng.random::<f64>() < spec.underestimate_fraction {
                run_time * rng.random_range(0.3..0.95)
            } else {
                run_time * (spec.inflation_min + inflation_tail.sample(&mut rng))
            };
            let time_limit = raw_limit.clamp(1.0, spec.walltime_cap_minutes);

            let jitter = rng.random_range(-1i32..=1);
            let pow = (profile.cpu_pow as i32 + jitter).clamp(0, 8) as u32;
            let cpu = 1u32 << pow;
            let mem_gb = cpu as f64 * rng.random_range(0.5..8.0);
            let nodes = cpu.div_ceil(16);
            let gpus = if profile.uses_gpus {
                nodes * rng.random_range(1..=4)
            } else {
                0
            };
            let qos = if rng.random::<f64>() < 0.95 {
                0
            } else {
                rng.random_range(1..=3)
            };

            JobRecord {
                job_id: 0, // assigned below, in submit order
                submit_time,
                cpu,
                mem_gb,
                nodes,
                gpus,
                user_id,
                qos,
                time_limit,
                run_time,
            }
        })
        .collect();

    jobs.sort_by(|a, b| a.submit_time.total_cmp(&b.submit_time));
    for (i, job) in jobs.iter_mut().enumerate() {
        job.job_id = i as u64;
    }
    Ok(WorkloadTrace { jobs, epoch: 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::trace_to_string;

    #[test]
    fn single_job_is_valid() {
        let spec = SyntheticSpec {
            n_jobs: 1,
            ..Default::default()
        };
        let trace = generate_synthetic_trace(&spec).unwrap();
        assert_eq!(trace.len(), 1);
        let j = &trace.jobs[0];
        assert!(j.run_time > 0.0 && j.time_limit > 0.0);
        assert!(j.cpu >= 1 && j.nodes >= 1 && j.mem_gb > 0.0);
    }

    #[test]
    fn walltime_overestimates_dominate() {
        let spec = SyntheticSpec {
            n_jobs: 5000,
            ..Default::default()
        };
        let trace = generate_synthetic_trace(&spec).unwrap();
        let over = trace
            .jobs
            .iter()
            .filter(|j| j.time_limit >= j.run_time)
            .count();
        assert!(
            over as f64 >= 0.98 * trace.len() as f64,
            "only {over}/{} jobs overestimate",
            trace.len()
        );
        // but underestimates do exist at the default 1.4% setting
        assert!(over < trace.len());
    }

    #[test]
    fn same_seed_gives_byte_identical_traces() {
        let spec = SyntheticSpec {
            n_jobs: 300,
            seed: 7,
            ..Default::default()
        };
        let a = generate_synthetic_trace(&spec).unwrap();
        let b = generate_synthetic_trace(&spec).unwrap();
        assert_eq!(trace_to_string(&a), trace_to_string(&b));
    }

    #[test]
    fn submits_stay_inside_arrival_window() {
        let spec = SyntheticSpec {
            n_jobs: 200,
            arrival_rate_per_hour: 200.0 / 24.0,
            ..Default::default()
        };
        let window = spec.arrival_window_seconds();
        assert!((window - 86_400.0).abs() < 1e-9);
        let trace = generate_synthetic_trace(&spec).unwrap();
        assert!(trace
            .jobs
            .iter()
            .all(|j| (0.0..window).contains(&j.submit_time)));
    }

    #[test]
    fn invalid_parameters_rejected() {
        let bad = |f: &dyn Fn(&mut SyntheticSpec)| {
            let mut s = SyntheticSpec::default();
            f(&mut s);
            generate_synthetic_trace(&s).is_err()
        };
        assert!(bad(&|s| s.n_jobs = 0));
        assert!(bad(&|s| s.lognormal_sigma = -1.0));
        assert!(bad(&|s| s.inflation_min = 0.5));
        assert!(bad(&|s| s.underestimate_fraction = 1.5));
        assert!(bad(&|s| s.n_users = 0));
        assert!(bad(&|s| s.arrival_rate_per_hour = 0.0));
        assert!(bad(&|s| s.walltime_cap_minutes = 0.0));
    }

    #[test]
    fn runtimes_are_right_skewed() {
        let spec = SyntheticSpec {
            n_jobs: 4000,
            ..Default::default()
        };
        let trace = generate_synthetic_trace(&spec).unwrap();
        let mut runtimes: Vec<f64> = trace.jobs.iter().map(|j| j.run_time).collect();
        runtimes.sort_by(f64::total_cmp);
        let mean = runtimes.iter().sum::<f64>() / runtimes.len() as f64;
        let median = runtimes[runtimes.len() / 2];
        assert!(mean > 2.0 * median, "mean {mean} vs median {median}");
    }
}
