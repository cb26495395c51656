//! Workload traces: loading, validation, splitting, augmentation,
//! min-max scaling and synthetic generation.
//!
//! A trace is an ordered list of job submissions. Each job carries the
//! seven submission-time features used for learning plus the actual
//! runtime as the regression target. Time columns use two units:
//! `submit_time` is seconds since the trace epoch, `time_limit` and
//! `run_time` are minutes. The simulator converts minutes to seconds
//! exactly once, in `sim::to_sim_jobs`.

mod augment;
mod scaler;
mod split;
mod synth;

pub use augment::{augment, fit_user_aggregates, UserAggregate, UserAggregates};
pub use scaler::FeatureScaler;
pub use split::{random_test_count, split_random, split_temporal};
pub use synth::{generate_synthetic_trace, SyntheticSpec};

use std::io::{BufRead, BufReader, Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of submission-time features (cpu, mem_gb, nodes, gpus,
/// user_id, qos, time_limit), in that column order.
pub const BASE_FEATURES: usize = 7;

/// Base features plus the five per-user request means.
pub const AUGMENTED_FEATURES: usize = 12;

/// CSV header of the trace interchange format.
pub const TRACE_HEADER: &str =
    "job_id,submit_time,cpu,mem_gb,nodes,gpus,user_id,qos,time_limit,run_time";

/// One submitted job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobRecord {
    pub job_id: u64,
    /// Seconds since the trace epoch.
    pub submit_time: f64,
    /// Requested CPU cores.
    pub cpu: u32,
    /// Requested memory in gigabytes.
    pub mem_gb: f64,
    /// Requested node count.
    pub nodes: u32,
    /// Requested GPU count.
    pub gpus: u32,
    pub user_id: u32,
    /// Numeric quality-of-service code.
    pub qos: u32,
    /// User-requested maximum runtime, minutes.
    pub time_limit: f64,
    /// Actual runtime, minutes.
    pub run_time: f64,
}

impl JobRecord {
    /// The 7-column learning feature vector, in schema order.
    pub fn base_features(&self) -> Vec<f64> {
        vec![
            self.cpu as f64,
            self.mem_gb,
            self.nodes as f64,
            self.gpus as f64,
            self.user_id as f64,
            self.qos as f64,
            self.time_limit,
        ]
    }
}

/// An ordered workload: jobs sorted by submit time, ties by job id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct WorkloadTrace {
    pub jobs: Vec<JobRecord>,
    /// Absolute origin of `submit_time`, informational only.
    pub epoch: f64,
}

impl WorkloadTrace {
    /// Builds a trace from records, sorting them into canonical order.
    pub fn from_jobs(mut jobs: Vec<JobRecord>) -> Self {
        jobs.sort_by(|a, b| {
            a.submit_time
                .total_cmp(&b.submit_time)
                .then(a.job_id.cmp(&b.job_id))
        });
        WorkloadTrace { jobs, epoch: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    /// Feature matrix over all jobs (7 columns each).
    pub fn base_feature_matrix(&self) -> Vec<Vec<f64>> {
        self.jobs.iter().map(|j| j.base_features()).collect()
    }

    /// Regression targets: actual runtimes in minutes.
    pub fn targets(&self) -> Vec<f64> {
        self.jobs.iter().map(|j| j.run_time).collect()
    }
}

const COLUMNS: [&str; 10] = [
    "job_id",
    "submit_time",
    "cpu",
    "mem_gb",
    "nodes",
    "gpus",
    "user_id",
    "qos",
    "time_limit",
    "run_time",
];

fn parse_field<T: std::str::FromStr>(raw: &str, line: usize, column: &str) -> Result<T> {
    raw.trim().parse::<T>().map_err(|_| Error::Parse {
        line,
        column: column.to_string(),
        message: format!("cannot parse '{}'", raw.trim()),
    })
}

fn require_positive(value: f64, line: usize, column: &str) -> Result<f64> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::Parse {
            line,
            column: column.to_string(),
            message: format!("must be positive, got {value}"),
        });
    }
    Ok(value)
}

/// Parses a trace from CSV. The header must name the nine data columns;
/// `job_id` is optional and synthesized from row order when absent.
/// Rows are validated and the result is sorted by submit time.
pub fn parse_trace<R: Read>(reader: R) -> Result<WorkloadTrace> {
    let mut lines = BufReader::new(reader).lines();
    let header = match lines.next() {
        Some(h) => h?,
        None => {
            return Err(Error::Parse {
                line: 1,
                column: "header".into(),
                message: "empty input".into(),
            })
        }
    };

    let names: Vec<String> = header.split(',').map(|s| s.trim().to_string()).collect();
    for name in &names {
        if !COLUMNS.contains(&name.as_str()) {
            return Err(Error::Parse {
                line: 1,
                column: name.clone(),
                message: "unknown column".into(),
            });
        }
    }
    let col = |name: &str| names.iter().position(|n| n == name);
    for required in COLUMNS.iter().skip(1) {
        if col(required).is_none() {
            return Err(Error::Parse {
                line: 1,
                column: (*required).to_string(),
                message: "missing column".into(),
            });
        }
    }
    let job_id_col = col("job_id");

    let mut jobs = Vec::new();
    let mut seen_ids = std::collections::HashSet::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        let lineno = i + 2;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != names.len() {
            return Err(Error::Parse {
                line: lineno,
                column: "row".into(),
                message: format!("expected {} fields, found {}", names.len(), fields.len()),
            });
        }
        let get = |name: &str| fields[col(name).unwrap()];

        let job_id = match job_id_col {
            Some(c) => parse_field::<u64>(fields[c], lineno, "job_id")?,
            None => jobs.len() as u64,
        };
        if !seen_ids.insert(job_id) {
            return Err(Error::Parse {
                line: lineno,
                column: "job_id".into(),
                message: format!("duplicate job id {job_id}"),
            });
        }

        let submit_time: f64 = parse_field(get("submit_time"), lineno, "submit_time")?;
        if !submit_time.is_finite() || submit_time < 0.0 {
            return Err(Error::Parse {
                line: lineno,
                column: "submit_time".into(),
                message: format!("must be non-negative, got {submit_time}"),
            });
        }
        let cpu: u32 = parse_field(get("cpu"), lineno, "cpu")?;
        if cpu == 0 {
            return Err(Error::Parse {
                line: lineno,
                column: "cpu".into(),
                message: "must be at least 1".into(),
            });
        }
        let nodes: u32 = parse_field(get("nodes"), lineno, "nodes")?;
        if nodes == 0 {
            return Err(Error::Parse {
                line: lineno,
                column: "nodes".into(),
                message: "must be at least 1".into(),
            });
        }
        let mem_gb = require_positive(
            parse_field(get("mem_gb"), lineno, "mem_gb")?,
            lineno,
            "mem_gb",
        )?;
        let time_limit = require_positive(
            parse_field(get("time_limit"), lineno, "time_limit")?,
            lineno,
            "time_limit",
        )?;
        let run_time = require_positive(
            parse_field(get("run_time"), lineno, "run_time")?,
            lineno,
            "run_time",
        )?;

        jobs.push(JobRecord {
            job_id,
            submit_time,
            cpu,
            mem_gb,
            nodes,
            gpus: parse_field(get("gpus"), lineno, "gpus")?,
            user_id: parse_field(get("user_id"), lineno, "user_id")?,
            qos: parse_field(get("qos"), lineno, "qos")?,
            time_limit,
            run_time,
        });
    }

    Ok(WorkloadTrace::from_jobs(jobs))
}

/// Writes a trace in the CSV interchange format. Floats use the shortest
/// representation that round-trips, so `parse_trace(serialize_trace(t))`
/// reproduces `t` exactly.
pub fn serialize_trace<W: Write>(trace: &WorkloadTrace, mut writer: W) -> Result<()> {
    writeln!(writer, "{TRACE_HEADER}")?;
    for j in &trace.jobs {
        writeln!(
            writer,
            "{},{},{},{},{},{},{},{},{},{}",
            j.job_id,
            j.submit_time,
            j.cpu,
            j.mem_gb,
            j.nodes,
            j.gpus,
            j.user_id,
            j.qos,
            j.time_limit,
            j.run_time
        )?;
    }
    Ok(())
}

/// Renders a trace to a string (convenience over `serialize_trace`).
pub fn trace_to_string(trace: &WorkloadTrace) -> String {
    let mut buf = Vec::new();
    serialize_trace(trace, &mut buf).expect("write to Vec cannot fail");
    String::from_utf8(buf).expect("trace CSV is UTF-8")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn record(job_id: u64, submit_time: f64) -> JobRecord {
        JobRecord {
            job_id,
            submit_time,
            cpu: 1,
            mem_gb: 0.098,
            nodes: 1,
            gpus: 0,
            user_id: 0,
            qos: 0,
            time_limit: 10.0,
            run_time: 5.0,
        }
    }

    #[test]
    fn parse_two_rows_sorted_by_submit() {
        let csv = "job_id,submit_time,cpu,mem_gb,nodes,gpus,user_id,qos,time_limit,run_time\n\
                   1,50,1,0.098,1,0,3,0,10,5\n\
                   2,20,4,1.5,1,1,4,1,60,30\n";
        let trace = parse_trace(csv.as_bytes()).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace.jobs[0].job_id, 2);
        assert_eq!(trace.jobs[1].job_id, 1);
        assert_eq!(trace.jobs[0].cpu, 4);
    }

    #[test]
    fn job_id_synthesized_from_row_order() {
        let csv = "submit_time,cpu,mem_gb,nodes,gpus,user_id,qos,time_limit,run_time\n\
                   50,1,1,1,0,0,0,10,5\n\
                   20,1,1,1,0,0,0,10,5\n";
        let trace = parse_trace(csv.as_bytes()).unwrap();
        // ids follow row order, then the trace is sorted by submit time
        assert_eq!(trace.jobs[0].job_id, 1);
        assert_eq!(trace.jobs[1].job_id, 0);
    }

    #[test]
    fn zero_run_time_rejected() {
        let csv = "submit_time,cpu,mem_gb,nodes,gpus,user_id,qos,time_limit,run_time\n\
                   0,1,1,1,0,0,0,10,0\n";
        let err = parse_trace(csv.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 2);
                assert_eq!(column, "run_time");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_row_names_line_and_column() {
        let csv = "submit_time,cpu,mem_gb,nodes,gpus,user_id,qos,time_limit,run_time\n\
                   0,1,1,1,0,0,0,10,5\n\
                   0,abc,1,1,0,0,0,10,5\n";
        let err = parse_trace(csv.as_bytes()).unwrap_err();
        match err {
            Error::Parse { line, column, .. } => {
                assert_eq!(line, 3);
                assert_eq!(column, "cpu");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn shuffled_rows_come_out_sorted() {
        // Independent oracle: collect submit times, sort with the stdlib,
        // compare elementwise against the parsed order.
        let submits = [9.0, 3.0, 7.0, 1.0, 5.0, 0.0, 8.0, 2.0, 6.0, 4.0];
        let mut csv = String::from(TRACE_HEADER);
        csv.push('\n');
        for (i, s) in submits.iter().enumerate() {
            csv.push_str(&format!("{i},{s},1,1,1,0,0,0,10,5\n"));
        }
        let trace = parse_trace(csv.as_bytes()).unwrap();

        let mut expected = submits.to_vec();
        expected.sort_by(f64::total_cmp);
        let got: Vec<f64> = trace.jobs.iter().map(|j| j.submit_time).collect();
        assert_eq!(got, expected);
        for w in trace.jobs.windows(2) {
            assert!(w[0].submit_time <= w[1].submit_time);
        }
    }

    #[test]
    fn duplicate_job_id_rejected() {
        let csv = "job_id,submit_time,cpu,mem_gb,nodes,gpus,user_id,qos,time_limit,run_time\n\
                   7,0,1,1,1,0,0,0,10,5\n\
                   7,1,1,1,1,0,0,0,10,5\n";
        assert!(parse_trace(csv.as_bytes()).is_err());
    }

    #[test]
    fn missing_column_rejected() {
        let csv = "submit_time,cpu,mem_gb,nodes,gpus,user_id,qos,time_limit\n";
        let err = parse_trace(csv.as_bytes()).unwrap_err();
        match err {
            Error::Parse { column, .. } => assert_eq!(column, "run_time"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_preserves_trace() {
        let trace = WorkloadTrace::from_jobs(vec![
            JobRecord {
                job_id: 0,
                submit_time: 12.625,
                cpu: 3,
                mem_gb: 0.098,
                nodes: 1,
                gpus: 2,
                user_id: 11,
                qos: 1,
                time_limit: 1439.912,
                run_time: 0.017,
            },
            record(1, 90.5),
        ]);
        let text = trace_to_string(&trace);
        let reparsed = parse_trace(text.as_bytes()).unwrap();
        assert_eq!(reparsed, trace);
    }
}
