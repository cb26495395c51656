//! Prediction-quality scoring.
//!
//! Three report families, all pure functions of (predictions, actuals):
//! standard regression metrics, a breakdown into over-, under- and
//! exact estimations, and effectiveness against the user's own request.
//! Times are minutes throughout. The "95% interval" is reported as
//! [0, 95th percentile of absolute error]; the percentile interpolates
//! linearly between order statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half a second, in minutes: predictions within this distance of the
/// actual runtime count as exact.
pub const EXACT_TOLERANCE_MINUTES: f64 = 0.5 / 60.0;

/// Errors below one hour count as small in the breakdown.
pub const SMALL_ERROR_MINUTES: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionReport {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    /// None when the actuals have zero variance (undefined).
    pub r2: Option<f64>,
    /// 95th percentile of absolute error; the interval is [0, this].
    pub error_interval_95: f64,
}

/// Statistics over one class of the over/under/exact partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub cases: usize,
    /// Share of all samples, percent.
    pub share_pct: f64,
    /// Absolute-error extremes and mean within the class; None when the
    /// class is empty.
    pub min_error: Option<f64>,
    pub max_error: Option<f64>,
    pub avg_error: Option<f64>,
    /// Share of the class with absolute error strictly below one hour,
    /// percent; None when the class is empty.
    pub small_error_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub overestimation: ClassStats,
    pub underestimation: ClassStats,
    /// Share of samples within half a second of the actual runtime,
    /// percent.
    pub exact_pct: f64,
    pub exact_cases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectivenessReport {
    /// Percent of samples where the prediction approximates the actual
    /// runtime at least as well as the user's request does.
    pub general_pct: f64,
    /// Same ratio restricted to predictions that do not undershoot the
    /// actual runtime (within the exactness tolerance); None when no
    /// prediction qualifies.
    pub valid_pct: Option<f64>,
    pub valid_cases: usize,
}

/// Everything known about one prediction run, renderable as a flat
/// key-value document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub samples: usize,
    pub regression: RegressionReport,
    pub breakdown: ErrorBreakdown,
    pub effectiveness: EffectivenessReport,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a == 0 {
        return Err(Error::validation("cannot score an empty prediction set"));
    }
    if a != b {
        return Err(Error::validation(format!(
            "prediction/actual length mismatch: {a} vs {b}"
        )));
    }
    Ok(())
}

/// Linear-interpolation percentile of a non-empty sorted slice,
/// p in [0, 1].
pub fn percentile_sorted(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

pub fn regression_metrics(predictions: &[f64], actuals: &[f64]) -> Result<RegressionReport> {
    check_lengths(predictions.len(), actuals.len())?;
    let n = predictions.len() as f64;

    let mut abs_errors: Vec<f64> = Vec::with_capacity(predictions.len());
    let mut mae = 0.0;
    let mut mse = 0.0;
    for (&p, &a) in predictions.iter().zip(actuals) {
        let e = p - a;
        abs_errors.push(e.abs());
        mae += e.abs();
        mse += e * e;
    }
    mae /= n;
    mse /= n;

    let mean_actual = actuals.iter().sum::<f64>() / n;
    let ss_tot: f64 = actuals
        .iter()
        .map(|&a| (a - mean_actual) * (a - mean_actual))
        .sum();
    let r2 = if ss_tot == 0.0 {
        None
    } else {
        let ss_res = mse * n;
        Some(1.0 - ss_res / ss_tot)
    };

    abs_errors.sort_by(f64::total_cmp);
    let error_interval_95 = percentile_sorted(&abs_errors, 0.95);

    Ok(RegressionReport {
        mae,
        mse,
        rmse: mse.sqrt(),
        r2,
        error_interval_95,
    })
}

fn class_stats(errors: &[f64], total: usize) -> ClassStats {
    let cases = errors.len();
    if cases == 0 {
        return ClassStats {
            cases: 0,
            share_pct: 0.0,
            min_error: None,
            max_error: None,
            avg_error: None,
            small_error_pct: None,
        };
    }
    let min = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = errors.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let avg = errors.iter().sum::<f64>() / cases as f64;
    let small = errors.iter().filter(|&&e| e < SMALL_ERROR_MINUTES).count();
    ClassStats {
        cases,
        share_pct: 100.0 * cases as f64 / total as f64,
        min_error: Some(min),
        max_error: Some(max),
        avg_error: Some(avg),
        small_error_pct: Some(100.0 * small as f64 / cases as f64),
    }
}

/// Partitions samples into exact (within `tolerance` minutes of the
/// actual), over- and underestimations, with per-class absolute-error
/// statistics.
pub fn error_breakdown(
    predictions: &[f64],
    actuals: &[f64],
    tolerance: f64,
) -> Result<ErrorBreakdown> {
    check_lengths(predictions.len(), actuals.len())?;
    let total = predictions.len();

    let mut over = Vec::new();
    let mut under = Vec::new();
    let mut exact_cases = 0usize;
    for (&p, &a) in predictions.iter().zip(actuals) {
        let e = p - a;
        if e.abs() <= tolerance {
            exact_cases += 1;
        } else if e > 0.0 {
            over.push(e);
        } else {
            under.push(-e);
        }
    }

    Ok(ErrorBreakdown {
        overestimation: class_stats(&over, total),
        underestimation: class_stats(&under, total),
        exact_pct: 100.0 * exact_cases as f64 / total as f64,
        exact_cases,
    })
}

/// Scores predictions against the user's own runtime requests. A sample
/// counts when the prediction is at least as close to the actual runtime
/// as the request is (ties count). The valid variant restricts both
/// numerator and denominator to predictions that do not undershoot the
/// actual runtime by more than the exactness tolerance.
pub fn effectiveness(
    predictions: &[f64],
    actuals: &[f64],
    time_limits: &[f64],
) -> Result<EffectivenessReport> {
    check_lengths(predictions.len(), actuals.len())?;
    check_lengths(predictions.len(), time_limits.len())?;
    let n = predictions.len();

    let mut beats = 0usize;
    let mut valid = 0usize;
    let mut valid_beats = 0usize;
    for i in 0..n {
        let closer = (predictions[i] - actuals[i]).abs() <= (time_limits[i] - actuals[i]).abs();
        if closer {
            beats += 1;
        }
        if predictions[i] >= actuals[i] - EXACT_TOLERANCE_MINUTES {
            valid += 1;
            if closer {
                valid_beats += 1;
            }
        }
    }

    Ok(EffectivenessReport {
        general_pct: 100.0 * beats as f64 / n as f64,
        valid_pct: if valid == 0 {
            None
        } else {
            Some(100.0 * valid_beats as f64 / valid as f64)
        },
        valid_cases: valid,
    })
}

/// Runs all three report families over one prediction set.
pub fn prediction_report(
    predictions: &[f64],
    actuals: &[f64],
    time_limits: &[f64],
) -> Result<PredictionReport> {
    Ok(PredictionReport {
        samples: predictions.len(),
        regression: regression_metrics(predictions, actuals)?,
        breakdown: error_breakdown(predictions, actuals, EXACT_TOLERANCE_MINUTES)?,
        effectiveness: effectiveness(predictions, actuals, time_limits)?,
    })
}

fn fmt4(v: f64) -> String {
    format!("{v:.4}")
}

fn fmt4_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), fmt4)
}

impl PredictionReport {
    /// Flat key-value rendering, 4 decimal places, machine-diffable.
    pub fn to_kv_string(&self) -> String {
        let r = &self.regression;
        let b = &self.breakdown;
        let e = &self.effectiveness;
        let class = |label: &str, c: &ClassStats| {
            format!(
                "{label}.cases = {}\n\
                 {label}.share_pct = {}\n\
                 {label}.min_error_minutes = {}\n\
                 {label}.max_error_minutes = {}\n\
                 {label}.avg_error_minutes = {}\n\
                 {label}.error_under_60min_pct = {}\n",
                c.cases,
                fmt4(c.share_pct),
                fmt4_opt(c.min_error),
                fmt4_opt(c.max_error),
                fmt4_opt(c.avg_error),
                fmt4_opt(c.small_error_pct),
            )
        };
        format!(
            "samples = {}\n\
             mae = {}\n\
             mse = {}\n\
             rmse = {}\n\
             r2 = {}\n\
             confidence_interval_95 = [0.0000, {}]\n\
             {}{}\
             exact.cases = {}\n\
             exact.share_pct = {}\n\
             effectiveness.general_pct = {}\n\
             effectiveness.valid_pct = {}\n\
             effectiveness.valid_cases = {}\n",
            self.samples,
            fmt4(r.mae),
            fmt4(r.mse),
            fmt4(r.rmse),
            fmt4_opt(r.r2),
            fmt4(r.error_interval_95),
            class("overestimation", &b.overestimation),
            class("underestimation", &b.underestimation),
            b.exact_cases,
            fmt4(b.exact_pct),
            fmt4(e.general_pct),
            fmt4_opt(e.valid_pct),
            e.valid_cases,
        )
    }
}
