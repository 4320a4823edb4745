use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sim::SimTrace;

/// Desired/actual velocity pairs of one cohort plus its daily spend (the
/// SWPE weight source).
#[derive(Debug, Clone, PartialEq)]
pub struct CohortVelocities {
    pub desired: Vec<f64>,
    pub actual: Vec<f64>,
    pub daily_spend: f64,
}

impl CohortVelocities {
    /// One (desired, actual) pair per pacing cycle: the actual velocity is
    /// the cycle-average spend from consecutive cumulative-spend records.
    pub fn from_trace(trace: &SimTrace) -> Self {
        let mut desired = Vec::new();
        let mut actual = Vec::new();
        for w in trace.rows.windows(2) {
            let dt_min = (w[1].time_s - w[0].time_s) / 60.0;
            desired.push(w[0].desired_v);
            actual.push((w[1].cum_spend - w[0].cum_spend) / dt_min);
        }
        Self { desired, actual, daily_spend: trace.total_spend }
    }
}

/// Pacing error metrics across cohorts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacingErrorReport {
    /// Mean over cohorts of the mean relative execution error.
    pub pe: f64,
    /// Spend-weighted variant; weights sum to 1.
    pub swpe: f64,
    pub per_cohort_errors: Vec<f64>,
    pub weights: Vec<f64>,
    /// Measurement pairs dropped because the desired velocity was zero.
    pub excluded_pairs: usize,
}

/// Relative execution error `|dS - aS| / dS`, averaged per cohort and then
/// across cohorts (PE), plus the spend-weighted aggregate (SWPE).
/// Pairs with zero desired velocity are excluded and counted; a cohort whose
/// pairs are all excluded is rejected.
pub fn pacing_error(cohorts: &[CohortVelocities]) -> Result<PacingErrorReport> {
    if cohorts.is_empty() {
        return Err(Error::InvalidInput("pacing_error needs at least one cohort".into()));
    }
    let mut per_cohort_errors = Vec::with_capacity(cohorts.len());
    let mut excluded_pairs = 0;
    for (i, c) in cohorts.iter().enumerate() {
        if c.desired.len() != c.actual.len() || c.desired.is_empty() {
            return Err(Error::InvalidInput(format!(
                "cohort {i}: desired/actual series must be nonempty and equal-length"
            )));
        }
        let mut sum = 0.0;
        let mut m = 0usize;
        for (&ds, &asv) in c.desired.iter().zip(&c.actual) {
            if ds > 0.0 {
                sum += (ds - asv).abs() / ds;
                m += 1;
            } else {
                excluded_pairs += 1;
            }
        }
        if m == 0 {
            return Err(Error::InvalidInput(format!(
                "cohort {i}: desired velocity is zero for every measurement"
            )));
        }
        per_cohort_errors.push(sum / m as f64);
    }
    let total_spend: f64 = cohorts.iter().map(|c| c.daily_spend).sum();
    if !(total_spend > 0.0) {
        return Err(Error::InvalidInput("total cohort spend must be > 0".into()));
    }
    let weights: Vec<f64> = cohorts.iter().map(|c| c.daily_spend / total_spend).collect();
    let n = cohorts.len() as f64;
    let pe = per_cohort_errors.iter().sum::<f64>() / n;
    let swpe = per_cohort_errors
        .iter()
        .zip(&weights)
        .map(|(e, w)| e * w)
        .sum::<f64>()
        / n;
    Ok(PacingErrorReport { pe, swpe, per_cohort_errors, weights, excluded_pairs })
}
