use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{Result, StoreError, TherapySession};
use crate::game::METRIC_NAMES;

/// The four clinical factors tracked across sessions.
pub const CLINICAL_FACTORS: [&str; 4] = ["phonation_time_ms", "pitch_change_mel", "duration_s", "reaction_time_ms"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    /// Position of the session among the patient's sessions.
    pub session_index: usize,
    pub started_at: DateTime<Utc>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendSeries {
    pub metric_name: String,
    pub points: Vec<TrendPoint>,
    /// Least-squares change per session; absent below two points.
    pub slope: Option<f64>,
    pub n: usize,
}

/// Ordinary least-squares slope of y on x. `None` with fewer than two
/// points or when all x are equal.
pub fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub(super) fn trend(sessions: &[&TherapySession], metric: &str) -> Result<TrendSeries> {
    if !METRIC_NAMES.contains(&metric) {
        return Err(StoreError::UnknownMetric(metric.to_string()));
    }
    let points: Vec<TrendPoint> = sessions
        .iter()
        .enumerate()
        .filter_map(|(i, s)| {
            s.metrics.get(metric).map(|value| TrendPoint {
                session_index: i,
                started_at: s.started_at,
                value,
            })
        })
        .collect();
    let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.session_index as f64, p.value)).collect();
    Ok(TrendSeries {
        metric_name: metric.to_string(),
        n: points.len(),
        slope: ols_slope(&xy),
        points,
    })
}
