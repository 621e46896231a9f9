use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::trend::{trend, CLINICAL_FACTORS};
use super::{Patient, Result, TherapySession, TrendSeries, SCHEMA_VERSION};
use crate::game::{LevelConfig, SessionMetrics};

/// JSON Schema for [`EmrDocument`].
pub const EMR_SCHEMA: &str = include_str!("../../schema/emr.schema.json");

/// Per-patient electronic medical record export. Serializes with a fixed
/// field order and carries no generation timestamp, so exporting an
/// unchanged store twice gives identical bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmrDocument {
    pub schema_version: u32,
    pub patient: Patient,
    pub sessions: Vec<EmrSession>,
    pub trends: Vec<TrendSeries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmrSession {
    pub id: String,
    pub started_at: DateTime<Utc>,
    pub estimator_name: String,
    pub level: LevelConfig,
    pub metrics: SessionMetrics,
}

impl EmrDocument {
    pub fn to_json(&self) -> String {
        let mut out = serde_json::to_string_pretty(self).expect("EMR serializes");
        out.push('\n');
        out
    }
}

pub(super) fn build(patient: Patient, sessions: &[&TherapySession]) -> Result<EmrDocument> {
    let mut ordered: Vec<&TherapySession> = sessions.to_vec();
    ordered.sort_by_key(|s| s.started_at);
    let trends = CLINICAL_FACTORS
        .iter()
        .map(|m| trend(&ordered, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(EmrDocument {
        schema_version: SCHEMA_VERSION,
        patient,
        sessions: ordered
            .iter()
            .map(|s| EmrSession {
                id: s.id.clone(),
                started_at: s.started_at,
                estimator_name: s.estimator_name.clone(),
                level: s.level.clone(),
                metrics: s.metrics.clone(),
            })
            .collect(),
        trends,
    })
}
