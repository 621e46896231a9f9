//! Durable therapy records: patients, saved game sessions with their
//! telemetry and voice recordings, longitudinal trends and EMR export.
//!
//! Layout under the store root:
//!
//! ```text
//! patients.jsonl                 index, one tagged entry per line
//! levels.jsonl                   saved level configurations
//! <patient>/session-<id>.json
//! <patient>/telemetry-<id>.jsonl
//! <patient>/voice-<id>.wav
//! ```
//!
//! A save writes and syncs the session files before appending its index
//! line, so a crash leaves either a complete session or none.

mod emr;
mod levels;
mod trend;

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use uuid::Uuid;

use crate::audio::{read_wav, write_wav, AudioClip, AudioError};
use crate::game::{LevelConfig, SessionMetrics, TelemetryTick};

pub use emr::{EmrDocument, EmrSession, EMR_SCHEMA};
pub use levels::StoredLevel;
pub use trend::{ols_slope, TrendPoint, TrendSeries, CLINICAL_FACTORS};

pub const SCHEMA_VERSION: u32 = 1;
pub const INDEX_FILE: &str = "patients.jsonl";
pub const LEVELS_FILE: &str = "levels.jsonl";
/// Set to `before-index-append` to abort the process between writing a
/// session's files and committing its index line.
pub const FAILPOINT_ENV: &str = "VOCALPLAY_FAILPOINT";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("patient {0} not found")]
    PatientNotFound(String),
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("level {0} not found")]
    LevelNotFound(String),
    #[error("unknown metric {0:?}")]
    UnknownMetric(String),
    #[error("store corrupted at {}: {reason}", path.display())]
    Corrupt { path: PathBuf, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Audio(#[from] AudioError),
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

/// Fresh random identifier for patients, sessions and levels.
pub fn new_id() -> String {
    Uuid::new_v4().to_string()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patient {
    pub id: String,
    pub display_name: String,
    pub created_at: DateTime<Utc>,
    pub notes: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TherapySession {
    pub id: String,
    pub patient_id: String,
    pub started_at: DateTime<Utc>,
    pub level: LevelConfig,
    pub metrics: SessionMetrics,
    /// Relative to the store root.
    pub telemetry_path: String,
    pub recording_path: Option<String>,
    pub estimator_name: String,
    pub schema_version: u32,
}

/// Input to [`SessionStore::save_therapy`].
#[derive(Debug, Clone)]
pub struct NewTherapy<'a> {
    pub patient_id: &'a str,
    pub started_at: DateTime<Utc>,
    pub level: &'a LevelConfig,
    pub telemetry: &'a [TelemetryTick],
    pub metrics: &'a SessionMetrics,
    pub recording: Option<&'a AudioClip>,
    pub estimator_name: &'a str,
}

/// What [`SessionStore::replay`] hands back.
#[derive(Debug, Clone)]
pub struct Replay {
    pub session: TherapySession,
    pub level: LevelConfig,
    pub telemetry: Vec<TelemetryTick>,
    pub recording: Option<AudioClip>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Failpoint {
    BeforeIndexAppend,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum IndexEntry {
    Patient(Patient),
    Session(TherapySession),
}

#[derive(Debug)]
pub struct SessionStore {
    root: PathBuf,
    patients: Vec<Patient>,
    sessions: Vec<TherapySession>,
    levels: Vec<StoredLevel>,
    failpoint: Option<Failpoint>,
}

impl SessionStore {
    /// Opens (creating if needed) the store at `root`. A torn final index
    /// line from an interrupted append is cut off.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        fs::create_dir_all(&root)?;
        let index_path = root.join(INDEX_FILE);
        let mut patients = Vec::new();
        let mut sessions: Vec<TherapySession> = Vec::new();
        for (line_no, line) in read_jsonl_lines(&index_path)?.into_iter().enumerate() {
            let entry: IndexEntry = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                path: index_path.clone(),
                reason: format!("line {}: {e}", line_no + 1),
            })?;
            match entry {
                IndexEntry::Patient(p) => patients.push(p),
                IndexEntry::Session(s) => {
                    if !patients.iter().any(|p: &Patient| p.id == s.patient_id) {
                        return Err(StoreError::Corrupt {
                            path: index_path.clone(),
                            reason: format!("session {} refers to unknown patient {}", s.id, s.patient_id),
                        });
                    }
                    if s.schema_version > SCHEMA_VERSION {
                        return Err(StoreError::Corrupt {
                            path: index_path.clone(),
                            reason: format!("session {} has schema version {}", s.id, s.schema_version),
                        });
                    }
                    sessions.push(s);
                }
            }
        }
        let levels = levels::load(&root.join(LEVELS_FILE))?;
        let failpoint = match std::env::var(FAILPOINT_ENV).as_deref() {
            Ok("before-index-append") => Some(Failpoint::BeforeIndexAppend),
            _ => None,
        };
        Ok(Self {
            root,
            patients,
            sessions,
            levels,
            failpoint,
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn set_failpoint(&mut self, failpoint: Option<Failpoint>) {
        self.failpoint = failpoint;
    }

    pub fn create_patient(&mut self, display_name: &str, notes: &str) -> Result<Patient> {
        let display_name = display_name.trim();
        if display_name.is_empty() {
            return Err(StoreError::Validation("display name must not be empty".into()));
        }
        let patient = Patient {
            id: new_id(),
            display_name: display_name.to_string(),
            created_at: Utc::now(),
            notes: notes.to_string(),
        };
        fs::create_dir_all(self.root.join(&patient.id))?;
        self.append_index(&IndexEntry::Patient(patient.clone()))?;
        self.patients.push(patient.clone());
        Ok(patient)
    }

    pub fn patients(&self) -> &[Patient] {
        &self.patients
    }

    pub fn patient(&self, id: &str) -> Result<&Patient> {
        self.patients
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| StoreError::PatientNotFound(id.to_string()))
    }

    /// All sessions in save order, optionally for one patient.
    pub fn sessions(&self, patient_id: Option<&str>) -> Result<Vec<&TherapySession>> {
        if let Some(id) = patient_id {
            self.patient(id)?;
        }
        Ok(self
            .sessions
            .iter()
            .filter(|s| patient_id.map_or(true, |id| s.patient_id == id))
            .collect())
    }

    pub fn session(&self, id: &str) -> Result<&TherapySession> {
        self.sessions
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| StoreError::SessionNotFound(id.to_string()))
    }

    pub fn save_therapy(&mut self, input: NewTherapy<'_>) -> Result<TherapySession> {
        self.patient(input.patient_id)?;
        if input.telemetry.is_empty() {
            return Err(StoreError::Validation("telemetry is empty".into()));
        }
        let id = new_id();
        let dir = self.root.join(input.patient_id);
        fs::create_dir_all(&dir)?;
        let rel = |name: String| format!("{}/{}", input.patient_id, name);

        let telemetry_path = rel(format!("telemetry-{id}.jsonl"));
        {
            let file = File::create(self.root.join(&telemetry_path))?;
            let mut w = BufWriter::new(file);
            for tick in input.telemetry {
                serde_json::to_writer(&mut w, tick)?;
                w.write_all(b"\n")?;
            }
            w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        }

        let recording_path = match input.recording {
            Some(clip) => {
                let path = rel(format!("voice-{id}.wav"));
                let full = self.root.join(&path);
                write_wav(clip, &full)?;
                File::open(&full)?.sync_all()?;
                Some(path)
            }
            None => None,
        };

        let session = TherapySession {
            id: id.clone(),
            patient_id: input.patient_id.to_string(),
            started_at: input.started_at,
            level: input.level.clone(),
            metrics: input.metrics.clone(),
            telemetry_path,
            recording_path,
            estimator_name: input.estimator_name.to_string(),
            schema_version: SCHEMA_VERSION,
        };
        {
            let mut file = File::create(dir.join(format!("session-{id}.json")))?;
            serde_json::to_writer_pretty(&mut file, &session)?;
            file.write_all(b"\n")?;
            file.sync_all()?;
        }
        sync_dir(&dir)?;

        if self.failpoint == Some(Failpoint::BeforeIndexAppend) {
            std::process::abort();
        }
        self.append_index(&IndexEntry::Session(session.clone()))?;
        self.sessions.push(session.clone());
        Ok(session)
    }

    /// Loads a session's level, telemetry and recording exactly as saved.
    pub fn replay(&self, session_id: &str) -> Result<Replay> {
        let session = self.session(session_id)?.clone();
        let telemetry_path = self.root.join(&session.telemetry_path);
        let lines = match read_jsonl_lines(&telemetry_path) {
            Ok(lines) if telemetry_path.exists() => lines,
            Ok(_) => return Err(corrupt(&telemetry_path, "file missing")),
            Err(e) => return Err(corrupt(&telemetry_path, &e.to_string())),
        };
        let telemetry = lines
            .iter()
            .map(|l| serde_json::from_str(l))
            .collect::<std::result::Result<Vec<TelemetryTick>, _>>()
            .map_err(|e| corrupt(&telemetry_path, &e.to_string()))?;
        if telemetry.is_empty() {
            return Err(corrupt(&telemetry_path, "no telemetry"));
        }
        let recording = match &session.recording_path {
            Some(rel) => {
                let path = self.root.join(rel);
                Some(read_wav(&path).map_err(|e| corrupt(&path, &e.to_string()))?)
            }
            None => None,
        };
        Ok(Replay {
            level: session.level.clone(),
            session,
            telemetry,
            recording,
        })
    }

    /// Every path a session refers to, absolute.
    pub fn session_files(&self, session: &TherapySession) -> Vec<PathBuf> {
        let mut files = vec![
            self.root
                .join(&session.patient_id)
                .join(format!("session-{}.json", session.id)),
            self.root.join(&session.telemetry_path),
        ];
        files.extend(session.recording_path.as_ref().map(|p| self.root.join(p)));
        files
    }

    pub fn trend(&self, patient_id: &str, metric: &str) -> Result<TrendSeries> {
        let sessions = self.sessions(Some(patient_id))?;
        trend::trend(&sessions, metric)
    }

    pub fn export_emr(&self, patient_id: &str) -> Result<EmrDocument> {
        let patient = self.patient(patient_id)?.clone();
        let sessions = self.sessions(Some(patient_id))?;
        emr::build(patient, &sessions)
    }

    pub fn levels(&self) -> &[StoredLevel] {
        &self.levels
    }

    pub fn level(&self, id: &str) -> Result<&StoredLevel> {
        self.levels
            .iter()
            .find(|l| l.id == id)
            .ok_or_else(|| StoreError::LevelNotFound(id.to_string()))
    }

    pub fn create_level(&mut self, name: &str, level: LevelConfig) -> Result<StoredLevel> {
        let stored = StoredLevel::new(new_id(), name, level)?;
        levels::append(&self.root.join(LEVELS_FILE), &stored)?;
        self.levels.push(stored.clone());
        Ok(stored)
    }

    /// Replaces a saved level. The previous version stays in the file; the
    /// latest line for an id wins on load.
    pub fn update_level(&mut self, id: &str, name: &str, level: LevelConfig) -> Result<StoredLevel> {
        let pos = self
            .levels
            .iter()
            .position(|l| l.id == id)
            .ok_or_else(|| StoreError::LevelNotFound(id.to_string()))?;
        let stored = StoredLevel::new(id.to_string(), name, level)?;
        levels::append(&self.root.join(LEVELS_FILE), &stored)?;
        self.levels[pos] = stored.clone();
        Ok(stored)
    }

    fn append_index(&self, entry: &IndexEntry) -> Result<()> {
        append_line(&self.root.join(INDEX_FILE), &serde_json::to_string(entry)?)
    }
}

fn corrupt(path: &Path, reason: &str) -> StoreError {
    StoreError::Corrupt {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut buf = Vec::with_capacity(line.len() + 1);
    buf.extend_from_slice(line.as_bytes());
    buf.push(b'\n');
    file.write_all(&buf)?;
    file.sync_data()?;
    Ok(())
}

/// Complete lines of a JSON Lines file. An unterminated last line is an
/// interrupted append and gets truncated away. A missing file reads as empty.
fn read_jsonl_lines(path: &Path) -> Result<Vec<String>> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(e.into()),
    };
    let mut reader = BufReader::new(file);
    let mut lines = Vec::new();
    let mut committed = 0u64;
    let mut buf = String::new();
    loop {
        buf.clear();
        let n = reader.read_line(&mut buf)?;
        if n == 0 {
            break;
        }
        if !buf.ends_with('\n') {
            OpenOptions::new().write(true).open(path)?.set_len(committed)?;
            break;
        }
        committed += n as u64;
        let line = buf.trim_end();
        if !line.is_empty() {
            lines.push(line.to_string());
        }
    }
    Ok(lines)
}

#[cfg(unix)]
fn sync_dir(dir: &Path) -> Result<()> {
    File::open(dir)?.sync_all()?;
    Ok(())
}

#[cfg(not(unix))]
fn sync_dir(_dir: &Path) -> Result<()> {
    Ok(())
}
