use chrono::{Duration, TimeZone, Utc};
use vocalplay_core::game::{run_trace, session_metrics, ControlSample, LevelConfig, SessionMetrics, TimedControl};
use vocalplay_core::store::{NewTherapy, SessionStore, StoreError, EMR_SCHEMA};

fn game(seed: u64) -> (LevelConfig, Vec<vocalplay_core::TelemetryTick>) {
    let level = LevelConfig {
        rng_seed: seed,
        session_duration_s: 2.0,
        ..Default::default()
    };
    let trace: Vec<_> = (0..50)
        .map(|i| TimedControl {
            time: i as f64 * 0.05,
            sample: if (i + seed as usize) % 4 == 0 {
                ControlSample::UNVOICED
            } else {
                ControlSample::voiced(180.0 + i as f64)
            },
        })
        .collect();
    let s = run_trace(&level, &trace).unwrap();
    (level, s.telemetry)
}

fn save_with(store: &mut SessionStore, patient: &str, day: i64, metrics: &SessionMetrics) -> String {
    let (level, telemetry) = game(day as u64);
    store
        .save_therapy(NewTherapy {
            patient_id: patient,
            started_at: Utc.with_ymd_and_hms(2026, 1, 1, 9, 0, 0).unwrap() + Duration::days(day),
            level: &level,
            telemetry: &telemetry,
            metrics,
            recording: None,
            estimator_name: "yin",
        })
        .unwrap()
        .id
}

fn metrics_with_phonation(ms: f64) -> SessionMetrics {
    SessionMetrics {
        phonation_time_ms: ms,
        pitch_change_mel: 10.0,
        duration_s: 60.0,
        reaction_time_ms: None,
        score: 3,
        mean_pitch_mel: Some(210.0),
    }
}

#[test]
fn trend_over_sessions() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = SessionStore::open(dir.path()).unwrap();
    let p = store.create_patient("Ana", "").unwrap();
    for (day, ms) in [1000.0, 1500.0, 2000.0].into_iter().enumerate() {
        save_with(&mut store, &p.id, day as i64, &metrics_with_phonation(ms));
    }
    let t = store.trend(&p.id, "phonation_time_ms").unwrap();
    assert_eq!(t.slope, Some(500.0));
    assert_eq!(t.n, 3);
    assert_eq!(store.trend(&p.id, "duration_s").unwrap().slope, Some(0.0));
    let r = store.trend(&p.id, "reaction_time_ms").unwrap();
    assert_eq!((r.n, r.slope), (0, None));
    assert!(matches!(store.trend(&p.id, "loudness"), Err(StoreError::UnknownMetric(_))));
    assert!(matches!(store.trend("ghost", "score"), Err(StoreError::PatientNotFound(_))));

    let q = store.create_patient("Bo", "").unwrap();
    save_with(&mut store, &q.id, 0, &metrics_with_phonation(900.0));
    let single = store.trend(&q.id, "phonation_time_ms").unwrap();
    assert_eq!((single.points.len(), single.slope), (1, None));
}

#[test]
fn emr_is_pure_and_matches_schema() {
    let schema: serde_json::Value = serde_json::from_str(EMR_SCHEMA).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let mut store = SessionStore::open(dir.path()).unwrap();
    let empty = store.create_patient("Empty", "").unwrap();
    let doc = store.export_emr(&empty.id).unwrap();
    assert!(doc.sessions.is_empty());
    assert!(compiled.is_valid(&serde_json::to_value(&doc).unwrap()));

    let p = store.create_patient("Ana", "post-op").unwrap();
    // Saved out of chronological order on purpose.
    for day in [3, 1, 2] {
        let (_, telemetry) = game(day as u64);
        let m = session_metrics(&telemetry).unwrap();
        save_with(&mut store, &p.id, day, &m);
    }
    let first = store.export_emr(&p.id).unwrap().to_json();
    let reopened = SessionStore::open(dir.path()).unwrap();
    let second = reopened.export_emr(&p.id).unwrap().to_json();
    assert_eq!(first, second);

    let value: serde_json::Value = serde_json::from_str(&first).unwrap();
    if let Err(errors) = compiled.validate(&value) {
        panic!("schema violations: {:?}", errors.map(|e| e.to_string()).collect::<Vec<_>>());
    }
    let doc = reopened.export_emr(&p.id).unwrap();
    let days: Vec<_> = doc.sessions.iter().map(|s| s.started_at).collect();
    let mut sorted = days.clone();
    sorted.sort();
    assert_eq!(days, sorted);
    let names: Vec<_> = doc.trends.iter().map(|t| t.metric_name.as_str()).collect();
    assert_eq!(names, ["phonation_time_ms", "pitch_change_mel", "duration_s", "reaction_time_ms"]);
    assert!(matches!(store.export_emr("ghost"), Err(StoreError::PatientNotFound(_))));
}

#[test]
fn interleaved_saves_resolve() {
    let dir = tempfile::tempdir().unwrap();
    let mut store = SessionStore::open(dir.path()).unwrap();
    let patients: Vec<_> = (0..5)
        .map(|i| store.create_patient(&format!("P{i}"), "").unwrap().id)
        .collect();
    for k in 0..50 {
        let (level, telemetry) = game(k);
        let metrics = session_metrics(&telemetry).unwrap();
        let clip = (k % 2 == 0).then(|| {
            vocalplay_core::AudioClip::new(vec![0.25; 1600], 16_000, "mic").unwrap()
        });
        store
            .save_therapy(NewTherapy {
                patient_id: &patients[(k as usize * 3) % 5],
                started_at: Utc::now(),
                level: &level,
                telemetry: &telemetry,
                metrics: &metrics,
                recording: clip.as_ref(),
                estimator_name: "acf",
            })
            .unwrap();
    }
    let reopened = SessionStore::open(dir.path()).unwrap();
    let sessions = reopened.sessions(None).unwrap();
    assert_eq!(sessions.len(), 50);
    for s in sessions {
        reopened.patient(&s.patient_id).unwrap();
        for f in reopened.session_files(s) {
            assert!(f.is_file(), "{}", f.display());
        }
        let replay = reopened.replay(&s.id).unwrap();
        assert_eq!(replay.telemetry.last().unwrap().state.score, s.metrics.score);
    }
    for p in &patients {
        assert_eq!(reopened.sessions(Some(p)).unwrap().len(), 10);
    }
}
