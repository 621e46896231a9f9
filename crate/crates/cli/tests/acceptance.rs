//! Acceptance suite. Every criterion runs at its stated tolerance and prints
//! one PASS/FAIL line; the test fails if any criterion fails.

use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use futures::{SinkExt, StreamExt};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tokio_tungstenite::tungstenite::Message;
use vocalplay_cli::config::ServeConfig;
use vocalplay_cli::service;
use vocalplay_core::audio::{frame_stream, read_wav};
use vocalplay_core::bench::{evaluate, generate_corpus, ScaledTruth, Tag};
use vocalplay_core::game::{
    control_velocity, run_ticks, run_trace, session_metrics, ControlSample, LevelConfig, SessionMetrics, TimedControl,
};
use vocalplay_core::pitch::{hz_to_mel, hz_to_midi, mel_to_hz};
use vocalplay_core::store::{NewTherapy, SessionStore, FAILPOINT_ENV, INDEX_FILE};
use vocalplay_core::wire::{TelemetryBody, TelemetryMessage, WireAudioFrame};
use vocalplay_core::{Estimator, EstimatorConfig, PitchFrame};

type Outcome = Result<(), String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Outcome {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Outcome {
    let took = start.elapsed();
    check(took < limit, || format!("took {took:?}, limit {limit:?}"))
}

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_vocalplay"));
    cmd.env_remove("VOCALPLAY_STORE").env_remove(FAILPOINT_ENV);
    cmd
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn scales() -> Outcome {
    let start = Instant::now();
    for (hz, number, name) in [(440.0, 69, "A4"), (880.0, 81, "A5")] {
        let m = hz_to_midi(hz).map_err(|e| e.to_string())?;
        check(m.number == number && m.name == name && m.cents == 0.0, || {
            format!("hz_to_midi({hz}) = {m:?}")
        })?;
    }
    for hz in 60..=1000 {
        let hz = f64::from(hz);
        let back = mel_to_hz(hz_to_mel(hz).unwrap()).unwrap();
        check(((back - hz) / hz).abs() < 1e-6, || format!("{hz} Hz round-trips to {back}"))?;
    }
    within(Duration::from_secs(1), start)
}

fn estimator_oracles() -> Outcome {
    let start = Instant::now();
    let cfg = EstimatorConfig::default();
    let corpus = generate_corpus(2024);
    let clean: Vec<_> = corpus.iter().filter(|i| i.has_tag(Tag::Steady) && i.is_clean()).collect();
    check(clean.len() == 7, || format!("{} clean steady tones", clean.len()))?;
    for item in &clean {
        let frames = frame_stream(&item.clip, item.framing.window, item.framing.hop).map_err(|e| e.to_string())?;
        let interior = 1..frames.len() - 1;
        for est in Estimator::ALL {
            for k in interior.clone() {
                let truth = item.truth[k].f0_hz.expect("steady tones are voiced");
                let got = est.estimate(&frames[k], &cfg).f0_hz;
                let err = got.map(|f| ((f - truth) / truth).abs());
                check(err.is_some_and(|e| e < 0.01), || {
                    format!("{} on {} frame {k}: {got:?} vs {truth}", est.name(), item.id)
                })?;
            }
        }
    }
    let noisy: Vec<_> = corpus.iter().filter(|i| i.id.ends_with("-snr20")).cloned().collect();
    check(!noisy.is_empty(), || "no 20 dB items".into())?;
    for est in [Estimator::Yin, Estimator::Acf] {
        let r = evaluate(&est, &noisy, &cfg).map_err(|e| e.to_string())?;
        check(r.gpe_rate < 0.02, || format!("{} gpe {} at 20 dB", est.name(), r.gpe_rate))?;
    }
    within(Duration::from_secs(30), start)
}

fn amplitude_invariance() -> Outcome {
    let cfg = EstimatorConfig::default();
    let corpus = generate_corpus(2024);
    for item in corpus.iter().filter(|i| i.is_clean() && !i.has_tag(Tag::Silence)) {
        let frames = frame_stream(&item.clip, item.framing.window, item.framing.hop).map_err(|e| e.to_string())?;
        for frame in &frames[1..frames.len() - 1] {
            for est in Estimator::ALL {
                let Some(reference) = est.estimate(frame, &cfg).f0_hz else {
                    continue;
                };
                for c in [0.1f32, 0.5] {
                    let got = est.estimate(&frame.scaled(c), &cfg).f0_hz;
                    check(got.is_some_and(|f| ((f - reference) / reference).abs() < 1e-3), || {
                        format!("{} on {} at x{c}: {got:?} vs {reference}", est.name(), item.id)
                    })?;
                }
            }
        }
    }
    Ok(())
}

fn bench_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let paths = [dir.path().join("a.csv"), dir.path().join("b.csv")];
    for p in &paths {
        let out = bin().args(["bench", "--seed", "17", "--out"]).arg(p).output().map_err(|e| e.to_string())?;
        check(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    }
    let (a, b) = (std::fs::read(&paths[0]).unwrap(), std::fs::read(&paths[1]).unwrap());
    check(a == b, || "reports differ".into())?;

    let corpus = generate_corpus(17);
    let cfg = EstimatorConfig::default();
    let oracle = evaluate(&ScaledTruth::oracle(), &corpus, &cfg).map_err(|e| e.to_string())?;
    check(oracle.gpe_rate == 0.0 && oracle.fpe_cents == 0.0, || format!("oracle {oracle:?}"))?;
    let half = evaluate(&ScaledTruth::octave_down(), &corpus, &cfg).map_err(|e| e.to_string())?;
    check(half.gpe_rate == 1.0, || format!("half-frequency gpe {}", half.gpe_rate))
}

fn control_law() -> Outcome {
    let level = LevelConfig::default();
    let held = level.voice_maintenance_ms;
    let s = level.sensitivity;
    let cases = [
        (ControlSample::voiced(250.0), held, s),
        (ControlSample::voiced(150.0), held, -s),
        (ControlSample::voiced(200.0), held, -s),
        (ControlSample::UNVOICED, held, 0.0),
        (ControlSample::voiced(250.0), held - 1.0, 0.0),
        (ControlSample::voiced(150.0), 0.0, 0.0),
    ];
    for (sample, streak, want) in cases {
        let got = control_velocity(&sample, streak, &level);
        check(got == want, || format!("{sample:?} after {streak} ms: {got}, want {want}"))?;
    }
    Ok(())
}

fn random_level(rng: &mut ChaCha8Rng) -> LevelConfig {
    LevelConfig {
        sensitivity: rng.gen_range(0.05..1.0),
        x_spread: rng.gen_range(0.0..0.5),
        y_spread: rng.gen_range(0.0..=1.0),
        incoming_speed: rng.gen_range(0.1..0.8),
        voice_maintenance_ms: rng.gen_range(0.0..500.0),
        session_duration_s: rng.gen_range(1.0..30.0),
        pitch_threshold_mel: rng.gen_range(100.0..300.0),
        spawn_interval_s: rng.gen_range(0.3..4.0),
        planet_radius: rng.gen_range(0.01..0.15),
        ship_radius: rng.gen_range(0.01..0.1),
        rng_seed: rng.gen(),
    }
}

fn random_trace(rng: &mut ChaCha8Rng, until: f64) -> Vec<TimedControl> {
    let mut t = 0.0;
    let mut trace = Vec::new();
    while t <= until + 0.2 {
        let sample = if rng.gen_bool(0.7) {
            ControlSample::voiced(rng.gen_range(100.0..320.0))
        } else {
            ControlSample::UNVOICED
        };
        trace.push(TimedControl { time: t, sample });
        t += rng.gen_range(0.005..0.1);
    }
    trace
}

fn game_replay() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut store = SessionStore::open(dir.path()).map_err(|e| e.to_string())?;
    let patient = store.create_patient("Replay", "").map_err(|e| e.to_string())?.id;
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let mut saved = Vec::new();
    for i in 0..100 {
        let level = random_level(&mut rng);
        let trace = random_trace(&mut rng, level.session_duration_s);
        let first = run_trace(&level, &trace).map_err(|e| e.to_string())?;
        let second = run_trace(&level, &trace).map_err(|e| e.to_string())?;
        check(first.score() == second.score() && first.telemetry == second.telemetry, || {
            format!("pair {i} is not deterministic")
        })?;
        let metrics = session_metrics(&first.telemetry).map_err(|e| e.to_string())?;
        let record = store
            .save_therapy(NewTherapy {
                patient_id: &patient,
                started_at: chrono::Utc::now(),
                level: &level,
                telemetry: &first.telemetry,
                metrics: &metrics,
                recording: None,
                estimator_name: "trace",
            })
            .map_err(|e| e.to_string())?;
        saved.push(record.id);
    }
    let store = SessionStore::open(dir.path()).map_err(|e| e.to_string())?;
    for id in saved {
        let replay = store.replay(&id).map_err(|e| e.to_string())?;
        let resim = run_ticks(&replay.level, replay.telemetry.iter().map(|t| (t.dt_us, t.control)))
            .map_err(|e| e.to_string())?;
        check(resim.score() == replay.session.metrics.score, || {
            format!("{id}: replay {} vs stored {}", resim.score(), replay.session.metrics.score)
        })?;
    }
    Ok(())
}

fn metrics_golden() -> Outcome {
    let level = LevelConfig {
        session_duration_s: 10.0,
        spawn_interval_s: 1000.0,
        ..LevelConfig::default()
    };
    // Voiced from 1.2 s to 4.2 s, ramping 180 to 260 Mel.
    let trace: Vec<TimedControl> = (0..=100)
        .map(|i| TimedControl {
            time: i as f64 * 0.1,
            sample: if (12..42).contains(&i) {
                ControlSample::voiced(180.0 + 80.0 * (i - 12) as f64 / 29.0)
            } else {
                ControlSample::UNVOICED
            },
        })
        .collect();
    let session = run_trace(&level, &trace).map_err(|e| e.to_string())?;
    let m = session_metrics(&session.telemetry).map_err(|e| e.to_string())?;
    check(
        m.phonation_time_ms == 3000.0
            && m.pitch_change_mel == 80.0
            && m.reaction_time_ms == Some(1200.0)
            && m.duration_s == 10.0,
        || format!("{m:?}"),
    )
}

fn metrics_with(phonation_ms: f64) -> SessionMetrics {
    SessionMetrics {
        phonation_time_ms: phonation_ms,
        pitch_change_mel: 0.0,
        duration_s: 60.0,
        reaction_time_ms: None,
        score: 0,
        mean_pitch_mel: None,
    }
}

fn trend() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut store = SessionStore::open(dir.path()).map_err(|e| e.to_string())?;
    let level = LevelConfig::default();
    let telemetry = run_trace(&level, &random_trace(&mut ChaCha8Rng::seed_from_u64(1), 1.0))
        .map_err(|e| e.to_string())?
        .telemetry;
    let mut slope_for = |series: [f64; 3]| -> Result<Option<f64>, String> {
        let p = store.create_patient("Trend", "").map_err(|e| e.to_string())?.id;
        for (day, ms) in series.into_iter().enumerate() {
            store
                .save_therapy(NewTherapy {
                    patient_id: &p,
                    started_at: chrono::DateTime::from_timestamp(1_700_000_000 + day as i64 * 86_400, 0).unwrap(),
                    level: &level,
                    telemetry: &telemetry,
                    metrics: &metrics_with(ms),
                    recording: None,
                    estimator_name: "trace",
                })
                .map_err(|e| e.to_string())?;
        }
        Ok(store.trend(&p, "phonation_time_ms").map_err(|e| e.to_string())?.slope)
    };
    let rising = slope_for([1000.0, 1500.0, 2000.0])?;
    check(rising == Some(500.0), || format!("slope {rising:?}"))?;
    let flat = slope_for([1200.0; 3])?;
    check(flat == Some(0.0), || format!("constant slope {flat:?}"))
}

fn store_integrity() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut store = SessionStore::open(dir.path()).map_err(|e| e.to_string())?;
    let patients: Vec<String> = (0..5)
        .map(|i| store.create_patient(&format!("P{i}"), "").map(|p| p.id))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for k in 0..50 {
        let level = random_level(&mut rng);
        let session = run_trace(&level, &random_trace(&mut rng, 2.0)).map_err(|e| e.to_string())?;
        let metrics = session_metrics(&session.telemetry).map_err(|e| e.to_string())?;
        store
            .save_therapy(NewTherapy {
                patient_id: &patients[(k * 7) % 5],
                started_at: chrono::Utc::now(),
                level: &level,
                telemetry: &session.telemetry,
                metrics: &metrics,
                recording: None,
                estimator_name: "trace",
            })
            .map_err(|e| e.to_string())?;
    }
    let store = SessionStore::open(dir.path()).map_err(|e| e.to_string())?;
    let sessions = store.sessions(None).map_err(|e| e.to_string())?;
    check(sessions.len() == 50, || format!("{} sessions indexed", sessions.len()))?;
    for s in sessions {
        for f in store.session_files(s) {
            check(std::fs::read(&f).is_ok_and(|b| !b.is_empty()), || format!("unreadable {}", f.display()))?;
        }
        store.replay(&s.id).map_err(|e| e.to_string())?;
    }

    // Kill the writer between the file writes and the index append.
    let root = dir.path().join("crash");
    let add = bin().args(["patient", "add", "Crash", "--store"]).arg(&root).output().map_err(|e| e.to_string())?;
    check(add.status.success(), || String::from_utf8_lossy(&add.stderr).into_owned())?;
    let patient = String::from_utf8_lossy(&add.stdout).trim().to_string();
    let before = std::fs::read(root.join(INDEX_FILE)).map_err(|e| e.to_string())?;
    let crashed = bin()
        .arg("simulate")
        .arg("--level")
        .arg(fixture("level.json"))
        .arg("--trace")
        .arg(fixture("trace.jsonl"))
        .arg("--out")
        .arg(dir.path().join("t.jsonl"))
        .args(["--patient", &patient, "--store"])
        .arg(&root)
        .env(FAILPOINT_ENV, "before-index-append")
        .output()
        .map_err(|e| e.to_string())?;
    check(!crashed.status.success(), || "writer was not killed".into())?;
    let after = std::fs::read(root.join(INDEX_FILE)).map_err(|e| e.to_string())?;
    check(before == after, || "index changed".into())?;
    let reopened = SessionStore::open(&root).map_err(|e| e.to_string())?;
    let n = reopened.sessions(None).map_err(|e| e.to_string())?.len();
    check(n == 0, || format!("{n} dangling sessions"))
}

async fn stream_through_live(addr: SocketAddr, wav: &Path, expected: usize) -> Result<Vec<PitchFrame>, String> {
    let client = reqwest::Client::new();
    let patient: serde_json::Value = client
        .post(format!("http://{addr}/patients"))
        .json(&serde_json::json!({ "name": "Live" }))
        .send()
        .await
        .map_err(|e| e.to_string())?
        .json()
        .await
        .map_err(|e| e.to_string())?;
    let session: serde_json::Value = client
        .post(format!("http://{addr}/sessions"))
        .json(&serde_json::json!({ "patient_id": patient["id"], "estimator": "yin" }))
        .send()
        .await
        .map_err(|e| e.to_string())?
        .json()
        .await
        .map_err(|e| e.to_string())?;
    let id = session["session_id"].as_str().ok_or("no session id")?;
    let (mut ws, _) = tokio_tungstenite::connect_async(format!("ws://{addr}/live/{id}"))
        .await
        .map_err(|e| e.to_string())?;

    let clip = read_wav(wav).map_err(|e| e.to_string())?;
    let mut sent = 0usize;
    for chunk in clip.samples().chunks(733) {
        let frame = WireAudioFrame {
            sample_rate: clip.sample_rate(),
            timestamp_us: sent as u64 * 1_000_000 / u64::from(clip.sample_rate()),
            samples: chunk.to_vec(),
        };
        sent += chunk.len();
        ws.send(Message::Binary(frame.encode())).await.map_err(|e| e.to_string())?;
    }
    let mut frames = Vec::new();
    while frames.len() < expected {
        let msg = tokio::time::timeout(Duration::from_secs(20), ws.next())
            .await
            .map_err(|_| format!("timed out after {} frames", frames.len()))?
            .ok_or("stream closed")?
            .map_err(|e| e.to_string())?;
        if let Message::Text(text) = msg {
            let msg: TelemetryMessage = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            if let TelemetryBody::Pitch(p) = msg.body {
                frames.push(p);
            }
        }
    }
    let _ = ws.close(None).await;
    Ok(frames)
}

fn service_pipeline() -> Outcome {
    let wav = fixture("voice.wav");
    let out = bin()
        .args(["analyze", "--estimator", "yin", "--format", "jsonl"])
        .arg(&wav)
        .output()
        .map_err(|e| e.to_string())?;
    check(out.status.success(), || String::from_utf8_lossy(&out.stderr).into_owned())?;
    let offline: Vec<PitchFrame> = String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(serde_json::from_str)
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    check(offline.iter().any(|f| f.voiced) && offline.iter().any(|f| !f.voiced), || {
        "fixture should mix voiced and silent frames".into()
    })?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let runtime = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
    let live = runtime.block_on(async {
        let addr = service::spawn(ServeConfig {
            bind: "127.0.0.1:0".parse().unwrap(),
            store: dir.path().to_path_buf(),
            ..ServeConfig::default()
        })
        .await
        .map_err(|e| e.to_string())?;
        stream_through_live(addr, &wav, offline.len()).await
    })?;
    check(live.len() == offline.len(), || format!("{} live vs {} offline", live.len(), offline.len()))?;
    match live.iter().zip(&offline).position(|(a, b)| a != b) {
        Some(k) => Err(format!("frame {k} differs: {:?} vs {:?}", live[k], offline[k])),
        None => Ok(()),
    }
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("scale conversions", scales),
        ("estimator oracle suite", estimator_oracles),
        ("amplitude invariance", amplitude_invariance),
        ("benchmark determinism", bench_determinism),
        ("control law", control_law),
        ("game determinism and replay fidelity", game_replay),
        ("session metrics golden case", metrics_golden),
        ("trend", trend),
        ("store integrity", store_integrity),
        ("service pipeline equivalence", service_pipeline),
    ];
    let mut failed = Vec::new();
    let mut stdout = std::io::stdout();
    for (name, run) in criteria {
        match run() {
            Ok(()) => writeln!(stdout, "PASS {name}").unwrap(),
            Err(why) => {
                writeln!(stdout, "FAIL {name}: {why}").unwrap();
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
