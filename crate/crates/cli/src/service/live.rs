//! One `/live` connection. A reader task decodes audio frames, re-frames
//! them for analysis and pushes the frames into a ring; the connection task
//! drains the ring through analysis and the game, and a writer task owns
//! the socket's send half.

use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::ws::{CloseFrame, Message, WebSocket};
use futures::stream::SplitStream;
use futures::{SinkExt, StreamExt};
use tokio::sync::{mpsc, Notify};
use vocalplay_core::audio::{check_rate, AudioRing, Framing, StreamFramer};
use vocalplay_core::game::{session_metrics, GameSession, GameStatus};
use vocalplay_core::pitch::analyze;
use vocalplay_core::store::NewTherapy;
use vocalplay_core::wire::{SessionEnd, TelemetryBody, TelemetryMessage, WireAudioFrame};
use vocalplay_core::{AudioClip, AudioFrame, ControlSample};

use super::{AppState, PendingSession};

pub const CLOSE_NORMAL: u16 = 1000;
pub const CLOSE_PROTOCOL: u16 = 1002;
pub const CLOSE_INTERNAL: u16 = 1011;

/// How long to wait for the client's close reply before dropping the socket.
const CLOSE_WAIT: std::time::Duration = std::time::Duration::from_secs(5);

struct Shared {
    ring: AudioRing<AudioFrame>,
    wake: Notify,
    input_done: AtomicBool,
    violated: AtomicBool,
    /// Set once the outcome is known; later input is read and discarded so
    /// the close handshake can complete.
    stopped: AtomicBool,
    recording: Mutex<(u32, Vec<f32>)>,
}

enum Outcome {
    Finished(GameSession),
    Disconnected,
    Violation,
    Failed(String),
}

fn close(code: u16, reason: impl Into<String>) -> Message {
    Message::Close(Some(CloseFrame {
        code,
        reason: reason.into().into(),
    }))
}

pub(super) async fn run(socket: WebSocket, app: AppState, pending: PendingSession) {
    let (mut sink, stream) = socket.split();
    let (out, mut out_rx) = mpsc::unbounded_channel::<Message>();
    let writer = tokio::spawn(async move {
        while let Some(msg) = out_rx.recv().await {
            let closing = matches!(msg, Message::Close(_));
            if sink.send(msg).await.is_err() || closing {
                break;
            }
        }
    });

    let shared = Arc::new(Shared {
        ring: AudioRing::new(app.inner.ring_capacity.max(1)),
        wake: Notify::new(),
        input_done: AtomicBool::new(false),
        violated: AtomicBool::new(false),
        stopped: AtomicBool::new(false),
        recording: Mutex::new((0, Vec::new())),
    });
    let mut reader = tokio::spawn(read_audio(stream, shared.clone(), out.clone()));

    let outcome = drive(&app, &pending, &shared, &out).await;
    shared.stopped.store(true, Ordering::SeqCst);
    let dropped = shared.ring.dropped();
    if dropped > 0 {
        tracing::warn!(session = %pending.session_id, dropped, "analysis fell behind, frames dropped");
    }

    match outcome {
        Outcome::Finished(game) => match save(&app, &pending, &shared, &game).await {
            Ok(end) => {
                let msg = TelemetryMessage {
                    tick: game.state.tick,
                    body: TelemetryBody::SessionEnd(end),
                };
                send_json(&out, &msg);
                let _ = out.send(close(CLOSE_NORMAL, "session complete"));
            }
            Err(e) => {
                tracing::error!(session = %pending.session_id, "saving therapy failed: {e}");
                let _ = out.send(close(CLOSE_INTERNAL, "saving therapy failed"));
            }
        },
        Outcome::Failed(reason) => {
            let _ = out.send(close(CLOSE_INTERNAL, reason));
        }
        Outcome::Violation | Outcome::Disconnected => {
            tracing::info!(session = %pending.session_id, "live session aborted, nothing saved");
        }
    }
    drop(out);
    let _ = writer.await;
    if tokio::time::timeout(CLOSE_WAIT, &mut reader).await.is_err() {
        reader.abort();
    }
}

async fn read_audio(mut stream: SplitStream<WebSocket>, shared: Arc<Shared>, out: mpsc::UnboundedSender<Message>) {
    let mut framer: Option<StreamFramer> = None;
    while let Some(msg) = stream.next().await {
        if shared.stopped.load(Ordering::SeqCst) || shared.violated.load(Ordering::SeqCst) {
            if matches!(msg, Ok(Message::Close(_)) | Err(_)) {
                break;
            }
            continue;
        }
        let result = match msg {
            Ok(Message::Binary(bytes)) => ingest(&bytes, &mut framer, &shared),
            Ok(Message::Text(_)) => Err("text messages are not accepted upstream".to_string()),
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => Ok(()),
        };
        if let Err(reason) = result {
            shared.violated.store(true, Ordering::SeqCst);
            shared.wake.notify_one();
            let _ = out.send(close(CLOSE_PROTOCOL, reason));
        }
    }
    shared.input_done.store(true, Ordering::SeqCst);
    shared.wake.notify_one();
}

fn ingest(bytes: &[u8], framer: &mut Option<StreamFramer>, shared: &Shared) -> Result<(), String> {
    let frame = WireAudioFrame::decode(bytes).map_err(|e| e.to_string())?;
    let framer = match framer {
        Some(f) if f.sample_rate() != frame.sample_rate => {
            return Err(format!(
                "sample rate changed from {} to {}",
                f.sample_rate(),
                frame.sample_rate
            ))
        }
        Some(f) => f,
        None => {
            check_rate(frame.sample_rate).map_err(|e| e.to_string())?;
            let f = StreamFramer::new(Framing::for_rate(frame.sample_rate), frame.sample_rate)
                .map_err(|e| e.to_string())?;
            framer.insert(f)
        }
    };
    {
        let mut rec = shared.recording.lock().expect("recording lock");
        rec.0 = frame.sample_rate;
        rec.1.extend_from_slice(&frame.samples);
    }
    for f in framer.push(&frame.samples) {
        shared.ring.push(f);
    }
    shared.wake.notify_one();
    Ok(())
}

/// Game time at the end of analysis frame `k`, in microseconds. Tick
/// lengths are differences of this, so rounding never accumulates.
fn frame_end_us(k: u64, hop: u64, rate: u32) -> u64 {
    ((k as u128 * hop as u128 * 1_000_000 + rate as u128 / 2) / rate as u128) as u64
}

fn send_json(out: &mpsc::UnboundedSender<Message>, msg: &TelemetryMessage) {
    let text = serde_json::to_string(msg).expect("telemetry serializes");
    let _ = out.send(Message::Text(text));
}

async fn drive(
    app: &AppState,
    pending: &PendingSession,
    shared: &Shared,
    out: &mpsc::UnboundedSender<Message>,
) -> Outcome {
    let mut game = match GameSession::new(pending.level.clone()) {
        Ok(g) => g,
        Err(e) => return Outcome::Failed(e.to_string()),
    };
    let cfg = &app.inner.pitch;
    loop {
        if shared.violated.load(Ordering::SeqCst) {
            return Outcome::Violation;
        }
        let Some(frame) = shared.ring.pop() else {
            if shared.input_done.load(Ordering::SeqCst) && shared.ring.is_empty() {
                return if shared.violated.load(Ordering::SeqCst) {
                    Outcome::Violation
                } else {
                    Outcome::Disconnected
                };
            }
            shared.wake.notified().await;
            continue;
        };
        if let Err(e) = cfg.validate(frame.sample_rate) {
            return Outcome::Failed(e.to_string());
        }
        let hop = Framing::for_rate(frame.sample_rate).hop as u64;
        let k = frame.start_sample / hop;
        let dt_us = frame_end_us(k + 1, hop, frame.sample_rate) - frame_end_us(k, hop, frame.sample_rate);

        let pitch = analyze(&frame, cfg, pending.estimator);
        let control = ControlSample::from_pitch(&pitch);
        let tick = game.state.tick + 1;
        send_json(
            out,
            &TelemetryMessage {
                tick,
                body: TelemetryBody::Pitch(pitch),
            },
        );
        let summary = match game.step(control, dt_us) {
            Ok(t) => t.state.clone(),
            Err(e) => return Outcome::Failed(e.to_string()),
        };
        send_json(
            out,
            &TelemetryMessage {
                tick,
                body: TelemetryBody::State(summary),
            },
        );
        if game.state.status != GameStatus::Running {
            return Outcome::Finished(game);
        }
    }
}

async fn save(app: &AppState, pending: &PendingSession, shared: &Shared, game: &GameSession) -> anyhow::Result<SessionEnd> {
    let metrics = session_metrics(&game.telemetry)?;
    let (rate, samples) = shared.recording.lock().expect("recording lock").clone();
    let recording = if samples.is_empty() {
        None
    } else {
        Some(AudioClip::new(samples, rate, format!("live:{}", pending.session_id))?)
    };
    let pending = pending.clone();
    let level = game.level.clone();
    let telemetry = game.telemetry.clone();
    let status = game.state.status;
    let stored_metrics = metrics.clone();
    let record = app
        .with_store(move |store| {
            Ok(store.save_therapy(NewTherapy {
                patient_id: &pending.patient_id,
                started_at: pending.created_at,
                level: &level,
                telemetry: &telemetry,
                metrics: &stored_metrics,
                recording: recording.as_ref(),
                estimator_name: pending.estimator.name(),
            })?)
        })
        .await
        .map_err(|e| anyhow::anyhow!(e.message))?;
    Ok(SessionEnd {
        status,
        therapy_id: record.id,
        metrics,
    })
}
