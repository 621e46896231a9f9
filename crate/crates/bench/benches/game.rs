use criterion::{black_box, criterion_group, criterion_main, Criterion};
use vocalplay_bench::phrase_trace;
use vocalplay_core::game::{run_trace, session_metrics, GameSession};
use vocalplay_core::{ControlSample, LevelConfig};

fn tick(c: &mut Criterion) {
    let level = LevelConfig {
        session_duration_s: 1e6,
        spawn_interval_s: 0.5,
        y_spread: 0.0,
        ..LevelConfig::default()
    };
    let mut session = GameSession::new(level).unwrap();
    c.bench_function("game/step", |b| {
        b.iter(|| {
            session.step(black_box(ControlSample::voiced(230.0)), 11_610).unwrap();
        })
    });
}

fn whole_session(c: &mut Criterion) {
    let level = LevelConfig {
        session_duration_s: 60.0,
        y_spread: 0.0,
        ..LevelConfig::default()
    };
    let trace = phrase_trace(60.0);
    c.bench_function("game/run_trace_60s", |b| b.iter(|| run_trace(&level, black_box(&trace)).unwrap()));
    let telemetry = run_trace(&level, &trace).unwrap().telemetry;
    c.bench_function("game/session_metrics_60s", |b| b.iter(|| session_metrics(black_box(&telemetry)).unwrap()));
}

criterion_group!(benches, tick, whole_session);
criterion_main!(benches);
