use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use vocalplay_core::audio::{read_wav, Framing};
use vocalplay_core::bench::{rank, run_benchmark, write_report, ReportFormat};
use vocalplay_core::game::{run_trace, GameSession, LevelConfig, TimedControl};
use vocalplay_core::pitch::{analyze_clip, smooth};
use vocalplay_core::{BenchReport, Estimator, EstimatorConfig, PitchFrame};

pub const ANALYZE_CSV_HEADER: [&str; 7] = [
    "time",
    "f0_hz",
    "pitch_mel",
    "midi_note",
    "midi_number",
    "loudness_db",
    "voiced",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackFormat {
    Csv,
    Jsonl,
}

/// The frames `analyze` prints for a WAV file. Framing defaults to the
/// standard framing for the file's rate.
pub fn analyze_file(
    wav: &Path,
    framing: Option<Framing>,
    cfg: &EstimatorConfig,
    estimator: Estimator,
    smoothed: bool,
) -> Result<Vec<PitchFrame>> {
    let clip = read_wav(wav).with_context(|| format!("reading {}", wav.display()))?;
    let framing = framing.unwrap_or_else(|| Framing::for_rate(clip.sample_rate()));
    let track = analyze_clip(&clip, framing, cfg, estimator)?;
    Ok(if smoothed { smooth(&track, cfg) } else { track })
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_track<W: Write>(track: &[PitchFrame], format: TrackFormat, out: W) -> Result<()> {
    match format {
        TrackFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(ANALYZE_CSV_HEADER)?;
            for f in track {
                w.write_record([
                    f.time.to_string(),
                    opt(f.f0_hz),
                    opt(f.pitch_mel),
                    opt(f.midi_note_name.clone()),
                    opt(f.midi_note_number),
                    f.loudness_db.to_string(),
                    f.voiced.to_string(),
                ])?;
            }
            w.flush()?;
        }
        TrackFormat::Jsonl => {
            let mut out = BufWriter::new(out);
            for f in track {
                serde_json::to_writer(&mut out, f)?;
                out.write_all(b"\n")?;
            }
            out.flush()?;
        }
    }
    Ok(())
}

/// Runs the benchmark, writes the report and returns it best first.
pub fn bench(seed: u64, cfg: &EstimatorConfig, out: &Path, format: ReportFormat, timing: bool) -> Result<Vec<BenchReport>> {
    let mut reports = run_benchmark(seed, cfg)?;
    if !timing {
        reports = reports.into_iter().map(BenchReport::without_timing).collect();
    }
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    write_report(&reports, format, BufWriter::new(file))?;
    Ok(reports)
}

pub fn ranking_lines(reports: &[BenchReport]) -> Result<Vec<String>> {
    Ok(rank(reports)?
        .into_iter()
        .enumerate()
        .map(|(i, name)| format!("{}. {name}", i + 1))
        .collect())
}

pub fn read_level(path: &Path) -> Result<LevelConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let level: LevelConfig = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    level.validate().with_context(|| format!("level {}", path.display()))?;
    Ok(level)
}

pub fn read_trace(path: &Path) -> Result<Vec<TimedControl>> {
    let file = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut samples = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        samples.push(
            serde_json::from_str(&line).with_context(|| format!("{} line {}", path.display(), i + 1))?,
        );
    }
    if samples.is_empty() {
        bail!("{} holds no control samples", path.display());
    }
    Ok(samples)
}

/// Runs a control trace and writes one telemetry tick per line.
pub fn simulate(level: &LevelConfig, trace: &[TimedControl], out: &Path) -> Result<GameSession> {
    let session = run_trace(level, trace)?;
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    let mut w = BufWriter::new(file);
    for tick in &session.telemetry {
        serde_json::to_writer(&mut w, tick)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(session)
}
