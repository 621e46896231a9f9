use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use vocalplay_cli::commands::{self, TrackFormat};
use vocalplay_cli::config::{ServeConfig, DEFAULT_STORE, STORE_ENV};
use vocalplay_cli::service;
use vocalplay_core::audio::Framing;
use vocalplay_core::bench::ReportFormat;
use vocalplay_core::game::session_metrics;
use vocalplay_core::store::{NewTherapy, SessionStore};
use vocalplay_core::{Estimator, EstimatorConfig};

#[derive(Parser)]
#[command(name = "vocalplay", version, about = "Voice-controlled rehabilitation game: analysis, benchmarking, simulation and the live service")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-frame pitch analysis of a WAV file
    Analyze(AnalyzeArgs),
    /// Score every estimator on the synthetic corpus
    Bench(BenchArgs),
    /// Run the game on a recorded control trace
    Simulate(SimulateArgs),
    /// Serve the HTTP API and the live stream
    Serve(ServeArgs),
    /// Manage patients in a store
    #[command(subcommand)]
    Patient(PatientCommand),
    /// Write a patient's EMR document
    ExportEmr(ExportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum EstimatorArg {
    Fft,
    Acf,
    Yin,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Fft => Estimator::Fft,
            EstimatorArg::Acf => Estimator::Acf,
            EstimatorArg::Yin => Estimator::Yin,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TrackFormatArg {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct PitchArgs {
    /// Lowest f0 searched, Hz
    #[arg(long, default_value_t = 60.0)]
    f_min: f64,
    /// Highest f0 searched, Hz
    #[arg(long, default_value_t = 1000.0)]
    f_max: f64,
    #[arg(long, default_value_t = 0.15)]
    yin_threshold: f64,
    /// Frames quieter than this (dBFS) are unvoiced
    #[arg(long, default_value_t = -45.0, allow_negative_numbers = true)]
    gate_db: f64,
}

impl PitchArgs {
    fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            f_min: self.f_min,
            f_max: self.f_max,
            yin_threshold: self.yin_threshold,
            loudness_gate_db: self.gate_db,
            ..EstimatorConfig::default()
        }
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    wav: PathBuf,
    #[arg(long, value_enum, default_value = "yin")]
    estimator: EstimatorArg,
    #[arg(long, value_enum, default_value = "csv")]
    format: TrackFormatArg,
    /// Median-filter the voiced f0 track
    #[arg(long)]
    smooth: bool,
    /// Analysis window in samples (default scales with the sample rate)
    #[arg(long, requires = "hop")]
    window: Option<usize>,
    #[arg(long, requires = "window")]
    hop: Option<usize>,
    #[command(flatten)]
    pitch: PitchArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_enum, default_value = "csv")]
    format: ReportFormatArg,
    /// Record runtime per frame (makes the report machine dependent)
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    pitch: PitchArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Level configuration, JSON
    #[arg(long)]
    level: PathBuf,
    /// Control trace, one {"time", "voiced", "pitch_mel"} object per line
    #[arg(long)]
    trace: PathBuf,
    /// Telemetry output, one tick per line
    #[arg(long)]
    out: PathBuf,
    /// Also save the run as a therapy for this patient
    #[arg(long, requires = "store")]
    patient: Option<String>,
    #[arg(long, env = STORE_ENV)]
    store: Option<PathBuf>,
}

#[derive(Args)]
struct ServeArgs {
    /// TOML file with any of: bind, store, estimator, bench_seed, ring_capacity, [pitch]
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    bind: Option<SocketAddr>,
    #[arg(long, env = STORE_ENV)]
    store: Option<PathBuf>,
    #[arg(long, value_enum)]
    estimator: Option<EstimatorArg>,
}

#[derive(Args)]
struct StoreArg {
    #[arg(long, env = STORE_ENV, default_value = DEFAULT_STORE)]
    store: PathBuf,
}

#[derive(Subcommand)]
enum PatientCommand {
    Add {
        name: String,
        #[arg(long, default_value = "")]
        notes: String,
        #[command(flatten)]
        store: StoreArg,
    },
    List {
        #[command(flatten)]
        store: StoreArg,
    },
}

#[derive(Args)]
struct ExportArgs {
    patient: String,
    /// Output file (standard output if omitted)
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    store: StoreArg,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Bench(a) => bench(a),
        Command::Simulate(a) => simulate(a),
        Command::Serve(a) => serve(a),
        Command::Patient(p) => patient(p),
        Command::ExportEmr(a) => export_emr(a),
    }
}

fn analyze(a: AnalyzeArgs) -> Result<()> {
    let framing = match (a.window, a.hop) {
        (Some(w), Some(h)) => Some(Framing::new(w, h)?),
        _ => None,
    };
    let track = commands::analyze_file(&a.wav, framing, &a.pitch.config(), a.estimator.into(), a.smooth)?;
    let format = match a.format {
        TrackFormatArg::Csv => TrackFormat::Csv,
        TrackFormatArg::Jsonl => TrackFormat::Jsonl,
    };
    commands::write_track(&track, format, std::io::stdout().lock())
}

fn bench(a: BenchArgs) -> Result<()> {
    let format = match a.format {
        ReportFormatArg::Csv => ReportFormat::Csv,
        ReportFormatArg::Json => ReportFormat::Json,
    };
    let reports = commands::bench(a.seed, &a.pitch.config(), &a.out, format, a.timing)?;
    let mut stdout = std::io::stdout().lock();
    for line in commands::ranking_lines(&reports)? {
        writeln!(stdout, "{line}")?;
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let level = commands::read_level(&a.level)?;
    let trace = commands::read_trace(&a.trace)?;
    let session = commands::simulate(&level, &trace, &a.out)?;
    println!("score: {}", session.score());
    println!("status: {}", serde_json::to_value(session.state.status)?.as_str().unwrap_or_default());
    if let (Some(patient), Some(root)) = (a.patient, a.store) {
        let mut store = open_store(&root)?;
        let metrics = session_metrics(&session.telemetry)?;
        let record = store.save_therapy(NewTherapy {
            patient_id: &patient,
            started_at: chrono::Utc::now(),
            level: &level,
            telemetry: &session.telemetry,
            metrics: &metrics,
            recording: None,
            estimator_name: "trace",
        })?;
        println!("therapy: {}", record.id);
    }
    Ok(())
}

fn serve(a: ServeArgs) -> Result<()> {
    tracing_subscriber::fmt().with_writer(std::io::stderr).init();
    let mut config = match &a.config {
        Some(path) => ServeConfig::from_file(path)?,
        None => ServeConfig::default(),
    };
    if let Some(bind) = a.bind {
        config.bind = bind;
    }
    if let Some(store) = a.store {
        config.store = store;
    }
    if let Some(e) = a.estimator {
        config.estimator = e.into();
    }
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(service::serve(config))
}

fn open_store(root: &Path) -> Result<SessionStore> {
    SessionStore::open(root).with_context(|| format!("opening store {}", root.display()))
}

fn patient(cmd: PatientCommand) -> Result<()> {
    match cmd {
        PatientCommand::Add { name, notes, store } => {
            let p = open_store(&store.store)?.create_patient(&name, &notes)?;
            println!("{}", p.id);
        }
        PatientCommand::List { store } => {
            for p in open_store(&store.store)?.patients() {
                println!("{}\t{}", p.id, p.display_name);
            }
        }
    }
    Ok(())
}

fn export_emr(a: ExportArgs) -> Result<()> {
    let doc = open_store(&a.store.store)?.export_emr(&a.patient)?.to_json();
    match a.out {
        Some(path) => std::fs::write(&path, doc).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().lock().write_all(doc.as_bytes())?,
    }
    Ok(())
}
