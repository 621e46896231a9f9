//! Estimator benchmark: a labelled synthetic corpus, per-estimator error
//! metrics, ranking and CSV/JSON reports.

mod corpus;
mod report;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use corpus::{generate_corpus, CorpusItem, Tag, TruthPoint, CORPUS_RATE, SNR_LEVELS_DB, STEADY_HZ};
pub use report::{emit_report, parse_report, read_report, write_report, ReportFormat, CSV_HEADER};

use crate::audio::{frame_stream, AudioFrame};
use crate::pitch::{loudness_db, Estimate, Estimator, EstimatorConfig};

/// Relative deviation above which an estimate counts as a gross error.
pub const GROSS_ERROR_THRESHOLD: f64 = 0.2;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("no reports to rank")]
    NoReports,
    #[error("unknown report format {0:?} (expected csv or json)")]
    UnknownFormat(String),
    #[error("malformed report: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Anything that can be scored by [`evaluate`]. Real estimators ignore the
/// `truth` argument; reference estimators (oracle, octave-down, constant)
/// use it to produce known outputs.
pub trait BenchEstimator: Sync {
    fn name(&self) -> String;
    fn estimate(&self, frame: &AudioFrame, truth: Option<f64>, cfg: &EstimatorConfig) -> Estimate;
}

impl BenchEstimator for Estimator {
    fn name(&self) -> String {
        Estimator::name(*self).to_string()
    }

    fn estimate(&self, frame: &AudioFrame, _truth: Option<f64>, cfg: &EstimatorConfig) -> Estimate {
        Estimator::estimate(*self, frame, cfg)
    }
}

/// Returns the ground truth times a fixed factor: 1.0 is a perfect oracle,
/// 0.5 always answers an octave low.
#[derive(Debug, Clone)]
pub struct ScaledTruth {
    pub label: String,
    pub factor: f64,
}

impl ScaledTruth {
    pub fn oracle() -> Self {
        Self {
            label: "oracle".into(),
            factor: 1.0,
        }
    }

    pub fn octave_down() -> Self {
        Self {
            label: "half".into(),
            factor: 0.5,
        }
    }
}

impl BenchEstimator for ScaledTruth {
    fn name(&self) -> String {
        self.label.clone()
    }

    fn estimate(&self, _frame: &AudioFrame, truth: Option<f64>, _cfg: &EstimatorConfig) -> Estimate {
        Estimate {
            f0_hz: truth.map(|f| f * self.factor),
            confidence: 1.0,
        }
    }
}

/// Always answers the same frequency.
#[derive(Debug, Clone, Copy)]
pub struct ConstantEstimator(pub f64);

impl BenchEstimator for ConstantEstimator {
    fn name(&self) -> String {
        format!("constant-{}", self.0)
    }

    fn estimate(&self, _frame: &AudioFrame, _truth: Option<f64>, _cfg: &EstimatorConfig) -> Estimate {
        Estimate {
            f0_hz: Some(self.0),
            confidence: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub estimator: String,
    /// Share of frames voiced in both truth and estimate whose relative
    /// error exceeds [`GROSS_ERROR_THRESHOLD`].
    pub gpe_rate: f64,
    /// Mean absolute error in cents over the frames without gross error.
    pub fpe_cents: f64,
    pub voicing_false_alarm: f64,
    pub voicing_miss: f64,
    /// Mean wall-clock seconds per frame; `None` when timing was not kept,
    /// so the remaining fields stay reproducible byte-for-byte.
    pub runtime_per_frame: Option<f64>,
}

impl BenchReport {
    pub fn without_timing(mut self) -> Self {
        self.runtime_per_frame = None;
        self
    }

    fn voicing_error(&self) -> f64 {
        self.voicing_miss + self.voicing_false_alarm
    }
}

#[derive(Debug, Default, Clone)]
struct Tally {
    frames: u64,
    truth_voiced: u64,
    truth_unvoiced: u64,
    both_voiced: u64,
    gross: u64,
    fine_cents: f64,
    false_alarm: u64,
    miss: u64,
    elapsed: Duration,
}

impl Tally {
    fn merge(mut self, other: &Tally) -> Tally {
        self.frames += other.frames;
        self.truth_voiced += other.truth_voiced;
        self.truth_unvoiced += other.truth_unvoiced;
        self.both_voiced += other.both_voiced;
        self.gross += other.gross;
        self.fine_cents += other.fine_cents;
        self.false_alarm += other.false_alarm;
        self.miss += other.miss;
        self.elapsed += other.elapsed;
        self
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn score_item(estimator: &dyn BenchEstimator, item: &CorpusItem, cfg: &EstimatorConfig) -> Tally {
    let frames = frame_stream(&item.clip, item.framing.window, item.framing.hop)
        .expect("corpus framing is valid");
    let mut t = Tally::default();
    for (frame, truth) in frames.iter().zip(&item.truth) {
        let start = Instant::now();
        let estimate = estimator.estimate(frame, truth.f0_hz, cfg);
        t.elapsed += start.elapsed();
        t.frames += 1;

        let estimated = estimate
            .f0_hz
            .filter(|f| f.is_finite() && *f > 0.0 && loudness_db(frame) > cfg.loudness_gate_db);
        match (truth.f0_hz, estimated) {
            (Some(expected), Some(got)) => {
                t.truth_voiced += 1;
                t.both_voiced += 1;
                if ((got - expected) / expected).abs() > GROSS_ERROR_THRESHOLD {
                    t.gross += 1;
                } else {
                    t.fine_cents += (1200.0 * (got / expected).log2()).abs();
                }
            }
            (Some(_), None) => {
                t.truth_voiced += 1;
                t.miss += 1;
            }
            (None, Some(_)) => {
                t.truth_unvoiced += 1;
                t.false_alarm += 1;
            }
            (None, None) => t.truth_unvoiced += 1,
        }
    }
    t
}

/// Scores one estimator over the corpus. Items are processed in parallel;
/// the reduction runs in corpus order so the result does not depend on
/// scheduling (apart from `runtime_per_frame`).
pub fn evaluate(
    estimator: &dyn BenchEstimator,
    corpus: &[CorpusItem],
    cfg: &EstimatorConfig,
) -> Result<BenchReport, BenchError> {
    if corpus.is_empty() {
        return Err(BenchError::EmptyCorpus);
    }
    let tallies: Vec<Tally> = corpus.par_iter().map(|item| score_item(estimator, item, cfg)).collect();
    let total = tallies.iter().fold(Tally::default(), Tally::merge);
    let fine = total.both_voiced - total.gross;
    Ok(BenchReport {
        estimator: estimator.name(),
        gpe_rate: ratio(total.gross, total.both_voiced),
        fpe_cents: if fine == 0 { 0.0 } else { total.fine_cents / fine as f64 },
        voicing_false_alarm: ratio(total.false_alarm, total.truth_unvoiced),
        voicing_miss: ratio(total.miss, total.truth_voiced),
        runtime_per_frame: Some(if total.frames == 0 {
            0.0
        } else {
            total.elapsed.as_secs_f64() / total.frames as f64
        }),
    })
}

/// Sorts reports best first: by gross error, then fine error, then total
/// voicing error, then name.
pub fn rank_reports(reports: &[BenchReport]) -> Result<Vec<BenchReport>, BenchError> {
    if reports.is_empty() {
        return Err(BenchError::NoReports);
    }
    let mut sorted = reports.to_vec();
    sorted.sort_by(|a, b| {
        a.gpe_rate
            .total_cmp(&b.gpe_rate)
            .then(a.fpe_cents.total_cmp(&b.fpe_cents))
            .then(a.voicing_error().total_cmp(&b.voicing_error()))
            .then_with(|| a.estimator.cmp(&b.estimator))
    });
    Ok(sorted)
}

/// Estimator names, best first.
pub fn rank(reports: &[BenchReport]) -> Result<Vec<String>, BenchError> {
    Ok(rank_reports(reports)?.into_iter().map(|r| r.estimator).collect())
}

/// Evaluates every built-in estimator on the corpus for `seed` and returns
/// the reports best first.
pub fn run_benchmark(seed: u64, cfg: &EstimatorConfig) -> Result<Vec<BenchReport>, BenchError> {
    let corpus = generate_corpus(seed);
    let reports = Estimator::ALL
        .iter()
        .map(|est| evaluate(est, &corpus, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    rank_reports(&reports)
}
