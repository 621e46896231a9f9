use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use super::{BenchError, BenchReport};

pub const CSV_HEADER: [&str; 6] = [
    "estimator",
    "gpe_rate",
    "fpe_cents",
    "voicing_false_alarm",
    "voicing_miss",
    "runtime_per_frame",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(BenchError::UnknownFormat(other.to_string())),
        }
    }
}

/// One row (or array element) per report, in the given order.
pub fn write_report<W: Write>(reports: &[BenchReport], format: ReportFormat, out: W) -> Result<(), BenchError> {
    match format {
        ReportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(CSV_HEADER)?;
            // Display gives the shortest string that parses back to the same f64.
            for r in reports {
                let runtime = r.runtime_per_frame.map(|v| v.to_string()).unwrap_or_default();
                w.write_record([
                    r.estimator.clone(),
                    r.gpe_rate.to_string(),
                    r.fpe_cents.to_string(),
                    r.voicing_false_alarm.to_string(),
                    r.voicing_miss.to_string(),
                    runtime,
                ])?;
            }
            w.flush()?;
        }
        ReportFormat::Json => {
            let mut out = out;
            serde_json::to_writer_pretty(&mut out, reports)?;
            out.write_all(b"\n")?;
            out.flush()?;
        }
    }
    Ok(())
}

pub fn emit_report(reports: &[BenchReport], format: ReportFormat, path: impl AsRef<Path>) -> Result<(), BenchError> {
    let file = BufWriter::new(File::create(path)?);
    write_report(reports, format, file)
}

pub fn parse_report<R: Read>(input: R, format: ReportFormat) -> Result<Vec<BenchReport>, BenchError> {
    match format {
        ReportFormat::Csv => {
            let mut reader = csv::Reader::from_reader(input);
            let mut out = Vec::new();
            for record in reader.records() {
                let record = record?;
                if record.len() != CSV_HEADER.len() {
                    return Err(BenchError::Malformed(format!("expected 6 fields, got {}", record.len())));
                }
                let num = |i: usize| -> Result<f64, BenchError> {
                    record[i]
                        .parse()
                        .map_err(|_| BenchError::Malformed(format!("{}: {:?}", CSV_HEADER[i], &record[i])))
                };
                out.push(BenchReport {
                    estimator: record[0].to_string(),
                    gpe_rate: num(1)?,
                    fpe_cents: num(2)?,
                    voicing_false_alarm: num(3)?,
                    voicing_miss: num(4)?,
                    runtime_per_frame: if record[5].is_empty() { None } else { Some(num(5)?) },
                });
            }
            Ok(out)
        }
        ReportFormat::Json => Ok(serde_json::from_reader(input)?),
    }
}

pub fn read_report(path: impl AsRef<Path>, format: ReportFormat) -> Result<Vec<BenchReport>, BenchError> {
    parse_report(File::open(path)?, format)
}
