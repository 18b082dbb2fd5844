//! On-disk formats and the streaming pipeline.
//!
//! Detections travel as JSON Lines (one [`FrameObservation`] per line),
//! site geometry and labels as JSON documents, and reports as two CSV time
//! series plus a JSON summary. Report emission is bit-stable: identical
//! inputs produce identical bytes.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detection::FrameObservation;
use crate::error::{Error, StreamError};
use crate::filter::{FilterConfig, FilterState, FilteredFrame, PresentSpan};
use crate::geometry::{SiteGeometry, UtilizationSample};
use crate::metrics::LabelsFile;

fn io_err(path: &Path, source: std::io::Error) -> StreamError {
    StreamError::Io { path: path.display().to_string(), source }
}

fn json_err(path: &Path, err: &serde_json::Error) -> StreamError {
    StreamError::Line {
        line: err.line(),
        reason: format!("{}: {err}", path.display()),
    }
}

/// Lazy JSONL reader for detection streams. Validates each line's
/// invariants and that frame indices strictly increase.
pub struct DetectionStreamReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    prev_frame: Option<u64>,
}

impl<R: BufRead> DetectionStreamReader<R> {
    pub fn new(reader: R) -> Self {
        DetectionStreamReader { lines: reader.lines(), line_no: 0, prev_frame: None }
    }
}

impl<R: BufRead> Iterator for DetectionStreamReader<R> {
    type Item = Result<FrameObservation, StreamError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    return Some(Err(StreamError::Line {
                        line: self.line_no + 1,
                        reason: e.to_string(),
                    }))
                }
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let obs: FrameObservation = match serde_json::from_str(&line) {
                Ok(obs) => obs,
                Err(e) => {
                    return Some(Err(StreamError::Line { line: self.line_no, reason: e.to_string() }))
                }
            };
            if let Err(reason) = obs.validate() {
                return Some(Err(StreamError::Line { line: self.line_no, reason }));
            }
            if let Some(prev) = self.prev_frame {
                if obs.frame <= prev {
                    return Some(Err(StreamError::NonMonotonicLine {
                        line: self.line_no,
                        prev,
                        got: obs.frame,
                    }));
                }
            }
            self.prev_frame = Some(obs.frame);
            return Some(Ok(obs));
        }
    }
}

/// Open a detections JSONL file for lazy reading.
pub fn open_detection_stream(path: &Path) -> Result<DetectionStreamReader<BufReader<File>>, StreamError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    Ok(DetectionStreamReader::new(BufReader::new(file)))
}

/// Write observations as JSON Lines.
pub fn write_detection_stream<'a, W: Write>(
    writer: &mut W,
    observations: impl IntoIterator<Item = &'a FrameObservation>,
) -> std::io::Result<()> {
    for obs in observations {
        serde_json::to_writer(&mut *writer, obs)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_detections_file(path: &Path, observations: &[FrameObservation]) -> Result<(), StreamError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = BufWriter::new(file);
    write_detection_stream(&mut writer, observations).map_err(|e| io_err(path, e))?;
    writer.flush().map_err(|e| io_err(path, e))
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, StreamError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| json_err(path, &e))
}

fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), StreamError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value).map_err(|e| {
        io_err(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e.to_string()))
    })?;
    writer.write_all(b"\n").map_err(|e| io_err(path, e))?;
    writer.flush().map_err(|e| io_err(path, e))
}

pub fn load_geometry(path: &Path) -> Result<SiteGeometry, StreamError> {
    load_json(path)
}

pub fn save_geometry(path: &Path, geom: &SiteGeometry) -> Result<(), StreamError> {
    save_json(path, geom)
}

pub fn load_labels(path: &Path) -> Result<LabelsFile, StreamError> {
    load_json(path)
}

pub fn save_labels(path: &Path, labels: &LabelsFile) -> Result<(), StreamError> {
    save_json(path, labels)
}

/// Aggregated filter output for one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilizationReport {
    pub config: FilterConfig,
    /// Lot ids in geometry order.
    pub lots: Vec<u32>,
    pub frames: Vec<FilteredFrame>,
}

/// Stream every observation through the filter and drain it at end of
/// stream. Only the filter window is retained while streaming; the report
/// accumulates one entry per evaluated frame.
pub fn run_pipeline<I>(
    observations: I,
    geom: &SiteGeometry,
    config: FilterConfig,
) -> Result<UtilizationReport, Error>
where
    I: IntoIterator<Item = Result<FrameObservation, StreamError>>,
{
    let mut state = FilterState::new(config)?;
    let mut frames = Vec::new();
    for obs in observations {
        let obs = obs?;
        frames.extend(state.ingest_frame(&obs, geom)?);
    }
    frames.extend(state.flush(geom)?);
    Ok(UtilizationReport {
        config,
        lots: geom.lots.iter().map(|l| l.id).collect(),
        frames,
    })
}

const UTILIZATION_CSV: &str = "utilization.csv";
const SPANS_CSV: &str = "spans.csv";
const SUMMARY_JSON: &str = "summary.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct LotSummary {
    lot_id: u32,
    mean_utilization: f64,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub frames_evaluated: u64,
    pub first_evaluated_frame: Option<u64>,
    pub last_evaluated_frame: Option<u64>,
    pub present_span_rows: u64,
    pub lots: Vec<u32>,
    lot_means: Vec<LotSummary>,
    pub config: FilterConfig,
}

fn summarize(report: &UtilizationReport) -> ReportSummary {
    let mut lot_means = Vec::with_capacity(report.lots.len());
    for &lot_id in &report.lots {
        let samples: Vec<f64> = report
            .frames
            .iter()
            .flat_map(|f| f.utilization.iter())
            .filter(|u| u.lot_id == lot_id)
            .map(|u| u.utilization)
            .collect();
        let mean = if samples.is_empty() {
            0.0
        } else {
            samples.iter().sum::<f64>() / samples.len() as f64
        };
        lot_means.push(LotSummary { lot_id, mean_utilization: mean });
    }
    ReportSummary {
        frames_evaluated: report.frames.len() as u64,
        first_evaluated_frame: report.frames.first().map(|f| f.evaluated_frame),
        last_evaluated_frame: report.frames.last().map(|f| f.evaluated_frame),
        present_span_rows: report.frames.iter().map(|f| f.present_spans.len() as u64).sum(),
        lots: report.lots.clone(),
        lot_means,
        config: report.config,
    }
}

/// Write `utilization.csv`, `spans.csv`, and `summary.json` into `out_dir`.
///
/// The utilization CSV holds exactly one row per (evaluated frame, lot);
/// nothing in the files depends on wall-clock time, so identical reports
/// produce identical bytes.
pub fn write_reports(report: &UtilizationReport, out_dir: &Path) -> Result<(), StreamError> {
    std::fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;

    let util_path = out_dir.join(UTILIZATION_CSV);
    let file = File::create(&util_path).map_err(|e| io_err(&util_path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "frame,time_s,lot_id,utilization")?;
        for frame in &report.frames {
            for u in &frame.utilization {
                writeln!(w, "{},{},{},{}", frame.evaluated_frame, u.time_s, u.lot_id, u.utilization)?;
            }
        }
        w.flush()
    })()
    .map_err(|e| io_err(&util_path, e))?;

    let spans_path = out_dir.join(SPANS_CSV);
    let file = File::create(&spans_path).map_err(|e| io_err(&spans_path, e))?;
    let mut w = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        writeln!(w, "frame,lot_id,group_id,left,right")?;
        for frame in &report.frames {
            for p in &frame.present_spans {
                writeln!(w, "{},{},{},{},{}", frame.evaluated_frame, p.lot_id, p.group_id, p.left, p.right)?;
            }
        }
        w.flush()
    })()
    .map_err(|e| io_err(&spans_path, e))?;

    save_json(&out_dir.join(SUMMARY_JSON), &summarize(report))
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, field: &str, raw: &str) -> Result<T, StreamError> {
    raw.parse().map_err(|_| StreamError::MalformedReport {
        path: path.display().to_string(),
        reason: format!("line {line}: bad {field} value {raw:?}"),
    })
}

/// Read a report directory back into filtered frames plus the config that
/// produced it. Inverse of [`write_reports`].
pub fn load_report(dir: &Path) -> Result<(Vec<FilteredFrame>, FilterConfig), StreamError> {
    let summary: ReportSummary = load_json(&dir.join(SUMMARY_JSON))?;

    let util_path = dir.join(UTILIZATION_CSV);
    let text = std::fs::read_to_string(&util_path).map_err(|e| io_err(&util_path, e))?;
    let mut frames: Vec<FilteredFrame> = Vec::new();
    let mut index_of: std::collections::BTreeMap<u64, usize> = Default::default();
    for (i, line) in text.lines().enumerate().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            return Err(StreamError::MalformedReport {
                path: util_path.display().to_string(),
                reason: format!("line {}: expected 4 fields, got {}", i + 1, parts.len()),
            });
        }
        let frame: u64 = parse_field(&util_path, i + 1, "frame", parts[0])?;
        let time_s: f64 = parse_field(&util_path, i + 1, "time_s", parts[1])?;
        let lot_id: u32 = parse_field(&util_path, i + 1, "lot_id", parts[2])?;
        let utilization: f64 = parse_field(&util_path, i + 1, "utilization", parts[3])?;
        let idx = *index_of.entry(frame).or_insert_with(|| {
            frames.push(FilteredFrame {
                evaluated_frame: frame,
                evaluated_time: time_s,
                present_spans: Vec::new(),
                utilization: Vec::new(),
            });
            frames.len() - 1
        });
        frames[idx].utilization.push(UtilizationSample { lot_id, time_s, utilization });
    }

    let spans_path = dir.join(SPANS_CSV);
    let text = std::fs::read_to_string(&spans_path).map_err(|e| io_err(&spans_path, e))?;
    for (i, line) in text.lines().enumerate().skip(1) {
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 5 {
            return Err(StreamError::MalformedReport {
                path: spans_path.display().to_string(),
                reason: format!("line {}: expected 5 fields, got {}", i + 1, parts.len()),
            });
        }
        let frame: u64 = parse_field(&spans_path, i + 1, "frame", parts[0])?;
        let lot_id: u32 = parse_field(&spans_path, i + 1, "lot_id", parts[1])?;
        let group_id: usize = parse_field(&spans_path, i + 1, "group_id", parts[2])?;
        let left: i64 = parse_field(&spans_path, i + 1, "left", parts[3])?;
        let right: i64 = parse_field(&spans_path, i + 1, "right", parts[4])?;
        let idx = index_of.get(&frame).copied().ok_or_else(|| StreamError::MalformedReport {
            path: spans_path.display().to_string(),
            reason: format!("line {}: frame {frame} missing from utilization series", i + 1),
        })?;
        frames[idx].present_spans.push(PresentSpan { group_id, lot_id, left, right });
    }

    Ok((frames, summary.config))
}
