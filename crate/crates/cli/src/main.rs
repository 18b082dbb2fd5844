//! Command-line pipeline for the curbtrack parking occupancy engine.
//!
//! Subcommands wire the library end to end: `simulate` produces synthetic
//! detection streams with ground truth, `filter` smooths a stream into
//! utilization reports, `metrics` scores a report against labels, and
//! `bench` measures per-frame filter cost.
//!
//! Exit codes: 0 success, 1 invalid input, 2 runtime error.

use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use curbtrack::{
    compute_metrics, degrade_stream, generate_scenario, labels_from_truth, load_geometry,
    load_labels, load_report, open_detection_stream, run_pipeline, saturated_scenario,
    save_geometry, save_labels, scenario_geometry, write_detections_file, write_reports,
    DetectionStreamReader, FilterConfig, FilterState, MatchThresholds, ScenarioConfig,
    UtilizationReport,
};

#[derive(Parser)]
#[command(
    name = "curbtrack",
    version,
    about = "Parking occupancy measurement from per-frame vehicle detections"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Smooth a detection stream into utilization and span reports.
    Filter(FilterArgs),
    /// Generate a synthetic scenario: detections, labels, truth, geometry.
    Simulate(SimulateArgs),
    /// Score a filter report against ground-truth labels.
    Metrics(MetricsArgs),
    /// Measure per-frame filter latency on a synthetic saturated scene.
    Bench(BenchArgs),
}

#[derive(Args)]
struct FilterArgs {
    /// Detections JSONL file, or '-' for stdin.
    #[arg(long)]
    detections: String,
    /// Site geometry JSON file.
    #[arg(long)]
    geometry: PathBuf,
    /// Filter memory in frames (odd).
    #[arg(long, default_value_t = 25)]
    memory: usize,
    /// Seconds between sampled frames.
    #[arg(long, default_value_t = 15.0)]
    period: f64,
    /// Inference offset in frames behind the newest; defaults to memory / 2.
    #[arg(long)]
    offset: Option<usize>,
    /// Model feature distance threshold.
    #[arg(long, default_value_t = MatchThresholds::default().model)]
    tc: f64,
    /// Color histogram distance threshold.
    #[arg(long, default_value_t = MatchThresholds::default().histogram)]
    tb: f64,
    /// Location distance threshold in pixels.
    #[arg(long, default_value_t = MatchThresholds::default().location)]
    tl: f64,
    /// Minimum detection confidence.
    #[arg(long, default_value_t = 0.5)]
    confidence: f64,
    /// Output directory for utilization.csv, spans.csv, summary.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario config JSON; missing fields take defaults.
    #[arg(long)]
    config: PathBuf,
    /// Seed override for the config's rng seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for detections.jsonl, labels.json, truth.json,
    /// geometry.json.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MetricsArgs {
    /// Report directory produced by `filter`.
    #[arg(long)]
    report: PathBuf,
    /// Labels JSON file.
    #[arg(long)]
    labels: PathBuf,
    /// Output JSON file for the metrics report.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Filter memory in frames (odd).
    #[arg(long, default_value_t = 101)]
    memory: usize,
    /// Simultaneously parked vehicles per frame.
    #[arg(long, default_value_t = 10)]
    vehicles: u32,
    /// Stream length in frames.
    #[arg(long, default_value_t = 500)]
    frames: u64,
    /// Scenario seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] curbtrack::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_validation() => 1,
            CliError::Core(_) => 2,
            CliError::Io { .. } => 2,
            CliError::Usage(_) => 1,
        }
    }
}

impl From<curbtrack::error::StreamError> for CliError {
    fn from(e: curbtrack::error::StreamError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<curbtrack::error::FilterError> for CliError {
    fn from(e: curbtrack::error::FilterError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<curbtrack::error::SimError> for CliError {
    fn from(e: curbtrack::error::SimError) -> Self {
        CliError::Core(e.into())
    }
}

impl From<curbtrack::error::MetricsError> for CliError {
    fn from(e: curbtrack::error::MetricsError) -> Self {
        CliError::Core(e.into())
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let _ = e.print();
            // Help and version are not errors; anything else is bad input.
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                return ExitCode::SUCCESS;
            }
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Filter(args) => cmd_filter(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Metrics(args) => cmd_metrics(args),
        Command::Bench(args) => cmd_bench(args),
    }
}

fn cmd_filter(args: FilterArgs) -> Result<(), CliError> {
    let geometry = load_geometry(&args.geometry)?;
    let config = FilterConfig {
        memory_frames: args.memory,
        sample_period: args.period,
        thresholds: MatchThresholds { model: args.tc, histogram: args.tb, location: args.tl },
        inference_offset: args.offset.unwrap_or(args.memory / 2),
        confidence_floor: args.confidence,
    };
    let report: UtilizationReport = if args.detections == "-" {
        let reader = DetectionStreamReader::new(BufReader::new(std::io::stdin().lock()));
        run_pipeline(reader, &geometry, config)?
    } else {
        let reader = open_detection_stream(Path::new(&args.detections))?;
        run_pipeline(reader, &geometry, config)?
    };
    write_reports(&report, &args.out)?;
    println!(
        "evaluated {} frames across {} lots -> {}",
        report.frames.len(),
        report.lots.len(),
        args.out.display()
    );
    Ok(())
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), CliError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| io_err(&args.config, e))?;
    let mut config: ScenarioConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let (truth, clean) = generate_scenario(&config)?;
    let degraded = degrade_stream(&truth, &clean, &config)?;
    let labels = labels_from_truth(&truth, config.frame_count);
    let geometry = scenario_geometry(&config)?;

    std::fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    write_detections_file(&args.out.join("detections.jsonl"), &degraded)?;
    save_labels(&args.out.join("labels.json"), &labels)?;
    save_json_file(&args.out.join("truth.json"), &truth)?;
    save_geometry(&args.out.join("geometry.json"), &geometry)?;
    println!(
        "simulated {} stays over {} frames (seed {}) -> {}",
        truth.stays.len(),
        config.frame_count,
        config.seed,
        args.out.display()
    );
    Ok(())
}

fn save_json_file<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    use std::io::Write;
    let file = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = std::io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut writer, value)
        .map_err(|e| io_err(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))?;
    writer.write_all(b"\n").map_err(|e| io_err(path, e))?;
    writer.flush().map_err(|e| io_err(path, e))
}

fn cmd_metrics(args: MetricsArgs) -> Result<(), CliError> {
    let (frames, _config) = load_report(&args.report)?;
    let labels = load_labels(&args.labels)?;
    let report = compute_metrics(&frames, &labels)?;
    save_json_file(&args.out, &report)?;
    println!(
        "detection_accuracy={:.4} spatial_accuracy={:.4} time_accuracy={:.4}",
        report.detection_accuracy, report.spatial_accuracy, report.time_accuracy
    );
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    if args.frames == 0 {
        return Err(CliError::Usage("--frames must be positive".into()));
    }
    // The filter memory must be odd; round even requests up.
    let memory = if args.memory % 2 == 0 { args.memory + 1 } else { args.memory };
    if memory != args.memory {
        eprintln!("note: adjusted --memory {} to odd {}", args.memory, memory);
    }
    let (scenario, truth, clean) = saturated_scenario(args.vehicles, args.frames, args.seed)?;
    let stream = degrade_stream(&truth, &clean, &scenario)?;
    let geometry = scenario_geometry(&scenario)?;
    let config = FilterConfig {
        sample_period: scenario.sample_period,
        ..FilterConfig::with_memory(memory)
    };
    let mut state = FilterState::new(config)?;
    let mut latencies_ms: Vec<f64> = Vec::with_capacity(stream.len());
    let started = Instant::now();
    let mut evaluated = 0usize;
    for obs in &stream {
        let t0 = Instant::now();
        evaluated += state.ingest_frame(obs, &geometry)?.len();
        latencies_ms.push(t0.elapsed().as_secs_f64() * 1e3);
    }
    let total_s = started.elapsed().as_secs_f64();
    let mut sorted = latencies_ms.clone();
    sorted.sort_by(f64::total_cmp);
    let percentile = |q: f64| -> f64 {
        let idx = ((sorted.len() - 1) as f64 * q).round() as usize;
        sorted[idx]
    };
    let mean_ms = latencies_ms.iter().sum::<f64>() / latencies_ms.len() as f64;
    let stats = json!({
        "memory_frames": memory,
        "vehicles": args.vehicles,
        "frames": args.frames,
        "evaluated_frames": evaluated,
        "mean_ms": mean_ms,
        "p50_ms": percentile(0.50),
        "p95_ms": percentile(0.95),
        "max_ms": percentile(1.0),
        "total_s": total_s,
    });
    println!("{stats:#}");
    Ok(())
}
