//! Error types for the curbtrack crates.
//!
//! Errors are split per subsystem and rolled up into [`Error`]. The
//! [`Error::is_validation`] split drives the CLI exit codes: bad input is
//! distinguished from runtime failures such as I/O.

use thiserror::Error;

/// Geometry validation and area computations.
#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("empty mask")]
    EmptyMask,
    #[error("degenerate lot {lot_id}: x_max ({x_max}) <= x_min ({x_min})")]
    DegenerateLot { lot_id: u32, x_min: f64, x_max: f64 },
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid mask: {0}")]
    InvalidMask(String),
    #[error("invalid site geometry: {0}")]
    InvalidGeometry(String),
    #[error("unknown lot id {0}")]
    UnknownLot(u32),
}

/// Feature-vector validation and distance kernels.
#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("length mismatch in {field}: expected {expected}, got {got}")]
    LengthMismatch {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{field} component {index} out of range: {value}")]
    ComponentOutOfRange {
        field: &'static str,
        index: usize,
        value: f64,
    },
    #[error("histogram not normalized: sums to {sum}")]
    NotNormalized { sum: f64 },
}

/// Tracking-filter configuration and streaming contract.
#[derive(Debug, Error)]
pub enum FilterError {
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
    #[error("non-monotonic frame stream: expected frame {expected}, got {got}")]
    NonMonotonicFrame { expected: u64, got: u64 },
    #[error("frame {frame}: time_s {time_s} inconsistent with frame * sample_period = {expected}")]
    InconsistentTime { frame: u64, time_s: f64, expected: f64 },
    #[error("frame {frame}: {reason}")]
    BadDetection { frame: u64, reason: String },
    #[error("empty group")]
    EmptyGroup,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Metric computation over filter output and labels.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no labeled or detected vehicles")]
    NoVehicles,
    #[error("no matched pairs")]
    NoMatchedPairs,
    #[error("zero total true frames across stays")]
    ZeroTrueFrames,
    #[error("stays outside filtered range for vehicle ids {0:?}")]
    StaysOutsideRange(Vec<u32>),
    #[error("invalid stay record: {0}")]
    InvalidStay(String),
}

/// Synthetic scenario generation.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario config: {0}")]
    InvalidConfig(String),
    #[error("lot {lot_id} too narrow for any vehicle: width {width} < minimum {min}")]
    LotTooNarrow { lot_id: u32, width: f64, min: f64 },
    #[error("noise exceeds match budget: {0}")]
    NoiseExceedsBudget(String),
    #[error("base features for vehicles {0} and {1} are not separable under configured thresholds")]
    InseparableFeatures(u32, u32),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Streaming ingestion and report emission.
#[derive(Debug, Error)]
pub enum StreamError {
    #[error("line {line}: {reason}")]
    Line { line: usize, reason: String },
    #[error("line {line}: non-monotonic frames: {got} after {prev}")]
    NonMonotonicLine { line: usize, prev: u64, got: u64 },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed report file: {reason}")]
    MalformedReport { path: String, reason: String },
}

/// Crate-wide error rollup.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stream(#[from] StreamError),
}

impl Error {
    /// True when the error was caused by invalid input rather than a
    /// runtime failure. The CLI maps validation errors to exit code 1 and
    /// everything else to exit code 2.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Stream(StreamError::Io { .. }) | Error::Stream(StreamError::MalformedReport { .. })
        )
    }
}
