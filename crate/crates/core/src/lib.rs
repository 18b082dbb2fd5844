//! curbtrack: a detector-agnostic parking occupancy engine.
//!
//! Takes noisy per-frame vehicle detections (spans, appearance features,
//! masks) from any upstream instance-segmentation detector and produces
//! smoothed parking occupancy and utilization measurements. The core is a
//! memory-based tracking filter that matches vehicle instances across a
//! sliding window of sampled frames and infers presence through occlusions
//! and detection failures. A seeded scenario generator and the standard
//! occupancy-accuracy metrics make the whole pipeline testable end to end
//! without any camera footage.

pub mod detection;
pub mod error;
pub mod features;
pub mod filter;
pub mod geometry;
pub mod metrics;
pub mod simgen;
pub mod span;
pub mod stream;

pub use detection::{Detection, FrameObservation};
pub use error::Error;
pub use features::{
    histogram_distance, model_distance, VehicleFeatures, COLOR_HIST_LEN, MODEL_FEATURE_LEN,
};
pub use filter::{
    group_location, infer_presence, is_match, location_distance, FilterConfig, FilterState,
    FilteredFrame, GroupMember, MatchThresholds, PresentSpan, TrackGroup,
};
pub use geometry::{
    classify_parked, lot_utilization, region_fraction, LotRegion, MaskFootprint, MaskRow,
    ParkStatus, Polygon, SiteGeometry, UtilizationSample,
};
pub use metrics::{
    compute_metrics, detection_accuracy, evaluate_stays, match_detections_to_labels,
    spatial_accuracy, time_accuracy, FrameCounts, LabeledFrame, LabelsFile, MatchedPair,
    MetricsCounts, MetricsReport, StayEvaluation, StayRecord, MATCH_IOU_THRESHOLD,
};
pub use simgen::{
    base_features, degrade_stream, generate_scenario, labels_from_truth, saturated_scenario,
    scenario_geometry, FeatureNoise, OcclusionModel, ScenarioConfig, ScenarioTruth, SimLot,
    VehicleProfile,
};
pub use span::{union_length, Span};
pub use stream::{
    load_geometry, load_labels, load_report, open_detection_stream, run_pipeline, save_geometry,
    save_labels, write_detection_stream, write_detections_file, write_reports,
    DetectionStreamReader, ReportSummary, UtilizationReport,
};
