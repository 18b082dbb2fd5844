//! Validation metrics over filter output and ground-truth labels:
//! detection accuracy, spatial accuracy, and time (occupancy) accuracy.
//!
//! Detection and time accuracy are micro-averages: numerators and
//! denominators are summed across frames (or stays) before dividing.

use serde::{Deserialize, Serialize};

use crate::error::MetricsError;
use crate::filter::FilteredFrame;
use crate::span::Span;

/// Horizontal IoU at or above which an output span and a labeled box are
/// considered the same vehicle.
pub const MATCH_IOU_THRESHOLD: f64 = 0.5;

/// Hand-labeled parked-vehicle boxes (horizontal extent only) for one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFrame {
    pub frame: u64,
    pub boxes: Vec<Span>,
}

/// Per-frame detection counts.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameCounts {
    pub true_positives: u32,
    pub false_positives: u32,
    pub false_negatives: u32,
}

/// A matched (label, output) span pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub truth: Span,
    pub output: Span,
}

/// Ground-truth stay of one vehicle in one lot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StayRecord {
    pub vehicle_id: u32,
    pub lot_id: u32,
    pub enter_frame: u64,
    pub exit_frame: u64,
    pub span: Span,
}

impl StayRecord {
    pub fn true_frames(&self) -> u64 {
        self.exit_frame - self.enter_frame + 1
    }
}

/// Detected vs. labeled occupancy frames for one vehicle stay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StayEvaluation {
    pub vehicle_id: u32,
    pub frames_output: u64,
    pub frames_true: u64,
}

/// Labels file: per-frame boxes plus vehicle stays.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LabelsFile {
    pub frames: Vec<LabeledFrame>,
    pub stays: Vec<StayRecord>,
}

impl LabelsFile {
    pub fn validate(&self) -> Result<(), MetricsError> {
        for stay in &self.stays {
            if stay.exit_frame < stay.enter_frame {
                return Err(MetricsError::InvalidStay(format!(
                    "vehicle {}: exit_frame {} before enter_frame {}",
                    stay.vehicle_id, stay.exit_frame, stay.enter_frame
                )));
            }
        }
        Ok(())
    }
}

/// Greedy one-to-one matching of output spans to labeled boxes by
/// descending horizontal IoU. Pairs below [`MATCH_IOU_THRESHOLD`] are never
/// matched; unmatched outputs count as false positives and unmatched labels
/// as false negatives.
pub fn match_detections_to_labels(outputs: &[Span], labels: &[Span]) -> (Vec<MatchedPair>, FrameCounts) {
    let mut candidates: Vec<(f64, usize, usize)> = Vec::new();
    for (i, out) in outputs.iter().enumerate() {
        for (j, lab) in labels.iter().enumerate() {
            let iou = out.iou(lab);
            if iou >= MATCH_IOU_THRESHOLD {
                candidates.push((iou, i, j));
            }
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used_out = vec![false; outputs.len()];
    let mut used_lab = vec![false; labels.len()];
    let mut pairs = Vec::new();
    for (_, i, j) in candidates {
        if used_out[i] || used_lab[j] {
            continue;
        }
        used_out[i] = true;
        used_lab[j] = true;
        pairs.push(MatchedPair { truth: labels[j], output: outputs[i] });
    }
    let tp = pairs.len() as u32;
    let counts = FrameCounts {
        true_positives: tp,
        false_positives: outputs.len() as u32 - tp,
        false_negatives: labels.len() as u32 - tp,
    };
    (pairs, counts)
}

/// Micro-averaged detection accuracy: `sum TP / sum (TP + FP + FN)`.
pub fn detection_accuracy(per_frame: &[FrameCounts]) -> Result<f64, MetricsError> {
    let tp: u64 = per_frame.iter().map(|c| c.true_positives as u64).sum();
    let denom: u64 = per_frame
        .iter()
        .map(|c| (c.true_positives + c.false_positives + c.false_negatives) as u64)
        .sum();
    if denom == 0 {
        return Err(MetricsError::NoVehicles);
    }
    Ok(tp as f64 / denom as f64)
}

/// Mean over matched pairs of horizontal intersection over union between
/// the labeled box and the output span. Negative per-pair values (disjoint
/// pairs) are clamped to 0; the matching rule makes them impossible here.
pub fn spatial_accuracy(pairs: &[MatchedPair]) -> Result<f64, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::NoMatchedPairs);
    }
    let mut total = 0.0;
    for p in pairs {
        let inter = p.truth.right().min(p.output.right()) - p.truth.left().max(p.output.left());
        let union = p.truth.right().max(p.output.right()) - p.truth.left().min(p.output.left());
        let ratio = if union <= 0.0 { 1.0 } else { (inter / union).max(0.0) };
        total += ratio;
    }
    Ok(total / pairs.len() as f64)
}

/// Micro-averaged occupancy accuracy: `sum F_output / sum F_true`.
pub fn time_accuracy(evals: &[StayEvaluation]) -> Result<f64, MetricsError> {
    let out: u64 = evals.iter().map(|e| e.frames_output).sum();
    let truth: u64 = evals.iter().map(|e| e.frames_true).sum();
    if truth == 0 {
        return Err(MetricsError::ZeroTrueFrames);
    }
    Ok(out as f64 / truth as f64)
}

/// Counts, for every stay, the evaluated frames inside the stay interval
/// where some present span in the stay's lot overlaps the stay's true span
/// with IoU >= [`MATCH_IOU_THRESHOLD`].
///
/// Every frame of every stay must have been evaluated; stays reaching
/// outside the filtered range are reported together in the error.
pub fn evaluate_stays(
    filtered: &[FilteredFrame],
    stays: &[StayRecord],
) -> Result<Vec<StayEvaluation>, MetricsError> {
    let by_frame: std::collections::BTreeMap<u64, &FilteredFrame> =
        filtered.iter().map(|f| (f.evaluated_frame, f)).collect();
    let mut offenders: Vec<u32> = Vec::new();
    for stay in stays {
        if stay.exit_frame < stay.enter_frame {
            return Err(MetricsError::InvalidStay(format!(
                "vehicle {}: exit_frame {} before enter_frame {}",
                stay.vehicle_id, stay.exit_frame, stay.enter_frame
            )));
        }
        if (stay.enter_frame..=stay.exit_frame).any(|f| !by_frame.contains_key(&f)) {
            offenders.push(stay.vehicle_id);
        }
    }
    if !offenders.is_empty() {
        return Err(MetricsError::StaysOutsideRange(offenders));
    }
    let mut evals = Vec::with_capacity(stays.len());
    for stay in stays {
        let mut frames_output = 0;
        for frame in stay.enter_frame..=stay.exit_frame {
            let filtered_frame = by_frame[&frame];
            let hit = filtered_frame.present_spans.iter().any(|p| {
                p.lot_id == stay.lot_id
                    && Span::new(p.left as f64, p.right as f64)
                        .map(|s| s.iou(&stay.span) >= MATCH_IOU_THRESHOLD)
                        .unwrap_or(false)
            });
            if hit {
                frames_output += 1;
            }
        }
        evals.push(StayEvaluation {
            vehicle_id: stay.vehicle_id,
            frames_output,
            frames_true: stay.true_frames(),
        });
    }
    Ok(evals)
}

/// Aggregate counts backing a metrics report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsCounts {
    pub true_positives: u64,
    pub false_positives: u64,
    pub false_negatives: u64,
    pub frames_scored: u64,
    pub stays_scored: u64,
    pub output_stay_frames: u64,
    pub true_stay_frames: u64,
}

/// The three accuracies plus the raw counts they were computed from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub detection_accuracy: f64,
    pub spatial_accuracy: f64,
    pub time_accuracy: f64,
    pub counts: MetricsCounts,
}

/// Scores filter output against a labels file: per-frame matching on every
/// labeled frame (frames the filter never evaluated count as all-missed),
/// then stay evaluation for time accuracy.
pub fn compute_metrics(filtered: &[FilteredFrame], labels: &LabelsFile) -> Result<MetricsReport, MetricsError> {
    labels.validate()?;
    let by_frame: std::collections::BTreeMap<u64, &FilteredFrame> =
        filtered.iter().map(|f| (f.evaluated_frame, f)).collect();
    let mut per_frame = Vec::with_capacity(labels.frames.len());
    let mut all_pairs = Vec::new();
    for labeled in &labels.frames {
        let outputs: Vec<Span> = by_frame
            .get(&labeled.frame)
            .map(|f| {
                f.present_spans
                    .iter()
                    .map(|p| Span::new(p.left as f64, p.right as f64).expect("ordered"))
                    .collect()
            })
            .unwrap_or_default();
        let (pairs, counts) = match_detections_to_labels(&outputs, &labeled.boxes);
        all_pairs.extend(pairs);
        per_frame.push(counts);
    }
    let evals = evaluate_stays(filtered, &labels.stays)?;
    let counts = MetricsCounts {
        true_positives: per_frame.iter().map(|c| c.true_positives as u64).sum(),
        false_positives: per_frame.iter().map(|c| c.false_positives as u64).sum(),
        false_negatives: per_frame.iter().map(|c| c.false_negatives as u64).sum(),
        frames_scored: per_frame.len() as u64,
        stays_scored: evals.len() as u64,
        output_stay_frames: evals.iter().map(|e| e.frames_output).sum(),
        true_stay_frames: evals.iter().map(|e| e.frames_true).sum(),
    };
    Ok(MetricsReport {
        detection_accuracy: detection_accuracy(&per_frame)?,
        spatial_accuracy: spatial_accuracy(&all_pairs)?,
        time_accuracy: time_accuracy(&evals)?,
        counts,
    })
}
