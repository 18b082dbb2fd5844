//! The memory-based car tracking filter.
//!
//! The filter keeps the last `memory_frames` sampled frames of parked
//! detections in a ring buffer. Each time the buffer is full it evaluates
//! the frame `inference_offset` slots behind the newest one: detections in
//! the window are matched pairwise on model features, color histograms and
//! horizontal location, matched pairs are merged into track groups, and a
//! group counts as present at the evaluated frame when it has support on
//! both temporal sides of it (or exactly on it). Present groups emit the
//! mode of their member spans, from which per-lot utilization is computed.
//!
//! Matching detections across the frames surrounding an occlusion is what
//! lets the filter report a car as parked through gaps in which the
//! detector saw nothing.

mod groups;

pub use groups::{group_location, infer_presence, GroupMember, TrackGroup};

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::detection::{Detection, FrameObservation};
use crate::error::FilterError;
use crate::features::VehicleFeatures;
use crate::geometry::{classify_parked, lot_utilization, ParkStatus, SiteGeometry, UtilizationSample};
use crate::span::Span;

use groups::UnionFind;

/// Tolerance when checking `time_s` against `frame * sample_period`.
pub const TIME_TOLERANCE_S: f64 = 1e-6;

/// Distance thresholds under which two detections are considered the same
/// vehicle. All three must hold (strict inequalities).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchThresholds {
    /// Maximum L1 distance between model feature vectors.
    pub model: f64,
    /// Maximum Bhattacharyya (Hellinger-form) distance between color
    /// histograms, in `(0, 1]`.
    pub histogram: f64,
    /// Maximum L1 distance between span endpoints, in pixels.
    pub location: f64,
}

impl Default for MatchThresholds {
    fn default() -> Self {
        MatchThresholds { model: 0.5, histogram: 0.3, location: 40.0 }
    }
}

impl MatchThresholds {
    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.model > 0.0) || !self.model.is_finite() {
            return Err(FilterError::InvalidConfig(format!(
                "model threshold must be positive, got {}",
                self.model
            )));
        }
        if !(self.histogram > 0.0 && self.histogram <= 1.0) {
            return Err(FilterError::InvalidConfig(format!(
                "histogram threshold must be in (0, 1], got {}",
                self.histogram
            )));
        }
        if !(self.location > 0.0) || !self.location.is_finite() {
            return Err(FilterError::InvalidConfig(format!(
                "location threshold must be positive, got {}",
                self.location
            )));
        }
        Ok(())
    }
}

/// L1 distance between the endpoints of two spans.
pub fn location_distance(a: Span, b: Span) -> f64 {
    (a.left() - b.left()).abs() + (a.right() - b.right()).abs()
}

fn features_match(
    a: &VehicleFeatures,
    span_a: Span,
    b: &VehicleFeatures,
    span_b: Span,
    th: &MatchThresholds,
) -> bool {
    location_distance(span_a, span_b) < th.location
        && a.model_distance_below(b, th.model).is_some()
        && a.histogram_distance_to(b) < th.histogram
}

/// Whether two detections match under all three thresholds.
pub fn is_match(a: &Detection, b: &Detection, th: &MatchThresholds) -> bool {
    features_match(&a.features, a.span, &b.features, b.span, th)
}

/// Filter configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    /// Number of frames kept in memory (odd).
    pub memory_frames: usize,
    /// Seconds between sampled frames.
    pub sample_period: f64,
    pub thresholds: MatchThresholds,
    /// How far behind the newest frame the evaluated frame sits, in frames.
    /// Lowering it trades accuracy for immediacy.
    pub inference_offset: usize,
    /// Detections below this confidence are discarded on ingest.
    pub confidence_floor: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let memory_frames = 25;
        FilterConfig {
            memory_frames,
            sample_period: 15.0,
            thresholds: MatchThresholds::default(),
            inference_offset: memory_frames / 2,
            confidence_floor: 0.5,
        }
    }
}

impl FilterConfig {
    /// Config with `memory_frames = n` and the inference offset centered at
    /// `n / 2`; other fields take their defaults.
    pub fn with_memory(memory_frames: usize) -> Self {
        FilterConfig {
            memory_frames,
            inference_offset: memory_frames / 2,
            ..FilterConfig::default()
        }
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if self.memory_frames == 0 || self.memory_frames % 2 == 0 {
            return Err(FilterError::InvalidConfig(format!(
                "memory_frames must be odd and positive, got {}",
                self.memory_frames
            )));
        }
        if !(self.sample_period > 0.0) || !self.sample_period.is_finite() {
            return Err(FilterError::InvalidConfig(format!(
                "sample_period must be positive, got {}",
                self.sample_period
            )));
        }
        if self.inference_offset > self.memory_frames / 2 {
            return Err(FilterError::InvalidConfig(format!(
                "inference_offset {} exceeds memory_frames / 2 = {}",
                self.inference_offset,
                self.memory_frames / 2
            )));
        }
        if !(0.0..=1.0).contains(&self.confidence_floor) {
            return Err(FilterError::InvalidConfig(format!(
                "confidence_floor {} outside [0, 1]",
                self.confidence_floor
            )));
        }
        self.thresholds.validate()
    }
}

/// A smoothed span reported at an evaluated frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PresentSpan {
    pub group_id: usize,
    pub lot_id: u32,
    pub left: i64,
    pub right: i64,
}

/// Smoothed output for one evaluated frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilteredFrame {
    pub evaluated_frame: u64,
    pub evaluated_time: f64,
    pub present_spans: Vec<PresentSpan>,
    pub utilization: Vec<UtilizationSample>,
}

#[derive(Debug, Clone)]
struct WindowDetection {
    id: u64,
    span: Span,
    lot_id: u32,
    features: VehicleFeatures,
}

#[derive(Debug, Clone)]
struct FrameEntry {
    frame: u64,
    first_id: u64,
    detections: Vec<WindowDetection>,
    /// Match edges `(older_id, newer_id)` whose older endpoint lives in
    /// this frame. Evicting the frame drops them in O(1).
    edges: Vec<(u64, u64)>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointDetection {
    span: Span,
    lot_id: u32,
    features: VehicleFeatures,
}

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    config: FilterConfig,
    frames: Vec<(u64, Vec<CheckpointDetection>)>,
    next_expected_frame: Option<u64>,
    last_evaluated: Option<u64>,
}

/// Per-stream filter state: config plus the ring buffer of recent frames.
///
/// Mutation is single-writer and strictly frame-ordered; move the state
/// between threads freely but do not share it for concurrent mutation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "Checkpoint", try_from = "Checkpoint")]
pub struct FilterState {
    config: FilterConfig,
    window: VecDeque<FrameEntry>,
    next_expected_frame: Option<u64>,
    last_evaluated: Option<u64>,
    next_id: u64,
}

impl FilterState {
    pub fn new(config: FilterConfig) -> Result<Self, FilterError> {
        config.validate()?;
        Ok(FilterState {
            config,
            window: VecDeque::with_capacity(config.memory_frames),
            next_expected_frame: None,
            last_evaluated: None,
            next_id: 0,
        })
    }

    pub fn config(&self) -> &FilterConfig {
        &self.config
    }

    /// Number of frames currently buffered (warm-up fills up to
    /// `memory_frames`).
    pub fn buffered_frames(&self) -> usize {
        self.window.len()
    }

    pub fn next_expected_frame(&self) -> Option<u64> {
        self.next_expected_frame
    }

    /// Ingest the next frame of the stream.
    ///
    /// Returns no output while the buffer is warming up. On the ingest that
    /// fills the buffer it emits evaluations for every frame from the start
    /// of the stream through `newest - inference_offset`; afterwards each
    /// ingest emits exactly the evaluation of `newest - inference_offset`.
    /// Together with [`flush`](Self::flush) every frame index of the stream
    /// is evaluated exactly once.
    pub fn ingest_frame(
        &mut self,
        obs: &FrameObservation,
        geom: &SiteGeometry,
    ) -> Result<Vec<FilteredFrame>, FilterError> {
        if let Some(expected) = self.next_expected_frame {
            if obs.frame != expected {
                return Err(FilterError::NonMonotonicFrame { expected, got: obs.frame });
            }
        }
        let expected_time = obs.frame as f64 * self.config.sample_period;
        if (obs.time_s - expected_time).abs() > TIME_TOLERANCE_S {
            return Err(FilterError::InconsistentTime {
                frame: obs.frame,
                time_s: obs.time_s,
                expected: expected_time,
            });
        }
        obs.validate()
            .map_err(|reason| FilterError::BadDetection { frame: obs.frame, reason })?;

        // Keep confident, parked detections only.
        let mut accepted: Vec<WindowDetection> = Vec::new();
        for det in &obs.detections {
            if det.confidence < self.config.confidence_floor {
                continue;
            }
            let status = match det.park_status {
                Some(status) => status,
                None => classify_parked(det.mask.as_ref().expect("validated"), geom)?,
            };
            let lot_id = match status {
                ParkStatus::NotParked => continue,
                ParkStatus::Parked(lot_id) => {
                    if geom.lot(lot_id).is_none() {
                        return Err(crate::error::GeometryError::UnknownLot(lot_id).into());
                    }
                    lot_id
                }
            };
            accepted.push(WindowDetection {
                id: self.next_id,
                span: det.span,
                lot_id,
                features: det.features.clone(),
            });
            self.next_id += 1;
        }

        // Match new detections against everything already in the window,
        // and against earlier detections of this same frame.
        let mut own_edges: Vec<(u64, u64)> = Vec::new();
        for (i, new) in accepted.iter().enumerate() {
            for entry in self.window.iter_mut() {
                for old in &entry.detections {
                    if features_match(
                        &old.features,
                        old.span,
                        &new.features,
                        new.span,
                        &self.config.thresholds,
                    ) {
                        entry.edges.push((old.id, new.id));
                    }
                }
            }
            for prev in &accepted[..i] {
                if features_match(
                    &prev.features,
                    prev.span,
                    &new.features,
                    new.span,
                    &self.config.thresholds,
                ) {
                    own_edges.push((prev.id, new.id));
                }
            }
        }
        let first_id = accepted.first().map(|d| d.id).unwrap_or(self.next_id);
        self.window.push_back(FrameEntry {
            frame: obs.frame,
            first_id,
            detections: accepted,
            edges: own_edges,
        });
        self.next_expected_frame = Some(obs.frame + 1);

        let mut out = Vec::new();
        if self.window.len() == self.config.memory_frames {
            let newest = obs.frame;
            let offset = self.config.inference_offset as u64;
            let start = match self.last_evaluated {
                Some(last) => last + 1,
                None => self.window.front().expect("non-empty").frame,
            };
            for evaluated in start..=newest - offset {
                out.push(self.evaluate(evaluated, geom)?);
                self.last_evaluated = Some(evaluated);
            }
            self.window.pop_front();
        }
        Ok(out)
    }

    /// Drain the filter at end of stream: evaluate every frame newer than
    /// the last evaluated one against the residual, shrinking window.
    pub fn flush(&mut self, geom: &SiteGeometry) -> Result<Vec<FilteredFrame>, FilterError> {
        let mut out = Vec::new();
        let Some(back) = self.window.back().map(|e| e.frame) else {
            return Ok(out);
        };
        let lead = (self.config.memory_frames - 1 - self.config.inference_offset) as u64;
        let mut evaluated = match self.last_evaluated {
            Some(last) => last + 1,
            None => self.window.front().expect("non-empty").frame,
        };
        while evaluated <= back {
            while self
                .window
                .front()
                .is_some_and(|e| e.frame < evaluated.saturating_sub(lead))
            {
                self.window.pop_front();
            }
            out.push(self.evaluate(evaluated, geom)?);
            self.last_evaluated = Some(evaluated);
            evaluated += 1;
        }
        Ok(out)
    }

    /// Track groups over the full current window, ordered by
    /// (earliest member frame, left coordinate).
    pub fn build_groups(&self) -> Vec<TrackGroup> {
        match (self.window.front(), self.window.back()) {
            (Some(front), Some(back)) => self.groups_in_range(front.frame, back.frame),
            _ => Vec::new(),
        }
    }

    fn entry_index(&self, frame: u64) -> usize {
        let front = self.window.front().expect("non-empty window").frame;
        (frame - front) as usize
    }

    fn groups_in_range(&self, lo_frame: u64, hi_frame: u64) -> Vec<TrackGroup> {
        let lo = self.entry_index(lo_frame);
        let hi = self.entry_index(hi_frame);
        let base_id = self.window[lo].first_id;
        let end_entry = &self.window[hi];
        let end_id = end_entry.first_id + end_entry.detections.len() as u64;
        let count = (end_id - base_id) as usize;
        if count == 0 {
            return Vec::new();
        }
        let mut uf = UnionFind::new(count);
        for idx in lo..=hi {
            for &(a, b) in &self.window[idx].edges {
                if b < end_id {
                    uf.union((a - base_id) as usize, (b - base_id) as usize);
                }
            }
        }
        // Collect members in id order, which is frame order.
        let mut group_of_root: std::collections::HashMap<usize, usize> = std::collections::HashMap::new();
        let mut members: Vec<Vec<GroupMember>> = Vec::new();
        for idx in lo..=hi {
            let entry = &self.window[idx];
            for det in &entry.detections {
                let root = uf.find((det.id - base_id) as usize);
                let slot = *group_of_root.entry(root).or_insert_with(|| {
                    members.push(Vec::new());
                    members.len() - 1
                });
                members[slot].push(GroupMember {
                    frame: entry.frame,
                    span: det.span,
                    lot_id: det.lot_id,
                });
            }
        }
        members.sort_by(|a, b| {
            let ka = (a[0].frame, a[0].span.left(), a[0].span.right());
            let kb = (b[0].frame, b[0].span.left(), b[0].span.right());
            ka.0.cmp(&kb.0)
                .then(ka.1.total_cmp(&kb.1))
                .then(ka.2.total_cmp(&kb.2))
        });
        members
            .into_iter()
            .enumerate()
            .map(|(id, m)| TrackGroup::new(id, m))
            .collect()
    }

    fn evaluate(&self, evaluated: u64, geom: &SiteGeometry) -> Result<FilteredFrame, FilterError> {
        let front = self.window.front().expect("non-empty window").frame;
        let back = self.window.back().expect("non-empty window").frame;
        let lead = (self.config.memory_frames - 1 - self.config.inference_offset) as u64;
        let lo = front.max(evaluated.saturating_sub(lead));
        let hi = back.min(evaluated + self.config.inference_offset as u64);
        let groups = self.groups_in_range(lo, hi);

        let mut present_spans = Vec::new();
        for group in &groups {
            if !infer_presence(group, evaluated) {
                continue;
            }
            let (left, right) = group_location(group, evaluated)?;
            present_spans.push(PresentSpan { group_id: group.id, lot_id: group.lot_id(), left, right });
        }

        let spans: Vec<Span> = present_spans
            .iter()
            .map(|p| Span::new(p.left as f64, p.right as f64).expect("rounded span ordered"))
            .collect();
        let time_s = evaluated as f64 * self.config.sample_period;
        let mut utilization = Vec::with_capacity(geom.lots.len());
        for lot in &geom.lots {
            utilization.push(UtilizationSample {
                lot_id: lot.id,
                time_s,
                utilization: lot_utilization(lot, &spans)?,
            });
        }
        Ok(FilteredFrame {
            evaluated_frame: evaluated,
            evaluated_time: time_s,
            present_spans,
            utilization,
        })
    }
}

impl From<FilterState> for Checkpoint {
    fn from(state: FilterState) -> Checkpoint {
        Checkpoint {
            config: state.config,
            frames: state
                .window
                .into_iter()
                .map(|entry| {
                    (
                        entry.frame,
                        entry
                            .detections
                            .into_iter()
                            .map(|d| CheckpointDetection {
                                span: d.span,
                                lot_id: d.lot_id,
                                features: d.features,
                            })
                            .collect(),
                    )
                })
                .collect(),
            next_expected_frame: state.next_expected_frame,
            last_evaluated: state.last_evaluated,
        }
    }
}

impl TryFrom<Checkpoint> for FilterState {
    type Error = FilterError;

    /// Rebuilds ids and match edges from the buffered frames; only config
    /// and detections are persisted.
    fn try_from(cp: Checkpoint) -> Result<FilterState, FilterError> {
        let mut state = FilterState::new(cp.config)?;
        if cp.frames.len() >= cp.config.memory_frames {
            return Err(FilterError::InvalidConfig(format!(
                "checkpoint holds {} frames; a live buffer holds at most memory_frames - 1 = {}",
                cp.frames.len(),
                cp.config.memory_frames - 1
            )));
        }
        for w in cp.frames.windows(2) {
            if w[1].0 != w[0].0 + 1 {
                return Err(FilterError::InvalidConfig(format!(
                    "checkpoint frames not consecutive: {} then {}",
                    w[0].0, w[1].0
                )));
            }
        }
        for (frame, dets) in cp.frames {
            let mut accepted = Vec::with_capacity(dets.len());
            for d in dets {
                accepted.push(WindowDetection {
                    id: state.next_id,
                    span: d.span,
                    lot_id: d.lot_id,
                    features: d.features,
                });
                state.next_id += 1;
            }
            let mut own_edges = Vec::new();
            for (i, new) in accepted.iter().enumerate() {
                for entry in state.window.iter_mut() {
                    for old in &entry.detections {
                        if features_match(
                            &old.features,
                            old.span,
                            &new.features,
                            new.span,
                            &state.config.thresholds,
                        ) {
                            entry.edges.push((old.id, new.id));
                        }
                    }
                }
                for prev in &accepted[..i] {
                    if features_match(
                        &prev.features,
                        prev.span,
                        &new.features,
                        new.span,
                        &state.config.thresholds,
                    ) {
                        own_edges.push((prev.id, new.id));
                    }
                }
            }
            let first_id = accepted.first().map(|d| d.id).unwrap_or(state.next_id);
            state.window.push_back(FrameEntry { frame, first_id, detections: accepted, edges: own_edges });
        }
        state.next_expected_frame = cp.next_expected_frame;
        state.last_evaluated = cp.last_evaluated;
        Ok(state)
    }
}
