//! Synthetic scenario generation: reproducible ground-truth vehicle stays
//! plus clean and degraded detection streams.
//!
//! The degradation model mirrors the three noise sources seen in real
//! deployments: occlusion (contiguous burst deletions inside a stay),
//! lighting/random detection failures (independent per-detection dropout
//! plus injected false positives), and bounded feature/span perturbation.
//! Noise scales are validated against the match thresholds so that any two
//! surviving detections of the same vehicle still match, which is what
//! makes the generator usable as a test oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::detection::{Detection, FrameObservation};
use crate::error::SimError;
use crate::features::{histogram_distance, VehicleFeatures, COLOR_HIST_LEN, MODEL_FEATURE_LEN};
use crate::filter::MatchThresholds;
use crate::geometry::{LotRegion, ParkStatus, Polygon, SiteGeometry};
use crate::metrics::{LabeledFrame, LabelsFile, StayRecord};
use crate::span::Span;

/// Narrowest vehicle the generator will place.
pub const MIN_VEHICLE_WIDTH_PX: f64 = 20.0;
/// Sampled vehicle widths as a fraction of the lot width.
const VEHICLE_WIDTH_FRACTION: (f64, f64) = (0.55, 0.85);
const MODEL_DOMINANT_WEIGHT: f64 = 0.7;
const HIST_DOMINANT_WEIGHT: f64 = 0.9;

/// One simulated lot: id plus horizontal extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimLot {
    pub id: u32,
    pub x_min: f64,
    pub x_max: f64,
}

/// Occlusion bursts: contiguous runs of missed detections inside a stay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OcclusionModel {
    /// Expected bursts per 100 frames of stay interior.
    pub bursts_per_100_frames: f64,
    /// Longest single burst, in frames.
    pub max_burst_frames: u64,
}

/// Bounded perturbation scales applied to surviving detections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureNoise {
    /// L1 budget on the model vector; must stay below `thresholds.model / 2`.
    pub model: f64,
    /// Histogram-distance budget; must stay below `thresholds.histogram / 2`.
    pub histogram: f64,
    /// Per-endpoint span jitter in pixels; must stay below
    /// `thresholds.location / 4`.
    pub location: f64,
}

/// Full scenario description; `Default` gives a 4-lot, 2000-frame setup
/// with noise well inside the default match budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScenarioConfig {
    pub lots: Vec<SimLot>,
    pub frame_count: u64,
    pub sample_period: f64,
    /// Expected stays per lot per 100 frames.
    pub arrivals_per_100_frames: f64,
    /// Closed range of stay lengths in frames.
    pub stay_frames: (u64, u64),
    /// Independent per-detection dropout probability.
    pub dropout: f64,
    pub occlusion: OcclusionModel,
    /// Expected injected false positives per frame.
    pub false_positives_per_frame: f64,
    pub noise: FeatureNoise,
    pub seed: u64,
    /// Thresholds the noise budget is validated against.
    pub thresholds: MatchThresholds,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            lots: (0..4)
                .map(|i| SimLot {
                    id: i,
                    x_min: 200.0 * i as f64,
                    x_max: 200.0 * (i + 1) as f64,
                })
                .collect(),
            frame_count: 2000,
            sample_period: 15.0,
            arrivals_per_100_frames: 2.0,
            stay_frames: (40, 200),
            dropout: 0.0,
            occlusion: OcclusionModel { bursts_per_100_frames: 1.0, max_burst_frames: 2 },
            false_positives_per_frame: 0.0,
            noise: FeatureNoise { model: 0.1, histogram: 0.05, location: 2.0 },
            seed: 0,
            thresholds: MatchThresholds::default(),
        }
    }
}

impl ScenarioConfig {
    fn vehicle_width_range(&self, lot: &SimLot) -> Result<(u64, u64), SimError> {
        let width = lot.x_max - lot.x_min;
        let hi = (width * VEHICLE_WIDTH_FRACTION.1).floor();
        let lo = (width * VEHICLE_WIDTH_FRACTION.0).ceil().max(MIN_VEHICLE_WIDTH_PX);
        if hi < lo {
            return Err(SimError::LotTooNarrow {
                lot_id: lot.id,
                width,
                min: (MIN_VEHICLE_WIDTH_PX / VEHICLE_WIDTH_FRACTION.1).ceil(),
            });
        }
        Ok((lo as u64, hi as u64))
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.lots.is_empty() {
            return Err(SimError::InvalidConfig("no lots".into()));
        }
        let mut ids = std::collections::BTreeSet::new();
        for lot in &self.lots {
            if !ids.insert(lot.id) {
                return Err(SimError::InvalidConfig(format!("duplicate lot id {}", lot.id)));
            }
            if !(lot.x_max > lot.x_min) {
                return Err(SimError::InvalidConfig(format!(
                    "lot {}: x_max {} <= x_min {}",
                    lot.id, lot.x_max, lot.x_min
                )));
            }
            self.vehicle_width_range(lot)?;
        }
        if self.frame_count == 0 {
            return Err(SimError::InvalidConfig("frame_count must be positive".into()));
        }
        if !(self.sample_period > 0.0) {
            return Err(SimError::InvalidConfig("sample_period must be positive".into()));
        }
        if self.stay_frames.0 == 0 || self.stay_frames.1 < self.stay_frames.0 {
            return Err(SimError::InvalidConfig(format!(
                "stay_frames range ({}, {}) invalid",
                self.stay_frames.0, self.stay_frames.1
            )));
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return Err(SimError::InvalidConfig(format!("dropout {} outside [0, 1]", self.dropout)));
        }
        for (name, v) in [
            ("arrivals_per_100_frames", self.arrivals_per_100_frames),
            ("bursts_per_100_frames", self.occlusion.bursts_per_100_frames),
            ("false_positives_per_frame", self.false_positives_per_frame),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(SimError::InvalidConfig(format!("{name} must be >= 0, got {v}")));
            }
        }
        self.validate_noise_budget()
    }

    /// The noise must leave enough threshold headroom that two perturbed
    /// detections of the same vehicle always match.
    fn validate_noise_budget(&self) -> Result<(), SimError> {
        let th = &self.thresholds;
        let n = &self.noise;
        if n.model < 0.0 || n.histogram < 0.0 || n.location < 0.0 {
            return Err(SimError::InvalidConfig("noise scales must be >= 0".into()));
        }
        if n.model >= th.model / 2.0 {
            return Err(SimError::NoiseExceedsBudget(format!(
                "model noise {} >= model threshold / 2 = {}",
                n.model,
                th.model / 2.0
            )));
        }
        if n.histogram >= th.histogram / 2.0 {
            return Err(SimError::NoiseExceedsBudget(format!(
                "histogram noise {} >= histogram threshold / 2 = {}",
                n.histogram,
                th.histogram / 2.0
            )));
        }
        if 2.0 * n.location >= th.location / 2.0 {
            return Err(SimError::NoiseExceedsBudget(format!(
                "span jitter {} makes worst-case pair distance {} exceed location threshold {}",
                n.location,
                4.0 * n.location,
                th.location
            )));
        }
        Ok(())
    }
}

/// Canonical appearance of one simulated vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleProfile {
    pub vehicle_id: u32,
    pub features: VehicleFeatures,
}

/// Ground truth: stays plus per-vehicle canonical features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioTruth {
    pub stays: Vec<StayRecord>,
    pub profiles: Vec<VehicleProfile>,
}

/// Deterministic base features for vehicle (or false-positive) `index`:
/// a dominant model component and a dominant histogram bin that cycle at
/// coprime-ish periods, so profiles stay pairwise separable.
pub fn base_features(index: u32) -> VehicleFeatures {
    let mut model = vec![(1.0 - MODEL_DOMINANT_WEIGHT) / (MODEL_FEATURE_LEN - 1) as f64; MODEL_FEATURE_LEN];
    model[index as usize % MODEL_FEATURE_LEN] = MODEL_DOMINANT_WEIGHT;
    let mut hist = vec![(1.0 - HIST_DOMINANT_WEIGHT) / (COLOR_HIST_LEN - 1) as f64; COLOR_HIST_LEN];
    hist[index as usize % COLOR_HIST_LEN] = HIST_DOMINANT_WEIGHT;
    VehicleFeatures::new(model, hist).expect("base features valid")
}

/// Discretized exponential inter-arrival gap, in frames.
fn sample_gap(rng: &mut ChaCha8Rng, rate_per_frame: f64) -> Option<u64> {
    if rate_per_frame <= 0.0 {
        return None;
    }
    let u: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    Some((-u.ln() / rate_per_frame).floor() as u64)
}

fn sample_poisson(rng: &mut ChaCha8Rng, lambda: f64) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    let limit = (-lambda).exp();
    let mut count = 0;
    let mut product: f64 = 1.0;
    loop {
        product *= rng.gen::<f64>();
        if product <= limit {
            return count;
        }
        count += 1;
    }
}

/// Generate ground truth and the clean (noise-free) detection stream.
///
/// Deterministic given the config (including its seed). The clean stream
/// contains exactly one detection per occupied lot per frame, placed at
/// the true span with the vehicle's canonical features.
pub fn generate_scenario(cfg: &ScenarioConfig) -> Result<(ScenarioTruth, Vec<FrameObservation>), SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let arrival_rate = cfg.arrivals_per_100_frames / 100.0;

    let mut stays: Vec<StayRecord> = Vec::new();
    let mut profiles: Vec<VehicleProfile> = Vec::new();
    for lot in &cfg.lots {
        let (w_lo, w_hi) = cfg.vehicle_width_range(lot)?;
        let lot_width = (lot.x_max - lot.x_min) as u64;
        let mut t: u64 = 0;
        while let Some(gap) = sample_gap(&mut rng, arrival_rate) {
            let start = t.saturating_add(gap);
            let length = rng.gen_range(cfg.stay_frames.0..=cfg.stay_frames.1);
            if start >= cfg.frame_count || start + length > cfg.frame_count {
                break;
            }
            let width = rng.gen_range(w_lo..=w_hi);
            let offset = rng.gen_range(0..=lot_width - width);
            let left = lot.x_min + offset as f64;
            let vehicle_id = profiles.len() as u32;
            stays.push(StayRecord {
                vehicle_id,
                lot_id: lot.id,
                enter_frame: start,
                exit_frame: start + length - 1,
                span: Span::new(left, left + width as f64).expect("ordered"),
            });
            profiles.push(VehicleProfile { vehicle_id, features: base_features(vehicle_id) });
            t = start + length;
        }
    }

    verify_separation(&profiles, cfg)?;

    let mut per_frame: Vec<Vec<usize>> = vec![Vec::new(); cfg.frame_count as usize];
    for (idx, stay) in stays.iter().enumerate() {
        for f in stay.enter_frame..=stay.exit_frame {
            per_frame[f as usize].push(idx);
        }
    }
    let clean: Vec<FrameObservation> = (0..cfg.frame_count)
        .map(|frame| FrameObservation {
            frame,
            time_s: frame as f64 * cfg.sample_period,
            detections: per_frame[frame as usize]
                .iter()
                .map(|&idx| {
                    let stay = &stays[idx];
                    Detection {
                        frame,
                        span: stay.span,
                        confidence: 1.0,
                        features: profiles[stay.vehicle_id as usize].features.clone(),
                        mask: None,
                        park_status: Some(ParkStatus::Parked(stay.lot_id)),
                    }
                })
                .collect(),
        })
        .collect();

    Ok((ScenarioTruth { stays, profiles }, clean))
}

/// Every pair of distinct vehicles must be separable by model distance or
/// by histogram distance under the configured thresholds and noise.
fn verify_separation(profiles: &[VehicleProfile], cfg: &ScenarioConfig) -> Result<(), SimError> {
    let model_gap = 2.0 * cfg.noise.model + cfg.thresholds.model;
    for i in 0..profiles.len() {
        for j in (i + 1)..profiles.len() {
            let a = &profiles[i].features;
            let b = &profiles[j].features;
            if a.model_distance_to(b) > model_gap || a.histogram_distance_to(b) > cfg.thresholds.histogram {
                continue;
            }
            return Err(SimError::InseparableFeatures(
                profiles[i].vehicle_id,
                profiles[j].vehicle_id,
            ));
        }
    }
    Ok(())
}

fn perturb_model(rng: &mut ChaCha8Rng, base: &[f64], scale: f64) -> Vec<f64> {
    if scale <= 0.0 {
        return base.to_vec();
    }
    let per_component = scale / base.len() as f64;
    base.iter()
        .map(|&b| {
            let delta = rng.gen_range(-per_component..=per_component);
            (b + delta).clamp(1e-9, 1.0 - 1e-9)
        })
        .collect()
}

fn perturb_hist(rng: &mut ChaCha8Rng, base: &[f64], scale: f64) -> Result<Vec<f64>, SimError> {
    if scale <= 0.0 {
        return Ok(base.to_vec());
    }
    let wobble = (2.0 * scale).min(0.5);
    for _ in 0..32 {
        let raw: Vec<f64> = base
            .iter()
            .map(|&b| b * (1.0 + rng.gen_range(-wobble..=wobble)))
            .collect();
        let sum: f64 = raw.iter().sum();
        let candidate: Vec<f64> = raw.iter().map(|&v| v / sum).collect();
        if histogram_distance(base, &candidate)? <= scale {
            return Ok(candidate);
        }
    }
    Ok(base.to_vec())
}

fn perturb_span(rng: &mut ChaCha8Rng, span: Span, scale: f64) -> Span {
    if scale <= 0.0 {
        return span;
    }
    for _ in 0..32 {
        let left = span.left() + rng.gen_range(-scale..=scale);
        let right = span.right() + rng.gen_range(-scale..=scale);
        if let Ok(jittered) = Span::new(left, right) {
            return jittered;
        }
    }
    span
}

/// Apply occlusion bursts, independent dropout, bounded feature noise, and
/// false-positive injection to a clean stream.
///
/// Bursts are confined to stay interiors and separated by at least one
/// detected frame, so a realized occlusion gap never exceeds
/// `occlusion.max_burst_frames`. Deterministic given the config seed.
pub fn degrade_stream(
    truth: &ScenarioTruth,
    clean: &[FrameObservation],
    cfg: &ScenarioConfig,
) -> Result<Vec<FrameObservation>, SimError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(1);

    // Burst schedule per stay, interiors only.
    let burst_rate = cfg.occlusion.bursts_per_100_frames / 100.0;
    let mut occluded: std::collections::HashSet<(u32, u64)> = std::collections::HashSet::new();
    for stay in &truth.stays {
        if cfg.occlusion.max_burst_frames == 0 || stay.true_frames() < 3 {
            continue;
        }
        let interior_end = stay.exit_frame - 1;
        let mut t = stay.enter_frame + 1;
        while t <= interior_end {
            let Some(gap) = sample_gap(&mut rng, burst_rate) else {
                break;
            };
            let start = t.saturating_add(gap);
            if start > interior_end {
                break;
            }
            let length = rng.gen_range(1..=cfg.occlusion.max_burst_frames);
            let end = (start + length - 1).min(interior_end);
            for f in start..=end {
                occluded.insert((stay.vehicle_id, f));
            }
            // Leave at least one detected frame between bursts.
            t = end + 2;
        }
    }

    // Stay lookup by (lot, frame).
    let mut stay_at: std::collections::HashMap<(u32, u64), usize> = std::collections::HashMap::new();
    for (idx, stay) in truth.stays.iter().enumerate() {
        for f in stay.enter_frame..=stay.exit_frame {
            stay_at.insert((stay.lot_id, f), idx);
        }
    }

    let mut fp_index = truth.profiles.len() as u32;
    let mut out = Vec::with_capacity(clean.len());
    for obs in clean {
        let mut detections = Vec::new();
        for det in &obs.detections {
            let Some(ParkStatus::Parked(lot_id)) = det.park_status else {
                continue;
            };
            let stay_idx = stay_at
                .get(&(lot_id, obs.frame))
                .copied()
                .ok_or_else(|| SimError::InvalidConfig("clean stream does not match truth".into()))?;
            let vehicle_id = truth.stays[stay_idx].vehicle_id;
            if occluded.contains(&(vehicle_id, obs.frame)) {
                continue;
            }
            if cfg.dropout > 0.0 && rng.gen_bool(cfg.dropout) {
                continue;
            }
            let base = &truth.profiles[vehicle_id as usize].features;
            let model = perturb_model(&mut rng, base.model(), cfg.noise.model);
            let hist = perturb_hist(&mut rng, base.color_hist(), cfg.noise.histogram)?;
            let features = VehicleFeatures::new(model, hist)?;
            detections.push(Detection {
                frame: obs.frame,
                span: perturb_span(&mut rng, det.span, cfg.noise.location),
                confidence: det.confidence,
                features,
                mask: None,
                park_status: det.park_status,
            });
        }
        for _ in 0..sample_poisson(&mut rng, cfg.false_positives_per_frame) {
            let lot = cfg.lots[rng.gen_range(0..cfg.lots.len())];
            let (w_lo, w_hi) = cfg.vehicle_width_range(&lot)?;
            let lot_width = (lot.x_max - lot.x_min) as u64;
            let width = rng.gen_range(w_lo..=w_hi);
            let offset = rng.gen_range(0..=lot_width - width);
            let left = lot.x_min + offset as f64;
            detections.push(Detection {
                frame: obs.frame,
                span: Span::new(left, left + width as f64).expect("ordered"),
                confidence: 1.0,
                features: base_features(fp_index),
                mask: None,
                park_status: Some(ParkStatus::Parked(lot.id)),
            });
            fp_index = fp_index.wrapping_add(1);
        }
        out.push(FrameObservation { frame: obs.frame, time_s: obs.time_s, detections });
    }
    Ok(out)
}

/// Scenario in which every lot holds one vehicle for the entire stream.
///
/// This is the load shape used by throughput benchmarks: `lot_count`
/// detections per frame, all of them long-lived tracks that keep the
/// matcher busy. Degrade the returned clean stream to add feature jitter.
pub fn saturated_scenario(
    lot_count: u32,
    frame_count: u64,
    seed: u64,
) -> Result<(ScenarioConfig, ScenarioTruth, Vec<FrameObservation>), SimError> {
    let cfg = ScenarioConfig {
        lots: (0..lot_count)
            .map(|i| SimLot {
                id: i,
                x_min: 200.0 * i as f64,
                x_max: 200.0 * (i + 1) as f64,
            })
            .collect(),
        frame_count,
        arrivals_per_100_frames: 0.0,
        stay_frames: (frame_count, frame_count),
        seed,
        ..ScenarioConfig::default()
    };
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut stays = Vec::with_capacity(lot_count as usize);
    let mut profiles = Vec::with_capacity(lot_count as usize);
    for (vehicle_id, lot) in cfg.lots.iter().enumerate() {
        let vehicle_id = vehicle_id as u32;
        let (w_lo, w_hi) = cfg.vehicle_width_range(lot)?;
        let width = rng.gen_range(w_lo..=w_hi);
        let offset = rng.gen_range(0..=(lot.x_max - lot.x_min) as u64 - width);
        let left = lot.x_min + offset as f64;
        stays.push(StayRecord {
            vehicle_id,
            lot_id: lot.id,
            enter_frame: 0,
            exit_frame: frame_count - 1,
            span: Span::new(left, left + width as f64).expect("ordered"),
        });
        profiles.push(VehicleProfile { vehicle_id, features: base_features(vehicle_id) });
    }
    let truth = ScenarioTruth { stays, profiles };
    let clean: Vec<FrameObservation> = (0..frame_count)
        .map(|frame| FrameObservation {
            frame,
            time_s: frame as f64 * cfg.sample_period,
            detections: truth
                .stays
                .iter()
                .map(|stay| Detection {
                    frame,
                    span: stay.span,
                    confidence: 1.0,
                    features: truth.profiles[stay.vehicle_id as usize].features.clone(),
                    mask: None,
                    park_status: Some(ParkStatus::Parked(stay.lot_id)),
                })
                .collect(),
        })
        .collect();
    Ok((cfg, truth, clean))
}

/// Labels file (per-frame boxes plus stays) derived from ground truth.
pub fn labels_from_truth(truth: &ScenarioTruth, frame_count: u64) -> LabelsFile {
    let mut frames: Vec<LabeledFrame> = (0..frame_count)
        .map(|frame| LabeledFrame { frame, boxes: Vec::new() })
        .collect();
    for stay in &truth.stays {
        for f in stay.enter_frame..=stay.exit_frame {
            frames[f as usize].boxes.push(stay.span);
        }
    }
    LabelsFile { frames, stays: truth.stays.clone() }
}

/// Rectangular site geometry covering the scenario's lots (no road areas).
pub fn scenario_geometry(cfg: &ScenarioConfig) -> Result<SiteGeometry, SimError> {
    let x_max = cfg
        .lots
        .iter()
        .map(|l| l.x_max)
        .fold(0.0f64, f64::max)
        .ceil() as u32;
    let height = 64;
    let lots = cfg
        .lots
        .iter()
        .map(|l| {
            let poly = Polygon::rectangle(l.x_min, 0.0, l.x_max, height as f64)
                .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
            LotRegion::new(l.id, poly).map_err(|e| SimError::InvalidConfig(e.to_string()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    SiteGeometry::new(x_max.max(1), height, 0.5, lots, Vec::new())
        .map_err(|e| SimError::InvalidConfig(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_given_seed() {
        let cfg = ScenarioConfig::default();
        let (truth_a, clean_a) = generate_scenario(&cfg).unwrap();
        let (truth_b, clean_b) = generate_scenario(&cfg).unwrap();
        assert_eq!(truth_a, truth_b);
        assert_eq!(clean_a, clean_b);
        let degraded_a = degrade_stream(&truth_a, &clean_a, &cfg).unwrap();
        let degraded_b = degrade_stream(&truth_b, &clean_b, &cfg).unwrap();
        assert_eq!(degraded_a, degraded_b);
    }

    #[test]
    fn different_seeds_differ() {
        let cfg = ScenarioConfig::default();
        let other = ScenarioConfig { seed: 1, ..cfg.clone() };
        let (truth_a, _) = generate_scenario(&cfg).unwrap();
        let (truth_b, _) = generate_scenario(&other).unwrap();
        assert_ne!(truth_a.stays, truth_b.stays);
    }

    #[test]
    fn zero_arrivals_mean_empty_scenario() {
        let cfg = ScenarioConfig { arrivals_per_100_frames: 0.0, ..ScenarioConfig::default() };
        let (truth, clean) = generate_scenario(&cfg).unwrap();
        assert!(truth.stays.is_empty());
        assert!(clean.iter().all(|o| o.detections.is_empty()));
        assert_eq!(clean.len(), cfg.frame_count as usize);
    }

    #[test]
    fn stays_stay_in_range_and_do_not_overlap_per_lot() {
        let cfg = ScenarioConfig { seed: 42, ..ScenarioConfig::default() };
        let (truth, clean) = generate_scenario(&cfg).unwrap();
        assert!(!truth.stays.is_empty());
        for stay in &truth.stays {
            assert!(stay.exit_frame < cfg.frame_count);
            assert!(stay.exit_frame >= stay.enter_frame);
            let lot = cfg.lots.iter().find(|l| l.id == stay.lot_id).unwrap();
            assert!(stay.span.left() >= lot.x_min && stay.span.right() <= lot.x_max);
        }
        for a in &truth.stays {
            for b in &truth.stays {
                if a.vehicle_id != b.vehicle_id && a.lot_id == b.lot_id {
                    assert!(
                        a.exit_frame < b.enter_frame || b.exit_frame < a.enter_frame,
                        "overlapping stays in lot {}",
                        a.lot_id
                    );
                }
            }
        }
        // Occupancy recount: clean detections match summed stay lengths.
        let total_detections: u64 = clean.iter().map(|o| o.detections.len() as u64).sum();
        let total_stay_frames: u64 = truth.stays.iter().map(|s| s.true_frames()).sum();
        assert_eq!(total_detections, total_stay_frames);
    }

    #[test]
    fn zero_noise_degrade_is_identity() {
        let cfg = ScenarioConfig {
            occlusion: OcclusionModel { bursts_per_100_frames: 0.0, max_burst_frames: 0 },
            noise: FeatureNoise { model: 0.0, histogram: 0.0, location: 0.0 },
            ..ScenarioConfig::default()
        };
        let (truth, clean) = generate_scenario(&cfg).unwrap();
        let degraded = degrade_stream(&truth, &clean, &cfg).unwrap();
        assert_eq!(clean, degraded);
    }

    #[test]
    fn full_dropout_removes_everything() {
        let cfg = ScenarioConfig { dropout: 1.0, ..ScenarioConfig::default() };
        let (truth, clean) = generate_scenario(&cfg).unwrap();
        let degraded = degrade_stream(&truth, &clean, &cfg).unwrap();
        assert!(degraded.iter().all(|o| o.detections.is_empty()));
    }

    #[test]
    fn dropout_fraction_close_to_nominal() {
        // One always-occupied lot for 10_000 frames.
        let cfg = ScenarioConfig {
            lots: vec![SimLot { id: 0, x_min: 0.0, x_max: 200.0 }],
            frame_count: 10_000,
            arrivals_per_100_frames: 1000.0,
            stay_frames: (9_999, 9_999),
            dropout: 0.2,
            occlusion: OcclusionModel { bursts_per_100_frames: 0.0, max_burst_frames: 0 },
            seed: 11,
            ..ScenarioConfig::default()
        };
        let (truth, clean) = generate_scenario(&cfg).unwrap();
        let total: u64 = clean.iter().map(|o| o.detections.len() as u64).sum();
        assert!(total >= 9_999);
        let degraded = degrade_stream(&truth, &clean, &cfg).unwrap();
        let kept: u64 = degraded.iter().map(|o| o.detections.len() as u64).sum();
        let dropped = 1.0 - kept as f64 / total as f64;
        assert!((dropped - 0.2).abs() <= 0.02, "realized dropout {dropped}");
    }

    #[test]
    fn noise_budget_violations_are_rejected() {
        let bad = ScenarioConfig {
            noise: FeatureNoise { model: 0.25, histogram: 0.05, location: 2.0 },
            ..ScenarioConfig::default()
        };
        let err = generate_scenario(&bad).unwrap_err();
        assert!(err.to_string().contains("noise exceeds match budget"));

        let bad_jitter = ScenarioConfig {
            noise: FeatureNoise { model: 0.1, histogram: 0.05, location: 10.0 },
            ..ScenarioConfig::default()
        };
        assert!(degrade_stream(
            &ScenarioTruth { stays: vec![], profiles: vec![] },
            &[],
            &bad_jitter
        )
        .is_err());
    }

    #[test]
    fn narrow_lot_is_rejected() {
        let cfg = ScenarioConfig {
            lots: vec![SimLot { id: 0, x_min: 0.0, x_max: 10.0 }],
            ..ScenarioConfig::default()
        };
        let err = generate_scenario(&cfg).unwrap_err();
        assert!(matches!(err, SimError::LotTooNarrow { .. }));
    }

    #[test]
    fn occlusion_gaps_respect_max_length() {
        let cfg = ScenarioConfig {
            occlusion: OcclusionModel { bursts_per_100_frames: 10.0, max_burst_frames: 3 },
            noise: FeatureNoise { model: 0.0, histogram: 0.0, location: 0.0 },
            seed: 5,
            ..ScenarioConfig::default()
        };
        let (truth, clean) = generate_scenario(&cfg).unwrap();
        let degraded = degrade_stream(&truth, &clean, &cfg).unwrap();
        // Per stay, look at the realized gap structure.
        for stay in &truth.stays {
            let mut detected: Vec<bool> = vec![false; stay.true_frames() as usize];
            for obs in &degraded {
                if obs.frame < stay.enter_frame || obs.frame > stay.exit_frame {
                    continue;
                }
                if obs.detections.iter().any(|d| {
                    d.park_status == Some(ParkStatus::Parked(stay.lot_id)) && d.span == stay.span
                }) {
                    detected[(obs.frame - stay.enter_frame) as usize] = true;
                }
            }
            assert!(detected[0], "stay boundary frame occluded");
            assert!(*detected.last().unwrap(), "stay boundary frame occluded");
            let mut gap = 0u64;
            let mut max_gap = 0u64;
            for &d in &detected {
                if d {
                    gap = 0;
                } else {
                    gap += 1;
                    max_gap = max_gap.max(gap);
                }
            }
            assert!(max_gap <= cfg.occlusion.max_burst_frames, "gap {max_gap} too long");
        }
        // The schedule should actually produce occlusions somewhere.
        let clean_total: u64 = clean.iter().map(|o| o.detections.len() as u64).sum();
        let kept: u64 = degraded.iter().map(|o| o.detections.len() as u64).sum();
        assert!(kept < clean_total);
    }

    #[test]
    fn surviving_same_vehicle_detections_always_match() {
        let cfg = ScenarioConfig {
            frame_count: 300,
            dropout: 0.1,
            false_positives_per_frame: 0.05,
            seed: 3,
            ..ScenarioConfig::default()
        };
        let (truth, clean) = generate_scenario(&cfg).unwrap();
        let degraded = degrade_stream(&truth, &clean, &cfg).unwrap();
        // Group degraded detections by the stay they belong to.
        let mut by_vehicle: std::collections::BTreeMap<u32, Vec<&Detection>> = Default::default();
        let mut fp_detections: Vec<&Detection> = Vec::new();
        for obs in &degraded {
            'dets: for det in &obs.detections {
                for stay in &truth.stays {
                    let base = &truth.profiles[stay.vehicle_id as usize].features;
                    // A true detection stays within the model-noise budget of
                    // its own base features; false positives never do.
                    if det.park_status == Some(ParkStatus::Parked(stay.lot_id))
                        && obs.frame >= stay.enter_frame
                        && obs.frame <= stay.exit_frame
                        && det.features.model_distance_to(base) <= cfg.noise.model + 1e-9
                    {
                        by_vehicle.entry(stay.vehicle_id).or_default().push(det);
                        continue 'dets;
                    }
                }
                fp_detections.push(det);
            }
        }
        assert!(by_vehicle.values().any(|v| v.len() > 3));
        for dets in by_vehicle.values() {
            for a in dets {
                for b in dets {
                    assert!(crate::filter::is_match(a, b, &cfg.thresholds));
                }
            }
        }
        // False positives must not match any true detection.
        for fp in &fp_detections {
            for dets in by_vehicle.values() {
                for d in dets {
                    assert!(!crate::filter::is_match(fp, d, &cfg.thresholds));
                }
            }
        }
    }
}
