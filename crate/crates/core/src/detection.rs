//! Detection records: the interface between an upstream instance
//! segmentation detector and the tracking filter.
//!
//! A detector adapter (or the simulator) emits one [`FrameObservation`] per
//! sampled frame as a JSON Lines record. Each [`Detection`] carries either a
//! precomputed [`ParkStatus`] or a pixel mask from which the filter derives
//! one via [`classify_parked`](crate::geometry::classify_parked).

use serde::{Deserialize, Serialize};

use crate::features::VehicleFeatures;
use crate::geometry::{MaskFootprint, ParkStatus};
use crate::span::Span;

/// One vehicle instance in one frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub frame: u64,
    /// Horizontal pixel extent of the detected vehicle.
    pub span: Span,
    pub confidence: f64,
    pub features: VehicleFeatures,
    /// Pixel footprint; optional once `park_status` is precomputed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mask: Option<MaskFootprint>,
    /// Parked classification, if already computed upstream.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub park_status: Option<ParkStatus>,
}

impl Detection {
    /// Structural checks beyond what the field types already enforce.
    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.confidence) {
            return Err(format!("confidence {} outside [0, 1]", self.confidence));
        }
        if let Some(mask) = &self.mask {
            mask.validate().map_err(|e| e.to_string())?;
        }
        if self.mask.is_none() && self.park_status.is_none() {
            return Err("detection carries neither mask nor park_status".into());
        }
        Ok(())
    }
}

/// All detections for one sampled frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameObservation {
    pub frame: u64,
    /// Capture time in seconds; must equal `frame * sample_period`.
    pub time_s: f64,
    pub detections: Vec<Detection>,
}

impl FrameObservation {
    pub fn validate(&self) -> Result<(), String> {
        for (i, det) in self.detections.iter().enumerate() {
            if det.frame != self.frame {
                return Err(format!(
                    "detection {i} frame {} does not match observation frame {}",
                    det.frame, self.frame
                ));
            }
            det.validate().map_err(|e| format!("detection {i}: {e}"))?;
        }
        Ok(())
    }
}
