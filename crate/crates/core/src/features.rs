//! Vehicle appearance features and the distance kernels used for matching.
//!
//! Each detection carries a 196-component car-model feature vector (a
//! classifier softmax, every component strictly inside `(0, 1)`) and a
//! 24-bin color histogram normalized to sum 1. Matching compares model
//! vectors by L1 distance and histograms by Bhattacharyya distance in its
//! bounded Hellinger form `sqrt(1 - sum(sqrt(a_i * b_i)))`.

use serde::{Deserialize, Serialize};

use crate::error::FeatureError;

/// Length of the car-model feature vector.
pub const MODEL_FEATURE_LEN: usize = 196;
/// Number of color histogram bins.
pub const COLOR_HIST_LEN: usize = 24;
/// Tolerance for the histogram normalization check.
pub const HIST_SUM_TOLERANCE: f64 = 1e-6;

/// L1 distance between two model feature vectors.
pub fn model_distance(a: &[f64], b: &[f64]) -> Result<f64, FeatureError> {
    if a.len() != b.len() {
        return Err(FeatureError::LengthMismatch {
            field: "model",
            expected: a.len(),
            got: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}

fn check_normalized(name: &'static str, h: &[f64]) -> Result<(), FeatureError> {
    let sum: f64 = h.iter().sum();
    if (sum - 1.0).abs() > HIST_SUM_TOLERANCE {
        return Err(FeatureError::NotNormalized { sum });
    }
    if let Some((i, &v)) = h.iter().enumerate().find(|(_, &v)| !(0.0..=1.0).contains(&v)) {
        return Err(FeatureError::ComponentOutOfRange { field: name, index: i, value: v });
    }
    Ok(())
}

/// Bhattacharyya distance between two normalized histograms, in the
/// Hellinger form `sqrt(1 - BC)` so the result stays in `[0, 1]`.
pub fn histogram_distance(a: &[f64], b: &[f64]) -> Result<f64, FeatureError> {
    if a.len() != b.len() {
        return Err(FeatureError::LengthMismatch {
            field: "color_hist",
            expected: a.len(),
            got: b.len(),
        });
    }
    check_normalized("color_hist", a)?;
    check_normalized("color_hist", b)?;
    if a == b {
        return Ok(0.0);
    }
    let coefficient: f64 = a.iter().zip(b).map(|(x, y)| (x * y).sqrt()).sum();
    Ok((1.0 - coefficient.clamp(0.0, 1.0)).sqrt())
}

#[derive(Serialize, Deserialize)]
struct RawVehicleFeatures {
    model: Vec<f64>,
    color_hist: Vec<f64>,
}

/// Validated appearance features of one detected vehicle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawVehicleFeatures", into = "RawVehicleFeatures")]
pub struct VehicleFeatures {
    model: Vec<f64>,
    color_hist: Vec<f64>,
}

impl VehicleFeatures {
    pub fn new(model: Vec<f64>, color_hist: Vec<f64>) -> Result<Self, FeatureError> {
        if model.len() != MODEL_FEATURE_LEN {
            return Err(FeatureError::LengthMismatch {
                field: "model",
                expected: MODEL_FEATURE_LEN,
                got: model.len(),
            });
        }
        if let Some((i, &v)) = model.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v < 1.0)) {
            return Err(FeatureError::ComponentOutOfRange { field: "model", index: i, value: v });
        }
        if color_hist.len() != COLOR_HIST_LEN {
            return Err(FeatureError::LengthMismatch {
                field: "color_hist",
                expected: COLOR_HIST_LEN,
                got: color_hist.len(),
            });
        }
        check_normalized("color_hist", &color_hist)?;
        Ok(VehicleFeatures { model, color_hist })
    }

    pub fn model(&self) -> &[f64] {
        &self.model
    }

    pub fn color_hist(&self) -> &[f64] {
        &self.color_hist
    }

    /// L1 model distance; lengths are guaranteed by construction.
    pub fn model_distance_to(&self, other: &VehicleFeatures) -> f64 {
        self.model
            .iter()
            .zip(&other.model)
            .map(|(x, y)| (x - y).abs())
            .sum()
    }

    /// Like [`model_distance_to`] but bails out as soon as the partial sum
    /// reaches `limit`; returns `None` in that case. Matching only needs to
    /// know whether the distance is below the threshold.
    pub(crate) fn model_distance_below(&self, other: &VehicleFeatures, limit: f64) -> Option<f64> {
        let mut acc = 0.0;
        for (x, y) in self.model.iter().zip(&other.model) {
            acc += (x - y).abs();
            if acc >= limit {
                return None;
            }
        }
        Some(acc)
    }

    /// Bounded Bhattacharyya distance; normalization is guaranteed by
    /// construction.
    pub fn histogram_distance_to(&self, other: &VehicleFeatures) -> f64 {
        if self.color_hist == other.color_hist {
            return 0.0;
        }
        let coefficient: f64 = self
            .color_hist
            .iter()
            .zip(&other.color_hist)
            .map(|(x, y)| (x * y).sqrt())
            .sum();
        (1.0 - coefficient.clamp(0.0, 1.0)).sqrt()
    }
}

impl TryFrom<RawVehicleFeatures> for VehicleFeatures {
    type Error = FeatureError;

    fn try_from(raw: RawVehicleFeatures) -> Result<Self, Self::Error> {
        VehicleFeatures::new(raw.model, raw.color_hist)
    }
}

impl From<VehicleFeatures> for RawVehicleFeatures {
    fn from(f: VehicleFeatures) -> Self {
        RawVehicleFeatures { model: f.model, color_hist: f.color_hist }
    }
}
