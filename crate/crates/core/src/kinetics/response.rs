use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Gaussian spot imaged onto the detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSpot {
    /// Spot area in the image plane, m².
    pub waist_area: f64,
    /// meters
    pub rayleigh_length: f64,
}

impl GaussianSpot {
    pub fn new(waist_area: f64, rayleigh_length: f64) -> Result<Self> {
        for (name, v) in [
            ("waist area", waist_area),
            ("Rayleigh length", rayleigh_length),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(GaussianSpot {
            waist_area,
            rayleigh_length,
        })
    }

    /// `A(z) = A0·(1 + (z/z_R)²)`
    pub fn area_at(&self, z: f64) -> f64 {
        self.waist_area * (1.0 + (z / self.rayleigh_length).powi(2))
    }
}

/// Count rate of a slow quadratic detector at offset `z` from the image
/// plane: `gain·P²/A(z)`.
pub fn response_vs_position(z: f64, spot: &GaussianSpot, power: f64, gain: f64) -> Result<f64> {
    if !(power >= 0.0) || !(gain >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "power and gain must be nonnegative, got {power} and {gain}"
        )));
    }
    if !z.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "offset must be finite, got {z}"
        )));
    }
    Ok(gain * power * power / spot.area_at(z))
}
