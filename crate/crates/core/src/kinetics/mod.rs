//! Photocathode kinetics: two-trap sensitization under illumination,
//! bi-exponential fits of dark relaxation, and the position-scan response.

mod fit;
mod response;
mod traps;

pub use fit::{fit_biexponential, DecayFit, FitOptions};
pub use response::{response_vs_position, GaussianSpot};
pub use traps::{
    closed_form_population, simulate_sensitization, IntensitySchedule, Segment, Simulation, Trap,
    TrapModel, CALIBRATION_INTENSITY,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampled ordinate against time, optionally with per-point standard deviations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    /// seconds, strictly increasing
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub sigmas: Option<Vec<f64>>,
}

impl Trace {
    pub fn new(times: Vec<f64>, values: Vec<f64>, sigmas: Option<Vec<f64>>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "trace has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if let Some(s) = &sigmas {
            if s.len() != times.len() {
                return Err(Error::InvalidArgument(format!(
                    "trace has {} times but {} standard deviations",
                    times.len(),
                    s.len()
                )));
            }
            if let Some(bad) = s.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "standard deviations must be positive, got {bad}"
                )));
            }
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "trace contains non-finite entries".into(),
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "trace times must be strictly increasing".into(),
            ));
        }
        Ok(Trace {
            times,
            values,
            sigmas,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Points with `t >= t0`, re-based so the first kept sample is at `t - t0`.
    pub fn window_from(&self, t0: f64) -> Result<Trace> {
        let start = self.times.partition_point(|&t| t < t0);
        Trace::new(
            self.times[start..].iter().map(|t| t - t0).collect(),
            self.values[start..].to_vec(),
            self.sigmas.as_ref().map(|s| s[start..].to_vec()),
        )
    }
}
