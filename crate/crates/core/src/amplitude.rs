//! Transverse biphoton amplitude in the monochromatic limit.
//!
//! `F_x` is a Gaussian in the difference of the transverse wave-vector
//! deviations (set by the pump diameter `a`); `F_z` is a sinc in the sum of
//! the longitudinal deviations (set by the crystal length `l`).
//!
//! Deviations are measured outward from the pump axis for each photon, so a
//! positive `d_theta_i` opens the idler away from the pump even though the
//! idler's signed angle is negative.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::dispersion::CrystalSpec;
use crate::error::{Error, Result};
use crate::numeric::{bisect, linspace, sinc};
use crate::phasematch::{PhaseMatchPoint, PumpSpec};

/// Largest admissible angular deviation, radians.
pub const MAX_DEVIATION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Frame {
    Internal,
    External,
}

impl std::str::FromStr for Frame {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "internal" => Ok(Frame::Internal),
            "external" => Ok(Frame::External),
            other => Err(Error::InvalidArgument(format!(
                "frame must be 'internal' or 'external', got '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for Frame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Frame::Internal => "internal",
            Frame::External => "external",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AngularDeviation {
    pub d_theta_s: f64,
    pub d_theta_i: f64,
    pub frame: Frame,
}

impl AngularDeviation {
    pub fn new(d_theta_s: f64, d_theta_i: f64, frame: Frame) -> Result<Self> {
        for (name, d) in [("d_theta_s", d_theta_s), ("d_theta_i", d_theta_i)] {
            if !(d.abs() < MAX_DEVIATION) {
                return Err(Error::OutOfRange {
                    quantity: name,
                    value: d,
                    min: -MAX_DEVIATION,
                    max: MAX_DEVIATION,
                });
            }
        }
        Ok(AngularDeviation {
            d_theta_s,
            d_theta_i,
            frame,
        })
    }

    pub fn internal(d_theta_s: f64, d_theta_i: f64) -> Result<Self> {
        Self::new(d_theta_s, d_theta_i, Frame::Internal)
    }

    pub fn external(d_theta_s: f64, d_theta_i: f64) -> Result<Self> {
        Self::new(d_theta_s, d_theta_i, Frame::External)
    }

    /// Deviations in the internal frame (linearized Snell mapping).
    pub fn to_internal(&self, base: &PhaseMatchPoint) -> (f64, f64) {
        match self.frame {
            Frame::Internal => (self.d_theta_s, self.d_theta_i),
            Frame::External => {
                let (gs, gi) = external_to_internal_gain(base);
                (gs * self.d_theta_s, gi * self.d_theta_i)
            }
        }
    }
}

/// dθ_int/dθ_ext = cos θ_ext / (n cos θ_int) for signal and idler.
pub fn external_to_internal_gain(base: &PhaseMatchPoint) -> (f64, f64) {
    (
        base.theta_s_ext.cos() / (base.n_s * base.theta_s_int.cos()),
        base.theta_i_ext.cos() / (base.n_i * base.theta_i_int.cos()),
    )
}

/// Coefficients multiplying (Δθ_s, Δθ_i) inside `F_x` and `F_z`, in 1/m,
/// expressed for deviations given in `frame`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AmplitudeCoefficients {
    /// `(n_s/λ_s) cos θ_s`, `(n_i/λ_i) cos θ_i`
    pub transverse: (f64, f64),
    /// `(n_s/λ_s) |sin θ_s|`, `(n_i/λ_i) |sin θ_i|`
    pub longitudinal: (f64, f64),
}

pub fn coefficients(base: &PhaseMatchPoint, frame: Frame) -> AmplitudeCoefficients {
    let ks = base.n_s / base.lambda_s;
    let ki = base.n_i / base.lambda_i;
    let (gs, gi) = match frame {
        Frame::Internal => (1.0, 1.0),
        Frame::External => external_to_internal_gain(base),
    };
    AmplitudeCoefficients {
        transverse: (
            ks * base.theta_s_int.cos() * gs,
            ki * base.theta_i_int.cos() * gi,
        ),
        longitudinal: (
            ks * base.theta_s_int.sin().abs() * gs,
            ki * base.theta_i_int.sin().abs() * gi,
        ),
    }
}

/// Gaussian transverse factor.
pub fn f_x(dev: &AngularDeviation, base: &PhaseMatchPoint, pump: &PumpSpec) -> f64 {
    let (ds, di) = dev.to_internal(base);
    let c = coefficients(base, Frame::Internal).transverse;
    let diff = c.0 * ds - c.1 * di;
    let a = pump.beam_diameter;
    (-(2.0 * PI * a).powi(2) / 4.0 * diff * diff).exp()
}

/// Longitudinal sinc factor (unnormalized sinc; the overall sign of the
/// argument is irrelevant).
pub fn f_z(dev: &AngularDeviation, base: &PhaseMatchPoint, crystal: &CrystalSpec) -> f64 {
    let (ds, di) = dev.to_internal(base);
    let c = coefficients(base, Frame::Internal).longitudinal;
    sinc(PI * crystal.length * (c.0 * ds + c.1 * di))
}

/// `F² = (F_x·F_z)²`.
pub fn f_squared(
    dev: &AngularDeviation,
    base: &PhaseMatchPoint,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
) -> f64 {
    (f_x(dev, base, pump) * f_z(dev, base, crystal)).powi(2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub s_min: f64,
    pub s_max: f64,
    pub s_count: usize,
    pub i_min: f64,
    pub i_max: f64,
    pub i_count: usize,
    pub frame: Frame,
}

impl Default for GridSpec {
    /// ±5 mrad external, 201 × 201.
    fn default() -> Self {
        GridSpec::symmetric(5e-3, 201, Frame::External)
    }
}

impl GridSpec {
    pub fn symmetric(half_range: f64, count: usize, frame: Frame) -> Self {
        GridSpec {
            s_min: -half_range,
            s_max: half_range,
            s_count: count,
            i_min: -half_range,
            i_max: half_range,
            i_count: count,
            frame,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.s_count < 2 || self.i_count < 2 {
            return Err(Error::InvalidArgument(format!(
                "grid needs at least 2 points per axis, got {} × {}",
                self.s_count, self.i_count
            )));
        }
        for (lo, hi) in [(self.s_min, self.s_max), (self.i_min, self.i_max)] {
            if !(hi > lo) || !(lo.abs() < MAX_DEVIATION && hi.abs() < MAX_DEVIATION) {
                return Err(Error::InvalidArgument(format!(
                    "grid range [{lo}, {hi}] must be increasing and within ±{MAX_DEVIATION} rad"
                )));
            }
        }
        Ok(())
    }
}

/// `F_x`, `F_z` and `F²` sampled on a grid; matrices are row-major with rows
/// indexed by `grid_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeMap {
    pub base_point: PhaseMatchPoint,
    pub frame: Frame,
    pub grid_s: Vec<f64>,
    pub grid_i: Vec<f64>,
    pub f_x: Vec<f64>,
    pub f_z: Vec<f64>,
    pub f_sq: Vec<f64>,
    pub pump_diameter_a: f64,
    pub crystal_length_l: f64,
}

impl AmplitudeMap {
    pub fn index(&self, row: usize, col: usize) -> usize {
        row * self.grid_i.len() + col
    }

    /// `(d_theta_s, d_theta_i, f_x, f_z, f_sq)` in row-major order.
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64, f64, f64)> + '_ {
        self.grid_s.iter().enumerate().flat_map(move |(r, &s)| {
            self.grid_i.iter().enumerate().map(move |(c, &i)| {
                let k = self.index(r, c);
                (s, i, self.f_x[k], self.f_z[k], self.f_sq[k])
            })
        })
    }
}

pub fn correlation_map(
    base: &PhaseMatchPoint,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    grid: &GridSpec,
) -> Result<AmplitudeMap> {
    grid.validate()?;
    let grid_s = linspace(grid.s_min, grid.s_max, grid.s_count);
    let grid_i = linspace(grid.i_min, grid.i_max, grid.i_count);
    let n = grid_s.len() * grid_i.len();
    let (mut fx, mut fz, mut fsq) = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for &s in &grid_s {
        for &i in &grid_i {
            let dev = AngularDeviation {
                d_theta_s: s,
                d_theta_i: i,
                frame: grid.frame,
            };
            let x = f_x(&dev, base, pump);
            let z = f_z(&dev, base, crystal);
            fx.push(x);
            fz.push(z);
            fsq.push((x * z).powi(2));
        }
    }
    Ok(AmplitudeMap {
        base_point: *base,
        frame: grid.frame,
        grid_s,
        grid_i,
        f_x: fx,
        f_z: fz,
        f_sq: fsq,
        pump_diameter_a: pump.beam_diameter,
        crystal_length_l: crystal.length,
    })
}

/// Smallest `u > 0` with `F_z(u, u) = 1/2` along the diagonal
/// `Δθ_s = Δθ_i = u`, or `None` if `F_z` stays above 1/2 for every
/// admissible deviation (e.g. at a collinear base point).
pub fn diagonal_half_width(
    base: &PhaseMatchPoint,
    crystal: &CrystalSpec,
    frame: Frame,
) -> Result<Option<f64>> {
    let along = |u: f64| {
        let dev = AngularDeviation {
            d_theta_s: u,
            d_theta_i: u,
            frame,
        };
        f_z(&dev, base, crystal) - 0.5
    };
    let limit = MAX_DEVIATION * (1.0 - 1e-9);
    // First zero of sinc sits at x = π; the half point precedes it, so
    // bracketing up to that zero (or the limit) keeps us on the main lobe.
    let c = coefficients(base, frame).longitudinal;
    let slope = PI * crystal.length * (c.0 + c.1);
    let upper = if slope > 0.0 {
        (PI / slope).min(limit)
    } else {
        limit
    };
    if along(upper) > 0.0 {
        return Ok(None);
    }
    bisect(along, 0.0, upper, 200).map(Some)
}
