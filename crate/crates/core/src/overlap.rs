//! Overlap between the down- and up-conversion phase-matching conditions.
//!
//! Two error sources are modelled: a misalignment Δα of the second
//! crystal's optic axis, and a longitudinal displacement `z` of the emission
//! point from the 1:1 imaging plane. Each maps to angular deviations that are
//! fed into `F²`. Integrating the `z` overlap across the crystal gives the
//! spectral overlap.

use serde::{Deserialize, Serialize};

use crate::amplitude::{f_squared, AngularDeviation, Frame};
use crate::dispersion::CrystalSpec;
use crate::error::{Error, Result};
use crate::numeric::{bisect, simpson};
use crate::phasematch::{
    angle_derivative_wrt_cut, solve_emission_angles, PhaseMatchPoint, Photon, PumpSpec,
};

/// Quadrature nodes across the crystal length.
pub const DEFAULT_NODES: usize = 129;
/// Focal length used when none is configured, meters.
pub const DEFAULT_FOCAL_LENGTH: f64 = 50e-3;
/// Signal wavelength standing in for the degenerate point in misalignment
/// curves, where the exact derivative is a branch point.
pub const DEGENERATE_PROXY: f64 = 701e-9;

/// Thin lens relaying crystal 1 onto crystal 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImagingSystem {
    pub focal_length: f64,
    pub object_distance: f64,
    pub image_distance: f64,
    pub magnification: f64,
}

impl ImagingSystem {
    /// 2f–2f relay with magnification −1.
    pub fn unit_magnification(focal_length: f64) -> Result<Self> {
        Self::new(focal_length, 2.0 * focal_length, 2.0 * focal_length)
    }

    pub fn new(focal_length: f64, object_distance: f64, image_distance: f64) -> Result<Self> {
        if !(focal_length > 0.0 && object_distance > 0.0 && image_distance > 0.0) {
            return Err(Error::InvalidArgument(
                "imaging distances must be positive".into(),
            ));
        }
        let lhs = 1.0 / object_distance + 1.0 / image_distance;
        let rhs = 1.0 / focal_length;
        if (lhs - rhs).abs() > 1e-12 * rhs {
            return Err(Error::InvalidArgument(format!(
                "thin-lens relation violated: 1/{object_distance} + 1/{image_distance} ≠ 1/{focal_length}"
            )));
        }
        Ok(ImagingSystem {
            focal_length,
            object_distance,
            image_distance,
            magnification: -image_distance / object_distance,
        })
    }
}

impl Default for ImagingSystem {
    fn default() -> Self {
        ImagingSystem::unit_magnification(DEFAULT_FOCAL_LENGTH).expect("default focal length")
    }
}

/// Maps a displacement `z` of the emission point to angular deviations of
/// the signal and idler rays at the second crystal.
pub trait DisplacementModel {
    fn angular_errors(&self, z: f64, base: &PhaseMatchPoint) -> Result<AngularDeviation>;
}

impl DisplacementModel for ImagingSystem {
    fn angular_errors(&self, z: f64, base: &PhaseMatchPoint) -> Result<AngularDeviation> {
        displacement_angular_errors(z, base, self)
    }
}

/// First-order thin-lens model: a point displaced by `z` sees its angular
/// magnification change by `1 − z/f`, so each ray is off by
/// `Δθ_j = −(z/f)·|θ_j^ext|` (outward convention, external frame).
pub fn displacement_angular_errors(
    z: f64,
    base: &PhaseMatchPoint,
    imaging: &ImagingSystem,
) -> Result<AngularDeviation> {
    let f = imaging.focal_length;
    if !(z.abs() < f) {
        return Err(Error::ModelValidity(format!(
            "displacement {z:e} m is not small against the focal length {f:e} m"
        )));
    }
    let scale = -z / f;
    AngularDeviation::external(
        scale * base.theta_s_ext.abs(),
        scale * base.theta_i_ext.abs(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OverlapAxis {
    MisalignmentDeg,
    DisplacementM,
    WavelengthNm,
}

impl OverlapAxis {
    pub fn column_name(&self) -> &'static str {
        match self {
            OverlapAxis::MisalignmentDeg => "misalignment_deg",
            OverlapAxis::DisplacementM => "displacement_m",
            OverlapAxis::WavelengthNm => "wavelength_nm",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapCurve {
    pub axis: OverlapAxis,
    /// `(abscissa, overlap)`
    pub samples: Vec<(f64, f64)>,
    /// `(λ_s, λ_i)` of the base point, meters; absent for spectral curves.
    pub base_wavelengths: Option<(f64, f64)>,
}

impl OverlapCurve {
    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|s| s.1)
    }
}

/// Signed ∂θ_ext/∂α for signal and idler at `lambda_s`.
pub fn misalignment_derivatives(
    lambda_s: f64,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
) -> Result<(f64, f64)> {
    Ok((
        angle_derivative_wrt_cut(lambda_s, pump, crystal, Photon::Signal)?,
        angle_derivative_wrt_cut(lambda_s, pump, crystal, Photon::Idler)?,
    ))
}

/// `F²` at the angular errors produced by an optic-axis misalignment Δα
/// (radians in, degrees on the abscissa).
pub fn overlap_vs_misalignment(
    lambda_s: f64,
    misalignments: &[f64],
    pump: &PumpSpec,
    crystal: &CrystalSpec,
) -> Result<OverlapCurve> {
    let base = solve_emission_angles(lambda_s, pump, crystal)?;
    let (ds, di) = misalignment_derivatives(lambda_s, pump, crystal)?;
    // Signed derivatives → outward deviations.
    let out_s = base.theta_s_ext.signum() * ds;
    let out_i = base.theta_i_ext.signum() * di;
    let samples = misalignments
        .iter()
        .map(|&da| {
            // Near degeneracy the individual deviations leave the small-angle
            // domain while the F_x/F_z combinations stay small, so the bound
            // check of AngularDeviation::new is skipped here.
            let dev = AngularDeviation {
                d_theta_s: out_s * da,
                d_theta_i: out_i * da,
                frame: Frame::External,
            };
            (da.to_degrees(), f_squared(&dev, &base, pump, crystal))
        })
        .collect();
    Ok(OverlapCurve {
        axis: OverlapAxis::MisalignmentDeg,
        samples,
        base_wavelengths: Some((base.lambda_s, base.lambda_i)),
    })
}

/// `F²` at the angular errors of a displaced emission point.
/// Smallest misalignment (radians) at which the overlap drops to 1/2.
pub fn misalignment_half_width(
    lambda_s: f64,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
) -> Result<f64> {
    let base = solve_emission_angles(lambda_s, pump, crystal)?;
    let (ds, di) = misalignment_derivatives(lambda_s, pump, crystal)?;
    let out_s = base.theta_s_ext.signum() * ds;
    let out_i = base.theta_i_ext.signum() * di;
    let overlap = |da: f64| {
        let dev = AngularDeviation {
            d_theta_s: out_s * da,
            d_theta_i: out_i * da,
            frame: Frame::External,
        };
        f_squared(&dev, &base, pump, crystal) - 0.5
    };
    let mut hi = 1e-6;
    while overlap(hi) > 0.0 {
        hi *= 2.0;
        if hi > 0.1 {
            return Err(Error::Numeric(format!(
                "overlap stays above 1/2 up to 0.1 rad at λ_s = {:.3} nm",
                lambda_s * 1e9
            )));
        }
    }
    bisect(overlap, 0.0, hi, 200)
}

pub fn overlap_at_displacement(
    z: f64,
    base: &PhaseMatchPoint,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    model: &dyn DisplacementModel,
) -> Result<f64> {
    let dev = model.angular_errors(z, base)?;
    Ok(f_squared(&dev, base, pump, crystal))
}

pub fn overlap_vs_displacement(
    lambda_s: f64,
    displacements: &[f64],
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    model: &dyn DisplacementModel,
) -> Result<OverlapCurve> {
    let base = solve_emission_angles(lambda_s, pump, crystal)?;
    let samples = displacements
        .iter()
        .map(|&z| {
            if z.abs() > crystal.length {
                return Err(Error::InvalidArgument(format!(
                    "displacement {z:e} m exceeds the crystal length {:e} m",
                    crystal.length
                )));
            }
            Ok((z, overlap_at_displacement(z, &base, pump, crystal, model)?))
        })
        .collect::<Result<_>>()?;
    Ok(OverlapCurve {
        axis: OverlapAxis::DisplacementM,
        samples,
        base_wavelengths: Some((base.lambda_s, base.lambda_i)),
    })
}

/// Length-averaged `z` overlap at one signal wavelength:
/// `S = (1/l)·∫ F²(z) dz` over `[−l/2, l/2]` by composite Simpson.
pub fn spectral_overlap_at(
    lambda_s: f64,
    crystal: &CrystalSpec,
    pump: &PumpSpec,
    model: &dyn DisplacementModel,
    nodes: usize,
) -> Result<f64> {
    if nodes < 3 {
        return Err(Error::InvalidArgument(format!(
            "quadrature needs at least 3 nodes, got {nodes}"
        )));
    }
    let base = solve_emission_angles(lambda_s, pump, crystal)?;
    let half = 0.5 * crystal.length;
    // Validate the model over the whole interval before integrating.
    model.angular_errors(half, &base)?;
    model.angular_errors(-half, &base)?;
    let integrand =
        |z: f64| overlap_at_displacement(z, &base, pump, crystal, model).unwrap_or(f64::NAN);
    let integral = simpson(integrand, -half, half, nodes)?;
    if !integral.is_finite() {
        return Err(Error::Numeric(format!(
            "spectral overlap integrand failed at λ_s = {:.3} nm",
            lambda_s * 1e9
        )));
    }
    Ok((integral / crystal.length).clamp(0.0, 1.0))
}

pub fn spectral_overlap(
    wavelengths: &[f64],
    crystal: &CrystalSpec,
    pump: &PumpSpec,
    model: &dyn DisplacementModel,
    nodes: usize,
) -> Result<OverlapCurve> {
    let samples = wavelengths
        .iter()
        .map(|&l| {
            Ok((
                l * 1e9,
                spectral_overlap_at(l, crystal, pump, model, nodes)?,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(OverlapCurve {
        axis: OverlapAxis::WavelengthNm,
        samples,
        base_wavelengths: None,
    })
}
