//! Type-I (e → o + o) phase matching: energy and wave-vector conservation
//! for a pump propagating at the cut angle α from the optic axis.
//!
//! Angles are measured from the pump direction in the plane containing the
//! optic axis. Signal angles are positive, idler angles negative.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::dispersion::{check_wavelength, CrystalSpec};
use crate::error::{Error, Result};
use crate::numeric::{bisect, newton_polish};

/// Upper end of the bisection bracket for the internal signal angle.
pub const MAX_INTERNAL_ANGLE: f64 = 0.2;
/// Initial central-difference step for ∂θ/∂α, radians.
pub const DERIVATIVE_STEP: f64 = 1e-4;
const DERIVATIVE_STEP_FLOOR: f64 = 1e-12;
const DERIVATIVE_AGREEMENT: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpSpec {
    /// Vacuum wavelength, meters.
    pub wavelength: f64,
    /// Beam diameter `a`, meters.
    pub beam_diameter: f64,
    /// watts
    pub power: f64,
}

impl PumpSpec {
    pub fn new(wavelength: f64, beam_diameter: f64, power: f64) -> Result<Self> {
        if !(wavelength > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "pump wavelength must be positive, got {wavelength}"
            )));
        }
        if !(beam_diameter > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "pump diameter must be positive, got {beam_diameter}"
            )));
        }
        if !(power >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "pump power must be nonnegative, got {power}"
            )));
        }
        Ok(PumpSpec {
            wavelength,
            beam_diameter,
            power,
        })
    }

    /// Argon-ion 351.1 nm line, 100 µm beam.
    pub fn argon_351() -> Self {
        PumpSpec {
            wavelength: 351.1e-9,
            beam_diameter: 100e-6,
            power: 1.0,
        }
    }

    pub fn degenerate_wavelength(&self) -> f64 {
        2.0 * self.wavelength
    }

    /// |k_p| inside the crystal (extraordinary wave at the cut angle), 1/m.
    pub fn wavenumber(&self, crystal: &CrystalSpec) -> Result<f64> {
        let n = crystal.n_extraordinary(self.wavelength, crystal.cut_angle)?;
        Ok(2.0 * PI * n / self.wavelength)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Photon {
    Signal,
    Idler,
}

/// One solution of the phase-matching conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMatchPoint {
    pub lambda_s: f64,
    pub lambda_i: f64,
    pub theta_s_int: f64,
    pub theta_i_int: f64,
    pub theta_s_ext: f64,
    pub theta_i_ext: f64,
    /// Norm of the wave-vector mismatch, 1/m.
    pub residual: f64,
    /// Ordinary index at `lambda_s`.
    pub n_s: f64,
    /// Ordinary index at `lambda_i`.
    pub n_i: f64,
}

impl PhaseMatchPoint {
    pub fn theta_int(&self, which: Photon) -> f64 {
        match which {
            Photon::Signal => self.theta_s_int,
            Photon::Idler => self.theta_i_int,
        }
    }

    pub fn theta_ext(&self, which: Photon) -> f64 {
        match which {
            Photon::Signal => self.theta_s_ext,
            Photon::Idler => self.theta_i_ext,
        }
    }

    pub fn is_collinear(&self) -> bool {
        self.theta_s_int == 0.0 && self.theta_i_int == 0.0
    }
}

/// Idler wavelength from energy conservation.
pub fn conjugate_wavelength(lambda_s: f64, pump: &PumpSpec) -> Result<f64> {
    if !(lambda_s > pump.wavelength) {
        return Err(Error::Domain(format!(
            "signal wavelength {lambda_s:e} m must exceed pump wavelength {:e} m",
            pump.wavelength
        )));
    }
    Ok(1.0 / (1.0 / pump.wavelength - 1.0 / lambda_s))
}

/// Cut angle for collinear degenerate matching: n_e(λ_p, α) = n_o(2λ_p).
///
/// Bisection over `[0, π/2]` followed by Newton polishing; the index
/// equation holds to better than 1e-12.
pub fn degenerate_cut_angle(pump: &PumpSpec, crystal: &CrystalSpec) -> Result<f64> {
    let target = crystal.n_ordinary(pump.degenerate_wavelength())?;
    // Range errors surface here rather than inside the closures.
    crystal.n_extraordinary(pump.wavelength, 0.0)?;
    let lp = pump.wavelength;
    let h = |a: f64| {
        crystal
            .n_extraordinary(lp, a)
            .map(|n| n - target)
            .unwrap_or(f64::NAN)
    };
    let dh = |a: f64| crystal.dn_extraordinary_dtheta(lp, a).unwrap_or(f64::NAN);

    let root = bisect(h, 0.0, FRAC_PI_2, 200).map_err(|_| {
        Error::NoSolution(format!(
            "extraordinary pump index never reaches n_o({:.1} nm) = {target:.6}",
            pump.degenerate_wavelength() * 1e9
        ))
    })?;
    let root = newton_polish(h, dh, root, 0.0, FRAC_PI_2, 8);
    let residual = h(root).abs();
    if residual >= 1e-12 {
        return Err(Error::Numeric(format!(
            "cut-angle residual {residual:e} above 1e-12"
        )));
    }
    Ok(root)
}

/// Snell refraction at a face normal to the pump: internal → external.
pub fn internal_to_external(theta_int: f64, lambda: f64, crystal: &CrystalSpec) -> Result<f64> {
    let n = crystal.n_ordinary(lambda)?;
    let s = n * theta_int.abs().sin();
    if !(s < 1.0) {
        return Err(Error::Domain(format!(
            "internal angle {theta_int} rad exceeds the critical angle {} rad",
            (1.0 / n).asin()
        )));
    }
    Ok(theta_int.signum() * s.asin())
}

/// Inverse of [`internal_to_external`].
pub fn external_to_internal(theta_ext: f64, lambda: f64, crystal: &CrystalSpec) -> Result<f64> {
    let n = crystal.n_ordinary(lambda)?;
    if !(theta_ext.abs() < FRAC_PI_2) {
        return Err(Error::Domain(format!(
            "external angle {theta_ext} rad must be below π/2 in magnitude"
        )));
    }
    Ok(theta_ext.signum() * (theta_ext.abs().sin() / n).asin())
}

/// Solve for the internal emission angles at signal wavelength `lambda_s`.
///
/// The transverse condition eliminates the idler angle; the longitudinal
/// mismatch is then bisected in the signal angle on `[0, 0.2]` rad.
pub fn solve_emission_angles(
    lambda_s: f64,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
) -> Result<PhaseMatchPoint> {
    let lambda_i = conjugate_wavelength(lambda_s, pump)?;
    check_wavelength(lambda_s)?;
    check_wavelength(lambda_i)?;
    let n_s = crystal.n_ordinary(lambda_s)?;
    let n_i = crystal.n_ordinary(lambda_i)?;
    let k_s = 2.0 * PI * n_s / lambda_s;
    let k_i = 2.0 * PI * n_i / lambda_i;
    let k_p = pump.wavenumber(crystal)?;

    let idler_angle = |ts: f64| {
        let s = k_s * ts.sin() / k_i;
        if s > 1.0 {
            None
        } else {
            Some(s.asin())
        }
    };
    let mismatch = |ts: f64| match idler_angle(ts) {
        Some(ti) => k_s * ts.cos() + k_i * ti.cos() - k_p,
        None => -k_p,
    };

    let tol = 1e-12 * k_p;
    let g0 = mismatch(0.0);
    let theta_s = if g0.abs() <= tol {
        0.0
    } else if g0 < 0.0 {
        return Err(Error::NoSolution(format!(
            "λ_s = {:.3} nm lies outside the tuning range of a {:.4}° cut",
            lambda_s * 1e9,
            crystal.cut_angle.to_degrees()
        )));
    } else {
        if mismatch(MAX_INTERNAL_ANGLE) > 0.0 {
            return Err(Error::NoSolution(format!(
                "emission angle at λ_s = {:.3} nm exceeds {MAX_INTERNAL_ANGLE} rad",
                lambda_s * 1e9
            )));
        }
        bisect(mismatch, 0.0, MAX_INTERNAL_ANGLE, 200)?
    };
    let theta_i = -idler_angle(theta_s)
        .ok_or_else(|| Error::Numeric("idler angle undefined at solved signal angle".into()))?;

    let transverse = k_s * theta_s.sin() + k_i * theta_i.sin();
    let longitudinal = k_s * theta_s.cos() + k_i * theta_i.cos() - k_p;
    let residual = transverse.hypot(longitudinal);

    Ok(PhaseMatchPoint {
        lambda_s,
        lambda_i,
        theta_s_int: theta_s,
        theta_i_int: theta_i,
        theta_s_ext: internal_to_external(theta_s, lambda_s, crystal)?,
        theta_i_ext: internal_to_external(theta_i, lambda_i, crystal)?,
        residual,
        n_s,
        n_i,
    })
}

/// Tuning curve sampled at `count` signal wavelengths in `[min, max]`.
pub fn tuning_curve(
    lambda_min: f64,
    lambda_max: f64,
    count: usize,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
) -> Result<Vec<PhaseMatchPoint>> {
    if count < 2 {
        return Err(Error::InvalidArgument(format!(
            "tuning curve needs at least 2 samples, got {count}"
        )));
    }
    if !(lambda_min > 0.0 && lambda_max > lambda_min) {
        return Err(Error::InvalidArgument(format!(
            "invalid wavelength range [{lambda_min:e}, {lambda_max:e}]"
        )));
    }
    crate::numeric::linspace(lambda_min, lambda_max, count)
        .into_iter()
        .map(|l| solve_emission_angles(l, pump, crystal))
        .collect()
}

/// ∂θ_ext/∂α by central differences with step halving.
///
/// Starts at δ = 1e-4 rad. Near the closing of the tuning curve the α−δ
/// stencil point may have no solution, so δ is halved until both points
/// solve. Richardson-extrapolated central differences at δ and δ/2 are then
/// compared, halving δ until they agree to 1e-6 relative.
pub fn angle_derivative_wrt_cut(
    lambda_s: f64,
    pump: &PumpSpec,
    crystal: &CrystalSpec,
    which: Photon,
) -> Result<f64> {
    let undefined = |why: String| Error::DerivativeUndefined(why);
    let base = solve_emission_angles(lambda_s, pump, crystal).map_err(|e| match e {
        Error::NoSolution(m) => undefined(m),
        other => other,
    })?;
    if base.theta_int(which) == 0.0 {
        return Err(undefined(format!(
            "collinear point at λ_s = {:.3} nm is a branch point",
            lambda_s * 1e9
        )));
    }

    let angle_at = |alpha: f64| -> Result<f64> {
        let c = crystal.with_cut_angle(alpha)?;
        Ok(solve_emission_angles(lambda_s, pump, &c)?.theta_ext(which))
    };
    let central = |delta: f64| -> Option<f64> {
        let up = angle_at(crystal.cut_angle + delta).ok()?;
        let down = angle_at(crystal.cut_angle - delta).ok()?;
        Some((up - down) / (2.0 * delta))
    };
    let extrapolated = |delta: f64| -> Option<f64> {
        let coarse = central(delta)?;
        let fine = central(0.5 * delta)?;
        Some((4.0 * fine - coarse) / 3.0)
    };

    let mut delta = DERIVATIVE_STEP;
    while central(delta).is_none() {
        delta *= 0.5;
        if delta < DERIVATIVE_STEP_FLOOR {
            return Err(undefined(format!(
                "no two-sided stencil at λ_s = {:.3} nm",
                lambda_s * 1e9
            )));
        }
    }
    let lost = || undefined(format!("stencil lost at λ_s = {:.3} nm", lambda_s * 1e9));
    let mut previous = extrapolated(delta).ok_or_else(lost)?;
    loop {
        delta *= 0.5;
        if delta < DERIVATIVE_STEP_FLOOR {
            return Err(undefined(format!(
                "central differences do not settle at λ_s = {:.3} nm",
                lambda_s * 1e9
            )));
        }
        let refined = extrapolated(delta).ok_or_else(lost)?;
        if (refined - previous).abs() <= DERIVATIVE_AGREEMENT * refined.abs() {
            return Ok(refined);
        }
        previous = refined;
    }
}
