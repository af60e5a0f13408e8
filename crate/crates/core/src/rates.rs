//! Mode counting and two-photon detection rates for coherent and biphoton
//! light in the weak-field limit.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::constants::{C, H, HBAR};
use crate::error::{Error, Result};

/// Occupation above which the weak-field rate formulas are flagged.
pub const WEAK_FIELD_LIMIT: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldKind {
    Coherent,
    Biphoton,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiationField {
    /// W/m²
    pub intensity: f64,
    /// meters
    pub wavelength: f64,
    /// steradians
    pub solid_angle: f64,
    /// rad/s
    pub bandwidth: f64,
    pub kind: FieldKind,
}

impl RadiationField {
    pub fn new(
        intensity: f64,
        wavelength: f64,
        solid_angle: f64,
        bandwidth: f64,
        kind: FieldKind,
    ) -> Result<Self> {
        if !(intensity >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "intensity must be nonnegative, got {intensity}"
            )));
        }
        for (name, v) in [
            ("wavelength", wavelength),
            ("solid angle", solid_angle),
            ("bandwidth", bandwidth),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(RadiationField {
            intensity,
            wavelength,
            solid_angle,
            bandwidth,
            kind,
        })
    }

    pub fn angular_frequency(&self) -> f64 {
        2.0 * PI * C / self.wavelength
    }
}

/// Phase-space extent of the detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionVolume {
    /// m²
    pub cross_section: f64,
    /// meters
    pub length: f64,
    /// steradians
    pub solid_angle: f64,
    /// rad/s
    pub bandwidth: f64,
    /// 1/m
    pub wavenumber: f64,
}

impl DetectionVolume {
    pub fn new(
        cross_section: f64,
        length: f64,
        solid_angle: f64,
        bandwidth: f64,
        wavenumber: f64,
    ) -> Result<Self> {
        for (name, v) in [
            ("cross section", cross_section),
            ("length", length),
            ("solid angle", solid_angle),
            ("bandwidth", bandwidth),
            ("wavenumber", wavenumber),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(DetectionVolume {
            cross_section,
            length,
            solid_angle,
            bandwidth,
            wavenumber,
        })
    }

    /// Detector of the given size whose k-space acceptance matches `field`.
    pub fn matched_to(cross_section: f64, length: f64, field: &RadiationField) -> Result<Self> {
        Self::new(
            cross_section,
            length,
            field.solid_angle,
            field.bandwidth,
            2.0 * PI / field.wavelength,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionProcess {
    /// Two-photon quantum efficiency η⁽²⁾.
    pub eta2: f64,
}

impl DetectionProcess {
    pub fn new(eta2: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta2) {
            return Err(Error::InvalidArgument(format!(
                "two-photon efficiency must lie in [0, 1], got {eta2}"
            )));
        }
        Ok(DetectionProcess { eta2 })
    }
}

/// Solid angle of a beam with divergence `theta_d`, using `ΔΩ = 2πθ_d²`
/// (not the small-cone πθ²).
pub fn solid_angle_from_divergence(theta_d: f64) -> f64 {
    2.0 * PI * theta_d * theta_d
}

/// Number of modes `M = (A·L/(2π)³)·(k²/c)·ΔΩ·Δω`.
pub fn mode_count(vol: &DetectionVolume) -> f64 {
    vol.cross_section * vol.length / (2.0 * PI).powi(3) * vol.wavenumber.powi(2) / C
        * vol.solid_angle
        * vol.bandwidth
}

/// Mean occupation `⟨n⟩ = I·λ³/(ħc) / (ΔΩ·Δω)`.
pub fn photons_per_mode(field: &RadiationField) -> f64 {
    field.intensity * field.wavelength.powi(3) / (HBAR * C) / (field.solid_angle * field.bandwidth)
}

/// Mean total photon number in the volume, `I·A·L/(c·ħω)`, with ω = c·k.
pub fn total_photons(intensity: f64, vol: &DetectionVolume) -> f64 {
    intensity * vol.cross_section * vol.length / (C * HBAR * C * vol.wavenumber)
}

pub fn exceeds_weak_field(n: f64) -> bool {
    n > WEAK_FIELD_LIMIT
}

fn warn_if_strong(n: f64) {
    if exceeds_weak_field(n) {
        log::warn!("⟨n⟩ = {n} is outside the weak-field limit (> {WEAK_FIELD_LIMIT})");
    }
}

/// `R_coh = η⁽²⁾·M·⟨n⟩²`.
pub fn rate_coherent(process: &DetectionProcess, modes: f64, n: f64) -> f64 {
    warn_if_strong(n);
    process.eta2 * modes * n * n
}

/// `R_spdc = η⁽²⁾·M_spdc·⟨n⟩`.
pub fn rate_biphoton(process: &DetectionProcess, modes: f64, n: f64) -> f64 {
    warn_if_strong(n);
    process.eta2 * modes * n
}

/// Ratio of biphoton to coherent two-photon rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Enhancement {
    /// `M_spdc⟨n⟩_spdc / (M_coh⟨n⟩_coh²)`
    pub ratio: f64,
    /// `ħc·ΔΩ_coh·Δω_coh/(I·λ³)`; present when the intensities agree.
    pub closed_form: Option<f64>,
}

pub fn enhancement_ratio(m_coh: f64, m_spdc: f64, n_coh: f64, n_spdc: f64) -> f64 {
    m_spdc * n_spdc / (m_coh * n_coh * n_coh)
}

/// Closed-form enhancement for equal intensities (to 1e-9 relative).
pub fn enhancement_closed_form(coh: &RadiationField, spdc: &RadiationField) -> Result<f64> {
    let scale = coh.intensity.abs().max(spdc.intensity.abs());
    if (coh.intensity - spdc.intensity).abs() > 1e-9 * scale {
        return Err(Error::Precondition(format!(
            "closed-form ξ needs equal intensities, got {} and {} W/m²",
            coh.intensity, spdc.intensity
        )));
    }
    if !(coh.intensity > 0.0) {
        return Err(Error::Precondition(
            "closed-form ξ needs a positive intensity".into(),
        ));
    }
    Ok(HBAR * C * coh.solid_angle * coh.bandwidth / (coh.intensity * coh.wavelength.powi(3)))
}

/// Both forms of ξ. The closed form is computed when `want_closed_form` is
/// set, and then the equal-intensity precondition is enforced.
pub fn enhancement_xi(
    coh: &RadiationField,
    spdc: &RadiationField,
    m_coh: f64,
    m_spdc: f64,
    n_coh: f64,
    n_spdc: f64,
    want_closed_form: bool,
) -> Result<Enhancement> {
    let ratio = enhancement_ratio(m_coh, m_spdc, n_coh, n_spdc);
    let closed_form = if want_closed_form {
        Some(enhancement_closed_form(coh, spdc)?)
    } else {
        None
    };
    Ok(Enhancement { ratio, closed_form })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpconversionEstimate {
    /// W
    pub upconverted_power: f64,
    /// photons/s at the given photon wavelength
    pub photon_rate: f64,
    /// `photon_rate · ξ`
    pub enhanced_rate: f64,
}

/// Scale a measured second-harmonic conversion quadratically down to the
/// target power, apply the duty cycle, and convert to a photon rate.
pub fn upconversion_estimate(
    laser_power: f64,
    sh_power: f64,
    target_power: f64,
    duty_cycle: f64,
    photon_wavelength: f64,
    xi: f64,
) -> Result<UpconversionEstimate> {
    for (name, v) in [
        ("laser power", laser_power),
        ("photon wavelength", photon_wavelength),
    ] {
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be positive, got {v}"
            )));
        }
    }
    for (name, v) in [
        ("second-harmonic power", sh_power),
        ("target power", target_power),
        ("duty cycle", duty_cycle),
        ("xi", xi),
    ] {
        if !(v >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "{name} must be nonnegative, got {v}"
            )));
        }
    }
    let ratio = target_power / laser_power;
    let upconverted_power = sh_power * ratio * ratio * duty_cycle;
    let photon_rate = upconverted_power / (H * C / photon_wavelength);
    Ok(UpconversionEstimate {
        upconverted_power,
        photon_rate,
        enhanced_rate: photon_rate * xi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_coherent() -> RadiationField {
        RadiationField::new(5.0, 702e-9, 3e-4, 4e13, FieldKind::Coherent).unwrap()
    }

    #[test]
    fn single_mode_volume() {
        // A·L·k²·ΔΩ·Δω/c = (2π)³
        let k = 1e7;
        let vol = DetectionVolume::new(1.0, 1.0, 1.0, (2.0 * PI).powi(3) * C / (k * k), k).unwrap();
        assert!((mode_count(&vol) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mode_count_is_linear_in_length() {
        let vol = DetectionVolume::new(7.85e-9, 5e-3, 3e-3, 3e14, 2.0 * PI / 702e-9).unwrap();
        let mut doubled = vol;
        doubled.length *= 2.0;
        assert!((mode_count(&doubled) / mode_count(&vol) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn mode_count_reference_scale() {
        let a = PI * (50e-6f64).powi(2);
        let vol = DetectionVolume::new(a, 5e-3, 3e-3, 3e14, 2.0 * PI / 702e-9).unwrap();
        let m = mode_count(&vol);
        // Direct evaluation of the formula with the same inputs.
        let direct = a * 5e-3 / (8.0 * PI.powi(3)) * (2.0 * PI / 702e-9f64).powi(2) / 2.99792458e8
            * 3e-3
            * 3e14;
        assert!((m / direct - 1.0).abs() < 1e-14);
        assert!((m - 38_073.920_574_703).abs() < 1e-6, "{m}");
    }

    #[test]
    fn photons_per_mode_regression() {
        assert_eq!(
            photons_per_mode(&RadiationField {
                intensity: 0.0,
                ..reference_coherent()
            }),
            0.0
        );
        let n = photons_per_mode(&reference_coherent());
        assert!((n - 4.559_353_135_855e-3).abs() < 1e-15, "{n}");
    }

    #[test]
    fn rate_scalings() {
        let p = DetectionProcess::new(1.0).unwrap();
        assert_eq!(rate_coherent(&p, 10.0, 0.0), 0.0);
        assert!((rate_coherent(&p, 10.0, 1e-3) - 1e-5).abs() < 1e-20);
        assert!((rate_coherent(&p, 3.0, 2e-3) / rate_coherent(&p, 3.0, 1e-3) - 4.0).abs() < 1e-12);
        assert!((rate_biphoton(&p, 3.0, 2e-3) / rate_biphoton(&p, 3.0, 1e-3) - 2.0).abs() < 1e-12);
        let n = 2e-3;
        assert!((rate_biphoton(&p, 5.0, n) / rate_coherent(&p, 5.0, n) - 1.0 / n).abs() < 1e-9);
        assert!(DetectionProcess::new(1.5).is_err());
    }

    #[test]
    fn xi_reference_value() {
        let coh = reference_coherent();
        let spdc = RadiationField::new(5.0, 702e-9, 3e-3, 3e14, FieldKind::Biphoton).unwrap();
        let xi = enhancement_closed_form(&coh, &spdc).unwrap();
        assert!((xi - 219.0).abs() < 2.0, "{xi}");
        let mut wider = coh;
        wider.solid_angle *= 2.0;
        assert!((enhancement_closed_form(&wider, &spdc).unwrap() / xi - 2.0).abs() < 1e-14);
    }

    #[test]
    fn closed_form_needs_equal_intensity() {
        let coh = reference_coherent();
        let spdc = RadiationField::new(6.0, 702e-9, 3e-3, 3e14, FieldKind::Biphoton).unwrap();
        assert!(matches!(
            enhancement_xi(&coh, &spdc, 1.0, 1.0, 1e-3, 1e-3, true),
            Err(Error::Precondition(_))
        ));
        assert!(enhancement_xi(&coh, &spdc, 1.0, 1.0, 1e-3, 1e-3, false).is_ok());
    }

    #[test]
    fn upconversion_chain() {
        let e = upconversion_estimate(1.0, 0.6, 50e-9, 1e-5, 351.1e-9, 219.0).unwrap();
        assert!((e.upconverted_power - 1.5e-20).abs() < 1e-32);
        // P/(hc/λ) at 351.1 nm
        let oracle = 1.5e-20 * 351.1e-9 / (6.62607015e-34 * 2.99792458e8);
        assert!((e.photon_rate / oracle - 1.0).abs() < 1e-9);
        assert!((e.photon_rate - 0.0265).abs() < 1e-3);
        let off = upconversion_estimate(1.0, 0.6, 50e-9, 0.0, 351.1e-9, 219.0).unwrap();
        assert_eq!(off.upconverted_power, 0.0);
    }

    #[test]
    fn divergence_convention() {
        let omega = solid_angle_from_divergence(5e-5);
        assert!((omega - 2.0 * PI * 2.5e-9).abs() < 1e-22);
    }
}
