//! Refractive indices of a negative uniaxial crystal from Sellmeier data.
//!
//! Wavelengths are vacuum wavelengths in meters. The Sellmeier form
//! `n²(λ) = b0 + b1/(λ² − b2) − b3·λ²` takes λ in µm.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest wavelength the dispersion model is trusted at, meters.
pub const MIN_WAVELENGTH: f64 = 300e-9;
/// Longest wavelength the dispersion model is trusted at, meters.
pub const MAX_WAVELENGTH: f64 = 800e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellmeierSet {
    pub b0: f64,
    /// µm²
    pub b1: f64,
    /// µm²
    pub b2: f64,
    /// µm⁻²
    pub b3: f64,
}

impl SellmeierSet {
    pub const BBO_ORDINARY: SellmeierSet = SellmeierSet {
        b0: 2.7405,
        b1: 0.0184,
        b2: 0.0179,
        b3: 0.0155,
    };

    pub const BBO_EXTRAORDINARY: SellmeierSet = SellmeierSet {
        b0: 2.3730,
        b1: 0.0128,
        b2: 0.0156,
        b3: 0.0044,
    };

    pub fn new(b0: f64, b1: f64, b2: f64, b3: f64) -> Result<Self> {
        let set = SellmeierSet { b0, b1, b2, b3 };
        set.validate()?;
        Ok(set)
    }

    /// Pole below the operating band and n² > 1 throughout it.
    pub fn validate(&self) -> Result<()> {
        let lo_um = MIN_WAVELENGTH * 1e6;
        if !(self.b2 < lo_um * lo_um) {
            return Err(Error::InvalidArgument(format!(
                "Sellmeier pole b2 = {} µm² must lie below {} µm²",
                self.b2,
                lo_um * lo_um
            )));
        }
        for i in 0..=100 {
            let lambda = MIN_WAVELENGTH + (MAX_WAVELENGTH - MIN_WAVELENGTH) * (i as f64 / 100.0);
            let n2 = self.n_squared_unchecked(lambda);
            if !(n2 > 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "Sellmeier set gives n² = {n2} ≤ 1 at {:.1} nm",
                    lambda * 1e9
                )));
            }
        }
        Ok(())
    }

    fn n_squared_unchecked(&self, lambda: f64) -> f64 {
        let l2 = (lambda * 1e6).powi(2);
        self.b0 + self.b1 / (l2 - self.b2) - self.b3 * l2
    }

    /// Index at `lambda` (meters).
    pub fn index(&self, lambda: f64) -> Result<f64> {
        check_wavelength(lambda)?;
        Ok(self.n_squared_unchecked(lambda).sqrt())
    }
}

pub fn check_wavelength(lambda: f64) -> Result<()> {
    if (MIN_WAVELENGTH..=MAX_WAVELENGTH).contains(&lambda) {
        Ok(())
    } else {
        Err(Error::OutOfRange {
            quantity: "wavelength (m)",
            value: lambda,
            min: MIN_WAVELENGTH,
            max: MAX_WAVELENGTH,
        })
    }
}

/// A Type-I birefringent crystal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrystalSpec {
    pub name: String,
    /// meters
    pub length: f64,
    /// Angle between optic axis and pump, radians.
    pub cut_angle: f64,
    pub ordinary: SellmeierSet,
    pub extraordinary: SellmeierSet,
}

impl CrystalSpec {
    pub fn new(
        name: impl Into<String>,
        length: f64,
        cut_angle: f64,
        ordinary: SellmeierSet,
        extraordinary: SellmeierSet,
    ) -> Result<Self> {
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "crystal length must be positive, got {length}"
            )));
        }
        if !(cut_angle > 0.0 && cut_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!(
                "cut angle must lie in (0, π/2), got {cut_angle}"
            )));
        }
        ordinary.validate()?;
        extraordinary.validate()?;
        Ok(CrystalSpec {
            name: name.into(),
            length,
            cut_angle,
            ordinary,
            extraordinary,
        })
    }

    /// BBO with the standard Sellmeier sets.
    pub fn bbo(length: f64, cut_angle: f64) -> Result<Self> {
        Self::new(
            "BBO",
            length,
            cut_angle,
            SellmeierSet::BBO_ORDINARY,
            SellmeierSet::BBO_EXTRAORDINARY,
        )
    }

    pub fn with_cut_angle(&self, cut_angle: f64) -> Result<Self> {
        let mut out = self.clone();
        if !(cut_angle > 0.0 && cut_angle < std::f64::consts::FRAC_PI_2) {
            return Err(Error::InvalidArgument(format!(
                "cut angle must lie in (0, π/2), got {cut_angle}"
            )));
        }
        out.cut_angle = cut_angle;
        Ok(out)
    }

    pub fn with_length(&self, length: f64) -> Result<Self> {
        let mut out = self.clone();
        if !(length > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "crystal length must be positive, got {length}"
            )));
        }
        out.length = length;
        Ok(out)
    }

    pub fn n_ordinary(&self, lambda: f64) -> Result<f64> {
        self.ordinary.index(lambda)
    }

    /// Principal extraordinary index (θ = π/2).
    pub fn n_principal_extraordinary(&self, lambda: f64) -> Result<f64> {
        self.extraordinary.index(lambda)
    }

    pub fn n_extraordinary(&self, lambda: f64, theta: f64) -> Result<f64> {
        index_extraordinary_at_angle(lambda, theta, self)
    }

    /// ∂n_e/∂θ at fixed wavelength.
    pub fn dn_extraordinary_dtheta(&self, lambda: f64, theta: f64) -> Result<f64> {
        let no = self.n_ordinary(lambda)?;
        let ne_principal = self.n_principal_extraordinary(lambda)?;
        let ne = self.n_extraordinary(lambda, theta)?;
        Ok(-ne.powi(3)
            * theta.sin()
            * theta.cos()
            * (1.0 / (ne_principal * ne_principal) - 1.0 / (no * no)))
    }
}

/// Ordinary index for the given Sellmeier set.
pub fn index_ordinary(lambda: f64, set: &SellmeierSet) -> Result<f64> {
    set.index(lambda)
}

/// Extraordinary index for propagation at `theta` from the optic axis:
/// `1/n_e(θ)² = cos²θ/n_o² + sin²θ/n_E²`.
pub fn index_extraordinary_at_angle(lambda: f64, theta: f64, crystal: &CrystalSpec) -> Result<f64> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&theta) {
        return Err(Error::Domain(format!(
            "propagation angle {theta} rad outside [0, π/2]"
        )));
    }
    let no = crystal.ordinary.index(lambda)?;
    let ne_principal = crystal.extraordinary.index(lambda)?;
    let (s, c) = theta.sin_cos();
    Ok(1.0 / (c * c / (no * no) + s * s / (ne_principal * ne_principal)).sqrt())
}
