//! CODATA 2018 values, SI units.

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054571817e-34;

/// Speed of light in vacuum, m/s.
pub const C: f64 = 2.99792458e8;

/// Planck constant, J·s.
pub const H: f64 = 2.0 * std::f64::consts::PI * HBAR;

/// `(name, value)` pairs recorded in output metadata.
pub const ALL: [(&str, f64); 3] = [("hbar_J_s", HBAR), ("c_m_s", C), ("h_J_s", H)];
