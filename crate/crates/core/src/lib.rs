//! Spontaneous parametric down-conversion in a Type-I uniaxial crystal and
//! two-photon detection of the resulting biphoton light.
//!
//! * [`dispersion`]: Sellmeier indices.
//! * [`phasematch`]: tuning curves, cut angles, emission-angle derivatives.
//! * [`amplitude`]: transverse and longitudinal two-photon amplitude factors.
//! * [`overlap`]: misalignment, displacement and spectral overlap functions.
//! * [`rates`]: mode counting and coherent/biphoton detection rates.
//! * [`kinetics`]: photocathode trap model and bi-exponential fitting.
//! * [`config`]: TOML scenarios and presets.

pub mod amplitude;
pub mod config;
pub mod constants;
pub mod dispersion;
pub mod error;
pub mod kinetics;
pub mod numeric;
pub mod overlap;
pub mod phasematch;
pub mod rates;

pub use error::{Error, Result};
