//! TOML scenario files and built-in presets.
//!
//! Every section is optional at parse time; accessors fail with
//! [`Error::Config`] when a caller needs a section that is absent. Keys carry
//! their unit as a suffix (`length_mm`, `wavelength_nm`, ...). Unknown keys
//! are rejected.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::amplitude::Frame;
use crate::dispersion::{CrystalSpec, SellmeierSet};
use crate::error::{Error, Result};
use crate::kinetics::{FitOptions, GaussianSpot, Trap, TrapModel};
use crate::overlap::ImagingSystem;
use crate::phasematch::{degenerate_cut_angle, PumpSpec};
use crate::rates::{
    solid_angle_from_divergence, DetectionProcess, DetectionVolume, FieldKind, RadiationField,
};

/// Directory searched for `<name>.toml` before the built-in presets.
pub const SCENARIO_DIR_ENV: &str = "BIPHOTON_SCENARIO_DIR";

pub const CRYSTAL_PRESETS: &str = include_str!("../presets/crystals.toml");

const BUILTIN: &[(&str, &str)] = &[
    ("default", include_str!("../presets/default.toml")),
    ("paper-sec2", include_str!("../presets/paper-sec2.toml")),
    ("paper-fig1", include_str!("../presets/paper-fig1.toml")),
    ("paper-fig5", include_str!("../presets/paper-fig5.toml")),
    ("paper-fig6", include_str!("../presets/paper-fig6.toml")),
    ("paper-fig8", include_str!("../presets/paper-fig8.toml")),
];

pub fn builtin_names() -> impl Iterator<Item = &'static str> {
    BUILTIN.iter().map(|(n, _)| *n)
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalSection {
    /// Name of a `[section]` in the crystal preset file.
    pub preset: Option<String>,
    pub name: Option<String>,
    pub length_mm: Option<f64>,
    /// Omitted: cut for degenerate collinear matching of the pump.
    pub cut_angle_deg: Option<f64>,
    pub ordinary: Option<[f64; 4]>,
    pub extraordinary: Option<[f64; 4]>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub wavelength_nm: f64,
    pub beam_diameter_um: f64,
    #[serde(default = "one")]
    pub power_w: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagingSection {
    pub focal_length_mm: f64,
    /// Defaults to the 2f–2f relay.
    pub object_distance_mm: Option<f64>,
    pub image_distance_mm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuningSection {
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmplitudeSection {
    pub signal_nm: f64,
    pub half_range_mrad: f64,
    pub points: usize,
    #[serde(default = "external")]
    pub frame: String,
}

fn external() -> String {
    "external".into()
}

impl AmplitudeSection {
    pub fn frame(&self) -> Result<Frame> {
        self.frame.parse()
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MisalignmentSection {
    pub signal_nm: Vec<f64>,
    pub max_deg: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisplacementSection {
    pub signal_nm: Vec<f64>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralSection {
    pub lambda_min_nm: f64,
    pub lambda_max_nm: f64,
    pub step_nm: f64,
    #[serde(default = "default_nodes")]
    pub nodes: usize,
}

fn default_nodes() -> usize {
    crate::overlap::DEFAULT_NODES
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionSection {
    pub eta2: f64,
    pub spot_diameter_um: f64,
    pub length_mm: f64,
}

/// Either `solid_angle_sr` or `divergence_rad` (ΔΩ = 2πθ²) must be given.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub intensity_w_m2: f64,
    pub wavelength_nm: f64,
    pub solid_angle_sr: Option<f64>,
    pub divergence_rad: Option<f64>,
    pub bandwidth_rad_s: f64,
}

impl FieldSection {
    pub fn to_field(&self, kind: FieldKind) -> Result<RadiationField> {
        let solid_angle = match (self.solid_angle_sr, self.divergence_rad) {
            (Some(o), None) => o,
            (None, Some(d)) => solid_angle_from_divergence(d),
            _ => {
                return Err(Error::Config(
                    "field needs exactly one of solid_angle_sr and divergence_rad".into(),
                ))
            }
        };
        RadiationField::new(
            self.intensity_w_m2,
            self.wavelength_nm * 1e-9,
            solid_angle,
            self.bandwidth_rad_s,
            kind,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpconversionSection {
    pub laser_power_w: f64,
    pub sh_power_w: f64,
    pub target_power_w: f64,
    pub duty_cycle: f64,
    pub photon_wavelength_nm: f64,
    /// Photon rate quoted for the same chain in the literature, photons/s.
    pub reported_photon_rate_per_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapsSection {
    pub base_sensitivity: f64,
    pub capacity_1: f64,
    pub fill_1_m2_per_w_s: f64,
    pub lifetime_1_s: f64,
    pub gain_1: f64,
    pub capacity_2: f64,
    pub fill_2_m2_per_w_s: f64,
    pub lifetime_2_s: f64,
    pub gain_2: f64,
}

impl TrapsSection {
    pub fn to_model(&self) -> Result<TrapModel> {
        TrapModel::new(
            Trap {
                capacity: self.capacity_1,
                fill_coefficient: self.fill_1_m2_per_w_s,
                lifetime: self.lifetime_1_s,
                gain: self.gain_1,
            },
            Trap {
                capacity: self.capacity_2,
                fill_coefficient: self.fill_2_m2_per_w_s,
                lifetime: self.lifetime_2_s,
                gain: self.gain_2,
            },
            self.base_sensitivity,
        )
    }
}

/// Illuminate at `power_w` over the spot for `illuminate_s`, then dark for `dark_s`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensitizationSection {
    pub power_w: f64,
    pub spot_diameter_um: f64,
    pub illuminate_s: f64,
    #[serde(default)]
    pub dark_s: f64,
    pub step_s: f64,
}

impl SensitizationSection {
    pub fn intensity(&self) -> f64 {
        let r = 0.5 * self.spot_diameter_um * 1e-6;
        self.power_w / (PI * r * r)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitSection {
    #[serde(default = "max_iter")]
    pub max_iterations: usize,
    #[serde(default = "rel_tol")]
    pub relative_tolerance: f64,
}

fn max_iter() -> usize {
    FitOptions::default().max_iterations
}

fn rel_tol() -> f64 {
    FitOptions::default().relative_tolerance
}

impl FitSection {
    pub fn options(&self) -> FitOptions {
        FitOptions {
            max_iterations: self.max_iterations,
            relative_tolerance: self.relative_tolerance,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseSection {
    pub power_w: f64,
    pub spot_diameter_um: f64,
    pub rayleigh_length_mm: f64,
    pub gain: f64,
    pub z_max_mm: f64,
    pub points: usize,
}

impl ResponseSection {
    pub fn spot(&self) -> Result<GaussianSpot> {
        let r = 0.5 * self.spot_diameter_um * 1e-6;
        GaussianSpot::new(PI * r * r, self.rayleigh_length_mm * 1e-3)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub description: Option<String>,
    pub crystal: Option<CrystalSection>,
    pub pump: Option<PumpSection>,
    pub imaging: Option<ImagingSection>,
    pub tuning: Option<TuningSection>,
    pub amplitude: Option<AmplitudeSection>,
    pub misalignment: Option<MisalignmentSection>,
    pub displacement: Option<DisplacementSection>,
    pub spectral: Option<SpectralSection>,
    pub detection: Option<DetectionSection>,
    pub coherent: Option<FieldSection>,
    pub biphoton: Option<FieldSection>,
    pub upconversion: Option<UpconversionSection>,
    pub traps: Option<TrapsSection>,
    pub sensitization: Option<SensitizationSection>,
    pub fit: Option<FitSection>,
    pub response: Option<ResponseSection>,
}

fn need<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T> {
    section
        .as_ref()
        .ok_or_else(|| Error::Config(format!("scenario has no [{name}] section")))
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn pump(&self) -> Result<PumpSpec> {
        let p = need(&self.pump, "pump")?;
        PumpSpec::new(p.wavelength_nm * 1e-9, p.beam_diameter_um * 1e-6, p.power_w)
    }

    /// Crystal with preset values overridden by explicit keys. Without a
    /// cut angle the crystal is cut for degenerate matching of the pump.
    pub fn crystal(&self) -> Result<CrystalSpec> {
        let sec = need(&self.crystal, "crystal")?;
        let base = match &sec.preset {
            Some(name) => crystal_preset(name)?,
            None => CrystalSection::default(),
        };
        let missing = |k: &str| Error::Config(format!("crystal is missing `{k}`"));
        let name = sec
            .name
            .clone()
            .or(base.name)
            .unwrap_or_else(|| "crystal".into());
        let length = sec
            .length_mm
            .or(base.length_mm)
            .ok_or_else(|| missing("length_mm"))?;
        let o = sec
            .ordinary
            .or(base.ordinary)
            .ok_or_else(|| missing("ordinary"))?;
        let e = sec
            .extraordinary
            .or(base.extraordinary)
            .ok_or_else(|| missing("extraordinary"))?;
        let ordinary = SellmeierSet::new(o[0], o[1], o[2], o[3])?;
        let extraordinary = SellmeierSet::new(e[0], e[1], e[2], e[3])?;
        let provisional = CrystalSpec::new(name, length * 1e-3, 0.5, ordinary, extraordinary)?;
        match sec.cut_angle_deg.or(base.cut_angle_deg) {
            Some(deg) => provisional.with_cut_angle(deg.to_radians()),
            None => {
                let alpha = degenerate_cut_angle(&self.pump()?, &provisional)?;
                provisional.with_cut_angle(alpha)
            }
        }
    }

    pub fn imaging(&self) -> Result<ImagingSystem> {
        let s = need(&self.imaging, "imaging")?;
        let f = s.focal_length_mm * 1e-3;
        match (s.object_distance_mm, s.image_distance_mm) {
            (None, None) => ImagingSystem::unit_magnification(f),
            (Some(o), Some(i)) => ImagingSystem::new(f, o * 1e-3, i * 1e-3),
            _ => Err(Error::Config(
                "imaging needs both object_distance_mm and image_distance_mm, or neither".into(),
            )),
        }
    }

    pub fn tuning(&self) -> Result<&TuningSection> {
        need(&self.tuning, "tuning")
    }

    pub fn amplitude(&self) -> Result<&AmplitudeSection> {
        need(&self.amplitude, "amplitude")
    }

    pub fn misalignment(&self) -> Result<&MisalignmentSection> {
        need(&self.misalignment, "misalignment")
    }

    pub fn displacement(&self) -> Result<&DisplacementSection> {
        need(&self.displacement, "displacement")
    }

    pub fn spectral(&self) -> Result<&SpectralSection> {
        need(&self.spectral, "spectral")
    }

    pub fn detection_process(&self) -> Result<DetectionProcess> {
        DetectionProcess::new(need(&self.detection, "detection")?.eta2)
    }

    /// Detector volume matched to `field`'s solid angle and bandwidth.
    pub fn detection_volume(&self, field: &RadiationField) -> Result<DetectionVolume> {
        let d = need(&self.detection, "detection")?;
        let r = 0.5 * d.spot_diameter_um * 1e-6;
        DetectionVolume::matched_to(PI * r * r, d.length_mm * 1e-3, field)
    }

    pub fn coherent_field(&self) -> Result<RadiationField> {
        need(&self.coherent, "coherent")?.to_field(FieldKind::Coherent)
    }

    pub fn biphoton_field(&self) -> Result<RadiationField> {
        need(&self.biphoton, "biphoton")?.to_field(FieldKind::Biphoton)
    }

    pub fn upconversion(&self) -> Result<&UpconversionSection> {
        need(&self.upconversion, "upconversion")
    }

    pub fn trap_model(&self) -> Result<TrapModel> {
        need(&self.traps, "traps")?.to_model()
    }

    pub fn sensitization(&self) -> Result<&SensitizationSection> {
        need(&self.sensitization, "sensitization")
    }

    /// Fit options; defaults when the section is absent.
    pub fn fit_options(&self) -> FitOptions {
        self.fit
            .as_ref()
            .map(FitSection::options)
            .unwrap_or_default()
    }

    pub fn response(&self) -> Result<&ResponseSection> {
        need(&self.response, "response")
    }
}

/// A parsed scenario together with its source text, which callers hash.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub source: String,
    pub config: ScenarioConfig,
}

impl Scenario {
    pub fn from_text(name: impl Into<String>, source: impl Into<String>) -> Result<Self> {
        let source = source.into();
        let config = ScenarioConfig::parse(&source)?;
        Ok(Scenario {
            name: name.into(),
            source,
            config,
        })
    }

    pub fn builtin(name: &str) -> Option<Result<Self>> {
        BUILTIN
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(n, text)| Scenario::from_text(*n, *text))
    }

    /// Resolve `spec` as a file path, then as `<name>.toml` in
    /// `$BIPHOTON_SCENARIO_DIR`, then as a built-in preset.
    pub fn load(spec: &str) -> Result<Self> {
        let dir = std::env::var_os(SCENARIO_DIR_ENV).map(PathBuf::from);
        Self::load_with_dir(spec, dir.as_deref())
    }

    pub fn load_with_dir(spec: &str, dir: Option<&Path>) -> Result<Self> {
        let path = Path::new(spec);
        if path.is_file() {
            return Self::from_file(path);
        }
        if let Some(dir) = dir {
            let candidate = dir.join(format!("{spec}.toml"));
            if candidate.is_file() {
                return Self::from_file(&candidate);
            }
        }
        Self::builtin(spec).unwrap_or_else(|| {
            Err(Error::Config(format!(
                "unknown scenario `{spec}`: not a file, and not one of {}",
                builtin_names().collect::<Vec<_>>().join(", ")
            )))
        })
    }

    fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("reading {}: {e}", path.display())))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        Self::from_text(name, text)
    }
}

pub fn crystal_presets() -> Result<BTreeMap<String, CrystalSection>> {
    toml::from_str(CRYSTAL_PRESETS).map_err(|e| Error::Config(e.to_string()))
}

pub fn crystal_preset(name: &str) -> Result<CrystalSection> {
    let mut all = crystal_presets()?;
    all.remove(name)
        .ok_or_else(|| Error::Config(format!("unknown crystal preset `{name}`")))
}
