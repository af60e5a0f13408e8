use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Biphoton two-photon detection toolkit.
///
/// Every command reads a scenario (built-in name, TOML file, or a name
/// resolved in $BIPHOTON_SCENARIO_DIR) and lets flags override its values.
#[derive(Debug, Parser)]
#[command(name = "biphoton", version, about)]
pub struct Cli {
    /// Scenario name or path to a TOML file.
    #[arg(long, global = true, default_value = "default")]
    pub scenario: String,

    /// Output file (standard output when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Also write an SVG plot next to --out.
    #[arg(long, global = true, requires = "out")]
    pub svg: bool,

    /// Seed for synthetic noise.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Emission angles and residuals across the signal band.
    TuningCurve(TuningArgs),
    /// Transverse and longitudinal correlation amplitudes on an angular grid.
    AmplitudeMap(AmplitudeArgs),
    /// Overlap versus optic-axis misalignment.
    OverlapAlpha(OverlapAlphaArgs),
    /// Overlap versus emission-point displacement along the crystal.
    OverlapZ(OverlapZArgs),
    /// Length-averaged overlap across the signal band.
    SpectralOverlap(SpectralArgs),
    /// Mode counts, occupations and two-photon rates.
    Rates(RatesArgs),
    /// Biphoton over coherent two-photon enhancement.
    Enhancement(EnhancementArgs),
    /// Expected up-conversion photon rate at a target power.
    UpconversionEstimate(UpconversionArgs),
    /// Integrate the two-trap sensitization model.
    SimulateSensitization(SensitizationArgs),
    /// Fit a bi-exponential decay to a CSV trace.
    FitDecay(FitArgs),
    /// Two-photon response versus detector position through the focus.
    ResponseScan(ResponseArgs),
    /// List the built-in scenarios.
    Scenarios,
}

#[derive(Debug, Args)]
pub struct TuningArgs {
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AmplitudeArgs {
    #[arg(long)]
    pub signal_nm: Option<f64>,
    #[arg(long)]
    pub half_range_mrad: Option<f64>,
    /// Grid points per axis.
    #[arg(long)]
    pub points: Option<usize>,
    /// internal or external
    #[arg(long)]
    pub frame: Option<String>,
}

#[derive(Debug, Args)]
pub struct OverlapAlphaArgs {
    /// Comma-separated signal wavelengths.
    #[arg(long, value_delimiter = ',')]
    pub signal_nm: Vec<f64>,
    #[arg(long)]
    pub max_deg: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Args)]
pub struct OverlapZArgs {
    #[arg(long, value_delimiter = ',')]
    pub signal_nm: Vec<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub focal_length_mm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    #[arg(long)]
    pub lambda_min: Option<f64>,
    #[arg(long)]
    pub lambda_max: Option<f64>,
    #[arg(long)]
    pub step_nm: Option<f64>,
    /// Simpson nodes along the crystal (odd).
    #[arg(long)]
    pub nodes: Option<usize>,
    #[arg(long)]
    pub focal_length_mm: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RatesArgs {
    #[arg(long)]
    pub eta2: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EnhancementArgs {
    /// Common intensity of both fields, W/m².
    #[arg(long)]
    pub intensity: Option<f64>,
    #[arg(long = "solid-angle-sr")]
    pub coh_solid_angle_sr: Option<f64>,
    /// Coherent-field bandwidth, rad/s.
    #[arg(long = "bandwidth")]
    pub coh_bandwidth: Option<f64>,
    /// Skip the closed form (allows unequal intensities).
    #[arg(long)]
    pub ratio_only: bool,
}

#[derive(Debug, Args)]
pub struct UpconversionArgs {
    #[arg(long)]
    pub target_power_w: Option<f64>,
    #[arg(long)]
    pub duty_cycle: Option<f64>,
    /// Enhancement factor; defaults to the closed form for the scenario fields.
    #[arg(long)]
    pub xi: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SensitizationArgs {
    #[arg(long)]
    pub power_w: Option<f64>,
    #[arg(long)]
    pub illuminate_s: Option<f64>,
    #[arg(long)]
    pub dark_s: Option<f64>,
    #[arg(long)]
    pub step_s: Option<f64>,
    /// Relative Gaussian noise added to the sensitivity.
    #[arg(long)]
    pub noise: Option<f64>,
    /// Output spacing; a multiple of the step.
    #[arg(long)]
    pub sample_interval_s: Option<f64>,
    /// Write only the dark phase as `time_s,value[,sigma]`, time from its start.
    #[arg(long)]
    pub dark_only: bool,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// CSV with a header and `time_s,value[,sigma]` rows.
    pub input: PathBuf,
    /// Write per-point residuals here.
    #[arg(long)]
    pub residuals: Option<PathBuf>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ResponseArgs {
    #[arg(long)]
    pub z_max_mm: Option<f64>,
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub power_w: Option<f64>,
}
