use std::path::{Path, PathBuf};

use biphoton::amplitude::{correlation_map, diagonal_half_width, GridSpec};
use biphoton::config::Scenario;
use biphoton::constants::{C, H};
use biphoton::kinetics::{
    fit_biexponential, response_vs_position, simulate_sensitization, FitOptions, IntensitySchedule,
    Trace,
};
use biphoton::numeric::linspace;
use biphoton::overlap::{
    misalignment_derivatives, misalignment_half_width, overlap_vs_displacement,
    overlap_vs_misalignment, spectral_overlap_at, ImagingSystem,
};
use biphoton::phasematch::{solve_emission_angles, tuning_curve};
use biphoton::rates::{
    enhancement_xi, exceeds_weak_field, mode_count, photons_per_mode, rate_biphoton, rate_coherent,
    total_photons, upconversion_estimate,
};
use biphoton::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::args::*;
use crate::output::{num, sha256_hex, Document};
use crate::svg;

/// Exit 1 for bad inputs, exit 2 for numerical failures.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Numeric(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numeric_failure() {
            Failure::Numeric(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

/// Rendered data file, optional graphic, and an error to report after the
/// files are written (for fits that finish without converging).
pub struct Rendered {
    pub data: String,
    pub svg: Option<String>,
    pub extra_files: Vec<(PathBuf, String)>,
    pub deferred: Option<Failure>,
}

impl Rendered {
    fn new(doc: &Document) -> Self {
        Rendered {
            data: doc.render(),
            svg: None,
            extra_files: Vec::new(),
            deferred: None,
        }
    }

    fn with_svg(mut self, svg: String) -> Self {
        self.svg = Some(svg);
        self
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure::Validation(msg.into())
}

/// Override if given, else the scenario value, else a validation error.
fn pick<T>(over: Option<T>, from_scenario: Option<T>, what: &str) -> Outcome<T> {
    over.or(from_scenario).ok_or_else(|| {
        invalid(format!(
            "{what} not given on the command line or in the scenario"
        ))
    })
}

fn wavelength_column(prefix: &str, nm: f64) -> String {
    format!("{prefix}_{}nm", num(nm))
}

fn base_doc(command: &str, scenario: &Scenario) -> Document {
    Document::new(command, &scenario.name, &scenario.source)
}

pub fn tuning(args: &TuningArgs, scenario: &Scenario) -> Outcome<Rendered> {
    let cfg = &scenario.config;
    let sec = cfg.tuning().ok();
    let lo = pick(args.lambda_min, sec.map(|s| s.lambda_min_nm), "lambda-min")?;
    let hi = pick(args.lambda_max, sec.map(|s| s.lambda_max_nm), "lambda-max")?;
    let points = pick(args.points, sec.map(|s| s.points), "points")?;
    let pump = cfg.pump()?;
    let crystal = cfg.crystal()?;
    let curve = tuning_curve(lo * 1e-9, hi * 1e-9, points, &pump, &crystal)?;
    let k_p = pump.wavenumber(&crystal)?;

    let mut doc = base_doc("tuning-curve", scenario);
    doc.meta("crystal", &crystal.name)
        .meta_num("crystal_length_mm", crystal.length * 1e3)
        .meta_num("cut_angle_deg", crystal.cut_angle.to_degrees())
        .meta_num("cut_angle_rad", crystal.cut_angle)
        .meta_num("pump_nm", pump.wavelength * 1e9)
        .meta_num("pump_wavenumber_per_m", k_p)
        .columns(&[
            "lambda_s_nm",
            "lambda_i_nm",
            "theta_s_int_deg",
            "theta_i_int_deg",
            "theta_s_ext_deg",
            "theta_i_ext_deg",
            "residual_over_kp",
        ]);
    for p in &curve {
        doc.row_nums(&[
            p.lambda_s * 1e9,
            p.lambda_i * 1e9,
            p.theta_s_int.to_degrees(),
            p.theta_i_int.to_degrees(),
            p.theta_s_ext.to_degrees(),
            p.theta_i_ext.to_degrees(),
            p.residual / k_p,
        ]);
    }
    let signal = curve
        .iter()
        .map(|p| (p.lambda_s * 1e9, p.theta_s_ext.to_degrees()))
        .collect();
    let idler = curve
        .iter()
        .map(|p| (p.lambda_i * 1e9, p.theta_i_ext.to_degrees()))
        .collect();
    Ok(Rendered::new(&doc).with_svg(svg::line_chart(
        "Tuning curve",
        "wavelength (nm)",
        "external angle (deg)",
        &[("signal".into(), signal), ("idler".into(), idler)],
    )))
}

pub fn amplitude(args: &AmplitudeArgs, scenario: &Scenario) -> Outcome<Rendered> {
    let cfg = &scenario.config;
    let sec = cfg.amplitude().ok();
    let signal = pick(args.signal_nm, sec.map(|s| s.signal_nm), "signal-nm")?;
    let half = pick(
        args.half_range_mrad,
        sec.map(|s| s.half_range_mrad),
        "half-range-mrad",
    )?;
    let points = pick(args.points, sec.map(|s| s.points), "points")?;
    let frame = match (&args.frame, sec) {
        (Some(f), _) => f.parse()?,
        (None, Some(s)) => s.frame()?,
        (None, None) => return Err(invalid("frame not given")),
    };
    let pump = cfg.pump()?;
    let crystal = cfg.crystal()?;
    let base = solve_emission_angles(signal * 1e-9, &pump, &crystal)?;
    let grid = GridSpec::symmetric(half * 1e-3, points, frame);
    let map = correlation_map(&base, &pump, &crystal, &grid)?;
    let hw = diagonal_half_width(&base, &crystal, frame)?;

    let mut doc = base_doc("amplitude-map", scenario);
    doc.meta_num("lambda_s_nm", base.lambda_s * 1e9)
        .meta_num("lambda_i_nm", base.lambda_i * 1e9)
        .meta_num("theta_s_ext_deg", base.theta_s_ext.to_degrees())
        .meta_num("theta_i_ext_deg", base.theta_i_ext.to_degrees())
        .meta("frame", frame)
        .meta_num("pump_diameter_um", pump.beam_diameter * 1e6)
        .meta_num("crystal_length_mm", crystal.length * 1e3)
        .meta(
            "f_z_diagonal_half_width_mrad",
            hw.map_or_else(|| "none".to_string(), |w| num(w * 1e3)),
        )
        .columns(&[
            "d_theta_s_mrad",
            "d_theta_i_mrad",
            "f_x",
            "f_z",
            "f_squared",
        ]);
    for (s, i, fx, fz, fsq) in map.rows() {
        doc.row_nums(&[s * 1e3, i * 1e3, fx, fz, fsq]);
    }
    let xs: Vec<f64> = map.grid_i.iter().map(|v| v * 1e3).collect();
    let ys: Vec<f64> = map.grid_s.iter().map(|v| v * 1e3).collect();
    Ok(Rendered::new(&doc).with_svg(svg::heatmap(
        &format!(
            "F^2 at {} / {} nm",
            num(base.lambda_s * 1e9),
            num(base.lambda_i * 1e9)
        ),
        "d_theta_i (mrad)",
        "d_theta_s (mrad)",
        &xs,
        &ys,
        &map.f_sq,
    )))
}

pub fn overlap_alpha(args: &OverlapAlphaArgs, scenario: &Scenario) -> Outcome<Rendered> {
    let cfg = &scenario.config;
    let sec = cfg.misalignment().ok();
    let signals = pick(
        (!args.signal_nm.is_empty()).then(|| args.signal_nm.clone()),
        sec.map(|s| s.signal_nm.clone()),
        "signal-nm",
    )?;
    let max_deg = pick(args.max_deg, sec.map(|s| s.max_deg), "max-deg")?;
    let points = pick(args.points, sec.map(|s| s.points), "points")?;
    if signals.is_empty() || points < 2 || !(max_deg > 0.0) {
        return Err(invalid(
            "need at least one signal wavelength, 2 points and max-deg > 0",
        ));
    }
    let pump = cfg.pump()?;
    let crystal = cfg.crystal()?;
    let grid: Vec<f64> = linspace(-max_deg, max_deg, points)
        .into_iter()
        .map(f64::to_radians)
        .collect();

    let mut doc = base_doc("overlap-alpha", scenario);
    let mut curves = Vec::new();
    for &nm in &signals {
        let l = nm * 1e-9;
        let curve = overlap_vs_misalignment(l, &grid, &pump, &crystal)?;
        let (ds, di) = misalignment_derivatives(l, &pump, &crystal)?;
        let hw = misalignment_half_width(l, &pump, &crystal)?;
        let tag = num(nm);
        doc.meta_num(
            &format!("lambda_i_nm_{tag}"),
            curve.base_wavelengths.map_or(f64::NAN, |b| b.1 * 1e9),
        )
        .meta_num(&format!("dtheta_s_dalpha_{tag}"), ds)
        .meta_num(&format!("dtheta_i_dalpha_{tag}"), di)
        .meta_num(&format!("half_width_deg_{tag}"), hw.to_degrees());
        curves.push((nm, curve));
    }
    if curves.len() >= 2 {
        let diff = curves[0]
            .1
            .values()
            .zip(curves[1].1.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        doc.meta_num("max_pointwise_difference_first_two", diff);
    }
    let mut cols = vec!["misalignment_deg".to_string()];
    cols.extend(signals.iter().map(|&nm| wavelength_column("overlap", nm)));
    doc.columns(&cols);
    for (k, &a) in grid.iter().enumerate() {
        let mut row = vec![a.to_degrees()];
        row.extend(curves.iter().map(|(_, c)| c.samples[k].1));
        doc.row_nums(&row);
    }
    let series = curves
        .iter()
        .map(|(nm, c)| (format!("{} nm", num(*nm)), c.samples.clone()))
        .collect::<Vec<_>>();
    Ok(Rendered::new(&doc).with_svg(svg::line_chart(
        "Overlap vs misalignment",
        "misalignment (deg)",
        "overlap",
        &series,
    )))
}

fn imaging(focal_mm: Option<f64>, scenario: &Scenario) -> Outcome<ImagingSystem> {
    match focal_mm {
        Some(f) => Ok(ImagingSystem::unit_magnification(f * 1e-3)?),
        None => Ok(scenario.config.imaging()?),
    }
}

pub fn overlap_z(args: &OverlapZArgs, scenario: &Scenario) -> Outcome<Rendered> {
    let cfg = &scenario.config;
    let sec = cfg.displacement().ok();
    let signals = pick(
        (!args.signal_nm.is_empty()).then(|| args.signal_nm.clone()),
        sec.map(|s| s.signal_nm.clone()),
        "signal-nm",
    )?;
    let points = pick(args.points, sec.map(|s| s.points), "points")?;
    if signals.is_empty() || points < 2 {
        return Err(invalid("need at least one signal wavelength and 2 points"));
    }
    let pump = cfg.pump()?;
    let crystal = cfg.crystal()?;
    let lens = imaging(args.focal_length_mm, scenario)?;
    let half = 0.5 * crystal.length;
    let zs = linspace(-half, half, points);

    let mut doc = base_doc("overlap-z", scenario);
    doc.meta_num("focal_length_mm", lens.focal_length * 1e3)
        .meta_num("magnification", lens.magnification)
        .meta(
            "displacement_model",
            "first-order thin lens: d_theta = -(z/f)*|theta_ext|",
        );
    let mut curves = Vec::new();
    for &nm in &signals {
        let c = overlap_vs_displacement(nm * 1e-9, &zs, &pump, &crystal, &lens)?;
        curves.push((nm, c));
    }
    let mut cols = vec!["displacement_mm".to_string()];
    cols.extend(signals.iter().map(|&nm| wavelength_column("overlap", nm)));
    doc.columns(&cols);
    for (k, &z) in zs.iter().enumerate() {
        let mut row = vec![z * 1e3];
        row.extend(curves.iter().map(|(_, c)| c.samples[k].1));
        doc.row_nums(&row);
    }
    let series = curves
        .iter()
        .map(|(nm, c)| {
            (
                format!("{} nm", num(*nm)),
                c.samples.iter().map(|&(z, v)| (z * 1e3, v)).collect(),
            )
        })
        .collect::<Vec<_>>();
    Ok(Rendered::new(&doc).with_svg(svg::line_chart(
        "Overlap vs displacement",
        "z (mm)",
        "overlap",
        &series,
    )))
}

pub fn spectral(args: &SpectralArgs, scenario: &Scenario) -> Outcome<Rendered> {
    let cfg = &scenario.config;
    let sec = cfg.spectral().ok();
    let lo = pick(args.lambda_min, sec.map(|s| s.lambda_min_nm), "lambda-min")?;
    let hi = pick(args.lambda_max, sec.map(|s| s.lambda_max_nm), "lambda-max")?;
    let step = pick(args.step_nm, sec.map(|s| s.step_nm), "step-nm")?;
    let nodes = pick(args.nodes, sec.map(|s| s.nodes), "nodes")?;
    if !(step > 0.0) || !(hi >= lo) {
        return Err(invalid(format!(
            "invalid wavelength grid {lo}..{hi} step {step}"
        )));
    }
    let pump = cfg.pump()?;
    let crystal = cfg.crystal()?;
    let lens = imaging(args.focal_length_mm, scenario)?;
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    let lambdas: Vec<f64> = (0..count).map(|k| lo + k as f64 * step).collect();

    let mut rows = Vec::with_capacity(count);
    let mut convergence: f64 = 0.0;
    for &nm in &lambdas {
        let l = nm * 1e-9;
        let s = spectral_overlap_at(l, &crystal, &pump, &lens, nodes)?;
        let refined = spectral_overlap_at(l, &crystal, &pump, &lens, 2 * nodes - 1)?;
        convergence = convergence.max((s - refined).abs());
        let li = biphoton::phasematch::conjugate_wavelength(l, &pump)?;
        rows.push((nm, li * 1e9, s));
    }
    let (peak_nm, peak) = rows.iter().fold((f64::NAN, f64::NEG_INFINITY), |acc, r| {
        if r.2 > acc.1 {
            (r.0, r.2)
        } else {
            acc
        }
    });
    let below = rows.iter().filter(|r| r.2 < 0.5 * peak).count();

    let mut doc = base_doc("spectral-overlap", scenario);
    doc.meta_num("focal_length_mm", lens.focal_length * 1e3)
        .meta_num("crystal_length_mm", crystal.length * 1e3)
        .meta("nodes", nodes)
        .meta_num("quadrature_self_convergence", convergence)
        .meta_num("degenerate_nm", pump.degenerate_wavelength() * 1e9)
        .meta_num("peak_lambda_s_nm", peak_nm)
        .meta_num("peak_overlap", peak)
        .meta("points_below_half_peak", below)
        .columns(&["lambda_s_nm", "lambda_i_nm", "overlap"]);
    for r in &rows {
        doc.row_nums(&[r.0, r.1, r.2]);
    }
    let series = vec![("S".to_string(), rows.iter().map(|r| (r.0, r.2)).collect())];
    Ok(Rendered::new(&doc).with_svg(svg::line_chart(
        "Spectral overlap",
        "signal wavelength (nm)",
        "overlap",
        &series,
    )))
}

pub fn rates(args: &RatesArgs, scenario: &Scenario) -> Outcome<Rendered> {
    let cfg = &scenario.config;
    let mut process = cfg.detection_process()?;
    if let Some(e) = args.eta2 {
        process = biphoton::rates::DetectionProcess::new(e)?;
    }
    let mut doc = base_doc("rates", scenario);
    doc.meta_num("eta2", process.eta2).columns(&[
        "field",
        "intensity_w_m2",
        "wavelength_nm",
        "solid_angle_sr",
        "bandwidth_rad_s",
        "modes",
        "photons_per_mode",
        "mean_photon_number",
        "two_photon_rate",
    ]);
    for (name, field) in [
        ("coherent", cfg.coherent_field()?),
        ("biphoton", cfg.biphoton_field()?),
    ] {
        let vol = cfg.detection_volume(&field)?;
        let m = mode_count(&vol);
        let n = photons_per_mode(&field);
        let rate = if name == "coherent" {
            rate_coherent(&process, m, n)
        } else {
            rate_biphoton(&process, m, n)
        };
        doc.meta(&format!("weak_field_{name}"), !exceeds_weak_field(n));
        let mut cells = vec![name.to_string()];
        cells.extend(
            [
                field.intensity,
                field.wavelength * 1e9,
                field.solid_angle,
                field.bandwidth,
                m,
                n,
                total_photons(field.intensity, &vol),
                rate,
            ]
            .iter()
            .map(|&v| num(v)),
        );
        doc.row(cells);
    }
    Ok(Rendered::new(&doc))
}

pub fn enhancement(args: &EnhancementArgs, scenario: &Scenario) -> Outcome<Rendered> {
    let cfg = &scenario.config;
    let mut coh = cfg.coherent_field()?;
    let mut spdc = cfg.biphoton_field()?;
    if let Some(i) = args.intensity {
        coh.intensity = i;
        spdc.intensity = i;
    }
    if let Some(o) = args.coh_solid_angle_sr {
        coh.solid_angle = o;
    }
    if let Some(b) = args.coh_bandwidth {
        coh.bandwidth = b;
    }
    let coh = biphoton::rates::RadiationField::new(
        coh.intensity,
        coh.wavelength,
        coh.solid_angle,
        coh.bandwidth,
        coh.kind,
    )?;
    let v_coh = cfg.detection_volume(&coh)?;
    let v_spdc = cfg.detection_volume(&spdc)?;
    let (m_coh, m_spdc) = (mode_count(&v_coh), mode_count(&v_spdc));
    let (n_coh, n_spdc) = (photons_per_mode(&coh), photons_per_mode(&spdc));
    let xi = enhancement_xi(&coh, &spdc, m_coh, m_spdc, n_coh, n_spdc, !args.ratio_only)?;

    let mut doc = base_doc("enhancement", scenario);
    doc.meta_num("intensity_w_m2", coh.intensity)
        .meta_num("wavelength_nm", coh.wavelength * 1e9)
        .meta_num("coh_solid_angle_sr", coh.solid_angle)
        .meta_num("coh_bandwidth_rad_s", coh.bandwidth)
        .columns(&[
            "xi",
            "xi_ratio_form",
            "xi_closed_form",
            "modes_coh",
            "photons_per_mode_coh",
            "modes_spdc",
            "photons_per_mode_spdc",
        ]);
    let closed = xi.closed_form.unwrap_or(f64::NAN);
    let mut cells = vec![num(xi.closed_form.unwrap_or(xi.ratio)), num(xi.ratio)];
    cells.push(
        xi.closed_form
            .map_or_else(|| "NA".to_string(), |_| num(closed)),
    );
    cells.extend([m_coh, n_coh, m_spdc, n_spdc].iter().map(|&v| num(v)));
    doc.row(cells);
    Ok(Rendered::new(&doc))
}

pub fn upconversion(args: &UpconversionArgs, scenario: &Scenario) -> Outcome<Rendered> {
    let cfg = &scenario.config;
    let sec = cfg.upconversion()?;
    let target = args.target_power_w.unwrap_or(sec.target_power_w);
    let duty = args.duty_cycle.unwrap_or(sec.duty_cycle);
    let xi = match args.xi {
        Some(x) => x,
        None => biphoton::rates::enhancement_closed_form(
            &cfg.coherent_field()?,
            &cfg.biphoton_field()?,
        )?,
    };
    let photon_wl = sec.photon_wavelength_nm * 1e-9;
    let est = upconversion_estimate(
        sec.laser_power_w,
        sec.sh_power_w,
        target,
        duty,
        photon_wl,
        xi,
    )?;

    let mut doc = base_doc("upconversion-estimate", scenario);
    doc.meta_num("laser_power_w", sec.laser_power_w)
        .meta_num("sh_power_w", sec.sh_power_w)
        .meta_num("target_power_w", target)
        .meta_num("duty_cycle", duty)
        .meta_num("photon_wavelength_nm", sec.photon_wavelength_nm)
        .meta_num("photon_energy_j", H * C / photon_wl)
        .meta_num("xi", xi);
    if let Some(reported) = sec.reported_photon_rate_per_s {
        let at_double = est.upconverted_power / (H * C / (2.0 * photon_wl));
        doc.meta_num("reported_photon_rate_per_s", reported)
            .meta_num("reported_over_computed", reported / est.photon_rate)
            .meta_num("photon_rate_at_double_wavelength_per_s", at_double)
            .meta_num("reported_enhanced_rate_per_s", reported * xi)
            .meta(
                "discrepancy",
                format!(
                    "computed rate is P/(hc/lambda) = {}/s; the reported {}/s does not follow from the photon energy at {} nm or at {} nm ({}/s)",
                    num(est.photon_rate),
                    num(reported),
                    num(sec.photon_wavelength_nm),
                    num(2.0 * sec.photon_wavelength_nm),
                    num(at_double)
                ),
            );
    }
    doc.columns(&[
        "upconverted_power_w",
        "photon_rate_per_s",
        "enhanced_rate_per_s",
    ])
    .row_nums(&[est.upconverted_power, est.photon_rate, est.enhanced_rate]);
    Ok(Rendered::new(&doc))
}

pub fn sensitization(
    args: &SensitizationArgs,
    scenario: &Scenario,
    seed: u64,
) -> Outcome<Rendered> {
    let cfg = &scenario.config;
    let model = cfg.trap_model()?;
    let sec = cfg.sensitization()?;
    let mut sec = sec.clone();
    if let Some(p) = args.power_w {
        sec.power_w = p;
    }
    if let Some(t) = args.illuminate_s {
        sec.illuminate_s = t;
    }
    if let Some(t) = args.dark_s {
        sec.dark_s = t;
    }
    if let Some(s) = args.step_s {
        sec.step_s = s;
    }
    let noise = args.noise.unwrap_or(0.0);
    if !(noise >= 0.0) {
        return Err(invalid(format!("noise must be nonnegative, got {noise}")));
    }
    let intensity = sec.intensity();
    let mut pieces = vec![(sec.illuminate_s, intensity)];
    if sec.dark_s > 0.0 {
        pieces.push((sec.dark_s, 0.0));
    }
    let schedule = IntensitySchedule::from_durations(&pieces)?;
    let horizon = schedule.end();
    let sim = simulate_sensitization(&model, &schedule, [0.0, 0.0], horizon, sec.step_s)?;

    let interval = args.sample_interval_s.unwrap_or(sec.step_s);
    let stride = (interval / sec.step_s).round() as usize;
    if stride == 0 || ((stride as f64) * sec.step_s - interval).abs() > 1e-9 * interval {
        return Err(invalid(format!(
            "sample interval {interval} s must be a multiple of the {} s step",
            sec.step_s
        )));
    }

    let times = &sim.trace.times;
    let values = &sim.trace.values;
    let at = |t: f64| {
        let k = times.partition_point(|&x| x < t - 1e-9);
        values.get(k).copied()
    };
    let mut doc = base_doc("simulate-sensitization", scenario);
    doc.meta_num("intensity_w_m2", intensity)
        .meta_num("power_w", sec.power_w)
        .meta_num("spot_diameter_um", sec.spot_diameter_um)
        .meta_num("illuminate_s", sec.illuminate_s)
        .meta_num("dark_s", sec.dark_s)
        .meta_num("step_s", sec.step_s)
        .meta_num("noise_relative", noise)
        .meta("seed", seed)
        .meta_num(
            "saturated_sensitivity",
            model.sensitivity(&[
                model.traps[0].equilibrium(intensity),
                model.traps[1].equilibrium(intensity),
            ]),
        );
    if sec.illuminate_s >= 100.0 + sec.step_s {
        if let (Some(s0), Some(s100), Some(a), Some(b)) = (
            at(0.0),
            at(100.0),
            at(100.0 - sec.step_s),
            at(100.0 + sec.step_s),
        ) {
            doc.meta_num("rise_at_100s", s100 / s0).meta_num(
                "relative_slope_at_100s_per_s",
                (b - a) / (2.0 * sec.step_s) / s100,
            );
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut noisy = |v: f64| {
        if noise > 0.0 {
            v * (1.0 + noise * normal.sample(&mut rng))
        } else {
            v
        }
    };

    if args.dark_only {
        if !(sec.dark_s > 0.0) {
            return Err(invalid("--dark-only needs a dark phase"));
        }
        doc.meta("time_origin", "start of dark phase");
        if noise > 0.0 {
            doc.columns(&["time_s", "value", "sigma"]);
        } else {
            doc.columns(&["time_s", "value"]);
        }
        let start = times.partition_point(|&t| t < sec.illuminate_s - 1e-9);
        for k in (start..times.len()).step_by(stride) {
            let v = values[k];
            let t = times[k] - sec.illuminate_s;
            if noise > 0.0 {
                let measured = noisy(v);
                doc.row_nums(&[t, measured, noise * v]);
            } else {
                doc.row_nums(&[t, v]);
            }
        }
    } else {
        let mut cols = vec![
            "time_s",
            "intensity_w_m2",
            "sensitivity",
            "population_1",
            "population_2",
        ];
        if noise > 0.0 {
            cols.push("measured");
        }
        doc.columns(&cols);
        for k in (0..times.len()).step_by(stride) {
            let t = times[k];
            let i = schedule.intensity_at(t).unwrap_or(0.0);
            let p = sim.populations[k];
            let mut row = vec![t, i, values[k], p[0], p[1]];
            if noise > 0.0 {
                row.push(noisy(values[k]));
            }
            doc.row_nums(&row);
        }
    }
    let series = vec![(
        "s/s0".to_string(),
        times
            .iter()
            .zip(values)
            .step_by(stride)
            .map(|(&t, &v)| (t, v))
            .collect(),
    )];
    Ok(Rendered::new(&doc).with_svg(svg::line_chart(
        "Sensitization",
        "time (s)",
        "sensitivity",
        &series,
    )))
}

/// Reads `time_s,value[,sigma]` rows after one header line; `#` lines are skipped.
pub fn read_trace(path: &Path) -> Outcome<(Trace, String)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| invalid(format!("reading {}: {e}", path.display())))?;
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    if lines.next().is_none() {
        return Err(invalid(format!("{} has no header line", path.display())));
    }
    let (mut t, mut y, mut s) = (Vec::new(), Vec::new(), Vec::new());
    let mut width = None;
    for (no, line) in lines {
        let cells: Vec<f64> = line
            .split(',')
            .map(|c| c.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| invalid(format!("{}:{}: {e}", path.display(), no + 1)))?;
        if !(2..=3).contains(&cells.len()) || width.is_some_and(|w| w != cells.len()) {
            return Err(invalid(format!(
                "{}:{}: expected a consistent 2 or 3 columns, got {}",
                path.display(),
                no + 1,
                cells.len()
            )));
        }
        width = Some(cells.len());
        t.push(cells[0]);
        y.push(cells[1]);
        if cells.len() == 3 {
            s.push(cells[2]);
        }
    }
    let sigmas = (width == Some(3)).then_some(s);
    Ok((Trace::new(t, y, sigmas)?, text))
}

pub fn fit_decay(args: &FitArgs, scenario: &Scenario) -> Outcome<Rendered> {
    let (trace, text) = read_trace(&args.input)?;
    let mut opts: FitOptions = scenario.config.fit_options();
    if let Some(n) = args.max_iterations {
        opts.max_iterations = n;
    }
    let (fit, deferred, rank_deficient) = match fit_biexponential(&trace, &opts) {
        Ok(f) if f.converged => (f, None, false),
        Ok(f) => (
            f,
            Some(Failure::Numeric(format!(
                "fit did not converge within {} iterations",
                f.iterations
            ))),
            false,
        ),
        Err(Error::RankDeficient { fallback }) => (
            *fallback,
            Some(Failure::Numeric(
                "rank-deficient normal equations; refit with a single exponential".into(),
            )),
            true,
        ),
        Err(e) => return Err(e.into()),
    };

    let mut doc = base_doc("fit-decay", scenario);
    doc.meta(
        "input",
        args.input
            .file_name()
            .map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
    )
    .meta("input_sha256", sha256_hex(&text))
    .meta("points", trace.len())
    .meta(
        "weighting",
        if trace.sigmas.is_some() {
            "inverse-variance"
        } else {
            "unweighted"
        },
    )
    .meta("rank_deficient", rank_deficient)
    .columns(&[
        "a1",
        "tau1_s",
        "a2",
        "tau2_s",
        "offset",
        "rms_residual",
        "iterations",
        "converged",
    ]);
    let mut cells: Vec<String> = [
        fit.a1,
        fit.tau1,
        fit.a2,
        fit.tau2,
        fit.offset,
        fit.rms_residual,
    ]
    .iter()
    .map(|&v| num(v))
    .collect();
    cells.push(fit.iterations.to_string());
    cells.push(fit.converged.to_string());
    doc.row(cells);

    let mut rendered = Rendered::new(&doc);
    let residuals = fit.residuals(&trace);
    if let Some(path) = &args.residuals {
        let mut r = base_doc("fit-decay-residuals", scenario);
        r.meta("input_sha256", sha256_hex(&text))
            .columns(&["time_s", "value", "model", "residual"]);
        for ((&t, &y), &res) in trace.times.iter().zip(&trace.values).zip(&residuals) {
            r.row_nums(&[t, y, fit.eval(t), res]);
        }
        rendered.extra_files.push((path.clone(), r.render()));
    }
    let data: Vec<(f64, f64)> = trace
        .times
        .iter()
        .copied()
        .zip(trace.values.iter().copied())
        .collect();
    let model: Vec<(f64, f64)> = trace.times.iter().map(|&t| (t, fit.eval(t))).collect();
    rendered.svg = Some(svg::line_chart(
        "Bi-exponential fit",
        "time (s)",
        "value",
        &[("data".into(), data), ("fit".into(), model)],
    ));
    rendered.deferred = deferred;
    Ok(rendered)
}

pub fn response(args: &ResponseArgs, scenario: &Scenario) -> Outcome<Rendered> {
    let sec = scenario.config.response()?;
    let spot = sec.spot()?;
    let z_max = args.z_max_mm.unwrap_or(sec.z_max_mm);
    let points = args.points.unwrap_or(sec.points);
    let power = args.power_w.unwrap_or(sec.power_w);
    if !(z_max > 0.0) || points < 2 {
        return Err(invalid("need z-max-mm > 0 and at least 2 points"));
    }
    let peak = response_vs_position(0.0, &spot, power, sec.gain)?;
    let mut doc = base_doc("response-scan", scenario);
    doc.meta_num("power_w", power)
        .meta_num("waist_area_m2", spot.waist_area)
        .meta_num("rayleigh_length_mm", spot.rayleigh_length * 1e3)
        .meta_num("gain", sec.gain)
        .columns(&["z_mm", "counts_per_s", "relative"]);
    let mut series = Vec::with_capacity(points);
    for z in linspace(-z_max, z_max, points) {
        let r = response_vs_position(z * 1e-3, &spot, power, sec.gain)?;
        let rel = if peak > 0.0 { r / peak } else { 0.0 };
        doc.row_nums(&[z, r, rel]);
        series.push((z, r));
    }
    Ok(Rendered::new(&doc).with_svg(svg::line_chart(
        "Two-photon response vs detector position",
        "z (mm)",
        "counts/s",
        &[("R".into(), series)],
    )))
}
