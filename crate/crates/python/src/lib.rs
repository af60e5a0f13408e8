//! Python bindings. Wavelengths are in nm and angles in degrees unless a
//! name says otherwise; the core library works in SI units.

use biphoton::amplitude::{self, AngularDeviation, Frame};
use biphoton::config::{builtin_names, Scenario};
use biphoton::dispersion::CrystalSpec;
use biphoton::kinetics::{self, FitOptions, IntensitySchedule, TrapModel};
use biphoton::overlap::{self, ImagingSystem};
use biphoton::phasematch::{self, PumpSpec};
use biphoton::rates::{self, FieldKind, RadiationField};
use biphoton::Error;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    if e.is_numeric_failure() {
        PyRuntimeError::new_err(e.to_string())
    } else {
        PyValueError::new_err(e.to_string())
    }
}

trait IntoPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPy<T> for biphoton::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

#[pyclass(name = "Pump", frozen, from_py_object)]
#[derive(Clone)]
struct PyPump(PumpSpec);

#[pymethods]
impl PyPump {
    #[new]
    #[pyo3(signature = (wavelength_nm = 351.1, beam_diameter_um = 100.0, power_w = 1.0))]
    fn new(wavelength_nm: f64, beam_diameter_um: f64, power_w: f64) -> PyResult<Self> {
        PumpSpec::new(wavelength_nm * 1e-9, beam_diameter_um * 1e-6, power_w)
            .py()
            .map(PyPump)
    }

    #[getter]
    fn wavelength_nm(&self) -> f64 {
        self.0.wavelength * 1e9
    }

    #[getter]
    fn degenerate_nm(&self) -> f64 {
        self.0.degenerate_wavelength() * 1e9
    }

    fn __repr__(&self) -> String {
        format!(
            "Pump(wavelength_nm={}, beam_diameter_um={}, power_w={})",
            self.0.wavelength * 1e9,
            self.0.beam_diameter * 1e6,
            self.0.power
        )
    }
}

#[pyclass(name = "Crystal", frozen, from_py_object)]
#[derive(Clone)]
struct PyCrystal(CrystalSpec);

#[pymethods]
impl PyCrystal {
    /// BBO of the given length; cut for degenerate collinear emission of
    /// `pump` when no cut angle is given.
    #[staticmethod]
    #[pyo3(signature = (length_mm = 5.0, cut_angle_deg = None, pump = None))]
    fn bbo(length_mm: f64, cut_angle_deg: Option<f64>, pump: Option<PyPump>) -> PyResult<Self> {
        let probe = CrystalSpec::bbo(length_mm * 1e-3, 0.5).py()?;
        let alpha = match cut_angle_deg {
            Some(d) => d.to_radians(),
            None => {
                let pump = pump.map_or_else(PumpSpec::argon_351, |p| p.0);
                phasematch::degenerate_cut_angle(&pump, &probe).py()?
            }
        };
        probe.with_cut_angle(alpha).py().map(PyCrystal)
    }

    #[getter]
    fn cut_angle_deg(&self) -> f64 {
        self.0.cut_angle.to_degrees()
    }

    #[getter]
    fn length_mm(&self) -> f64 {
        self.0.length * 1e3
    }

    fn n_ordinary(&self, wavelength_nm: f64) -> PyResult<f64> {
        self.0.n_ordinary(wavelength_nm * 1e-9).py()
    }

    fn n_extraordinary(&self, wavelength_nm: f64, theta_rad: f64) -> PyResult<f64> {
        self.0.n_extraordinary(wavelength_nm * 1e-9, theta_rad).py()
    }

    fn __repr__(&self) -> String {
        format!(
            "Crystal(name={:?}, length_mm={}, cut_angle_deg={})",
            self.0.name,
            self.0.length * 1e3,
            self.0.cut_angle.to_degrees()
        )
    }
}

/// One point on the tuning curve; angles in degrees.
#[pyclass(name = "PhaseMatchPoint", frozen, from_py_object)]
#[derive(Clone)]
struct PyPoint(phasematch::PhaseMatchPoint);

#[pymethods]
impl PyPoint {
    #[getter]
    fn signal_nm(&self) -> f64 {
        self.0.lambda_s * 1e9
    }

    #[getter]
    fn idler_nm(&self) -> f64 {
        self.0.lambda_i * 1e9
    }

    #[getter]
    fn theta_s_int_deg(&self) -> f64 {
        self.0.theta_s_int.to_degrees()
    }

    #[getter]
    fn theta_i_int_deg(&self) -> f64 {
        self.0.theta_i_int.to_degrees()
    }

    #[getter]
    fn theta_s_ext_deg(&self) -> f64 {
        self.0.theta_s_ext.to_degrees()
    }

    #[getter]
    fn theta_i_ext_deg(&self) -> f64 {
        self.0.theta_i_ext.to_degrees()
    }

    /// Wave-vector mismatch, 1/m.
    #[getter]
    fn residual(&self) -> f64 {
        self.0.residual
    }

    fn __repr__(&self) -> String {
        format!(
            "PhaseMatchPoint(signal_nm={}, idler_nm={}, theta_s_ext_deg={}, theta_i_ext_deg={})",
            self.signal_nm(),
            self.idler_nm(),
            self.theta_s_ext_deg(),
            self.theta_i_ext_deg()
        )
    }
}

#[pyfunction]
fn conjugate_wavelength(signal_nm: f64, pump: &PyPump) -> PyResult<f64> {
    Ok(phasematch::conjugate_wavelength(signal_nm * 1e-9, &pump.0).py()? * 1e9)
}

#[pyfunction]
fn degenerate_cut_angle_deg(pump: &PyPump, crystal: &PyCrystal) -> PyResult<f64> {
    Ok(phasematch::degenerate_cut_angle(&pump.0, &crystal.0)
        .py()?
        .to_degrees())
}

#[pyfunction]
fn solve_emission_angles(signal_nm: f64, pump: &PyPump, crystal: &PyCrystal) -> PyResult<PyPoint> {
    phasematch::solve_emission_angles(signal_nm * 1e-9, &pump.0, &crystal.0)
        .py()
        .map(PyPoint)
}

#[pyfunction]
fn tuning_curve(
    min_nm: f64,
    max_nm: f64,
    points: usize,
    pump: &PyPump,
    crystal: &PyCrystal,
) -> PyResult<Vec<PyPoint>> {
    let curve =
        phasematch::tuning_curve(min_nm * 1e-9, max_nm * 1e-9, points, &pump.0, &crystal.0).py()?;
    Ok(curve.into_iter().map(PyPoint).collect())
}

/// `(F_x, F_z)` at angular deviations given in radians.
#[pyfunction]
#[pyo3(signature = (point, pump, crystal, d_theta_s, d_theta_i, frame = "external"))]
fn correlation_amplitudes(
    point: &PyPoint,
    pump: &PyPump,
    crystal: &PyCrystal,
    d_theta_s: f64,
    d_theta_i: f64,
    frame: &str,
) -> PyResult<(f64, f64)> {
    let frame: Frame = frame.parse().py()?;
    let dev = AngularDeviation::new(d_theta_s, d_theta_i, frame).py()?;
    let base = &point.0;
    Ok((
        amplitude::f_x(&dev, base, &pump.0),
        amplitude::f_z(&dev, base, &crystal.0),
    ))
}

#[pyfunction]
fn overlap_vs_misalignment(
    signal_nm: f64,
    misalignment_deg: Vec<f64>,
    pump: &PyPump,
    crystal: &PyCrystal,
) -> PyResult<Vec<f64>> {
    let grid: Vec<f64> = misalignment_deg.iter().map(|d| d.to_radians()).collect();
    let curve =
        overlap::overlap_vs_misalignment(signal_nm * 1e-9, &grid, &pump.0, &crystal.0).py()?;
    Ok(curve.values().collect())
}

#[pyfunction]
fn misalignment_half_width_deg(
    signal_nm: f64,
    pump: &PyPump,
    crystal: &PyCrystal,
) -> PyResult<f64> {
    Ok(
        overlap::misalignment_half_width(signal_nm * 1e-9, &pump.0, &crystal.0)
            .py()?
            .to_degrees(),
    )
}

#[pyfunction]
#[pyo3(signature = (signal_nm, pump, crystal, focal_length_mm = 50.0, nodes = overlap::DEFAULT_NODES))]
fn spectral_overlap(
    signal_nm: f64,
    pump: &PyPump,
    crystal: &PyCrystal,
    focal_length_mm: f64,
    nodes: usize,
) -> PyResult<f64> {
    let lens = ImagingSystem::unit_magnification(focal_length_mm * 1e-3).py()?;
    overlap::spectral_overlap_at(signal_nm * 1e-9, &crystal.0, &pump.0, &lens, nodes).py()
}

fn field(
    intensity: f64,
    wavelength_nm: f64,
    solid_angle_sr: f64,
    bandwidth: f64,
    kind: FieldKind,
) -> PyResult<RadiationField> {
    RadiationField::new(
        intensity,
        wavelength_nm * 1e-9,
        solid_angle_sr,
        bandwidth,
        kind,
    )
    .py()
}

/// Mean photons per mode, intensity in W/m² and bandwidth in rad/s.
#[pyfunction]
fn photons_per_mode(
    intensity: f64,
    wavelength_nm: f64,
    solid_angle_sr: f64,
    bandwidth: f64,
) -> PyResult<f64> {
    Ok(rates::photons_per_mode(&field(
        intensity,
        wavelength_nm,
        solid_angle_sr,
        bandwidth,
        FieldKind::Biphoton,
    )?))
}

/// Biphoton over coherent enhancement at equal intensity; needs only the
/// coherent field's solid angle and bandwidth.
#[pyfunction]
fn enhancement(
    intensity: f64,
    wavelength_nm: f64,
    solid_angle_sr: f64,
    bandwidth: f64,
) -> PyResult<f64> {
    let coh = field(
        intensity,
        wavelength_nm,
        solid_angle_sr,
        bandwidth,
        FieldKind::Coherent,
    )?;
    rates::enhancement_closed_form(&coh, &coh).py()
}

/// `(upconverted_power_w, photon_rate_per_s, enhanced_rate_per_s)`.
#[pyfunction]
fn upconversion_estimate(
    laser_power_w: f64,
    sh_power_w: f64,
    target_power_w: f64,
    duty_cycle: f64,
    photon_wavelength_nm: f64,
    xi: f64,
) -> PyResult<(f64, f64, f64)> {
    let e = rates::upconversion_estimate(
        laser_power_w,
        sh_power_w,
        target_power_w,
        duty_cycle,
        photon_wavelength_nm * 1e-9,
        xi,
    )
    .py()?;
    Ok((e.upconverted_power, e.photon_rate, e.enhanced_rate))
}

/// Calibrated two-trap model lit for `illuminate_s` then dark for `dark_s`.
/// Returns `(times, sensitivity)`.
#[pyfunction]
#[pyo3(signature = (illuminate_s, dark_s = 0.0, step_s = 0.1, intensity_w_m2 = kinetics::CALIBRATION_INTENSITY))]
fn simulate_sensitization(
    illuminate_s: f64,
    dark_s: f64,
    step_s: f64,
    intensity_w_m2: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let mut pieces = vec![(illuminate_s, intensity_w_m2)];
    if dark_s > 0.0 {
        pieces.push((dark_s, 0.0));
    }
    let schedule = IntensitySchedule::from_durations(&pieces).py()?;
    let sim = kinetics::simulate_sensitization(
        &TrapModel::calibrated(),
        &schedule,
        [0.0; 2],
        schedule.end(),
        step_s,
    )
    .py()?;
    Ok((sim.trace.times, sim.trace.values))
}

#[pyclass(name = "DecayFit", frozen, get_all, skip_from_py_object)]
struct PyDecayFit {
    a1: f64,
    tau1: f64,
    a2: f64,
    tau2: f64,
    offset: f64,
    rms_residual: f64,
    iterations: usize,
    converged: bool,
}

#[pymethods]
impl PyDecayFit {
    fn __repr__(&self) -> String {
        format!(
            "DecayFit(a1={}, tau1={}, a2={}, tau2={}, offset={}, converged={})",
            self.a1, self.tau1, self.a2, self.tau2, self.offset, self.converged
        )
    }
}

/// Bi-exponential fit; raises RuntimeError on rank-deficient data.
#[pyfunction]
#[pyo3(signature = (times, values, sigmas = None, max_iterations = 200))]
fn fit_biexponential(
    times: Vec<f64>,
    values: Vec<f64>,
    sigmas: Option<Vec<f64>>,
    max_iterations: usize,
) -> PyResult<PyDecayFit> {
    let trace = kinetics::Trace::new(times, values, sigmas).py()?;
    let opts = FitOptions {
        max_iterations,
        ..FitOptions::default()
    };
    let f = kinetics::fit_biexponential(&trace, &opts).py()?;
    Ok(PyDecayFit {
        a1: f.a1,
        tau1: f.tau1,
        a2: f.a2,
        tau2: f.tau2,
        offset: f.offset,
        rms_residual: f.rms_residual,
        iterations: f.iterations,
        converged: f.converged,
    })
}

#[pyfunction]
fn builtin_scenarios() -> Vec<&'static str> {
    builtin_names().collect()
}

/// Description line of a scenario (built-in name or TOML path).
#[pyfunction]
fn scenario_description(name: &str) -> PyResult<Option<String>> {
    Ok(Scenario::load(name).py()?.config.description)
}

#[pymodule]
fn biphoton_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPump>()?;
    m.add_class::<PyCrystal>()?;
    m.add_class::<PyPoint>()?;
    m.add_class::<PyDecayFit>()?;
    m.add_function(wrap_pyfunction!(conjugate_wavelength, m)?)?;
    m.add_function(wrap_pyfunction!(degenerate_cut_angle_deg, m)?)?;
    m.add_function(wrap_pyfunction!(solve_emission_angles, m)?)?;
    m.add_function(wrap_pyfunction!(tuning_curve, m)?)?;
    m.add_function(wrap_pyfunction!(correlation_amplitudes, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_vs_misalignment, m)?)?;
    m.add_function(wrap_pyfunction!(misalignment_half_width_deg, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(photons_per_mode, m)?)?;
    m.add_function(wrap_pyfunction!(enhancement, m)?)?;
    m.add_function(wrap_pyfunction!(upconversion_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_sensitization, m)?)?;
    m.add_function(wrap_pyfunction!(fit_biexponential, m)?)?;
    m.add_function(wrap_pyfunction!(builtin_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(scenario_description, m)?)?;
    Ok(())
}
