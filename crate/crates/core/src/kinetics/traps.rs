use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Trace;
use crate::error::{Error, Result};
use crate::numeric::rk4_step;

/// Peak intensity of the calibration scenario: 1.4 nW in a 35 µm spot, W/m².
pub const CALIBRATION_INTENSITY: f64 = 1.4e-9 / (PI * 17.5e-6 * 17.5e-6);

/// One trap population `N` obeying `dN/dt = c·I·(N_max − N) − N/τ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trap {
    pub capacity: f64,
    /// m²/(W·s)
    pub fill_coefficient: f64,
    /// seconds
    pub lifetime: f64,
    /// Sensitivity gain per unit population.
    pub gain: f64,
}

impl Trap {
    /// `1/(c·I + 1/τ)`
    pub fn effective_lifetime(&self, intensity: f64) -> f64 {
        1.0 / (self.fill_coefficient * intensity + 1.0 / self.lifetime)
    }

    pub fn equilibrium(&self, intensity: f64) -> f64 {
        self.fill_coefficient * intensity * self.capacity * self.effective_lifetime(intensity)
    }

    fn rate(&self, intensity: f64, n: f64) -> f64 {
        self.fill_coefficient * intensity * (self.capacity - n) - n / self.lifetime
    }
}

/// Two-trap sensitization model, `s = s0·(1 + β1·N1 + β2·N2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapModel {
    /// Slow trap first.
    pub traps: [Trap; 2],
    pub base_sensitivity: f64,
}

impl TrapModel {
    pub fn new(slow: Trap, fast: Trap, base_sensitivity: f64) -> Result<Self> {
        for t in [&slow, &fast] {
            for (name, v) in [
                ("capacity", t.capacity),
                ("fill coefficient", t.fill_coefficient),
                ("gain", t.gain),
            ] {
                if !(v >= 0.0) || !v.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "trap {name} must be nonnegative, got {v}"
                    )));
                }
            }
        }
        if !(fast.lifetime > 0.0 && slow.lifetime > fast.lifetime) {
            return Err(Error::InvalidArgument(format!(
                "trap lifetimes must satisfy τ1 > τ2 > 0, got {} and {}",
                slow.lifetime, fast.lifetime
            )));
        }
        if !(base_sensitivity >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "base sensitivity must be nonnegative, got {base_sensitivity}"
            )));
        }
        Ok(TrapModel {
            traps: [slow, fast],
            base_sensitivity,
        })
    }

    /// Defaults produced by `examples/calibrate_traps.rs`: at
    /// [`CALIBRATION_INTENSITY`] the traps settle at 80 % and 50 % filling and
    /// the saturated sensitivity is 16·s0.
    pub fn calibrated() -> Self {
        TrapModel {
            traps: [
                Trap {
                    capacity: 1.0,
                    fill_coefficient: 0.027_488_935_718_910_69,
                    lifetime: 100.0,
                    gain: 15.0,
                },
                Trap {
                    capacity: 1.0,
                    fill_coefficient: 0.137_444_678_594_553_42,
                    lifetime: 5.0,
                    gain: 6.0,
                },
            ],
            base_sensitivity: 1.0,
        }
    }

    pub fn sensitivity(&self, populations: &[f64; 2]) -> f64 {
        self.base_sensitivity
            * (1.0 + self.traps[0].gain * populations[0] + self.traps[1].gain * populations[1])
    }

    /// Largest stable step under `intensity`: `min(τ2, 1/(c_j·I))/10`.
    pub fn max_step(&self, intensity: f64) -> f64 {
        let mut limit = self.traps[1].lifetime;
        for t in &self.traps {
            let fill = t.fill_coefficient * intensity;
            if fill > 0.0 {
                limit = limit.min(1.0 / fill);
            }
        }
        limit / 10.0
    }

    fn derivative(&self, intensity: f64, n: &[f64; 2]) -> [f64; 2] {
        [
            self.traps[0].rate(intensity, n[0]),
            self.traps[1].rate(intensity, n[1]),
        ]
    }
}

/// Closed-form population after `t` seconds of constant `intensity`.
pub fn closed_form_population(trap: &Trap, intensity: f64, n0: f64, t: f64) -> f64 {
    let eq = trap.equilibrium(intensity);
    eq + (n0 - eq) * (-t / trap.effective_lifetime(intensity)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub start: f64,
    pub end: f64,
    /// W/m²
    pub intensity: f64,
}

/// Piecewise-constant intensity, contiguous from t = 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntensitySchedule {
    segments: Vec<Segment>,
}

impl IntensitySchedule {
    pub fn constant(intensity: f64, horizon: f64) -> Result<Self> {
        Self::from_durations(&[(horizon, intensity)])
    }

    /// Consecutive `(duration, intensity)` pieces starting at t = 0.
    pub fn from_durations(pieces: &[(f64, f64)]) -> Result<Self> {
        if pieces.is_empty() {
            return Err(Error::InvalidArgument("empty intensity schedule".into()));
        }
        let mut segments = Vec::with_capacity(pieces.len());
        let mut t = 0.0;
        for &(duration, intensity) in pieces {
            if !(duration > 0.0) || !duration.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "schedule durations must be positive, got {duration}"
                )));
            }
            if !(intensity >= 0.0) || !intensity.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "schedule intensities must be nonnegative, got {intensity}"
                )));
            }
            segments.push(Segment {
                start: t,
                end: t + duration,
                intensity,
            });
            t += duration;
        }
        Ok(IntensitySchedule { segments })
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.end)
    }

    pub fn intensity_at(&self, t: f64) -> Option<f64> {
        self.segments
            .iter()
            .find(|s| t >= s.start && t < s.end)
            .or_else(|| self.segments.last().filter(|s| t == s.end))
            .map(|s| s.intensity)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    /// Sensitivity against time.
    pub trace: Trace,
    /// Trap populations at each trace sample.
    pub populations: Vec<[f64; 2]>,
}

/// Fixed-step RK4 integration of the trap equations. Samples fall on
/// multiples of `step` (plus `horizon` itself); steps straddling a schedule
/// boundary are split there so each sub-step sees a constant intensity.
pub fn simulate_sensitization(
    model: &TrapModel,
    schedule: &IntensitySchedule,
    initial: [f64; 2],
    horizon: f64,
    step: f64,
) -> Result<Simulation> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "horizon must be positive, got {horizon}"
        )));
    }
    if schedule.end() < horizon * (1.0 - 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "schedule ends at {} s, before the {horizon} s horizon",
            schedule.end()
        )));
    }
    if initial.iter().any(|n| !(*n >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "initial populations must be nonnegative, got {initial:?}"
        )));
    }
    for seg in schedule.segments().iter().filter(|s| s.start < horizon) {
        let max_step = model.max_step(seg.intensity);
        if step > max_step {
            return Err(Error::Stability { step, max_step });
        }
    }

    let mut times = vec![0.0];
    let mut n = initial;
    let mut values = vec![model.sensitivity(&n)];
    let mut populations = vec![n];
    let mut t = 0.0;
    let mut k: u64 = 0;
    while t < horizon {
        k += 1;
        let target = (k as f64 * step).min(horizon);
        // Snap a sliver-sized final step onto the horizon.
        let target = if horizon - target < 1e-9 * step {
            horizon
        } else {
            target
        };
        for seg in schedule.segments() {
            if seg.end <= t || seg.start >= target {
                continue;
            }
            let a = t.max(seg.start);
            let b = target.min(seg.end);
            if b > a {
                n = rk4_step(&n, b - a, |y| model.derivative(seg.intensity, y));
            }
        }
        t = target;
        times.push(t);
        values.push(model.sensitivity(&n));
        populations.push(n);
    }
    Ok(Simulation {
        trace: Trace {
            times,
            values,
            sigmas: None,
        },
        populations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dark_and_empty_stays_at_base() {
        let m = TrapModel::calibrated();
        let sched = IntensitySchedule::constant(0.0, 50.0).unwrap();
        let sim = simulate_sensitization(&m, &sched, [0.0, 0.0], 50.0, 0.1).unwrap();
        assert!(sim.trace.values.iter().all(|&s| s == 1.0));
        assert_eq!(sim.trace.len(), 501);
        assert_eq!(*sim.trace.times.last().unwrap(), 50.0);
    }

    #[test]
    fn dark_decay_is_biexponential() {
        let m = TrapModel::calibrated();
        let sched = IntensitySchedule::constant(0.0, 200.0).unwrap();
        let sim = simulate_sensitization(&m, &sched, [0.5, 0.4], 200.0, 0.1).unwrap();
        for (&t, &s) in sim.trace.times.iter().zip(&sim.trace.values) {
            let exact = 1.0 + 15.0 * 0.5 * (-t / 100.0).exp() + 6.0 * 0.4 * (-t / 5.0).exp();
            assert!((s - exact).abs() < 1e-9 * exact, "t={t}: {s} vs {exact}");
        }
    }

    #[test]
    fn stability_guard() {
        let m = TrapModel::calibrated();
        let sched = IntensitySchedule::constant(CALIBRATION_INTENSITY, 10.0).unwrap();
        let err = simulate_sensitization(&m, &sched, [0.0; 2], 10.0, 1.0).unwrap_err();
        match err {
            Error::Stability { max_step, .. } => assert!((max_step - 0.5).abs() < 1e-12),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn boundary_split_matches_piecewise_closed_form() {
        let m = TrapModel::calibrated();
        let i = CALIBRATION_INTENSITY;
        // boundary at 10.05 s falls inside a 0.1 s step
        let sched = IntensitySchedule::from_durations(&[(10.05, i), (20.0, 0.0)]).unwrap();
        let sim = simulate_sensitization(&m, &sched, [0.0; 2], 30.0, 0.1).unwrap();
        let last = sim.populations.last().unwrap();
        for (trap, &got) in m.traps.iter().zip(last) {
            let lit = closed_form_population(trap, i, 0.0, 10.05);
            let dark = closed_form_population(trap, 0.0, lit, 30.0 - 10.05);
            assert!((got - dark).abs() < 1e-6 * dark, "{got} vs {dark}");
        }
    }

    #[test]
    fn calibration_constants() {
        let m = TrapModel::calibrated();
        let i = CALIBRATION_INTENSITY;
        assert!((m.traps[0].equilibrium(i) - 0.8).abs() < 1e-12);
        assert!((m.traps[1].equilibrium(i) - 0.5).abs() < 1e-12);
        let sat = m.sensitivity(&[0.8, 0.5]);
        assert!((sat - 16.0).abs() < 1e-9);
    }

    #[test]
    fn schedule_lookup() {
        let s = IntensitySchedule::from_durations(&[(1.0, 2.0), (1.0, 0.0)]).unwrap();
        assert_eq!(s.intensity_at(0.5), Some(2.0));
        assert_eq!(s.intensity_at(1.0), Some(0.0));
        assert_eq!(s.intensity_at(2.0), Some(0.0));
        assert_eq!(s.intensity_at(2.5), None);
        assert!(IntensitySchedule::from_durations(&[(0.0, 1.0)]).is_err());
    }
}
