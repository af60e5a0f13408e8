use nalgebra::{DMatrix, Matrix5, Vector5};
use serde::{Deserialize, Serialize};

use super::Trace;
use crate::error::{Error, Result};

/// `A1·exp(−t/τ1) + A2·exp(−t/τ2) + C`, with τ1 > τ2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub a1: f64,
    pub tau1: f64,
    pub a2: f64,
    pub tau2: f64,
    pub offset: f64,
    /// Root-mean-square of the unweighted residuals.
    pub rms_residual: f64,
    pub iterations: usize,
    /// False means the parameters are unreliable.
    pub converged: bool,
}

impl DecayFit {
    pub fn eval(&self, t: f64) -> f64 {
        self.a1 * (-t / self.tau1).exp() + self.a2 * (-t / self.tau2).exp() + self.offset
    }

    /// Residuals `y − model` at each trace point.
    pub fn residuals(&self, trace: &Trace) -> Vec<f64> {
        trace
            .times
            .iter()
            .zip(&trace.values)
            .map(|(&t, &y)| y - self.eval(t))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step lowers the cost by less than this fraction.
    pub relative_tolerance: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iterations: 200,
            relative_tolerance: 1e-10,
        }
    }
}

const MIN_POINTS: usize = 5;
const INITIAL_DAMPING: f64 = 1e-3;
const MAX_DAMPING: f64 = 1e16;

/// Parameter vector order: A1, τ1, A2, τ2, C.
fn model(p: &Vector5<f64>, t: f64) -> f64 {
    p[0] * (-t / p[1]).exp() + p[2] * (-t / p[3]).exp() + p[4]
}

fn gradient(p: &Vector5<f64>, t: f64) -> Vector5<f64> {
    let e1 = (-t / p[1]).exp();
    let e2 = (-t / p[3]).exp();
    Vector5::new(
        e1,
        p[0] * e1 * t / (p[1] * p[1]),
        e2,
        p[2] * e2 * t / (p[3] * p[3]),
        1.0,
    )
}

struct Problem<'a> {
    t: &'a [f64],
    y: &'a [f64],
    w: Vec<f64>,
}

impl Problem<'_> {
    fn cost(&self, p: &Vector5<f64>) -> f64 {
        self.t
            .iter()
            .zip(self.y)
            .zip(&self.w)
            .map(|((&t, &y), &w)| {
                let r = y - model(p, t);
                w * r * r
            })
            .sum()
    }

    /// `JᵀWJ` and `JᵀW·r` with `r = y − model`.
    fn normal_equations(&self, p: &Vector5<f64>) -> (Matrix5<f64>, Vector5<f64>) {
        let mut jtj = Matrix5::zeros();
        let mut jtr = Vector5::zeros();
        for ((&t, &y), &w) in self.t.iter().zip(self.y).zip(&self.w) {
            let g = gradient(p, t);
            let r = y - model(p, t);
            jtj += w * g * g.transpose();
            jtr += w * r * g;
        }
        (jtj, jtr)
    }

    /// Jacobian with columns scaled to unit norm, for a conditioning check.
    fn scaled_jacobian(&self, p: &Vector5<f64>) -> DMatrix<f64> {
        let mut j = DMatrix::zeros(self.t.len(), 5);
        for (row, (&t, &w)) in self.t.iter().zip(&self.w).enumerate() {
            let g = gradient(p, t) * w.sqrt();
            for c in 0..5 {
                j[(row, c)] = g[c];
            }
        }
        for mut col in j.column_iter_mut() {
            let norm = col.norm();
            if norm > 0.0 {
                col /= norm;
            }
        }
        j
    }
}

/// Least-squares slope and intercept of `ln(y)` against `t` over points with `y > 0`.
fn log_linear(t: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let pts: Vec<(f64, f64)> = t
        .iter()
        .zip(y)
        .filter(|(_, &v)| v > 0.0)
        .map(|(&t, &v)| (t, v.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, ml - slope * mt))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Initial guess: Aitken extrapolation of the tail for C, log-linear slope
/// of the last third for τ1, and of the early residual for τ2.
fn initial_guess(t: &[f64], y: &[f64]) -> Vector5<f64> {
    let n = t.len();
    let span = t[n - 1] - t[0];
    let tail = (2 * n) / 3;
    let (tt, ty) = (&t[tail..], &y[tail..]);

    // Three equal windows of the tail, averaged to tame noise.
    let w = (ty.len() / 3).max(1);
    let y0 = mean(&ty[..w]);
    let y1 = mean(&ty[(ty.len() - w) / 2..(ty.len() - w) / 2 + w]);
    let y2 = mean(&ty[ty.len() - w..]);
    let denom = y0 + y2 - 2.0 * y1;
    let y_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    let y_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let range = (y_max - y_min).max(f64::MIN_POSITIVE);
    let mut offset = if denom.abs() > 1e-12 * range {
        (y0 * y2 - y1 * y1) / denom
    } else {
        y_min
    };
    if !offset.is_finite() || offset >= y2 || offset < y_min - range {
        offset = y_min - 0.05 * range;
    }

    let shifted: Vec<f64> = ty.iter().map(|v| v - offset).collect();
    let (tau1, a1) = match log_linear(tt, &shifted) {
        Some((slope, icept)) if slope < 0.0 => (-1.0 / slope, icept.exp()),
        _ => (span / 2.0, (y[0] - offset) / 2.0),
    };

    let early = n / 3;
    let resid: Vec<f64> = t[..early.max(2)]
        .iter()
        .zip(&y[..early.max(2)])
        .map(|(&ti, &yi)| yi - offset - a1 * (-ti / tau1).exp())
        .collect();
    let (tau2, a2) = match log_linear(&t[..resid.len()], &resid) {
        Some((slope, icept)) if slope < 0.0 && -1.0 / slope < tau1 => (-1.0 / slope, icept.exp()),
        _ => (tau1 / 20.0, resid[0]),
    };
    Vector5::new(a1, tau1, a2, tau2, offset)
}

fn canonical(p: Vector5<f64>) -> Vector5<f64> {
    if p[3] > p[1] {
        Vector5::new(p[2], p[3], p[0], p[1], p[4])
    } else {
        p
    }
}

fn rms(trace: &Trace, p: &Vector5<f64>) -> f64 {
    let s: f64 = trace
        .times
        .iter()
        .zip(&trace.values)
        .map(|(&t, &y)| (y - model(p, t)).powi(2))
        .sum();
    (s / trace.len() as f64).sqrt()
}

/// Damped Gauss-Newton (Levenberg-Marquardt) fit of a bi-exponential plus
/// offset. Inverse-variance weighted when the trace carries sigmas.
pub fn fit_biexponential(trace: &Trace, options: &FitOptions) -> Result<DecayFit> {
    if trace.len() < MIN_POINTS {
        return Err(Error::InvalidArgument(format!(
            "bi-exponential fit needs at least {MIN_POINTS} points, got {}",
            trace.len()
        )));
    }
    let (t, y) = (&trace.times[..], &trace.values[..]);
    let w = match &trace.sigmas {
        Some(s) => s.iter().map(|s| 1.0 / (s * s)).collect(),
        None => vec![1.0; t.len()],
    };
    let problem = Problem { t, y, w };

    let y_mean = mean(y);
    let spread = y.iter().map(|v| (v - y_mean).abs()).fold(0.0, f64::max);
    let flat_fit = DecayFit {
        a1: 0.0,
        tau1: 1.0,
        a2: 0.0,
        tau2: 0.5,
        offset: y_mean,
        rms_residual: (y.iter().map(|v| (v - y_mean).powi(2)).sum::<f64>() / y.len() as f64).sqrt(),
        iterations: 0,
        converged: true,
    };
    if spread <= 1e-12 * y_mean.abs().max(f64::MIN_POSITIVE) {
        return Err(Error::RankDeficient {
            fallback: Box::new(flat_fit),
        });
    }

    let mut p = initial_guess(t, y);
    let mut cost = problem.cost(&p);
    let floor = 1e-30 * problem.w.iter().zip(y).map(|(w, v)| w * v * v).sum::<f64>();
    let mut damping = INITIAL_DAMPING;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < options.max_iterations && !converged {
        iterations += 1;
        let (jtj, jtr) = problem.normal_equations(&p);
        let scale = jtj.diagonal().max().max(f64::MIN_POSITIVE);
        loop {
            let mut a = jtj;
            for i in 0..5 {
                a[(i, i)] += damping * jtj[(i, i)].max(1e-12 * scale);
            }
            let step = a.cholesky().map(|c| c.solve(&jtr));
            let candidate = step.map(|d| p + d);
            let trial = candidate
                .filter(|c| c[1] > 0.0 && c[3] > 0.0 && c.iter().all(|v| v.is_finite()))
                .map(|c| (c, problem.cost(&c)));
            match trial {
                Some((c, c_cost)) if c_cost < cost => {
                    let drop = (cost - c_cost) / cost;
                    p = c;
                    cost = c_cost;
                    damping = (damping / 10.0).max(1e-15);
                    if drop < options.relative_tolerance || cost <= floor {
                        converged = true;
                    }
                    break;
                }
                _ => {
                    damping *= 10.0;
                    if damping > MAX_DAMPING {
                        // No descent direction left at working precision.
                        converged = true;
                        break;
                    }
                }
            }
        }
    }

    let p = canonical(p);
    let fit = DecayFit {
        a1: p[0],
        tau1: p[1],
        a2: p[2],
        tau2: p[3],
        offset: p[4],
        rms_residual: rms(trace, &p),
        iterations,
        converged,
    };
    if !fit.tau1.is_finite() || !fit.tau2.is_finite() {
        return Err(Error::Numeric(
            "fit produced non-finite time constants".into(),
        ));
    }

    let sv = problem.scaled_jacobian(&p).singular_values();
    let (smin, smax) = sv.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &s| {
        (lo.min(s), hi.max(s))
    });
    if !(smin > 1e-10 * smax) {
        return Err(Error::RankDeficient {
            fallback: Box::new(fit),
        });
    }
    Ok(fit)
}
