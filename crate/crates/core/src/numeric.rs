//! Small numerical kernels shared by the physics modules: bracketed
//! bisection, Newton polishing, composite Simpson quadrature and a classical
//! fourth-order Runge-Kutta step.

use crate::error::{Error, Result};

/// Bisection on `[lo, hi]`. The endpoints must bracket a sign change.
///
/// Iterates until the bracket stops shrinking in floating point (or
/// `max_iter`), so the returned point is as close to the root as f64 allows.
pub fn bisect<F>(mut f: F, mut lo: f64, mut hi: f64, max_iter: usize) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSolution(format!(
            "no sign change on [{lo:e}, {hi:e}] (f = {f_lo:e}, {f_hi:e})"
        )));
    }
    for _ in 0..max_iter {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Newton refinement of a bracketed root. Steps leaving `[lo, hi]` are
/// rejected and the current iterate is returned.
pub fn newton_polish<F, D>(f: F, df: D, mut x: f64, lo: f64, hi: f64, steps: usize) -> f64
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    for _ in 0..steps {
        let fx = f(x);
        let dfx = df(x);
        if fx == 0.0 || dfx == 0.0 || !dfx.is_finite() {
            break;
        }
        let next = x - fx / dfx;
        if !(lo..=hi).contains(&next) || next == x {
            break;
        }
        if f(next).abs() >= fx.abs() {
            break;
        }
        x = next;
    }
    x
}

/// Composite Simpson rule with `nodes` equally spaced abscissae (odd, ≥ 3).
pub fn simpson<F>(f: F, a: f64, b: f64, nodes: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    if nodes < 3 {
        return Err(Error::InvalidArgument(format!(
            "Simpson quadrature needs at least 3 nodes, got {nodes}"
        )));
    }
    if nodes.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "Simpson quadrature needs an odd node count, got {nodes}"
        )));
    }
    let intervals = nodes - 1;
    let h = (b - a) / intervals as f64;
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        let x = a + (b - a) * (i as f64 / intervals as f64);
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    Ok(sum * h / 3.0)
}

/// One classical RK4 step for an autonomous-in-segment system of size `N`.
pub fn rk4_step<const N: usize, F>(y: &[f64; N], h: f64, f: F) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let add = |base: &[f64; N], k: &[f64; N], s: f64| {
        let mut out = *base;
        for (o, ki) in out.iter_mut().zip(k) {
            *o += s * ki;
        }
        out
    };
    let k1 = f(y);
    let k2 = f(&add(y, &k1, 0.5 * h));
    let k3 = f(&add(y, &k2, 0.5 * h));
    let k4 = f(&add(y, &k3, h));
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Evenly spaced samples including both endpoints.
pub fn linspace(min: f64, max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..count)
            .map(|i| min + (max - min) * (i as f64 / (count - 1) as f64))
            .collect(),
    }
}

/// Unnormalized sinc, `sin(x)/x`, with a series branch near zero.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 200).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn bisect_rejects_missing_bracket() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 100),
            Err(Error::NoSolution(_))
        ));
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let v = simpson(|x| x * x * x - 2.0 * x + 1.0, 0.0, 2.0, 3).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn simpson_node_count_errors() {
        assert!(simpson(|x| x, 0.0, 1.0, 2).is_err());
        assert!(simpson(|x| x, 0.0, 1.0, 4).is_err());
    }

    #[test]
    fn rk4_matches_exponential() {
        let err = |steps: usize| {
            let mut y = [1.0];
            for _ in 0..steps {
                y = rk4_step(&y, 1.0 / steps as f64, |v| [-v[0]]);
            }
            (y[0] - (-1.0f64).exp()).abs()
        };
        assert!(err(100) < 1e-10);
        // fourth order: halving h cuts the error ≈16×
        let ratio = err(50) / err(100);
        assert!((ratio - 16.0).abs() < 0.5, "{ratio}");
    }

    #[test]
    fn sinc_series_branch_is_continuous() {
        assert_eq!(sinc(0.0), 1.0);
        let x = 1.0000001e-8;
        assert!((sinc(x) - sinc(0.99999e-8)).abs() < 1e-15);
        assert!(sinc(std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn linspace_hits_zero_on_symmetric_grid() {
        let g = linspace(-5e-3, 5e-3, 201);
        assert_eq!(g[100], 0.0);
        assert_eq!(g[0], -5e-3);
        assert_eq!(g[200], 5e-3);
    }
}
