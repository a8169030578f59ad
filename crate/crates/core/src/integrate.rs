//! Fixed-step classical Runge-Kutta helpers shared by the ODE solvers.

use crate::error::{Error, Result};

/// Number of uniform steps covering `[t0, t1]` with step at most `dt`, and the
/// resulting step length.
pub fn step_count(t0: f64, t1: f64, dt: f64) -> Result<(usize, f64)> {
    let span = t1 - t0;
    if !(dt > 0.0) || !dt.is_finite() || !(span > 0.0) || dt > span * (1.0 + 1e-12) {
        return Err(Error::StepSize { dt, span });
    }
    let n = ((span / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok((n, span / n as f64))
}

/// One classical fourth-order step of `y' = f(t, y)`.
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, y: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let axpy = |a: &[f64; N], s: f64, b: &[f64; N]| {
        let mut out = *a;
        for (o, bi) in out.iter_mut().zip(b) {
            *o += s * bi;
        }
        out
    };
    let k1 = f(t, y)?;
    let k2 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k1))?;
    let k3 = f(t + 0.5 * h, &axpy(y, 0.5 * h, &k2))?;
    let k4 = f(t + h, &axpy(y, h, &k3))?;
    let mut out = *y;
    for i in 0..N {
        out[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

/// Trapezoidal rule on a uniform grid.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => h * (0.5 * (values[0] + values[n - 1]) + values[1..n - 1].iter().sum::<f64>()),
    }
}

/// Cubic Hermite interpolation between two samples with known derivatives,
/// evaluated at fraction `s` of the interval of length `h`.
pub fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, s: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    (2.0 * s3 - 3.0 * s2 + 1.0) * y0
        + (s3 - 2.0 * s2 + s) * h * d0
        + (-2.0 * s3 + 3.0 * s2) * y1
        + (s3 - s2) * h * d1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_count_covers_interval() {
        let (n, h) = step_count(0.0, 1.0, 1e-3).unwrap();
        assert_eq!(n, 1000);
        assert!((h - 1e-3).abs() < 1e-15);
        let (n, h) = step_count(0.0, 1.0, 0.3).unwrap();
        assert_eq!(n, 4);
        assert!((h - 0.25).abs() < 1e-15);
        assert!(step_count(0.0, 1.0, 2.0).is_err());
        assert!(step_count(0.0, 1.0, 0.0).is_err());
        assert!(step_count(1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn rk4_is_exact_on_cubics() {
        // y' = 3t^2 integrates exactly with a 4th-order method.
        let f = |t: f64, _y: &[f64; 1]| Ok([3.0 * t * t]);
        let y = rk4_step(&f, 0.0, &[0.0], 2.0).unwrap();
        assert!((y[0] - 8.0).abs() < 1e-12);
    }

    #[test]
    fn trapezoid_constant() {
        assert!((trapezoid(&[2.0; 11], 0.1) - 2.0).abs() < 1e-14);
        assert_eq!(trapezoid(&[1.0], 0.1), 0.0);
    }

    #[test]
    fn hermite_reproduces_cubic() {
        let p = |t: f64| t * t * t - 2.0 * t + 1.0;
        let dp = |t: f64| 3.0 * t * t - 2.0;
        let (a, h) = (0.3, 0.5);
        for s in [0.0, 0.25, 0.5, 0.9, 1.0] {
            let v = hermite(p(a), dp(a), p(a + h), dp(a + h), h, s);
            assert!((v - p(a + s * h)).abs() < 1e-13);
        }
    }
}
