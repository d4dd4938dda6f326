//! Adaptive Dormand–Prince 5(4) integration of complex linear systems along a
//! straight segment `z(t) = z0 + t (z1 - z0)`, `t ∈ [0, 1]`.

use num_complex::Complex64;

use crate::error::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Tolerances and step limits.
#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Rescale the state when its norm exceeds this value.
    pub renormalize_above: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-14,
            max_steps: 2_000_000,
            renormalize_above: std::f64::consts::E,
        }
    }
}

/// Final state `y · e^{log_scale}`.
#[derive(Clone, Copy, Debug)]
pub struct ScaledState<const N: usize> {
    pub y: [Complex64; N],
    pub log_scale: f64,
    pub steps: usize,
}

fn norm<const N: usize>(y: &[Complex64; N]) -> f64 {
    y.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Integrates `dy/dz = f(z, y)` from `z0` to `z1` along the segment, with the
/// error controlled in the Euclidean norm of the whole state. The state
/// is renormalized whenever it grows past `renormalize_above`, with the
/// accumulated logarithm returned alongside.
pub fn integrate_segment<const N: usize, F>(
    mut f: F,
    z0: Complex64,
    z1: Complex64,
    y0: [Complex64; N],
    opts: &OdeOptions,
) -> Result<ScaledState<N>>
where
    F: FnMut(Complex64, &[Complex64; N]) -> [Complex64; N],
{
    let dz = z1 - z0;
    let mut rhs = |t: f64, y: &[Complex64; N]| {
        let mut d = f(z0 + dz * t, y);
        for v in d.iter_mut() {
            *v *= dz;
        }
        d
    };

    let mut y = y0;
    let mut log_scale = 0.0;
    let n0 = norm(&y);
    if n0 > 0.0 && n0 != 1.0 {
        for v in y.iter_mut() {
            *v /= n0;
        }
        log_scale = n0.ln();
    }
    let mut t = 0.0;
    let mut h = 1e-3_f64;
    let mut k1 = rhs(t, &y);
    let mut steps = 0;
    while t < 1.0 {
        if steps >= opts.max_steps {
            return Err(Error::Integration(format!("step limit reached at t = {t}")));
        }
        h = h.min(1.0 - t);
        let mut k = [[Complex64::new(0.0, 0.0); N]; 7];
        k[0] = k1;
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                for j in 0..s {
                    *v += k[j][i] * (h * A[s][j]);
                }
            }
            k[s] = rhs(t + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err = 0.0_f64;
        let scale = norm(&y);
        for i in 0..N {
            let mut d5 = Complex64::new(0.0, 0.0);
            let mut d4 = Complex64::new(0.0, 0.0);
            for s in 0..7 {
                d5 += k[s][i] * B5[s];
                d4 += k[s][i] * B4[s];
            }
            y5[i] += d5 * h;
            err += ((d5 - d4) * h).norm_sqr();
        }
        let err = err.sqrt() / (opts.atol + opts.rtol * scale.max(norm(&y5)));
        if !err.is_finite() {
            h *= 0.1;
            if h < 1e-300 {
                return Err(Error::Integration("non-finite derivative".into()));
            }
            continue;
        }
        steps += 1;
        if err <= 1.0 {
            t += h;
            y = y5;
            k1 = k[6];
            let n = norm(&y);
            if n > opts.renormalize_above || (n > 0.0 && n < 1.0 / opts.renormalize_above) {
                for v in y.iter_mut() {
                    *v /= n;
                }
                for v in k1.iter_mut() {
                    *v /= n;
                }
                log_scale += n.ln();
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h < 1e-15 {
            return Err(Error::Integration(format!("step size underflow at t = {t}")));
        }
    }
    Ok(ScaledState { y, log_scale, steps })
}

/// Options for [`integrate_polynomial`].
#[derive(Clone, Copy, Debug)]
pub struct TaylorOptions {
    /// Bound on `k h sqrt(max |P|)` per step, limiting cancellation in the series.
    pub reach: f64,
    pub max_order: usize,
    pub tol: f64,
    pub max_steps: usize,
}

impl Default for TaylorOptions {
    fn default() -> Self {
        Self {
            reach: 4.0,
            max_order: 120,
            tol: 1e-15,
            max_steps: 1_000_000,
        }
    }
}

/// Coefficients of `p(z + c)` in powers of `z`.
fn taylor_shift(p: &[Complex64], c: Complex64) -> Vec<Complex64> {
    let mut q = p.to_vec();
    let n = q.len();
    for i in 0..n {
        for j in (i..n - 1).rev() {
            let v = q[j + 1] * c;
            q[j] += v;
        }
    }
    q
}

/// Solves `y'' = k² P(z) y` for polynomial `P` (ascending coefficients) along
/// the segment `z0 → z1` by Taylor series. The state is `(y, y'/k)`.
pub fn integrate_polynomial(
    p: &[Complex64],
    k: f64,
    z0: Complex64,
    z1: Complex64,
    y0: [Complex64; 2],
    opts: &TaylorOptions,
) -> Result<ScaledState<2>> {
    let zero = Complex64::new(0.0, 0.0);
    let length = (z1 - z0).norm();
    let dir = if length > 0.0 { (z1 - z0) / length } else { Complex64::new(1.0, 0.0) };
    let mut y = y0;
    let mut log_scale = 0.0;
    let n0 = norm(&y);
    if n0 > 0.0 {
        y = [y[0] / n0, y[1] / n0];
        log_scale = n0.ln();
    }
    let mut s = 0.0;
    let mut steps = 0;
    let mut d = vec![zero; opts.max_order + 1];
    while s < length {
        if steps >= opts.max_steps {
            return Err(Error::Integration(format!("step limit reached at {}", z0 + dir * s)));
        }
        let zc = z0 + dir * s;
        let q = taylor_shift(p, zc);
        let bound = |h: f64| q.iter().rev().fold(0.0, |acc, c| acc * h + c.norm());
        let mut h = length - s;
        while k * h * bound(h).sqrt() > opts.reach {
            h *= 0.5;
        }
        loop {
            let t = dir * h;
            let kt = k * t;
            // d_n = c_n t^n, with d_{n+2} (n+2)(n+1) = (k t)² Σ_j q_j t^j d_{n-j}.
            let qt: Vec<Complex64> = q.iter().scan(Complex64::new(1.0, 0.0), |pw, c| {
                let v = c * *pw;
                *pw *= t;
                Some(v)
            }).collect();
            d[0] = y[0];
            d[1] = kt * y[1];
            let (mut sum0, mut sum1) = (d[0] + d[1], d[1]);
            let mut converged = false;
            for n in 0..opts.max_order - 1 {
                let mut acc = zero;
                for (j, c) in qt.iter().enumerate().take(n + 1) {
                    acc += c * d[n - j];
                }
                let m = n + 2;
                d[m] = kt * kt * acc / ((m * (m - 1)) as f64);
                sum0 += d[m];
                sum1 += d[m] * m as f64;
                let scale = sum0.norm() + sum1.norm() + 1e-300;
                if m > qt.len() + 2
                    && (d[m].norm() + d[m - 1].norm() + d[m - 2].norm()) * (m as f64) <= opts.tol * scale
                {
                    converged = true;
                    break;
                }
            }
            if converged {
                y = [sum0, sum1 / kt];
                break;
            }
            h *= 0.5;
            if h < 1e-14 * (1.0 + length) {
                return Err(Error::Integration(format!("series did not converge at {zc}")));
            }
        }
        s += h;
        steps += 1;
        let n = norm(&y);
        if !n.is_finite() {
            return Err(Error::Integration(format!("non-finite state at {}", z0 + dir * s)));
        }
        if n > 0.0 {
            y = [y[0] / n, y[1] / n];
            log_scale += n.ln();
        }
    }
    Ok(ScaledState { y, log_scale, steps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn exponential_along_complex_segment() {
        let z1 = c(0.7, -1.3);
        let out = integrate_segment(|_, y: &[Complex64; 1]| [y[0] * c(2.0, 1.0)], c(0.0, 0.0), z1, [c(1.0, 0.0)], &OdeOptions::default()).unwrap();
        let value = out.y[0] * out.log_scale.exp();
        let exact = (c(2.0, 1.0) * z1).exp();
        assert!((value - exact).norm() < 1e-9 * exact.norm());
    }

    #[test]
    fn harmonic_oscillator_with_large_growth() {
        // y'' = 400 y from 0 to 1: y = sinh(20 z)/20, tracked in log scale.
        let out = integrate_segment(
            |_, y: &[Complex64; 2]| [y[1], y[0] * 400.0],
            c(0.0, 0.0),
            c(1.0, 0.0),
            [c(0.0, 0.0), c(1.0, 0.0)],
            &OdeOptions::default(),
        )
        .unwrap();
        let log_y = (out.y[0].norm()).ln() + out.log_scale;
        let exact = (20.0f64.sinh() / 20.0).ln();
        assert!((log_y - exact).abs() < 1e-8);
    }

    #[test]
    fn taylor_shift_matches_direct_evaluation() {
        let p = [c(1.0, 2.0), c(-0.5, 0.0), c(0.0, 3.0)];
        let q = taylor_shift(&p, c(0.3, -0.7));
        let x = c(0.2, 0.1);
        let direct = crate::roots::horner(&p, x + c(0.3, -0.7));
        assert!((crate::roots::horner(&q, x) - direct).norm() < 1e-14);
    }

    #[test]
    fn taylor_agrees_with_runge_kutta() {
        // Airy-type equation y'' = k² i (z - λ) y.
        let k = 30.0;
        let lambda = c(0.2, -0.4);
        let p = [c(0.0, 1.0) * -lambda, c(0.0, 1.0)];
        let (z0, z1) = (c(-1.0, 0.0), c(1.0, 0.0));
        let y0 = [c(0.0, 0.0), c(1.0, 0.0)];
        let ts = integrate_polynomial(&p, k, z0, z1, y0, &TaylorOptions::default()).unwrap();
        let rk = integrate_segment(
            |z, y: &[Complex64; 2]| [k * y[1], k * crate::roots::horner(&p, z) * y[0]],
            z0,
            z1,
            y0,
            &OdeOptions { rtol: 1e-12, ..OdeOptions::default() },
        )
        .unwrap();
        let shift = (rk.log_scale - ts.log_scale).exp();
        for i in 0..2 {
            assert!((ts.y[i] - rk.y[i] * shift).norm() < 1e-9, "{:?} {:?}", ts.y, rk.y);
        }
        assert!(ts.steps < rk.steps / 10);
    }
}
