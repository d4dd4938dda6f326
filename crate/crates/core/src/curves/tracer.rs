//! Zero sets of real functions on a parameter rectangle by seeding on a grid
//! and predictor-corrector continuation.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::phase::polyline_distance;
use crate::poly::ParameterDomain;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ZeroSetOptions {
    pub grid_n: usize,
    /// Accepted `|f|` at curve samples, relative to the local gradient times
    /// the domain diameter.
    pub eps_curve: f64,
    /// Largest step as a fraction of the domain diameter.
    pub h_max_rel: f64,
    pub h_min_rel: f64,
    /// Gradient magnitude (relative to `f` scale / diameter) flagged as a bifurcation.
    pub eps_bif: f64,
    pub max_points: usize,
}

impl Default for ZeroSetOptions {
    fn default() -> Self {
        Self {
            grid_n: 40,
            eps_curve: 1e-10,
            h_max_rel: 0.01,
            h_min_rel: 1e-7,
            eps_bif: 1e-9,
            max_points: 20_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    Boundary,
    Excluded,
    Bifurcation,
    Closed,
    Stalled,
}

/// A traced component of the zero set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Polyline {
    pub points: Vec<Complex64>,
    pub start: StopReason,
    pub end: StopReason,
}

struct Tracer<'a, F> {
    f: &'a F,
    domain: &'a ParameterDomain,
    opts: &'a ZeroSetOptions,
    diam: f64,
    fd: f64,
}

impl<F: Fn(Complex64) -> Option<f64> + Sync> Tracer<'_, F> {
    fn eval(&self, z: Complex64) -> Option<f64> {
        if self.domain.is_excluded(z) {
            return None;
        }
        (self.f)(z).filter(|v| v.is_finite())
    }

    fn gradient(&self, z: Complex64) -> Option<Complex64> {
        let d = self.fd;
        let gx = (self.eval(z + d)? - self.eval(z - d)?) / (2.0 * d);
        let gy = (self.eval(z + Complex64::new(0.0, d))? - self.eval(z - Complex64::new(0.0, d))?) / (2.0 * d);
        Some(Complex64::new(gx, gy))
    }

    /// Newton iteration along `normal` from `z`.
    fn correct(&self, mut z: Complex64, normal: Complex64, slope: f64, max_shift: f64) -> Option<Complex64> {
        let origin = z;
        let mut value = self.eval(z)?;
        for _ in 0..12 {
            if value.abs() <= self.tolerance(slope) {
                return Some(z);
            }
            z -= normal * (value / slope);
            if (z - origin).norm() > max_shift {
                return None;
            }
            value = self.eval(z)?;
        }
        (value.abs() <= self.tolerance(slope)).then_some(z)
    }

    fn tolerance(&self, slope: f64) -> f64 {
        self.opts.eps_curve * slope * self.diam
    }

    /// Intersection of the segment `inside → outside` with the rectangle.
    fn clip(&self, inside: Complex64, outside: Complex64) -> Complex64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.domain.in_rectangle(inside + (outside - inside) * mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        inside + (outside - inside) * lo
    }

    fn stall_reason(&self, z: Complex64, h_max: f64) -> StopReason {
        let near_excluded = self
            .domain
            .excluded
            .iter()
            .any(|d| (z - d.center).norm() < d.radius + 4.0 * h_max);
        if near_excluded {
            StopReason::Excluded
        } else {
            StopReason::Stalled
        }
    }

    /// Continues from `seed` in the direction of `tangent0`.
    fn march(&self, seed: Complex64, tangent0: Complex64) -> (Vec<Complex64>, StopReason) {
        let h_max = self.opts.h_max_rel * self.diam;
        let h_min = self.opts.h_min_rel * self.diam;
        let mut points = vec![seed];
        let mut z = seed;
        let mut tangent = tangent0;
        let mut h = h_max;
        while points.len() < self.opts.max_points {
            let Some(g) = self.gradient(z) else {
                return (points, self.stall_reason(z, h_max));
            };
            if g.norm() < self.opts.eps_bif {
                return (points, StopReason::Bifurcation);
            }
            let mut t = Complex64::i() * g / g.norm();
            if (t * tangent.conj()).re < 0.0 {
                t = -t;
            }
            let accepted = loop {
                if h < h_min {
                    break None;
                }
                let zp = z + t * h;
                if !self.domain.in_rectangle(zp) {
                    let edge = self.clip(z, zp);
                    if (edge - z).norm() < h_min {
                        return (points, StopReason::Boundary);
                    }
                    // Land on the boundary.
                    match self.correct(edge, g / g.norm(), g.norm(), 0.5 * h) {
                        Some(zc) if self.domain.in_rectangle(zc) => {
                            points.push(zc);
                        }
                        _ => points.push(edge),
                    }
                    return (points, StopReason::Boundary);
                }
                if self.domain.is_excluded(zp) {
                    h *= 0.5;
                    if h < h_min {
                        return (points, StopReason::Excluded);
                    }
                    continue;
                }
                match self.correct(zp, g / g.norm(), g.norm(), 0.5 * h) {
                    Some(zc) if self.domain.in_rectangle(zc) && !self.domain.is_excluded(zc) => {
                        let step = zc - z;
                        if (step * t.conj()).re <= 0.0 || (step / step.norm() * t.conj()).arg().abs() > 0.3 {
                            h *= 0.5;
                            continue;
                        }
                        break Some(zc);
                    }
                    _ => {
                        h *= 0.5;
                    }
                }
            };
            let Some(zc) = accepted else {
                return (points, self.stall_reason(z, h_max));
            };
            tangent = t;
            z = zc;
            points.push(z);
            if points.len() > 3 && (z - seed).norm() < 0.75 * h {
                points.push(seed);
                return (points, StopReason::Closed);
            }
            h = (h * 1.5).min(h_max);
        }
        (points, StopReason::Stalled)
    }

    fn bisect(&self, mut a: Complex64, mut fa: f64, mut b: Complex64) -> Complex64 {
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let Some(fm) = self.eval(m) else { return m };
            if fm == 0.0 {
                return m;
            }
            if (fm > 0.0) == (fa > 0.0) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
            if (b - a).norm() < 1e-15 * self.diam {
                break;
            }
        }
        0.5 * (a + b)
    }
}

/// Zero set of `f` in `domain`. `f` returns `None` where it cannot be evaluated.
pub fn trace_zero_set<F>(f: &F, domain: &ParameterDomain, opts: &ZeroSetOptions) -> Result<Vec<Polyline>>
where
    F: Fn(Complex64) -> Option<f64> + Sync,
{
    if opts.grid_n < 2 {
        return Err(Error::Validation("grid_n must be at least 2".into()));
    }
    domain.validate()?;
    let tracer = Tracer {
        f,
        domain,
        opts,
        diam: domain.diameter(),
        fd: 1e-6 * domain.diameter(),
    };
    let n = opts.grid_n;
    let (ll, w, h) = (domain.lower_left, domain.width(), domain.height());
    let node = |i: usize, j: usize| ll + Complex64::new(w * i as f64 / n as f64, h * j as f64 / n as f64);
    let values: Vec<Option<f64>> = (0..(n + 1) * (n + 1))
        .into_par_iter()
        .map(|k| tracer.eval(node(k % (n + 1), k / (n + 1))))
        .collect();
    let value = |i: usize, j: usize| values[j * (n + 1) + i];

    let mut brackets = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            let here = value(i, j);
            for (di, dj) in [(1, 0), (0, 1)] {
                if i + di > n || j + dj > n {
                    continue;
                }
                if let (Some(fa), Some(fb)) = (here, value(i + di, j + dj)) {
                    if (fa > 0.0) != (fb > 0.0) || fa == 0.0 {
                        brackets.push((node(i, j), fa, node(i + di, j + dj), fb));
                    }
                }
            }
        }
    }
    let seeds: Vec<Complex64> = brackets
        .par_iter()
        .filter_map(|&(a, fa, b, fb)| {
            let z = tracer.bisect(a, fa, b);
            let fz = tracer.eval(z)?;
            let g = tracer.gradient(z)?;
            // Sign changes across jumps of f are not zeros.
            let scale = g.norm() * (b - a).norm();
            (fz.abs() <= 1e-6 * (fa.abs() + fb.abs()).min(scale.max(1e-300)) || fz == 0.0).then_some(z)
        })
        .collect();

    let cell = w.max(h) / n as f64;
    let mut curves: Vec<Polyline> = Vec::new();
    for seed in seeds {
        if curves.iter().any(|c| polyline_distance(&c.points, seed) < 0.5 * cell) {
            continue;
        }
        let Some(g) = tracer.gradient(seed) else { continue };
        if g.norm() < opts.eps_bif {
            continue;
        }
        let t = Complex64::i() * g / g.norm();
        let (forward, end) = tracer.march(seed, t);
        if end == StopReason::Closed {
            curves.push(Polyline {
                points: forward,
                start: StopReason::Closed,
                end,
            });
            continue;
        }
        let (mut backward, start) = tracer.march(seed, -t);
        backward.reverse();
        backward.pop();
        backward.extend(forward);
        curves.push(Polyline {
            points: backward,
            start,
            end,
        });
    }
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect() -> ParameterDomain {
        ParameterDomain::new(Complex64::new(-1.0, -1.0), Complex64::new(1.0, 1.0)).unwrap()
    }

    #[test]
    fn vertical_line() {
        let curves = trace_zero_set(&|z: Complex64| Some(z.re - 0.123), &rect(), &ZeroSetOptions::default()).unwrap();
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        assert!(c.points.iter().all(|z| (z.re - 0.123).abs() < 1e-9));
        assert_eq!((c.start, c.end), (StopReason::Boundary, StopReason::Boundary));
        let ys: Vec<f64> = c.points.iter().map(|z| z.im).collect();
        let span = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ys.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((span - 2.0).abs() < 1e-9);
    }

    #[test]
    fn closed_circle() {
        let curves =
            trace_zero_set(&|z: Complex64| Some(z.norm_sqr() - 0.25), &rect(), &ZeroSetOptions::default()).unwrap();
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0].end, StopReason::Closed);
        assert!(curves[0].points.iter().all(|z| (z.norm() - 0.5).abs() < 1e-8));
    }

    #[test]
    fn jumps_are_not_zeros() {
        let f = |z: Complex64| Some(if z.re > 0.3 { 2.0 + z.im } else { -2.0 - z.im });
        let curves = trace_zero_set(&f, &rect(), &ZeroSetOptions::default()).unwrap();
        assert!(curves.is_empty());
    }

    #[test]
    fn stops_at_excluded_disc() {
        let mut g = rect();
        g.excluded.push(crate::poly::Disc {
            center: Complex64::new(0.0, 0.0),
            radius: 0.2,
        });
        let curves = trace_zero_set(&|z: Complex64| Some(z.re), &g, &ZeroSetOptions::default()).unwrap();
        assert_eq!(curves.len(), 2, "{curves:?}");
        for c in curves {
            assert!(c.start == StopReason::Excluded || c.end == StopReason::Excluded, "{:?} {:?} {:?} {:?}", c.start, c.end, c.points.first(), c.points.last());
        }
    }
}
