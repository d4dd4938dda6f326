//! Integration of single Stokes lines `Re S(z_j, z; λ) = 0`.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::{StokesLine, Terminus, TraceOptions};
use crate::error::{Error, Result};
use crate::phase::{action_integral, segment_distance, sqrt_near, BranchState, ContourPath};
use crate::poly::{normalize_angle, BivariatePotential, SectorData, TurningPointSet};
use crate::quadrature::{gk15_from_values, kronrod_nodes};

/// `c` in `P(z) ≈ c (z - z_j)^m` near the turning point with index `idx`.
pub fn local_coefficient(p: &BivariatePotential, tps: &TurningPointSet, idx: usize) -> Complex64 {
    let zj = tps.points[idx].z;
    tps.points
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != idx)
        .fold(p.leading(tps.lambda), |acc, (_, t)| acc * (zj - t.z).powu(t.multiplicity as u32))
}

/// Initial directions of the `m + 2` lines leaving a turning point.
pub fn initial_directions(c: Complex64, multiplicity: usize) -> Vec<f64> {
    let count = (multiplicity + 2) as f64;
    (0..multiplicity + 2)
        .map(|k| normalize_angle((PI - c.arg() + 2.0 * PI * k as f64) / count))
        .collect()
}

fn unit_direction(w: Complex64) -> Complex64 {
    Complex64::i() * w.conj() / w.norm()
}

/// `∫ √P` along the chord `z0 → z1` with the branch interpolated between the
/// endpoint values.
fn chord_integral(
    p: &BivariatePotential,
    lambda: Complex64,
    z0: Complex64,
    w0: Complex64,
    z1: Complex64,
    w1: Complex64,
    depth: usize,
) -> Complex64 {
    let nodes = kronrod_nodes(0.0, 1.0);
    let dz = z1 - z0;
    let mut values = [Complex64::new(0.0, 0.0); 15];
    for (v, &t) in values.iter_mut().zip(&nodes) {
        let reference = w0 + (w1 - w0) * t;
        *v = sqrt_near(p.eval(z0 + dz * t, lambda), reference) * dz;
    }
    let (value, err) = gk15_from_values(0.0, 1.0, &values);
    if err <= 1e-14 * (value.norm() + 1e-300) || depth >= 8 {
        return value;
    }
    let zm = 0.5 * (z0 + z1);
    let wm = sqrt_near(p.eval(zm, lambda), 0.5 * (w0 + w1));
    chord_integral(p, lambda, z0, w0, zm, wm, depth + 1) + chord_integral(p, lambda, zm, wm, z1, w1, depth + 1)
}

pub(super) struct LineTracer<'a> {
    pub p: &'a BivariatePotential,
    pub tps: &'a TurningPointSet,
    pub sectors: &'a SectorData,
    pub opts: &'a TraceOptions,
    pub scale: f64,
    pub r_esc: f64,
}

impl LineTracer<'_> {
    fn lambda(&self) -> Complex64 {
        self.tps.lambda
    }

    fn separation(&self, idx: usize) -> f64 {
        let z = self.tps.points[idx].z;
        self.tps
            .points
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != idx)
            .map(|(_, t)| (t.z - z).norm())
            .fold(f64::INFINITY, f64::min)
    }

    /// Newton projection of `z` onto `Re S = 0`.
    fn project(
        &self,
        anchor: (Complex64, Complex64, Complex64),
        mut z: Complex64,
        mut w: Complex64,
    ) -> (Complex64, Complex64, Complex64) {
        let (za, wa, sa) = anchor;
        let lambda = self.lambda();
        let mut s = sa + chord_integral(self.p, lambda, za, wa, z, w, 0);
        for _ in 0..6 {
            if s.re.abs() <= 1e-13 * (1.0 + s.norm()) {
                break;
            }
            let dz = -s.re * w.conj() / w.norm_sqr();
            z += dz;
            w = sqrt_near(self.p.eval(z, lambda), w);
            s = sa + chord_integral(self.p, lambda, za, wa, z, w, 0);
        }
        (z, w, s)
    }

    pub fn trace(&self, idx: usize, theta: f64) -> Result<StokesLine> {
        let lambda = self.lambda();
        let origin = self.tps.points[idx];
        let zj = origin.z;
        let sep = self.separation(idx);
        let r0 = self.opts.r0_rel * sep.min(self.scale);

        let dir = Complex64::from_polar(1.0, theta);
        let mut z = zj + dir * r0;
        let mut w = self.p.eval(z, lambda).sqrt();
        if (unit_direction(w) * dir.conj()).re < 0.0 {
            w = -w;
        }
        let start = action_integral(
            self.p,
            lambda,
            zj,
            z,
            BranchState { anchor: z, value: w },
            &ContourPath::straight(zj, z),
        )?;
        let mut s = start.value;
        // Project the starting point onto the line.
        for _ in 0..6 {
            if s.re.abs() <= 1e-13 * (1.0 + s.norm()) {
                break;
            }
            let dz = -s.re * w.conj() / w.norm_sqr();
            let zn = z + dz;
            let wn = sqrt_near(self.p.eval(zn, lambda), w);
            s += chord_integral(self.p, lambda, z, w, zn, wn, 0);
            z = zn;
            w = wn;
        }

        let mut samples = vec![zj, z];
        let mut h = r0;
        let hit_radius: Vec<f64> = (0..self.tps.len())
            .map(|l| self.opts.eps_hit_rel * self.separation(l).min(self.scale))
            .collect();

        for _ in 0..self.opts.max_steps {
            let d_other = self
                .tps
                .points
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != idx)
                .map(|(_, t)| (t.z - z).norm())
                .fold(f64::INFINITY, f64::min);
            let d_origin = (z - zj).norm();
            let far = (z - self.sectors.center).norm();
            let cap = (self.opts.h_max_rel * (self.scale + far))
                .min(0.3 * d_other)
                .min(0.5 * d_origin);
            h = h.min(cap);
            if h < 1e-14 * self.scale {
                return Err(Error::StepCollapse(origin.label, z));
            }

            let u1 = unit_direction(w);
            let zm = z + u1 * (0.5 * h);
            let wm = sqrt_near(self.p.eval(zm, lambda), w);
            let u2 = unit_direction(wm);
            if (u2 * u1.conj()).arg().abs() > self.opts.turn_tol {
                h *= 0.5;
                continue;
            }
            let zp = z + u2 * h;
            let wp = sqrt_near(self.p.eval(zp, lambda), wm);
            let (zn, wn, sn) = self.project((z, w, s), zp, wp);
            if (sn - s).im <= 0.0 || (zn - zp).norm() > 0.25 * h {
                h *= 0.5;
                continue;
            }

            for (l, t) in self.tps.points.iter().enumerate() {
                if l != idx && segment_distance(z, zn, t.z) < hit_radius[l] {
                    samples.push(t.z);
                    return Ok(StokesLine {
                        origin: origin.label,
                        initial_angle: theta,
                        samples,
                        terminus: Terminus::Hits(t.label),
                    });
                }
            }

            z = zn;
            w = wn;
            s = sn;
            samples.push(z);
            h *= 1.5;

            let far = (z - self.sectors.center).norm();
            if far > self.r_esc {
                let angle = normalize_angle((z - self.sectors.center).arg());
                let (sector, dist) = self.sectors.nearest(angle);
                if dist <= 0.5 * self.opts.eps_ang || far > self.opts.escape_span * self.r_esc {
                    if dist > self.opts.eps_ang {
                        return Err(Error::AsymptoteMismatch(origin.label, angle));
                    }
                    return Ok(StokesLine {
                        origin: origin.label,
                        initial_angle: theta,
                        samples,
                        terminus: Terminus::Escapes { sector, angle },
                    });
                }
            }
        }
        Err(Error::StepCollapse(origin.label, z))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn directions_for_simple_and_double_points() {
        let dirs = initial_directions(Complex64::i(), 1);
        let expected = [PI / 6.0, 5.0 * PI / 6.0, 1.5 * PI];
        for (d, e) in dirs.iter().zip(expected) {
            assert!((d - e).abs() < 1e-14);
        }
        assert_eq!(initial_directions(Complex64::new(1.0, 0.0), 2).len(), 4);
    }

    #[test]
    fn chord_integral_of_linear_potential() {
        let p = BivariatePotential::new(vec![vec![Complex64::new(1.0, 0.0)], vec![Complex64::new(1.0, 0.0)]]).unwrap();
        let (z0, z1) = (Complex64::new(0.0, 0.0), Complex64::new(3.0, 0.0));
        let v = chord_integral(&p, Complex64::new(0.0, 0.0), z0, Complex64::new(1.0, 0.0), z1, Complex64::new(2.0, 0.0), 0);
        assert!((v.re - 14.0 / 3.0).abs() < 1e-13);
    }
}
