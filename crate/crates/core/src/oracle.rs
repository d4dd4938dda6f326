//! Direct eigenvalue computation: the characteristic determinant by ODE
//! integration and its zeros by the argument principle.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::{integrate_polynomial, integrate_segment, OdeOptions, ScaledState, TaylorOptions};
use crate::phase::segment_distance;
use crate::poly::{turning_points, BivariatePotential, BoundaryPoint, ParameterDomain, DEFAULT_EPS_TP};

/// Default tolerance on the final Newton correction.
const SPLIT_FRACTION: f64 = 0.4613;

pub const DEFAULT_EPS_ORC: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct ProblemInstance {
    pub potential: BivariatePotential,
    pub a: BoundaryPoint,
    pub b: BoundaryPoint,
    pub k: f64,
    /// Radius at which infinite boundary points are truncated.
    pub r_trunc: f64,
    pub integrator: Integrator,
}

/// ODE method used for shooting.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Integrator {
    /// Taylor series, exploiting that `P` is polynomial in `z`.
    #[default]
    Taylor,
    /// Adaptive Dormand–Prince 5(4).
    RungeKutta,
}

impl ProblemInstance {
    pub fn new(potential: BivariatePotential, a: BoundaryPoint, b: BoundaryPoint, k: f64) -> Result<Self> {
        if a == b {
            return Err(Error::Validation("boundary points coincide".into()));
        }
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::Validation(format!("k must be positive, got {k}")));
        }
        Ok(Self {
            potential,
            a,
            b,
            k,
            r_trunc: 10.0,
            integrator: Integrator::default(),
        })
    }

    pub fn with_truncation(mut self, r_trunc: f64) -> Self {
        self.r_trunc = r_trunc;
        self
    }

    fn endpoint(&self, p: BoundaryPoint) -> Complex64 {
        match p {
            BoundaryPoint::Finite(z) => z,
            BoundaryPoint::Infinite { infinite } => Complex64::from_polar(self.r_trunc, infinite),
        }
    }

    /// The integration segment, with infinite points truncated.
    pub fn segment(&self) -> (Complex64, Complex64) {
        (self.endpoint(self.a), self.endpoint(self.b))
    }
}

/// `mantissa · e^{log_factor}` with `|mantissa| ∈ [1, e)` (or exactly zero).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogScaledValue {
    pub mantissa: Complex64,
    pub log_factor: f64,
}

impl LogScaledValue {
    pub fn new(value: Complex64, log_factor: f64) -> Self {
        let r = value.norm();
        if r == 0.0 || !r.is_finite() {
            return Self {
                mantissa: value,
                log_factor: if r == 0.0 { 0.0 } else { log_factor },
            };
        }
        let shift = r.ln().floor();
        let mut mantissa = value * (-shift).exp();
        let mut log_factor = log_factor + shift;
        // Guard against rounding at the interval ends.
        if mantissa.norm() < 1.0 {
            mantissa *= std::f64::consts::E;
            log_factor -= 1.0;
        } else if mantissa.norm() >= std::f64::consts::E {
            mantissa /= std::f64::consts::E;
            log_factor += 1.0;
        }
        Self { mantissa, log_factor }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.norm() == 0.0
    }

    /// `ln |value|`.
    pub fn ln_abs(&self) -> f64 {
        self.mantissa.norm().ln() + self.log_factor
    }

    pub fn arg(&self) -> f64 {
        self.mantissa.arg()
    }

    /// The value multiplied by `e^{-shift}`, as an ordinary complex number.
    pub fn rescaled(&self, shift: f64) -> Complex64 {
        self.mantissa * (self.log_factor - shift).exp()
    }
}

/// `y(b)` for the solution with `y(a) = 0`, `y'(a) = 1`, log-scaled. Its
/// zeros are the eigenvalues.
pub fn characteristic_determinant(prob: &ProblemInstance, lambda: Complex64) -> Result<LogScaledValue> {
    characteristic_determinant_with(prob, lambda, &OdeOptions::default())
}

/// Solution of `y'' = k² P y` along the polyline `path`, in the state `(y, y'/k)`.
pub fn shoot(
    prob: &ProblemInstance,
    lambda: Complex64,
    path: &[Complex64],
    y0: [Complex64; 2],
    opts: &OdeOptions,
) -> Result<ScaledState<2>> {
    shoot_variant(prob, lambda, path, y0, opts, false)
}

/// `alternate` selects a different step sequence, so that comparing the two
/// results estimates the rounding error.
fn shoot_variant(
    prob: &ProblemInstance,
    lambda: Complex64,
    path: &[Complex64],
    y0: [Complex64; 2],
    opts: &OdeOptions,
    alternate: bool,
) -> Result<ScaledState<2>> {
    let k = prob.k;
    let p = &prob.potential;
    let coeffs = p.z_coefficients(lambda);
    let mut state = ScaledState {
        y: y0,
        log_scale: 0.0,
        steps: 0,
    };
    for w in path.windows(2) {
        let next = match prob.integrator {
            Integrator::Taylor => {
                let taylor = TaylorOptions {
                    tol: opts.rtol * 1e-5,
                    reach: if alternate { 2.7 } else { 4.0 },
                    ..TaylorOptions::default()
                };
                integrate_polynomial(&coeffs, k, w[0], w[1], state.y, &taylor)?
            }
            Integrator::RungeKutta => {
                let rhs = |z: Complex64, y: &[Complex64; 2]| [k * y[1], k * p.eval(z, lambda) * y[0]];
                let rk = OdeOptions {
                    rtol: if alternate { 0.1 * opts.rtol } else { opts.rtol },
                    ..*opts
                };
                integrate_segment(rhs, w[0], w[1], state.y, &rk)?
            }
        };
        state = ScaledState {
            y: next.y,
            log_scale: state.log_scale + next.log_scale,
            steps: state.steps + next.steps,
        };
    }
    Ok(state)
}

/// A determinant value with an a posteriori estimate of its error.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub value: LogScaledValue,
    /// `ln` of the estimated absolute error.
    pub ln_noise: f64,
    pub path: Vec<Complex64>,
}

impl Evaluation {
    /// Estimated relative error.
    pub fn relative_noise(&self) -> f64 {
        (self.ln_noise - self.value.ln_abs()).exp()
    }
}

fn evaluate_on(prob: &ProblemInstance, lambda: Complex64, path: Vec<Complex64>, opts: &OdeOptions) -> Result<Evaluation> {
    let y0 = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let first = shoot_variant(prob, lambda, &path, y0, opts, false)?;
    let second = shoot_variant(prob, lambda, &path, y0, opts, true)?;
    let value = LogScaledValue::new(first.y[0], first.log_scale);
    let shift = first.log_scale.max(second.log_scale);
    let diff = first.y[0] * (first.log_scale - shift).exp() - second.y[0] * (second.log_scale - shift).exp();
    // Floor at the working precision of the larger intermediate values.
    let floor = 1e-15 * (first.y[0].norm() * (first.log_scale - shift).exp()).max(1e-300);
    Ok(Evaluation {
        value,
        ln_noise: diff.norm().max(floor).ln() + shift,
        path,
    })
}

/// Evaluates the determinant along the straight segment and, when that is
/// too noisy, along bent paths, keeping the least noisy result.
pub fn evaluate_determinant(prob: &ProblemInstance, lambda: Complex64, opts: &OdeOptions) -> Result<Evaluation> {
    const ACCEPT: f64 = 1e-9;
    const CANDIDATES: usize = 3;
    let (za, zb) = prob.segment();
    let mut best = evaluate_on(prob, lambda, vec![za, zb], opts)?;
    if best.relative_noise() <= ACCEPT {
        return Ok(best);
    }
    for path in candidate_paths(prob, lambda, CANDIDATES) {
        let e = evaluate_on(prob, lambda, path, opts)?;
        if e.ln_noise < best.ln_noise {
            best = e;
            if best.relative_noise() <= ACCEPT {
                break;
            }
        }
    }
    Ok(best)
}

pub fn characteristic_determinant_with(
    prob: &ProblemInstance,
    lambda: Complex64,
    opts: &OdeOptions,
) -> Result<LogScaledValue> {
    Ok(evaluate_determinant(prob, lambda, opts)?.value)
}

/// Rounding amplification of shooting along `path`, as an exponent: with
/// `Φ = k Re ∫√P` along the path, the largest excursion of `Φ` outside the
/// interval spanned by its end values, counted from both ends.
pub fn shooting_excess(prob: &ProblemInstance, lambda: Complex64, path: &[Complex64], per_segment: usize) -> f64 {
    let p = &prob.potential;
    let mut z = path[0];
    let mut w = p.eval(z, lambda).sqrt();
    let mut phi = vec![0.0];
    for seg in path.windows(2) {
        let dz = (seg[1] - seg[0]) / per_segment as f64;
        for i in 1..=per_segment {
            let zn = seg[0] + dz * i as f64;
            let wn = crate::phase::sqrt_near(p.eval(zn, lambda), w);
            phi.push(phi[phi.len() - 1] + 0.5 * ((w + wn) * (zn - z)).re);
            z = zn;
            w = wn;
        }
    }
    let (pa, pb) = (phi[0], phi[phi.len() - 1]);
    let worst = phi.iter().map(|f| (f - pa).abs() + (pb - f).abs()).fold(0.0, f64::max);
    prob.k * (worst - (pb - pa).abs())
}

fn in_triangle(p: Complex64, a: Complex64, b: Complex64, c: Complex64) -> bool {
    let side = |p1: Complex64, p2: Complex64, p3: Complex64| {
        (p1.re - p3.re) * (p2.im - p3.im) - (p2.re - p3.re) * (p1.im - p3.im)
    };
    let (d1, d2, d3) = (side(p, a, b), side(p, b, c), side(p, c, a));
    let neg = d1 < 0.0 || d2 < 0.0 || d3 < 0.0;
    let pos = d1 > 0.0 || d2 > 0.0 || d3 > 0.0;
    !(neg && pos)
}

/// Paths through one waypoint ranked by the predicted loss of precision.
/// Only paths homotopic to the segment in the plane punctured at the turning
/// points are considered.
pub fn candidate_paths(prob: &ProblemInstance, lambda: Complex64, count: usize) -> Vec<Vec<Complex64>> {
    const GRID: usize = 7;
    const SAMPLES: usize = 16;
    let (za, zb) = prob.segment();
    let tps = turning_points(&prob.potential, lambda, DEFAULT_EPS_TP)
        .map(|t| t.positions())
        .unwrap_or_default();
    let length = (zb - za).norm();
    let clearance = 0.05 * length;
    let admissible = |w: Complex64| {
        tps.iter().all(|&t| {
            !in_triangle(t, za, w, zb) && segment_distance(za, w, t) > clearance && segment_distance(w, zb, t) > clearance
        })
    };
    let mut pts = vec![za, zb];
    pts.extend(tps.iter().copied());
    let margin = 0.5 * length;
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for z in &pts {
        lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    lo -= Complex64::new(margin, margin);
    hi += Complex64::new(margin, margin);
    let step = Complex64::new((hi.re - lo.re) / (GRID - 1) as f64, (hi.im - lo.im) / (GRID - 1) as f64);
    let score = |w: Complex64| shooting_excess(prob, lambda, &[za, w, zb], SAMPLES);
    let mut scored: Vec<(f64, Complex64)> = (0..GRID * GRID)
        .map(|n| lo + Complex64::new(step.re * (n % GRID) as f64, step.im * (n / GRID) as f64))
        .filter(|&w| admissible(w))
        .map(|w| (score(w), w))
        .collect();
    scored.sort_by(|x, y| x.0.total_cmp(&y.0));
    // Refine each of the leading waypoints locally.
    scored
        .into_iter()
        .take(count)
        .map(|(mut e, mut w)| {
            let mut scale = 0.5;
            for _ in 0..2 {
                let center = w;
                for i in -1..=1 {
                    for j in -1..=1 {
                        let c = center + Complex64::new(step.re * scale * i as f64, step.im * scale * j as f64);
                        if admissible(c) {
                            let ec = score(c);
                            if ec < e {
                                e = ec;
                                w = c;
                            }
                        }
                    }
                }
                scale *= 0.5;
            }
            vec![za, w, zb]
        })
        .collect()
}

/// Whether the integration segment passes within `eps` of a turning point.
pub fn segment_near_turning_point(prob: &ProblemInstance, lambda: Complex64, eps: f64) -> bool {
    let (za, zb) = prob.segment();
    turning_points(&prob.potential, lambda, DEFAULT_EPS_TP)
        .map(|tps| tps.points.iter().any(|t| segment_distance(za, zb, t.z) < eps))
        .unwrap_or(true)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleEigenvalue {
    pub lambda: Complex64,
    pub k: f64,
    pub winding_index: i64,
    pub refine_residual: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OracleOptions {
    /// Initial samples per cell edge.
    pub edge_samples: usize,
    /// Bisection depth limit for argument-principle edges.
    pub max_edge_depth: usize,
    /// Subdivision depth limit for cells with winding above one.
    pub max_cell_depth: usize,
    pub max_newton: usize,
    pub eps_orc: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            edge_samples: 4,
            max_edge_depth: 16,
            max_cell_depth: 10,
            max_newton: 60,
            eps_orc: DEFAULT_EPS_ORC,
        }
    }
}

/// Eigenvalues found in a region, with the cells whose winding could not be
/// resolved.
#[derive(Clone, Debug, Default, Serialize)]
pub struct OracleReport {
    pub eigenvalues: Vec<OracleEigenvalue>,
    pub unresolved: Vec<Complex64>,
    /// Cells with positive winding where Newton refinement failed.
    pub unrefined: Vec<Complex64>,
}

struct Solver<'a> {
    prob: &'a ProblemInstance,
    opts: &'a OracleOptions,
}

impl Solver<'_> {
    fn det(&self, lambda: Complex64) -> Result<LogScaledValue> {
        characteristic_determinant(self.prob, lambda)
    }

    /// Change of argument from `z0` to `z1`, refining until consecutive
    /// phase differences stay below π/2.
    fn edge_winding(
        &self,
        z0: Complex64,
        d0: LogScaledValue,
        z1: Complex64,
        d1: LogScaledValue,
        depth: usize,
    ) -> Result<f64> {
        if d0.is_zero() || d1.is_zero() {
            return Err(Error::WindingUnresolved(if d0.is_zero() { z0 } else { z1 }));
        }
        let step = (d1.mantissa / d0.mantissa).arg();
        if step.abs() <= FRAC_PI_2 {
            return Ok(step);
        }
        if depth >= self.opts.max_edge_depth || (z1 - z0).norm() < 1e-13 * (1.0 + z0.norm()) {
            return Err(Error::WindingUnresolved(0.5 * (z0 + z1)));
        }
        let zm = 0.5 * (z0 + z1);
        let dm = self.det(zm)?;
        Ok(self.edge_winding(z0, d0, zm, dm, depth + 1)? + self.edge_winding(zm, dm, z1, d1, depth + 1)?)
    }

    fn polygon_winding(&self, pts: &[(Complex64, LogScaledValue)]) -> Result<i64> {
        let mut total = 0.0;
        for i in 0..pts.len() {
            let (z0, d0) = pts[i];
            let (z1, d1) = pts[(i + 1) % pts.len()];
            total += self.edge_winding(z0, d0, z1, d1, 0)?;
        }
        Ok((total / (2.0 * PI)).round() as i64)
    }

    /// Boundary samples of the rectangle `[lo, hi]`, counter-clockwise.
    fn rectangle_samples(&self, lo: Complex64, hi: Complex64) -> Result<Vec<(Complex64, LogScaledValue)>> {
        let corners = [lo, Complex64::new(hi.re, lo.im), hi, Complex64::new(lo.re, hi.im)];
        let n = self.opts.edge_samples.max(1);
        let mut zs = Vec::with_capacity(4 * n);
        for c in 0..4 {
            let (a, b) = (corners[c], corners[(c + 1) % 4]);
            for i in 0..n {
                zs.push(a + (b - a) * (i as f64 / n as f64));
            }
        }
        zs.into_iter().map(|z| Ok((z, self.det(z)?))).collect()
    }

    fn newton(&self, seed: Complex64, lo: Complex64, hi: Complex64) -> Option<(Complex64, f64)> {
        let size = (hi - lo).norm();
        let margin = 0.25 * size;
        let mut z = seed;
        let mut last = f64::INFINITY;
        for _ in 0..self.opts.max_newton {
            let h = 1e-6 * size.max(1e-6);
            let d = self.det(z).ok()?;
            if d.is_zero() {
                return Some((z, 0.0));
            }
            let shift = d.log_factor;
            let f = d.rescaled(shift);
            let fp = self.det(z + h).ok()?.rescaled(shift);
            let fm = self.det(z - h).ok()?.rescaled(shift);
            let df = (fp - fm) / (2.0 * h);
            if !(df.norm() > 0.0) || !df.is_finite() {
                return None;
            }
            let step = f / df;
            let step = if step.norm() > size { step * (size / step.norm()) } else { step };
            z -= step;
            last = step.norm();
            let out = z.re < lo.re - margin || z.re > hi.re + margin || z.im < lo.im - margin || z.im > hi.im + margin;
            if out {
                return None;
            }
            if last <= 1e-3 * self.opts.eps_orc * (1.0 + z.norm()) {
                break;
            }
        }
        // A zero found outside the cell belongs to a neighbour.
        let slack = 1e-6 * size;
        let inside = z.re >= lo.re - slack && z.re <= hi.re + slack && z.im >= lo.im - slack && z.im <= hi.im + slack;
        (inside && last <= self.opts.eps_orc).then_some((z, last))
    }

    /// Zeros in one cell with known positive winding.
    fn isolate(&self, lo: Complex64, hi: Complex64, winding: i64, depth: usize, report: &mut OracleReport) {
        let center = 0.5 * (lo + hi);
        if winding == 1 || depth >= self.opts.max_cell_depth {
            match self.newton(center, lo, hi) {
                Some((z, res)) => {
                    report.eigenvalues.push(OracleEigenvalue {
                        lambda: z,
                        k: self.prob.k,
                        winding_index: winding,
                        refine_residual: res,
                    });
                    return;
                }
                None if depth >= self.opts.max_cell_depth => {
                    report.unrefined.push(center);
                    return;
                }
                // Shrink the cell until Newton converges.
                None => {}
            }
        }
        // Off-centre split so that symmetric zeros do not land on new edges.
        let split = lo + (hi - lo) * SPLIT_FRACTION;
        let quads = [
            (lo, split),
            (Complex64::new(split.re, lo.im), Complex64::new(hi.re, split.im)),
            (split, hi),
            (Complex64::new(lo.re, split.im), Complex64::new(split.re, hi.im)),
        ];
        for (qlo, qhi) in quads {
            match self.rectangle_samples(qlo, qhi).and_then(|s| self.polygon_winding(&s)) {
                Ok(w) if w >= 1 => self.isolate(qlo, qhi, w, depth + 1, report),
                Ok(_) => {}
                Err(_) => report.unresolved.push(0.5 * (qlo + qhi)),
            }
        }
    }
}

/// Eigenvalues inside `region` by the argument principle on a
/// `cell_n × cell_n` grid of cells followed by Newton refinement.
pub fn find_eigenvalues(prob: &ProblemInstance, region: &ParameterDomain, cell_n: usize) -> Result<Vec<OracleEigenvalue>> {
    Ok(find_eigenvalues_with(prob, region, cell_n, &OracleOptions::default())?.eigenvalues)
}

pub fn find_eigenvalues_with(
    prob: &ProblemInstance,
    region: &ParameterDomain,
    cell_n: usize,
    opts: &OracleOptions,
) -> Result<OracleReport> {
    find_eigenvalues_grid(prob, region, (cell_n, cell_n), opts)
}

/// As [`find_eigenvalues_with`] on a `nx × ny` grid of cells.
pub fn find_eigenvalues_grid(
    prob: &ProblemInstance,
    region: &ParameterDomain,
    (nx, ny): (usize, usize),
    opts: &OracleOptions,
) -> Result<OracleReport> {
    region.validate()?;
    if nx == 0 || ny == 0 {
        return Err(Error::Validation("cell counts must be positive".into()));
    }
    let solver = Solver { prob, opts };
    let s = opts.edge_samples.max(1);
    let (nodes_x, nodes_y) = (nx * s + 1, ny * s + 1);
    let (lo, w, h) = (region.lower_left, region.width(), region.height());
    let node = |i: usize, j: usize| {
        lo + Complex64::new(w * i as f64 / (nodes_x - 1) as f64, h * j as f64 / (nodes_y - 1) as f64)
    };

    // Determinant on the lattice of edge samples shared by neighbouring cells.
    let lattice: Vec<Option<LogScaledValue>> = (0..nodes_x * nodes_y)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % nodes_x, idx / nodes_x);
            if i % s != 0 && j % s != 0 {
                return Ok(None);
            }
            solver.det(node(i, j)).map(Some)
        })
        .collect::<Result<_>>()?;
    let at = |i: usize, j: usize| (node(i, j), lattice[j * nodes_x + i].expect("edge sample"));

    let cells: Vec<(usize, usize)> = (0..ny).flat_map(|cj| (0..nx).map(move |ci| (ci, cj))).collect();
    let partial: Vec<OracleReport> = cells
        .par_iter()
        .map(|&(ci, cj)| {
            let mut report = OracleReport::default();
            let (i0, j0) = (ci * s, cj * s);
            let mut ring = Vec::with_capacity(4 * s);
            ring.extend((0..s).map(|t| at(i0 + t, j0)));
            ring.extend((0..s).map(|t| at(i0 + s, j0 + t)));
            ring.extend((0..s).map(|t| at(i0 + s - t, j0 + s)));
            ring.extend((0..s).map(|t| at(i0, j0 + s - t)));
            let (clo, chi) = (node(i0, j0), node(i0 + s, j0 + s));
            match solver.polygon_winding(&ring) {
                Ok(wn) if wn >= 1 => solver.isolate(clo, chi, wn, 0, &mut report),
                Ok(_) => {}
                Err(_) => report.unresolved.push(0.5 * (clo + chi)),
            }
            report
        })
        .collect();

    let mut report = OracleReport::default();
    let dedup = 1e-7 * (1.0 + region.diameter());
    for part in partial {
        for e in part.eigenvalues {
            if region.in_rectangle(e.lambda) && !report.eigenvalues.iter().any(|f| (f.lambda - e.lambda).norm() < dedup) {
                report.eigenvalues.push(e);
            }
        }
        report.unresolved.extend(part.unresolved);
        report.unrefined.extend(part.unrefined);
    }
    report
        .eigenvalues
        .sort_by(|x, y| x.lambda.re.total_cmp(&y.lambda.re).then(x.lambda.im.total_cmp(&y.lambda.im)));
    Ok(report)
}

/// The region allowed by the energy estimates for `i (q(z) - λ)` on a real
/// interval: `Re λ` in the range of `q`, `Im λ < 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfStrip {
    pub re_min: f64,
    pub re_max: f64,
}

impl HalfStrip {
    pub fn contains(&self, lambda: Complex64) -> bool {
        lambda.im < 0.0 && lambda.re > self.re_min && lambda.re < self.re_max
    }

    /// The strip truncated at depth `depth` and lifted by `margin` below the real axis.
    pub fn rectangle(&self, depth: f64, margin: f64) -> Result<ParameterDomain> {
        ParameterDomain::new(Complex64::new(self.re_min, -depth), Complex64::new(self.re_max, -margin))
    }
}

pub fn a_priori_region(prob: &ProblemInstance) -> Result<HalfStrip> {
    let (a, b) = match (prob.a.as_finite(), prob.b.as_finite()) {
        (Some(a), Some(b)) if a.im == 0.0 && b.im == 0.0 => (a.re.min(b.re), a.re.max(b.re)),
        _ => return Err(Error::FormNotSupported),
    };
    let coeffs = prob.potential.coefficients();
    let i = Complex64::i();
    // λ enters only as -iλ in the constant term.
    let lambda_ok = coeffs
        .iter()
        .enumerate()
        .all(|(j, row)| row.iter().enumerate().skip(1).all(|(l, c)| if j == 0 && l == 1 { *c == -i } else { c.norm() == 0.0 }));
    let q: Vec<f64> = coeffs.iter().map(|row| row.first().copied().unwrap_or_default()).map(|c| (c / i).re).collect();
    let real_q = coeffs
        .iter()
        .all(|row| row.first().map_or(true, |c| c.re == 0.0));
    if !lambda_ok || !real_q {
        return Err(Error::FormNotSupported);
    }
    let eval = |x: f64| q.iter().rev().fold(0.0, |acc, c| acc * x + c);
    let mut candidates = vec![a, b];
    let dq: Vec<Complex64> = q.iter().enumerate().skip(1).map(|(j, c)| Complex64::new(j as f64 * c, 0.0)).collect();
    if dq.len() >= 2 {
        for r in crate::roots::polynomial_roots(&dq) {
            if r.im.abs() < 1e-9 * (1.0 + r.norm()) && r.re > a && r.re < b {
                candidates.push(r.re);
            }
        }
    }
    let values: Vec<f64> = candidates.into_iter().map(eval).collect();
    let re_min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let re_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if re_min >= re_max {
        return Err(Error::FormNotSupported);
    }
    Ok(HalfStrip { re_min, re_max })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets::{couette, couette_poiseuille};

    fn instance(m: crate::presets::ModelProblem, k: f64) -> ProblemInstance {
        ProblemInstance::new(m.potential, m.a, m.b, k).unwrap()
    }

    #[test]
    fn log_scaled_normalization() {
        let v = LogScaledValue::new(Complex64::new(0.0, 1e-300), 700.0);
        assert!(v.mantissa.norm() >= 1.0 && v.mantissa.norm() < std::f64::consts::E);
        assert!((v.ln_abs() - (700.0 + 1e-300_f64.ln())).abs() < 1e-9);
        assert!(LogScaledValue::new(Complex64::new(0.0, 0.0), 3.0).is_zero());
    }

    #[test]
    fn coinciding_endpoints_rejected() {
        let m = couette();
        assert!(ProblemInstance::new(m.potential, m.a, m.a, 10.0).is_err());
    }

    #[test]
    fn free_particle_eigenvalues() {
        // -y'' - iλ y = 0 on [0, π]: λ = -i n².
        let p = BivariatePotential::new(vec![
            vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, -1.0)],
            vec![Complex64::new(1e-300, 0.0)],
        ])
        .unwrap();
        let prob = ProblemInstance::new(p, BoundaryPoint::finite(0.0, 0.0), BoundaryPoint::finite(PI, 0.0), 1.0).unwrap();
        let region = ParameterDomain::new(Complex64::new(-0.31, -10.0), Complex64::new(0.29, -0.5)).unwrap();
        let eig = find_eigenvalues(&prob, &region, 3).unwrap();
        let mut ims: Vec<f64> = eig.iter().map(|e| -e.lambda.im).collect();
        ims.sort_by(f64::total_cmp);
        assert_eq!(ims.len(), 3, "{eig:?}");
        for (v, n) in ims.iter().zip([1.0, 4.0, 9.0]) {
            assert!((v - n).abs() < 1e-8, "{v}");
        }
    }

    #[test]
    fn growth_rate_matches_boundary_integral() {
        // Away from the spectrum, ln|Δ| ~ k |Re B|.
        let m = couette();
        let lambda = Complex64::new(1.0, 0.0);
        let b = crate::phase::boundary_integral(&m.potential, lambda, m.a, m.b, None).unwrap().value;
        let d40 = characteristic_determinant(&instance(couette(), 40.0), lambda).unwrap().ln_abs();
        let d80 = characteristic_determinant(&instance(couette(), 80.0), lambda).unwrap().ln_abs();
        let slope = (d80 - d40) / 40.0;
        assert!((slope - b.re.abs()).abs() < 2e-2 * b.re.abs(), "{slope} vs {}", b.re);
    }

    #[test]
    fn a_priori_regions() {
        let s = a_priori_region(&instance(couette_poiseuille(), 1.0)).unwrap();
        assert!((s.re_min + 1.0 / 16.0).abs() < 1e-12 && (s.re_max - 1.5).abs() < 1e-12);
        let s = a_priori_region(&instance(couette(), 1.0)).unwrap();
        assert!((s.re_min + 1.0).abs() < 1e-12 && (s.re_max - 1.0).abs() < 1e-12);
        let m = couette();
        let p = BivariatePotential::new(vec![vec![Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0)], vec![Complex64::i()]]).unwrap();
        let prob = ProblemInstance::new(p, m.a, m.b, 1.0).unwrap();
        assert_eq!(a_priori_region(&prob), Err(Error::FormNotSupported));
    }

    #[test]
    fn no_eigenvalues_above_real_axis() {
        let prob = instance(couette_poiseuille(), 20.0);
        let region = ParameterDomain::new(Complex64::new(-0.0625, 0.05), Complex64::new(1.5, 1.0)).unwrap();
        assert!(find_eigenvalues(&prob, &region, 5).unwrap().is_empty());
    }
}
