//! Action integrals `S(z₀, z; λ) = ∫ √P(ζ, λ) dζ` along polylines, with the
//! square-root branch continued along the route.
//!
//! Named integrals (`S_{j,l}`, `C_j`, `B`) are returned standardized: the
//! branch sign is chosen so that the imaginary part is nonnegative. Every
//! condition built on them (`Re F = 0`) is invariant under that choice.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::poly::{turning_points, BivariatePotential, BoundaryPoint, TurningPointSet, DEFAULT_EPS_TP};
use crate::quadrature::{gk15_from_values, kronrod_nodes};

/// Default relative tolerance per integral.
pub const DEFAULT_REL_TOL: f64 = 1e-10;

const MAX_REFINE_DEPTH: usize = 40;
const MAX_PANELS: usize = 20_000;

/// Principal square root of `p` with its sign chosen nearest to `reference`.
pub fn sqrt_near(p: Complex64, reference: Complex64) -> Complex64 {
    let w = p.sqrt();
    if (w - reference).norm_sqr() <= (w + reference).norm_sqr() {
        w
    } else {
        -w
    }
}

/// Polyline route in the z-plane.
#[derive(Clone, Debug, PartialEq)]
pub struct ContourPath {
    pub points: Vec<Complex64>,
    /// Distance from the route's interior to the nearest turning point,
    /// ignoring turning points that are endpoints of the route.
    pub clearance: f64,
}

impl ContourPath {
    pub fn new(points: Vec<Complex64>) -> Self {
        Self {
            points,
            clearance: f64::INFINITY,
        }
    }

    pub fn straight(z0: Complex64, z1: Complex64) -> Self {
        Self::new(vec![z0, z1])
    }

    /// Route `z0 → waypoint → z1`.
    pub fn via(z0: Complex64, waypoint: Complex64, z1: Complex64) -> Self {
        Self::new(vec![z0, waypoint, z1])
    }

    pub fn start(&self) -> Complex64 {
        self.points[0]
    }

    pub fn end(&self) -> Complex64 {
        *self.points.last().expect("nonempty route")
    }

    pub fn length(&self) -> f64 {
        self.points.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Recomputes `clearance` against `tps`.
    pub fn with_clearance(mut self, tps: &TurningPointSet) -> Self {
        let (s, e) = (self.start(), self.end());
        let scale = 1e-9 * (1.0 + s.norm().max(e.norm()));
        self.clearance = tps
            .points
            .iter()
            .filter(|t| (t.z - s).norm() > scale && (t.z - e).norm() > scale)
            .map(|t| polyline_distance(&self.points, t.z))
            .fold(f64::INFINITY, f64::min);
        self
    }

    /// Straight route from `z0` to `z1`, pushed around turning points that
    /// come closer than `clearance` (detours pass on the left of the
    /// direction of travel).
    pub fn avoiding(z0: Complex64, z1: Complex64, tps: &TurningPointSet, clearance: f64) -> Self {
        let mut points = vec![z0];
        let dir = z1 - z0;
        let len = dir.norm();
        if len > 0.0 {
            let unit = dir / len;
            let normal = unit * Complex64::i();
            let mut blockers: Vec<(f64, Complex64)> = tps
                .points
                .iter()
                .filter(|t| (t.z - z0).norm() > clearance && (t.z - z1).norm() > clearance)
                .filter_map(|t| {
                    let rel = (t.z - z0) / unit;
                    (rel.re > 0.0 && rel.re < len && rel.im.abs() < clearance).then_some((rel.re, t.z))
                })
                .collect();
            blockers.sort_by(|x, y| x.0.total_cmp(&y.0));
            for (_, z) in blockers {
                points.push(z + normal * (2.0 * clearance));
            }
        }
        points.push(z1);
        Self::new(points).with_clearance(tps)
    }
}

/// Distance from `z` to the polyline.
pub fn polyline_distance(points: &[Complex64], z: Complex64) -> f64 {
    if points.len() == 1 {
        return (points[0] - z).norm();
    }
    points
        .windows(2)
        .map(|w| segment_distance(w[0], w[1], z))
        .fold(f64::INFINITY, f64::min)
}

pub fn segment_distance(a: Complex64, b: Complex64, z: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a) * d.conj()).re / len2;
    let t = t.clamp(0.0, 1.0);
    (a + d * t - z).norm()
}

/// Anchor point and value of `√P` fixing the branch.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchState {
    pub anchor: Complex64,
    pub value: Complex64,
}

impl BranchState {
    /// Principal root at `anchor`.
    pub fn principal(p: &BivariatePotential, lambda: Complex64, anchor: Complex64) -> Self {
        Self {
            anchor,
            value: p.eval(anchor, lambda).sqrt(),
        }
    }

    pub fn flipped(self) -> Self {
        Self {
            anchor: self.anchor,
            value: -self.value,
        }
    }
}

/// Integral value with the branch used to compute it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseValue {
    pub value: Complex64,
    pub branch: BranchState,
}

impl PhaseValue {
    pub fn negated(self) -> Self {
        Self {
            value: -self.value,
            branch: self.branch.flipped(),
        }
    }

    /// The sign choice with `Im value >= 0`.
    pub fn standardized(self) -> Self {
        if self.value.im < 0.0 || (self.value.im == 0.0 && self.value.re < 0.0) {
            self.negated()
        } else {
            self
        }
    }
}

/// A route sample with its continued square-root value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BranchSample {
    pub z: Complex64,
    pub w: Complex64,
}

fn continuous(a: Complex64, b: Complex64) -> bool {
    // Adjacent values must be unambiguously closer to each other than to the
    // opposite sign; zeros (turning-point endpoints) are continuous with anything.
    a.norm() == 0.0 || b.norm() == 0.0 || (b - a).norm() <= 0.5 * (b + a).norm()
}

/// Continues `√P(·, λ)` along `path` from `initial` (whose anchor must be a
/// vertex of the path), refining the sampling until adjacent samples satisfy
/// `|w_{i+1} - w_i| < |w_{i+1} + w_i|` with margin.
pub fn continue_sqrt(
    p: &BivariatePotential,
    lambda: Complex64,
    path: &ContourPath,
    initial: BranchState,
) -> Result<Vec<BranchSample>> {
    continue_sqrt_pinned(p, lambda, path, initial, (false, false))
}

/// As [`continue_sqrt`], with the route's first and/or last vertex known to
/// be zeros of `P`.
fn continue_sqrt_pinned(
    p: &BivariatePotential,
    lambda: Complex64,
    path: &ContourPath,
    initial: BranchState,
    zero_ends: (bool, bool),
) -> Result<Vec<BranchSample>> {
    let pts = &path.points;
    if pts.is_empty() {
        return Ok(Vec::new());
    }
    let anchor_idx = pts
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 - initial.anchor).norm().total_cmp(&(y.1 - initial.anchor).norm()))
        .map(|(i, _)| i)
        .unwrap();
    let anchor_w = sqrt_near(p.eval(pts[anchor_idx], lambda), initial.value);
    let n = pts.len();
    let is_zero = |z: Complex64| (zero_ends.0 && z == pts[0]) || (zero_ends.1 && z == pts[n - 1]);

    // Forward from the anchor.
    let mut forward = vec![BranchSample {
        z: pts[anchor_idx],
        w: anchor_w,
    }];
    for i in anchor_idx..pts.len() - 1 {
        let from = *forward.last().unwrap();
        refine_segment(p, lambda, from, pts[i + 1], is_zero(pts[i + 1]), 0, &mut forward)?;
    }
    // Backward from the anchor.
    let mut backward = vec![BranchSample {
        z: pts[anchor_idx],
        w: anchor_w,
    }];
    for i in (1..=anchor_idx).rev() {
        let from = *backward.last().unwrap();
        refine_segment(p, lambda, from, pts[i - 1], is_zero(pts[i - 1]), 0, &mut backward)?;
    }
    backward.reverse();
    backward.pop();
    backward.extend(forward);
    Ok(backward)
}

fn refine_segment(
    p: &BivariatePotential,
    lambda: Complex64,
    from: BranchSample,
    to: Complex64,
    to_is_zero: bool,
    depth: usize,
    out: &mut Vec<BranchSample>,
) -> Result<()> {
    if to_is_zero {
        out.push(BranchSample {
            z: to,
            w: Complex64::new(0.0, 0.0),
        });
        return Ok(());
    }
    let reference = if from.w.norm() == 0.0 {
        // Starting at a zero: take the sign continuous with the midpoint side.
        p.eval(0.5 * (from.z + to), lambda).sqrt()
    } else {
        from.w
    };
    let w_to = sqrt_near(p.eval(to, lambda), reference);
    if continuous(from.w, w_to) {
        out.push(BranchSample { z: to, w: w_to });
        return Ok(());
    }
    if depth >= MAX_REFINE_DEPTH {
        return Err(Error::BranchAmbiguity(to));
    }
    let mid = 0.5 * (from.z + to);
    refine_segment(p, lambda, from, mid, false, depth + 1, out)?;
    let mid_sample = *out.last().unwrap();
    refine_segment(p, lambda, mid_sample, to, false, depth + 1, out)
}

#[derive(Clone, Copy)]
enum Singular {
    None,
    Start,
    End,
}

struct Panel {
    a: BranchSample,
    b: BranchSample,
    singular: Singular,
}

impl Panel {
    fn z_at(&self, t: f64) -> Complex64 {
        self.a.z + (self.b.z - self.a.z) * t
    }

    fn w_reference(&self, t: f64) -> Complex64 {
        match self.singular {
            Singular::Start if self.a.w.norm() == 0.0 => self.b.w * t.sqrt(),
            Singular::End if self.b.w.norm() == 0.0 => self.a.w * (1.0 - t).sqrt(),
            _ => self.a.w + (self.b.w - self.a.w) * t,
        }
    }

    /// Integrand values at Kronrod nodes in the (possibly substituted) variable.
    fn evaluate(&self, p: &BivariatePotential, lambda: Complex64) -> Option<(Complex64, f64)> {
        let nodes = kronrod_nodes(0.0, 1.0);
        let dz = self.b.z - self.a.z;
        let mut values = [Complex64::new(0.0, 0.0); 15];
        for (v, &s) in values.iter_mut().zip(&nodes) {
            let (t, jac) = match self.singular {
                Singular::None => (s, 1.0),
                Singular::Start => (s * s, 2.0 * s),
                Singular::End => (1.0 - s * s, 2.0 * s),
            };
            let reference = self.w_reference(t);
            let w = sqrt_near(p.eval(self.z_at(t), lambda), reference);
            if reference.norm() > 0.0 && (w - reference).norm() > 0.75 * (w + reference).norm() {
                return None;
            }
            *v = w * dz * jac;
        }
        Some(gk15_from_values(0.0, 1.0, &values))
    }

    fn split(&self, p: &BivariatePotential, lambda: Complex64) -> (Panel, Panel) {
        let zm = self.z_at(0.5);
        let wm = sqrt_near(p.eval(zm, lambda), self.w_reference(0.5));
        let mid = BranchSample { z: zm, w: wm };
        let (left, right) = match self.singular {
            Singular::None => (Singular::None, Singular::None),
            Singular::Start => (Singular::Start, Singular::None),
            Singular::End => (Singular::None, Singular::End),
        };
        (
            Panel {
                a: self.a,
                b: mid,
                singular: left,
            },
            Panel {
                a: mid,
                b: self.b,
                singular: right,
            },
        )
    }
}

/// Whether `z` coincides with a turning point of `P(·, λ)`.
fn is_turning_point(p: &BivariatePotential, lambda: Complex64, z: Complex64) -> bool {
    let (val, d1, _) = p.eval_with_derivatives(z, lambda);
    if val.norm() == 0.0 {
        return true;
    }
    let scale = p.coefficient_scale(lambda) * (1.0 + z.norm()).powi(p.degree() as i32);
    if val.norm() > 1e-8 * scale {
        return false;
    }
    match turning_points(p, lambda, DEFAULT_EPS_TP) {
        Ok(tps) => tps.clearance(z) <= 1e-8 * (1.0 + z.norm()) || d1.norm() == 0.0,
        Err(_) => false,
    }
}

/// Integral of the continued branch along `route`, by adaptive Gauss–Kronrod
/// panels. Turning points at the route ends are handled by the substitution
/// `t = s²` on the terminal panel.
pub fn action_integral(
    p: &BivariatePotential,
    lambda: Complex64,
    z0: Complex64,
    z1: Complex64,
    branch: BranchState,
    route: &ContourPath,
) -> Result<PhaseValue> {
    action_integral_tol(p, lambda, z0, z1, branch, route, DEFAULT_REL_TOL)
}

pub fn action_integral_tol(
    p: &BivariatePotential,
    lambda: Complex64,
    z0: Complex64,
    z1: Complex64,
    branch: BranchState,
    route: &ContourPath,
    rel_tol: f64,
) -> Result<PhaseValue> {
    let zero = PhaseValue {
        value: Complex64::new(0.0, 0.0),
        branch,
    };
    if route.points.len() < 2 || z0 == z1 && route.points.len() == 2 {
        return Ok(zero);
    }
    if (route.start() - z0).norm() > 1e-12 * (1.0 + z0.norm())
        || (route.end() - z1).norm() > 1e-12 * (1.0 + z1.norm())
    {
        return Err(Error::Validation("route endpoints do not match the integral limits".into()));
    }
    let start_tp = is_turning_point(p, lambda, z0);
    let end_tp = is_turning_point(p, lambda, z1);

    let mut points = route.points.clone();
    // A single segment joining two turning points gets a midpoint so each
    // singular end has its own panel.
    if start_tp && end_tp && points.len() == 2 {
        points.insert(1, 0.5 * (z0 + z1));
    }
    let samples = continue_sqrt_pinned(p, lambda, &ContourPath::new(points), branch, (start_tp, end_tp))?;
    let used_branch = BranchState {
        anchor: branch.anchor,
        value: samples
            .iter()
            .min_by(|x, y| (x.z - branch.anchor).norm().total_cmp(&(y.z - branch.anchor).norm()))
            .map_or(branch.value, |s| s.w),
    };

    let magnitude: f64 = samples
        .windows(2)
        .map(|w| 0.5 * (w[0].w.norm() + w[1].w.norm()) * (w[1].z - w[0].z).norm())
        .sum();
    let abs_tol = rel_tol * magnitude.max(f64::MIN_POSITIVE);

    let last = samples.len() - 2;
    let mut stack: Vec<(Panel, f64)> = samples
        .windows(2)
        .enumerate()
        .map(|(i, w)| {
            let singular = if i == 0 && start_tp {
                Singular::Start
            } else if i == last && end_tp {
                Singular::End
            } else {
                Singular::None
            };
            let share = (w[1].z - w[0].z).norm() / route.length().max(f64::MIN_POSITIVE);
            (
                Panel {
                    a: w[0],
                    b: w[1],
                    singular,
                },
                share,
            )
        })
        .collect();

    let mut total = Complex64::new(0.0, 0.0);
    let mut panels = 0usize;
    let mut worst = 0.0_f64;
    while let Some((panel, share)) = stack.pop() {
        panels += 1;
        let local_tol = abs_tol * share.max(1e-6);
        let evaluated = panel.evaluate(p, lambda);
        match evaluated {
            Some((value, err)) if err <= local_tol || panels > MAX_PANELS => {
                worst = worst.max(err / local_tol);
                total += value;
            }
            _ => {
                if (panel.b.z - panel.a.z).norm() < 1e-14 * (1.0 + panel.a.z.norm()) {
                    if let Some((value, err)) = evaluated {
                        worst = worst.max(err / local_tol);
                        total += value;
                        continue;
                    }
                    return Err(Error::BranchAmbiguity(panel.a.z));
                }
                let (left, right) = panel.split(p, lambda);
                stack.push((left, share * 0.5));
                stack.push((right, share * 0.5));
            }
        }
    }
    if panels > MAX_PANELS && worst > 1e3 {
        return Err(Error::QuadratureFailure(worst * abs_tol));
    }
    Ok(PhaseValue {
        value: total,
        branch: used_branch,
    })
}

fn default_clearance(points: &[Complex64]) -> f64 {
    let mut lo = Complex64::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Complex64::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for z in points {
        lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
        hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
    }
    1e-3 * (hi - lo).norm().max(1.0)
}

/// Integral along `route` with the principal branch at the route's midpoint
/// vertex (or segment midpoint), standardized to `Im >= 0`.
pub fn standardized_integral(
    p: &BivariatePotential,
    lambda: Complex64,
    route: &ContourPath,
) -> Result<PhaseValue> {
    let anchor = if route.points.len() > 2 {
        route.points[route.points.len() / 2]
    } else {
        0.5 * (route.start() + route.end())
    };
    let mut pts = route.points.clone();
    if route.points.len() == 2 {
        pts.insert(1, anchor);
    }
    let route = ContourPath {
        points: pts,
        clearance: route.clearance,
    };
    let branch = BranchState::principal(p, lambda, anchor);
    Ok(action_integral(p, lambda, route.start(), route.end(), branch, &route)?.standardized())
}

/// `S_{j,l}(λ)`: integral between the turning points labelled `j` and `l`.
pub fn pair_integral(
    p: &BivariatePotential,
    tps: &TurningPointSet,
    j: usize,
    l: usize,
) -> Result<PhaseValue> {
    let zj = tps.by_label(j).ok_or_else(|| Error::Validation(format!("no turning point {j}")))?.z;
    let zl = tps.by_label(l).ok_or_else(|| Error::Validation(format!("no turning point {l}")))?.z;
    pair_integral_between(p, tps, zj, zl).map_err(|e| match e {
        Error::DegenerateTurningPoints(_, _) => Error::DegenerateTurningPoints(j, l),
        other => other,
    })
}

pub fn pair_integral_between(
    p: &BivariatePotential,
    tps: &TurningPointSet,
    zj: Complex64,
    zl: Complex64,
) -> Result<PhaseValue> {
    if (zj - zl).norm() <= 1e-8 * (1.0 + zj.norm()) {
        return Err(Error::DegenerateTurningPoints(0, 0));
    }
    let clearance = default_clearance(&tps.positions()).min(0.25 * (zj - zl).norm());
    let route = ContourPath::avoiding(zj, zl, tps, clearance);
    standardized_integral(p, tps.lambda, &route)
}

/// `C_j(a, λ)`: integral from turning point `j` to the finite point `a`.
pub fn endpoint_integral(
    p: &BivariatePotential,
    tps: &TurningPointSet,
    j: usize,
    a: BoundaryPoint,
) -> Result<PhaseValue> {
    let zj = tps.by_label(j).ok_or_else(|| Error::Validation(format!("no turning point {j}")))?.z;
    endpoint_integral_from(p, tps, zj, a)
}

pub fn endpoint_integral_from(
    p: &BivariatePotential,
    tps: &TurningPointSet,
    zj: Complex64,
    a: BoundaryPoint,
) -> Result<PhaseValue> {
    let a = a
        .as_finite()
        .ok_or_else(|| Error::Validation("critical integral needs a finite boundary point".into()))?;
    if (a - zj).norm() <= 1e-12 * (1.0 + a.norm()) {
        return Ok(PhaseValue {
            value: Complex64::new(0.0, 0.0),
            branch: BranchState {
                anchor: a,
                value: Complex64::new(0.0, 0.0),
            },
        });
    }
    let mut pts = tps.positions();
    pts.push(a);
    let clearance = default_clearance(&pts).min(0.25 * (a - zj).norm());
    let route = ContourPath::avoiding(zj, a, tps, clearance);
    standardized_integral(p, tps.lambda, &route)
}

/// `B(a, b, λ)` along `route` (the straight segment when `None`).
pub fn boundary_integral(
    p: &BivariatePotential,
    lambda: Complex64,
    a: BoundaryPoint,
    b: BoundaryPoint,
    route: Option<&ContourPath>,
) -> Result<PhaseValue> {
    let (za, zb) = match (a.as_finite(), b.as_finite()) {
        (Some(za), Some(zb)) => (za, zb),
        _ => {
            return Err(Error::Validation(
                "balanced integral needs two finite boundary points".into(),
            ))
        }
    };
    if za == zb {
        return Ok(PhaseValue {
            value: Complex64::new(0.0, 0.0),
            branch: BranchState::principal(p, lambda, za),
        });
    }
    let route = match route {
        Some(r) => r.clone(),
        None => ContourPath::straight(za, zb),
    };
    standardized_integral(p, lambda, &route)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use std::f64::consts::{FRAC_PI_4, PI, TAU};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Closed form of the Couette action from the turning point λ.
    fn couette_action(z: Complex64, lambda: Complex64) -> Complex64 {
        (2.0 / 3.0) * Complex64::from_polar(1.0, FRAC_PI_4) * (z - lambda).powf(1.5)
    }

    fn same_up_to_sign(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() < tol || (a + b).norm() < tol
    }

    #[test]
    fn monodromy_of_square_root_around_zero() {
        let p = BivariatePotential::new(vec![vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]]).unwrap();
        let circle: Vec<Complex64> = (0..=16).map(|k| Complex64::from_polar(1.0, TAU * k as f64 / 16.0)).collect();
        let path = ContourPath::new(circle);
        let branch = BranchState::principal(&p, c(0.0, 0.0), c(1.0, 0.0));
        let samples = continue_sqrt(&p, c(0.0, 0.0), &path, branch).unwrap();
        let last = samples.last().unwrap();
        assert!((last.w + branch.value).norm() < 1e-12);
    }

    #[test]
    fn straight_path_matches_single_branch() {
        let p = presets::couette().potential;
        let lambda = c(0.0, 0.0);
        let path = ContourPath::new(vec![c(1.0, 0.0), c(2.0, 0.0)]);
        let branch = BranchState::principal(&p, lambda, c(1.0, 0.0));
        let samples = continue_sqrt(&p, lambda, &path, branch).unwrap();
        for s in samples {
            let expected = (Complex64::i() * s.z).sqrt();
            assert!((s.w - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_length_integral() {
        let p = presets::couette().potential;
        let z = c(0.3, 0.2);
        let route = ContourPath::straight(z, z);
        let v = action_integral(&p, c(0.0, 0.0), z, z, BranchState::principal(&p, c(0.0, 0.0), z), &route).unwrap();
        assert_eq!(v.value, c(0.0, 0.0));
    }

    #[test]
    fn couette_action_from_turning_point() {
        let p = presets::couette().potential;
        let lambda = c(0.0, 0.0);
        let route = ContourPath::straight(lambda, c(1.0, 0.0));
        let branch = BranchState::principal(&p, lambda, c(1.0, 0.0));
        let v = action_integral(&p, lambda, lambda, c(1.0, 0.0), branch, &route).unwrap();
        let expected = couette_action(c(1.0, 0.0), lambda);
        assert!(same_up_to_sign(v.value, expected, 1e-12));
        assert!((v.value.re.abs() - 0.471_404_520_791_031_7).abs() < 1e-10);
        assert!((v.value.im.abs() - 0.471_404_520_791_031_7).abs() < 1e-10);
    }

    #[test]
    fn quadratic_pair_integral_closed_form() {
        // ∫_0^w sqrt(i ζ (ζ - w)) dζ over [0, 1/2]: π w² / 8 times e^{-iπ/4} up to sign.
        let p = presets::couette_poiseuille().potential;
        let tps = turning_points(&p, c(0.0, 0.0), DEFAULT_EPS_TP).unwrap();
        let s = pair_integral(&p, &tps, 0, 1).unwrap();
        let expected = PI / 8.0 * 0.25 * Complex64::from_polar(1.0, -FRAC_PI_4);
        assert!(same_up_to_sign(s.value, expected, 1e-11), "{}", s.value);
        assert!(s.value.im >= 0.0);
    }

    #[test]
    fn pair_integral_vanishes_on_singular_line() {
        let p = presets::couette_poiseuille().potential;
        let lambda = c(0.1, -0.1625);
        let tps = turning_points(&p, lambda, DEFAULT_EPS_TP).unwrap();
        let s = pair_integral(&p, &tps, 0, 1).unwrap();
        assert!(s.value.re.abs() < 1e-10 * (1.0 + s.value.norm()));
    }

    #[test]
    fn pair_integral_near_collision_tends_to_zero() {
        let p = presets::couette_poiseuille().potential;
        let mut last = f64::INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-4] {
            let tps = turning_points(&p, c(-1.0 / 16.0 + eps, 0.0), DEFAULT_EPS_TP).unwrap();
            let s = pair_integral(&p, &tps, 0, 1).unwrap().value.norm();
            assert!(s < last);
            assert!((s - PI * eps / 2.0).abs() < 1e-9);
            last = s;
        }
        let tps = turning_points(&p, c(-1.0 / 16.0, 0.0), DEFAULT_EPS_TP).unwrap();
        assert_eq!(tps.len(), 1);
    }

    #[test]
    fn pair_integral_closed_form_at_lambda_one() {
        let p = presets::couette_poiseuille().potential;
        let lambda = c(1.0, 0.0);
        let tps = turning_points(&p, lambda, DEFAULT_EPS_TP).unwrap();
        let d = tps.points[1].z - tps.points[0].z;
        let expected = PI / 8.0 * d * d * Complex64::from_polar(1.0, -FRAC_PI_4);
        let s = pair_integral(&p, &tps, 0, 1).unwrap();
        assert!(same_up_to_sign(s.value, expected, 1e-10));
    }

    #[test]
    fn critical_integral_closed_form() {
        let p = presets::couette().potential;
        let lambda = c(0.0, -1.0);
        let tps = turning_points(&p, lambda, DEFAULT_EPS_TP).unwrap();
        let v = endpoint_integral(&p, &tps, 0, BoundaryPoint::finite(1.0, 0.0)).unwrap();
        assert!(same_up_to_sign(v.value, couette_action(c(1.0, 0.0), lambda), 1e-11));

        let at_point = turning_points(&p, c(1.0, 0.0), DEFAULT_EPS_TP).unwrap();
        let zero = endpoint_integral(&p, &at_point, 0, BoundaryPoint::finite(1.0, 0.0)).unwrap();
        assert_eq!(zero.value, c(0.0, 0.0));
    }

    #[test]
    fn critical_curves_meet_at_minus_i_over_sqrt3() {
        let p = presets::couette().potential;
        let lambda = c(0.0, -1.0 / 3f64.sqrt());
        let tps = turning_points(&p, lambda, DEFAULT_EPS_TP).unwrap();
        for a in [1.0, -1.0] {
            let v = endpoint_integral(&p, &tps, 0, BoundaryPoint::finite(a, 0.0)).unwrap();
            assert!(v.value.re.abs() < 1e-10, "a = {a}: {}", v.value);
        }
    }

    #[test]
    fn balanced_integral_on_and_off_the_ray() {
        let p = presets::couette().potential;
        let (a, b) = (BoundaryPoint::finite(-1.0, 0.0), BoundaryPoint::finite(1.0, 0.0));
        assert_eq!(boundary_integral(&p, c(0.0, -1.0), a, a, None).unwrap().value, c(0.0, 0.0));
        let on_ray = boundary_integral(&p, c(0.0, -2.0), a, b, None).unwrap();
        assert!(on_ray.value.re.abs() < 1e-10);
        // At λ = 0 the admissible route passes below the turning point.
        let below = ContourPath::via(c(-1.0, 0.0), c(0.0, -1.0), c(1.0, 0.0));
        let off = boundary_integral(&p, c(0.0, 0.0), a, b, Some(&below)).unwrap();
        assert!(off.value.re.abs() > 0.5);
    }

    #[test]
    fn path_independence_and_antisymmetry() {
        let p = presets::couette_poiseuille().potential;
        let lambda = c(0.4, -0.6);
        let (z0, z1) = (c(-1.0, 0.6), c(1.2, 0.6));
        let straight = ContourPath::straight(z0, z1);
        let bent = ContourPath::new(vec![z0, c(-0.5, 2.5), c(1.5, 2.0), z1]);
        let branch = BranchState::principal(&p, lambda, z0);
        let v1 = action_integral(&p, lambda, z0, z1, branch, &straight).unwrap();
        let v2 = action_integral(&p, lambda, z0, z1, branch, &bent).unwrap();
        // Both routes pass above the turning points.
        assert!((v1.value - v2.value).norm() < 1e-8);

        let reversed = ContourPath::straight(z1, z0);
        let samples = continue_sqrt(&p, lambda, &straight, branch).unwrap();
        let back_branch = BranchState { anchor: z1, value: samples.last().unwrap().w };
        let v3 = action_integral(&p, lambda, z1, z0, back_branch, &reversed).unwrap();
        assert!((v1.value + v3.value).norm() < 1e-10);
    }

    #[test]
    fn flipping_the_branch_negates() {
        let p = presets::couette_poiseuille().potential;
        let lambda = c(0.4, -0.6);
        let route = ContourPath::straight(c(-1.0, 0.0), c(1.0, 0.0));
        let branch = BranchState::principal(&p, lambda, c(-1.0, 0.0));
        let v = action_integral(&p, lambda, c(-1.0, 0.0), c(1.0, 0.0), branch, &route).unwrap();
        let w = action_integral(&p, lambda, c(-1.0, 0.0), c(1.0, 0.0), branch.flipped(), &route).unwrap();
        assert!((v.value + w.value).norm() < 1e-13);
    }
}
