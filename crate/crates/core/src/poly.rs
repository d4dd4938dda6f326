//! The potential family `P(z, λ) = Σ_j a_j(λ) z^j` with polynomial coefficients
//! `a_j(λ) = Σ_l c_{j,l} λ^l`, its turning points, Stokes sector asymptotes and
//! the bookkeeping needed to label turning points consistently across λ.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::roots::{horner, newton_polish, polynomial_roots};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Default turning-point tolerance.
pub const DEFAULT_EPS_TP: f64 = 1e-10;

/// Coefficient matrix of `P(z, λ)`: row `j` holds the λ-coefficients of `a_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Complex64>>", into = "Vec<Vec<Complex64>>")]
pub struct BivariatePotential {
    coeffs: Vec<Vec<Complex64>>,
}

impl TryFrom<Vec<Vec<Complex64>>> for BivariatePotential {
    type Error = Error;

    fn try_from(coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        Self::new(coeffs)
    }
}

impl From<BivariatePotential> for Vec<Vec<Complex64>> {
    fn from(p: BivariatePotential) -> Self {
        p.coeffs
    }
}

impl BivariatePotential {
    /// Builds a potential from its coefficient matrix, trimming all-zero top
    /// rows. Rejects potentials of z-degree zero.
    pub fn new(mut coeffs: Vec<Vec<Complex64>>) -> Result<Self> {
        while coeffs
            .last()
            .is_some_and(|row| row.iter().all(|c| *c == ZERO))
        {
            coeffs.pop();
        }
        if coeffs.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Validation("non-finite potential coefficient".into()));
        }
        if coeffs.len() < 2 {
            return Err(Error::Validation(
                "potential must have degree n >= 1 in z".into(),
            ));
        }
        Ok(Self { coeffs })
    }

    /// `i (q(z) - λ)` for a real polynomial `q` given by ascending coefficients.
    pub fn shifted_real(q: &[f64]) -> Result<Self> {
        let i = Complex64::i();
        let mut coeffs: Vec<Vec<Complex64>> = q.iter().map(|&c| vec![i * c]).collect();
        if coeffs.is_empty() {
            coeffs.push(vec![ZERO]);
        }
        coeffs[0].resize(2, ZERO);
        coeffs[0][1] = -i;
        Self::new(coeffs)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coefficients(&self) -> &[Vec<Complex64>] {
        &self.coeffs
    }

    /// Highest power of λ appearing in any coefficient.
    pub fn lambda_degree(&self) -> usize {
        self.coeffs
            .iter()
            .map(|row| {
                row.iter()
                    .rposition(|c| *c != ZERO)
                    .map_or(0, |p| p)
            })
            .max()
            .unwrap_or(0)
    }

    /// `a_j(λ)` for `j = 0..=n`.
    pub fn z_coefficients(&self, lambda: Complex64) -> Vec<Complex64> {
        self.coeffs.iter().map(|row| horner(row, lambda)).collect()
    }

    pub fn leading(&self, lambda: Complex64) -> Complex64 {
        horner(&self.coeffs[self.degree()], lambda)
    }

    /// Whether `a_n` is independent of λ.
    pub fn has_constant_leading(&self) -> bool {
        self.coeffs[self.degree()].iter().skip(1).all(|c| *c == ZERO)
    }

    pub fn eval(&self, z: Complex64, lambda: Complex64) -> Complex64 {
        let a = self.z_coefficients(lambda);
        horner(&a, z)
    }

    /// `(P, ∂P/∂z, ∂²P/∂z²)` at `(z, λ)`.
    pub fn eval_with_derivatives(
        &self,
        z: Complex64,
        lambda: Complex64,
    ) -> (Complex64, Complex64, Complex64) {
        let a = self.z_coefficients(lambda);
        let (mut p, mut dp, mut ddp) = (ZERO, ZERO, ZERO);
        for &c in a.iter().rev() {
            ddp = ddp * z + 2.0 * dp;
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp, ddp)
    }

    /// Largest coefficient magnitude `max_j |a_j(λ)|`.
    pub fn coefficient_scale(&self, lambda: Complex64) -> f64 {
        self.z_coefficients(lambda)
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    fn check_leading(&self, lambda: Complex64) -> Result<Vec<Complex64>> {
        let a = self.z_coefficients(lambda);
        let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1.0);
        if a[self.degree()].norm() <= 1e-13 * scale {
            return Err(Error::LeadingCoefficientVanishes(lambda));
        }
        Ok(a)
    }
}

/// `Σ_{j,l} c_{j,l} λ^l z^j`.
pub fn eval_potential(p: &BivariatePotential, z: Complex64, lambda: Complex64) -> Complex64 {
    p.eval(z, lambda)
}

/// Boundary condition location: a finite point or a direction at infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundaryPoint {
    Finite(Complex64),
    Infinite {
        /// Direction angle in radians.
        infinite: f64,
    },
}

impl BoundaryPoint {
    pub fn finite(re: f64, im: f64) -> Self {
        BoundaryPoint::Finite(Complex64::new(re, im))
    }

    /// An infinite point in direction `phi`, normalized to `[0, 2π)`.
    pub fn infinite(phi: f64) -> Self {
        BoundaryPoint::Infinite {
            infinite: normalize_angle(phi),
        }
    }

    pub fn as_finite(&self) -> Option<Complex64> {
        match *self {
            BoundaryPoint::Finite(z) => Some(z),
            BoundaryPoint::Infinite { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, BoundaryPoint::Finite(_))
    }
}

/// A closed disc removed from the parameter domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disc {
    pub center: Complex64,
    pub radius: f64,
}

impl Disc {
    pub fn contains(&self, lambda: Complex64) -> bool {
        (lambda - self.center).norm() <= self.radius
    }
}

/// Rectangle in the λ-plane minus excluded discs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterDomain {
    pub lower_left: Complex64,
    pub upper_right: Complex64,
    #[serde(default)]
    pub excluded: Vec<Disc>,
}

impl ParameterDomain {
    pub fn new(lower_left: Complex64, upper_right: Complex64) -> Result<Self> {
        let domain = Self {
            lower_left,
            upper_right,
            excluded: Vec::new(),
        };
        domain.validate()?;
        Ok(domain)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lower_left.re < self.upper_right.re && self.lower_left.im < self.upper_right.im) {
            return Err(Error::Validation(
                "parameter domain rectangle is empty".into(),
            ));
        }
        for disc in &self.excluded {
            if !(disc.radius > 0.0) || !self.in_rectangle(disc.center) {
                return Err(Error::Validation(format!(
                    "excluded disc at {} must have positive radius and lie in the rectangle",
                    disc.center
                )));
            }
        }
        Ok(())
    }

    pub fn in_rectangle(&self, lambda: Complex64) -> bool {
        lambda.re >= self.lower_left.re
            && lambda.re <= self.upper_right.re
            && lambda.im >= self.lower_left.im
            && lambda.im <= self.upper_right.im
    }

    pub fn is_excluded(&self, lambda: Complex64) -> bool {
        self.excluded.iter().any(|d| d.contains(lambda))
    }

    pub fn contains(&self, lambda: Complex64) -> bool {
        self.in_rectangle(lambda) && !self.is_excluded(lambda)
    }

    pub fn width(&self) -> f64 {
        self.upper_right.re - self.lower_left.re
    }

    pub fn height(&self) -> f64 {
        self.upper_right.im - self.lower_left.im
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Complex64 {
        (self.lower_left + self.upper_right) * 0.5
    }

    /// Adds discs of `radius` around every branch point and zero of `a_n`
    /// lying in the (closed) rectangle.
    pub fn exclude_singular_points(&mut self, p: &BivariatePotential, radius: f64) -> Result<()> {
        let reach = radius;
        for lambda in singular_parameters(p, self.diameter().max(1.0))? {
            let inside = lambda.re >= self.lower_left.re - reach
                && lambda.re <= self.upper_right.re + reach
                && lambda.im >= self.lower_left.im - reach
                && lambda.im <= self.upper_right.im + reach;
            if inside {
                let center = Complex64::new(
                    lambda.re.clamp(self.lower_left.re, self.upper_right.re),
                    lambda.im.clamp(self.lower_left.im, self.upper_right.im),
                );
                if (center - lambda).norm() < 1e-12 {
                    self.excluded.push(Disc { center, radius });
                } else {
                    // Just outside: the part reaching into the rectangle is what matters.
                    let r = radius - (center - lambda).norm();
                    if r > 0.0 {
                        self.excluded.push(Disc { center, radius: r });
                    }
                }
            }
        }
        Ok(())
    }

    /// Interior lattice node farthest from all excluded discs (the rectangle
    /// center when nothing is excluded).
    pub fn base_point(&self, grid_n: usize) -> Complex64 {
        if self.excluded.is_empty() {
            return self.center();
        }
        let n = grid_n.max(2);
        let mut best = self.center();
        let mut best_dist = f64::NEG_INFINITY;
        for i in 1..n {
            for j in 1..n {
                let lambda = self.lower_left
                    + Complex64::new(
                        self.width() * i as f64 / n as f64,
                        self.height() * j as f64 / n as f64,
                    );
                let dist = self
                    .excluded
                    .iter()
                    .map(|d| (lambda - d.center).norm() - d.radius)
                    .fold(f64::INFINITY, f64::min);
                if dist > best_dist {
                    best_dist = dist;
                    best = lambda;
                }
            }
        }
        best
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    pub label: usize,
    pub z: Complex64,
    pub multiplicity: usize,
}

/// Turning points of `P(·, λ)` with labels and multiplicities.
#[derive(Clone, Debug, PartialEq)]
pub struct TurningPointSet {
    pub lambda: Complex64,
    pub points: Vec<TurningPoint>,
}

impl TurningPointSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn positions(&self) -> Vec<Complex64> {
        self.points.iter().map(|t| t.z).collect()
    }

    pub fn total_multiplicity(&self) -> usize {
        self.points.iter().map(|t| t.multiplicity).sum()
    }

    pub fn by_label(&self, label: usize) -> Option<&TurningPoint> {
        self.points.iter().find(|t| t.label == label)
    }

    pub fn all_simple(&self) -> bool {
        self.points.iter().all(|t| t.multiplicity == 1)
    }

    /// Smallest distance between two distinct turning points (infinite for one point).
    pub fn min_separation(&self) -> f64 {
        min_pairwise_distance(&self.positions())
    }

    /// Distance from `z` to the nearest turning point.
    pub fn clearance(&self, z: Complex64) -> f64 {
        self.points
            .iter()
            .map(|t| (t.z - z).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn min_pairwise_distance(points: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            best = best.min((points[i] - points[j]).norm());
        }
    }
    best
}

/// Zeros of `P(·, λ)` with multiplicities. Roots closer than
/// `10 ε_tp^{1/m}` (scaled by the root magnitude) are merged into one root of
/// multiplicity `m`; simple roots are Newton-polished.
pub fn turning_points(p: &BivariatePotential, lambda: Complex64, eps_tp: f64) -> Result<TurningPointSet> {
    let a = p.check_leading(lambda)?;
    let roots: Vec<Complex64> = polynomial_roots(&a)
        .into_iter()
        .map(|z| newton_polish(&a, z, 8))
        .collect();
    let scale = 1.0 + roots.iter().map(|z| z.norm()).fold(0.0, f64::max);

    // Greedy clustering; each cluster keeps its members so that the merge
    // tolerance can follow the growing multiplicity.
    let mut clusters: Vec<Vec<Complex64>> = Vec::new();
    for z in roots {
        let found = clusters.iter_mut().find(|members| {
            let m = members.len() + 1;
            let tol = 10.0 * eps_tp.powf(1.0 / m as f64) * scale;
            let center = mean(members);
            (center - z).norm() < tol
        });
        match found {
            Some(members) => members.push(z),
            None => clusters.push(vec![z]),
        }
    }
    let mut points: Vec<(Complex64, usize)> = clusters
        .iter()
        .map(|members| (mean(members), members.len()))
        .collect();
    points.sort_by(|x, y| x.0.re.total_cmp(&y.0.re).then(x.0.im.total_cmp(&y.0.im)));
    Ok(TurningPointSet {
        lambda,
        points: points
            .into_iter()
            .enumerate()
            .map(|(label, (z, multiplicity))| TurningPoint {
                label,
                z,
                multiplicity,
            })
            .collect(),
    })
}

fn mean(points: &[Complex64]) -> Complex64 {
    points.iter().sum::<Complex64>() / points.len() as f64
}

/// Center and directions of the asymptotes of infinite Stokes lines.
#[derive(Clone, Debug, PartialEq)]
pub struct SectorData {
    pub center: Complex64,
    /// `φ_j` for `j = 0..=n+1`, each normalized to `[0, 2π)`.
    pub angles: Vec<f64>,
}

impl SectorData {
    /// Index of the asymptote angle nearest to `theta` and the angular distance.
    pub fn nearest(&self, theta: f64) -> (usize, f64) {
        self.angles
            .iter()
            .enumerate()
            .map(|(j, &phi)| (j, angle_distance(theta, phi)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("sector data always has n + 2 angles")
    }
}

pub fn sector_data(p: &BivariatePotential, lambda: Complex64) -> Result<SectorData> {
    let a = p.check_leading(lambda)?;
    let n = p.degree();
    let lead = a[n];
    let count = (n + 2) as f64;
    let offset = (PI - lead.arg()) / count;
    let angles = (0..n + 2)
        .map(|j| normalize_angle(offset + TAU * j as f64 / count))
        .collect();
    Ok(SectorData {
        center: -a[n - 1] / (n as f64 * lead),
        angles,
    })
}

/// True when an infinite boundary direction lies within `eps_ang` of an
/// asymptote direction.
pub fn is_exceptional(
    p: &BivariatePotential,
    lambda: Complex64,
    a: BoundaryPoint,
    b: BoundaryPoint,
    eps_ang: f64,
) -> bool {
    let Ok(sectors) = sector_data(p, lambda) else {
        return true;
    };
    [a, b].iter().any(|bp| match *bp {
        BoundaryPoint::Infinite { infinite } => sectors.nearest(infinite).1 < eps_ang,
        BoundaryPoint::Finite(_) => false,
    })
}

pub fn normalize_angle(theta: f64) -> f64 {
    let t = theta.rem_euclid(TAU);
    if t >= TAU {
        0.0
    } else {
        t
    }
}

/// Unsigned angular distance in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

const MIN_TRACK_STEP: f64 = 1e-9;

/// Continues the simple roots `from` at `from_lambda` to `to_lambda` along the
/// straight segment, halving the step until nearest-neighbour matching is a
/// permutation with displacement below half the minimal root separation.
pub fn continue_roots(
    p: &BivariatePotential,
    from_lambda: Complex64,
    from: &[Complex64],
    to_lambda: Complex64,
) -> Result<Vec<Complex64>> {
    let total = (to_lambda - from_lambda).norm();
    let mut current = from.to_vec();
    if total == 0.0 {
        return Ok(current);
    }
    let mut t = 0.0;
    let mut h = 1.0_f64;
    while t < 1.0 {
        let step = h.min(1.0 - t);
        let lambda = from_lambda + (to_lambda - from_lambda) * (t + step);
        match match_step(p, lambda, &current) {
            Some(next) => {
                current = next;
                t += step;
                h = (2.0 * step).min(1.0);
            }
            None => {
                h = step * 0.5;
                if h * total < MIN_TRACK_STEP {
                    return Err(Error::BranchPointEncountered(
                        from_lambda + (to_lambda - from_lambda) * t,
                    ));
                }
            }
        }
    }
    Ok(current)
}

fn match_step(p: &BivariatePotential, lambda: Complex64, current: &[Complex64]) -> Option<Vec<Complex64>> {
    let a = p.check_leading(lambda).ok()?;
    let candidates: Vec<Complex64> = polynomial_roots(&a)
        .into_iter()
        .map(|z| newton_polish(&a, z, 6))
        .collect();
    if candidates.len() != current.len() {
        return None;
    }
    let sep = min_pairwise_distance(current);
    if sep == 0.0 {
        return None;
    }
    let limit = if sep.is_finite() { 0.5 * sep } else { f64::INFINITY };
    let mut used = vec![false; candidates.len()];
    let mut next = Vec::with_capacity(current.len());
    for z in current {
        let (idx, dist) = candidates
            .iter()
            .enumerate()
            .map(|(k, c)| (k, (c - z).norm()))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        if used[idx] || dist >= limit {
            return None;
        }
        used[idx] = true;
        next.push(candidates[idx]);
    }
    if min_pairwise_distance(&next) < 1e-6 * (1.0 + next.iter().map(|z| z.norm()).fold(0.0, f64::max)) {
        return None;
    }
    Some(next)
}

/// Labels turning points along a polyline in the λ-plane, starting from
/// `start` (whose points must all be simple).
pub fn track_roots(
    p: &BivariatePotential,
    lambda_path: &[Complex64],
    start: &TurningPointSet,
) -> Result<Vec<TurningPointSet>> {
    if !start.all_simple() {
        return Err(Error::BranchPointEncountered(start.lambda));
    }
    let mut out = vec![start.clone()];
    let mut current = start.positions();
    for w in lambda_path.windows(2) {
        current = continue_roots(p, w[0], &current, w[1])?;
        out.push(TurningPointSet {
            lambda: w[1],
            points: start
                .points
                .iter()
                .zip(&current)
                .map(|(t, &z)| TurningPoint {
                    label: t.label,
                    z,
                    multiplicity: 1,
                })
                .collect(),
        });
    }
    Ok(out)
}

/// Labeling of turning points over a parameter domain by straight-line
/// continuation from a fixed base point.
#[derive(Clone, Debug)]
pub struct RootLabeling {
    pub potential: BivariatePotential,
    pub base_lambda: Complex64,
    pub base_roots: Vec<Complex64>,
}

impl RootLabeling {
    pub fn new(p: &BivariatePotential, base_lambda: Complex64) -> Result<Self> {
        let set = turning_points(p, base_lambda, DEFAULT_EPS_TP)?;
        if !set.all_simple() {
            return Err(Error::BranchPointEncountered(base_lambda));
        }
        Ok(Self {
            potential: p.clone(),
            base_lambda,
            base_roots: set.positions(),
        })
    }

    pub fn count(&self) -> usize {
        self.base_roots.len()
    }

    /// Turning points at `lambda`, indexed by label.
    pub fn roots_at(&self, lambda: Complex64) -> Result<Vec<Complex64>> {
        continue_roots(&self.potential, self.base_lambda, &self.base_roots, lambda)
    }
}

/// Discriminant of `P(·, λ)` up to a constant factor:
/// `a_n^{2n-2} Π_{i<j} (z_i - z_j)^2`.
pub fn discriminant(p: &BivariatePotential, lambda: Complex64) -> Complex64 {
    let a = p.z_coefficients(lambda);
    let n = p.degree();
    let roots = polynomial_roots(&a);
    if roots.len() != n {
        return ZERO;
    }
    let mut d = a[n].powu((2 * n - 2) as u32);
    for i in 0..n {
        for j in i + 1..n {
            let diff = roots[i] - roots[j];
            d *= diff * diff;
        }
    }
    d
}

/// Branch points of the turning points (zeros of the discriminant in λ) and
/// zeros of the leading coefficient. `radius` sets the interpolation circle.
pub fn singular_parameters(p: &BivariatePotential, radius: f64) -> Result<Vec<Complex64>> {
    let n = p.degree();
    let dl = p.lambda_degree();
    let mut out = polynomial_roots(&p.coefficients()[n]);
    let degree = (2 * n - 2) * dl;
    if degree == 0 {
        return Ok(out);
    }
    // Interpolate the discriminant (a polynomial in λ of degree <= `degree`)
    // from its values on a circle.
    let count = degree + 1;
    let r = radius.max(1e-3);
    let rotation = 0.123_456_789;
    let samples: Vec<Complex64> = (0..count)
        .map(|k| {
            let theta = TAU * k as f64 / count as f64 + rotation;
            discriminant(p, Complex64::from_polar(r, theta))
        })
        .collect();
    let magnitude = samples.iter().map(|s| s.norm()).fold(0.0, f64::max);
    let reference = (0..count)
        .map(|k| {
            let lambda = Complex64::from_polar(r, TAU * k as f64 / count as f64 + rotation);
            let a = p.z_coefficients(lambda);
            let roots = polynomial_roots(&a);
            let s = 1.0 + roots.iter().map(|z| z.norm()).fold(0.0, f64::max);
            a[n].norm().powi((2 * n - 2) as i32) * s.powi((n * (n - 1)) as i32)
        })
        .fold(0.0, f64::max);
    if magnitude <= 1e-11 * reference {
        return Err(Error::DegenerateDiscriminant);
    }
    let coeffs: Vec<Complex64> = (0..count)
        .map(|m| {
            let sum: Complex64 = samples
                .iter()
                .enumerate()
                .map(|(k, s)| {
                    s * Complex64::from_polar(1.0, -TAU * (k * m) as f64 / count as f64)
                })
                .sum();
            sum / count as f64 / Complex64::from_polar(r, rotation).powu(m as u32)
        })
        .collect();
    let top = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut trimmed = coeffs;
    while trimmed.len() > 1 && trimmed.last().is_some_and(|c| c.norm() <= 1e-10 * top) {
        trimmed.pop();
    }
    out.extend(polynomial_roots(&trimmed));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn couette_potential_values() {
        let p = presets::couette().potential;
        assert!((eval_potential(&p, c(1.0, 0.0), c(0.0, 0.0)) - c(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn couette_poiseuille_potential_values() {
        let p = presets::couette_poiseuille().potential;
        assert!(eval_potential(&p, c(0.0, 0.0), c(0.0, 0.0)).norm() < 1e-15);
        assert!((eval_potential(&p, c(1.0, 0.0), c(0.0, 0.0)) - c(0.0, 0.5)).norm() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = presets::couette_poiseuille().potential;
        let (z, lambda) = (c(0.3, -0.7), c(0.2, -0.4));
        let (_, dp, ddp) = p.eval_with_derivatives(z, lambda);
        let h = 1e-5;
        let fd = (p.eval(z + h, lambda) - p.eval(z - h, lambda)) / (2.0 * h);
        assert!((fd - dp).norm() < 1e-9);
        assert!((ddp - c(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn rejects_degree_zero() {
        assert!(BivariatePotential::new(vec![]).is_err());
        assert!(BivariatePotential::new(vec![vec![c(1.0, 0.0)]]).is_err());
        assert!(BivariatePotential::new(vec![vec![c(1.0, 0.0)], vec![c(0.0, 0.0)]]).is_err());
    }

    #[test]
    fn couette_has_single_turning_point_at_lambda() {
        let p = presets::couette().potential;
        for lambda in [c(0.0, 0.0), c(0.3, -1.2), c(-2.0, 0.5)] {
            let tp = turning_points(&p, lambda, DEFAULT_EPS_TP).unwrap();
            assert_eq!(tp.len(), 1);
            assert_eq!(tp.points[0].multiplicity, 1);
            assert!((tp.points[0].z - lambda).norm() < 1e-14);
        }
    }

    #[test]
    fn couette_poiseuille_turning_points() {
        let p = presets::couette_poiseuille().potential;
        let tp = turning_points(&p, c(0.0, 0.0), DEFAULT_EPS_TP).unwrap();
        assert_eq!(tp.len(), 2);
        assert!((tp.points[0].z - c(0.0, 0.0)).norm() < 1e-14);
        assert!((tp.points[1].z - c(0.5, 0.0)).norm() < 1e-14);
        assert!(tp.all_simple());

        let double = turning_points(&p, c(-1.0 / 16.0, 0.0), DEFAULT_EPS_TP).unwrap();
        assert_eq!(double.len(), 1);
        assert_eq!(double.points[0].multiplicity, 2);
        assert!((double.points[0].z - c(0.25, 0.0)).norm() < 1e-8);
    }

    #[test]
    fn merges_perturbed_double_root() {
        // (z - 1)^2 (z + 2) with the double root split by ~1e-7.
        let eps = 1e-7;
        let r = [c(1.0 + eps, 0.0), c(1.0 - eps, 0.0), c(-2.0, 0.0)];
        let coeffs = vec![
            vec![-r[0] * r[1] * r[2]],
            vec![r[0] * r[1] + r[0] * r[2] + r[1] * r[2]],
            vec![-(r[0] + r[1] + r[2])],
            vec![c(1.0, 0.0)],
        ];
        let p = BivariatePotential::new(coeffs).unwrap();
        let tp = turning_points(&p, c(0.0, 0.0), DEFAULT_EPS_TP).unwrap();
        assert_eq!(tp.len(), 2);
        assert_eq!(tp.total_multiplicity(), 3);
    }

    #[test]
    fn vanishing_leading_coefficient_is_reported() {
        // a_1(λ) = λ
        let p = BivariatePotential::new(vec![vec![c(1.0, 0.0)], vec![c(0.0, 0.0), c(1.0, 0.0)]]).unwrap();
        assert_eq!(
            turning_points(&p, c(0.0, 0.0), DEFAULT_EPS_TP),
            Err(Error::LeadingCoefficientVanishes(c(0.0, 0.0)))
        );
        assert!(sector_data(&p, c(0.0, 0.0)).is_err());
    }

    #[test]
    fn sector_angles() {
        let couette = presets::couette().potential;
        let s = sector_data(&couette, c(0.4, -0.3)).unwrap();
        let expected = [PI / 6.0, 5.0 * PI / 6.0, 3.0 * PI / 2.0];
        for (a, e) in s.angles.iter().zip(expected) {
            assert!((a - e).abs() < 1e-14);
        }

        let linear = BivariatePotential::new(vec![vec![c(0.0, 0.0)], vec![c(1.0, 0.0)]]).unwrap();
        let s = sector_data(&linear, c(0.0, 0.0)).unwrap();
        let expected = [PI / 3.0, PI, 5.0 * PI / 3.0];
        for (a, e) in s.angles.iter().zip(expected) {
            assert!((a - e).abs() < 1e-14);
        }
        assert_eq!(s.center, c(0.0, 0.0));

        let cp = presets::couette_poiseuille().potential;
        let s = sector_data(&cp, c(0.0, 0.0)).unwrap();
        let expected = [PI / 8.0, 5.0 * PI / 8.0, 9.0 * PI / 8.0, 13.0 * PI / 8.0];
        for (a, e) in s.angles.iter().zip(expected) {
            assert!((a - e).abs() < 1e-14);
        }
        assert!((s.center - c(0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn consecutive_sector_angles_are_equally_spaced() {
        let cp = presets::couette_poiseuille().potential;
        let s = sector_data(&cp, c(1.0, -1.0)).unwrap();
        for w in s.angles.windows(2) {
            assert!((angle_distance(w[1], w[0]) - TAU / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn exceptional_directions() {
        let p = presets::couette().potential;
        let a = BoundaryPoint::finite(-1.0, 0.0);
        let b = BoundaryPoint::finite(1.0, 0.0);
        assert!(!is_exceptional(&p, c(0.0, 0.0), a, b, 1e-8));
        assert!(is_exceptional(&p, c(0.0, 0.0), BoundaryPoint::infinite(PI / 6.0), b, 1e-8));
        assert!(!is_exceptional(&p, c(0.0, 0.0), BoundaryPoint::infinite(0.0), b, 1e-8));
    }

    #[test]
    fn constant_path_keeps_labels() {
        let p = presets::couette_poiseuille().potential;
        let start = turning_points(&p, c(0.3, -0.2), DEFAULT_EPS_TP).unwrap();
        let path = vec![c(0.3, -0.2); 4];
        let tracked = track_roots(&p, &path, &start).unwrap();
        for set in tracked {
            for (a, b) in set.points.iter().zip(&start.points) {
                assert_eq!(a.label, b.label);
                assert!((a.z - b.z).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn real_segment_follows_continuous_motion() {
        let p = presets::couette_poiseuille().potential;
        let start = turning_points(&p, c(0.0, 0.0), DEFAULT_EPS_TP).unwrap();
        let path: Vec<Complex64> = (0..=10).map(|k| c(0.1 * k as f64, 0.0)).collect();
        let tracked = track_roots(&p, &path, &start).unwrap();
        for set in &tracked {
            let w = (1.0 / 16.0 + set.lambda).sqrt();
            // label 0 started at z = 0 = 1/4 - 1/4, so it stays on the minus branch.
            assert!((set.points[0].z - (0.25 - w)).norm() < 1e-12);
            assert!((set.points[1].z - (0.25 + w)).norm() < 1e-12);
        }
    }

    #[test]
    fn loop_around_branch_point_swaps_labels() {
        let p = presets::couette_poiseuille().potential;
        let center = c(-1.0 / 16.0, 0.0);
        let path: Vec<Complex64> = (0..=64)
            .map(|k| center + Complex64::from_polar(0.2, TAU * k as f64 / 64.0))
            .collect();
        let start = turning_points(&p, path[0], DEFAULT_EPS_TP).unwrap();
        let tracked = track_roots(&p, &path, &start).unwrap();
        let end = tracked.last().unwrap();
        assert!((end.points[0].z - start.points[1].z).norm() < 1e-10);
        assert!((end.points[1].z - start.points[0].z).norm() < 1e-10);

        // A loop that does not enclose the branch point returns the identity.
        let other = c(1.0, -1.0);
        let path: Vec<Complex64> = (0..=64)
            .map(|k| other + Complex64::from_polar(0.2, TAU * k as f64 / 64.0))
            .collect();
        let start = turning_points(&p, path[0], DEFAULT_EPS_TP).unwrap();
        let end = track_roots(&p, &path, &start).unwrap().pop().unwrap();
        assert!((end.points[0].z - start.points[0].z).norm() < 1e-10);
    }

    #[test]
    fn path_through_branch_point_is_rejected() {
        let p = presets::couette_poiseuille().potential;
        let start = turning_points(&p, c(-0.5, 0.0), DEFAULT_EPS_TP).unwrap();
        let err = track_roots(&p, &[c(-0.5, 0.0), c(0.5, 0.0)], &start).unwrap_err();
        assert!(matches!(err, Error::BranchPointEncountered(_)));
    }

    #[test]
    fn branch_points_of_couette_poiseuille() {
        let p = presets::couette_poiseuille().potential;
        let bp = singular_parameters(&p, 1.0).unwrap();
        assert_eq!(bp.len(), 1);
        assert!((bp[0] - c(-1.0 / 16.0, 0.0)).norm() < 1e-10);
        assert!(singular_parameters(&presets::couette().potential, 1.0).unwrap().is_empty());
    }

    #[test]
    fn perfect_square_is_degenerate() {
        // (z - λ)^2
        let p = BivariatePotential::new(vec![
            vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
            vec![c(0.0, 0.0), c(-2.0, 0.0)],
            vec![c(1.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(singular_parameters(&p, 1.0), Err(Error::DegenerateDiscriminant));
    }

    #[test]
    fn base_point_avoids_excluded_discs() {
        let mut g = ParameterDomain::new(c(-0.0625, -2.0), c(1.5, 0.0)).unwrap();
        g.exclude_singular_points(&presets::couette_poiseuille().potential, 1e-2).unwrap();
        assert_eq!(g.excluded.len(), 1);
        let base = g.base_point(20);
        assert!(base.re > 1.0 && base.im < -1.5);
    }
}
