//! Singular, critical and balanced curves in the λ-plane and the limit
//! spectral graph assembled from their essential parts.

mod tracer;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use tracer::{trace_zero_set, Polyline, StopReason, ZeroSetOptions};

use crate::error::{Error, Result};
use crate::phase::{
    boundary_integral, endpoint_integral_from, pair_integral_between, polyline_distance, ContourPath, PhaseValue,
};
use crate::poly::{BivariatePotential, BoundaryPoint, ParameterDomain, RootLabeling, TurningPoint, TurningPointSet};
use crate::stokes::{trace_graph_with, StokesGraph, TraceOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CurveKind {
    Singular(usize, usize),
    /// `Re C_j(a, λ) = 0`.
    CriticalA(usize),
    /// `Re C_j(b, λ) = 0`.
    CriticalB(usize),
    Balanced,
}

impl CurveKind {
    pub fn name(&self) -> &'static str {
        match self {
            CurveKind::Singular(..) => "singular",
            CurveKind::CriticalA(_) => "critical_a",
            CurveKind::CriticalB(_) => "critical_b",
            CurveKind::Balanced => "balanced",
        }
    }

    pub fn label(&self) -> String {
        match self {
            CurveKind::Singular(j, l) => format!("{j}-{l}"),
            CurveKind::CriticalA(j) | CurveKind::CriticalB(j) => j.to_string(),
            CurveKind::Balanced => String::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CurveEnd {
    /// At the boundary of the parameter rectangle.
    Open,
    /// Where another curve crosses or where the essential flag changes.
    Junction,
    /// At an excluded disc around a turning-point collision.
    Degenerate,
    /// The curve is a closed loop.
    Closed,
    /// Tracing stopped (bifurcation or step collapse).
    Stalled,
}

impl From<StopReason> for CurveEnd {
    fn from(r: StopReason) -> Self {
        match r {
            StopReason::Boundary => CurveEnd::Open,
            StopReason::Excluded => CurveEnd::Degenerate,
            StopReason::Closed => CurveEnd::Closed,
            StopReason::Bifurcation | StopReason::Stalled => CurveEnd::Stalled,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralCurve {
    pub kind: CurveKind,
    /// Index of the integration route (balanced curves; 0 otherwise).
    pub route: usize,
    pub samples: Vec<Complex64>,
    pub essential: Vec<bool>,
    pub endpoints: [CurveEnd; 2],
}

impl SpectralCurve {
    pub fn length(&self) -> f64 {
        self.samples.windows(2).map(|w| (w[1] - w[0]).norm()).sum()
    }

    /// Maximal runs with `essential == true`, as separate curves.
    pub fn essential_parts(&self) -> Vec<SpectralCurve> {
        let mut parts = Vec::new();
        let mut i = 0;
        let n = self.samples.len();
        while i < n {
            if !self.essential[i] {
                i += 1;
                continue;
            }
            let start = i;
            while i < n && self.essential[i] {
                i += 1;
            }
            if i - start < 2 {
                continue;
            }
            let first = if start == 0 { self.endpoints[0] } else { CurveEnd::Junction };
            let last = if i == n { self.endpoints[1] } else { CurveEnd::Junction };
            parts.push(SpectralCurve {
                kind: self.kind,
                route: self.route,
                samples: self.samples[start..i].to_vec(),
                essential: vec![true; i - start],
                endpoints: [first, last],
            });
        }
        parts
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Junction {
    pub lambda: Complex64,
    pub curves: (usize, usize),
}

/// Balanced and essential curves with their junctions.
#[derive(Clone, Debug, Serialize)]
pub struct LimitSpectralGraph {
    pub curves: Vec<SpectralCurve>,
    pub junctions: Vec<Junction>,
    /// Endpoints of member curves at excluded discs (turning-point collisions).
    pub limit_points: Vec<Complex64>,
    /// All traced curves, with essential flags, for reporting.
    pub candidates: Vec<SpectralCurve>,
}

impl LimitSpectralGraph {
    /// Distance from `lambda` to the union of member curves.
    pub fn distance(&self, lambda: Complex64) -> f64 {
        self.curves
            .iter()
            .map(|c| polyline_distance(&c.samples, lambda))
            .fold(f64::INFINITY, f64::min)
    }
}

const FLAG_BISECTIONS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurveOptions {
    pub zero_set: ZeroSetOptions,
    pub trace: TraceOptions,
    /// Essential flags are evaluated at every `essential_stride`-th sample and
    /// bisected where they change.
    pub essential_stride: usize,
    /// Offset of balanced-route waypoints from the turning points, relative to `|b - a|`.
    pub route_offset_rel: f64,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self {
            zero_set: ZeroSetOptions::default(),
            trace: TraceOptions::default(),
            essential_stride: 5,
            route_offset_rel: 0.25,
        }
    }
}

/// A boundary problem together with its parameter domain and the labeling of
/// turning points over it.
#[derive(Clone, Debug)]
pub struct CurveProblem {
    pub potential: BivariatePotential,
    pub a: BoundaryPoint,
    pub b: BoundaryPoint,
    pub domain: ParameterDomain,
    pub labeling: RootLabeling,
    pub opts: CurveOptions,
}

impl CurveProblem {
    pub fn new(
        potential: BivariatePotential,
        a: BoundaryPoint,
        b: BoundaryPoint,
        domain: ParameterDomain,
        opts: CurveOptions,
    ) -> Result<Self> {
        domain.validate()?;
        if a == b {
            return Err(Error::Validation("boundary points coincide".into()));
        }
        let base = domain.base_point(opts.zero_set.grid_n);
        let labeling = RootLabeling::new(&potential, base)?;
        Ok(Self {
            potential,
            a,
            b,
            domain,
            labeling,
            opts,
        })
    }

    /// Turning points at `λ` labelled by continuation from the base point.
    pub fn turning_points(&self, lambda: Complex64) -> Result<TurningPointSet> {
        let roots = self.labeling.roots_at(lambda)?;
        Ok(TurningPointSet {
            lambda,
            points: roots
                .into_iter()
                .enumerate()
                .map(|(label, z)| TurningPoint {
                    label,
                    z,
                    multiplicity: 1,
                })
                .collect(),
        })
    }

    pub fn graph(&self, lambda: Complex64) -> Result<StokesGraph> {
        trace_graph_with(&self.potential, self.turning_points(lambda)?, &self.opts.trace)
    }

    fn finite_endpoints(&self) -> Option<(Complex64, Complex64)> {
        Some((self.a.as_finite()?, self.b.as_finite()?))
    }

    /// Number of candidate routes for `B(a, b, λ)`: the straight segment and a
    /// detour on either side of each turning point.
    pub fn route_count(&self) -> usize {
        1 + 2 * self.labeling.count()
    }

    pub fn route(&self, index: usize, tps: &TurningPointSet) -> Result<ContourPath> {
        let (a, b) = self
            .finite_endpoints()
            .ok_or_else(|| Error::Validation("balanced curves need finite boundary points".into()))?;
        if index == 0 {
            return Ok(ContourPath::straight(a, b));
        }
        let j = (index - 1) / 2;
        let side = if (index - 1) % 2 == 0 { -Complex64::i() } else { Complex64::i() };
        let unit = (b - a) / (b - a).norm();
        let z = tps
            .by_label(j)
            .ok_or_else(|| Error::Validation(format!("no turning point {j}")))?
            .z;
        let rho = self.opts.route_offset_rel * (b - a).norm();
        Ok(ContourPath::via(a, z + side * unit * rho, b))
    }

    /// The defining integral of `kind` at `λ`, standardized to `Im ≥ 0`.
    pub fn defining_integral(&self, kind: CurveKind, route: usize, lambda: Complex64) -> Result<PhaseValue> {
        let tps = self.turning_points(lambda)?;
        let z = |j: usize| {
            tps.by_label(j)
                .map(|t| t.z)
                .ok_or_else(|| Error::Validation(format!("no turning point {j}")))
        };
        match kind {
            CurveKind::Singular(j, l) => pair_integral_between(&self.potential, &tps, z(j)?, z(l)?),
            CurveKind::CriticalA(j) => endpoint_integral_from(&self.potential, &tps, z(j)?, self.a),
            CurveKind::CriticalB(j) => endpoint_integral_from(&self.potential, &tps, z(j)?, self.b),
            CurveKind::Balanced => {
                let r = self.route(route, &tps)?;
                boundary_integral(&self.potential, lambda, self.a, self.b, Some(&r))
            }
        }
    }

    fn trace_kind(&self, kind: CurveKind, route: usize) -> Result<Vec<SpectralCurve>> {
        let f = |lambda: Complex64| self.defining_integral(kind, route, lambda).ok().map(|v| v.value.re);
        let lines = trace_zero_set(&f, &self.domain, &self.opts.zero_set)?;
        Ok(lines
            .into_iter()
            .filter(|l| l.points.len() >= 2)
            .map(|l| SpectralCurve {
                kind,
                route,
                essential: vec![false; l.points.len()],
                samples: l.points,
                endpoints: [l.start.into(), l.end.into()],
            })
            .collect())
    }

    pub fn singular_curves(&self) -> Result<Vec<SpectralCurve>> {
        let n = self.labeling.count();
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|j| (j + 1..n).map(move |l| (j, l))).collect();
        let traced: Vec<Vec<SpectralCurve>> = pairs
            .par_iter()
            .map(|&(j, l)| self.trace_kind(CurveKind::Singular(j, l), 0))
            .collect::<Result<_>>()?;
        Ok(traced.into_iter().flatten().collect())
    }

    /// Critical curves through the finite boundary point `a` (`side_a`) or `b`.
    pub fn critical_curves(&self, side_a: bool) -> Result<Vec<SpectralCurve>> {
        let p = if side_a { self.a } else { self.b };
        if !p.is_finite() {
            return Err(Error::Validation("critical curves need a finite boundary point".into()));
        }
        let traced: Vec<Vec<SpectralCurve>> = (0..self.labeling.count())
            .into_par_iter()
            .map(|j| {
                let kind = if side_a { CurveKind::CriticalA(j) } else { CurveKind::CriticalB(j) };
                self.trace_kind(kind, 0)
            })
            .collect::<Result<_>>()?;
        Ok(traced.into_iter().flatten().collect())
    }

    /// Whether the balanced condition along `route` is realized at `λ`: the
    /// endpoints lie in a common canonical domain and the route stays in one
    /// admissible domain of every complex.
    pub fn balanced_admissible(&self, route: usize, lambda: Complex64) -> Option<bool> {
        let tps = self.turning_points(lambda).ok()?;
        let path = self.route(route, &tps).ok()?;
        let graph = trace_graph_with(&self.potential, tps, &self.opts.trace).ok()?;
        if !graph.in_common_canonical_domain(self.a, self.b).ok()? {
            return Some(false);
        }
        let mut pts = Vec::new();
        for w in path.points.windows(2) {
            for i in 0..32 {
                pts.push(BoundaryPoint::Finite(w[0] + (w[1] - w[0]) * (i as f64 / 32.0)));
            }
        }
        pts.push(BoundaryPoint::Finite(path.end()));
        Some(graph.admissible(&pts))
    }

    /// Balanced curves: zero sets of `Re B` along each candidate route,
    /// restricted to the samples where that route is admissible.
    pub fn balanced_curves(&self) -> Result<Vec<SpectralCurve>> {
        let (a, b) = self
            .finite_endpoints()
            .ok_or_else(|| Error::Validation("balanced curves need finite boundary points".into()))?;
        if (a - b).norm() == 0.0 {
            return Err(Error::Validation("boundary points coincide".into()));
        }
        let traced: Vec<Vec<SpectralCurve>> = (0..self.route_count())
            .into_par_iter()
            .map(|r| self.trace_kind(CurveKind::Balanced, r))
            .collect::<Result<_>>()?;
        let mut accepted: Vec<SpectralCurve> = Vec::new();
        let tol = 1e-3 * self.domain.diameter();
        for curve in traced.into_iter().flatten() {
            let flags = sample_flags(curve.samples.len(), self.opts.essential_stride, |i| {
                self.balanced_admissible(curve.route, curve.samples[i])
            });
            let flagged = SpectralCurve {
                essential: flags,
                ..curve
            };
            for part in flagged.essential_parts() {
                // Routes agree wherever both are admissible; keep one copy.
                let fresh: Vec<bool> = part
                    .samples
                    .iter()
                    .map(|&z| accepted.iter().all(|c| polyline_distance(&c.samples, z) > tol))
                    .collect();
                let dedup = SpectralCurve {
                    essential: fresh,
                    ..part
                };
                accepted.extend(dedup.essential_parts());
            }
        }
        Ok(accepted)
    }

    /// Whether the defining structure of `kind` is present at `λ` and the
    /// boundary points are not linked with respect to the defining complex.
    pub fn essential_at(&self, kind: CurveKind, lambda: Complex64) -> Option<bool> {
        let graph = self.graph(lambda).ok()?;
        let (j, on) = match kind {
            CurveKind::Singular(j, l) => {
                let cx = graph.complex_of(j)?;
                if !cx.contains(l) {
                    return Some(false);
                }
                (j, None)
            }
            CurveKind::CriticalA(j) => (j, Some(self.a)),
            CurveKind::CriticalB(j) => (j, Some(self.b)),
            CurveKind::Balanced => return Some(true),
        };
        let cx = graph.complex_of(j)?;
        let arr = graph.arrangement(cx.index);
        let on_line = self.opts.trace.on_line_rel * graph.scale();
        for p in [self.a, self.b].iter().filter_map(|p| p.as_finite()) {
            // A boundary point sitting on a turning point touches every face.
            if graph.turning_points.clearance(p) <= 2.0 * on_line {
                return None;
            }
        }
        if let Some(BoundaryPoint::Finite(p)) = on {
            // The curve is realized only when a line of this complex passes through p.
            if arr.distance_to_lines(p) > on_line {
                return Some(false);
            }
        }
        Some(!arr.are_linked(self.a, self.b))
    }

    pub fn essential_filter(&self, curve: &SpectralCurve) -> SpectralCurve {
        let flag_at = |z: Complex64| {
            if !self.domain.contains(z) {
                return Some(false);
            }
            self.essential_at(curve.kind, z)
        };
        let flags = sample_flags(curve.samples.len(), self.opts.essential_stride, |i| flag_at(curve.samples[i]));
        // Locate each change of flag between neighbouring samples on the chord.
        let mut samples = Vec::with_capacity(curve.samples.len());
        let mut essential = Vec::with_capacity(curve.samples.len());
        for i in 0..curve.samples.len() {
            samples.push(curve.samples[i]);
            essential.push(flags[i]);
            if i + 1 == curve.samples.len() || flags[i] == flags[i + 1] {
                continue;
            }
            let (mut lo, mut hi) = (curve.samples[i], curve.samples[i + 1]);
            for _ in 0..FLAG_BISECTIONS {
                let mid = 0.5 * (lo + hi);
                match flag_at(mid) {
                    Some(f) if f == flags[i] => lo = mid,
                    Some(_) => hi = mid,
                    None => break,
                }
            }
            let edge = if flags[i] { lo } else { hi };
            if edge != curve.samples[i] && edge != curve.samples[i + 1] {
                samples.push(edge);
                essential.push(true);
            }
        }
        SpectralCurve {
            samples,
            essential,
            ..curve.clone()
        }
    }

    /// The limit spectral graph, with the curve families selected by the
    /// finiteness of the boundary points.
    pub fn assemble(&self) -> Result<LimitSpectralGraph> {
        let (fa, fb) = (self.a.is_finite(), self.b.is_finite());
        let mut candidates: Vec<SpectralCurve> = self.singular_curves()?;
        if fa {
            candidates.extend(self.critical_curves(true)?);
        }
        if fb {
            candidates.extend(self.critical_curves(false)?);
        }
        let mut candidates: Vec<SpectralCurve> = candidates.par_iter().map(|c| self.essential_filter(c)).collect();
        let mut curves: Vec<SpectralCurve> = candidates.iter().flat_map(|c| c.essential_parts()).collect();
        if fa && fb {
            let balanced = self.balanced_curves()?;
            candidates.extend(balanced.iter().cloned());
            curves.extend(balanced);
        }

        // Fragments shorter than one tracing step are flag noise at coincidences.
        let min_len = self.opts.zero_set.h_max_rel * self.domain.diameter();
        curves.retain(|c| c.length() >= min_len);

        let tol = 1e-3 * self.domain.diameter();
        let mut junctions = Vec::new();
        for i in 0..curves.len() {
            for j in i + 1..curves.len() {
                for lambda in crossings(&curves[i].samples, &curves[j].samples, tol) {
                    junctions.push(Junction {
                        lambda,
                        curves: (i, j),
                    });
                }
            }
        }
        for (i, c) in curves.iter_mut().enumerate() {
            for (end, z) in [(0, c.samples[0]), (1, *c.samples.last().unwrap())] {
                if junctions
                    .iter()
                    .any(|jn| (jn.curves.0 == i || jn.curves.1 == i) && (jn.lambda - z).norm() < 10.0 * tol)
                {
                    c.endpoints[end] = CurveEnd::Junction;
                }
            }
        }
        let limit_points = curves
            .iter()
            .flat_map(|c| {
                [(c.endpoints[0], c.samples[0]), (c.endpoints[1], *c.samples.last().unwrap())]
            })
            .filter(|(e, _)| *e == CurveEnd::Degenerate)
            .filter_map(|(_, z)| {
                self.domain
                    .excluded
                    .iter()
                    .find(|d| (d.center - z).norm() <= d.radius * 1.5)
                    .map(|d| d.center)
            })
            .fold(Vec::new(), |mut acc: Vec<Complex64>, z| {
                if !acc.iter().any(|w| (w - z).norm() < 1e-12) {
                    acc.push(z);
                }
                acc
            });
        Ok(LimitSpectralGraph {
            curves,
            junctions,
            limit_points,
            candidates,
        })
    }
}

/// Evaluates `flag` at every `stride`-th index (and the last), bisecting
/// between evaluated indices whose flags differ. Failed evaluations take the
/// value of the nearest successful neighbour.
pub fn sample_flags<F>(n: usize, stride: usize, flag: F) -> Vec<bool>
where
    F: Fn(usize) -> Option<bool> + Sync,
{
    if n == 0 {
        return Vec::new();
    }
    let stride = stride.max(1);
    let mut coarse: Vec<usize> = (0..n).step_by(stride).collect();
    if *coarse.last().unwrap() != n - 1 {
        coarse.push(n - 1);
    }
    let mut known: Vec<Option<Option<bool>>> = vec![None; n];
    let values: Vec<Option<bool>> = coarse.par_iter().map(|&i| flag(i)).collect();
    for (&i, v) in coarse.iter().zip(values) {
        known[i] = Some(v);
    }
    let resolved = |known: &Vec<Option<Option<bool>>>, i: usize| -> Option<bool> {
        known[i].flatten()
    };
    for w in coarse.windows(2) {
        let (mut lo, mut hi) = (w[0], w[1]);
        let (flo, fhi) = (resolved(&known, lo), resolved(&known, hi));
        if flo.is_none() || fhi.is_none() || flo == fhi {
            continue;
        }
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let v = flag(mid);
            known[mid] = Some(v);
            match v {
                Some(x) if Some(x) == flo => lo = mid,
                Some(_) => hi = mid,
                None => break,
            }
        }
    }
    let mut out = vec![false; n];
    let mut last: Option<bool> = None;
    let first_known = (0..n).find_map(|i| resolved(&known, i)).unwrap_or(false);
    for i in 0..n {
        if let Some(v) = resolved(&known, i) {
            last = Some(v);
        }
        out[i] = last.unwrap_or(first_known);
    }
    out
}

/// Approximate intersection points of two polylines (segment crossings and
/// endpoint touches within `tol`).
pub fn crossings(a: &[Complex64], b: &[Complex64], tol: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::new();
    let mut push = |z: Complex64| {
        if !out.iter().any(|w| (w - z).norm() < 10.0 * tol) {
            out.push(z);
        }
    };
    for s in a.windows(2) {
        for t in b.windows(2) {
            if let Some(z) = segment_intersection(s[0], s[1], t[0], t[1]) {
                push(z);
            }
        }
    }
    for &z in [a[0], *a.last().unwrap()].iter() {
        if polyline_distance(b, z) < tol {
            push(z);
        }
    }
    for &z in [b[0], *b.last().unwrap()].iter() {
        if polyline_distance(a, z) < tol {
            push(z);
        }
    }
    out
}

pub fn segment_intersection(p0: Complex64, p1: Complex64, q0: Complex64, q1: Complex64) -> Option<Complex64> {
    let r = p1 - p0;
    let s = q1 - q0;
    let cross = |u: Complex64, v: Complex64| u.re * v.im - u.im * v.re;
    let denom = cross(r, s);
    if denom.abs() < 1e-300 {
        return None;
    }
    let t = cross(q0 - p0, s) / denom;
    let u = cross(q0 - p0, r) / denom;
    ((0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u)).then(|| p0 + r * t)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_with_bisection() {
        let n = 23;
        let flags = sample_flags(n, 5, |i| Some(i >= 13));
        for (i, f) in flags.iter().enumerate() {
            assert_eq!(*f, i >= 13, "index {i}");
        }
    }

    #[test]
    fn flags_fill_failures_from_neighbours() {
        let flags = sample_flags(11, 5, |i| if i == 5 { None } else { Some(true) });
        assert!(flags.iter().all(|&f| f));
    }

    #[test]
    fn essential_parts_split_runs() {
        let c = SpectralCurve {
            kind: CurveKind::Singular(0, 1),
            route: 0,
            samples: (0..6).map(|i| Complex64::new(i as f64, 0.0)).collect(),
            essential: vec![true, true, false, true, true, true],
            endpoints: [CurveEnd::Open, CurveEnd::Degenerate],
        };
        let parts = c.essential_parts();
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[0].endpoints, [CurveEnd::Open, CurveEnd::Junction]);
        assert_eq!(parts[1].endpoints, [CurveEnd::Junction, CurveEnd::Degenerate]);
    }

    #[test]
    fn segment_crossing() {
        let z = segment_intersection(
            Complex64::new(-1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
        )
        .unwrap();
        assert!(z.norm() < 1e-15);
    }
}
