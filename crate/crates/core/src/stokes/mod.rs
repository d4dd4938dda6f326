//! Stokes lines, complexes and graphs at fixed λ, and the linkedness of
//! boundary points with respect to them.

mod faces;
mod trace;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

pub use faces::{Arrangement, Edge, EdgeEnd, Face, FaceId};
pub use trace::{initial_directions, local_coefficient};

use crate::error::{Error, Result};
use crate::poly::{
    angle_distance, sector_data, turning_points, BivariatePotential, BoundaryPoint, SectorData, TurningPoint,
    TurningPointSet, DEFAULT_EPS_TP,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Terminus {
    /// Ends at the turning point with this label.
    Hits(usize),
    /// Leaves the disc of radius `R_esc` along the asymptote `sector`;
    /// `angle` is the direction at the last sample seen from the sector center.
    Escapes { sector: usize, angle: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StokesLine {
    pub origin: usize,
    pub initial_angle: f64,
    /// Starts at the origin turning point.
    pub samples: Vec<Complex64>,
    pub terminus: Terminus,
}

impl StokesLine {
    pub fn escapes(&self) -> bool {
        matches!(self.terminus, Terminus::Escapes { .. })
    }

    fn reversed(&self, new_origin: usize, angle: f64) -> Self {
        let mut samples = self.samples.clone();
        samples.reverse();
        Self {
            origin: new_origin,
            initial_angle: angle,
            samples,
            terminus: Terminus::Hits(self.origin),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Classification {
    Simple,
    Compound { points: usize },
}

#[derive(Clone, Debug, Serialize)]
pub struct StokesComplex {
    pub index: usize,
    pub points: Vec<TurningPoint>,
    pub lines: Vec<StokesLine>,
    pub classification: Classification,
}

impl StokesComplex {
    pub fn labels(&self) -> Vec<usize> {
        self.points.iter().map(|t| t.label).collect()
    }

    pub fn contains(&self, label: usize) -> bool {
        self.points.iter().any(|t| t.label == label)
    }

    pub fn escaping_lines(&self) -> usize {
        self.lines.iter().filter(|l| l.escapes()).count()
    }
}

/// Tracing parameters. Relative quantities scale with the turning-point
/// separation or with `1 + max |z_j - center|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
#[serde(default)]
pub struct TraceOptions {
    /// Escape radius; `None` selects `3 (max |z_j| + 1)`.
    pub r_esc: Option<f64>,
    pub eps_hit_rel: f64,
    pub eps_ang: f64,
    pub r0_rel: f64,
    pub h_max_rel: f64,
    /// Largest direction change per step (radians).
    pub turn_tol: f64,
    pub max_steps: usize,
    /// Tracing continues up to `escape_span · R_esc` waiting for the escape
    /// angle to settle.
    pub escape_span: f64,
    /// Points closer than this (times the scale) to a line count as on it.
    pub on_line_rel: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            r_esc: None,
            eps_hit_rel: 1e-4,
            eps_ang: 1e-2,
            r0_rel: 1e-3,
            h_max_rel: 0.05,
            turn_tol: 0.02,
            max_steps: 20_000,
            escape_span: 16.0,
            on_line_rel: 1e-3,
        }
    }
}

/// All Stokes complexes of `P(·, λ)`.
#[derive(Clone, Debug)]
pub struct StokesGraph {
    pub lambda: Complex64,
    pub turning_points: TurningPointSet,
    pub sectors: SectorData,
    pub complexes: Vec<StokesComplex>,
    pub r_esc: f64,
    pub arrangements: Vec<Arrangement>,
}

impl StokesGraph {
    pub fn lines(&self) -> impl Iterator<Item = &StokesLine> {
        self.complexes.iter().flat_map(|c| c.lines.iter())
    }

    /// Complex containing the turning point `label`.
    pub fn complex_of(&self, label: usize) -> Option<&StokesComplex> {
        self.complexes.iter().find(|c| c.contains(label))
    }

    pub fn arrangement(&self, complex: usize) -> &Arrangement {
        &self.arrangements[complex]
    }

    pub fn locate(&self, complex: usize, p: BoundaryPoint) -> Result<FaceId> {
        self.arrangements[complex].locate(p)
    }

    pub fn are_linked(&self, complex: usize, a: BoundaryPoint, b: BoundaryPoint) -> bool {
        self.arrangements[complex].are_linked(a, b)
    }

    /// Linkedness with respect to every complex.
    pub fn in_common_canonical_domain(&self, a: BoundaryPoint, b: BoundaryPoint) -> Result<bool> {
        self.check_boundary_points(&[a, b])?;
        Ok(self.arrangements.iter().all(|arr| arr.are_linked(a, b)))
    }

    /// Whether the points (e.g. samples of an integration route) lie in one
    /// admissible domain of every complex.
    pub fn admissible(&self, points: &[BoundaryPoint]) -> bool {
        self.arrangements.iter().all(|arr| arr.admissible(points))
    }

    fn check_boundary_points(&self, points: &[BoundaryPoint]) -> Result<()> {
        for p in points {
            if let Some(z) = p.as_finite() {
                if self.turning_points.clearance(z) <= 1e-12 * (1.0 + z.norm()) {
                    return Err(Error::TooCloseToTurningPoint(z));
                }
            }
        }
        Ok(())
    }

    /// Scale used for the relative tolerances.
    pub fn scale(&self) -> f64 {
        graph_scale(&self.turning_points, &self.sectors)
    }
}

fn graph_scale(tps: &TurningPointSet, sectors: &SectorData) -> f64 {
    1.0 + tps
        .points
        .iter()
        .map(|t| (t.z - sectors.center).norm())
        .fold(0.0, f64::max)
}

struct UnionFind(Vec<usize>);

impl UnionFind {
    fn find(&mut self, i: usize) -> usize {
        if self.0[i] != i {
            let root = self.find(self.0[i]);
            self.0[i] = root;
        }
        self.0[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.0[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Traces the Stokes graph at `λ`.
pub fn trace_graph(p: &BivariatePotential, lambda: Complex64, opts: &TraceOptions) -> Result<StokesGraph> {
    let tps = turning_points(p, lambda, DEFAULT_EPS_TP)?;
    trace_graph_with(p, tps, opts)
}

/// Traces the Stokes graph for given (already labelled) turning points.
pub fn trace_graph_with(p: &BivariatePotential, tps: TurningPointSet, opts: &TraceOptions) -> Result<StokesGraph> {
    let lambda = tps.lambda;
    if tps.min_separation() <= 1e-8 * (1.0 + tps.positions().iter().map(|z| z.norm()).fold(0.0, f64::max)) {
        return Err(Error::DegenerateTurningPoints(0, 1));
    }
    let sectors = sector_data(p, lambda)?;
    let scale = graph_scale(&tps, &sectors);
    let r_esc = opts.r_esc.unwrap_or_else(|| {
        3.0 * (tps.points.iter().map(|t| t.z.norm()).fold(0.0, f64::max) + 1.0)
    });
    let tracer = trace::LineTracer {
        p,
        tps: &tps,
        sectors: &sectors,
        opts,
        scale,
        r_esc,
    };

    let jobs: Vec<(usize, f64)> = tps
        .points
        .iter()
        .enumerate()
        .flat_map(|(idx, t)| {
            let c = local_coefficient(p, &tps, idx);
            initial_directions(c, t.multiplicity).into_iter().map(move |theta| (idx, theta))
        })
        .collect();
    let traced: Vec<StokesLine> = jobs
        .par_iter()
        .map(|&(idx, theta)| tracer.trace(idx, theta))
        .collect::<Result<_>>()?;
    let mut per_point: Vec<Vec<StokesLine>> = vec![Vec::new(); tps.len()];
    let index_of = |label: usize| tps.points.iter().position(|t| t.label == label).expect("known label");
    for line in traced {
        per_point[index_of(line.origin)].push(line);
    }

    // A finite line is traced from both ends; make the two copies coincide.
    for u in 0..tps.len() {
        for li in 0..per_point[u].len() {
            let line = per_point[u][li].clone();
            let Terminus::Hits(target) = line.terminus else { continue };
            if line.origin > target {
                continue;
            }
            let v = index_of(target);
            let n = line.samples.len();
            let arrival = (line.samples[n - 2] - line.samples[n - 1]).arg();
            if let Some((best, _)) = per_point[v]
                .iter()
                .enumerate()
                .map(|(i, l)| (i, angle_distance(l.initial_angle, arrival)))
                .min_by(|x, y| x.1.total_cmp(&y.1))
            {
                let angle = per_point[v][best].initial_angle;
                per_point[v][best] = line.reversed(tps.points[v].label, angle);
            }
        }
    }

    let mut uf = UnionFind((0..tps.len()).collect());
    for (u, lines) in per_point.iter().enumerate() {
        for line in lines {
            if let Terminus::Hits(target) = line.terminus {
                uf.union(u, index_of(target));
            }
        }
    }
    let mut roots: Vec<usize> = (0..tps.len()).map(|i| uf.find(i)).collect();
    let mut order = roots.clone();
    order.sort_unstable();
    order.dedup();
    let mut complexes = Vec::new();
    for (index, root) in order.iter().enumerate() {
        let members: Vec<usize> = (0..tps.len()).filter(|&i| roots[i] == *root).collect();
        let points: Vec<TurningPoint> = members.iter().map(|&i| tps.points[i]).collect();
        let lines: Vec<StokesLine> = members.iter().flat_map(|&i| per_point[i].clone()).collect();
        let simple = points.len() == 1 && points[0].multiplicity == 1 && lines.iter().all(|l| l.escapes());
        complexes.push(StokesComplex {
            index,
            classification: if simple {
                Classification::Simple
            } else {
                Classification::Compound { points: points.len() }
            },
            points,
            lines,
        });
    }
    roots.clear();

    let on_line = opts.on_line_rel * scale;
    let arrangements = complexes
        .iter()
        .map(|c| Arrangement::build(c, &sectors, on_line))
        .collect::<Result<Vec<_>>>()?;
    Ok(StokesGraph {
        lambda,
        turning_points: tps,
        sectors,
        complexes,
        r_esc,
        arrangements,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase::action_integral;
    use crate::phase::{BranchState, ContourPath};
    use crate::presets;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn max_re_action(p: &BivariatePotential, lambda: Complex64, line: &StokesLine) -> f64 {
        let z0 = line.samples[0];
        let mut worst: f64 = 0.0;
        for i in (2..line.samples.len()).step_by(7) {
            let route = ContourPath::new(line.samples[..=i].to_vec());
            let zi = line.samples[i];
            let s = action_integral(p, lambda, z0, zi, BranchState::principal(p, lambda, zi), &route).unwrap();
            worst = worst.max(s.value.re.abs() / (1.0 + s.value.norm()));
        }
        worst
    }

    #[test]
    fn couette_graph_at_zero_is_three_rays() {
        let p = presets::couette().potential;
        let g = trace_graph(&p, c(0.0, 0.0), &TraceOptions::default()).unwrap();
        assert_eq!(g.complexes.len(), 1);
        assert_eq!(g.complexes[0].classification, Classification::Simple);
        let expected = [PI / 6.0, 5.0 * PI / 6.0, 1.5 * PI];
        for line in g.lines() {
            let Terminus::Escapes { angle, .. } = line.terminus else { panic!() };
            assert!(expected.iter().any(|e| angle_distance(*e, angle) < 1e-6));
            // Straight rays.
            for z in &line.samples[1..] {
                assert!(angle_distance(z.arg(), angle) < 1e-6);
            }
            assert!(max_re_action(&p, c(0.0, 0.0), line) < 1e-9);
        }
        assert_eq!(g.arrangements[0].face_count(), 3);
        for f in 0..3 {
            for h in 0..3 {
                assert_eq!(g.arrangements[0].adjacent(f, h), f != h);
            }
        }
    }

    #[test]
    fn couette_locate_and_linkedness() {
        let p = presets::couette().potential;
        let g = trace_graph(&p, c(0.0, 0.0), &TraceOptions::default()).unwrap();
        let arr = g.arrangement(0);
        let plus = arr.locate(BoundaryPoint::finite(1.0, 0.0)).unwrap();
        let minus = arr.locate(BoundaryPoint::finite(-1.0, 0.0)).unwrap();
        let down = arr.locate(BoundaryPoint::infinite(-PI / 3.0)).unwrap();
        let up = arr.locate(BoundaryPoint::infinite(PI / 2.0)).unwrap();
        assert_ne!(plus, minus);
        assert_eq!(plus, down);
        assert_ne!(up, plus);
        assert_ne!(up, minus);
        assert_eq!(arr.locate(BoundaryPoint::finite(1.0, -3.0)).unwrap(), plus);
        assert!(g
            .in_common_canonical_domain(BoundaryPoint::finite(-1.0, 0.0), BoundaryPoint::finite(1.0, 0.0))
            .unwrap());
        assert!(matches!(
            arr.locate(BoundaryPoint::finite(0.0, -1.0)),
            Err(Error::OnStokesLine(_))
        ));
    }

    #[test]
    fn couette_poiseuille_compound_on_singular_line() {
        let p = presets::couette_poiseuille().potential;
        let lambda = c(0.1, -0.1625);
        let g = trace_graph(&p, lambda, &TraceOptions::default()).unwrap();
        assert_eq!(g.complexes.len(), 1);
        let cx = &g.complexes[0];
        assert_eq!(cx.classification, Classification::Compound { points: 2 });
        assert_eq!(cx.escaping_lines(), 4);
        assert_eq!(g.arrangements[0].face_count(), 4);
        for line in g.lines() {
            assert!(max_re_action(&p, lambda, line) < 1e-8);
        }
    }

    #[test]
    fn couette_poiseuille_regular_graph() {
        let p = presets::couette_poiseuille().potential;
        let g = trace_graph(&p, c(1.0, 0.0), &TraceOptions::default()).unwrap();
        assert_eq!(g.complexes.len(), 2);
        assert!(g.complexes.iter().all(|c| c.classification == Classification::Simple));
        assert_eq!(g.lines().filter(|l| l.escapes()).count(), 6);
        for line in g.lines() {
            let Terminus::Escapes { sector, angle } = line.terminus else { panic!() };
            assert!(angle_distance(angle, g.sectors.angles[sector]) < 1e-2);
        }
    }
}
