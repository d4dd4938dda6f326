//! Planar subdivision induced by one Stokes complex and point location in it.

use std::collections::BTreeSet;
use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::Serialize;

use super::{StokesComplex, Terminus};
use crate::error::{Error, Result};
use crate::phase::polyline_distance;
use crate::poly::{angle_distance, normalize_angle, BoundaryPoint, SectorData};

/// Face of the subdivision of one complex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FaceId {
    pub complex: usize,
    pub face: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeEnd {
    Vertex(usize),
    Infinity { sector: usize, asymptote: f64 },
}

/// A Stokes line of the complex as an edge of the subdivision; escaping lines
/// are extended radially to the outer arc.
#[derive(Clone, Debug)]
pub struct Edge {
    pub from: usize,
    pub to: EdgeEnd,
    pub points: Vec<Complex64>,
    /// Faces to the left and right of the forward direction.
    pub left: usize,
    pub right: usize,
}

#[derive(Clone, Debug)]
pub struct Face {
    pub id: FaceId,
    pub boundary: Vec<Complex64>,
}

/// Faces and edges of one complex inside the disc of radius `r_arc`.
#[derive(Clone, Debug)]
pub struct Arrangement {
    pub complex: usize,
    pub center: Complex64,
    pub r_arc: f64,
    pub faces: Vec<Face>,
    pub edges: Vec<Edge>,
    /// Escape edges in counter-clockwise order of their outer angle.
    escapes: Vec<EscapeRay>,
    adjacency: Vec<Vec<bool>>,
    vertices: Vec<Complex64>,
    on_line: f64,
}

#[derive(Clone, Copy, Debug)]
struct EscapeRay {
    edge: usize,
    outer_angle: f64,
    asymptote: f64,
}

const ARC_POINTS: usize = 96;

fn ccw_gap(from: f64, to: f64) -> f64 {
    (to - from).rem_euclid(TAU)
}

/// Index `k` with `θ` between ray `k` and ray `k + 1` counter-clockwise.
fn bracket(angles: &[f64], theta: f64) -> usize {
    let n = angles.len();
    if n <= 1 {
        return 0;
    }
    (0..n)
        .find(|&k| {
            let gap = ccw_gap(angles[k], angles[(k + 1) % n]);
            let gap = if gap == 0.0 { TAU } else { gap };
            ccw_gap(angles[k], theta) < gap
        })
        .unwrap_or(n - 1)
}

fn point_in_polygon(poly: &[Complex64], z: Complex64) -> bool {
    let mut inside = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (poly[i], poly[j]);
        if (a.im > z.im) != (b.im > z.im) {
            let x = a.re + (z.im - a.im) / (b.im - a.im) * (b.re - a.re);
            if z.re < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

impl Arrangement {
    /// Builds the subdivision. `on_line` is the distance below which a point
    /// counts as lying on a line of the complex.
    pub fn build(complex: &StokesComplex, sectors: &SectorData, on_line: f64) -> Result<Self> {
        let center = sectors.center;
        if complex.lines.is_empty() {
            return Err(Error::Validation("empty Stokes complex".into()));
        }
        let vertices: Vec<Complex64> = complex.points.iter().map(|t| t.z).collect();
        let vertex_index = |label: usize| complex.points.iter().position(|t| t.label == label);

        let max_radius = complex
            .lines
            .iter()
            .flat_map(|l| l.samples.iter())
            .map(|z| (z - center).norm())
            .fold(0.0, f64::max);
        let r_arc = 1.25 * max_radius.max(1.0);

        let mut edges = Vec::new();
        let mut escapes = Vec::new();
        for line in &complex.lines {
            let from = vertex_index(line.origin).ok_or(Error::ArrangementDegeneracy)?;
            match line.terminus {
                Terminus::Hits(l) => {
                    if line.origin < l {
                        let to = vertex_index(l).ok_or(Error::ArrangementDegeneracy)?;
                        edges.push(Edge {
                            from,
                            to: EdgeEnd::Vertex(to),
                            points: line.samples.clone(),
                            left: usize::MAX,
                            right: usize::MAX,
                        });
                    }
                }
                Terminus::Escapes { sector, .. } => {
                    let mut points = line.samples.clone();
                    let last = *points.last().unwrap();
                    let radial = (last - center) / (last - center).norm();
                    points.push(center + radial * r_arc);
                    escapes.push(EscapeRay {
                        edge: edges.len(),
                        outer_angle: normalize_angle(radial.arg()),
                        asymptote: sectors.angles[sector],
                    });
                    edges.push(Edge {
                        from,
                        to: EdgeEnd::Infinity {
                            sector,
                            asymptote: sectors.angles[sector],
                        },
                        points,
                        left: usize::MAX,
                        right: usize::MAX,
                    });
                }
            }
        }
        if escapes.is_empty() {
            return Err(Error::ArrangementDegeneracy);
        }
        escapes.sort_by(|a, b| a.outer_angle.total_cmp(&b.outer_angle));
        for w in escapes.windows(2) {
            if angle_distance(w[0].outer_angle, w[1].outer_angle) < 1e-9 {
                return Err(Error::ArrangementDegeneracy);
            }
        }

        // Outgoing directions at each vertex: (edge, forward?, angle).
        let mut incident: Vec<Vec<(usize, bool, f64)>> = vec![Vec::new(); vertices.len()];
        for (e, edge) in edges.iter().enumerate() {
            let p = &edge.points;
            incident[edge.from].push((e, true, (p[1] - p[0]).arg()));
            if let EdgeEnd::Vertex(to) = edge.to {
                let n = p.len();
                incident[to].push((e, false, (p[n - 2] - p[n - 1]).arg()));
            }
        }

        let count = escapes.len();
        let mut faces = Vec::with_capacity(count);
        for k in 0..count {
            let a = escapes[k];
            let b = escapes[(k + 1) % count];
            let mut boundary = Vec::new();
            let sweep = if count == 1 { TAU } else { ccw_gap(a.outer_angle, b.outer_angle) };
            for i in 0..=ARC_POINTS {
                let t = a.outer_angle + sweep * i as f64 / ARC_POINTS as f64;
                boundary.push(center + Complex64::from_polar(r_arc, t));
            }
            // Inward along b.
            {
                let edge = &mut edges[b.edge];
                edge.right = k;
                boundary.extend(edge.points.iter().rev().skip(1));
            }
            let mut vertex = edges[b.edge].from;
            let mut arrival = {
                let p = &edges[b.edge].points;
                (p[1] - p[0]).arg()
            };
            let mut closed = false;
            for _ in 0..=2 * edges.len() {
                let (e, forward, _) = incident[vertex]
                    .iter()
                    .copied()
                    .map(|(e, fwd, ang)| {
                        let cw = (arrival - ang).rem_euclid(TAU);
                        (e, fwd, if cw < 1e-12 { TAU } else { cw })
                    })
                    .min_by(|x, y| x.2.total_cmp(&y.2))
                    .ok_or(Error::ArrangementDegeneracy)?;
                let edge = &mut edges[e];
                if forward {
                    edge.left = k;
                    boundary.extend(edge.points.iter().skip(1));
                } else {
                    edge.right = k;
                    boundary.extend(edge.points.iter().rev().skip(1));
                }
                match (edge.to, forward) {
                    (EdgeEnd::Infinity { .. }, true) => {
                        if e != a.edge {
                            return Err(Error::ArrangementDegeneracy);
                        }
                        closed = true;
                        break;
                    }
                    (EdgeEnd::Vertex(to), true) => {
                        let p = &edge.points;
                        let n = p.len();
                        vertex = to;
                        arrival = (p[n - 2] - p[n - 1]).arg();
                    }
                    (_, false) => {
                        let p = &edge.points;
                        vertex = edge.from;
                        arrival = (p[1] - p[0]).arg();
                    }
                }
            }
            if !closed {
                return Err(Error::ArrangementDegeneracy);
            }
            faces.push(Face {
                id: FaceId {
                    complex: complex.index,
                    face: k,
                },
                boundary,
            });
        }

        let mut adjacency = vec![vec![false; count]; count];
        for e in &edges {
            if e.left == usize::MAX || e.right == usize::MAX {
                return Err(Error::ArrangementDegeneracy);
            }
            if e.left != e.right {
                adjacency[e.left][e.right] = true;
                adjacency[e.right][e.left] = true;
            }
        }
        Ok(Self {
            complex: complex.index,
            center,
            r_arc,
            faces,
            edges,
            escapes,
            adjacency,
            vertices,
            on_line,
        })
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn adjacent(&self, f: usize, g: usize) -> bool {
        self.adjacency[f][g]
    }

    /// Distance from `z` to the lines and turning points of the complex.
    pub fn distance_to_lines(&self, z: Complex64) -> f64 {
        let to_edges = self
            .edges
            .iter()
            .map(|e| polyline_distance(&e.points, z))
            .fold(f64::INFINITY, f64::min);
        self.vertices
            .iter()
            .map(|v| (v - z).norm())
            .fold(to_edges, f64::min)
    }

    fn face_of_point(&self, z: Complex64) -> usize {
        let outer: Vec<f64> = self.escapes.iter().map(|e| e.outer_angle).collect();
        if (z - self.center).norm() >= self.r_arc {
            return bracket(&outer, normalize_angle((z - self.center).arg()));
        }
        self.faces
            .iter()
            .position(|f| point_in_polygon(&f.boundary, z))
            .unwrap_or_else(|| bracket(&outer, normalize_angle((z - self.center).arg())))
    }

    /// Face containing `p`.
    pub fn locate(&self, p: BoundaryPoint) -> Result<FaceId> {
        let face = match p {
            BoundaryPoint::Finite(z) => {
                if self.distance_to_lines(z) <= self.on_line {
                    return Err(Error::OnStokesLine(z));
                }
                self.face_of_point(z)
            }
            BoundaryPoint::Infinite { infinite } => {
                let asymptotes: Vec<f64> = self.escapes.iter().map(|e| e.asymptote).collect();
                if asymptotes.iter().any(|&a| angle_distance(a, infinite) < 1e-9) {
                    return Err(Error::Validation(format!(
                        "direction {infinite} is an asymptote of a Stokes line"
                    )));
                }
                bracket(&asymptotes, normalize_angle(infinite))
            }
        };
        Ok(FaceId {
            complex: self.complex,
            face,
        })
    }

    /// Faces whose closure contains `p`: a single face off the lines, the faces
    /// met by a small circle around `p` otherwise.
    pub fn touching_faces(&self, p: BoundaryPoint) -> BTreeSet<usize> {
        match self.locate(p) {
            Ok(f) => BTreeSet::from([f.face]),
            Err(_) => match p {
                BoundaryPoint::Finite(z) => {
                    let r = 2.0 * self.on_line;
                    (0..32)
                        .map(|i| z + Complex64::from_polar(r, TAU * (i as f64 + 0.5) / 32.0))
                        .map(|q| self.face_of_point(q))
                        .collect()
                }
                BoundaryPoint::Infinite { infinite } => {
                    let asymptotes: Vec<f64> = self.escapes.iter().map(|e| e.asymptote).collect();
                    [infinite - 1e-6, infinite + 1e-6]
                        .iter()
                        .map(|&t| bracket(&asymptotes, normalize_angle(t)))
                        .collect()
                }
            },
        }
    }

    /// Whether all `points` lie in one admissible domain: they touch at most
    /// two faces, and two faces only if adjacent.
    pub fn admissible(&self, points: &[BoundaryPoint]) -> bool {
        let mut union = BTreeSet::new();
        for &p in points {
            union.extend(self.touching_faces(p));
            if union.len() > 2 {
                return false;
            }
        }
        match union.len() {
            0 | 1 => true,
            _ => {
                let v: Vec<usize> = union.into_iter().collect();
                self.adjacent(v[0], v[1])
            }
        }
    }

    pub fn are_linked(&self, a: BoundaryPoint, b: BoundaryPoint) -> bool {
        self.admissible(&[a, b])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bracket_wraps_around() {
        let angles = [0.5, 2.6, 4.7];
        assert_eq!(bracket(&angles, 1.0), 0);
        assert_eq!(bracket(&angles, 3.0), 1);
        assert_eq!(bracket(&angles, 6.0), 2);
        assert_eq!(bracket(&angles, 0.1), 2);
    }

    #[test]
    fn polygon_parity() {
        let square = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 1.0),
        ];
        assert!(point_in_polygon(&square, Complex64::new(0.5, 0.5)));
        assert!(!point_in_polygon(&square, Complex64::new(1.5, 0.5)));
    }
}
