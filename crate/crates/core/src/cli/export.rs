//! CSV tables and SVG drawings of computed artifacts.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::curves::SpectralCurve;
use crate::oracle::OracleEigenvalue;
use crate::quantize::EigenvalueEstimate;
use crate::stokes::StokesGraph;

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()
}

#[derive(Serialize)]
pub struct GraphRow {
    pub complex_id: usize,
    pub line_id: usize,
    pub re_z: f64,
    pub im_z: f64,
}

pub fn graph_rows(g: &StokesGraph) -> Vec<GraphRow> {
    let mut rows = Vec::new();
    let mut line_id = 0;
    for cx in &g.complexes {
        for line in &cx.lines {
            rows.extend(line.samples.iter().map(|z| GraphRow {
                complex_id: cx.index,
                line_id,
                re_z: z.re,
                im_z: z.im,
            }));
            line_id += 1;
        }
    }
    rows
}

#[derive(Serialize)]
pub struct CurveRow {
    pub kind: &'static str,
    pub label: String,
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub essential: bool,
}

pub fn curve_rows(curves: &[SpectralCurve]) -> Vec<CurveRow> {
    curves
        .iter()
        .flat_map(|c| {
            c.samples.iter().zip(&c.essential).map(|(z, &e)| CurveRow {
                kind: c.kind.name(),
                label: c.kind.label(),
                re_lambda: z.re,
                im_lambda: z.im,
                essential: e,
            })
        })
        .collect()
}

#[derive(Serialize)]
pub struct EstimateRow {
    pub curve_id: usize,
    pub kind: &'static str,
    pub m: i64,
    pub k: f64,
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub residual: f64,
}

pub fn estimate_rows(curve_id: usize, kind: &'static str, est: &[EigenvalueEstimate]) -> Vec<EstimateRow> {
    est.iter()
        .map(|e| EstimateRow {
            curve_id,
            kind,
            m: e.m,
            k: e.k,
            re_lambda: e.lambda.re,
            im_lambda: e.lambda.im,
            residual: e.residual,
        })
        .collect()
}

#[derive(Serialize)]
pub struct OracleRow {
    pub k: f64,
    pub re_lambda: f64,
    pub im_lambda: f64,
    pub winding: i64,
    pub residual: f64,
}

pub fn oracle_rows(eig: &[OracleEigenvalue]) -> Vec<OracleRow> {
    eig.iter()
        .map(|e| OracleRow {
            k: e.k,
            re_lambda: e.lambda.re,
            im_lambda: e.lambda.im,
            winding: e.winding_index,
            residual: e.refine_residual,
        })
        .collect()
}

/// An SVG canvas mapping a rectangle of the complex plane to pixels.
pub struct Svg {
    lo: Complex64,
    hi: Complex64,
    scale: f64,
    body: String,
}

impl Svg {
    pub fn new(lo: Complex64, hi: Complex64) -> Self {
        let span = (hi.re - lo.re).max(hi.im - lo.im).max(1e-12);
        Self {
            lo,
            hi,
            scale: 800.0 / span,
            body: String::new(),
        }
    }

    fn px(&self, z: Complex64) -> (f64, f64) {
        ((z.re - self.lo.re) * self.scale, (self.hi.im - z.im) * self.scale)
    }

    pub fn polyline(&mut self, pts: &[Complex64], color: &str, width: f64) {
        if pts.len() < 2 {
            return;
        }
        let coords: Vec<String> = pts
            .iter()
            .map(|&z| {
                let (x, y) = self.px(z);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="{width}"/>"#,
            coords.join(" ")
        );
    }

    pub fn dot(&mut self, z: Complex64, color: &str, r: f64) {
        let (x, y) = self.px(z);
        let _ = writeln!(self.body, r#"<circle cx="{x:.2}" cy="{y:.2}" r="{r}" fill="{color}"/>"#);
    }

    pub fn axes(&mut self) {
        let (lo, hi) = (self.lo, self.hi);
        if lo.im <= 0.0 && hi.im >= 0.0 {
            self.polyline(&[Complex64::new(lo.re, 0.0), Complex64::new(hi.re, 0.0)], "#bbbbbb", 0.5);
        }
        if lo.re <= 0.0 && hi.re >= 0.0 {
            self.polyline(&[Complex64::new(0.0, lo.im), Complex64::new(0.0, hi.im)], "#bbbbbb", 0.5);
        }
    }

    pub fn finish(&self) -> String {
        let (w, h) = ((self.hi.re - self.lo.re) * self.scale, (self.hi.im - self.lo.im) * self.scale);
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

pub fn graph_svg(g: &StokesGraph) -> String {
    let reach = g
        .turning_points
        .points
        .iter()
        .map(|t| (t.z - g.sectors.center).norm())
        .fold(0.0, f64::max)
        * 2.0
        + 2.0;
    let c = g.sectors.center;
    let mut svg = Svg::new(c - Complex64::new(reach, reach), c + Complex64::new(reach, reach));
    svg.axes();
    for phi in &g.sectors.angles {
        svg.polyline(&[c, c + Complex64::from_polar(reach * 1.5, *phi)], "#9999ff", 0.7);
    }
    for line in g.lines() {
        svg.polyline(&line.samples, "black", 1.5);
    }
    for t in &g.turning_points.points {
        svg.dot(t.z, "red", 4.0);
    }
    svg.finish()
}

/// Curves over the parameter rectangle: essential parts in red, the rest grey,
/// plus optional eigenvalue markers.
pub fn curves_svg(
    lo: Complex64,
    hi: Complex64,
    curves: &[SpectralCurve],
    eigenvalues: &[Complex64],
    estimates: &[Complex64],
) -> String {
    let mut svg = Svg::new(lo, hi);
    svg.axes();
    for c in curves {
        let mut start = 0;
        for i in 1..=c.samples.len() {
            if i == c.samples.len() || c.essential[i] != c.essential[start] {
                let color = if c.essential[start] { "red" } else { "#999999" };
                let end = i.min(c.samples.len() - 1);
                svg.polyline(&c.samples[start..=end], color, if c.essential[start] { 2.0 } else { 1.0 });
                start = i;
            }
        }
    }
    for &z in eigenvalues {
        svg.dot(z, "black", 2.5);
    }
    for &z in estimates {
        svg.dot(z, "blue", 1.5);
    }
    svg.finish()
}
