//! Validation suite on the two model problems.

use std::sync::OnceLock;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde::Serialize;

use crate::curves::{crossings, CurveKind, CurveOptions, CurveProblem, LimitSpectralGraph, SpectralCurve};
use crate::error::Result;
use crate::ode::{integrate_polynomial, TaylorOptions};
use crate::oracle::{find_eigenvalues_grid, find_eigenvalues_with, OracleOptions, ProblemInstance};
use crate::phase::sqrt_near;
use crate::poly::{angle_distance, ParameterDomain};
use crate::presets::{self, ModelProblem};
use crate::quadrature::gk15;
use crate::quantize::{convergence_report, quantize_along_curve, wkb_solutions, EigenvalueEstimate, QuantizeOptions};
use crate::stokes::{trace_graph, Terminus, TraceOptions};

#[derive(Clone, Debug, Serialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} [{}] {}: {}",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

pub const CRITERIA: [&str; 12] = [
    "critical intersection",
    "balanced ray",
    "singular line",
    "essentiality",
    "balanced quantization",
    "critical quantization",
    "singular quantization",
    "spectrum clustering",
    "Stokes invariants",
    "WKB order",
    "oracle consistency",
    "canonical domains",
];

/// Limit graphs of both model problems, computed once.
pub struct Context {
    pub couette: ModelProblem,
    pub couette_poiseuille: ModelProblem,
    couette_curves: OnceLock<Result<(CurveProblem, LimitSpectralGraph)>>,
    cp_curves: OnceLock<Result<(CurveProblem, LimitSpectralGraph)>>,
}

impl Default for Context {
    fn default() -> Self {
        Self {
            couette: presets::couette(),
            couette_poiseuille: presets::couette_poiseuille(),
            couette_curves: OnceLock::new(),
            cp_curves: OnceLock::new(),
        }
    }
}

fn assemble(m: &ModelProblem, domain: ParameterDomain) -> Result<(CurveProblem, LimitSpectralGraph)> {
    let cp = CurveProblem::new(m.potential.clone(), m.a, m.b, domain, CurveOptions::default())?;
    let g = cp.assemble()?;
    Ok((cp, g))
}

impl Context {
    pub fn couette_graph(&self) -> Result<&(CurveProblem, LimitSpectralGraph)> {
        self.couette_curves
            .get_or_init(|| assemble(&self.couette, presets::couette_domain()))
            .as_ref()
            .map_err(Clone::clone)
    }

    pub fn couette_poiseuille_graph(&self) -> Result<&(CurveProblem, LimitSpectralGraph)> {
        self.cp_curves
            .get_or_init(|| assemble(&self.couette_poiseuille, presets::couette_poiseuille_domain()))
            .as_ref()
            .map_err(Clone::clone)
    }
}

pub fn run(ctx: &Context, id: usize) -> CriterionResult {
    let name = CRITERIA[id - 1];
    let outcome = match id {
        1 => critical_intersection(ctx),
        2 => balanced_ray(ctx),
        3 => singular_line(ctx),
        4 => essentiality(ctx),
        5 => balanced_quantization(ctx),
        6 => critical_quantization(ctx),
        7 => singular_quantization(ctx),
        8 => spectrum_clustering(ctx),
        9 => stokes_invariants(ctx),
        10 => wkb_order(),
        11 => oracle_consistency(ctx),
        12 => canonical_domains(ctx),
        _ => unreachable!("criteria are numbered 1 to 12"),
    };
    let (passed, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionResult { id, name, passed, detail }
}

pub fn run_all(ctx: &Context) -> Vec<CriterionResult> {
    (1..=CRITERIA.len()).map(|id| run(ctx, id)).collect()
}

type Outcome = Result<(bool, String)>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn critical_intersection(ctx: &Context) -> Outcome {
    let (_, g) = ctx.couette_graph()?;
    let target = c(0.0, -1.0 / 3f64.sqrt());
    let side = |a: bool| {
        g.candidates
            .iter()
            .filter(move |cv| matches!((cv.kind, a), (CurveKind::CriticalA(_), true) | (CurveKind::CriticalB(_), false)))
    };
    let best = side(true)
        .flat_map(|x| side(false).flat_map(move |y| crossings(&x.samples, &y.samples, 0.0)))
        .map(|z| (z - target).norm())
        .fold(f64::INFINITY, f64::min);
    Ok((best <= 1e-3, format!("nearest crossing at distance {best:.2e} from -i/sqrt(3)")))
}

fn balanced_ray(ctx: &Context) -> Outcome {
    let (cp, g) = ctx.couette_graph()?;
    let balanced: Vec<&SpectralCurve> = g.curves.iter().filter(|cv| cv.kind == CurveKind::Balanced).collect();
    let top = -1.0 / 3f64.sqrt() + 1e-2;
    let mut worst_re: f64 = 0.0;
    let (mut checked, mut failed_domain, mut above) = (0, 0, 0);
    for cv in &balanced {
        for &l in &cv.samples {
            if l.im > top {
                above += 1;
            }
            if (-3.0..=-0.6).contains(&l.im) {
                checked += 1;
                worst_re = worst_re.max(l.re.abs());
                let common = cp.graph(l).and_then(|gr| gr.in_common_canonical_domain(cp.a, cp.b));
                if !matches!(common, Ok(true)) {
                    failed_domain += 1;
                }
            }
        }
    }
    let pass = checked > 0 && worst_re <= 1e-3 && failed_domain == 0 && above == 0;
    Ok((
        pass,
        format!("{checked} samples, max |Re| {worst_re:.2e}, {failed_domain} failing the domain test, {above} above the cut"),
    ))
}

fn singular_line(ctx: &Context) -> Outcome {
    let (_, g) = ctx.couette_poiseuille_graph()?;
    let mut worst: f64 = 0.0;
    let mut n = 0;
    for cv in g.candidates.iter().filter(|cv| matches!(cv.kind, CurveKind::Singular(..))) {
        for l in cv.samples.iter().filter(|l| l.norm() <= 2.0) {
            worst = worst.max((l.re + l.im + 1.0 / 16.0).abs());
            n += 1;
        }
    }
    Ok((n > 0 && worst <= 1e-3, format!("{n} samples, max |Re+Im+1/16| {worst:.2e}")))
}

/// Points spaced evenly along a polyline, keeping `margin` from both ends.
fn resample(samples: &[Complex64], count: usize, margin: f64) -> Vec<Complex64> {
    let mut cum = vec![0.0];
    for w in samples.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let (s0, s1) = (margin.min(0.25 * total), total - margin.min(0.25 * total));
    (0..count)
        .map(|i| {
            let s = s0 + (s1 - s0) * i as f64 / (count - 1) as f64;
            let j = cum.partition_point(|&x| x <= s).clamp(1, samples.len() - 1);
            let t = (s - cum[j - 1]) / (cum[j] - cum[j - 1]).max(f64::MIN_POSITIVE);
            samples[j - 1] + t * (samples[j] - samples[j - 1])
        })
        .collect()
}

fn essentiality(ctx: &Context) -> Outcome {
    let (cp, g) = ctx.couette_poiseuille_graph()?;
    let Some(line) = g.candidates.iter().find(|cv| matches!(cv.kind, CurveKind::Singular(..))) else {
        return Ok((false, "no singular curve traced".into()));
    };
    let segment = |flag: bool| -> Vec<Complex64> {
        let idx: Vec<usize> = (0..line.samples.len()).filter(|&i| line.essential[i] == flag).collect();
        // Longest consecutive run with the given flag.
        let mut best: &[usize] = &[];
        let mut start = 0;
        for i in 1..=idx.len() {
            if i == idx.len() || idx[i] != idx[i - 1] + 1 {
                if i - start > best.len() {
                    best = &idx[start..i];
                }
                start = i;
            }
        }
        best.iter().map(|&i| line.samples[i]).collect()
    };
    let mut details = Vec::new();
    let mut pass = true;
    for (label, flag) in [("(a)", true), ("(a')", false)] {
        let run = segment(flag);
        if run.len() < 2 {
            pass = false;
            details.push(format!("{label}: missing"));
            continue;
        }
        let pts = resample(&run, 12, 0.02);
        let mut agree = 0;
        for &l in &pts {
            let linked = cp.graph(l).ok().and_then(|gr| {
                let tps = cp.turning_points(l).ok()?;
                let idx = gr.complexes.iter().position(|cx| cx.contains(tps.points[0].label))?;
                Some(gr.are_linked(idx, cp.a, cp.b))
            });
            if linked == Some(!flag) {
                agree += 1;
            }
        }
        pass &= agree == pts.len();
        details.push(format!("{label}: {agree}/{} samples consistent", pts.len()));
    }
    Ok((pass, details.join(", ")))
}

/// Errors of quantization estimates at `k` and `2k` against oracle eigenvalues.
struct Protocol {
    rows: usize,
    max_err: (f64, f64),
    ratios: Vec<f64>,
    c_fit: f64,
}

impl Protocol {
    fn verdict(&self, window: (f64, f64), k: f64) -> (bool, String) {
        // Both maxima must sit within a factor sqrt(1.6) of 0.5 C / k².
        let slack = 1.6f64.sqrt();
        let bound_ok = self.max_err.0 <= slack * 0.5 * self.c_fit / (k * k)
            && self.max_err.1 <= slack * 0.5 * self.c_fit / (4.0 * k * k);
        let ratio_ok = self.ratios.iter().all(|r| (window.0..=window.1).contains(r));
        let (lo, hi) = self
            .ratios
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
        (
            self.rows >= 2 && bound_ok && ratio_ok,
            format!(
                "{} indices, max error {:.2e} / {:.2e}, C = {:.3}, ratios in [{lo:.2}, {hi:.2}]",
                self.rows, self.max_err.0, self.max_err.1, self.c_fit
            ),
        )
    }
}

fn bounding_region(samples: &[Complex64], margin: f64) -> Result<ParameterDomain> {
    let (mut lo, mut hi) = (samples[0], samples[0]);
    for z in samples {
        lo = c(lo.re.min(z.re), lo.im.min(z.im));
        hi = c(hi.re.max(z.re), hi.im.max(z.im));
    }
    ParameterDomain::new(lo - c(margin, margin), hi + c(margin, margin))
}

fn oracle_near(m: &ModelProblem, k: f64, region: &ParameterDomain) -> Result<Vec<Complex64>> {
    let prob = ProblemInstance::new(m.potential.clone(), m.a, m.b, k)?;
    let cells = |len: f64| ((len / 0.03).ceil() as usize).max(2);
    let report = find_eigenvalues_grid(&prob, region, (cells(region.width()), cells(region.height())), &OracleOptions::default())?;
    Ok(report.eigenvalues.into_iter().map(|e| e.lambda).collect())
}

fn quantization_protocol(
    m: &ModelProblem,
    cp: &CurveProblem,
    curve: &SpectralCurve,
    k: f64,
    excluded: &[Complex64],
    radius: f64,
) -> Result<Protocol> {
    let keep = |e: &EigenvalueEstimate| excluded.iter().all(|&z| (e.lambda - z).norm() > radius);
    let estimates = |k: f64| -> Result<Vec<EigenvalueEstimate>> {
        Ok(quantize_along_curve(cp, curve, k, &QuantizeOptions::default())?
            .estimates
            .into_iter()
            .filter(keep)
            .collect())
    };
    let region = bounding_region(&curve.samples, 0.03)?;
    let (e1, e2) = (estimates(k)?, estimates(2.0 * k)?);
    let (o1, o2) = (oracle_near(m, k, &region)?, oracle_near(m, 2.0 * k, &region)?);
    let report = convergence_report(&e1, &e2, &o1, &o2)?;
    let ratios: Vec<f64> = report.rows.iter().filter_map(|r| r.ratio).collect();
    // Geometric mean of the two single-k estimates of C.
    let c_fit = (2.0 * k * k * report.max_error * 8.0 * k * k * report.max_error_2k).sqrt();
    Ok(Protocol {
        rows: ratios.len(),
        max_err: (report.max_error, report.max_error_2k),
        ratios,
        c_fit,
    })
}

/// Endpoint exclusion radius, capped for curves too short to keep any index.
fn exclusion(curve: &SpectralCurve) -> f64 {
    0.1f64.min(0.25 * curve.length())
}

const RATIO_WINDOW: (f64, f64) = (2.5, 6.0);
const K_BASE: f64 = 40.0;

fn balanced_quantization(ctx: &Context) -> Outcome {
    let (cp, g) = ctx.couette_graph()?;
    let Some(ray) = g.curves.iter().find(|cv| cv.kind == CurveKind::Balanced) else {
        return Ok((false, "no balanced curve in T".into()));
    };
    let top = ray.samples.iter().map(|z| z.im).fold(f64::NEG_INFINITY, f64::max);
    // Truncated where the determinant at 2k stays well conditioned.
    let mut part = ray.clone();
    part.samples.retain(|z| z.im >= -2.2);
    part.essential = vec![true; part.samples.len()];
    let p = quantization_protocol(&ctx.couette, cp, &part, K_BASE, &[c(0.0, top)], 0.1)?;
    Ok(p.verdict(RATIO_WINDOW, K_BASE))
}

fn ends(curve: &SpectralCurve) -> [Complex64; 2] {
    [curve.samples[0], *curve.samples.last().unwrap()]
}

fn critical_quantization(ctx: &Context) -> Outcome {
    let (cp, g) = ctx.couette_graph()?;
    let Some(arc) = g.curves.iter().find(|cv| matches!(cv.kind, CurveKind::CriticalA(_))) else {
        return Ok((false, "no essential critical arc in T".into()));
    };
    let p = quantization_protocol(&ctx.couette, cp, arc, K_BASE, &ends(arc), exclusion(arc))?;
    Ok(p.verdict(RATIO_WINDOW, K_BASE))
}

fn singular_quantization(ctx: &Context) -> Outcome {
    let (cp, g) = ctx.couette_poiseuille_graph()?;
    let Some(seg) = g.curves.iter().find(|cv| matches!(cv.kind, CurveKind::Singular(..))) else {
        return Ok((false, "no essential singular segment in T".into()));
    };
    let p = quantization_protocol(&ctx.couette_poiseuille, cp, seg, K_BASE, &ends(seg), exclusion(seg))?;
    Ok(p.verdict(RATIO_WINDOW, K_BASE))
}

fn spectrum_clustering(ctx: &Context) -> Outcome {
    let (_, g) = ctx.couette_poiseuille_graph()?;
    let m = &ctx.couette_poiseuille;
    let region = ParameterDomain::new(c(-0.0625, -2.0), c(1.5, -2e-3))?;
    let mut worst = Vec::new();
    for k in [K_BASE, 2.0 * K_BASE] {
        let prob = ProblemInstance::new(m.potential.clone(), m.a, m.b, k)?;
        let eig = find_eigenvalues_with(&prob, &region, 41, &OracleOptions::default())?.eigenvalues;
        let d = eig
            .iter()
            .map(|e| e.lambda)
            .filter(|l| l.norm() <= 2.0)
            .map(|l| g.distance(l))
            .fold(0.0, f64::max);
        worst.push(d);
    }
    let factor = worst[0] / worst[1];
    Ok((
        factor >= 1.5,
        format!("max distance {:.3e} -> {:.3e}, factor {factor:.2}", worst[0], worst[1]),
    ))
}

/// Largest `|Re S| / (1 + |S|)` along a line, integrating from its origin.
fn max_re_action(m: &ModelProblem, lambda: Complex64, samples: &[Complex64]) -> f64 {
    let p = &m.potential;
    let mut w = p.eval(samples[samples.len().min(2) - 1], lambda).sqrt();
    let mut s = Complex64::new(0.0, 0.0);
    let mut worst: f64 = 0.0;
    for seg in samples.windows(2) {
        let (z0, z1) = (seg[0], seg[1]);
        let w1 = sqrt_near(p.eval(z1, lambda), w);
        let reference = |t: f64| w + t * (w1 - w);
        let (v, _) = gk15(|t| sqrt_near(p.eval(z0 + t * (z1 - z0), lambda), reference(t)), 0.0, 1.0);
        s += v * (z1 - z0);
        w = w1;
        worst = worst.max(s.re.abs() / (1.0 + s.norm()));
    }
    worst
}

fn stokes_invariants(ctx: &Context) -> Outcome {
    let mut rng = StdRng::seed_from_u64(7);
    let mut details = Vec::new();
    let mut pass = true;
    for (m, domain) in [
        (&ctx.couette, presets::couette_domain()),
        (&ctx.couette_poiseuille, presets::couette_poiseuille_domain()),
    ] {
        let (mut worst_re, mut worst_angle): (f64, f64) = (0.0, 0.0);
        let (mut bad_counts, mut failures, mut done) = (0, 0, 0);
        while done < 50 {
            let l = c(
                rng.gen_range(domain.lower_left.re..domain.upper_right.re),
                rng.gen_range(domain.lower_left.im..domain.upper_right.im),
            );
            if !domain.contains(l) {
                continue;
            }
            done += 1;
            let g = match trace_graph(&m.potential, l, &TraceOptions::default()) {
                Ok(g) => g,
                Err(_) => {
                    failures += 1;
                    continue;
                }
            };
            for tp in g.turning_points.points.iter().filter(|t| t.multiplicity == 1) {
                let emitted = g.lines().filter(|ln| ln.origin == tp.label).count()
                    + g.lines().filter(|ln| ln.terminus == Terminus::Hits(tp.label)).count();
                if emitted != 3 {
                    bad_counts += 1;
                }
            }
            for line in g.lines() {
                worst_re = worst_re.max(max_re_action(m, l, &line.samples));
                if let Terminus::Escapes { sector, angle } = line.terminus {
                    worst_angle = worst_angle.max(angle_distance(angle, g.sectors.angles[sector]));
                }
            }
        }
        pass &= worst_re <= 1e-6 && worst_angle <= 1e-2 && bad_counts == 0 && failures == 0;
        details.push(format!(
            "max |Re S|/(1+|S|) {worst_re:.1e}, max angle error {worst_angle:.1e}, {bad_counts} bad line counts, {failures} trace failures"
        ));
    }
    Ok((pass, details.join("; ")))
}

/// Relative deviation of `v_+` from the solution started with its own data.
pub fn wkb_relative_error(k: f64) -> Result<f64> {
    let m = presets::couette();
    let lambda = Complex64::new(0.0, 0.0);
    let z0 = c(1.0, 0.0);
    let samples: Vec<Complex64> = (1..=8).map(|i| c(1.0 + 0.125 * i as f64, 0.0)).collect();
    let v = wkb_solutions(&m.potential, lambda, k, z0, &samples, 0.1)?;
    let p = m.potential.eval(z0, lambda);
    let dp = m.potential.eval_with_derivatives(z0, lambda).1;
    let v0 = 1.0 / p.sqrt().sqrt();
    // y'/k for v_+ = P^{-1/4} e^{kS}.
    let y0 = [v0, v0 * (p.sqrt() - dp / (4.0 * k * p))];
    let coeffs = m.potential.z_coefficients(lambda);
    let mut state = y0;
    let mut log_scale = 0.0;
    let mut prev = z0;
    let mut worst: f64 = 0.0;
    for (z, (vp, _)) in samples.iter().zip(&v) {
        let step = integrate_polynomial(&coeffs, k, prev, *z, state, &TaylorOptions::default())?;
        state = step.y;
        log_scale += step.log_scale;
        prev = *z;
        let y = state[0] * log_scale.exp();
        worst = worst.max(((y - vp) / vp).norm());
    }
    Ok(worst)
}

fn wkb_order() -> Outcome {
    let mut pass = true;
    let mut details = Vec::new();
    for k in [50.0, 100.0] {
        let (e1, e2) = (wkb_relative_error(k)?, wkb_relative_error(2.0 * k)?);
        let ratio = e1 / e2;
        pass &= (1.5..=3.0).contains(&ratio);
        details.push(format!("k={k}: {e1:.2e}/{e2:.2e} = {ratio:.2}"));
    }
    Ok((pass, details.join(", ")))
}

fn oracle_consistency(ctx: &Context) -> Outcome {
    let m = &ctx.couette;
    let prob = ProblemInstance::new(m.potential.clone(), m.a, m.b, 60.0)?;
    let region = ParameterDomain::new(c(-1.05, -2.5), c(1.05, 0.05))?;
    let eig: Vec<Complex64> = find_eigenvalues_with(&prob, &region, 41, &OracleOptions::default())?
        .eigenvalues
        .into_iter()
        .map(|e| e.lambda)
        .collect();
    let asym = eig
        .iter()
        .map(|l| eig.iter().map(|mu| (*mu + l.conj()).norm()).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);

    let m2 = &ctx.couette_poiseuille;
    let prob2 = ProblemInstance::new(m2.potential.clone(), m2.a, m2.b, 60.0)?;
    // A window reaching beyond the strip on every side.
    let wide = ParameterDomain::new(c(-0.6, -2.0), c(2.0, 0.5))?;
    let eig2: Vec<Complex64> = find_eigenvalues_with(&prob2, &wide, 41, &OracleOptions::default())?
        .eigenvalues
        .into_iter()
        .map(|e| e.lambda)
        .collect();
    let outside = eig2
        .iter()
        .filter(|l| !(l.im < 0.0 && l.re > -1.0 / 16.0 && l.re < 1.5))
        .count();
    let pass = !eig.is_empty() && !eig2.is_empty() && asym <= 1e-6 && outside == 0;
    Ok((
        pass,
        format!(
            "{} eigenvalues, asymmetry {asym:.1e}; {} eigenvalues, {outside} outside the strip",
            eig.len(),
            eig2.len()
        ),
    ))
}

fn canonical_domains(ctx: &Context) -> Outcome {
    let (cp, g) = ctx.couette_poiseuille_graph()?;
    let domain = &cp.domain;
    let mut rng = StdRng::seed_from_u64(12);
    let (mut agree, mut tried) = (0, 0);
    while tried < 30 {
        let l = c(
            rng.gen_range(domain.lower_left.re..domain.upper_right.re),
            rng.gen_range(domain.lower_left.im..domain.upper_right.im),
        );
        let Ok(gr) = cp.graph(l) else { continue };
        let Ok(common) = gr.in_common_canonical_domain(cp.a, cp.b) else { continue };
        tried += 1;
        let conj = (0..gr.complexes.len()).all(|i| gr.are_linked(i, cp.a, cp.b));
        if conj == common {
            agree += 1;
        }
    }
    let mut on_balanced = 0;
    let mut balanced_true = 0;
    for cv in g.curves.iter().filter(|cv| cv.kind == CurveKind::Balanced) {
        for &l in &cv.samples {
            on_balanced += 1;
            if matches!(cp.graph(l).and_then(|gr| gr.in_common_canonical_domain(cp.a, cp.b)), Ok(true)) {
                balanced_true += 1;
            }
        }
    }
    let pass = agree == tried && on_balanced > 0 && balanced_true == on_balanced;
    Ok((
        pass,
        format!("{agree}/{tried} random samples agree, {balanced_true}/{on_balanced} balanced samples in a common domain"),
    ))
}
