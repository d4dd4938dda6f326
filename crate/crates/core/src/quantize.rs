//! Quantization conditions along curves of the limit spectral graph and
//! leading-order WKB solutions.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{crossings, CurveKind, CurveProblem, LimitSpectralGraph, SpectralCurve};
use crate::error::{Error, Result};
use crate::phase::{action_integral, continue_sqrt, polyline_distance, sqrt_near, BranchState, ContourPath};
use crate::poly::{turning_points, BivariatePotential, DEFAULT_EPS_TP};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Balanced,
    Critical,
    Singular,
}

/// Which integral is quantized and with which offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantizationRule {
    pub kind: RuleKind,
    pub offset: f64,
    /// The defining integral.
    pub integral: CurveKind,
}

impl QuantizationRule {
    pub fn for_curve(kind: CurveKind) -> Self {
        let rule = match kind {
            CurveKind::Balanced => RuleKind::Balanced,
            CurveKind::CriticalA(_) | CurveKind::CriticalB(_) => RuleKind::Critical,
            CurveKind::Singular(..) => RuleKind::Singular,
        };
        Self {
            kind: rule,
            offset: Self::offset_of(rule),
            integral: kind,
        }
    }

    pub fn offset_of(kind: RuleKind) -> f64 {
        match kind {
            RuleKind::Balanced => 0.0,
            RuleKind::Critical => -0.25,
            RuleKind::Singular => -0.5,
        }
    }

    /// Right-hand side `(offset + m)πi` divided by `i`.
    pub fn target(&self, m: i64) -> f64 {
        (self.offset + m as f64) * PI
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EigenvalueEstimate {
    pub m: i64,
    pub lambda: Complex64,
    pub rule: QuantizationRule,
    pub k: f64,
    /// `|k F(λ) - (offset + m)πi|`.
    pub residual: f64,
}

#[derive(Clone, Debug)]
pub struct QuantizeOptions {
    /// Explicit index range; derived from the curve when `None`.
    pub m_range: Option<(i64, i64)>,
    /// Tube radius relative to the curve length.
    pub tube_rel: f64,
    pub max_newton: usize,
    pub eps_quant: f64,
}

impl Default for QuantizeOptions {
    fn default() -> Self {
        Self {
            m_range: None,
            tube_rel: 0.05,
            max_newton: 40,
            eps_quant: 1e-6,
        }
    }
}

/// Estimates together with the indices whose Newton iteration failed.
#[derive(Clone, Debug, Default)]
pub struct QuantizeOutcome {
    pub estimates: Vec<EigenvalueEstimate>,
    pub failures: Vec<(i64, Error)>,
}

const M_CLIP: i64 = 10_000;

/// Fails with `HypothesisViolated` when `curve` meets another member of
/// `graph` away from its own ends.
pub fn check_isolated(curve: &SpectralCurve, graph: &LimitSpectralGraph, tol: f64) -> Result<()> {
    let (Some(&first), Some(&last)) = (curve.samples.first(), curve.samples.last()) else {
        return Ok(());
    };
    let near_end = |z: Complex64| (z - first).norm() <= tol || (z - last).norm() <= tol;
    for other in &graph.curves {
        if other.samples == curve.samples {
            continue;
        }
        if crossings(&curve.samples, &other.samples, 0.0).into_iter().any(|z| !near_end(z)) {
            return Err(Error::HypothesisViolated);
        }
    }
    Ok(())
}

/// Solves `k F(λ) = (offset + m)πi` near `curve` for every index in range.
pub fn quantize_along_curve(
    problem: &CurveProblem,
    curve: &SpectralCurve,
    k: f64,
    opts: &QuantizeOptions,
) -> Result<QuantizeOutcome> {
    if !(k > 0.0) {
        return Err(Error::Validation("k must be positive".into()));
    }
    let rule = QuantizationRule::for_curve(curve.kind);
    let phase = |lambda: Complex64| -> Result<Complex64> {
        Ok(problem.defining_integral(curve.kind, curve.route, lambda)?.value)
    };
    let values: Vec<Option<f64>> = curve
        .samples
        .par_iter()
        .map(|&l| phase(l).ok().map(|f| k * f.im))
        .collect();
    let known: Vec<(usize, f64)> = values.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    if known.is_empty() {
        return Ok(QuantizeOutcome::default());
    }
    let (lo, hi) = known
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, v)| (lo.min(v), hi.max(v)));
    let (m_lo, m_hi) = opts.m_range.unwrap_or_else(|| {
        (
            ((lo / PI - rule.offset).ceil() as i64).max(-M_CLIP),
            ((hi / PI - rule.offset).floor() as i64).min(M_CLIP),
        )
    });
    let tube = opts.tube_rel * curve.length();
    let solved: Vec<(i64, Result<Option<EigenvalueEstimate>>)> = (m_lo..=m_hi)
        .into_par_iter()
        .map(|m| {
            let target = rule.target(m);
            let seed = seed_for(&curve.samples, &known, target);
            let r = newton(&phase, seed, k, target, opts, m).map(|(lambda, residual)| {
                let keep = polyline_distance(&curve.samples, lambda) <= tube && problem.domain.contains(lambda);
                keep.then_some(EigenvalueEstimate {
                    m,
                    lambda,
                    rule,
                    k,
                    residual,
                })
            });
            (m, r)
        })
        .collect();
    let mut out = QuantizeOutcome::default();
    for (m, r) in solved {
        match r {
            Ok(Some(e)) => out.estimates.push(e),
            Ok(None) => {}
            Err(e) => out.failures.push((m, e)),
        }
    }
    Ok(out)
}

/// The sample where `Im kF` is nearest `target`, moved linearly toward the
/// crossing with a neighbour.
fn seed_for(samples: &[Complex64], known: &[(usize, f64)], target: f64) -> Complex64 {
    let (pos, &(i, v)) = known
        .iter()
        .enumerate()
        .min_by(|x, y| (x.1 .1 - target).abs().total_cmp(&(y.1 .1 - target).abs()))
        .expect("nonempty");
    for nb in [pos.wrapping_sub(1), pos + 1] {
        if let Some(&(j, w)) = known.get(nb) {
            if (v - target) * (w - target) <= 0.0 && v != w {
                let t = (target - v) / (w - v);
                return samples[i] + t * (samples[j] - samples[i]);
            }
        }
    }
    samples[i]
}

fn newton<F>(phase: &F, seed: Complex64, k: f64, target: f64, opts: &QuantizeOptions, m: i64) -> Result<(Complex64, f64)>
where
    F: Fn(Complex64) -> Result<Complex64>,
{
    let rhs = Complex64::new(0.0, target);
    let mut z = seed;
    let g = |z: Complex64| -> Result<Complex64> { Ok(k * phase(z)? - rhs) };
    let mut gz = g(z).map_err(|_| Error::NewtonDivergence(m))?;
    for _ in 0..opts.max_newton {
        let h = 1e-6 * (1.0 + z.norm());
        let (gp, gm) = match (g(z + h), g(z - h)) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Err(Error::NewtonDivergence(m)),
        };
        let d = (gp - gm) / (2.0 * h);
        if !(d.norm() > 0.0) || !d.is_finite() {
            return Err(Error::NewtonDivergence(m));
        }
        let step = gz / d;
        z -= step;
        gz = g(z).map_err(|_| Error::NewtonDivergence(m))?;
        if !gz.is_finite() {
            return Err(Error::NewtonDivergence(m));
        }
        if step.norm() <= 1e-13 * (1.0 + z.norm()) || gz.norm() <= 1e-3 * opts.eps_quant {
            break;
        }
    }
    if gz.norm() <= opts.eps_quant {
        Ok((z, gz.norm()))
    } else {
        Err(Error::NewtonDivergence(m))
    }
}

/// Values of `v_± = P^{-1/4} e^{±k S(z0, z)}` at each sample, continuing the
/// roots along the polyline `z0, samples[0], samples[1], ...`.
pub fn wkb_solutions(
    p: &BivariatePotential,
    lambda: Complex64,
    k: f64,
    z0: Complex64,
    samples: &[Complex64],
    min_clearance: f64,
) -> Result<Vec<(Complex64, Complex64)>> {
    let tps = turning_points(p, lambda, DEFAULT_EPS_TP)?;
    for &z in std::iter::once(&z0).chain(samples) {
        if tps.clearance(z) <= min_clearance {
            return Err(Error::TooCloseToTurningPoint(z));
        }
    }
    let mut branch = BranchState::principal(p, lambda, z0);
    let mut quarter = branch.value.sqrt();
    let mut action = Complex64::new(0.0, 0.0);
    let mut prev = z0;
    let mut out = Vec::with_capacity(samples.len());
    for &z in samples {
        if z != prev {
            let route = ContourPath::straight(prev, z);
            action += action_integral(p, lambda, prev, z, branch, &route)?.value;
            let cont = continue_sqrt(p, lambda, &route, branch)?;
            for w in &cont[1..] {
                quarter = sqrt_near(w.w, quarter);
            }
            let end = cont.last().expect("nonempty continuation");
            branch = BranchState {
                anchor: z,
                value: end.w,
            };
            prev = z;
        }
        let amp = 1.0 / quarter;
        out.push((amp * (k * action).exp(), amp * (-k * action).exp()));
    }
    Ok(out)
}

/// One row of a convergence table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub m: i64,
    pub estimate: Complex64,
    pub eigenvalue: Complex64,
    pub error: f64,
    pub error_2k: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub max_error: f64,
    pub max_error_2k: f64,
    pub median_ratio: Option<f64>,
}

/// Nearest oracle eigenvalue to `z`, rejecting ambiguous matches.
pub fn match_nearest(z: Complex64, oracle: &[Complex64]) -> Result<Option<Complex64>> {
    let mut d: Vec<(f64, Complex64)> = oracle.iter().map(|&o| ((o - z).norm(), o)).collect();
    d.sort_by(|x, y| x.0.total_cmp(&y.0));
    match d.as_slice() {
        [] => Ok(None),
        [(_, o)] => Ok(Some(*o)),
        [(d0, o0), (d1, o1), ..] => {
            // The runner-up must be farther by a clear share of the spacing.
            if d1 - d0 >= 0.5 * (o1 - o0).norm() {
                Ok(Some(*o0))
            } else {
                Err(Error::MatchingAmbiguous(z))
            }
        }
    }
}

/// Per-index errors of the estimates at `k` and `2k` against the oracle.
pub fn convergence_report(
    at_k: &[EigenvalueEstimate],
    at_2k: &[EigenvalueEstimate],
    oracle_k: &[Complex64],
    oracle_2k: &[Complex64],
) -> Result<ConvergenceReport> {
    let mut rows = Vec::new();
    for e in at_k {
        let Some(o) = match_nearest(e.lambda, oracle_k)? else {
            continue;
        };
        let error = (o - e.lambda).norm();
        // Indices scale with k, so pair by position along the curve.
        let partner = at_2k
            .iter()
            .min_by(|x, y| (x.lambda - e.lambda).norm().total_cmp(&(y.lambda - e.lambda).norm()));
        let error_2k = match partner {
            Some(f) => match_nearest(f.lambda, oracle_2k)?.map(|o2| (o2 - f.lambda).norm()),
            None => None,
        };
        rows.push(ConvergenceRow {
            m: e.m,
            estimate: e.lambda,
            eigenvalue: o,
            error,
            error_2k,
            ratio: error_2k.map(|e2| error / e2),
        });
    }
    let max_error = rows.iter().map(|r| r.error).fold(0.0, f64::max);
    let max_error_2k = rows.iter().filter_map(|r| r.error_2k).fold(0.0, f64::max);
    let mut ratios: Vec<f64> = rows.iter().filter_map(|r| r.ratio).collect();
    ratios.sort_by(f64::total_cmp);
    let median_ratio = (!ratios.is_empty()).then(|| ratios[ratios.len() / 2]);
    Ok(ConvergenceReport {
        rows,
        max_error,
        max_error_2k,
        median_ratio,
    })
}
