use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;
use stokes_spectra::acceptance::Context;
use stokes_spectra::curves::CurveKind;
use stokes_spectra::oracle::LogScaledValue;
use stokes_spectra::presets;
use stokes_spectra::quantize::{
    convergence_report, match_nearest, quantize_along_curve, wkb_solutions, EigenvalueEstimate, QuantizationRule,
    QuantizeOptions,
};

fn estimate(m: i64, z: Complex64) -> EigenvalueEstimate {
    EigenvalueEstimate {
        m,
        lambda: z,
        rule: QuantizationRule::for_curve(CurveKind::Balanced),
        k: 10.0,
        residual: 0.0,
    }
}

fn ladder(n: usize, shift: f64) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::new(shift, -0.1 - 0.2 * j as f64)).collect()
}

#[test]
fn identical_lists_have_zero_error() {
    let z = ladder(6, 0.0);
    let est: Vec<_> = z.iter().enumerate().map(|(m, &l)| estimate(m as i64, l)).collect();
    let r = convergence_report(&est, &est, &z, &z).unwrap();
    assert_eq!(r.rows.len(), 6);
    assert_eq!(r.max_error, 0.0);
    assert!(r.rows.iter().all(|row| row.error == 0.0 && row.error_2k == Some(0.0)));
}

#[test]
fn empty_estimates_give_empty_table() {
    let r = convergence_report(&[], &[], &ladder(3, 0.0), &ladder(3, 0.0)).unwrap();
    assert!(r.rows.is_empty());
    assert_eq!(r.median_ratio, None);
}

#[test]
fn midway_point_is_ambiguous() {
    let z = ladder(2, 0.0);
    assert!(match_nearest((z[0] + z[1]) / 2.0, &z).is_err());
    assert_eq!(match_nearest(z[0] + 0.01, &z).unwrap(), Some(z[0]));
    assert_eq!(match_nearest(z[0], &[]).unwrap(), None);
}

/// For `P = i(z - λ)` the action over `[-1, 1]` is elementary.
fn couette_action(lambda: Complex64) -> Complex64 {
    // z - λ stays in the upper half-plane for Im λ < 0, so principal powers are continuous.
    let pow = |w: Complex64| w.powf(1.5);
    Complex64::from_polar(2.0 / 3.0, PI / 4.0) * (pow(1.0 - lambda) - pow(-1.0 - lambda))
}

#[test]
fn couette_balanced_estimates_satisfy_closed_form() {
    let ctx = Context::default();
    let (cp, g) = ctx.couette_graph().unwrap();
    let ray = g.curves.iter().find(|c| c.kind == CurveKind::Balanced).expect("balanced ray");
    let k = 30.0;
    let out = quantize_along_curve(cp, ray, k, &QuantizeOptions::default()).unwrap();
    assert!(out.estimates.len() >= 5);
    for e in &out.estimates {
        let x = k * couette_action(e.lambda).norm() / PI;
        assert!((x - e.m as f64).abs() < 1e-6, "m = {}: {x}", e.m);
        assert!(e.lambda.re.abs() < 1e-6);
    }
}

#[test]
fn wkb_solutions_start_at_inverse_quarter_root() {
    let p = presets::couette().potential;
    let z0 = Complex64::new(1.0, 0.0);
    let lambda = Complex64::new(0.0, 0.0);
    let v = wkb_solutions(&p, lambda, 25.0, z0, &[z0], 0.1).unwrap();
    let pz = p.eval(z0, lambda);
    assert!((v[0].0 * v[0].0 * v[0].0 * v[0].0 * pz - 1.0).norm() < 1e-12);
    assert_eq!(v[0].0, v[0].1);
}

#[test]
fn wkb_rejects_points_near_turning_points() {
    let p = presets::couette().potential;
    let z0 = Complex64::new(0.05, 0.0);
    assert!(wkb_solutions(&p, Complex64::new(0.0, 0.0), 10.0, z0, &[], 0.1).is_err());
}

proptest! {
    #[test]
    fn log_scaled_value_is_normalized(re in -1e3..1e3f64, im in -1e3..1e3f64, lf in -500.0..500.0f64) {
        prop_assume!(re.hypot(im) > 1e-12);
        let z = Complex64::new(re, im);
        let v = LogScaledValue::new(z, lf);
        let r = v.mantissa.norm();
        prop_assert!((1.0..std::f64::consts::E * (1.0 + 1e-12)).contains(&r));
        prop_assert!((v.ln_abs() - (z.norm().ln() + lf)).abs() < 1e-9);
        prop_assert!((v.mantissa / v.mantissa.norm() - z / z.norm()).norm() < 1e-12);
    }

    #[test]
    fn matching_is_translation_invariant(dx in -5.0..5.0f64, dy in -5.0..5.0f64, t in 0.0..0.04f64) {
        let z = ladder(5, 0.0);
        let shift = Complex64::new(dx, dy);
        let moved: Vec<_> = z.iter().map(|w| w + shift).collect();
        let probe = z[2] + Complex64::new(0.0, t);
        let a = match_nearest(probe, &z).ok().flatten();
        let b = match_nearest(probe + shift, &moved).ok().flatten();
        let (a, b) = (a.unwrap(), b.unwrap());
        prop_assert!((a + shift - b).norm() < 1e-9);
    }

    #[test]
    fn report_errors_scale_with_perturbation(eps in 1e-6..1e-2f64) {
        let z = ladder(5, 0.0);
        let est: Vec<_> = z.iter().enumerate().map(|(m, &l)| estimate(m as i64, l + eps)).collect();
        let est2: Vec<_> = z.iter().enumerate().map(|(m, &l)| estimate(m as i64, l + eps / 4.0)).collect();
        let r = convergence_report(&est, &est2, &z, &z).unwrap();
        prop_assert_eq!(r.rows.len(), 5);
        prop_assert!((r.max_error - eps).abs() < 1e-12);
        let ratio = r.median_ratio.unwrap();
        prop_assert!((ratio - 4.0).abs() < 1e-6);
    }
}
