//! Gauss–Kronrod (7, 15) rule for complex-valued integrands on real intervals.

use num_complex::Complex64;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Abscissae of the 15-point Kronrod rule mapped to `[a, b]`, in increasing order.
pub fn kronrod_nodes(a: f64, b: f64) -> [f64; 15] {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut nodes = [0.0; 15];
    for k in 0..7 {
        nodes[k] = center - half * XGK[k];
        nodes[14 - k] = center + half * XGK[k];
    }
    nodes[7] = center;
    nodes
}

/// Integrates precomputed integrand values at [`kronrod_nodes`]. Returns the
/// Kronrod estimate and the Kronrod–Gauss difference as error estimate.
pub fn gk15_from_values(a: f64, b: f64, values: &[Complex64; 15]) -> (Complex64, f64) {
    let half = 0.5 * (b - a);
    let mut kronrod = values[7] * WGK[7];
    let mut gauss = values[7] * WG[3];
    for k in 0..7 {
        let pair = values[k] + values[14 - k];
        kronrod += pair * WGK[k];
        if k % 2 == 1 {
            gauss += pair * WG[k / 2];
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).norm())
}

pub fn gk15<F: FnMut(f64) -> Complex64>(mut f: F, a: f64, b: f64) -> (Complex64, f64) {
    let nodes = kronrod_nodes(a, b);
    let mut values = [Complex64::new(0.0, 0.0); 15];
    for (v, &t) in values.iter_mut().zip(&nodes) {
        *v = f(t);
    }
    gk15_from_values(a, b, &values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrates_polynomials_exactly() {
        // Exact up to degree 22 for the Kronrod rule.
        let (v, _) = gk15(|t| Complex64::new(t.powi(20), 3.0 * t * t), 0.0, 1.0);
        assert!((v.re - 1.0 / 21.0).abs() < 1e-15);
        assert!((v.im - 1.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_oscillatory_integrand() {
        let (v, err) = gk15(|t| Complex64::new(0.0, 5.0 * t).exp(), 0.0, 1.0);
        let exact = (Complex64::new(0.0, 5.0).exp() - 1.0) / Complex64::new(0.0, 5.0);
        assert!((v - exact).norm() < 1e-12);
        assert!(err < 1e-6);
    }
}
