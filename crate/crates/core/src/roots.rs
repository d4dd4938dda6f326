//! Simultaneous polynomial root finding (Aberth–Ehrlich) with Newton polishing.

use num_complex::Complex64;

const MAX_ITERATIONS: usize = 500;

/// Horner evaluation of `p` (ascending coefficients) and its derivative.
pub fn horner_with_derivative(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

pub fn horner(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Drops trailing (highest-degree) coefficients that are exactly zero.
fn trimmed(coeffs: &[Complex64]) -> &[Complex64] {
    let mut end = coeffs.len();
    while end > 0 && coeffs[end - 1] == Complex64::new(0.0, 0.0) {
        end -= 1;
    }
    &coeffs[..end]
}

/// All complex roots of the polynomial with ascending coefficients `coeffs`,
/// repeated according to multiplicity. Returns an empty vector for constants.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Vec<Complex64> {
    let coeffs = trimmed(coeffs);
    if coeffs.len() < 2 {
        return Vec::new();
    }
    // Factor out roots at the origin exactly.
    let zeros_at_origin = coeffs.iter().take_while(|c| c.norm() == 0.0).count();
    let reduced = &coeffs[zeros_at_origin..];
    let mut roots = vec![Complex64::new(0.0, 0.0); zeros_at_origin];
    let degree = reduced.len() - 1;
    match degree {
        0 => {}
        1 => roots.push(-reduced[0] / reduced[1]),
        2 => roots.extend(quadratic_roots(reduced[0], reduced[1], reduced[2])),
        _ => roots.extend(aberth(reduced)),
    }
    roots
}

/// Roots of c + b z + a z^2, computed without cancellation.
fn quadratic_roots(c: Complex64, b: Complex64, a: Complex64) -> [Complex64; 2] {
    let disc = (b * b - 4.0 * a * c).sqrt();
    let q1 = -b + disc;
    let q2 = -b - disc;
    let q = if q1.norm() >= q2.norm() { q1 } else { q2 };
    if q.norm() == 0.0 {
        return [Complex64::new(0.0, 0.0); 2];
    }
    let r1 = q / (2.0 * a);
    let r2 = 2.0 * c / q;
    [r1, r2]
}

fn aberth(coeffs: &[Complex64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    let lead = coeffs[degree];
    let monic: Vec<Complex64> = coeffs.iter().map(|c| c / lead).collect();
    let derivative: Vec<Complex64> = monic
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, c)| c * k as f64)
        .collect();

    // Initial guesses on a circle of the Fujiwara radius, offset in angle to
    // avoid symmetric stagnation.
    let radius = (0..degree)
        .map(|k| monic[k].norm().powf(1.0 / (degree - k) as f64))
        .fold(0.0_f64, f64::max)
        .max(1e-3);
    let centroid = -monic[degree - 1] / degree as f64;
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / degree as f64 + 0.4;
            centroid + Complex64::from_polar(radius, theta)
        })
        .collect();

    for _ in 0..MAX_ITERATIONS {
        let mut max_step: f64 = 0.0;
        for i in 0..degree {
            let (p, dp) = (horner(&monic, z[i]), horner(&derivative, z[i]));
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != i)
                .map(|j| {
                    let d = z[i] - z[j];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let denom = Complex64::new(1.0, 0.0) - ratio * repulsion;
            let step = if denom.norm() == 0.0 || !denom.is_finite() {
                ratio
            } else {
                ratio / denom
            };
            if step.is_finite() {
                z[i] -= step;
                max_step = max_step.max(step.norm() / (1.0 + z[i].norm()));
            }
        }
        if max_step < 1e-15 {
            break;
        }
    }
    z
}

/// A few Newton corrections of `z` toward a root of `coeffs`. Stops when the
/// step stops decreasing (which happens at multiple roots).
pub fn newton_polish(coeffs: &[Complex64], mut z: Complex64, iterations: usize) -> Complex64 {
    let mut last = f64::INFINITY;
    for _ in 0..iterations {
        let (p, dp) = horner_with_derivative(coeffs, z);
        if dp.norm() == 0.0 {
            break;
        }
        let step = p / dp;
        if !step.is_finite() || step.norm() >= last {
            break;
        }
        last = step.norm();
        z -= step;
        if last <= 1e-16 * (1.0 + z.norm()) {
            break;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn quadratic_with_complex_coefficients() {
        // i z^2 - (i/2) z = i z (z - 1/2)
        let roots = polynomial_roots(&[c(0.0, 0.0), c(0.0, -0.5), c(0.0, 1.0)]);
        let mut re: Vec<f64> = roots.iter().map(|r| r.re).collect();
        re.sort_by(f64::total_cmp);
        assert!((re[0] - 0.0).abs() < 1e-14 && (re[1] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn quintic_roots_reconstruct_polynomial() {
        let expected = [c(1.0, 0.0), c(-0.5, 2.0), c(0.3, -1.2), c(-2.0, -0.1), c(0.0, 0.7)];
        // Expand prod (z - r).
        let mut coeffs = vec![c(1.0, 0.0)];
        for r in expected {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (k, &a) in coeffs.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            coeffs = next;
        }
        let roots = polynomial_roots(&coeffs);
        assert_eq!(roots.len(), 5);
        for r in expected {
            let nearest = roots
                .iter()
                .map(|x| (x - r).norm())
                .fold(f64::INFINITY, f64::min);
            assert!(nearest < 1e-12, "missing root {r}");
        }
    }

    #[test]
    fn constant_has_no_roots() {
        assert!(polynomial_roots(&[c(3.0, 0.0)]).is_empty());
        assert!(polynomial_roots(&[c(3.0, 0.0), c(0.0, 0.0)]).is_empty());
    }
}
