//! Model problems: plane Couette flow `i(z - λ)` and plane Couette–Poiseuille
//! flow `i(z² - z/2 - λ)`, both with Dirichlet conditions at ±1.

use num_complex::Complex64;

use crate::poly::{BivariatePotential, BoundaryPoint, ParameterDomain};

/// Potential together with its boundary points.
#[derive(Clone, Debug)]
pub struct ModelProblem {
    pub potential: BivariatePotential,
    pub a: BoundaryPoint,
    pub b: BoundaryPoint,
}

pub fn couette() -> ModelProblem {
    ModelProblem {
        potential: BivariatePotential::shifted_real(&[0.0, 1.0]).expect("valid potential"),
        a: BoundaryPoint::finite(-1.0, 0.0),
        b: BoundaryPoint::finite(1.0, 0.0),
    }
}

pub fn couette_poiseuille() -> ModelProblem {
    ModelProblem {
        potential: BivariatePotential::shifted_real(&[0.0, -0.5, 1.0]).expect("valid potential"),
        a: BoundaryPoint::finite(-1.0, 0.0),
        b: BoundaryPoint::finite(1.0, 0.0),
    }
}

/// Parameter window used for the Couette limit graph.
pub fn couette_domain() -> ParameterDomain {
    ParameterDomain::new(Complex64::new(-1.2, -3.2), Complex64::new(1.2, 0.6)).expect("nonempty")
}

/// The energy half-strip `Re λ ∈ (-1/16, 3/2)`, `Im λ < 0`, truncated at
/// depth 2.2 and kept a hair below the real axis where turning points
/// become real and cross the boundary segment.
pub fn couette_poiseuille_domain() -> ParameterDomain {
    let mut g = ParameterDomain::new(Complex64::new(-0.0625, -2.2), Complex64::new(1.5, -2e-3))
        .expect("nonempty");
    g.exclude_singular_points(&couette_poiseuille().potential, 1e-2)
        .expect("branch points");
    g
}
