use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failures raised by the numerical pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("leading coefficient a_n vanishes at lambda = {0}")]
    LeadingCoefficientVanishes(Complex64),
    #[error("turning points collide along the parameter path near lambda = {0}")]
    BranchPointEncountered(Complex64),
    #[error("discriminant vanishes identically; turning points are not distinct functions of lambda")]
    DegenerateDiscriminant,
    #[error("square-root branch is ambiguous near z = {0} (path too close to a turning point)")]
    BranchAmbiguity(Complex64),
    #[error("quadrature did not reach tolerance (estimated error {0:e})")]
    QuadratureFailure(f64),
    #[error("turning points {0} and {1} coincide")]
    DegenerateTurningPoints(usize, usize),
    #[error("Stokes line from turning point {0} stalled near z = {1}")]
    StepCollapse(usize, Complex64),
    #[error("Stokes line from turning point {0} escapes at angle {1} matching no asymptote")]
    AsymptoteMismatch(usize, f64),
    #[error("overlapping Stokes lines prevent building the face arrangement")]
    ArrangementDegeneracy,
    #[error("point {0} lies on a Stokes line")]
    OnStokesLine(Complex64),
    #[error("no seed found on a {0}x{0} grid")]
    SeedMiss(usize),
    #[error("Newton iteration diverged for index m = {0}")]
    NewtonDivergence(i64),
    #[error("curve segment intersects other members of the limit graph away from its endpoints")]
    HypothesisViolated,
    #[error("point {0} is closer than the admissible clearance to a turning point")]
    TooCloseToTurningPoint(Complex64),
    #[error("estimate/oracle matching is ambiguous near lambda = {0}")]
    MatchingAmbiguous(Complex64),
    #[error("winding number unresolved on a cell edge near lambda = {0}")]
    WindingUnresolved(Complex64),
    #[error("potential does not have the form i(q(z) - lambda) with real q and real finite endpoints")]
    FormNotSupported,
    #[error("ODE integration failed: {0}")]
    Integration(String),
    #[error("invalid input: {0}")]
    Validation(String),
}

impl Error {
    /// True for errors caused by the problem definition rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_) | Error::DegenerateDiscriminant | Error::FormNotSupported
        )
    }
}
