use thiserror::Error;

/// Error type shared by every subsystem of the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature did not reach tolerance {tol:e} after {refinements} refinements (last delta {delta:e})")]
    QuadratureDivergence {
        tol: f64,
        refinements: usize,
        delta: f64,
    },
    #[error("degenerate branch configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("cannot route an integration path around the branch points: {0}")]
    PathThroughBranchPoint(String),
    #[error("pole at {pole} too close to an integration contour (distance {dist:e})")]
    PoleOnContour { pole: num_complex::Complex64, dist: f64 },
    #[error("matrix is not integer symplectic")]
    NotSymplectic,
    #[error("index {0} out of range (expected 1..={1})")]
    InvalidIndex(usize, usize),

    #[error("Newton iteration for the Jacobi inversion did not converge (best residual {0:e})")]
    NewtonDivergence(f64),
    #[error("inverted divisor violates the admissibility conditions: {0}")]
    DegenerateDivisor(String),
    #[error("lattice coordinates (c1, c2) must not both be half-integers")]
    HalfIntegerInput,

    #[error("the a-period system for the normalisation coefficients is singular (cond {0:e})")]
    SingularAlphaSystem(f64),
    #[error("evaluation at a pole of the differential (u = {0})")]
    EvaluationAtPole(num_complex::Complex64),
    #[error("root finding on the cleared numerator failed: {0}")]
    RootFindingFailure(String),
    #[error("zeros of the differential are degenerate: {0}")]
    DegenerateZeros(String),

    #[error("Okamoto transform denominator vanishes at x = {x} (|den| = {den:e})")]
    OkamotoSingularity { x: num_complex::Complex64, den: f64 },
    #[error("grid of {0} points is too coarse for fourth-order stencils (need at least 5)")]
    GridTooCoarse(usize),

    #[error("A12 residue {index} is numerically zero ({magnitude:e}); the residue matrices are singular")]
    VanishingA12 { index: usize, magnitude: f64 },

    #[error("point is too close to a coordinate hyperplane for Jacobi coordinates")]
    DegeneratePoint,
    #[error("point is not on the quadric Q_beta (residual {0:e})")]
    OffQuadric(f64),
    #[error("tangency discriminant has a multiple root")]
    TangencyDegenerate,
    #[error("no forward intersection with the target quadric")]
    NoIntersection,
    #[error("bounce at beta = {beta} is not the {expected} required by the signature")]
    SignatureViolation { beta: f64, expected: &'static str },
    #[error("Taylor expansion radius too small: {0}")]
    ExpansionRadiusTooSmall(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
