use thiserror::Error;

/// Errors raised by geometry, solver and experiment routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate triangle: the vertex coincides with one of the other points")]
    DegenerateTriangle,
    #[error("triangle perimeter {perimeter} is not below 2*D_kappa = {limit}")]
    PerimeterTooLarge { perimeter: f64, limit: f64 },
    #[error("invalid triangle sides: {0}")]
    InvalidTriangle(String),
    #[error("cosine argument {0} lies outside [-1, 1] beyond tolerance")]
    CosineOutOfRange(f64),
    #[error("point lies at or beyond the cut locus of the base point")]
    CutLocus,
    #[error("points belong to different spaces ({0} vs {1})")]
    SpaceMismatch(String, String),
    #[error("antipodal points have no unique geodesic")]
    AntipodalPoints,
    #[error("tangent vector outside the exponential map domain: {0}")]
    OutOfDomain(String),
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("matrix is not positive definite (min eigenvalue {0:e})")]
    NotPositiveDefinite(f64),
    #[error("bad family parameters: {0}")]
    BadFamilyParams(String),
    #[error("quantile grids differ in size ({0} vs {1})")]
    GridMismatch(usize, usize),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("cut locus reached during iteration {0}")]
    CutLocusDuringIteration(usize),
    #[error("solver did not converge after {iters} iterations (grad norm {grad_norm:e})")]
    NotConverged { iters: usize, grad_norm: f64 },
    #[error("b and b_star coincide (distance {0:e}); hugging function undefined")]
    CoincidentPoints(f64),
    #[error("lambda_in must be positive")]
    BadLambda,
    #[error("bad potential bounds: beta {beta} < alpha {alpha}")]
    BadBounds { alpha: f64, beta: f64 },
    #[error("theorem hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error("anchor is not a barycenter: gradient norm {grad_norm:e} exceeds {tolerance:e}")]
    AnchorNotBarycenter { grad_norm: f64, tolerance: f64 },
    #[error("log-log fit needs at least 3 grid points with positive values, got {0}")]
    InsufficientGrid(usize),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("experiment failed: {0}")]
    RunFailed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
