use thiserror::Error;

pub type Result<T> = std::result::Result<T, GfdmError>;

#[derive(Debug, Error)]
pub enum GfdmError {
    #[error("point cloud is empty")]
    EmptyCloud,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point {point}: neighborhood has {found} members, {required} required")]
    InsufficientNeighbors {
        point: usize,
        found: usize,
        required: usize,
    },
    #[error("point {point}: degenerate neighborhood ({reason})")]
    DegenerateNeighborhood { point: usize, reason: String },
    #[error("point {point}: neighbor {neighbor} normal is not transversal to the tangent plane")]
    NonTransversal { point: usize, neighbor: usize },
    #[error("point {point}: least-squares system is singular ({reason})")]
    SingularSystem { point: usize, reason: String },
    #[error("point {point}: diffusion coefficient is not positive definite")]
    NonSpd { point: usize },
    #[error("boundary point {0} is not covered by any boundary condition")]
    UncoveredBoundaryPoint(usize),
    #[error("point {0} is covered by more than one boundary condition")]
    DuplicateBoundaryCondition(usize),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("BiCGSTAB breakdown after {iterations} iterations (relative residual {residual:.3e})")]
    Breakdown { iterations: usize, residual: f64 },
    #[error(
        "BiCGSTAB did not converge in {iterations} iterations (relative residual {residual:.3e})"
    )]
    MaxIterExceeded { iterations: usize, residual: f64 },
    #[error("linear solve failed at time step {step}: {source}")]
    SolverFailure {
        step: usize,
        #[source]
        source: Box<GfdmError>,
    },
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl GfdmError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        GfdmError::InvalidParameter(msg.into())
    }
}
