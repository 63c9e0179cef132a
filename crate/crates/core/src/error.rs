//! Error type shared by every stage of the interpolation pipeline.

use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("operation undefined for the zero polynomial")]
    ZeroPolynomial,

    #[error("root set is not closed under conjugation (mismatch {mismatch:.3e})")]
    RootSymmetry { mismatch: f64 },

    #[error("evaluation at a pole: denominator root {root}")]
    Pole { root: Complex64 },

    #[error("value at pivot node has non-positive real part ({re})")]
    NotPositiveReal { re: f64 },

    #[error("Krylov matrix V is ill-conditioned (condition estimate {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("parameters are not real: relative imaginary residue {residue:.3e}")]
    ConjugateSymmetry { residue: f64 },

    #[error("block {block} is singular: d_j0 = 1 within tolerance")]
    SingularBlock { block: usize },

    #[error("Pick matrix is not positive definite (smallest eigenvalue {min_eigenvalue:.6e})")]
    PickInfeasible { min_eigenvalue: f64 },

    #[error("contractivity violated: h'Ph = {p1} >= 1")]
    Contractivity { p1: f64 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("path tracking failed at lambda = {lambda}: step fell below minimum")]
    PathFailure { lambda: f64, p: Vec<f64> },

    #[error("Jacobian is singular at lambda = {lambda}")]
    SingularJacobian { lambda: f64 },

    #[error("insufficient data: need {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("degenerate covariance estimate: {0}")]
    DegenerateCovariance(String),

    #[error("least-squares structure is rank deficient (rank {rank} of {unknowns})")]
    Structure { rank: usize, unknowns: usize },

    #[error("gamma must exceed 1 (got {0})")]
    Gamma(f64),

    #[error("constraint value |S| = {value} is not below gamma = {gamma}")]
    InfeasibleGamma { value: f64, gamma: f64 },

    #[error("plant has an unstable pole and zero at the same location {location}")]
    DegeneratePlant { location: Complex64 },

    #[error("controller recovery left uncancelled unstable factors: {roots:?}")]
    Cancellation { roots: Vec<Complex64> },

    #[error("closed loop is unstable")]
    UnstableLoop,

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(format!("line {} column {}: {}", e.line(), e.column(), e))
    }
}

impl Error {
    /// Process exit status: 2 parse, 3 infeasible, 4 ill-conditioned, 5 path
    /// failure, 6 insufficient data, 1 anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parse(_) | Error::InvalidInput(_) | Error::Io(_) | Error::RootSymmetry { .. } | Error::DegeneratePlant { .. } => 2,
            Error::PickInfeasible { .. } | Error::NotPositiveReal { .. } | Error::Gamma(_) | Error::InfeasibleGamma { .. } => 3,
            Error::IllConditioned { .. } | Error::ConjugateSymmetry { .. } | Error::SingularBlock { .. } | Error::Structure { .. } => 4,
            Error::PathFailure { .. } | Error::SingularJacobian { .. } | Error::NoConvergence { .. } | Error::Contractivity { .. } => 5,
            Error::InsufficientData { .. } | Error::DegenerateCovariance(_) => 6,
            Error::ZeroPolynomial | Error::Pole { .. } | Error::Cancellation { .. } | Error::UnstableLoop => 1,
        }
    }

    /// Short machine-readable name used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::ZeroPolynomial => "zero_polynomial",
            Error::RootSymmetry { .. } => "root_symmetry",
            Error::Pole { .. } => "pole",
            Error::NotPositiveReal { .. } => "not_positive_real",
            Error::IllConditioned { .. } => "ill_conditioned",
            Error::ConjugateSymmetry { .. } => "conjugate_symmetry",
            Error::SingularBlock { .. } => "singular_block",
            Error::PickInfeasible { .. } => "pick_infeasible",
            Error::Contractivity { .. } => "contractivity",
            Error::NoConvergence { .. } => "no_convergence",
            Error::PathFailure { .. } => "path_failure",
            Error::SingularJacobian { .. } => "singular_jacobian",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::DegenerateCovariance(_) => "degenerate_covariance",
            Error::Structure { .. } => "structure",
            Error::Gamma(_) => "gamma",
            Error::InfeasibleGamma { .. } => "infeasible_gamma",
            Error::DegeneratePlant { .. } => "degenerate_plant",
            Error::Cancellation { .. } => "cancellation",
            Error::UnstableLoop => "unstable_loop",
            Error::Io(_) => "io",
            Error::Parse(_) => "parse",
        }
    }
}
