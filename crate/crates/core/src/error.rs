use alloc::boxed::Box;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector length {len} is not a triangular number")]
    NotTriangular { len: usize },
    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite (min eigenvalue {min_eigenvalue:e}, tolerance {tolerance:e})")]
    NotPositiveDefinite { min_eigenvalue: f64, tolerance: f64 },
    #[error("singular matrix at pivot {pivot} (condition estimate {cond_estimate:e})")]
    Singular { pivot: usize, cond_estimate: f64 },
    #[error("rank {rank} below required {expected}")]
    RankDeficient { rank: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("invalid problem shape: {0}")]
    Shape(&'static str),
    #[error("constraint matrices are linearly dependent (rank {rank} < m = {m})")]
    DependentConstraints { rank: usize, m: usize },
    #[error("right-hand side b is zero")]
    ZeroRhs,
    #[error("LMI matrices B_1..B_l are linearly dependent (rank {rank} < l = {l})")]
    DegenerateLmi { rank: usize, l: usize },
    #[error("invalid generator arguments: {0}")]
    InvalidArguments(&'static str),
    #[error("instance generation failed after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmbedError {
    #[error("point is not interior: {0}")]
    NotInterior(&'static str),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SdlcpError {
    #[error("hat point is not in iterate form (off-block magnitude {off_block:e})")]
    NotIterateForm { off_block: f64 },
    #[error("could not choose B1 with a nonzero (2,2) block after {attempts} attempts")]
    CannotSatisfyB122 { attempts: usize },
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NewtonError {
    #[error("singular Newton system (condition estimate {cond_estimate:e})")]
    SingularNewtonSystem { cond_estimate: f64 },
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl NewtonError {
    pub(crate) fn from_solve(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular { cond_estimate, .. } => {
                NewtonError::SingularNewtonSystem { cond_estimate }
            }
            other => NewtonError::Linalg(other),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IpmError {
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("iterate {k} is outside the neighborhood (distance {dist:e} > bound {bound:e})")]
    NotInNeighborhood { k: usize, dist: f64, bound: f64 },
    #[error("step order violated at iteration {k}: alpha2 = {alpha2} < alpha1 = {alpha1}")]
    StepOrderViolation { k: usize, alpha1: f64, alpha2: f64 },
    #[error("corrector left the neighborhood at iteration {k} (distance {dist:e} > bound {bound:e})")]
    CorrectorEscape { k: usize, dist: f64, bound: f64 },
    #[error("iteration limit reached after {iterations} iterations")]
    MaxIterExceeded {
        iterations: usize,
        trace: Box<crate::ipm::IterTrace>,
    },
    #[error("equivalence violated at iteration {k} (block deviation {block_dev:e}, mu deviation {mu_dev:e})")]
    EquivalenceViolation { k: usize, block_dev: f64, mu_dev: f64 },
    #[error("trace has {have} entries, {need} required")]
    InsufficientTrace { have: usize, need: usize },
    #[error(transparent)]
    Newton(#[from] NewtonError),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Sdlcp(#[from] SdlcpError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Phase1Error {
    #[error("no strictly feasible dual point (auxiliary optimum {aux_optimum:e})")]
    NotStrictlyFeasible { aux_optimum: f64 },
    #[error("phase-I run was inconclusive after {iterations} iterations")]
    Inconclusive { iterations: usize },
    #[error("start is not dual feasible (residual {residual:e})")]
    NotDualFeasible { residual: f64 },
    #[error("mu0 and Y0 must be positive")]
    InvalidStart,
    #[error(transparent)]
    Problem(#[from] ProblemError),
    #[error(transparent)]
    Ipm(#[from] IpmError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}
