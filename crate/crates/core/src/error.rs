//! Error type shared across the solver modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("mass mismatch: |∫ν - ∫μ| = {mismatch:.3e} exceeds tolerance {tol:.3e}")]
    MassMismatch { mismatch: f64, tol: f64 },

    #[error("descriptor lies outside the domain: {0}")]
    DescriptorOutsideDomain(String),

    #[error("test field is not subharmonic on U: min Δψ = {min_laplacian:.3e}")]
    NotSubharmonic { min_laplacian: f64 },

    #[error("linear solve did not converge: residual {residual:.3e} after {iters} iterations")]
    SolveDidNotConverge { residual: f64, iters: usize },

    #[error("problem is infeasible: {0}")]
    Infeasible(String),

    #[error("no bracketing root: {0}")]
    NoRootBracket(String),

    #[error("gluing precondition violated: {violating_cells} cells active in the continuation but frozen in the base run")]
    GluingPrecondition { violating_cells: usize },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
