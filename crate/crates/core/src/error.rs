use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("profile takes negative value {min:e} at t = {argmin}")]
    NegativeProfile { min: f64, argmin: f64 },

    #[error("quadrature did not converge: change {change:e} after refining to {panels} panels")]
    QuadratureNotConverged { panels: usize, change: f64 },

    #[error("symmetric eigensolver failed to converge")]
    DegenerateEigensolve,

    #[error("invalid slab domain: {0}")]
    InvalidDomain(String),

    #[error("point ({x}, {y}) lies outside the domain")]
    OutOfDomain { x: f64, y: f64 },

    #[error("invalid mesh resolution: {0}")]
    InvalidResolution(String),

    #[error("mapped triangle {index} has non-positive area {area:e}")]
    MeshDegenerate { index: usize, area: f64 },

    #[error("element {index} has non-positive Jacobian {jacobian:e}")]
    SingularElement { index: usize, jacobian: f64 },

    #[error("conjugate gradients stopped after {iterations} iterations with relative residual {residual:e}")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("negative curvature {curvature:e} at CG iteration {iteration}; system is not positive definite")]
    IndefiniteSystem { iteration: usize, curvature: f64 },

    #[error("limit-problem determinant {det:e} is negligible against scale {scale:e}")]
    NearSingularSystem { det: f64, scale: f64 },

    #[error("at least {needed} rows with positive errors are required, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("all sweep errors are at solver-noise level (max {max_error:e})")]
    DegenerateSweep { max_error: f64 },
}

impl Error {
    /// Stable snake-case name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidInput(_) => "invalid_input",
            Error::NegativeProfile { .. } => "negative_profile",
            Error::QuadratureNotConverged { .. } => "quadrature_not_converged",
            Error::DegenerateEigensolve => "degenerate_eigensolve",
            Error::InvalidDomain(_) => "invalid_domain",
            Error::OutOfDomain { .. } => "out_of_domain",
            Error::InvalidResolution(_) => "invalid_resolution",
            Error::MeshDegenerate { .. } => "mesh_degenerate",
            Error::SingularElement { .. } => "singular_element",
            Error::NotConverged { .. } => "not_converged",
            Error::IndefiniteSystem { .. } => "indefinite_system",
            Error::NearSingularSystem { .. } => "near_singular_system",
            Error::InsufficientData { .. } => "insufficient_data",
            Error::DegenerateSweep { .. } => "degenerate_sweep",
        }
    }

    /// True for errors caused by a numerical method failing, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNotConverged { .. }
                | Error::DegenerateEigensolve
                | Error::MeshDegenerate { .. }
                | Error::SingularElement { .. }
                | Error::NotConverged { .. }
                | Error::IndefiniteSystem { .. }
                | Error::NearSingularSystem { .. }
        )
    }
}
