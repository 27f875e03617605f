//! Error type shared by all library modules.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum XfgError {
    /// A point lies outside the domain box of a family or grid.
    #[error("point {point:?} is outside the domain {context}")]
    Domain { point: Vec<f64>, context: String },

    /// Inconsistent arguments (dimension mismatches, empty grids, bad ranges...).
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The coefficient matrix is rank deficient at the given point (LIC fails there).
    #[error("coefficient matrix is degenerate at x = {point:?} (sigma_min = {sigma_min:e} <= tol = {tol:e})")]
    Singular {
        point: Vec<f64>,
        sigma_min: f64,
        tol: f64,
    },

    /// A study refused to run because the grid cannot resolve the requested oscillation.
    #[error("under-resolved oscillation: {cells_per_period:.2} cells per period at h = {h}, need >= {required}")]
    Resolution {
        h: usize,
        cells_per_period: f64,
        required: f64,
    },

    /// The line search saw the energy increase along -gradient: integrand is not convex
    /// (or not differentiable) at the current iterate.
    #[error("descent failed: energy increases along -gradient at iteration {iteration} (non-convex integrand?)")]
    NonConvex { iteration: usize },

    /// The assembled quadratic system is not positive semidefinite.
    #[error("assembled quadratic system is indefinite (p^T A p = {curvature:e} < 0)")]
    Indefinite { curvature: f64 },

    /// Expression parse failure, with a byte offset into the source.
    #[error("expression error at byte {offset}: {message} in `{source_text}`")]
    Expr {
        offset: usize,
        message: String,
        source_text: String,
    },

    /// Configuration file errors (schema violations, unresolved cross-references).
    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl XfgError {
    pub fn argument(msg: impl Into<String>) -> Self {
        XfgError::Argument(msg.into())
    }

    pub fn config(msg: impl Into<String>) -> Self {
        XfgError::Config(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, XfgError>;
