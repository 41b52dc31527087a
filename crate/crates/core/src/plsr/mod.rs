//! Partial least squares regression by NIPALS, with the usual diagnostics:
//! variance shares, adjusted R², VIP and regression coefficients.

mod diagnostics;
mod export;
mod linalg;
mod model;
mod nipals;

pub use diagnostics::{
    adjusted_r_square, variance_explained, vip, vip_table, ComponentVariance, VarianceReport,
    VipBasis, VipTable,
};
pub(crate) use linalg::frobenius;
pub use export::{MatrixDoc, ModelDoc, MODEL_FORMAT_VERSION};
pub use model::{fit, fit_many, CoefficientVector, FitOptions, PlsModel};
pub use nipals::{deflate, nipals_component, Component, ZERO_RESIDUAL};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlsError {
    #[error("requested {requested} components but at most {max} are identifiable")]
    TooManyComponents { requested: usize, max: usize },
    #[error("requested {requested} components but the model has {available}")]
    InvalidComponentCount { requested: usize, available: usize },
    #[error("NIPALS did not converge within {max_iter} iterations")]
    NoConvergence { max_iter: usize },
    #[error("residual matrix is numerically zero")]
    ZeroResidual,
    #[error("PᵀW is singular at {components} components")]
    SingularProjection { components: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid frame: {0}")]
    InvalidFrame(String),
    #[error("invalid options: {0}")]
    InvalidOptions(String),
    #[error("fitted factors explain no response variance")]
    NoExplainedVariance,
    #[error("model import failed: {0}")]
    Import(String),
}

pub type Result<T> = std::result::Result<T, PlsError>;
