//! Time-dependent vector fields in the class (L), flow maps `Φ_t^s`, the
//! space-time maps `Ψ`, `Ψ⁻¹`, and mollification.

mod field;
mod flow;
mod mollify;

use thiserror::Error;

pub use field::{
    BoundingBox, FieldSlice, FieldSpec, GriddedField, TimeDependentField, TimeProfile,
};
pub(crate) use flow::richardson;
pub use flow::{
    least_squares_slope, lebesgue_time_sampler, DirectionalDerivative, FlowMap, QuotientStudy,
    SpaceTimePoint,
};
pub use mollify::{mollify, mollify_with_nodes, DEFAULT_MOLLIFIER_NODES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("field not in class (L): {0}")]
    NotInClassL(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("mollification radius must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("flow integration from {s} to {t} did not reach the tolerance")]
    NotConverged { s: f64, t: f64 },
}
