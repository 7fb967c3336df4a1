use thiserror::Error;

use crate::flow::FlowState;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("metric is singular or not positive definite at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("stencil of reach {reach} around {point:?} leaves the domain along axis {axis}")]
    OutOfDomain {
        point: Vec<f64>,
        axis: usize,
        reach: f64,
    },

    #[error("invalid warped product: {0}")]
    InvalidSpec(String),

    #[error("invalid flow coefficients: {0}")]
    InvalidCoefficients(String),

    /// The warping function dropped below the floor or the curvature blew up.
    /// The last state that was fully evaluated is attached.
    #[error("singularity reached at t = {t}: {reason}")]
    SingularityReached {
        t: f64,
        reason: String,
        state: Box<FlowState>,
    },

    #[error("unstable step at t = {t}: {reason}")]
    UnstableStep { t: f64, reason: String },

    #[error("flow state carries no time derivatives")]
    MissingVelocities,

    #[error("trajectory needs at least {needed} snapshots, got {got}")]
    InsufficientSnapshots { needed: usize, got: usize },

    #[error("fiber is not declared Einstein")]
    NotEinsteinFiber,

    #[error("expression error: {0}")]
    Expr(String),

    #[error("evaluation produced a non-finite value: {0}")]
    NonFinite(String),

    #[error("unknown catalog entry: {0}")]
    UnknownCatalog(String),
}
