use thiserror::Error;

/// Errors raised while building or evaluating spline objects.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SplineError {
    #[error("parameter {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("invalid knot vector: {0}")]
    KnotVector(String),

    #[error("invalid weights: {0}")]
    Weights(String),

    #[error("knot {knot} would reach multiplicity {multiplicity}, maximum is {max}")]
    Multiplicity {
        knot: f64,
        multiplicity: usize,
        max: usize,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("fine weights are not A^T w (max deviation {0:e}); rational spaces are not nested")]
    NonNestedWeights(f64),

    #[error("refined space is inconsistent with the coarse one (residual {0:e})")]
    InconsistentRefinement(f64),

    #[error("degenerate triangle")]
    DegenerateTriangle,

    #[error("degenerate angle pair: sin(theta_k - theta_i) = {0:e}")]
    DegenerateAngles(f64),

    #[error("pole control points are collinear; tangent plane undefined")]
    DegenerateTangent,
}

pub type Result<T> = std::result::Result<T, SplineError>;
