use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The minimizing geodesic between the two points is not unique.
    #[error("points lie on each other's cut locus (distance {distance:.6e}, injectivity radius {injectivity_radius:.6e})")]
    CutLocus {
        distance: f64,
        injectivity_radius: f64,
    },

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("unsupported manifold for this operation: {0}")]
    UnsupportedManifold(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Path-ordered exponential step control did not reach its tolerance.
    #[error("integrator failed to reach tolerance {tolerance:.1e} on segment {segment} (last change {achieved:.3e} with {steps} steps)")]
    IntegratorStep {
        segment: usize,
        steps: usize,
        achieved: f64,
        tolerance: f64,
    },

    #[error("quadrature grids differ")]
    GridMismatch,

    #[error("rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },

    #[error("endpoints are conjugate along the geodesic (determinant {determinant:.3e})")]
    ConjugatePoint { determinant: f64 },

    /// A series truncation failed its tail check.
    #[error("series truncated too early: last retained term is {ratio:.3e} of the partial sum (order {order})")]
    Truncation { order: usize, ratio: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
