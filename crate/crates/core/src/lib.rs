//! Heat kernels as path integrals over piecewise-geodesic path spaces.
//!
//! The crate builds Chernoff-type approximations of the heat semigroup of
//! `½Δ` on a small catalog of closed-form manifolds, samples finite
//! dimensional approximations of Wiener measure, evaluates parallel
//! transport weights on vector bundles, and computes the zeta-regularized
//! determinants that appear in small-time asymptotics.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! `*64` aliases at the crate root fix the scalar to `f64`.

// `!(x > 0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod detzeta;
pub mod error;
pub mod geom;
pub mod kernelconv;
pub mod linalg;
pub mod pathspace;
pub mod quadrature;
pub mod reference;
pub mod scalar;
pub mod stochastic;

pub use bundle::{compose_transport, magnetic_weight, path_ordered_exponential, PathWeight, TransportValue};
pub use detzeta::{
    degenerate_asymptotics_sphere, fredholm_det, hessian_matrix, leading_asymptotics, spectral_zeta_det_scalar, zeta_det,
    AsymptoticsReport, DeterminantMethod, DeterminantResult, HessianSpec,
};
pub use error::{Error, Result};
pub use geom::{BoundaryCondition, Coords, CurvatureData, GeodesicSegment, ManifoldSpec, Point, TangentVector};
pub use kernelconv::{
    build_grid, chernoff_columns, chernoff_product, convergence_report, convolve, eval_kernel, kernel_matrix,
    reference_kernel_matrix, ConvergenceReport, ConvergenceRow, GridLayout, KernelFamily, KernelMatrix, KernelVariant,
    QuadratureGrid,
};
pub use linalg::Matrix;
pub use pathspace::{
    make_partition, project_to_polygon, reflect_unfold, unfold, DensityFactor, Measure, Partition, PartitionScheme,
    PiecewiseGeodesicPath, ReflectedPath,
};
pub use reference::{exact_kernel_flat, fk_reference, reference_kernel, SeriesOrder, SpectralBasis};
pub use scalar::Real;
pub use stochastic::{
    cylinder_expectation, feynman_kac_mc, quadratic_variation_stats, sample_polygon_path, truncation_bias_bound, FiberValue,
    MCEstimate, McValue, QuadraticVariationStats, SamplerConfig,
};

pub type ManifoldSpec64 = ManifoldSpec<f64>;
pub type ManifoldSpec32 = ManifoldSpec<f32>;
pub type Point64 = Point<f64>;
pub type TangentVector64 = TangentVector<f64>;
pub type Matrix64 = Matrix<f64>;
pub type Partition64 = Partition<f64>;
pub type PiecewiseGeodesicPath64 = PiecewiseGeodesicPath<f64>;
pub type MCEstimate64<V = f64> = MCEstimate<f64, V>;
