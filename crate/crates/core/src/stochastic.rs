//! Monte Carlo sampling of the polygon approximations `𝕎_{x,τ}` of Wiener
//! measure, cylinder expectations and Feynman–Kac estimators.
//!
//! Sample `i` draws from its own ChaCha stream `(seed, i)`, so results do
//! not depend on how samples are scheduled across threads.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::bundle::{magnetic_exponent, path_ordered_exponential, PathWeight, TransportValue};
use crate::error::{Error, Result};
use crate::geom::{Coords, GeodesicSegment, ManifoldSpec, Point};
use crate::linalg::{dot, norm};
use crate::pathspace::{Partition, PiecewiseGeodesicPath};
use crate::quadrature::SEGMENT_RULE_ORDER;
use crate::scalar::Real;

const CHUNK: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerConfig {
    pub seed: u64,
    pub n_samples: usize,
    /// Steps are truncated to `truncation · inj(M)`.
    pub truncation: f64,
}

impl SamplerConfig {
    pub fn new(seed: u64, n_samples: usize) -> Self {
        Self {
            seed,
            n_samples,
            truncation: 0.9,
        }
    }

    pub fn with_truncation(self, truncation: f64) -> Self {
        Self { truncation, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.truncation > 0.0 && self.truncation <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "truncation must lie in (0, 1], got {}",
                self.truncation
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::InvalidArgument("need at least one sample".into()));
        }
        Ok(())
    }

    /// Generator for sample `index`.
    pub fn stream(&self, index: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index as u64);
        rng
    }
}

/// Values that can be averaged: reals, complex numbers and real vectors.
pub trait McValue<T>: Clone + Send + Sync {
    fn zero_like(&self) -> Self;
    fn add_scaled(&mut self, other: &Self, s: T);
    /// Real part of the inner product; `|x|²` on the diagonal.
    fn re_dot(&self, other: &Self) -> T;
}

macro_rules! real_mc_value {
    ($t:ty) => {
        impl McValue<$t> for $t {
            fn zero_like(&self) -> Self {
                0.0
            }
            fn add_scaled(&mut self, other: &Self, s: $t) {
                *self += other * s;
            }
            fn re_dot(&self, other: &Self) -> $t {
                self * other
            }
        }
    };
}
real_mc_value!(f32);
real_mc_value!(f64);

impl<T: Real> McValue<T> for Complex<T> {
    fn zero_like(&self) -> Self {
        Complex::new(T::zero(), T::zero())
    }
    fn add_scaled(&mut self, other: &Self, s: T) {
        *self += other.scale(s);
    }
    fn re_dot(&self, other: &Self) -> T {
        self.re * other.re + self.im * other.im
    }
}

impl<T: Real> McValue<T> for Vec<T> {
    fn zero_like(&self) -> Self {
        vec![T::zero(); self.len()]
    }
    fn add_scaled(&mut self, other: &Self, s: T) {
        for (a, &b) in self.iter_mut().zip(other) {
            *a += b * s;
        }
    }
    fn re_dot(&self, other: &Self) -> T {
        dot(self, other)
    }
}

/// Fibers of the bundles in [`PathWeight`]: `𝒫(γ)⁻¹` acts on them.
pub trait FiberValue<T>: McValue<T> {
    fn apply_inverse(transport: &TransportValue<T>, value: &Self) -> Result<Self>;
}

macro_rules! real_fiber_value {
    ($t:ty) => {
        impl FiberValue<$t> for $t {
            fn apply_inverse(transport: &TransportValue<$t>, value: &Self) -> Result<Self> {
                match transport {
                    TransportValue::Scalar(p) => Ok(value / p),
                    TransportValue::Matrix(m) if m.rows() == 1 => Ok(value / m[(0, 0)]),
                    other => Err(Error::RankMismatch {
                        left: other.rank(),
                        right: 1,
                    }),
                }
            }
        }
    };
}
real_fiber_value!(f32);
real_fiber_value!(f64);

impl<T: Real> FiberValue<T> for Complex<T> {
    fn apply_inverse(transport: &TransportValue<T>, value: &Self) -> Result<Self> {
        match transport {
            TransportValue::Scalar(p) => Ok(value.unscale(*p)),
            TransportValue::Complex(c) => Ok(value / c),
            TransportValue::Matrix(m) => Err(Error::RankMismatch {
                left: m.rows(),
                right: 1,
            }),
        }
    }
}

impl<T: Real> FiberValue<T> for Vec<T> {
    fn apply_inverse(transport: &TransportValue<T>, value: &Self) -> Result<Self> {
        match transport {
            TransportValue::Scalar(p) => Ok(value.iter().map(|&v| v / *p).collect()),
            TransportValue::Matrix(m) if m.rows() == value.len() => Ok(m.inverse()?.mul_vec(value)),
            other => Err(Error::RankMismatch {
                left: other.rank(),
                right: value.len(),
            }),
        }
    }
}

/// Monte Carlo estimate. For complex and vector means, `stderr` and
/// `sample_variance` refer to the total variance `E|X − EX|²`.
#[derive(Clone, Debug, PartialEq)]
pub struct MCEstimate<T, V = T> {
    pub mean: V,
    pub stderr: T,
    pub n: usize,
    /// Probability mass removed by step truncation, `Σ_j P(|v_j| ≥ R)`.
    pub truncation_bias_bound: T,
    pub sample_variance: T,
}

impl<T: Real, V: McValue<T>> MCEstimate<T, V> {
    /// Welford accumulation in sample order.
    pub fn from_samples(values: &[V], truncation_bias_bound: T) -> Result<Self> {
        let first = values
            .first()
            .ok_or_else(|| Error::InvalidArgument("no samples".into()))?;
        let mut mean = first.zero_like();
        let mut m2 = T::zero();
        for (k, x) in values.iter().enumerate() {
            let mut delta = x.clone();
            delta.add_scaled(&mean, -T::one());
            mean.add_scaled(&delta, T::one() / T::from_usize_lossy(k + 1));
            let mut after = x.clone();
            after.add_scaled(&mean, -T::one());
            m2 += delta.re_dot(&after);
        }
        let n = values.len();
        let sample_variance = if n > 1 {
            (m2 / T::from_usize_lossy(n - 1)).max(T::zero())
        } else {
            T::zero()
        };
        Ok(Self {
            mean,
            stderr: (sample_variance / T::from_usize_lossy(n)).sqrt(),
            n,
            truncation_bias_bound,
            sample_variance,
        })
    }
}

impl<T: Real> MCEstimate<T, T> {
    /// `|mean − target| ≤ k·stderr + slack`.
    pub fn agrees_with(&self, target: T, k: T, slack: T) -> bool {
        (self.mean - target).abs() <= k * self.stderr + slack
    }
}

/// Evaluates `f` on every sample index, in parallel chunks, in order.
fn sample_values<V: Send>(cfg: &SamplerConfig, f: impl Fn(&mut ChaCha8Rng) -> Result<V> + Sync) -> Result<Vec<V>> {
    cfg.validate()?;
    let chunks = cfg.n_samples.div_ceil(CHUNK);
    let parts: Vec<Vec<V>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(cfg.n_samples);
            (lo..hi).map(|i| f(&mut cfg.stream(i))).collect::<Result<Vec<V>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().flatten().collect())
}

fn truncation_radius<T: Real>(m: &ManifoldSpec<T>, cfg: &SamplerConfig) -> T {
    m.injectivity_radius() * T::lit(cfg.truncation)
}

/// `Σ_j P(|v_j| ≥ R)` for `v_j ~ N(0, Δ_jτ·id)` on `T_xM`.
pub fn truncation_bias_bound<T: Real>(m: &ManifoldSpec<T>, tau: &Partition<T>, cfg: &SamplerConfig) -> T {
    let r = truncation_radius(m, cfg).to_f64_lossy();
    if !r.is_finite() {
        return T::zero();
    }
    let a = m.dim() as f64 / 2.0;
    let total: f64 = tau
        .increments()
        .iter()
        .map(|d| {
            let q = statrs::function::gamma::gamma_ur(a, r * r / (2.0 * d.to_f64_lossy()));
            if q.is_finite() {
                q
            } else {
                0.0
            }
        })
        .sum();
    T::lit(total)
}

fn gaussian_tangent<T: Real>(m: &ManifoldSpec<T>, x: &[T], var: T, rng: &mut ChaCha8Rng) -> Coords<T> {
    let sd = var.sqrt();
    let mut v: Coords<T> = (0..m.ambient_dim())
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            T::lit(z) * sd
        })
        .collect();
    if let ManifoldSpec::Sphere { radius } = m {
        let k = dot(&v, x) / (*radius * *radius);
        for (vi, &xi) in v.iter_mut().zip(x) {
            *vi -= k * xi;
        }
    }
    v
}

/// Draws a path from `𝕎_{x,τ}`: Gaussian tangent steps of covariance
/// `Δ_jτ·id`, rejected beyond `truncation · inj(M)`, developed by `exp`.
pub fn sample_polygon_path<T: Real>(
    m: &ManifoldSpec<T>,
    x: &Point<T>,
    tau: &Partition<T>,
    truncation: f64,
    rng: &mut ChaCha8Rng,
) -> Result<PiecewiseGeodesicPath<T>> {
    if let ManifoldSpec::Interval { .. } = m {
        return Err(Error::UnsupportedManifold(format!(
            "{m}: boundary problems are handled by signed image kernels, not by sampling"
        )));
    }
    let radius = m.injectivity_radius() * T::lit(truncation);
    let mut segments = Vec::with_capacity(tau.len());
    let mut current = x.clone();
    for dt in tau.increments() {
        let v = loop {
            let v = gaussian_tangent(m, current.coords(), dt, rng);
            if norm(&v) < radius {
                break v;
            }
        };
        let end = Point::from_coords_unchecked(m.exp_coords(current.coords(), &v));
        let vel = v.iter().map(|&c| c / dt).collect();
        segments.push(GeodesicSegment::from_parts(current, end.clone(), dt, vel));
        current = end;
    }
    Ok(PiecewiseGeodesicPath::from_segments(m, tau.clone(), segments))
}

/// Monte Carlo estimate of `∫F d𝕎_{x,τ}`.
pub fn cylinder_expectation<T: Real, V: McValue<T>>(
    m: &ManifoldSpec<T>,
    x: &Point<T>,
    tau: &Partition<T>,
    f: impl Fn(&PiecewiseGeodesicPath<T>) -> V + Sync,
    cfg: &SamplerConfig,
) -> Result<MCEstimate<T, V>> {
    let values = sample_values(cfg, |rng| Ok(f(&sample_polygon_path(m, x, tau, cfg.truncation, rng)?)))?;
    MCEstimate::from_samples(&values, truncation_bias_bound(m, tau, cfg))
}

/// `𝒫(γ)` for one sampled path. Scalar and magnetic weights use Gauss
/// quadrature of the exponent; endomorphism weights integrate the ODE.
fn transport<T: Real>(path: &PiecewiseGeodesicPath<T>, weight: &PathWeight<T>) -> Result<TransportValue<T>> {
    match weight {
        PathWeight::Scalar(v) => Ok(TransportValue::Scalar(
            path.potential_integral(|p| v(p), SEGMENT_RULE_ORDER).exp(),
        )),
        PathWeight::Magnetic { omega, potential } => {
            let (phase, decay) = magnetic_exponent(path, &**omega, &**potential, SEGMENT_RULE_ORDER);
            Ok(TransportValue::Complex(Complex::from_polar(decay.exp(), -phase)))
        }
        PathWeight::Endomorphism { .. } => path_ordered_exponential(path, weight),
    }
}

/// Averages `𝒫(γ)⁻¹u₀(γ(t))` over `𝕎_{x,τ}`, estimating the time-`t`
/// heat semigroup of `½∇*∇ + V` applied to `u₀` at `x`.
pub fn feynman_kac_mc<T: Real, F: FiberValue<T>>(
    m: &ManifoldSpec<T>,
    x: &Point<T>,
    tau: &Partition<T>,
    weight: &PathWeight<T>,
    u0: impl Fn(&Point<T>) -> F + Sync,
    cfg: &SamplerConfig,
) -> Result<MCEstimate<T, F>> {
    let values = sample_values(cfg, |rng| {
        let path = sample_polygon_path(m, x, tau, cfg.truncation, rng)?;
        let p = transport(&path, weight)?;
        F::apply_inverse(&p, &u0(path.end()))
    })?;
    MCEstimate::from_samples(&values, truncation_bias_bound(m, tau, cfg))
}

/// Statistics of `Σ_j ric(Δ_jγ, Δ_jγ)` against `∫₀ᵗ scal(γ(s)) ds` over
/// one sample of paths.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticVariationStats<T> {
    pub ric_sum: MCEstimate<T>,
    pub scal_integral: MCEstimate<T>,
    /// `Σ ric − ∫scal`, whose variance vanishes as `|τ| → 0`.
    pub difference: MCEstimate<T>,
}

pub fn quadratic_variation_stats<T: Real + McValue<T>>(
    m: &ManifoldSpec<T>,
    x: &Point<T>,
    tau: &Partition<T>,
    cfg: &SamplerConfig,
) -> Result<QuadraticVariationStats<T>> {
    let pairs = sample_values(cfg, |rng| {
        let path = sample_polygon_path(m, x, tau, cfg.truncation, rng)?;
        let ric: T = path.segments().iter().map(|s| m.ricci(&s.displacement())).sum();
        // scal is constant on the catalog
        let scal = m.scalar_curvature() * tau.t();
        Ok((ric, scal))
    })?;
    let bias = truncation_bias_bound(m, tau, cfg);
    let ric: Vec<T> = pairs.iter().map(|p| p.0).collect();
    let scal: Vec<T> = pairs.iter().map(|p| p.1).collect();
    let diff: Vec<T> = pairs.iter().map(|p| p.0 - p.1).collect();
    Ok(QuadraticVariationStats {
        ric_sum: MCEstimate::from_samples(&ric, bias)?,
        scal_integral: MCEstimate::from_samples(&scal, bias)?,
        difference: MCEstimate::from_samples(&diff, bias)?,
    })
}
