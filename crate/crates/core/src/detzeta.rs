//! Hessians of the action along geodesics, Fredholm and zeta-regularized
//! determinants, and short-time heat kernel asymptotics.

use std::fmt;

use crate::error::{Error, Result};
use crate::geom::{GeodesicSegment, ManifoldSpec, Point};
use crate::kernelconv::least_squares_slope;
use crate::linalg::Matrix;
use crate::reference::{reference_kernel, sphere_antipodal_kernel, SeriesOrder};
use crate::scalar::Real;

/// Factors `1 + r/(kπ)²` below this magnitude count as zero modes.
pub const ZERO_MODE_THRESHOLD: f64 = 1e-8;
/// Explicit factors in the eigen-product before the Euler–Maclaurin tail.
pub const EIGEN_PRODUCT_MODES: usize = 4096;
/// RK4 steps on `[0, 1]` for the Gel'fand–Yaglom problem.
pub const GELFAND_YAGLOM_STEPS: usize = 2048;

/// Jacobi operator `−∂ₛ² + 𝓡` on `[0, 1]` with Dirichlet ends, `𝓡`
/// constant in a parallel frame.
#[derive(Clone, Debug, PartialEq)]
pub struct HessianSpec<T> {
    /// Geodesic rescaled to unit duration, when the spec comes from one.
    pub geodesic: Option<GeodesicSegment<T>>,
    /// `|γ̇|` on `[0, 1]`, i.e. the length.
    pub speed: T,
    /// `𝓡` in the frame `(γ̇/|γ̇|, normals…)`.
    pub jacobi: Matrix<T>,
}

impl<T: Real> HessianSpec<T> {
    /// Operator with a given symmetric constant `𝓡`.
    pub fn constant(jacobi: Matrix<T>) -> Result<Self> {
        if !jacobi.is_square() || !jacobi.is_symmetric(T::lit(1e-12)) {
            return Err(Error::InvalidArgument("Jacobi endomorphism must be square and symmetric".into()));
        }
        Ok(Self {
            geodesic: None,
            speed: T::zero(),
            jacobi,
        })
    }

    /// One-dimensional `−∂ₛ² + r`.
    pub fn scalar(r: T) -> Self {
        Self {
            geodesic: None,
            speed: T::zero(),
            jacobi: Matrix::from_row_major(1, 1, vec![r]),
        }
    }

    /// Hessian of the action along the minimizing geodesic from `x` to `y`,
    /// reparametrized to `[0, 1]`: `𝓡 = diag(0, −K d², …)`.
    pub fn from_points(m: &ManifoldSpec<T>, x: &Point<T>, y: &Point<T>) -> Result<Self> {
        let seg = GeodesicSegment::new(m, x.clone(), y.clone(), T::one())?;
        let d = seg.length();
        let n = m.dim();
        let k = m.sectional_curvature();
        let jacobi = Matrix::from_fn(n, n, |i, j| if i == j && i > 0 { -k * d * d } else { T::zero() });
        Ok(Self {
            geodesic: Some(seg),
            speed: d,
            jacobi,
        })
    }

    /// Sphere geodesic of length `d` in the normalized frame, without endpoints.
    pub fn sphere_arc(radius: T, d: T) -> Self {
        let k = T::one() / (radius * radius);
        Self {
            geodesic: None,
            speed: d,
            jacobi: Matrix::from_fn(2, 2, |i, j| if i == j && i > 0 { -k * d * d } else { T::zero() }),
        }
    }

    pub fn dim(&self) -> usize {
        self.jacobi.rows()
    }
}

/// Galerkin matrix of `id + (−∂ₛ²)⁻¹𝓡` in the H¹-orthonormal sine basis
/// `√2 sin(kπs)/(kπ)`, `k = 1..=modes`, ordered by component then mode.
pub fn hessian_matrix<T: Real>(spec: &HessianSpec<T>, modes: usize) -> Result<Matrix<T>> {
    if modes < 64 {
        return Err(Error::InvalidArgument("Hessian discretization needs at least 64 modes".into()));
    }
    let n = spec.dim();
    Ok(Matrix::from_fn(n * modes, n * modes, |a, b| {
        let (i, k) = (a / modes, a % modes);
        let (j, l) = (b / modes, b % modes);
        if k != l {
            return T::zero();
        }
        let kpi = T::PI() * T::from_usize_lossy(k + 1);
        let delta = if i == j { T::one() } else { T::zero() };
        delta + spec.jacobi[(i, j)] / (kpi * kpi)
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeterminantMethod {
    EigenProduct,
    GelfandYaglom,
}

impl fmt::Display for DeterminantMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::EigenProduct => "eigen-product",
            Self::GelfandYaglom => "gelfand-yaglom",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeterminantResult<T> {
    pub value: T,
    pub method: DeterminantMethod,
    /// Zero modes detected (and removed when a primed determinant was asked for).
    pub removed_zero_modes: usize,
    pub zero_mode_threshold: T,
    /// A zero mode is present and the unprimed value is zero.
    pub degenerate: bool,
}

/// `Σ_{k>K} ln(1 + a/k²)` by Euler–Maclaurin.
fn log_product_tail<T: Real>(a: T, kmax: usize) -> T {
    let k = T::from_usize_lossy(kmax);
    let f = (a / (k * k)).ln_1p();
    let df = -(a + a) / (k * k * k + a * k);
    let integral_rest = if a >= T::zero() {
        let s = a.sqrt();
        (s + s) * (s / k).atan()
    } else {
        let s = (-a).sqrt();
        -(s + s) * (s / k).atanh()
    };
    // ∫_K^∞ ln(1 + a/x²) dx = −K ln(1 + a/K²) + 2a∫_K^∞ dx/(x² + a)
    -k * f + integral_rest - f / T::lit(2.0) - df / T::lit(12.0)
}

/// Eigen-factors `1 + r/(kπ)²` of a scalar block: `(log |Π nonzero|, sign, zero modes)`.
fn scalar_factors<T: Real>(r: T, skip_zero: bool) -> (T, T, Vec<usize>) {
    let thr = T::lit(ZERO_MODE_THRESHOLD);
    let mut log = T::zero();
    let mut sign = T::one();
    let mut zeros = Vec::new();
    for k in 1..=EIGEN_PRODUCT_MODES {
        let kpi = T::PI() * T::from_usize_lossy(k);
        let f = T::one() + r / (kpi * kpi);
        if f.abs() < thr {
            zeros.push(k);
            if skip_zero {
                continue;
            }
        }
        if f < T::zero() {
            sign = -sign;
        }
        log += f.abs().ln();
    }
    log += log_product_tail(r / (T::PI() * T::PI()), EIGEN_PRODUCT_MODES);
    (log, sign, zeros)
}

fn eigen_product<T: Real>(spec: &HessianSpec<T>, prime: bool) -> Result<(T, Vec<usize>)> {
    let rs = spec.jacobi.symmetric_eigenvalues();
    let mut log = T::zero();
    let mut sign = T::one();
    let mut zeros = Vec::new();
    for r in rs {
        let (l, s, z) = scalar_factors(r, prime);
        log += l;
        sign *= s;
        zeros.extend(z);
    }
    if !prime && !zeros.is_empty() {
        return Ok((T::zero(), zeros));
    }
    Ok((sign * log.exp(), zeros))
}

fn plus<T: Real>(a: &Matrix<T>, s: T, b: &Matrix<T>) -> Matrix<T> {
    let mut c = a.clone();
    c.axpy(s, b);
    c
}

/// `det Y(1)` for `Y'' = 𝓡Y`, `Y(0) = 0`, `Y'(0) = id`, by RK4.
pub fn gelfand_yaglom<T: Real>(jacobi: &Matrix<T>, steps: usize) -> T {
    let n = jacobi.rows();
    let h = T::one() / T::from_usize_lossy(steps);
    let mut y = Matrix::zeros(n, n);
    let mut p = Matrix::identity(n);
    let half = T::lit(0.5);
    let sixth = T::one() / T::lit(6.0);
    for _ in 0..steps {
        // (y, p)' = (p, 𝓡y)
        let k1y = p.clone();
        let k1p = jacobi.matmul(&y);
        let y2 = plus(&y, h * half, &k1y);
        let p2 = plus(&p, h * half, &k1p);
        let k2y = p2.clone();
        let k2p = jacobi.matmul(&y2);
        let y3 = plus(&y, h * half, &k2y);
        let p3 = plus(&p, h * half, &k2p);
        let k3y = p3.clone();
        let k3p = jacobi.matmul(&y3);
        let y4 = plus(&y, h, &k3y);
        let p4 = plus(&p, h, &k3p);
        let k4y = p4;
        let k4p = jacobi.matmul(&y4);
        let dy = k1y.add(&k2y.scale(T::lit(2.0))).add(&k3y.scale(T::lit(2.0))).add(&k4y);
        let dp = k1p.add(&k2p.scale(T::lit(2.0))).add(&k3p.scale(T::lit(2.0))).add(&k4p);
        y.axpy(h * sixth, &dy);
        p.axpy(h * sixth, &dp);
    }
    y.determinant()
}

/// `det(id + (−∂ₛ²)⁻¹𝓡)`; zero if a zero mode is present.
pub fn fredholm_det<T: Real>(spec: &HessianSpec<T>, method: DeterminantMethod) -> Result<DeterminantResult<T>> {
    let (ep, zeros) = eigen_product(spec, false)?;
    let value = match method {
        DeterminantMethod::EigenProduct => ep,
        DeterminantMethod::GelfandYaglom if zeros.is_empty() => gelfand_yaglom(&spec.jacobi, GELFAND_YAGLOM_STEPS),
        DeterminantMethod::GelfandYaglom => T::zero(),
    };
    Ok(DeterminantResult {
        value,
        method,
        removed_zero_modes: 0,
        zero_mode_threshold: T::lit(ZERO_MODE_THRESHOLD),
        degenerate: !zeros.is_empty(),
    })
}

/// Fredholm determinant with the zero factors omitted.
pub fn fredholm_det_prime<T: Real>(spec: &HessianSpec<T>) -> Result<DeterminantResult<T>> {
    let (value, zeros) = eigen_product(spec, true)?;
    Ok(DeterminantResult {
        value,
        method: DeterminantMethod::EigenProduct,
        removed_zero_modes: zeros.len(),
        zero_mode_threshold: T::lit(ZERO_MODE_THRESHOLD),
        degenerate: !zeros.is_empty(),
    })
}

/// `det_ζ(−∂ₛ² + 𝓡) = 2ⁿ · det(id + (−∂ₛ²)⁻¹𝓡)`. With `prime`, zero modes
/// `k` are dropped, which also drops their `(kπ)²` from `det_ζ(−∂ₛ²)`.
pub fn zeta_det<T: Real>(spec: &HessianSpec<T>, prime: bool, method: DeterminantMethod) -> Result<DeterminantResult<T>> {
    let two_n = T::lit(2.0).powi(spec.dim() as i32);
    if !prime {
        let f = fredholm_det(spec, method)?;
        return Ok(DeterminantResult {
            value: two_n * f.value,
            ..f
        });
    }
    let (value, zeros) = eigen_product(spec, true)?;
    let removed: T = zeros
        .iter()
        .map(|&k| {
            let kpi = T::PI() * T::from_usize_lossy(k);
            kpi * kpi
        })
        .fold(T::one(), |a, b| a * b);
    Ok(DeterminantResult {
        value: two_n * value / removed,
        method: DeterminantMethod::EigenProduct,
        removed_zero_modes: zeros.len(),
        zero_mode_threshold: T::lit(ZERO_MODE_THRESHOLD),
        degenerate: !zeros.is_empty(),
    })
}

/// `exp(−ζ'(0))` for `−∂² + r` on `[0, 1]` from its spectral zeta function
/// `ζ(s) = Σ ((kπ)² + r)^{−s}`: the free part uses `ζ_R(0) = −½`,
/// `ζ_R'(0) = −½ ln 2π`, the rest `Σ ln(1 + r/(kπ)²)`.
pub fn spectral_zeta_det_scalar<T: Real>(r: T, prime: bool) -> T {
    let zeta_r0 = T::lit(-0.5);
    let zeta_r0_prime = T::lit(-0.5) * T::TAU().ln();
    // ζ_free(s) = π^{−2s} ζ_R(2s) ⇒ −ζ_free'(0) = 2 ln π · ζ_R(0) − 2 ζ_R'(0)
    let mut log = T::lit(2.0) * T::PI().ln() * zeta_r0 - T::lit(2.0) * zeta_r0_prime;
    let (l, s, zeros) = scalar_factors(r, prime);
    if !prime && !zeros.is_empty() {
        return T::zero();
    }
    log += l;
    for k in zeros {
        log -= T::lit(2.0) * (T::PI() * T::from_usize_lossy(k)).ln();
    }
    s * log.exp()
}

/// One extrapolation sample `(2πt)^{n/2} e^{d²/2t} K_t(x, y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticsRow<T> {
    pub t: T,
    pub scaled_value: T,
    pub prediction: T,
    pub relative_error: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticsReport<T> {
    pub manifold: String,
    pub d: T,
    pub rows: Vec<AsymptoticsRow<T>>,
    /// Polynomial extrapolation of the scaled values to `t = 0`.
    pub extrapolated: T,
    /// `det(id + (−∂²)⁻¹𝓡)^{−1/2}`.
    pub prediction: T,
    /// `det_ζ(−∂²)^{1/2} / det_ζ(−∂² + 𝓡)^{1/2}`.
    pub prediction_zeta: T,
    pub relative_error: T,
    /// Degenerate case: fitted `α` in `K_t ≈ C t^{−α} e^{−d²/2t}`.
    pub fitted_exponent: Option<T>,
    pub fitted_constant: Option<T>,
    /// Least-squares residuals of the fixed-`α` models `α = n/2` and `α = n/2 + k/2`.
    pub residual_nondegenerate: Option<T>,
    pub residual_degenerate: Option<T>,
}

/// Value at `0` of the interpolating polynomial through `(t_i, v_i)` (Neville).
pub fn richardson_extrapolate<T: Real>(ts: &[T], vs: &[T]) -> T {
    let mut p = vs.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (ti, tj) = (ts[i], ts[i + level]);
            p[i] = (tj * p[i] - ti * p[i + 1]) / (tj - ti);
        }
    }
    p[0]
}

/// Nondegenerate leading asymptotics at `t ∈ {0.1, 0.05, 0.025}`.
pub fn leading_asymptotics<T: Real>(m: &ManifoldSpec<T>, x: &Point<T>, y: &Point<T>) -> Result<AsymptoticsReport<T>> {
    leading_asymptotics_at(m, x, y, &[T::lit(0.1), T::lit(0.05), T::lit(0.025)])
}

pub fn leading_asymptotics_at<T: Real>(m: &ManifoldSpec<T>, x: &Point<T>, y: &Point<T>, ts: &[T]) -> Result<AsymptoticsReport<T>> {
    let spec = HessianSpec::from_points(m, x, y)?;
    let f = fredholm_det(&spec, DeterminantMethod::EigenProduct)?;
    if f.degenerate || f.value.abs() < T::lit(ZERO_MODE_THRESHOLD) {
        return Err(Error::ConjugatePoint {
            determinant: f.value.to_f64_lossy(),
        });
    }
    let prediction = f.value.powf(T::lit(-0.5));
    let free = zeta_det(&HessianSpec::constant(Matrix::<T>::zeros(spec.dim(), spec.dim()))?, false, DeterminantMethod::EigenProduct)?;
    let full = zeta_det(&spec, false, DeterminantMethod::EigenProduct)?;
    let prediction_zeta = (free.value / full.value).sqrt();
    let n = m.dim();
    let d = spec.speed;
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let k = reference_kernel(m, t, x, y, SeriesOrder::Auto)?;
        let scaled = (T::TAU() * t).powf(T::from_usize_lossy(n) / T::lit(2.0)) * (d * d / (t + t)).exp() * k;
        rows.push(AsymptoticsRow {
            t,
            scaled_value: scaled,
            prediction,
            relative_error: (scaled - prediction).abs() / prediction,
        });
    }
    let extrapolated = richardson_extrapolate(ts, &rows.iter().map(|r| r.scaled_value).collect::<Vec<_>>());
    Ok(AsymptoticsReport {
        manifold: m.to_string(),
        d,
        rows,
        extrapolated,
        prediction,
        prediction_zeta,
        relative_error: (extrapolated - prediction).abs() / prediction,
        fitted_exponent: None,
        fitted_constant: None,
        residual_nondegenerate: None,
        residual_degenerate: None,
    })
}

/// Predicted constant `C` in `K_t(N, S) ≈ C t^{−3/2} e^{−π²/2t}` on the unit
/// sphere: `(2π)^{−3/2} ∫_{Γ_min} det′^{−1/2}`, with `Γ_min` the circle of
/// meridians carrying the H¹ length of its Jacobi field `sin(πs)` and `det′`
/// the Fredholm determinant without its zero factor.
pub fn antipodal_constant_prediction<T: Real>() -> Result<T> {
    let spec = HessianSpec::sphere_arc(T::one(), T::PI());
    let det_prime = fredholm_det_prime(&spec)?.value;
    // ‖sin(π·)‖²_{H¹} = ∫ π² cos²(πs) ds
    let jacobi_norm = T::PI() / T::lit(2.0).sqrt();
    let integral = T::TAU() * jacobi_norm / det_prime.sqrt();
    Ok(integral * T::TAU().powf(T::lit(-1.5)))
}

/// Antipodal asymptotics on the unit sphere: log-log fit of `α`, `C` in
/// `K_t(N, S) e^{π²/2t} ≈ C t^{−α}` and the fixed-`α` model residuals.
pub fn degenerate_asymptotics_sphere<T: Real>(t_list: &[T]) -> Result<AsymptoticsReport<T>> {
    if t_list.len() < 3 || t_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("need at least three strictly decreasing times".into()));
    }
    let pi2 = T::PI() * T::PI();
    let prediction = antipodal_constant_prediction()?;
    let samples: Vec<(T, T)> = t_list
        .iter()
        .map(|&t| (t.ln(), (sphere_antipodal_kernel(t) * (pi2 / (t + t)).exp()).ln()))
        .collect();
    // y = ln C − α ln t
    let slope = least_squares_slope(&samples);
    let alpha = -slope;
    let n = T::from_usize_lossy(samples.len());
    let mean_x = samples.iter().map(|p| p.0).sum::<T>() / n;
    let mean_y = samples.iter().map(|p| p.1).sum::<T>() / n;
    let log_c = mean_y - slope * mean_x;
    let residual = |a: T| {
        let c = samples.iter().map(|p| p.1 + a * p.0).sum::<T>() / n;
        samples.iter().map(|p| (p.1 + a * p.0 - c).powi(2)).sum::<T>()
    };
    let rows = t_list
        .iter()
        .zip(&samples)
        .map(|(&t, p)| {
            let scaled = p.1.exp() * t.powf(T::lit(1.5));
            AsymptoticsRow {
                t,
                scaled_value: scaled,
                prediction,
                relative_error: (scaled - prediction).abs() / prediction,
            }
        })
        .collect();
    let c = log_c.exp();
    Ok(AsymptoticsReport {
        manifold: "sphere:1".into(),
        d: T::PI(),
        rows,
        extrapolated: c,
        prediction,
        prediction_zeta: prediction,
        relative_error: (c - prediction).abs() / prediction,
        fitted_exponent: Some(alpha),
        fitted_constant: Some(c),
        residual_nondegenerate: Some(residual(T::one())),
        residual_degenerate: Some(residual(T::lit(1.5))),
    })
}
