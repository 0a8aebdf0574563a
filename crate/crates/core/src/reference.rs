//! Ground-truth heat kernels and Feynman–Kac references: Gaussian and
//! image sums, spectral series, Galerkin solves and a Crank–Nicolson solver.

use crate::error::{Error, Result};
use crate::geom::{BoundaryCondition, ManifoldSpec, Point};
use crate::linalg::{norm, Matrix};
use crate::quadrature::{gauss_legendre, GaussRule};
use crate::scalar::{compensated_sum, CompensatedSum, Real};

/// Ratio of last retained term to partial sum above which a fixed
/// truncation is reported.
pub const SERIES_TAIL_RATIO: f64 = 1e-12;
/// Agreement required between a Galerkin solve and its doubled truncation.
pub const GALERKIN_DOUBLING_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SeriesOrder {
    /// Heuristic order with an automatic doubling check.
    #[default]
    Auto,
    Fixed(usize),
}

/// `(2πt)^{−n/2} exp(−|x−y|²/2t)`.
pub fn exact_kernel_flat<T: Real>(n: usize, t: T, x: &[T], y: &[T]) -> T {
    let d2: T = x.iter().zip(y).map(|(&a, &b)| (a - b) * (a - b)).sum();
    gaussian(n, t, d2)
}

#[inline]
pub(crate) fn gaussian<T: Real>(n: usize, t: T, d2: T) -> T {
    (T::TAU() * t).powf(-T::from_usize_lossy(n) * T::lit(0.5)) * (-d2 / (t + t)).exp()
}

/// Heat kernel of `½Δ` on `m` at `(x, y)`.
pub fn reference_kernel<T: Real>(m: &ManifoldSpec<T>, t: T, x: &Point<T>, y: &Point<T>, order: SeriesOrder) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::InvalidArgument(format!("time must be positive, got {t}")));
    }
    match m {
        ManifoldSpec::Euclidean { dim } => Ok(exact_kernel_flat(*dim, t, x.coords(), y.coords())),
        ManifoldSpec::FlatTorus { sides } => {
            let mut k = T::one();
            for ((&a, &b), &l) in x.coords().iter().zip(y.coords()).zip(sides) {
                k *= circle_kernel_images(l, t, b - a, order)?;
            }
            Ok(k)
        }
        ManifoldSpec::Sphere { radius } => {
            let r2 = *radius * *radius;
            let theta = m.distance(x, y) / *radius;
            Ok(sphere_kernel(t / r2, theta, order)? / r2)
        }
        ManifoldSpec::Interval { length, bc } => interval_kernel_images(*length, *bc, t, x.x(), y.x(), order),
    }
}

fn image_count<T: Real>(l: T, t: T, order: SeriesOrder) -> usize {
    match order {
        SeriesOrder::Fixed(k) => k,
        SeriesOrder::Auto => {
            // images beyond √(80t) contribute below e^{-40}
            let reach = (T::lit(80.0) * t).sqrt() / l;
            reach.ceil().to_usize().unwrap_or(usize::MAX).clamp(8, 1 << 20)
        }
    }
}

/// `Σ_{|k|≤K} g_t(d + kL)` on the circle of circumference `l`.
pub fn circle_kernel_images<T: Real>(l: T, t: T, d: T, order: SeriesOrder) -> Result<T> {
    let kmax = image_count(l, t, order);
    let mut acc = CompensatedSum::new();
    let mut last = T::zero();
    for k in -(kmax as i64)..=(kmax as i64) {
        let s = d + T::from_i64(k).unwrap() * l;
        let g = gaussian(1, t, s * s);
        if k.unsigned_abs() as usize == kmax {
            last = last.max(g);
        }
        acc.add(g);
    }
    check_tail(kmax, last, acc.value())?;
    Ok(acc.value())
}

fn check_tail<T: Real>(order: usize, last: T, sum: T) -> Result<()> {
    let ratio = if sum == T::zero() { T::zero() } else { (last / sum).abs() };
    if ratio > T::lit(SERIES_TAIL_RATIO) {
        return Err(Error::Truncation {
            order,
            ratio: ratio.to_f64_lossy(),
        });
    }
    Ok(())
}

/// Method of images on `[0, L]`: `Σ_m g(x − y + 2mL) ∓ g(x + y + 2mL)`,
/// minus for Dirichlet.
pub fn interval_kernel_images<T: Real>(l: T, bc: BoundaryCondition, t: T, x: T, y: T, order: SeriesOrder) -> Result<T> {
    let kmax = image_count(l + l, t, order).max(1);
    let sign = match bc {
        BoundaryCondition::Dirichlet => -T::one(),
        BoundaryCondition::Neumann => T::one(),
    };
    let mut acc = CompensatedSum::new();
    let mut last = T::zero();
    for k in -(kmax as i64)..=(kmax as i64) {
        let shift = T::from_i64(2 * k).unwrap() * l;
        let a = x - y + shift;
        let b = x + y + shift;
        let term_a = gaussian(1, t, a * a);
        let term_b = gaussian(1, t, b * b);
        if k.unsigned_abs() as usize == kmax {
            last = last.max(term_a).max(term_b);
        }
        acc.add(term_a);
        acc.add(sign * term_b);
    }
    let scale = gaussian(1, t, T::zero());
    check_tail(kmax, last, scale)?;
    Ok(acc.value())
}

/// Eigenfunction expansion on `[0, L]`: sines for Dirichlet, cosines
/// (with the constant mode) for Neumann.
pub fn interval_kernel_series<T: Real>(l: T, bc: BoundaryCondition, t: T, x: T, y: T, modes: usize) -> T {
    let two_over_l = T::lit(2.0) / l;
    let mut acc = CompensatedSum::new();
    if bc == BoundaryCondition::Neumann {
        acc.add(T::one() / l);
    }
    for k in 1..=modes {
        let w = T::from_usize_lossy(k) * T::PI() / l;
        let decay = (-t * w * w * T::lit(0.5)).exp();
        let f = match bc {
            BoundaryCondition::Dirichlet => (w * x).sin() * (w * y).sin(),
            BoundaryCondition::Neumann => (w * x).cos() * (w * y).cos(),
        };
        acc.add(two_over_l * f * decay);
    }
    acc.value()
}

/// Unit-sphere kernel at angular distance `theta`.
fn sphere_kernel<T: Real>(t: T, theta: T, order: SeriesOrder) -> Result<T> {
    match order {
        SeriesOrder::Fixed(lmax) => sphere_kernel_legendre(t, theta.cos(), lmax),
        SeriesOrder::Auto if t >= T::lit(0.25) => {
            let l0 = T::lit(10.0) / t.sqrt();
            let mut lmax = l0.ceil().to_usize().unwrap_or(32).max(32);
            loop {
                match sphere_kernel_legendre(t, theta.cos(), lmax) {
                    Err(Error::Truncation { .. }) if lmax < 4096 => lmax *= 2,
                    other => return other,
                }
            }
        }
        SeriesOrder::Auto => Ok(sphere_kernel_resummed(t, theta)),
    }
}

/// `Σ_{l≤L} (2l+1)/(4π) e^{−t l(l+1)/2} P_l(c)` on the unit sphere.
pub fn sphere_kernel_legendre<T: Real>(t: T, c: T, lmax: usize) -> Result<T> {
    let four_pi = T::lit(4.0) * T::PI();
    let mut p0 = T::one();
    let mut p1 = c;
    let mut acc = CompensatedSum::new();
    acc.add(T::one() / four_pi);
    let mut last = T::one() / four_pi;
    for l in 1..=lmax {
        let p = if l == 1 {
            p1
        } else {
            let lf = T::from_usize_lossy(l);
            let p2 = ((lf + lf - T::one()) * c * p1 - (lf - T::one()) * p0) / lf;
            p0 = p1;
            p1 = p2;
            p2
        };
        let lf = T::from_usize_lossy(l);
        let term = (lf + lf + T::one()) / four_pi * (-t * lf * (lf + T::one()) * T::lit(0.5)).exp() * p;
        acc.add(term);
        last = term;
    }
    check_tail(lmax, last, acc.value())?;
    Ok(acc.value())
}

/// Poisson-resummed unit-sphere kernel, accurate for small `t`:
/// `√2 e^{t/8} (2πt)^{−3/2} ∫_θ^π S(φ)/√(cos θ − cos φ) dφ` with
/// `S(φ) = Σ_k (−1)^k (φ+2πk) e^{−(φ+2πk)²/2t}`.
pub fn sphere_kernel_resummed<T: Real>(t: T, theta: T) -> T {
    let pi = T::PI();
    if pi - theta < T::lit(1e-6) {
        return sphere_antipodal_kernel(t);
    }
    let kmax = ((T::lit(1500.0) * t).sqrt() / T::TAU()).ceil().to_i64().unwrap_or(0) + 1;
    let s_sum = |phi: T| {
        let mut acc = T::zero();
        for k in -kmax..=kmax {
            let a = phi + T::TAU() * T::from_i64(k).unwrap();
            let term = a * (-a * a / (t + t)).exp();
            if k.rem_euclid(2) == 0 {
                acc += term;
            } else {
                acc -= term;
            }
        }
        acc
    };
    // φ = θ + (π − θ)u², panels graded geometrically towards u = 0
    let span = pi - theta;
    let (nodes, weights) = gauss_legendre::<T>(20);
    let mut acc = CompensatedSum::new();
    let mut hi = T::one();
    for _ in 0..48 {
        let lo = hi * T::lit(0.5);
        let (mid, half) = ((hi + lo) * T::lit(0.5), (hi - lo) * T::lit(0.5));
        for (&xn, &wn) in nodes.iter().zip(&weights) {
            let u = mid + half * xn;
            let gap = span * u * u;
            let phi = theta + gap;
            let den = (T::lit(2.0) * ((phi + theta) * T::lit(0.5)).sin() * (gap * T::lit(0.5)).sin()).sqrt();
            acc.add(wn * half * s_sum(phi) * T::lit(2.0) * span * u / den);
        }
        hi = lo;
    }
    let pref = T::SQRT_2() * (t / T::lit(8.0)).exp() * (T::TAU() * t).powf(T::lit(-1.5));
    pref * acc.value()
}

/// Unit-sphere kernel between antipodal points,
/// `e^{t/8} √(2π) t^{−3/2} Σ_{m≥0} (−1)^m (m+½) e^{−2π²(m+½)²/t}`.
pub fn sphere_antipodal_kernel<T: Real>(t: T) -> T {
    let two_pi2 = T::lit(2.0) * T::PI() * T::PI();
    let mut acc = T::zero();
    for m in 0..64 {
        let h = T::from_usize_lossy(m) + T::lit(0.5);
        let term = h * (-two_pi2 * h * h / t).exp();
        if m % 2 == 0 {
            acc += term;
        } else {
            acc -= term;
        }
        if term < T::min_positive_value() {
            break;
        }
    }
    (t / T::lit(8.0)).exp() * T::TAU().sqrt() * t.powf(T::lit(-1.5)) * acc
}

/// Kind of orthonormal eigenbasis of `½Δ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    /// `1, √2 cos(2πkx/L), √2 sin(2πkx/L)` (normalized) on a circle.
    Fourier,
    /// `√((2l+1)/4πr²) P_l(cos θ)`: functions of the colatitude only.
    Zonal,
    Sine,
    Cosine,
}

/// Truncated orthonormal eigenbasis of `½Δ`, eigenvalues ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralBasis<T> {
    pub manifold: ManifoldSpec<T>,
    pub kind: BasisKind,
    /// Modes retained: Fourier `|k| ≤ order`, zonal `l ≤ order`,
    /// sine `1..=order`, cosine `0..=order`.
    pub order: usize,
    pub eigenvalues: Vec<T>,
}

impl<T: Real> SpectralBasis<T> {
    pub fn new(m: &ManifoldSpec<T>, order: usize) -> Result<Self> {
        let half = T::lit(0.5);
        let (kind, eigenvalues): (BasisKind, Vec<T>) = match m {
            ManifoldSpec::FlatTorus { sides } if sides.len() == 1 => {
                let w = T::TAU() / sides[0];
                let mut ev = vec![T::zero()];
                for k in 1..=order {
                    let e = half * (w * T::from_usize_lossy(k)).powi(2);
                    ev.push(e);
                    ev.push(e);
                }
                (BasisKind::Fourier, ev)
            }
            ManifoldSpec::Sphere { radius } => (
                BasisKind::Zonal,
                (0..=order)
                    .map(|l| {
                        let lf = T::from_usize_lossy(l);
                        half * lf * (lf + T::one()) / (*radius * *radius)
                    })
                    .collect(),
            ),
            ManifoldSpec::Interval { length, bc } => {
                let w = T::PI() / *length;
                match bc {
                    BoundaryCondition::Dirichlet => (
                        BasisKind::Sine,
                        (1..=order).map(|k| half * (w * T::from_usize_lossy(k)).powi(2)).collect(),
                    ),
                    BoundaryCondition::Neumann => (
                        BasisKind::Cosine,
                        (0..=order).map(|k| half * (w * T::from_usize_lossy(k)).powi(2)).collect(),
                    ),
                }
            }
            _ => {
                return Err(Error::UnsupportedManifold(format!("{m} has no spectral basis here")));
            }
        };
        Ok(Self {
            manifold: m.clone(),
            kind,
            order,
            eigenvalues,
        })
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Multiplicity of the full eigenspace containing basis function `i`
    /// (`2l+1` on the sphere, where only the zonal member is kept).
    pub fn multiplicity(&self, i: usize) -> usize {
        match self.kind {
            BasisKind::Zonal => 2 * i + 1,
            _ => 1,
        }
    }

    /// Values of all basis functions at `x`.
    pub fn eval(&self, x: &Point<T>) -> Vec<T> {
        match (&self.manifold, self.kind) {
            (ManifoldSpec::FlatTorus { sides }, _) => {
                let l = sides[0];
                let a = (T::lit(2.0) / l).sqrt();
                let w = T::TAU() / l * x.x();
                let mut out = vec![T::one() / l.sqrt()];
                for k in 1..=self.order {
                    let (s, c) = (w * T::from_usize_lossy(k)).sin_cos();
                    out.push(a * c);
                    out.push(a * s);
                }
                out
            }
            (ManifoldSpec::Sphere { radius }, _) => {
                let c = x.coords()[2] / norm(x.coords());
                let r2 = *radius * *radius;
                let mut out = Vec::with_capacity(self.order + 1);
                let (mut p0, mut p1) = (T::one(), c);
                for l in 0..=self.order {
                    let p = match l {
                        0 => T::one(),
                        1 => c,
                        _ => {
                            let lf = T::from_usize_lossy(l);
                            let p2 = ((lf + lf - T::one()) * c * p1 - (lf - T::one()) * p0) / lf;
                            p0 = p1;
                            p1 = p2;
                            p2
                        }
                    };
                    let lf = T::from_usize_lossy(l);
                    out.push(((lf + lf + T::one()) / (T::lit(4.0) * T::PI() * r2)).sqrt() * p);
                }
                out
            }
            (ManifoldSpec::Interval { length, .. }, kind) => {
                let a = (T::lit(2.0) / *length).sqrt();
                let w = T::PI() / *length * x.x();
                match kind {
                    BasisKind::Sine => (1..=self.order).map(|k| a * (w * T::from_usize_lossy(k)).sin()).collect(),
                    _ => {
                        let mut out = vec![T::one() / length.sqrt()];
                        out.extend((1..=self.order).map(|k| a * (w * T::from_usize_lossy(k)).cos()));
                        out
                    }
                }
            }
            _ => unreachable!("basis constructed only for supported manifolds"),
        }
    }

    /// Quadrature nodes and weights exact for products of three basis
    /// functions when the potential is band-limited to the same order.
    fn quadrature(&self) -> (Vec<Point<T>>, Vec<T>) {
        let m = &self.manifold;
        match m {
            ManifoldSpec::FlatTorus { sides } => {
                let n = 6 * self.order + 8;
                let h = sides[0] / T::from_usize_lossy(n);
                let pts = (0..n)
                    .map(|j| Point::from_coords_unchecked(smallvec::smallvec![h * T::from_usize_lossy(j)]))
                    .collect();
                (pts, vec![h; n])
            }
            ManifoldSpec::Sphere { radius } => {
                let (z, w) = gauss_legendre::<T>(3 * self.order / 2 + 8);
                let r = *radius;
                let pts = z
                    .iter()
                    .map(|&c| {
                        let s = (T::one() - c * c).max(T::zero()).sqrt();
                        Point::from_coords_unchecked(smallvec::smallvec![r * s, T::zero(), r * c])
                    })
                    .collect();
                let area = T::TAU() * r * r;
                (pts, w.into_iter().map(|wi| wi * area).collect())
            }
            ManifoldSpec::Interval { length, .. } => {
                let rule = GaussRule::<T>::new(16);
                let panels = self.order.max(4);
                let h = *length / T::from_usize_lossy(panels);
                let mut pts = Vec::new();
                let mut ws = Vec::new();
                for p in 0..panels {
                    let lo = h * T::from_usize_lossy(p);
                    for (u, w) in rule.unit_nodes() {
                        pts.push(Point::from_coords_unchecked(smallvec::smallvec![lo + u * h]));
                        ws.push(w * h);
                    }
                }
                (pts, ws)
            }
            _ => unreachable!("basis constructed only for supported manifolds"),
        }
    }
}

/// `e^{−t(½Δ + V)}u₀` at `x` by a Galerkin solve in [`SpectralBasis`],
/// checked against the doubled truncation. On the sphere `V` and `u₀`
/// must depend only on the colatitude.
pub fn fk_reference<T: Real>(
    m: &ManifoldSpec<T>,
    v: &dyn Fn(&Point<T>) -> T,
    t: T,
    x: &Point<T>,
    u0: &dyn Fn(&Point<T>) -> T,
    order: SeriesOrder,
) -> Result<T> {
    let base = match order {
        SeriesOrder::Auto => 16,
        SeriesOrder::Fixed(k) => k,
    };
    let coarse = galerkin_solve(m, v, t, x, u0, base)?;
    let fine = galerkin_solve(m, v, t, x, u0, 2 * base)?;
    let diff = (fine - coarse).abs();
    if diff > T::lit(GALERKIN_DOUBLING_TOL) * fine.abs().max(T::one()) {
        return Err(Error::Truncation {
            order: base,
            ratio: (diff / fine.abs().max(T::min_positive_value())).to_f64_lossy(),
        });
    }
    Ok(coarse)
}

/// Single Galerkin solve with `order` modes, no doubling check.
pub fn galerkin_solve<T: Real>(
    m: &ManifoldSpec<T>,
    v: &dyn Fn(&Point<T>) -> T,
    t: T,
    x: &Point<T>,
    u0: &dyn Fn(&Point<T>) -> T,
    order: usize,
) -> Result<T> {
    let basis = SpectralBasis::new(m, order)?;
    let (pts, wts) = basis.quadrature();
    let n = basis.len();
    let values: Vec<Vec<T>> = pts.iter().map(|p| basis.eval(p)).collect();
    let pot: Vec<T> = pts.iter().map(v).collect();
    let init: Vec<T> = pts.iter().map(u0).collect();
    let mut gen = Matrix::from_fn(n, n, |i, j| {
        compensated_sum(values.iter().zip(&pot).zip(&wts).map(|((phi, &vq), &w)| w * vq * phi[i] * phi[j]))
    });
    for i in 0..n {
        gen[(i, i)] += basis.eigenvalues[i];
    }
    // symmetrize quadrature rounding
    let gen = Matrix::from_fn(n, n, |i, j| T::lit(0.5) * (gen[(i, j)] + gen[(j, i)]));
    let coeffs: Vec<T> = (0..n)
        .map(|i| compensated_sum(values.iter().zip(&init).zip(&wts).map(|((phi, &u), &w)| w * u * phi[i])))
        .collect();
    let (lambda, vecs) = gen.symmetric_eigen();
    let at_x = basis.eval(x);
    // u(t,x) = Σ_k e^{−tλ_k} ⟨q_k, c⟩ ⟨q_k, φ(x)⟩
    let mut acc = CompensatedSum::new();
    for (k, &lk) in lambda.iter().enumerate() {
        let qc: T = (0..n).map(|i| vecs[(i, k)] * coeffs[i]).sum();
        let qx: T = (0..n).map(|i| vecs[(i, k)] * at_x[i]).sum();
        acc.add((-t * lk).exp() * qc * qx);
    }
    Ok(acc.value())
}

/// Crank–Nicolson solve of `∂ₜu = ½u'' − Vu` on `[−a, a]` with zero
/// Dirichlet data, returning `u(t, x)` by linear interpolation.
pub fn crank_nicolson_1d<T: Real>(
    v: &dyn Fn(T) -> T,
    u0: &dyn Fn(T) -> T,
    t: T,
    x: T,
    half_width: T,
    cells: usize,
    steps: usize,
) -> Result<T> {
    if cells < 4 || steps == 0 || !(t > T::zero()) || !(half_width > x.abs()) {
        return Err(Error::InvalidArgument("invalid Crank–Nicolson discretization".into()));
    }
    let h = (half_width + half_width) / T::from_usize_lossy(cells);
    let dt = t / T::from_usize_lossy(steps);
    let n = cells - 1;
    let xs: Vec<T> = (1..cells).map(|i| -half_width + h * T::from_usize_lossy(i)).collect();
    let mut u: Vec<T> = xs.iter().map(|&xi| u0(xi)).collect();
    // A = −½D² + V; solve (I + dt/2 A)u⁺ = (I − dt/2 A)u
    let off = -T::lit(0.5) / (h * h);
    let diag: Vec<T> = xs.iter().map(|&xi| T::one() / (h * h) + v(xi)).collect();
    let k = dt * T::lit(0.5);
    let lower = vec![k * off; n];
    let main: Vec<T> = diag.iter().map(|&d| T::one() + k * d).collect();
    let mut rhs = vec![T::zero(); n];
    for _ in 0..steps {
        for i in 0..n {
            let mut r = (T::one() - k * diag[i]) * u[i];
            if i > 0 {
                r -= k * off * u[i - 1];
            }
            if i + 1 < n {
                r -= k * off * u[i + 1];
            }
            rhs[i] = r;
        }
        u = thomas(&lower, &main, &lower, &rhs);
    }
    let s = (x + half_width) / h;
    let i = s.floor().to_usize().unwrap_or(0).min(cells - 1);
    let frac = s - T::from_usize_lossy(i);
    let at = |j: usize| if j == 0 || j == cells { T::zero() } else { u[j - 1] };
    Ok(at(i) * (T::one() - frac) + at(i + 1) * frac)
}

/// Tridiagonal solve; `a` below, `b` on, `c` above the diagonal.
fn thomas<T: Real>(a: &[T], b: &[T], c: &[T], d: &[T]) -> Vec<T> {
    let n = b.len();
    let mut cp = vec![T::zero(); n];
    let mut dp = vec![T::zero(); n];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..n {
        let den = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / den;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / den;
    }
    let mut x = vec![T::zero(); n];
    x[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn flat_kernel_value_and_mass() {
        assert_relative_eq!(exact_kernel_flat(1, 1.0, &[0.3], &[0.3]), 0.3989422804014327, epsilon = 1e-15);
        let rule = GaussRule::<f64>::new(16);
        let mass = rule.integrate_composite(-12.0, 12.0, 48, |y| exact_kernel_flat(1, 0.7, &[0.2], &[y]));
        assert_relative_eq!(mass, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_semigroup_at_spot_values() {
        let rule = GaussRule::<f64>::new(16);
        let (s, t, x, y) = (0.3, 0.5, 0.1, -0.4);
        let conv = rule.integrate_composite(-15.0, 15.0, 60, |z| {
            exact_kernel_flat(1, s, &[x], &[z]) * exact_kernel_flat(1, t, &[z], &[y])
        });
        assert_relative_eq!(conv, exact_kernel_flat(1, s + t, &[x], &[y]), epsilon = 1e-12);
    }

    #[test]
    fn sphere_large_time_is_uniform() {
        let m = ManifoldSpec::sphere(1.0).unwrap();
        let x = m.sphere_point(0.3, 0.0).unwrap();
        let y = m.sphere_point(2.0, 1.0).unwrap();
        let k = reference_kernel(&m, 40.0, &x, &y, SeriesOrder::Auto).unwrap();
        assert_relative_eq!(k, 1.0 / (4.0 * PI), epsilon = 1e-12);
    }

    #[test]
    fn sphere_constructions_agree() {
        for &t in &[0.5, 0.2, 0.1] {
            for &th in &[0.0, 1e-6, 0.05, 0.7, PI / 2.0, 2.5] {
                let a = sphere_kernel_legendre(t, f64::cos(th), 400).unwrap();
                let b = sphere_kernel_resummed(t, th);
                assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "t={t} θ={th}: {a} vs {b}");
            }
            let a = sphere_kernel_legendre(t, -1.0, 400).unwrap();
            assert!((a - sphere_antipodal_kernel(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn sphere_radius_scaling() {
        let m = ManifoldSpec::sphere(2.0).unwrap();
        let x = m.sphere_point(0.3, 0.0).unwrap();
        let y = m.sphere_point(1.0, 0.4).unwrap();
        let k = reference_kernel(&m, 1.2, &x, &y, SeriesOrder::Auto).unwrap();
        let th: f64 = m.distance(&x, &y) / 2.0;
        assert_relative_eq!(k, sphere_kernel_legendre(0.3, th.cos(), 200).unwrap() / 4.0, epsilon = 1e-14);
    }

    #[test]
    fn fixed_order_that_is_too_small_is_reported() {
        let m = ManifoldSpec::sphere(1.0).unwrap();
        let x = m.sphere_point(0.3, 0.0).unwrap();
        let r = reference_kernel(&m, 0.1, &x, &x, SeriesOrder::Fixed(5));
        assert!(matches!(r, Err(Error::Truncation { .. })));
        let c = ManifoldSpec::circle(1.0).unwrap();
        let p = c.point(&[0.0]).unwrap();
        assert!(matches!(reference_kernel(&c, 5.0, &p, &p, SeriesOrder::Fixed(1)), Err(Error::Truncation { .. })));
    }

    #[test]
    fn torus_rows_integrate_to_one() {
        let m = ManifoldSpec::circle(2.0).unwrap();
        let x = m.point(&[0.3]).unwrap();
        let n = 256;
        let sum: f64 = (0..n)
            .map(|j| {
                let y = m.point(&[2.0 * j as f64 / n as f64]).unwrap();
                reference_kernel(&m, 0.4, &x, &y, SeriesOrder::Auto).unwrap() * 2.0 / n as f64
            })
            .sum();
        assert_relative_eq!(sum, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn interval_images_match_eigenseries() {
        for bc in [BoundaryCondition::Dirichlet, BoundaryCondition::Neumann] {
            for &t in &[0.01, 0.1, 0.3, 1.0, 2.0] {
                for &(x, y) in &[(0.3, 0.5), (1.5, 1.6), (0.05, 3.0), (PI / 2.0, PI / 2.0)] {
                    let a = interval_kernel_images(PI, bc, t, x, y, SeriesOrder::Auto).unwrap();
                    let b = interval_kernel_series(PI, bc, t, x, y, 2000);
                    assert!((a - b).abs() < 1e-8, "{bc} t={t} ({x},{y}): {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn dirichlet_leading_mode() {
        let t = 12.0;
        let k = interval_kernel_images(PI, BoundaryCondition::Dirichlet, t, PI / 2.0, PI / 2.0, SeriesOrder::Auto).unwrap();
        assert_relative_eq!(k, 2.0 / PI * (-t / 2.0f64).exp(), max_relative = 1e-6);
        assert!(k > 0.0);
    }

    #[test]
    fn spectral_eigenvalues() {
        let c = SpectralBasis::new(&ManifoldSpec::circle(2.0).unwrap(), 2).unwrap();
        assert_eq!(c.len(), 5);
        assert_relative_eq!(c.eigenvalues[3], (2.0 * PI * 2.0 / 2.0).powi(2) / 2.0);
        let s = SpectralBasis::new(&ManifoldSpec::sphere(1.0).unwrap(), 3).unwrap();
        assert_eq!(s.eigenvalues, vec![0.0, 1.0, 3.0, 6.0]);
        assert_eq!(s.multiplicity(3), 7);
        let d = SpectralBasis::new(&ManifoldSpec::interval(PI, BoundaryCondition::Dirichlet).unwrap(), 3).unwrap();
        assert_relative_eq!(d.eigenvalues[2], 4.5, epsilon = 1e-14);
    }

    #[test]
    fn galerkin_with_constant_potential() {
        let m = ManifoldSpec::circle(2.0 * PI).unwrap();
        let x = m.point(&[0.4]).unwrap();
        let u0 = |p: &Point<f64>| 1.0 + p.x().cos();
        let free = fk_reference(&m, &|_| 0.0, 0.5, &x, &u0, SeriesOrder::Auto).unwrap();
        assert_relative_eq!(free, 1.0 + (-0.25f64).exp() * 0.4f64.cos(), epsilon = 1e-12);
        let damped = fk_reference(&m, &|_| 0.7, 0.5, &x, &u0, SeriesOrder::Auto).unwrap();
        assert_relative_eq!(damped, (-0.35f64).exp() * free, epsilon = 1e-10);
    }

    #[test]
    fn galerkin_cosine_potential_is_converged() {
        let m = ManifoldSpec::circle(2.0 * PI).unwrap();
        let x = m.point(&[0.0]).unwrap();
        let v = |p: &Point<f64>| p.x().cos();
        let a = galerkin_solve(&m, &v, 0.5, &x, &|_| 1.0, 16).unwrap();
        let b = galerkin_solve(&m, &v, 0.5, &x, &|_| 1.0, 32).unwrap();
        assert!((a - b).abs() < 1e-9);
        // short-time expansion: u ≈ 1 − t cos(0) + t²(cos²/2 + cos/4)
        assert!((a - 0.6).abs() < 0.05);
    }

    #[test]
    fn sphere_lichnerowicz_constant_potential() {
        let m = ManifoldSpec::sphere(1.0).unwrap();
        let x = m.sphere_point(0.8, 0.0).unwrap();
        let u0 = |p: &Point<f64>| p.coords()[2];
        let k = fk_reference(&m, &|_| 0.25, 0.6, &x, &u0, SeriesOrder::Auto).unwrap();
        // z is an l = 1 eigenfunction: decays like e^{−t}
        assert_relative_eq!(k, (-0.6f64 * 1.25).exp() * 0.8f64.cos(), epsilon = 1e-12);
    }

    #[test]
    fn crank_nicolson_matches_mehler() {
        let u = crank_nicolson_1d(&|x: f64| 0.5 * x * x, &|_| 1.0, 0.5, 0.0, 10.0, 2000, 1000).unwrap();
        assert_relative_eq!(u, 1.0 / 0.5f64.cosh().sqrt(), max_relative = 1e-5);
    }
}
