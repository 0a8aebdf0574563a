//! Closed-form Riemannian geometry for the manifold catalog: flat space,
//! flat tori, the round 2-sphere and an interval with a boundary condition.
//!
//! Curvature follows `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`, so on a
//! sphere of curvature `K` the Jacobi endomorphism is
//! `w ↦ R(v,w)v = −K(|v|²w − ⟨w,v⟩v)`. The Laplacian is the nonnegative
//! `∇*∇` and heat semigroups are generated by `½Δ`.

use std::fmt;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::linalg::{cross, dot, norm, Matrix};
use crate::scalar::Real;

/// Coordinate storage; inline for the catalog's dimensions.
pub type Coords<T> = SmallVec<[T; 3]>;

/// Relative tolerance for geometric membership checks, widened for `f32`.
#[inline]
pub(crate) fn geom_tol<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(256.0))
}

/// Angular tolerance below which two points count as antipodal or
/// half a period apart.
#[inline]
fn cut_tol<T: Real>() -> T {
    T::lit(1e-10).max(T::epsilon() * T::lit(256.0))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

impl BoundaryCondition {
    pub fn other(self) -> Self {
        match self {
            Self::Dirichlet => Self::Neumann,
            Self::Neumann => Self::Dirichlet,
        }
    }
}

impl fmt::Display for BoundaryCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Dirichlet => "dirichlet",
            Self::Neumann => "neumann",
        })
    }
}

/// Closed-form geometry descriptor.
#[derive(Clone, Debug, PartialEq)]
pub enum ManifoldSpec<T> {
    Euclidean { dim: usize },
    FlatTorus { sides: Vec<T> },
    /// Round 2-sphere of the given radius, embedded in 3-space.
    Sphere { radius: T },
    Interval { length: T, bc: BoundaryCondition },
}

/// A point in the coordinates of its manifold: embedding coordinates on
/// the sphere, the canonical representative in `[0, L_i)` on a torus.
#[derive(Clone, Debug, PartialEq)]
pub struct Point<T> {
    coords: Coords<T>,
}

impl<T: Real> Point<T> {
    pub(crate) fn from_coords_unchecked(coords: Coords<T>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    /// First coordinate; the position on a circle or interval.
    pub fn x(&self) -> T {
        self.coords[0]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangentVector<T> {
    base: Point<T>,
    vec: Coords<T>,
}

impl<T: Real> TangentVector<T> {
    pub(crate) fn new_unchecked(base: Point<T>, vec: Coords<T>) -> Self {
        Self { base, vec }
    }

    pub fn base(&self) -> &Point<T> {
        &self.base
    }

    pub fn vector(&self) -> &[T] {
        &self.vec
    }

    pub fn norm(&self) -> T {
        norm(&self.vec)
    }

    pub fn dot(&self, other: &Self) -> T {
        dot(&self.vec, &other.vec)
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            base: self.base.clone(),
            vec: self.vec.iter().map(|&x| x * s).collect(),
        }
    }
}

/// Constant-speed minimizing geodesic `[0, duration] → M`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeodesicSegment<T> {
    pub start: Point<T>,
    pub end: Point<T>,
    pub duration: T,
    pub initial_velocity: TangentVector<T>,
}

/// Curvature quantities at a point, in ambient coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureData<T> {
    pub scal: T,
    /// `ric(v, v)`.
    pub ric_vv: T,
    /// Matrix of `w ↦ R(v, w)v` acting on ambient vectors tangent at the base.
    pub jacobi: Matrix<T>,
}

impl<T: Real> ManifoldSpec<T> {
    pub fn euclidean(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("dimension must be at least 1".into()));
        }
        Ok(Self::Euclidean { dim })
    }

    pub fn flat_torus(sides: Vec<T>) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::InvalidArgument("torus needs at least one side".into()));
        }
        if sides.iter().any(|&l| !(l > T::zero()) || !l.is_finite()) {
            return Err(Error::InvalidArgument("torus side lengths must be positive".into()));
        }
        Ok(Self::FlatTorus { sides })
    }

    /// Circle of the given circumference.
    pub fn circle(circumference: T) -> Result<Self> {
        Self::flat_torus(vec![circumference])
    }

    pub fn sphere(radius: T) -> Result<Self> {
        if !(radius > T::zero()) || !radius.is_finite() {
            return Err(Error::InvalidArgument("sphere radius must be positive".into()));
        }
        Ok(Self::Sphere { radius })
    }

    pub fn interval(length: T, bc: BoundaryCondition) -> Result<Self> {
        if !(length > T::zero()) || !length.is_finite() {
            return Err(Error::InvalidArgument("interval length must be positive".into()));
        }
        Ok(Self::Interval { length, bc })
    }

    /// Intrinsic dimension `n`.
    pub fn dim(&self) -> usize {
        match self {
            Self::Euclidean { dim } => *dim,
            Self::FlatTorus { sides } => sides.len(),
            Self::Sphere { .. } => 2,
            Self::Interval { .. } => 1,
        }
    }

    /// Length of coordinate vectors for points and tangent vectors.
    pub fn ambient_dim(&self) -> usize {
        match self {
            Self::Sphere { .. } => 3,
            _ => self.dim(),
        }
    }

    pub fn is_flat(&self) -> bool {
        !matches!(self, Self::Sphere { .. })
    }

    pub fn is_compact(&self) -> bool {
        !matches!(self, Self::Euclidean { .. })
    }

    /// Uniform radius below which minimizing geodesics are unique: `∞` on
    /// flat space, half the shortest side on a torus, `π·r` on the sphere.
    /// On the interval every pair is joined by its interior segment, so the
    /// bound is infinite; see [`Self::injectivity_radius_at`] for the
    /// distance to the boundary.
    pub fn injectivity_radius(&self) -> T {
        match self {
            Self::Euclidean { .. } | Self::Interval { .. } => T::infinity(),
            Self::FlatTorus { sides } => {
                sides.iter().fold(T::infinity(), |m, &l| m.min(l)) * T::lit(0.5)
            }
            Self::Sphere { radius } => T::PI() * *radius,
        }
    }

    /// Injectivity radius at `x`; on the interval the distance to the boundary.
    pub fn injectivity_radius_at(&self, x: &Point<T>) -> T {
        match self {
            Self::Interval { length, .. } => x.x().min(*length - x.x()),
            _ => self.injectivity_radius(),
        }
    }

    /// Riemannian volume; infinite for Euclidean space.
    pub fn volume(&self) -> T {
        match self {
            Self::Euclidean { .. } => T::infinity(),
            Self::FlatTorus { sides } => sides.iter().fold(T::one(), |p, &l| p * l),
            Self::Sphere { radius } => T::lit(4.0) * T::PI() * *radius * *radius,
            Self::Interval { length, .. } => *length,
        }
    }

    /// Validates and canonicalizes coordinates into a point.
    pub fn point(&self, coords: &[T]) -> Result<Point<T>> {
        if coords.len() != self.ambient_dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} coordinates, got {}",
                self.ambient_dim(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        match self {
            Self::Euclidean { .. } => Ok(Point::from_coords_unchecked(coords.into())),
            Self::FlatTorus { sides } => Ok(Point::from_coords_unchecked(
                coords.iter().zip(sides).map(|(&c, &l)| wrap(c, l)).collect(),
            )),
            Self::Sphere { radius } => {
                let r = norm(coords);
                if (r - *radius).abs() > geom_tol::<T>() * *radius {
                    return Err(Error::InvalidArgument(format!(
                        "point has norm {r} but sphere radius is {radius}"
                    )));
                }
                Ok(Point::from_coords_unchecked(
                    coords.iter().map(|&c| c * (*radius / r)).collect(),
                ))
            }
            Self::Interval { length, .. } => {
                let x = coords[0];
                if x < T::zero() || x > *length {
                    return Err(Error::InvalidArgument(format!(
                        "point {x} outside the interval [0, {length}]"
                    )));
                }
                Ok(Point::from_coords_unchecked(coords.into()))
            }
        }
    }

    /// Sphere point at colatitude `theta` and longitude `phi`.
    pub fn sphere_point(&self, theta: T, phi: T) -> Result<Point<T>> {
        match self {
            Self::Sphere { radius } => Ok(Point::from_coords_unchecked(SmallVec::from_slice(&[
                *radius * theta.sin() * phi.cos(),
                *radius * theta.sin() * phi.sin(),
                *radius * theta.cos(),
            ]))),
            _ => Err(Error::UnsupportedManifold(format!("{self} has no spherical coordinates"))),
        }
    }

    /// Validates a tangent vector at `base`.
    pub fn tangent(&self, base: &Point<T>, vec: &[T]) -> Result<TangentVector<T>> {
        if vec.len() != self.ambient_dim() {
            return Err(Error::InvalidArgument(format!(
                "expected {} tangent components, got {}",
                self.ambient_dim(),
                vec.len()
            )));
        }
        if let Self::Sphere { radius } = self {
            let inner = dot(base.coords(), vec);
            let scale = norm(vec) * *radius;
            if inner.abs() > geom_tol::<T>() * scale.max(T::min_positive_value()) {
                return Err(Error::InvalidArgument(format!(
                    "vector is not tangent: <base, v> = {inner:e}"
                )));
            }
            // remove the residual normal component
            let k = inner / (*radius * *radius);
            let v = vec.iter().zip(base.coords()).map(|(&vi, &pi)| vi - k * pi).collect();
            return Ok(TangentVector::new_unchecked(base.clone(), v));
        }
        Ok(TangentVector::new_unchecked(base.clone(), vec.into()))
    }

    pub fn zero_tangent(&self, base: &Point<T>) -> TangentVector<T> {
        TangentVector::new_unchecked(base.clone(), SmallVec::from_elem(T::zero(), self.ambient_dim()))
    }

    /// Time-one geodesic flow of `v`. Torus results are wrapped canonically;
    /// on the interval the geodesic reflects at the boundary.
    pub fn exp_map(&self, v: &TangentVector<T>) -> Point<T> {
        Point::from_coords_unchecked(self.exp_coords(v.base.coords(), &v.vec))
    }

    pub(crate) fn exp_coords(&self, x: &[T], v: &[T]) -> Coords<T> {
        match self {
            Self::Euclidean { .. } => x.iter().zip(v).map(|(&a, &b)| a + b).collect(),
            Self::FlatTorus { sides } => x
                .iter()
                .zip(v)
                .zip(sides)
                .map(|((&a, &b), &l)| wrap(a + b, l))
                .collect(),
            Self::Sphere { radius } => {
                let r = *radius;
                let s = norm(v);
                if s == T::zero() {
                    return x.into();
                }
                let theta = s / r;
                let (sn, cs) = theta.sin_cos();
                let k = r * sn / s;
                let mut out: Coords<T> = x.iter().zip(v).map(|(&p, &w)| p * cs + w * k).collect();
                let rn = norm(&out);
                for c in out.iter_mut() {
                    *c *= r / rn;
                }
                out
            }
            Self::Interval { length, .. } => {
                SmallVec::from_elem(fold_into_interval(x[0] + v[0], *length).0, 1)
            }
        }
    }

    /// Initial velocity of the unique minimizing geodesic from `x` to `y`
    /// on `[0, 1]`.
    pub fn log_map(&self, x: &Point<T>, y: &Point<T>) -> Result<TangentVector<T>> {
        Ok(TangentVector::new_unchecked(x.clone(), self.log_coords(x.coords(), y.coords())?))
    }

    pub(crate) fn log_coords(&self, x: &[T], y: &[T]) -> Result<Coords<T>> {
        match self {
            Self::Euclidean { .. } | Self::Interval { .. } => {
                Ok(x.iter().zip(y).map(|(&a, &b)| b - a).collect())
            }
            Self::FlatTorus { sides } => {
                let mut out = Coords::with_capacity(sides.len());
                for ((&a, &b), &l) in x.iter().zip(y).zip(sides) {
                    let d = nearest_image_offset(b - a, l);
                    if (d.abs() - l * T::lit(0.5)).abs() <= cut_tol::<T>() * l {
                        return Err(self.cut_locus_error(x, y));
                    }
                    out.push(d);
                }
                Ok(out)
            }
            Self::Sphere { radius } => {
                let r = *radius;
                let r2 = r * r;
                let c = dot(x, y);
                let cr = cross(x, y);
                let sin_r2 = norm(&cr);
                let theta = sin_r2.atan2(c);
                if T::PI() - theta <= cut_tol::<T>() {
                    return Err(self.cut_locus_error(x, y));
                }
                let k = c / r2;
                let factor = if theta < T::lit(1e-8) {
                    T::one() + theta * theta / T::lit(6.0)
                } else {
                    theta / theta.sin()
                };
                Ok(x.iter().zip(y).map(|(&p, &q)| (q - k * p) * factor).collect())
            }
        }
    }

    fn cut_locus_error(&self, x: &[T], y: &[T]) -> Error {
        Error::CutLocus {
            distance: self.distance_coords(x, y).to_f64_lossy(),
            injectivity_radius: self.injectivity_radius().to_f64_lossy(),
        }
    }

    pub fn distance(&self, x: &Point<T>, y: &Point<T>) -> T {
        self.distance_coords(x.coords(), y.coords())
    }

    pub(crate) fn distance_coords(&self, x: &[T], y: &[T]) -> T {
        match self {
            Self::Euclidean { .. } | Self::Interval { .. } => {
                x.iter().zip(y).map(|(&a, &b)| (b - a) * (b - a)).sum::<T>().sqrt()
            }
            Self::FlatTorus { sides } => x
                .iter()
                .zip(y)
                .zip(sides)
                .map(|((&a, &b), &l)| {
                    let d = nearest_image_offset(b - a, l);
                    d * d
                })
                .sum::<T>()
                .sqrt(),
            Self::Sphere { radius } => {
                let c = dot(x, y);
                let s = norm(&cross(x, y));
                *radius * s.atan2(c)
            }
        }
    }

    /// Parallel transport of `v` (based at `seg.start`) to `seg.end`.
    pub fn parallel_transport(&self, seg: &GeodesicSegment<T>, v: &TangentVector<T>) -> TangentVector<T> {
        match self {
            Self::Sphere { radius } => {
                let u = seg.initial_velocity.vector();
                let speed = norm(u);
                if speed == T::zero() {
                    return TangentVector::new_unchecked(seg.end.clone(), v.vec.clone());
                }
                let r = *radius;
                let theta = speed * seg.duration / r;
                let (e, e_rot, _) = sphere_rotation_frame(seg.start.coords(), u, r, theta);
                let b = dot(&v.vec, &e);
                let out = v.vec.iter().zip(e.iter().zip(&e_rot)).map(|(&w, (&a, &a2))| w + b * (a2 - a)).collect();
                TangentVector::new_unchecked(seg.end.clone(), out)
            }
            _ => TangentVector::new_unchecked(seg.end.clone(), v.vec.clone()),
        }
    }

    /// `J(x, y) = det(d exp_x)` at `log_x(y)`: `sin(d/r)/(d/r)` on the
    /// sphere, one on flat kinds.
    pub fn exp_jacobian(&self, x: &Point<T>, y: &Point<T>) -> Result<T> {
        match self {
            Self::Sphere { radius } => {
                let v = self.log_coords(x.coords(), y.coords())?;
                Ok(sinc(norm(&v) / *radius))
            }
            Self::FlatTorus { .. } => {
                self.log_coords(x.coords(), y.coords())?;
                Ok(T::one())
            }
            _ => Ok(T::one()),
        }
    }

    /// Scalar curvature at any point (constant on the catalog).
    pub fn scalar_curvature(&self) -> T {
        match self {
            Self::Sphere { radius } => T::lit(2.0) / (*radius * *radius),
            _ => T::zero(),
        }
    }

    /// Sectional curvature (constant on the catalog).
    pub fn sectional_curvature(&self) -> T {
        match self {
            Self::Sphere { radius } => T::one() / (*radius * *radius),
            _ => T::zero(),
        }
    }

    /// Ricci curvature `ric(v, v)`.
    pub fn ricci(&self, v: &[T]) -> T {
        // n - 1 = 1 on the 2-sphere
        self.sectional_curvature() * dot(v, v) * T::from_usize_lossy(self.dim() - 1)
    }

    pub fn curvature_data(&self, v: &TangentVector<T>) -> CurvatureData<T> {
        let k = self.sectional_curvature();
        let n = self.ambient_dim();
        let jacobi = match self {
            Self::Sphere { radius } => {
                let p = v.base.coords();
                let r2 = *radius * *radius;
                let vv = dot(&v.vec, &v.vec);
                Matrix::from_fn(n, n, |i, j| {
                    let proj = if i == j { T::one() } else { T::zero() } - p[i] * p[j] / r2;
                    -k * (vv * proj - v.vec[i] * v.vec[j])
                })
            }
            _ => Matrix::zeros(n, n),
        };
        CurvatureData {
            scal: self.scalar_curvature(),
            ric_vv: self.ricci(&v.vec),
            jacobi,
        }
    }

    /// Orthonormal basis of `T_xM` in ambient coordinates. When `lead` is a
    /// nonzero tangent vector, the first basis vector is its direction.
    pub fn orthonormal_frame(&self, x: &Point<T>, lead: Option<&[T]>) -> Vec<Coords<T>> {
        let n = self.ambient_dim();
        let mut seeds: Vec<Coords<T>> = Vec::new();
        if let Some(v) = lead {
            if norm(v) > T::zero() {
                seeds.push(v.into());
            }
        }
        for i in 0..n {
            let mut e = SmallVec::from_elem(T::zero(), n);
            e[i] = T::one();
            seeds.push(e);
        }
        let normal: Option<Coords<T>> = match self {
            Self::Sphere { radius } => Some(x.coords().iter().map(|&c| c / *radius).collect()),
            _ => None,
        };
        let mut frame: Vec<Coords<T>> = Vec::new();
        for mut s in seeds {
            if let Some(nrm) = &normal {
                let k = dot(&s, nrm);
                for (a, &b) in s.iter_mut().zip(nrm.iter()) {
                    *a -= k * b;
                }
            }
            for e in &frame {
                let k = dot(&s, e);
                for (a, &b) in s.iter_mut().zip(e.iter()) {
                    *a -= k * b;
                }
            }
            let l = norm(&s);
            if l > T::lit(1e-6) {
                frame.push(s.iter().map(|&c| c / l).collect());
            }
            if frame.len() == self.dim() {
                break;
            }
        }
        frame
    }
}

impl<T: Real> GeodesicSegment<T> {
    /// Minimizing segment from `start` to `end` traversed in `duration`.
    pub fn new(m: &ManifoldSpec<T>, start: Point<T>, end: Point<T>, duration: T) -> Result<Self> {
        if !(duration > T::zero()) {
            return Err(Error::InvalidArgument("segment duration must be positive".into()));
        }
        let log = m.log_coords(start.coords(), end.coords())?;
        let vel = log.iter().map(|&c| c / duration).collect();
        Ok(Self {
            initial_velocity: TangentVector::new_unchecked(start.clone(), vel),
            start,
            end,
            duration,
        })
    }

    pub(crate) fn from_parts(start: Point<T>, end: Point<T>, duration: T, velocity: Coords<T>) -> Self {
        Self {
            initial_velocity: TangentVector::new_unchecked(start.clone(), velocity),
            start,
            end,
            duration,
        }
    }

    pub fn length(&self) -> T {
        self.initial_velocity.norm() * self.duration
    }

    /// `log_start(end)`, the increment of the segment.
    pub fn displacement(&self) -> Coords<T> {
        self.initial_velocity.vec.iter().map(|&c| c * self.duration).collect()
    }

    /// Point reached after time `s ∈ [0, duration]`.
    pub fn point_at(&self, m: &ManifoldSpec<T>, s: T) -> Point<T> {
        let v: Coords<T> = self.initial_velocity.vec.iter().map(|&c| c * s).collect();
        Point::from_coords_unchecked(m.exp_coords(self.start.coords(), &v))
    }

    /// Velocity at time `s`, based at [`Self::point_at`].
    pub fn velocity_at(&self, m: &ManifoldSpec<T>, s: T) -> TangentVector<T> {
        let base = self.point_at(m, s);
        match m {
            ManifoldSpec::Sphere { radius } => {
                let u = self.initial_velocity.vector();
                let speed = norm(u);
                if speed == T::zero() {
                    return TangentVector::new_unchecked(base, u.into());
                }
                let (_, e_rot, _) = sphere_rotation_frame(self.start.coords(), u, *radius, speed * s / *radius);
                TangentVector::new_unchecked(base, e_rot.iter().map(|&c| c * speed).collect())
            }
            ManifoldSpec::Interval { length, .. } => {
                // the direction flips at every boundary reflection
                let (_, refl) = fold_into_interval(self.start.x() + self.initial_velocity.vec[0] * s, *length);
                let sign = if refl % 2 == 0 { T::one() } else { -T::one() };
                TangentVector::new_unchecked(base, SmallVec::from_elem(self.initial_velocity.vec[0] * sign, 1))
            }
            _ => TangentVector::new_unchecked(base, self.initial_velocity.vec.clone()),
        }
    }
}

/// For a great circle leaving `p` with velocity `u`, returns the unit
/// direction `e`, the rotated direction after angle `theta`, and the
/// rotated base point direction.
fn sphere_rotation_frame<T: Real>(p: &[T], u: &[T], r: T, theta: T) -> ([T; 3], [T; 3], [T; 3]) {
    let s = norm(u);
    let e = [u[0] / s, u[1] / s, u[2] / s];
    let ph = [p[0] / r, p[1] / r, p[2] / r];
    let (sn, cs) = theta.sin_cos();
    let e_rot = [
        -sn * ph[0] + cs * e[0],
        -sn * ph[1] + cs * e[1],
        -sn * ph[2] + cs * e[2],
    ];
    let p_rot = [
        cs * ph[0] + sn * e[0],
        cs * ph[1] + sn * e[1],
        cs * ph[2] + sn * e[2],
    ];
    (e, e_rot, p_rot)
}

/// `sin(s)/s`, accurate near zero.
pub(crate) fn sinc<T: Real>(s: T) -> T {
    if s.abs() < T::lit(1e-4) {
        let s2 = s * s;
        T::one() - s2 / T::lit(6.0) + s2 * s2 / T::lit(120.0)
    } else {
        s.sin() / s
    }
}

/// Canonical representative in `[0, l)`.
#[inline]
pub(crate) fn wrap<T: Real>(c: T, l: T) -> T {
    let r = c - (c / l).floor() * l;
    if r >= l || r < T::zero() {
        T::zero()
    } else {
        r
    }
}

/// Offset in `[-l/2, l/2]` among the three nearest images of `d`.
#[inline]
pub(crate) fn nearest_image_offset<T: Real>(d: T, l: T) -> T {
    let base = d - (d / l).round() * l;
    [base - l, base, base + l]
        .into_iter()
        .fold(base, |best, c| if c.abs() < best.abs() { c } else { best })
}

/// Folds `s ∈ ℝ` onto `[0, l]` by the reflection group generated by
/// `s ↦ −s` and `s ↦ 2l − s`; also returns the number of walls `k·l`
/// strictly between `s` and its fold's home cell.
pub(crate) fn fold_into_interval<T: Real>(s: T, l: T) -> (T, usize) {
    let two_l = l + l;
    let r = s - (s / two_l).floor() * two_l;
    let folded = if r <= l { r } else { two_l - r };
    let cell = (s / l).floor();
    let walls = cell.abs().to_usize().unwrap_or(usize::MAX);
    (folded.max(T::zero()).min(l), walls)
}

impl<T: Real> fmt::Display for ManifoldSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Euclidean { dim } => write!(f, "euclidean:{dim}"),
            Self::FlatTorus { sides } => {
                f.write_str("torus:")?;
                for (i, s) in sides.iter().enumerate() {
                    if i > 0 {
                        f.write_str("x")?;
                    }
                    write!(f, "{s}")?;
                }
                Ok(())
            }
            Self::Sphere { radius } => write!(f, "sphere:{radius}"),
            Self::Interval { length, bc } => write!(f, "interval:{length}:{bc}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sphere() -> ManifoldSpec<f64> {
        ManifoldSpec::sphere(1.0).unwrap()
    }

    fn north(m: &ManifoldSpec<f64>) -> Point<f64> {
        m.point(&[0.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn flat_exp_is_translation() {
        let m = ManifoldSpec::euclidean(2).unwrap();
        let x = m.point(&[0.0, 0.0]).unwrap();
        let v = m.tangent(&x, &[1.0, 2.0]).unwrap();
        assert_eq!(m.exp_map(&v).coords(), &[1.0, 2.0]);
        let y = m.point(&[3.0, -1.0]).unwrap();
        assert_eq!(m.log_map(&x, &y).unwrap().vector(), &[3.0, -1.0]);
    }

    #[test]
    fn sphere_quarter_turn() {
        let m = sphere();
        let n = north(&m);
        let v = m.tangent(&n, &[FRAC_PI_2, 0.0, 0.0]).unwrap();
        let y = m.exp_map(&v);
        assert!((y.coords()[0] - 1.0).abs() < 1e-15 && y.coords()[2].abs() < 1e-15);
        let back = m.log_map(&n, &y).unwrap();
        assert_relative_eq!(back.norm(), FRAC_PI_2, epsilon = 1e-14);
        assert_relative_eq!(back.vector()[0], FRAC_PI_2, epsilon = 1e-14);
    }

    #[test]
    fn torus_wraps_and_uses_nearest_image() {
        let m = ManifoldSpec::circle(1.0).unwrap();
        let x = m.point(&[0.9]).unwrap();
        let v = m.tangent(&x, &[0.2]).unwrap();
        assert_relative_eq!(m.exp_map(&v).x(), 0.1, epsilon = 1e-15);
        let a = m.point(&[0.1]).unwrap();
        let b = m.point(&[0.9]).unwrap();
        assert_relative_eq!(m.distance(&a, &b), 0.2, epsilon = 1e-15);
        assert_relative_eq!(m.log_map(&a, &b).unwrap().vector()[0], -0.2, epsilon = 1e-15);
    }

    #[test]
    fn cut_locus_is_rejected() {
        let m = sphere();
        let s = m.point(&[0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(m.log_map(&north(&m), &s), Err(Error::CutLocus { .. })));
        assert!(matches!(m.exp_jacobian(&north(&m), &s), Err(Error::CutLocus { .. })));
        assert_relative_eq!(m.distance(&north(&m), &s), PI, epsilon = 1e-15);

        let t = ManifoldSpec::circle(1.0).unwrap();
        let a = t.point(&[0.2]).unwrap();
        let b = t.point(&[0.7]).unwrap();
        assert!(matches!(t.log_map(&a, &b), Err(Error::CutLocus { .. })));
    }

    #[test]
    fn distance_is_zero_on_the_diagonal() {
        let m = sphere();
        let p = m.sphere_point(0.7, 2.1).unwrap();
        assert_eq!(m.distance(&p, &p), 0.0);
        assert!(m.log_map(&p, &p).unwrap().norm() == 0.0);
    }

    #[test]
    fn jacobian_values() {
        let m = sphere();
        let x = north(&m);
        let y = m.point(&[1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(m.exp_jacobian(&x, &y).unwrap(), 2.0 / PI, epsilon = 1e-14);
        let close = m.sphere_point(1e-7, 0.3).unwrap();
        assert_relative_eq!(m.exp_jacobian(&x, &close).unwrap(), 1.0, epsilon = 1e-13);
        let t = ManifoldSpec::flat_torus(vec![1.0, 2.0]).unwrap();
        let a = t.point(&[0.1, 0.3]).unwrap();
        let b = t.point(&[0.4, 1.9]).unwrap();
        assert_eq!(t.exp_jacobian(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn velocity_is_parallel_along_its_geodesic() {
        let m = sphere();
        let seg = GeodesicSegment::new(&m, north(&m), m.point(&[1.0, 0.0, 0.0]).unwrap(), 1.0).unwrap();
        let moved = m.parallel_transport(&seg, &seg.initial_velocity);
        let end_vel = seg.velocity_at(&m, 1.0);
        for (a, b) in moved.vector().iter().zip(end_vel.vector()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!((moved.vector()[2] + FRAC_PI_2).abs() < 1e-14);
    }

    #[test]
    fn holonomy_of_octant_triangle_is_its_area() {
        let m = sphere();
        let a = north(&m);
        let b = m.point(&[1.0, 0.0, 0.0]).unwrap();
        let c = m.point(&[0.0, 1.0, 0.0]).unwrap();
        let mut w = m.tangent(&a, &[1.0, 0.0, 0.0]).unwrap();
        for (s, e) in [(&a, &b), (&b, &c), (&c, &a)] {
            let seg = GeodesicSegment::new(&m, s.clone(), e.clone(), 1.0).unwrap();
            w = m.parallel_transport(&seg, &w);
        }
        assert_relative_eq!(w.norm(), 1.0, epsilon = 1e-14);
        let angle = w.vector()[1].atan2(w.vector()[0]).abs();
        assert_relative_eq!(angle, FRAC_PI_2, epsilon = 1e-13);
    }

    #[test]
    fn curvature_of_catalog() {
        let t = ManifoldSpec::flat_torus(vec![1.0, 1.0]).unwrap();
        let p = t.point(&[0.2, 0.3]).unwrap();
        let cd = t.curvature_data(&t.tangent(&p, &[0.3, 0.1]).unwrap());
        assert_eq!((cd.scal, cd.ric_vv, cd.jacobi.max_abs()), (0.0, 0.0, 0.0));

        let m = sphere();
        let x = m.sphere_point(1.0, 0.4).unwrap();
        let frame = m.orthonormal_frame(&x, None);
        let d = 1.3;
        let v = m.tangent(&x, &frame[0].iter().map(|c| c * d).collect::<Vec<_>>()).unwrap();
        let cd = m.curvature_data(&v);
        assert_relative_eq!(cd.scal, 2.0, epsilon = 1e-14);
        assert_relative_eq!(cd.ric_vv, d * d, epsilon = 1e-13);
        let w = &frame[1];
        let jw = cd.jacobi.mul_vec(w);
        assert_relative_eq!(dot(&jw, w), -d * d, epsilon = 1e-13);
        // R(v, v)v = 0
        let jv = cd.jacobi.mul_vec(v.vector());
        assert!(norm(&jv) < 1e-13);
    }

    #[test]
    fn jacobi_quadratic_form_on_sine_field() {
        // ∫ |∇X|² + <R X, X> over [0,1] for X = sin(πs) E(s), E parallel unit normal
        let m = sphere();
        let d = 1.1;
        let x = m.sphere_point(0.6, -0.2).unwrap();
        let frame = m.orthonormal_frame(&x, None);
        let y = m.exp_map(&m.tangent(&x, &frame[0].iter().map(|c| c * d).collect::<Vec<_>>()).unwrap());
        let seg = GeodesicSegment::new(&m, x.clone(), y, 1.0).unwrap();
        let e0 = m.tangent(&x, &frame[1]).unwrap();
        let rule = crate::quadrature::GaussRule::<f64>::new(16);
        let form = rule.integrate(0.0, 1.0, |s| {
            let partial = GeodesicSegment::new(&m, x.clone(), seg.point_at(&m, s), 1.0);
            let e = match partial {
                Ok(p) if s > 0.0 => m.parallel_transport(&p, &e0),
                _ => e0.clone(),
            };
            let vel = seg.velocity_at(&m, s);
            let cd = m.curvature_data(&vel);
            let xs: Vec<f64> = e.vector().iter().map(|c| c * (PI * s).sin()).collect();
            let deriv = (PI * (PI * s).cos()).powi(2);
            deriv + dot(&cd.jacobi.mul_vec(&xs), &xs)
        });
        assert_relative_eq!(form, (PI * PI - d * d) / 2.0, epsilon = 1e-10);
    }

    #[test]
    fn interval_exp_reflects() {
        let m = ManifoldSpec::interval(1.0, BoundaryCondition::Neumann).unwrap();
        let x = m.point(&[0.5]).unwrap();
        assert_relative_eq!(m.exp_map(&m.tangent(&x, &[1.0]).unwrap()).x(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(m.exp_map(&m.tangent(&x, &[-0.7]).unwrap()).x(), 0.2, epsilon = 1e-15);
        assert_relative_eq!(m.injectivity_radius_at(&m.point(&[0.2]).unwrap()), 0.2);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        assert!(ManifoldSpec::<f64>::euclidean(0).is_err());
        assert!(ManifoldSpec::flat_torus(vec![1.0, 0.0]).is_err());
        assert!(ManifoldSpec::sphere(-1.0).is_err());
        let m = sphere();
        assert!(m.point(&[0.0, 0.0, 1.1]).is_err());
        assert!(m.tangent(&north(&m), &[0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn single_precision_geometry() {
        let m = ManifoldSpec::<f32>::sphere(2.0).unwrap();
        let x = m.sphere_point(0.3, 0.1).unwrap();
        let y = m.sphere_point(1.2, 1.4).unwrap();
        let v = m.log_map(&x, &y).unwrap();
        let back = m.exp_map(&v);
        assert!(m.distance(&back, &y) < 1e-5);
    }
}
