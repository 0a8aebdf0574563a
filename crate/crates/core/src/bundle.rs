//! Path-ordered exponentials along piecewise geodesics: scalar potentials,
//! magnetic line bundles and endomorphism potentials on trivial bundles.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::geom::{GeodesicSegment, ManifoldSpec, Point};
use crate::linalg::Matrix;
use crate::pathspace::PiecewiseGeodesicPath;
use crate::quadrature::{GaussRule, SEGMENT_RULE_ORDER};
use crate::scalar::{compensated_sum, Real};

pub type ScalarField<T> = Arc<dyn Fn(&Point<T>) -> T + Send + Sync>;
/// One-form `ω`, evaluated as `ω_x(v)`.
pub type OneForm<T> = Arc<dyn Fn(&Point<T>, &[T]) -> T + Send + Sync>;
pub type MatrixField<T> = Arc<dyn Fn(&Point<T>) -> Matrix<T> + Send + Sync>;
/// Connection form `A_x(v)` of a metric connection: skew `k×k` matrices.
pub type ConnectionForm<T> = Arc<dyn Fn(&Point<T>, &[T]) -> Matrix<T> + Send + Sync>;

/// Per-segment step-doubling tolerance.
pub const TRANSPORT_TOLERANCE: f64 = 1e-10;
const INITIAL_STEPS: usize = 16;
const MAX_STEPS: usize = 1 << 16;

/// Zeroth-order part of `H = ½∇*∇ + V` together with the connection.
#[derive(Clone)]
pub enum PathWeight<T> {
    Scalar(ScalarField<T>),
    /// Line bundle with connection `d − iω` and real potential.
    Magnetic { omega: OneForm<T>, potential: ScalarField<T> },
    /// Symmetric potential on the trivial rank-`rank` bundle.
    Endomorphism {
        rank: usize,
        potential: MatrixField<T>,
        connection: Option<ConnectionForm<T>>,
    },
}

impl<T: Real> PathWeight<T> {
    pub fn scalar(v: impl Fn(&Point<T>) -> T + Send + Sync + 'static) -> Self {
        Self::Scalar(Arc::new(v))
    }

    pub fn constant(c: T) -> Self {
        Self::scalar(move |_| c)
    }

    pub fn magnetic(
        omega: impl Fn(&Point<T>, &[T]) -> T + Send + Sync + 'static,
        potential: impl Fn(&Point<T>) -> T + Send + Sync + 'static,
    ) -> Self {
        Self::Magnetic {
            omega: Arc::new(omega),
            potential: Arc::new(potential),
        }
    }

    pub fn endomorphism(rank: usize, potential: impl Fn(&Point<T>) -> Matrix<T> + Send + Sync + 'static) -> Self {
        Self::Endomorphism {
            rank,
            potential: Arc::new(potential),
            connection: None,
        }
    }

    pub fn with_connection(self, a: impl Fn(&Point<T>, &[T]) -> Matrix<T> + Send + Sync + 'static) -> Result<Self> {
        match self {
            Self::Endomorphism { rank, potential, .. } => Ok(Self::Endomorphism {
                rank,
                potential,
                connection: Some(Arc::new(a)),
            }),
            _ => Err(Error::InvalidArgument("only endomorphism weights carry a matrix connection".into())),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            Self::Endomorphism { rank, .. } => *rank,
            _ => 1,
        }
    }
}

impl<T> fmt::Debug for PathWeight<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Scalar(_) => f.write_str("Scalar(..)"),
            Self::Magnetic { .. } => f.write_str("Magnetic { .. }"),
            Self::Endomorphism { rank, connection, .. } => f
                .debug_struct("Endomorphism")
                .field("rank", rank)
                .field("connection", &connection.is_some())
                .finish(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TransportValue<T> {
    Scalar(T),
    Complex(Complex<T>),
    Matrix(Matrix<T>),
}

impl<T: Real> TransportValue<T> {
    pub fn rank(&self) -> usize {
        match self {
            Self::Matrix(m) => m.rows(),
            _ => 1,
        }
    }

    /// Identity of the same kind and rank.
    pub fn identity_like(&self) -> Self {
        match self {
            Self::Scalar(_) => Self::Scalar(T::one()),
            Self::Complex(_) => Self::Complex(Complex::new(T::one(), T::zero())),
            Self::Matrix(m) => Self::Matrix(Matrix::identity(m.rows())),
        }
    }

    pub fn inverse(&self) -> Result<Self> {
        match self {
            Self::Scalar(s) => Ok(Self::Scalar(s.recip())),
            Self::Complex(c) => Ok(Self::Complex(c.inv())),
            Self::Matrix(m) => Ok(Self::Matrix(m.inverse()?)),
        }
    }

    /// Distance to `other` in the max norm.
    pub fn max_abs_diff(&self, other: &Self) -> Result<T> {
        match (self, other) {
            (Self::Scalar(a), Self::Scalar(b)) => Ok((*a - *b).abs()),
            (Self::Complex(a), Self::Complex(b)) => Ok((*a - *b).norm()),
            (Self::Matrix(a), Self::Matrix(b)) if a.rows() == b.rows() => Ok(a.max_abs_diff(b)),
            _ => Err(Error::RankMismatch {
                left: self.rank(),
                right: other.rank(),
            }),
        }
    }
}

/// `a ∘ b`: transport `b` first, then `a`.
pub fn compose_transport<T: Real>(a: &TransportValue<T>, b: &TransportValue<T>) -> Result<TransportValue<T>> {
    use TransportValue as V;
    match (a, b) {
        (V::Scalar(x), V::Scalar(y)) => Ok(V::Scalar(*x * *y)),
        (V::Complex(x), V::Complex(y)) => Ok(V::Complex(x * y)),
        (V::Scalar(x), V::Complex(y)) | (V::Complex(y), V::Scalar(x)) => Ok(V::Complex(y.scale(*x))),
        (V::Matrix(x), V::Matrix(y)) => {
            if x.rows() != y.rows() {
                return Err(Error::RankMismatch {
                    left: x.rows(),
                    right: y.rows(),
                });
            }
            Ok(V::Matrix(x.matmul(y)))
        }
        (V::Scalar(s), V::Matrix(m)) | (V::Matrix(m), V::Scalar(s)) => Ok(V::Matrix(m.scale(*s))),
        (V::Complex(_), V::Matrix(m)) | (V::Matrix(m), V::Complex(_)) => Err(Error::RankMismatch {
            left: 1,
            right: m.rows(),
        }),
    }
}

/// Generator `G(s)` of `dP/ds = G(s)P` on one segment, as a real matrix.
fn generator<T: Real>(
    m: &ManifoldSpec<T>,
    seg: &GeodesicSegment<T>,
    weight: &PathWeight<T>,
    s: T,
) -> Result<Matrix<T>> {
    let x = seg.point_at(m, s);
    match weight {
        PathWeight::Scalar(v) => Ok(Matrix::from_row_major(1, 1, vec![v(&x)])),
        PathWeight::Magnetic { omega, potential } => {
            // complex a + ib acts as [[a, −b], [b, a]]
            let vel = seg.velocity_at(m, s);
            let a = potential(&x);
            let b = -omega(&x, vel.vector());
            Ok(Matrix::from_row_major(2, 2, vec![a, -b, b, a]))
        }
        PathWeight::Endomorphism {
            rank,
            potential,
            connection,
        } => {
            let v = potential(&x);
            if v.rows() != *rank || v.cols() != *rank {
                return Err(Error::RankMismatch {
                    left: *rank,
                    right: v.rows(),
                });
            }
            let scale = v.max_abs().max(T::one());
            if !v.is_symmetric(T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) * scale) {
                return Err(Error::InvalidArgument("endomorphism potential is not symmetric".into()));
            }
            match connection {
                Some(a) => {
                    let vel = seg.velocity_at(m, s);
                    let am = a(&x, vel.vector());
                    if am.rows() != *rank || am.cols() != *rank {
                        return Err(Error::RankMismatch {
                            left: *rank,
                            right: am.rows(),
                        });
                    }
                    Ok(v.sub(&am))
                }
                None => Ok(v),
            }
        }
    }
}

fn rk4_segment<T: Real>(
    m: &ManifoldSpec<T>,
    seg: &GeodesicSegment<T>,
    weight: &PathWeight<T>,
    steps: usize,
    dim: usize,
) -> Result<Matrix<T>> {
    let h = seg.duration / T::from_usize_lossy(steps);
    let half = T::lit(0.5);
    let mut p = Matrix::identity(dim);
    let mut g_lo = generator(m, seg, weight, T::zero())?;
    for k in 0..steps {
        let s0 = h * T::from_usize_lossy(k);
        let g_mid = generator(m, seg, weight, s0 + half * h)?;
        let g_hi = generator(m, seg, weight, if k + 1 == steps { seg.duration } else { s0 + h })?;
        let k1 = g_lo.matmul(&p);
        let mut y = p.clone();
        y.axpy(half * h, &k1);
        let k2 = g_mid.matmul(&y);
        let mut y = p.clone();
        y.axpy(half * h, &k2);
        let k3 = g_mid.matmul(&y);
        let mut y = p.clone();
        y.axpy(h, &k3);
        let k4 = g_hi.matmul(&y);
        let sixth = h / T::lit(6.0);
        p.axpy(sixth, &k1);
        p.axpy(sixth + sixth, &k2);
        p.axpy(sixth + sixth, &k3);
        p.axpy(sixth, &k4);
        g_lo = g_hi;
    }
    Ok(p)
}

/// Solves `dP/ds = G(s)P` on one segment by RK4, doubling the step count
/// from 16 until successive solutions agree to the transport tolerance.
fn solve_segment<T: Real>(
    m: &ManifoldSpec<T>,
    seg: &GeodesicSegment<T>,
    weight: &PathWeight<T>,
    index: usize,
    dim: usize,
) -> Result<Matrix<T>> {
    let tol = T::lit(TRANSPORT_TOLERANCE).max(T::epsilon() * T::lit(256.0));
    let mut steps = INITIAL_STEPS;
    let mut coarse = rk4_segment(m, seg, weight, steps, dim)?;
    loop {
        let fine = rk4_segment(m, seg, weight, 2 * steps, dim)?;
        let finite = fine.as_slice().iter().all(|x| x.is_finite());
        let change = if finite { fine.max_abs_diff(&coarse) } else { T::infinity() };
        if finite && change <= tol * fine.max_abs().max(T::one()) {
            return Ok(fine);
        }
        steps *= 2;
        if steps >= MAX_STEPS {
            return Err(Error::IntegratorStep {
                segment: index,
                steps,
                achieved: change.to_f64_lossy(),
                tolerance: tol.to_f64_lossy(),
            });
        }
        coarse = fine;
    }
}

/// `𝒫(γ) = P(t)` for `∇ₛP = V(γ(s))P`, `P(0) = id`, composed over segments.
pub fn path_ordered_exponential<T: Real>(path: &PiecewiseGeodesicPath<T>, weight: &PathWeight<T>) -> Result<TransportValue<T>> {
    let m = path.manifold();
    let dim = match weight {
        PathWeight::Scalar(_) => 1,
        PathWeight::Magnetic { .. } => 2,
        PathWeight::Endomorphism { rank, .. } => *rank,
    };
    let mut total = Matrix::identity(dim);
    for (j, seg) in path.segments().iter().enumerate() {
        let p = solve_segment(m, seg, weight, j, dim)?;
        total = p.matmul(&total);
    }
    Ok(match weight {
        PathWeight::Scalar(_) => TransportValue::Scalar(total[(0, 0)]),
        PathWeight::Magnetic { .. } => TransportValue::Complex(Complex::new(total[(0, 0)], total[(1, 0)])),
        PathWeight::Endomorphism { .. } => TransportValue::Matrix(total),
    })
}

/// `exp(∫₀ᵗ (iω(γ̇) − V(γ)) ds)` by Gauss quadrature per segment; the
/// inverse of the magnetic path-ordered exponential.
pub fn magnetic_weight<T: Real>(
    path: &PiecewiseGeodesicPath<T>,
    omega: &dyn Fn(&Point<T>, &[T]) -> T,
    potential: &dyn Fn(&Point<T>) -> T,
) -> Complex<T> {
    let (phase, decay) = magnetic_exponent(path, omega, potential, SEGMENT_RULE_ORDER);
    Complex::from_polar((-decay).exp(), phase)
}

/// `(∫ω(γ̇), ∫V(γ))` with a `order`-point Gauss rule per segment.
pub(crate) fn magnetic_exponent<T: Real>(
    path: &PiecewiseGeodesicPath<T>,
    omega: &dyn Fn(&Point<T>, &[T]) -> T,
    potential: &dyn Fn(&Point<T>) -> T,
    order: usize,
) -> (T, T) {
    let m = path.manifold();
    let rule = GaussRule::<T>::new(order);
    let mut phase = Vec::with_capacity(path.segments().len());
    let mut decay = Vec::with_capacity(path.segments().len());
    for seg in path.segments() {
        let mut ph = T::zero();
        let mut de = T::zero();
        for (u, w) in rule.unit_nodes() {
            let s = u * seg.duration;
            let vel = seg.velocity_at(m, s);
            ph += w * omega(vel.base(), vel.vector());
            de += w * potential(vel.base());
        }
        phase.push(ph * seg.duration);
        decay.push(de * seg.duration);
    }
    (compensated_sum(phase), compensated_sum(decay))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pathspace::Partition;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn circle() -> ManifoldSpec<f64> {
        ManifoldSpec::circle(2.0 * PI).unwrap()
    }

    /// Loop winding once around the circle in `n` segments.
    fn winding_loop(n: usize) -> PiecewiseGeodesicPath<f64> {
        let m = circle();
        let coords: Vec<Vec<f64>> = (0..=n).map(|k| vec![2.0 * PI * k as f64 / n as f64]).collect();
        PiecewiseGeodesicPath::from_coords(&m, Partition::uniform(1.0, n).unwrap(), &coords).unwrap()
    }

    fn sphere_path() -> PiecewiseGeodesicPath<f64> {
        let m = ManifoldSpec::sphere(1.0).unwrap();
        let nodes = (0..5).map(|k| m.sphere_point(0.3 + 0.35 * k as f64, 0.4 * k as f64).unwrap()).collect();
        PiecewiseGeodesicPath::new(&m, Partition::random(0.8, 4, 3).unwrap(), nodes).unwrap()
    }

    #[test]
    fn zero_weight_is_identity() {
        let p = sphere_path();
        let v = path_ordered_exponential(&p, &PathWeight::constant(0.0)).unwrap();
        assert_eq!(v, TransportValue::Scalar(1.0));
    }

    #[test]
    fn constant_potential_exponentiates() {
        let p = sphere_path();
        let v = path_ordered_exponential(&p, &PathWeight::constant(1.7)).unwrap();
        let TransportValue::Scalar(s) = v else { panic!() };
        assert_relative_eq!(s, (1.7f64 * 0.8).exp(), epsilon = 1e-10);
    }

    #[test]
    fn scalar_variant_is_exp_of_integral() {
        let p = sphere_path();
        let v = |x: &Point<f64>| x.coords()[2] * x.coords()[0] + 0.5;
        let TransportValue::Scalar(s) = path_ordered_exponential(&p, &PathWeight::scalar(v)).unwrap() else {
            panic!()
        };
        assert_relative_eq!(s, p.potential_integral(v, 12).exp(), epsilon = 1e-10);
    }

    #[test]
    fn closed_loop_phase() {
        let a = 0.3;
        let p = winding_loop(8);
        let w = magnetic_weight(&p, &|_, v: &[f64]| a * v[0], &|_| 0.0);
        let target = Complex::from_polar(1.0, 2.0 * PI * a);
        assert!((w - target).norm() < 1e-8);
        let weight = PathWeight::magnetic(move |_, v: &[f64]| a * v[0], |_| 0.0);
        let TransportValue::Complex(c) = path_ordered_exponential(&p, &weight).unwrap() else { panic!() };
        assert!((c - target.inv()).norm() < 1e-8);
    }

    #[test]
    fn magnetic_weight_inverts_transport() {
        let p = sphere_path();
        let omega = |x: &Point<f64>, v: &[f64]| 0.4 * (x.coords()[0] * v[1] - x.coords()[1] * v[0]);
        let pot = |x: &Point<f64>| 0.2 + x.coords()[2];
        let w = magnetic_weight(&p, &omega, &pot);
        let TransportValue::Complex(c) = path_ordered_exponential(&p, &PathWeight::magnetic(omega, pot)).unwrap() else {
            panic!()
        };
        let w_fine = {
            let (ph, de) = magnetic_exponent(&p, &omega, &pot, 16);
            Complex::from_polar((-de).exp(), ph)
        };
        assert!((w_fine * c - Complex::new(1.0, 0.0)).norm() < 1e-8);
        assert!((w * c - Complex::new(1.0, 0.0)).norm() < 1e-8, "{}", (w * c - 1.0).norm());
        assert_relative_eq!(w.norm(), (-p.potential_integral(pot, 4)).exp(), epsilon = 1e-14);
    }

    #[test]
    fn exact_form_gives_endpoint_phase() {
        let m = circle();
        let f = |th: f64| 0.7 * th.sin();
        let coords: Vec<Vec<f64>> = [0.3, 0.9, 1.2, 2.0, 2.2].iter().map(|&x| vec![x]).collect();
        let p = PiecewiseGeodesicPath::from_coords(&m, Partition::uniform(0.5, 4).unwrap(), &coords).unwrap();
        let df = |x: &Point<f64>, v: &[f64]| 0.7 * x.x().cos() * v[0];
        let (phase, _) = magnetic_exponent(&p, &df, &|_| 0.0, 16);
        assert_relative_eq!(phase, f(2.2) - f(0.3), epsilon = 1e-12);
    }

    fn rotation_connection(x: &Point<f64>, v: &[f64]) -> Matrix<f64> {
        let c = 0.8 * v[0] + 0.3 * x.coords()[1] * v[2];
        Matrix::from_row_major(2, 2, vec![0.0, -c, c, 0.0])
    }

    #[test]
    fn metric_connection_transport_is_orthogonal() {
        let p = sphere_path();
        let w = PathWeight::endomorphism(2, |_| Matrix::zeros(2, 2))
            .with_connection(rotation_connection)
            .unwrap();
        let TransportValue::Matrix(q) = path_ordered_exponential(&p, &w).unwrap() else { panic!() };
        let qtq = q.transpose().matmul(&q);
        assert!(qtq.max_abs_diff(&Matrix::identity(2)) < 1e-9);
    }

    #[test]
    fn transport_times_inverse_is_identity() {
        let p = sphere_path();
        let w = PathWeight::endomorphism(2, |x: &Point<f64>| {
            let z = x.coords()[2];
            Matrix::from_row_major(2, 2, vec![z, 0.3, 0.3, -z * z])
        })
        .with_connection(rotation_connection)
        .unwrap();
        let v = path_ordered_exponential(&p, &w).unwrap();
        let id = compose_transport(&v, &v.inverse().unwrap()).unwrap();
        assert!(id.max_abs_diff(&v.identity_like()).unwrap() < 1e-9);
    }

    #[test]
    fn rank_one_endomorphism_matches_scalar() {
        let p = sphere_path();
        let v = |x: &Point<f64>| (x.coords()[0] + 2.0 * x.coords()[1]).sin();
        let TransportValue::Scalar(s) = path_ordered_exponential(&p, &PathWeight::scalar(v)).unwrap() else {
            panic!()
        };
        let e = PathWeight::endomorphism(1, move |x: &Point<f64>| Matrix::from_row_major(1, 1, vec![v(x)]));
        let TransportValue::Matrix(mm) = path_ordered_exponential(&p, &e).unwrap() else { panic!() };
        assert!((mm[(0, 0)] - s).abs() < 1e-9);
    }

    #[test]
    fn splitting_a_segment_composes() {
        let m = ManifoldSpec::sphere(1.0).unwrap();
        let x = m.sphere_point(0.4, 0.1).unwrap();
        let y = m.sphere_point(1.5, 1.0).unwrap();
        let whole = PiecewiseGeodesicPath::new(&m, Partition::uniform(1.0, 1).unwrap(), vec![x.clone(), y.clone()]).unwrap();
        let mid = whole.point_at(0.5);
        let first = PiecewiseGeodesicPath::new(&m, Partition::uniform(0.5, 1).unwrap(), vec![x, mid.clone()]).unwrap();
        let second = PiecewiseGeodesicPath::new(&m, Partition::uniform(0.5, 1).unwrap(), vec![mid, y]).unwrap();
        let w = PathWeight::endomorphism(2, |x: &Point<f64>| {
            let c = x.coords();
            Matrix::from_row_major(2, 2, vec![c[0], c[2], c[2], c[1]])
        })
        .with_connection(rotation_connection)
        .unwrap();
        let a = path_ordered_exponential(&whole, &w).unwrap();
        let b = compose_transport(
            &path_ordered_exponential(&second, &w).unwrap(),
            &path_ordered_exponential(&first, &w).unwrap(),
        )
        .unwrap();
        assert!(a.max_abs_diff(&b).unwrap() < 1e-9);
    }

    #[test]
    fn composition_rules() {
        let a = TransportValue::Scalar(2.0f64.exp());
        let b = TransportValue::Scalar(3.0f64.exp());
        let TransportValue::Scalar(c) = compose_transport(&a, &b).unwrap() else { panic!() };
        assert_relative_eq!(c, 5.0f64.exp(), epsilon = 1e-12);

        let p1 = Matrix::from_row_major(2, 2, vec![1.0, 2.0, 0.0, 1.0]);
        let p2 = Matrix::from_row_major(2, 2, vec![0.0, -1.0, 1.0, 0.0]);
        let v = [0.3, -0.7];
        let TransportValue::Matrix(c) =
            compose_transport(&TransportValue::Matrix(p2.clone()), &TransportValue::Matrix(p1.clone())).unwrap()
        else {
            panic!()
        };
        assert_eq!(c.mul_vec(&v), p2.mul_vec(&p1.mul_vec(&v)));

        let bad = compose_transport(&TransportValue::Matrix(p1), &TransportValue::Matrix(Matrix::identity(3)));
        assert_eq!(bad, Err(Error::RankMismatch { left: 2, right: 3 }));
    }

    #[test]
    fn asymmetric_potential_is_rejected() {
        let p = sphere_path();
        let w = PathWeight::endomorphism(2, |_| Matrix::from_row_major(2, 2, vec![0.0, 1.0, 0.0, 0.0]));
        assert!(matches!(path_ordered_exponential(&p, &w), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn stiff_segment_reports_integrator_failure() {
        let m = ManifoldSpec::euclidean(1).unwrap();
        let p = PiecewiseGeodesicPath::from_coords(&m, Partition::uniform(1.0, 1).unwrap(), &[vec![0.0], vec![1.0]]).unwrap();
        let w = PathWeight::scalar(|x: &Point<f64>| 1e7 * (1e6 * x.x()).sin());
        assert!(matches!(path_ordered_exponential(&p, &w), Err(Error::IntegratorStep { .. })));
    }
}
