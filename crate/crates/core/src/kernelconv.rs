//! Quadrature grids, kernel matrices, approximate one-step kernels and
//! their Chernoff products `K_{Δ₁τ} * ⋯ * K_{Δ_Nτ}`.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use smallvec::smallvec;

use crate::bundle::ScalarField;
use crate::error::{Error, Result};
use crate::geom::{sinc, BoundaryCondition, GeodesicSegment, ManifoldSpec, Point};
use crate::linalg::Matrix;
use crate::pathspace::Partition;
use crate::quadrature::{gauss_legendre, GaussRule, SEGMENT_RULE_ORDER};
use crate::reference::{gaussian, reference_kernel, SeriesOrder};
use crate::scalar::Real;

/// Images `|m| ≤ 8` of the folded Gaussian on the interval.
pub const INTERVAL_IMAGES: i64 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridLayout {
    /// Uniform tensor grid with `resolution` points per side.
    Torus,
    /// `resolution` Gauss–Legendre colatitudes times `2·resolution` longitudes.
    Sphere,
    /// Midpoint rule with `resolution` cells.
    Interval,
    /// Midpoint rule on `[−a, a]ⁿ`; convolution truncates flat space to the box.
    EuclideanBox,
}

/// Quadrature rule `∫_M f ≈ Σ w_i f(x_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureGrid<T> {
    pub manifold: ManifoldSpec<T>,
    pub points: Vec<Point<T>>,
    pub weights: Vec<T>,
    pub resolution: usize,
    pub layout: GridLayout,
}

pub fn build_grid<T: Real>(m: &ManifoldSpec<T>, resolution: usize) -> Result<QuadratureGrid<T>> {
    QuadratureGrid::new(m, resolution)
}

impl<T: Real> QuadratureGrid<T> {
    pub fn new(m: &ManifoldSpec<T>, resolution: usize) -> Result<Self> {
        if resolution < 2 {
            return Err(Error::InvalidArgument("grid resolution must be at least 2".into()));
        }
        match m {
            ManifoldSpec::Euclidean { .. } => Err(Error::UnsupportedManifold(format!(
                "{m} is not compact; use QuadratureGrid::euclidean_box"
            ))),
            ManifoldSpec::FlatTorus { sides } => {
                let (points, weights) = tensor_grid(sides, resolution, T::zero(), T::zero());
                Ok(Self {
                    manifold: m.clone(),
                    points,
                    weights,
                    resolution,
                    layout: GridLayout::Torus,
                })
            }
            ManifoldSpec::Sphere { radius } => {
                let r = *radius;
                let (z, wz) = gauss_legendre::<T>(resolution);
                let nlon = 2 * resolution;
                let dphi = T::TAU() / T::from_usize_lossy(nlon);
                let mut points = Vec::with_capacity(resolution * nlon);
                let mut weights = Vec::with_capacity(resolution * nlon);
                // descending z so that row 0 is nearest the north pole
                for (&c, &w) in z.iter().rev().zip(wz.iter().rev()) {
                    let s = (T::one() - c * c).max(T::zero()).sqrt();
                    for k in 0..nlon {
                        let phi = dphi * T::from_usize_lossy(k);
                        let (sp, cp) = phi.sin_cos();
                        points.push(Point::from_coords_unchecked(smallvec![r * s * cp, r * s * sp, r * c]));
                        weights.push(w * dphi * r * r);
                    }
                }
                Ok(Self {
                    manifold: m.clone(),
                    points,
                    weights,
                    resolution,
                    layout: GridLayout::Sphere,
                })
            }
            ManifoldSpec::Interval { length, .. } => {
                let h = *length / T::from_usize_lossy(resolution);
                let points = (0..resolution)
                    .map(|k| Point::from_coords_unchecked(smallvec![h * (T::from_usize_lossy(k) + T::lit(0.5))]))
                    .collect();
                Ok(Self {
                    manifold: m.clone(),
                    points,
                    weights: vec![h; resolution],
                    resolution,
                    layout: GridLayout::Interval,
                })
            }
        }
    }

    /// Midpoint grid on `[−a, a]ⁿ` for Euclidean space.
    pub fn euclidean_box(m: &ManifoldSpec<T>, half_width: T, cells: usize) -> Result<Self> {
        let ManifoldSpec::Euclidean { dim } = m else {
            return Err(Error::UnsupportedManifold(format!("{m} is not Euclidean")));
        };
        if cells < 2 || !(half_width > T::zero()) {
            return Err(Error::InvalidArgument("box needs positive width and at least 2 cells".into()));
        }
        let sides = vec![half_width + half_width; *dim];
        let (points, weights) = tensor_grid(&sides, cells, -half_width, T::lit(0.5));
        Ok(Self {
            manifold: m.clone(),
            points,
            weights,
            resolution: cells,
            layout: GridLayout::EuclideanBox,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> T {
        crate::scalar::compensated_sum(self.weights.iter().copied())
    }

    /// Columns that determine the sup norm of any kernel built from
    /// distance-invariant one-step kernels: one longitude on the sphere,
    /// a single column on a torus, every column otherwise.
    pub fn symmetry_representatives(&self) -> Vec<usize> {
        match self.layout {
            GridLayout::Sphere => (0..self.resolution).map(|r| r * 2 * self.resolution).collect(),
            GridLayout::Torus => vec![0],
            _ => (0..self.len()).collect(),
        }
    }

    pub fn integrate(&self, f: impl Fn(&Point<T>) -> T) -> T {
        crate::scalar::compensated_sum(self.points.iter().zip(&self.weights).map(|(p, &w)| w * f(p)))
    }
}

/// Tensor grid with coordinate `origin + h·(k + offset)` per side, `h = L/res`.
fn tensor_grid<T: Real>(sides: &[T], res: usize, origin: T, offset: T) -> (Vec<Point<T>>, Vec<T>) {
    let total = res.pow(sides.len() as u32);
    let hs: Vec<T> = sides.iter().map(|&l| l / T::from_usize_lossy(res)).collect();
    let w = hs.iter().fold(T::one(), |a, &b| a * b);
    let points = (0..total)
        .map(|mut idx| {
            let mut c = smallvec::SmallVec::new();
            for &h in &hs {
                c.push(origin + h * (T::from_usize_lossy(idx % res) + offset));
                idx /= res;
            }
            Point::from_coords_unchecked(c)
        })
        .collect();
    (points, vec![w; total])
}

/// Kernel sampled on a grid: rows are all grid points, columns a subset.
#[derive(Clone, Debug)]
pub struct KernelMatrix<T> {
    pub grid: Arc<QuadratureGrid<T>>,
    pub values: Matrix<T>,
    /// Grid indices of the stored columns.
    pub cols: Vec<usize>,
    pub t: T,
}

impl<T: Real> KernelMatrix<T> {
    /// Quadrature delta `diag(1/w)`, the unit of convolution.
    pub fn identity(grid: &Arc<QuadratureGrid<T>>) -> Self {
        let n = grid.len();
        let mut values = Matrix::zeros(n, n);
        for (i, &w) in grid.weights.iter().enumerate() {
            values[(i, i)] = T::one() / w;
        }
        Self {
            grid: grid.clone(),
            values,
            cols: (0..n).collect(),
            t: T::zero(),
        }
    }

    pub fn is_full(&self) -> bool {
        self.cols.len() == self.grid.len() && self.cols.iter().enumerate().all(|(i, &c)| i == c)
    }

    pub fn sup(&self) -> T {
        self.values.max_abs()
    }

    /// `sup |self − other|` over common entries.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        if !same_grid(&self.grid, &other.grid) || self.cols != other.cols {
            return Err(Error::GridMismatch);
        }
        Ok(self.values.max_abs_diff(&other.values))
    }

    /// Value at grid indices `(i, j)` when column `j` is stored.
    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        self.cols.iter().position(|&c| c == j).map(|k| self.values[(i, k)])
    }

    /// `(x_index, y_index, value)` triples.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.values.rows())
            .flat_map(move |i| self.cols.iter().enumerate().map(move |(k, &j)| (i, j, self.values[(i, k)])))
    }
}

fn same_grid<T: Real>(a: &Arc<QuadratureGrid<T>>, b: &Arc<QuadratureGrid<T>>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// `(k * l)(x, y) = ∫ k(x, z) l(z, y) dz` by the grid rule.
pub fn convolve<T: Real>(k: &KernelMatrix<T>, l: &KernelMatrix<T>) -> Result<KernelMatrix<T>> {
    if !same_grid(&k.grid, &l.grid) {
        return Err(Error::GridMismatch);
    }
    if !k.is_full() {
        return Err(Error::InvalidArgument("left factor of a convolution needs every column".into()));
    }
    Ok(KernelMatrix {
        grid: k.grid.clone(),
        values: k.values.matmul_weighted(&k.grid.weights, &l.values),
        cols: l.cols.clone(),
        t: k.t + l.t,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelVariant {
    /// `(2πt)^{−n/2} e^{−d²/2t} J⁻¹`, the one-step Σ-H¹ kernel.
    PlainH1,
    /// PlainH1 times `exp(t·scal/12 − ric(v,v)/12)`, `v = log_x y`.
    EllCorrected,
    /// Σ-L² kernel `(2πt)^{−n/2} e^{−d²/2t} e^{t·scal/6}`.
    L2Corrected,
    /// Σ-L² kernel without the scalar-curvature factor.
    L2Uncorrected,
}

impl KernelVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::PlainH1 => "plain-h1",
            Self::EllCorrected => "ell-corrected",
            Self::L2Corrected => "l2-corrected",
            Self::L2Uncorrected => "l2-uncorrected",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::PlainH1, Self::EllCorrected, Self::L2Corrected, Self::L2Uncorrected]
            .into_iter()
            .find(|v| v.name() == s)
    }
}

impl fmt::Display for KernelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One-step approximate kernel family.
#[derive(Clone)]
pub struct KernelFamily<T> {
    pub variant: KernelVariant,
    /// Support radius as a fraction of the injectivity radius.
    pub truncation: T,
    /// Scalar potential, weighted by `exp(−∫V)` along the connecting geodesic.
    pub potential: Option<ScalarField<T>>,
    /// Sign rule for interval images; defaults to the manifold's condition.
    pub boundary_signs: Option<BoundaryCondition>,
}

impl<T: Real> KernelFamily<T> {
    pub fn new(variant: KernelVariant) -> Self {
        Self {
            variant,
            truncation: T::lit(0.9),
            potential: None,
            boundary_signs: None,
        }
    }

    pub fn with_potential(self, v: impl Fn(&Point<T>) -> T + Send + Sync + 'static) -> Self {
        Self {
            potential: Some(Arc::new(v)),
            ..self
        }
    }

    pub fn with_boundary_signs(self, bc: BoundaryCondition) -> Self {
        Self {
            boundary_signs: Some(bc),
            ..self
        }
    }

    /// Whether products of this kernel commute with the grid symmetries.
    pub fn is_isotropic(&self) -> bool {
        self.potential.is_none()
    }
}

impl<T> fmt::Debug for KernelFamily<T>
where
    T: fmt::Debug,
{
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KernelFamily")
            .field("variant", &self.variant)
            .field("truncation", &self.truncation)
            .field("potential", &self.potential.is_some())
            .field("boundary_signs", &self.boundary_signs)
            .finish()
    }
}

/// One-step kernel `k_t(x, y)` of the family; zero beyond the truncation radius.
pub fn eval_kernel<T: Real>(family: &KernelFamily<T>, m: &ManifoldSpec<T>, t: T, x: &Point<T>, y: &Point<T>) -> T {
    if let ManifoldSpec::Interval { length, bc } = m {
        return interval_step(family, *length, family.boundary_signs.unwrap_or(*bc), t, x.x(), y.x());
    }
    let n = m.dim();
    let d = m.distance(x, y);
    if d >= family.truncation * m.injectivity_radius() {
        return T::zero();
    }
    let base = gaussian(n, t, d * d);
    let twelfth = T::lit(1.0 / 12.0);
    let inv_j = match m {
        ManifoldSpec::Sphere { radius } => T::one() / sinc(d / *radius),
        _ => T::one(),
    };
    let mut k = match family.variant {
        KernelVariant::PlainH1 => base * inv_j,
        KernelVariant::EllCorrected => {
            // ric(v, v) for v = log_x(y) has |v| = d
            let ric = m.sectional_curvature() * d * d * T::from_usize_lossy(n - 1);
            base * inv_j * (twelfth * (t * m.scalar_curvature() - ric)).exp()
        }
        KernelVariant::L2Corrected => base * (t * m.scalar_curvature() / T::lit(6.0)).exp(),
        KernelVariant::L2Uncorrected => base,
    };
    if let Some(v) = &family.potential {
        if k != T::zero() {
            if let Ok(seg) = GeodesicSegment::new(m, x.clone(), y.clone(), t) {
                let rule = GaussRule::<T>::new(SEGMENT_RULE_ORDER);
                let integral = rule.integrate(T::zero(), t, |s| v(&seg.point_at(m, s)));
                k *= (-integral).exp();
            }
        }
    }
    k
}

/// Folded Gaussian on `[0, L]`: images `2mL ± y`, the reflected ones
/// negated for Dirichlet.
fn interval_step<T: Real>(family: &KernelFamily<T>, l: T, signs: BoundaryCondition, t: T, x: T, y: T) -> T {
    let rule = GaussRule::<T>::new(SEGMENT_RULE_ORDER);
    let mut acc = T::zero();
    for m in -INTERVAL_IMAGES..=INTERVAL_IMAGES {
        let shift = T::from_i64(2 * m).unwrap() * l;
        for (image, odd) in [(shift + y, false), (shift - y, true)] {
            let disp = image - x;
            let g = gaussian(1, t, disp * disp);
            if g == T::zero() {
                continue;
            }
            let sign = if signs == BoundaryCondition::Dirichlet && odd { -T::one() } else { T::one() };
            let mut w = sign * g;
            if let Some(v) = &family.potential {
                let integral = rule.integrate(T::zero(), t, |s| {
                    let u = x + disp * s / t;
                    let folded = crate::geom::fold_into_interval(u, l).0;
                    v(&Point::from_coords_unchecked(smallvec![folded]))
                });
                w *= (-integral).exp();
            }
            acc += w;
        }
    }
    acc
}

/// One-step kernel on the grid, restricted to `cols`.
pub fn kernel_matrix<T: Real>(family: &KernelFamily<T>, grid: &Arc<QuadratureGrid<T>>, t: T, cols: &[usize]) -> KernelMatrix<T> {
    let m = &grid.manifold;
    let nc = cols.len();
    let mut data = vec![T::zero(); grid.len() * nc];
    data.par_chunks_mut(nc.max(1)).enumerate().for_each(|(i, row)| {
        for (slot, &j) in row.iter_mut().zip(cols) {
            *slot = eval_kernel(family, m, t, &grid.points[i], &grid.points[j]);
        }
    });
    KernelMatrix {
        grid: grid.clone(),
        values: Matrix::from_row_major(grid.len(), nc, data),
        cols: cols.to_vec(),
        t,
    }
}

/// Reference heat kernel of `½Δ` on the grid, restricted to `cols`.
pub fn reference_kernel_matrix<T: Real>(grid: &Arc<QuadratureGrid<T>>, t: T, cols: &[usize]) -> Result<KernelMatrix<T>> {
    let m = &grid.manifold;
    let nc = cols.len();
    let rows: Vec<Result<Vec<T>>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            cols.iter()
                .map(|&j| reference_kernel(m, t, &grid.points[i], &grid.points[j], SeriesOrder::Auto))
                .collect()
        })
        .collect();
    let mut data = Vec::with_capacity(grid.len() * nc);
    for r in rows {
        data.extend(r?);
    }
    Ok(KernelMatrix {
        grid: grid.clone(),
        values: Matrix::from_row_major(grid.len(), nc, data),
        cols: cols.to_vec(),
        t,
    })
}

/// Columns `cols` of `K_{Δ₁τ} * ⋯ * K_{Δ_Nτ}`, accumulated right to left.
/// One full one-step matrix is built per distinct increment.
pub fn chernoff_columns<T: Real>(
    family: &KernelFamily<T>,
    grid: &Arc<QuadratureGrid<T>>,
    tau: &Partition<T>,
    cols: &[usize],
) -> Result<KernelMatrix<T>> {
    let all: Vec<usize> = (0..grid.len()).collect();
    let inc = tau.increments();
    let mut cache: HashMap<u64, KernelMatrix<T>> = HashMap::new();
    let key = |d: T| d.to_f64_lossy().to_bits();
    let last = inc[inc.len() - 1];
    let mut acc = kernel_matrix(family, grid, last, cols);
    for &d in inc[..inc.len() - 1].iter().rev() {
        let step = cache
            .entry(key(d))
            .or_insert_with(|| kernel_matrix(family, grid, d, &all));
        acc = convolve(step, &acc)?;
    }
    Ok(acc)
}

/// Full Chernoff product `K_{Δ₁τ} * ⋯ * K_{Δ_Nτ}` on the grid.
pub fn chernoff_product<T: Real>(
    family: &KernelFamily<T>,
    grid: &Arc<QuadratureGrid<T>>,
    tau: &Partition<T>,
) -> Result<KernelMatrix<T>> {
    let all: Vec<usize> = (0..grid.len()).collect();
    chernoff_columns(family, grid, tau, &all)
}

/// Errors of the Chernoff product at one `N`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow<T> {
    pub n: usize,
    pub sup_error: T,
    /// `sup_error / sup |reference|`.
    pub relative_error: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport<T> {
    pub variant: KernelVariant,
    pub t: T,
    pub rows: Vec<ConvergenceRow<T>>,
    /// Least-squares slope of `log sup_error` against `log(t/N)`.
    pub rate: Option<T>,
    /// All errors are at rounding level relative to the reference.
    pub exact: bool,
    /// Smallest `N` used in the fit.
    pub fit_from_n: usize,
}

impl<T: Real> ConvergenceReport<T> {
    pub fn is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].sup_error < w[0].sup_error)
    }
}

/// Sup errors of uniform Chernoff products against `reference` for each
/// `N` in `ns`, and the fitted rate over `N ≥ fit_from_n`.
pub fn convergence_report<T: Real>(
    family: &KernelFamily<T>,
    grid: &Arc<QuadratureGrid<T>>,
    t: T,
    ns: &[usize],
    reference: &KernelMatrix<T>,
    fit_from_n: usize,
) -> Result<ConvergenceReport<T>> {
    let ref_sup = reference.sup();
    let mut rows = Vec::with_capacity(ns.len());
    for &n in ns {
        let tau = Partition::uniform(t, n)?;
        let approx = chernoff_columns(family, grid, &tau, &reference.cols)?;
        let err = approx.sup_distance(reference)?;
        rows.push(ConvergenceRow {
            n,
            sup_error: err,
            relative_error: err / ref_sup,
        });
    }
    let exact = rows.iter().all(|r| r.relative_error < T::lit(1e-9));
    let fit: Vec<(T, T)> = rows
        .iter()
        .filter(|r| r.n >= fit_from_n && r.sup_error > T::zero())
        .map(|r| ((t / T::from_usize_lossy(r.n)).ln(), r.sup_error.ln()))
        .collect();
    let rate = if exact || fit.len() < 2 { None } else { Some(least_squares_slope(&fit)) };
    Ok(ConvergenceReport {
        variant: family.variant,
        t,
        rows,
        rate,
        exact,
        fit_from_n,
    })
}

/// Slope of the least-squares line through `(x, y)` pairs.
pub fn least_squares_slope<T: Real>(pts: &[(T, T)]) -> T {
    let n = T::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<T>() / n;
    let my = pts.iter().map(|p| p.1).sum::<T>() / n;
    let sxy: T = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: T = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn arc<T>(g: QuadratureGrid<T>) -> Arc<QuadratureGrid<T>> {
        Arc::new(g)
    }

    #[test]
    fn grid_weights_sum_to_volume() {
        let t = build_grid(&ManifoldSpec::<f64>::circle(1.0).unwrap(), 64).unwrap();
        assert_eq!(t.len(), 64);
        assert!(t.weights.iter().all(|&w| (w - 1.0 / 64.0).abs() < 1e-17));
        let s = build_grid(&ManifoldSpec::sphere(1.0).unwrap(), 32).unwrap();
        assert_relative_eq!(s.total_weight(), 4.0 * PI, epsilon = 1e-8);
        let i = build_grid(&ManifoldSpec::interval(PI, BoundaryCondition::Dirichlet).unwrap(), 128).unwrap();
        assert_relative_eq!(i.total_weight(), PI, epsilon = 1e-12);
        let t2 = build_grid(&ManifoldSpec::flat_torus(vec![1.0, 2.0]).unwrap(), 8).unwrap();
        assert_relative_eq!(t2.total_weight(), 2.0, epsilon = 1e-14);
        assert!(matches!(build_grid(&ManifoldSpec::<f64>::euclidean(1).unwrap(), 8), Err(Error::UnsupportedManifold(_))));
    }

    #[test]
    fn sphere_grid_integrates_harmonics() {
        let s = build_grid(&ManifoldSpec::<f64>::sphere(1.0).unwrap(), 16).unwrap();
        // x²z⁴ has integral 4π/35 (degree 6)
        let got = s.integrate(|p| p.coords()[0].powi(2) * p.coords()[2].powi(4));
        assert_relative_eq!(got, 4.0 * PI / 35.0, epsilon = 1e-13);
        assert!(s.integrate(|p| p.coords()[0] * p.coords()[1].powi(3)).abs() < 1e-14);
    }

    #[test]
    fn kernel_values_at_coincidence() {
        let s = ManifoldSpec::sphere(1.0).unwrap();
        let x = s.sphere_point(0.7, 0.2).unwrap();
        let t = 0.3;
        let plain = eval_kernel(&KernelFamily::new(KernelVariant::PlainH1), &s, t, &x, &x);
        assert_relative_eq!(plain, 1.0 / (2.0 * PI * t), epsilon = 1e-14);
        let ell = eval_kernel(&KernelFamily::new(KernelVariant::EllCorrected), &s, t, &x, &x);
        assert_relative_eq!(ell, (t / 6.0).exp() / (2.0 * PI * t), epsilon = 1e-14);
        let tor = ManifoldSpec::flat_torus(vec![3.0, 3.0]).unwrap();
        let a = tor.point(&[0.1, 0.2]).unwrap();
        let b = tor.point(&[0.3, 0.1]).unwrap();
        let vals: Vec<f64> = [KernelVariant::PlainH1, KernelVariant::EllCorrected, KernelVariant::L2Corrected]
            .iter()
            .map(|&v| eval_kernel(&KernelFamily::new(v), &tor, t, &a, &b))
            .collect();
        let g = (-0.05 / (2.0 * t)).exp() / (2.0 * PI * t);
        for v in vals {
            assert_relative_eq!(v, g, epsilon = 1e-14);
        }
    }

    #[test]
    fn kernel_vanishes_beyond_truncation() {
        let s = ManifoldSpec::sphere(1.0).unwrap();
        let x = s.sphere_point(0.0, 0.0).unwrap();
        let y = s.sphere_point(0.95 * PI, 0.0).unwrap();
        assert_eq!(eval_kernel(&KernelFamily::new(KernelVariant::PlainH1), &s, 1.0, &x, &y), 0.0);
    }

    #[test]
    fn identity_is_a_unit() {
        let g = arc(build_grid(&ManifoldSpec::<f64>::circle(2.0).unwrap(), 32).unwrap());
        let fam = KernelFamily::new(KernelVariant::PlainH1);
        let all: Vec<usize> = (0..32).collect();
        let k = kernel_matrix(&fam, &g, 0.1, &all);
        let c = convolve(&KernelMatrix::identity(&g), &k).unwrap();
        assert!(c.sup_distance(&k).unwrap() < 1e-12 * k.sup());
    }

    #[test]
    fn torus_semigroup_at_resolution_64() {
        let g = arc(build_grid(&ManifoldSpec::circle(1.0).unwrap(), 64).unwrap());
        let all: Vec<usize> = (0..64).collect();
        let k = reference_kernel_matrix(&g, 0.1, &all).unwrap();
        let kk = convolve(&k, &k).unwrap();
        let k2 = reference_kernel_matrix(&g, 0.2, &all).unwrap();
        assert!(kk.sup_distance(&k2).unwrap() < 1e-8);
        assert!(kk.values.is_symmetric(1e-10));
    }

    #[test]
    fn grid_mismatch_is_reported() {
        let g1 = arc(build_grid(&ManifoldSpec::circle(1.0).unwrap(), 8).unwrap());
        let g2 = arc(build_grid(&ManifoldSpec::circle(1.0).unwrap(), 9).unwrap());
        let all1: Vec<usize> = (0..8).collect();
        let all2: Vec<usize> = (0..9).collect();
        let fam = KernelFamily::new(KernelVariant::PlainH1);
        let r = convolve(&kernel_matrix(&fam, &g1, 0.1, &all1), &kernel_matrix(&fam, &g2, 0.1, &all2));
        assert!(matches!(r, Err(Error::GridMismatch)));
    }

    #[test]
    fn single_step_product_is_the_kernel() {
        let g = arc(build_grid(&ManifoldSpec::sphere(1.0).unwrap(), 6).unwrap());
        let fam = KernelFamily::new(KernelVariant::EllCorrected);
        let p = chernoff_product(&fam, &g, &Partition::uniform(0.4, 1).unwrap()).unwrap();
        let all: Vec<usize> = (0..g.len()).collect();
        let k = kernel_matrix(&fam, &g, 0.4, &all);
        assert_eq!(p.sup_distance(&k).unwrap(), 0.0);
    }

    #[test]
    fn columns_agree_with_full_product() {
        let g = arc(build_grid(&ManifoldSpec::<f64>::sphere(1.0).unwrap(), 6).unwrap());
        let fam = KernelFamily::new(KernelVariant::PlainH1);
        let tau = Partition::random(0.5, 4, 2).unwrap();
        let full = chernoff_product(&fam, &g, &tau).unwrap();
        let cols = g.symmetry_representatives();
        let part = chernoff_columns(&fam, &g, &tau, &cols).unwrap();
        for (k, &j) in cols.iter().enumerate() {
            for i in 0..g.len() {
                assert!((full.values[(i, j)] - part.values[(i, k)]).abs() < 1e-13);
            }
        }
        // rotation invariance: every column's sup equals that of its latitude representative
        let sup_full = full.values.max_abs();
        assert_relative_eq!(sup_full, part.values.max_abs(), epsilon = 1e-14);
    }

    #[test]
    fn interval_step_signs() {
        let m = ManifoldSpec::<f64>::interval(1.0, BoundaryCondition::Dirichlet).unwrap();
        let fam = KernelFamily::new(KernelVariant::PlainH1);
        let x = m.point(&[0.0]).unwrap();
        let y = m.point(&[0.4]).unwrap();
        assert!(eval_kernel(&fam, &m, 0.1, &x, &y).abs() < 1e-15);
        let neu = fam.clone().with_boundary_signs(BoundaryCondition::Neumann);
        let z = m.point(&[0.3]).unwrap();
        let exact = crate::reference::interval_kernel_images(1.0, BoundaryCondition::Neumann, 0.1, 0.3, 0.4, SeriesOrder::Auto).unwrap();
        assert_relative_eq!(eval_kernel(&neu, &m, 0.1, &z, &y), exact, epsilon = 1e-14);
    }

    #[test]
    fn euclidean_box_is_centred() {
        let m = ManifoldSpec::<f64>::euclidean(2).unwrap();
        let g = QuadratureGrid::euclidean_box(&m, 4.0, 8).unwrap();
        assert_eq!(g.len(), 64);
        assert_relative_eq!(g.total_weight(), 64.0, epsilon = 1e-12);
        assert_relative_eq!(g.points[0].coords()[0], -3.5, epsilon = 1e-15);
        assert_relative_eq!(g.points[63].coords()[1], 3.5, epsilon = 1e-15);
        assert_relative_eq!(g.integrate(|p| p.coords()[0]), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn slope_of_a_line() {
        let pts: Vec<(f64, f64)> = (0..5).map(|k| (k as f64, 0.5 * k as f64 - 2.0)).collect();
        assert_relative_eq!(least_squares_slope(&pts), 0.5, epsilon = 1e-14);
    }
}
