//! Partitions, piecewise-geodesic paths and the densities of the discrete
//! Σ-H¹ and Σ-L² volumes under the evaluation map.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::geom::{fold_into_interval, sinc, Coords, GeodesicSegment, ManifoldSpec, Point};
use crate::linalg::dot;
use crate::quadrature::GaussRule;
use crate::scalar::{compensated_sum, Real};

/// Strict partition `0 = τ₀ < τ₁ < … < τ_N = t`.
#[derive(Clone, Debug, PartialEq)]
pub struct Partition<T> {
    times: Vec<T>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionScheme {
    Uniform,
    /// Flat-Dirichlet increments drawn from the given seed.
    Random(u64),
}

impl<T: Real> Partition<T> {
    pub fn new(times: Vec<T>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidPartition("need at least two times".into()));
        }
        if times[0] != T::zero() {
            return Err(Error::InvalidPartition("partition must start at 0".into()));
        }
        for w in times.windows(2) {
            if !(w[1] > w[0]) || !w[1].is_finite() {
                return Err(Error::InvalidPartition(format!(
                    "times must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { times })
    }

    pub fn uniform(t: T, n: usize) -> Result<Self> {
        check_tn(t, n)?;
        let nf = T::from_usize_lossy(n);
        let mut times: Vec<T> = (0..=n).map(|j| t * T::from_usize_lossy(j) / nf).collect();
        times[n] = t;
        Self::new(times)
    }

    /// Increments uniform on the simplex `{Δ > 0, ΣΔ = t}`.
    pub fn random(t: T, n: usize, seed: u64) -> Result<Self> {
        check_tn(t, n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws: Vec<f64> = (0..n)
            .map(|_| loop {
                let e: f64 = Exp1.sample(&mut rng);
                if e > 0.0 {
                    break e;
                }
            })
            .collect();
        let total: f64 = draws.iter().sum();
        let mut times = Vec::with_capacity(n + 1);
        times.push(T::zero());
        let mut acc = 0.0;
        for d in &draws[..n - 1] {
            acc += d;
            times.push(t * T::lit(acc / total));
        }
        times.push(t);
        Self::new(times)
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    /// Total time `t`.
    pub fn t(&self) -> T {
        self.times[self.times.len() - 1]
    }

    /// Number of segments `N`.
    pub fn len(&self) -> usize {
        self.times.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn increments(&self) -> Vec<T> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// `|τ| = max Δ_jτ`.
    pub fn mesh(&self) -> T {
        self.increments().into_iter().fold(T::zero(), T::max)
    }

    pub fn is_uniform(&self) -> bool {
        let inc = self.increments();
        let h = self.t() / T::from_usize_lossy(self.len());
        inc.iter().all(|&d| (d - h).abs() <= T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) * self.t())
    }
}

fn check_tn<T: Real>(t: T, n: usize) -> Result<()> {
    if !(t > T::zero()) || !t.is_finite() {
        return Err(Error::InvalidPartition(format!("total time must be positive, got {t}")));
    }
    if n == 0 {
        return Err(Error::InvalidPartition("need at least one segment".into()));
    }
    Ok(())
}

pub fn make_partition<T: Real>(t: T, n: usize, scheme: PartitionScheme) -> Result<Partition<T>> {
    match scheme {
        PartitionScheme::Uniform => Partition::uniform(t, n),
        PartitionScheme::Random(seed) => Partition::random(t, n, seed),
    }
}

/// Which discrete path-space volume a density refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Measure {
    /// Σ-H¹ volume; `pinned` for `H_{xy;τ}` against `dx₁⋯dx_{N−1}`.
    SigmaH1 { pinned: bool },
    SigmaL2,
}

/// Density of a path-space volume against product Riemannian measure.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityFactor<T> {
    pub value: T,
    pub measure: Measure,
    /// Power `p` such that a factor `(2π)^p` has been applied to the raw
    /// density; zero for the raw form.
    pub two_pi_power: T,
    dim: usize,
    segments: usize,
}

impl<T: Real> DensityFactor<T> {
    /// Density with the Gaussian normalization `(2π)^{−nN/2}` applied
    /// (`(2π)^{−n(N−1)/2}` when pinned), so that it multiplies
    /// `exp(−S₀)` into a probability density.
    pub fn normalized(&self) -> Self {
        let n = T::from_usize_lossy(self.dim);
        let segs = match self.measure {
            Measure::SigmaH1 { pinned: true } => self.segments - 1,
            _ => self.segments,
        };
        let p = -(n * T::from_usize_lossy(segs)) * T::lit(0.5);
        let extra = p - self.two_pi_power;
        Self {
            value: self.value * (T::TAU()).powf(extra),
            two_pi_power: p,
            ..*self
        }
    }
}

/// Element of `H_{x;τ}(M)` (or `H_{xy;τ}(M)` once the end node is fixed):
/// nodes joined by minimizing geodesics.
#[derive(Clone, Debug)]
pub struct PiecewiseGeodesicPath<T> {
    manifold: ManifoldSpec<T>,
    partition: Partition<T>,
    nodes: Vec<Point<T>>,
    segments: Vec<GeodesicSegment<T>>,
}

impl<T: Real> PiecewiseGeodesicPath<T> {
    /// Fails with [`Error::CutLocus`] when a consecutive pair has no
    /// unique minimizing geodesic.
    pub fn new(manifold: &ManifoldSpec<T>, partition: Partition<T>, nodes: Vec<Point<T>>) -> Result<Self> {
        if nodes.len() != partition.len() + 1 {
            return Err(Error::InvalidArgument(format!(
                "{} nodes for a partition with {} segments",
                nodes.len(),
                partition.len()
            )));
        }
        let inc = partition.increments();
        let segments = nodes
            .windows(2)
            .zip(&inc)
            .map(|(w, &dt)| GeodesicSegment::new(manifold, w[0].clone(), w[1].clone(), dt))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            manifold: manifold.clone(),
            partition,
            nodes,
            segments,
        })
    }

    /// Assembles a path from segments already known to be minimizing.
    pub(crate) fn from_segments(manifold: &ManifoldSpec<T>, partition: Partition<T>, segments: Vec<GeodesicSegment<T>>) -> Self {
        let mut nodes = Vec::with_capacity(segments.len() + 1);
        nodes.push(segments[0].start.clone());
        nodes.extend(segments.iter().map(|s| s.end.clone()));
        Self {
            manifold: manifold.clone(),
            partition,
            nodes,
            segments,
        }
    }

    /// Builds a path from raw coordinate rows.
    pub fn from_coords(manifold: &ManifoldSpec<T>, partition: Partition<T>, coords: &[Vec<T>]) -> Result<Self> {
        let nodes = coords.iter().map(|c| manifold.point(c)).collect::<Result<Vec<_>>>()?;
        Self::new(manifold, partition, nodes)
    }

    /// Constant path at `x`.
    pub fn constant(manifold: &ManifoldSpec<T>, partition: Partition<T>, x: Point<T>) -> Result<Self> {
        let nodes = vec![x; partition.len() + 1];
        Self::new(manifold, partition, nodes)
    }

    pub fn manifold(&self) -> &ManifoldSpec<T> {
        &self.manifold
    }

    pub fn partition(&self) -> &Partition<T> {
        &self.partition
    }

    pub fn nodes(&self) -> &[Point<T>] {
        &self.nodes
    }

    pub fn segments(&self) -> &[GeodesicSegment<T>] {
        &self.segments
    }

    pub fn start(&self) -> &Point<T> {
        &self.nodes[0]
    }

    pub fn end(&self) -> &Point<T> {
        &self.nodes[self.nodes.len() - 1]
    }

    /// Position at time `s ∈ [0, t]`.
    pub fn point_at(&self, s: T) -> Point<T> {
        let times = self.partition.times();
        let j = match times[1..].iter().position(|&tj| s <= tj) {
            Some(j) => j,
            None => self.segments.len() - 1,
        };
        self.segments[j].point_at(&self.manifold, s - times[j])
    }

    /// `S₀[γ] = ½ Σ d(x_{j−1}, x_j)²/Δ_jτ`.
    pub fn action_energy(&self) -> T {
        T::lit(0.5)
            * compensated_sum(self.segments.iter().map(|seg| {
                let v = seg.initial_velocity.vector();
                dot(v, v) * seg.duration
            }))
    }

    /// `∫₀ᵗ V(γ(s)) ds` with a `quad_order`-point Gauss rule per segment.
    pub fn potential_integral(&self, v: impl Fn(&Point<T>) -> T, quad_order: usize) -> T {
        let rule = GaussRule::<T>::new(quad_order);
        compensated_sum(
            self.segments
                .iter()
                .map(|seg| rule.integrate(T::zero(), seg.duration, |s| v(&seg.point_at(&self.manifold, s)))),
        )
    }

    /// Classical action `S₀[γ] + ∫V(γ)`.
    pub fn action_with_potential(&self, v: impl Fn(&Point<T>) -> T, quad_order: usize) -> T {
        self.action_energy() + self.potential_integral(v, quad_order)
    }

    fn jacobian(&self, seg: &GeodesicSegment<T>) -> T {
        match &self.manifold {
            ManifoldSpec::Sphere { radius } => sinc(seg.length() / *radius),
            _ => T::one(),
        }
    }

    /// Σ-H¹ density `Π (Δ_jτ)^{−n/2} J(x_{j−1}, x_j)^{−1}`, times
    /// `t^{n/2}` when pinned.
    pub fn sigma_h1_density(&self, pinned: bool) -> Result<DensityFactor<T>> {
        let half_n = T::from_usize_lossy(self.manifold.dim()) * T::lit(0.5);
        let mut log_value = T::zero();
        for seg in &self.segments {
            let j = self.jacobian(seg);
            if !(j > T::zero()) {
                return Err(Error::CutLocus {
                    distance: seg.length().to_f64_lossy(),
                    injectivity_radius: self.manifold.injectivity_radius().to_f64_lossy(),
                });
            }
            log_value -= half_n * seg.duration.ln() + j.ln();
        }
        if pinned {
            log_value += half_n * self.partition.t().ln();
        }
        Ok(DensityFactor {
            value: log_value.exp(),
            measure: Measure::SigmaH1 { pinned },
            two_pi_power: T::zero(),
            dim: self.manifold.dim(),
            segments: self.segments.len(),
        })
    }

    /// Σ-L² density `Π (Δ_jτ)^{n/2}`. The evaluation-map factor is taken
    /// to be one on every manifold; the curvature of the Σ-L² volume is
    /// carried by the scalar-curvature weight of the corresponding kernel.
    pub fn sigma_l2_density(&self) -> Result<DensityFactor<T>> {
        let half_n = T::from_usize_lossy(self.manifold.dim()) * T::lit(0.5);
        let log_value: T = self.segments.iter().map(|s| half_n * s.duration.ln()).sum();
        Ok(DensityFactor {
            value: log_value.exp(),
            measure: Measure::SigmaL2,
            two_pi_power: T::zero(),
            dim: self.manifold.dim(),
            segments: self.segments.len(),
        })
    }

    /// Increments `Δ_jγ = γ̇(τ_{j−1}+)Δ_jτ` and
    /// `F_τ(γ) = exp(∫scal/12 − Σ ric(Δ_jγ, Δ_jγ)/12)`.
    pub fn increments_f_tau(&self) -> (Vec<Coords<T>>, T) {
        let increments: Vec<Coords<T>> = self.segments.iter().map(|s| s.displacement()).collect();
        // scalar curvature is constant on every catalog manifold
        let scal_integral = self.manifold.scalar_curvature() * self.partition.t();
        let ric: T = compensated_sum(increments.iter().map(|d| self.manifold.ricci(d)));
        let twelfth = T::lit(1.0 / 12.0);
        (increments, (twelfth * (scal_integral - ric)).exp())
    }

    /// `Σ |Δ_jγ|²`, the discrete quadratic variation.
    pub fn quadratic_variation(&self) -> T {
        compensated_sum(self.segments.iter().map(|s| {
            let l = s.length();
            l * l
        }))
    }

    /// `(t, N, τ₁ … τ_{N−1}, node coordinates flattened)`.
    pub fn to_csv_row(&self) -> Vec<T> {
        let times = self.partition.times();
        let mut row = vec![self.partition.t(), T::from_usize_lossy(self.partition.len())];
        row.extend_from_slice(&times[1..times.len() - 1]);
        for p in &self.nodes {
            row.extend_from_slice(p.coords());
        }
        row
    }

    pub fn from_csv_row(manifold: &ManifoldSpec<T>, row: &[T]) -> Result<Self> {
        let bad = || Error::InvalidArgument("malformed path row".into());
        if row.len() < 2 {
            return Err(bad());
        }
        let n = row[1].to_usize().ok_or_else(bad)?;
        let d = manifold.ambient_dim();
        if n == 0 || row.len() != 2 + (n - 1) + (n + 1) * d {
            return Err(bad());
        }
        let mut times = vec![T::zero()];
        times.extend_from_slice(&row[2..n + 1]);
        times.push(row[0]);
        let partition = Partition::new(times)?;
        let coords: Vec<Vec<T>> = row[n + 1..].chunks(d).map(|c| c.to_vec()).collect();
        Self::from_coords(manifold, partition, &coords)
    }

    /// `max_s d(γ_τ(s), γ(s))` over the given samples of `γ`.
    pub fn max_deviation(&self, times: &[T], points: &[Point<T>]) -> T {
        times
            .iter()
            .zip(points)
            .map(|(&s, p)| self.manifold.distance(&self.point_at(s), p))
            .fold(T::zero(), T::max)
    }
}

/// Polygonal projection `γ ↦ γ_{x,τ}`: interpolates the finely sampled
/// path at the coarse partition times by minimizing geodesics.
pub fn project_to_polygon<T: Real>(
    manifold: &ManifoldSpec<T>,
    fine_times: &[T],
    fine_nodes: &[Point<T>],
    coarse: &Partition<T>,
) -> Result<PiecewiseGeodesicPath<T>> {
    if fine_times.len() != fine_nodes.len() {
        return Err(Error::InvalidArgument("times and nodes differ in length".into()));
    }
    let t = coarse.t();
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0)) * t;
    let mut nodes = Vec::with_capacity(coarse.len() + 1);
    let mut k = 0;
    for &tc in coarse.times() {
        while k < fine_times.len() && fine_times[k] < tc - tol {
            k += 1;
        }
        if k == fine_times.len() || (fine_times[k] - tc).abs() > tol {
            return Err(Error::InvalidPartition(format!("coarse time {tc} is not a fine sample time")));
        }
        nodes.push(fine_nodes[k].clone());
    }
    PiecewiseGeodesicPath::new(manifold, coarse.clone(), nodes)
}

/// Folds `unfolded_end` onto `[0, L]` and counts the walls `kL` strictly
/// between `x` and `unfolded_end`.
pub fn reflect_unfold<T: Real>(length: T, x: T, unfolded_end: T) -> (T, usize) {
    let (folded, _) = fold_into_interval(unfolded_end, length);
    (folded, walls_between(length, x, unfolded_end))
}

/// Number of integers `k` with `min(a,b) < kL < max(a,b)`.
pub(crate) fn walls_between<T: Real>(length: T, a: T, b: T) -> usize {
    let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
    let count = (hi / length).ceil() - (lo / length).floor() - T::one();
    count.max(T::zero()).to_usize().unwrap_or(0)
}

/// Inverse of [`reflect_unfold`] for a start in `[0, L]`: the image of
/// `folded` reached from `x` after crossing `count` walls in `direction`
/// (`+1` rightwards, `−1` leftwards).
pub fn unfold<T: Real>(length: T, x: T, folded: T, count: usize, direction: i32) -> T {
    let _ = x;
    let c = if direction >= 0 { count as i64 } else { -(count as i64) };
    let cf = T::from_i64(c).unwrap_or_else(T::zero);
    if c.rem_euclid(2) == 0 {
        cf * length + folded
    } else {
        (cf + T::one()) * length - folded
    }
}

/// Path on `[0, L]` with specular reflection at the ends, stored together
/// with an unfolded representative on the real line.
#[derive(Clone, Debug, PartialEq)]
pub struct ReflectedPath<T> {
    pub length: T,
    pub partition: Partition<T>,
    pub nodes: Vec<T>,
    pub reflections: Vec<usize>,
    pub unfolded: Vec<T>,
}

impl<T: Real> ReflectedPath<T> {
    pub fn from_unfolded(length: T, partition: Partition<T>, unfolded: Vec<T>) -> Result<Self> {
        if unfolded.len() != partition.len() + 1 {
            return Err(Error::InvalidArgument("node count does not match partition".into()));
        }
        if !(length > T::zero()) {
            return Err(Error::InvalidArgument("interval length must be positive".into()));
        }
        let nodes = unfolded.iter().map(|&u| fold_into_interval(u, length).0).collect();
        let reflections = unfolded.windows(2).map(|w| walls_between(length, w[0], w[1])).collect();
        Ok(Self {
            length,
            partition,
            nodes,
            reflections,
            unfolded,
        })
    }

    /// `refl(γ)`.
    pub fn total_reflections(&self) -> usize {
        self.reflections.iter().sum()
    }

    /// `(−1)^refl` for Dirichlet conditions, one for Neumann.
    pub fn sign<S: Real>(&self, bc: crate::geom::BoundaryCondition) -> S {
        match bc {
            crate::geom::BoundaryCondition::Dirichlet if self.total_reflections() % 2 == 1 => -S::one(),
            _ => S::one(),
        }
    }

    /// `S₀` of the unfolded polygon, which equals the reflected path's action.
    pub fn action_energy(&self) -> T {
        let inc = self.partition.increments();
        T::lit(0.5)
            * self
                .unfolded
                .windows(2)
                .zip(inc)
                .map(|(w, dt)| (w[1] - w[0]) * (w[1] - w[0]) / dt)
                .sum::<T>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::BoundaryCondition;
    use approx::assert_relative_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn line() -> ManifoldSpec<f64> {
        ManifoldSpec::euclidean(1).unwrap()
    }

    #[test]
    fn uniform_and_trivial_partitions() {
        let p = make_partition(1.0, 4, PartitionScheme::Uniform).unwrap();
        assert_eq!(p.times(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        let q = make_partition(2.0, 1, PartitionScheme::Uniform).unwrap();
        assert_eq!(q.times(), &[0.0, 2.0]);
        assert_eq!(q.mesh(), 2.0);
    }

    #[test]
    fn random_partition_lies_on_simplex() {
        let p = make_partition(1.0, 3, PartitionScheme::Random(7)).unwrap();
        let inc = p.increments();
        assert!(inc.iter().all(|&d| d > 0.0));
        assert_relative_eq!(inc.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_eq!(p, make_partition(1.0, 3, PartitionScheme::Random(7)).unwrap());
    }

    #[test]
    fn degenerate_partitions_are_rejected() {
        assert!(Partition::new(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(Partition::<f64>::uniform(1.0, 0).is_err());
        assert!(Partition::<f64>::uniform(-1.0, 2).is_err());
    }

    #[test]
    fn straight_line_actions() {
        let m = line();
        let p = PiecewiseGeodesicPath::from_coords(&m, Partition::uniform(1.0, 1).unwrap(), &[vec![0.0], vec![1.0]]).unwrap();
        assert_relative_eq!(p.action_energy(), 0.5);
        let q = PiecewiseGeodesicPath::from_coords(
            &m,
            Partition::uniform(1.0, 2).unwrap(),
            &[vec![0.0], vec![0.5], vec![1.0]],
        )
        .unwrap();
        assert_relative_eq!(q.action_energy(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.action_with_potential(|x| x.x(), 4), 1.0, epsilon = 1e-15);
        assert_relative_eq!(p.action_with_potential(|_| 3.0, 4), 3.5, epsilon = 1e-15);
    }

    #[test]
    fn sphere_quarter_circle_action() {
        let m = ManifoldSpec::sphere(1.0).unwrap();
        let p = PiecewiseGeodesicPath::from_coords(
            &m,
            Partition::uniform(1.0, 1).unwrap(),
            &[vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]],
        )
        .unwrap();
        assert_relative_eq!(p.action_energy(), FRAC_PI_2 * FRAC_PI_2 / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn constant_path_on_circle_with_cosine() {
        let m = ManifoldSpec::circle(2.0 * PI).unwrap();
        let x = m.point(&[0.0]).unwrap();
        let p = PiecewiseGeodesicPath::constant(&m, Partition::uniform(1.0, 5).unwrap(), x).unwrap();
        assert_relative_eq!(p.action_with_potential(|y| y.x().cos(), 4), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn densities_on_the_line() {
        let m = line();
        let p = PiecewiseGeodesicPath::from_coords(
            &m,
            Partition::uniform(1.0, 2).unwrap(),
            &[vec![0.0], vec![0.3], vec![-0.2]],
        )
        .unwrap();
        assert_relative_eq!(p.sigma_h1_density(true).unwrap().value, 2.0, epsilon = 1e-14);
        assert_relative_eq!(p.sigma_l2_density().unwrap().value, 0.5, epsilon = 1e-15);
        let h1 = p.sigma_h1_density(false).unwrap().value;
        // Π Δ^{-n} · ΣL² = ΣH¹ on flat space
        assert_relative_eq!(4.0 * p.sigma_l2_density().unwrap().value, h1, epsilon = 1e-14);
    }

    #[test]
    fn pinned_single_segment_on_sphere_is_inverse_jacobian() {
        let m = ManifoldSpec::sphere(1.0).unwrap();
        let x = m.sphere_point(0.4, 0.0).unwrap();
        let y = m.sphere_point(1.7, 0.9).unwrap();
        let p = PiecewiseGeodesicPath::new(&m, Partition::uniform(0.7, 1).unwrap(), vec![x.clone(), y.clone()]).unwrap();
        let j = m.exp_jacobian(&x, &y).unwrap();
        assert_relative_eq!(p.sigma_h1_density(true).unwrap().value, 1.0 / j, epsilon = 1e-13);
    }

    #[test]
    fn normalization_tracks_two_pi_power() {
        let m = line();
        let p = PiecewiseGeodesicPath::from_coords(
            &m,
            Partition::uniform(1.0, 2).unwrap(),
            &[vec![0.0], vec![0.3], vec![-0.2]],
        )
        .unwrap();
        let d = p.sigma_h1_density(false).unwrap().normalized();
        assert_relative_eq!(d.value, 2.0 / (2.0 * PI), epsilon = 1e-14);
        assert_eq!(d.two_pi_power, -1.0);
        assert_eq!(d.normalized(), d);
    }

    #[test]
    fn f_tau_values() {
        let m = ManifoldSpec::sphere(1.0).unwrap();
        let x = m.sphere_point(0.5, 0.5).unwrap();
        let c = PiecewiseGeodesicPath::constant(&m, Partition::uniform(0.8, 4).unwrap(), x.clone()).unwrap();
        assert_relative_eq!(c.increments_f_tau().1, (0.8f64 / 6.0).exp(), epsilon = 1e-14);
        let d = 1.2;
        let frame = m.orthonormal_frame(&x, None);
        let v: Vec<f64> = frame[0].iter().map(|c| c * d).collect();
        let y = m.exp_map(&m.tangent(&x, &v).unwrap());
        let s = PiecewiseGeodesicPath::new(&m, Partition::uniform(1.0, 1).unwrap(), vec![x, y]).unwrap();
        assert_relative_eq!(s.increments_f_tau().1, (2.0 / 12.0 - d * d / 12.0f64).exp(), epsilon = 1e-13);
        let t = ManifoldSpec::flat_torus(vec![1.0, 1.0]).unwrap();
        let p = PiecewiseGeodesicPath::from_coords(
            &t,
            Partition::uniform(1.0, 2).unwrap(),
            &[vec![0.1, 0.1], vec![0.3, 0.2], vec![0.9, 0.9]],
        )
        .unwrap();
        assert_eq!(p.increments_f_tau().1, 1.0);
    }

    #[test]
    fn projection_of_parabola() {
        let m = line();
        let fine: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
        let pts: Vec<Point<f64>> = fine.iter().map(|&s| m.point(&[s * s]).unwrap()).collect();
        let coarse = Partition::uniform(1.0, 10).unwrap();
        let poly = project_to_polygon(&m, &fine, &pts, &coarse).unwrap();
        assert_relative_eq!(poly.max_deviation(&fine, &pts), 0.0025, epsilon = 1e-12);

        let same = Partition::new(fine.clone()).unwrap();
        let ident = project_to_polygon(&m, &fine, &pts, &same).unwrap();
        assert!(ident.max_deviation(&fine, &pts) < 1e-15);
    }

    #[test]
    fn projection_requires_coarse_subset() {
        let m = line();
        let fine = [0.0, 0.5, 1.0];
        let pts: Vec<Point<f64>> = fine.iter().map(|&s| m.point(&[s]).unwrap()).collect();
        let coarse = Partition::new(vec![0.0, 0.3, 1.0]).unwrap();
        assert!(project_to_polygon(&m, &fine, &pts, &coarse).is_err());
    }

    #[test]
    fn reflection_examples() {
        assert_eq!(reflect_unfold(1.0, 0.5, 0.5), (0.5, 0));
        let (y, k) = reflect_unfold(1.0, 0.5, 1.5);
        assert_relative_eq!(y, 0.5);
        assert_eq!(k, 1);
        let (y, k) = reflect_unfold(1.0, 0.2, -0.2);
        assert_relative_eq!(y, 0.2);
        assert_eq!(k, 1);
        assert_eq!(reflect_unfold(1.0, 0.2, 3.7).1, 3);
    }

    #[test]
    fn reflected_path_sign_and_action() {
        let part = Partition::uniform(1.0, 3).unwrap();
        let r = ReflectedPath::from_unfolded(1.0, part, vec![0.5, 1.2, 2.4, 2.1]).unwrap();
        assert_eq!(r.reflections, vec![1, 1, 0]);
        assert_eq!(r.sign::<f64>(BoundaryCondition::Dirichlet), 1.0);
        assert_relative_eq!(r.nodes[1], 0.8, epsilon = 1e-15);
        assert_relative_eq!(r.nodes[2], 0.4, epsilon = 1e-15);
        let expected = 0.5 * 3.0 * (0.49 + 1.44 + 0.09);
        assert_relative_eq!(r.action_energy(), expected, epsilon = 1e-14);
    }

    #[test]
    fn csv_row_round_trip() {
        let m = ManifoldSpec::sphere(1.0).unwrap();
        let part = Partition::random(0.9, 3, 11).unwrap();
        let nodes: Vec<Point<f64>> = (0..4).map(|k| m.sphere_point(0.3 + 0.2 * k as f64, 0.1 * k as f64).unwrap()).collect();
        let p = PiecewiseGeodesicPath::new(&m, part, nodes).unwrap();
        let row = p.to_csv_row();
        assert_eq!(row.len(), 2 + 2 + 12);
        let q = PiecewiseGeodesicPath::from_csv_row(&m, &row).unwrap();
        assert_eq!(q.to_csv_row(), row);
    }
}
