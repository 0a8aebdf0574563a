//! Gauss-Legendre rules.

use crate::scalar::Real;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// nodes ascending.
pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
    // Newton iteration in f64, then converted; f64 is enough for both widths.
    let mut nodes = vec![0.0f64; n];
    let mut weights = vec![0.0f64; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (
        nodes.into_iter().map(T::lit).collect(),
        weights.into_iter().map(T::lit).collect(),
    )
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Fixed-order Gauss-Legendre rule mapped onto an interval.
#[derive(Clone, Debug)]
pub struct GaussRule<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> GaussRule<T> {
    pub fn new(order: usize) -> Self {
        let (nodes, weights) = gauss_legendre(order);
        Self { nodes, weights }
    }

    /// Fractions in `(0, 1)` and weights summing to one.
    pub fn unit_nodes(&self) -> impl Iterator<Item = (T, T)> + '_ {
        let half = T::lit(0.5);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (half * (x + T::one()), half * w))
    }

    pub fn integrate(&self, a: T, b: T, mut f: impl FnMut(T) -> T) -> T {
        let len = b - a;
        self.unit_nodes().map(|(s, w)| w * f(a + s * len)).sum::<T>() * len
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn integrate_composite(&self, a: T, b: T, panels: usize, mut f: impl FnMut(T) -> T) -> T {
        let h = (b - a) / T::from_usize_lossy(panels);
        let mut acc = crate::scalar::CompensatedSum::new();
        for p in 0..panels {
            let lo = a + h * T::from_usize_lossy(p);
            acc.add(self.integrate(lo, lo + h, &mut f));
        }
        acc.value()
    }
}

/// Order of the per-segment rule used for line integrals along geodesics.
pub const SEGMENT_RULE_ORDER: usize = 4;

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn rule_is_exact_for_polynomials_up_to_degree_2n_minus_1() {
        for n in [1usize, 2, 4, 7, 32] {
            let (x, w) = gauss_legendre::<f64>(n);
            let total: f64 = w.iter().sum();
            assert_relative_eq!(total, 2.0, epsilon = 1e-13);
            let deg = 2 * n - 1;
            let exact = if deg % 2 == 1 { 2.0 / deg as f64 } else { 0.0 };
            // integral of x^(deg-1) over [-1,1]
            let q: f64 = x.iter().zip(&w).map(|(&xi, &wi)| wi * xi.powi(deg as i32 - 1)).sum();
            assert_relative_eq!(q, exact, epsilon = 1e-12);
        }
    }

    #[test]
    fn four_point_rule_integrates_degree_seven() {
        let rule = GaussRule::<f64>::new(SEGMENT_RULE_ORDER);
        let got = rule.integrate(0.0, 2.0, |s| s.powi(7));
        assert_relative_eq!(got, 256.0 / 8.0, epsilon = 1e-12);
    }

    #[test]
    fn composite_rule_integrates_gaussian() {
        let rule = GaussRule::<f64>::new(8);
        let got = rule.integrate_composite(-10.0, 10.0, 40, |x| (-x * x / 2.0).exp());
        assert_relative_eq!(got, (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-12);
    }
}
