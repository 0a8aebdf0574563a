use std::f64::consts::PI;
use std::sync::Arc;

use heatpath::*;

/// Two-step PlainH1 product against the pinned Σ-H¹ path integral over
/// the middle node, evaluated on the same grid.
#[test]
fn chernoff_product_is_the_pinned_path_integral() {
    let m = ManifoldSpec64::sphere(1.0).unwrap();
    let g = Arc::new(build_grid(&m, 24).unwrap());
    let tau = Partition::new(vec![0.0, 0.1, 0.25]).unwrap();
    let (i, j) = (0usize, 5 * 48 + 3);
    let product = chernoff_columns(&KernelFamily::new(KernelVariant::PlainH1), &g, &tau, &[j]).unwrap();
    let (x, y) = (&g.points[i], &g.points[j]);
    let t = tau.t();
    let integral = g.integrate(|z| {
        let Ok(path) = PiecewiseGeodesicPath::new(&m, tau.clone(), vec![x.clone(), z.clone(), y.clone()]) else {
            return 0.0;
        };
        if path.segments().iter().any(|s| s.length() >= 0.9 * PI) {
            return 0.0;
        }
        let density = path.sigma_h1_density(true).unwrap().normalized().value;
        density * (-path.action_energy()).exp()
    }) / (2.0 * PI * t);
    assert!((product.values[(i, 0)] - integral).abs() < 1e-10 * integral, "{} vs {integral}", product.values[(i, 0)]);
}

/// The EllCorrected product inserts `F_τ` into the same integral.
#[test]
fn ell_corrected_product_inserts_f_tau() {
    let m = ManifoldSpec64::sphere(1.0).unwrap();
    let g = Arc::new(build_grid(&m, 24).unwrap());
    let tau = Partition::new(vec![0.0, 0.15, 0.3]).unwrap();
    let (i, j) = (2usize, 4 * 48 + 10);
    let product = chernoff_columns(&KernelFamily::new(KernelVariant::EllCorrected), &g, &tau, &[j]).unwrap();
    let (x, y) = (&g.points[i], &g.points[j]);
    let integral = g.integrate(|z| {
        let Ok(path) = PiecewiseGeodesicPath::new(&m, tau.clone(), vec![x.clone(), z.clone(), y.clone()]) else {
            return 0.0;
        };
        if path.segments().iter().any(|s| s.length() >= 0.9 * PI) {
            return 0.0;
        }
        let density = path.sigma_h1_density(true).unwrap().normalized().value;
        density * (-path.action_energy()).exp() * path.increments_f_tau().1
    }) / (2.0 * PI * tau.t());
    assert!((product.values[(i, 0)] - integral).abs() < 1e-10 * integral);
}

/// Mean of the path-space Monte Carlo weight against the heat semigroup on
/// the flat torus, where the polygon measure is exact at the endpoint.
#[test]
fn torus_feynman_kac_matches_the_reference_kernel() {
    let m = ManifoldSpec64::flat_torus(vec![2.0 * PI]).unwrap();
    let x = m.point(&[0.5]).unwrap();
    let t = 0.7;
    let est = feynman_kac_mc(
        &m,
        &x,
        &Partition::uniform(t, 4).unwrap(),
        &PathWeight::constant(0.0),
        |p: &Point64| p.x().cos(),
        &SamplerConfig::new(4, 50_000),
    )
    .unwrap();
    let exact = (-t / 2.0).exp() * 0.5f64.cos();
    assert!(est.agrees_with(exact, 4.0, 0.0), "{} ± {} vs {exact}", est.mean, est.stderr);
}

/// Leading asymptotics on a sphere of radius 2 rescale like `d/r`.
#[test]
fn radius_two_asymptotics() {
    let m = ManifoldSpec64::sphere(2.0).unwrap();
    let x = m.sphere_point(0.0, 0.0).unwrap();
    let y = m.sphere_point(1.0, 0.0).unwrap();
    let rep = leading_asymptotics(&m, &x, &y).unwrap();
    let pred = (1f64.sin() / 1.0).powf(-0.5);
    assert!((rep.prediction - pred).abs() < 1e-10);
    assert!(rep.relative_error < 1e-3, "{}", rep.relative_error);
}

#[test]
fn f32_pipeline_runs() {
    let m = ManifoldSpec32::sphere(1.0).unwrap();
    let g = Arc::new(build_grid(&m, 8).unwrap());
    let cols = g.symmetry_representatives();
    let p = chernoff_columns(&KernelFamily::new(KernelVariant::EllCorrected), &g, &Partition::uniform(0.5f32, 4).unwrap(), &cols).unwrap();
    let r = reference_kernel_matrix(&g, 0.5f32, &cols).unwrap();
    assert!(p.sup_distance(&r).unwrap() < 0.05 * r.sup());
    let d = fredholm_det(&HessianSpec::<f32>::sphere_arc(1.0, 1.0), DeterminantMethod::EigenProduct).unwrap();
    assert!((d.value - 1f32.sin()).abs() < 1e-4);
}
