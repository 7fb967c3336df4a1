use std::f64::consts::TAU;

use nalgebra::DVector;
use proptest::prelude::*;
use warpflow::manifold::{catalog as mc, curvature_direct, ScalarField};
use warpflow::warped::{
    catalog, oracle_compare, riemann_unified, sample_points, scalar_unified, LiftVector,
    WarpedProductSpec,
};

fn wavy(a: f64, b: f64, d: f64) -> WarpedProductSpec {
    let base = mc::circle(TAU);
    let warp = ScalarField::new("wavy", base.domain().clone(), move |x| {
        a + b * x[0].cos() + d * (2.0 * x[0]).sin()
    });
    WarpedProductSpec::new("wavy", base, mc::sphere(2), warp).unwrap()
}

fn lift(v: &[f64]) -> LiftVector {
    LiftVector::from_product(1, &DVector::from_column_slice(v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn unified_matches_direct(a in 1.5f64..3.0, b in -0.5f64..0.5, d in -0.3f64..0.3) {
        let wp = wavy(a, b, d);
        let cmp = oracle_compare(&wp, &sample_points(&wp, 3, 0.15), 1e-3).unwrap();
        for (name, r) in &cmp.residuals.residuals {
            prop_assert!(r.linf < 1e-4, "{} {}", name, r.linf);
        }
    }

    #[test]
    fn riemann_symmetries(
        a in 1.5f64..3.0,
        b in -0.5f64..0.5,
        s in 0.0f64..TAU,
        vs in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let wp = wavy(a, b, 0.1);
        let p = [s, 1.2, 0.4];
        let (w, z, x, y) = (lift(&vs[0..3]), lift(&vs[3..6]), lift(&vs[6..9]), lift(&vs[9..12]));
        let r = |q: [&LiftVector; 4]| riemann_unified(&wp, q, &p, 1e-3).unwrap();
        let base = r([&w, &z, &x, &y]);
        let tol = 1e-9 * (1.0 + base.abs());
        prop_assert!((base + r([&z, &w, &x, &y])).abs() < tol);
        prop_assert!((base + r([&w, &z, &y, &x])).abs() < tol);
        prop_assert!((base - r([&x, &y, &w, &z])).abs() < tol);
        // first Bianchi
        let cyc = base + r([&w, &x, &y, &z]) + r([&w, &y, &z, &x]);
        prop_assert!(cyc.abs() < tol, "{}", cyc);
    }
}

#[test]
fn catalog_matches_oracle() {
    for name in [
        "direct:euclidean:2/sphere:2",
        "direct:sphere:2/hyperbolic:2",
        "cylinder:2,0.7",
        "sphere-split:2",
        "bump-warp:2",
    ] {
        let wp = catalog::from_name(name).unwrap();
        let cmp = oracle_compare(&wp, &sample_points(&wp, 4, 0.15), 1e-3).unwrap();
        assert!(
            cmp.residuals.max_linf() < 1e-4,
            "{name}: {:?}",
            cmp.residuals
        );
    }
}

#[test]
fn two_dimensional_base() {
    let base = mc::euclidean(2);
    let warp = catalog::expr_warp("1.5 + 0.2*x1^2 - 0.1*x1*x2 + 0.05*x2", &base).unwrap();
    let wp = WarpedProductSpec::new("plane", base, mc::sphere(2), warp).unwrap();
    let cmp = oracle_compare(&wp, &sample_points(&wp, 4, 0.2), 1e-3).unwrap();
    assert!(cmp.residuals.max_linf() < 1e-4, "{:?}", cmp.residuals);
}

#[test]
fn split_three_sphere_is_round() {
    let wp = catalog::sphere_split(2).unwrap();
    for p in sample_points(&wp, 5, 0.1) {
        assert!((scalar_unified(&wp, &p, 1e-3).unwrap() - 6.0).abs() < 1e-6);
        let direct = curvature_direct(&wp.product_metric(), &p, 1e-3).unwrap();
        let g = wp.product_metric().components(&p);
        assert!((&direct.ricci - 2.0 * g).amax() < 1e-6);
    }
}
