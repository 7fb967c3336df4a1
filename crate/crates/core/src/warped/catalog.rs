//! Built-in warped products, addressable by name.
//!
//! | name                   | base            | fiber        | λ            |
//! |------------------------|-----------------|--------------|--------------|
//! | `cylinder:n,r0`        | `[-1, 1]`       | unit `S^n`   | `r0`         |
//! | `sphere-split:m2`      | `[0, π]`        | unit `S^m2`  | `sin s`      |
//! | `bump-warp:n`          | circle `[0,2π)` | unit `S^n`   | `2 + cos x`  |
//! | `direct:<base>/<fib>`  | any metric name | any metric   | `1`          |
//!
//! Fibers that are round spheres, flat or hyperbolic are declared Einstein.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};

use super::WarpedProductSpec;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::manifold::{catalog as mc, Domain, MetricField, ScalarField, ScalarJet};

/// Einstein constant of a catalog metric, when it has one.
pub fn einstein_constant(metric_name: &str) -> Option<f64> {
    let (kind, arg) = metric_name.split_once(':')?;
    let n: usize = arg.trim().parse().ok()?;
    match kind.trim() {
        "sphere" if n >= 2 => Some(n as f64 - 1.0),
        "euclidean" => Some(0.0),
        "hyperbolic" if n == 2 => Some(-1.0),
        _ => None,
    }
}

fn one_d_warp(
    label: &str,
    domain: Domain,
    f: impl Fn(f64) -> (f64, f64, f64) + Send + Sync + Clone + 'static,
) -> ScalarField {
    let g = f.clone();
    ScalarField::new(label, domain, move |x| f(x[0]).0).with_analytic(move |x| {
        let (v, d, dd) = g(x[0]);
        ScalarJet {
            value: v,
            grad: DVector::from_element(1, d),
            hess: DMatrix::from_element(1, 1, dd),
        }
    })
}

fn fiber_sphere(n: usize) -> Result<MetricField> {
    if n < 2 {
        return Err(Error::InvalidSpec(format!(
            "fiber dimension m2 = {n} but the curvature formulas require m2 >= 2"
        )));
    }
    Ok(mc::sphere(n))
}

/// `ds² + r0² g_{S^n}` over `s ∈ [-1, 1]`.
pub fn cylinder(n: usize, r0: f64) -> Result<WarpedProductSpec> {
    if r0.is_nan() || r0 <= 0.0 {
        return Err(Error::InvalidSpec(format!(
            "cylinder radius {r0} must be positive"
        )));
    }
    let base = mc::interval(-1.0, 1.0);
    let warp = ScalarField::constant(base.domain().clone(), r0);
    Ok(
        WarpedProductSpec::new(format!("cylinder:{n},{r0}"), base, fiber_sphere(n)?, warp)?
            .with_einstein(n as f64 - 1.0),
    )
}

/// Round unit `S^{m2+1}` as `ds² + sin²s g_{S^m2}` over `s ∈ [0, π]`.
pub fn sphere_split(m2: usize) -> Result<WarpedProductSpec> {
    let base = mc::interval(0.0, PI);
    let warp = one_d_warp("sin(x1)", base.domain().clone(), |s| {
        (s.sin(), s.cos(), -s.sin())
    });
    Ok(
        WarpedProductSpec::new(format!("sphere-split:{m2}"), base, fiber_sphere(m2)?, warp)?
            .with_einstein(m2 as f64 - 1.0),
    )
}

/// `dx² + (2 + cos x)² g_{S^n}` on the circle of length 2π.
pub fn bump_warp(n: usize) -> Result<WarpedProductSpec> {
    let base = mc::circle(TAU);
    let warp = one_d_warp("2+cos(x1)", base.domain().clone(), |x| {
        (2.0 + x.cos(), -x.sin(), -x.cos())
    });
    Ok(
        WarpedProductSpec::new(format!("bump-warp:{n}"), base, fiber_sphere(n)?, warp)?
            .with_einstein(n as f64 - 1.0),
    )
}

/// Unwarped product of two catalog metrics.
pub fn direct(base_name: &str, fiber_name: &str) -> Result<WarpedProductSpec> {
    let base = mc::from_name(base_name)?;
    let fiber = mc::from_name(fiber_name)?;
    let warp = ScalarField::constant(base.domain().clone(), 1.0);
    let wp = WarpedProductSpec::new(
        format!("direct:{base_name}/{fiber_name}"),
        base,
        fiber,
        warp,
    )?;
    Ok(match einstein_constant(fiber_name) {
        Some(c) => wp.with_einstein(c),
        None => wp,
    })
}

/// Warping function from an expression in the base coordinates (finite differences only).
pub fn expr_warp(src: &str, base: &MetricField) -> Result<ScalarField> {
    let e = Expr::parse(src, base.dim())?;
    Ok(ScalarField::new(src, base.domain().clone(), move |x| {
        e.eval(x)
    }))
}

/// Looks up a warped product by catalog name.
pub fn from_name(name: &str) -> Result<WarpedProductSpec> {
    let (kind, arg) = name.split_once(':').unwrap_or((name, ""));
    let bad = || Error::UnknownCatalog(name.to_string());
    let count = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    match kind.trim() {
        "cylinder" => {
            let (n, r0) = arg.split_once(',').ok_or_else(bad)?;
            let r0: f64 = r0.trim().parse().map_err(|_| bad())?;
            cylinder(count(n)?, r0)
        }
        "sphere-split" => sphere_split(count(arg)?),
        "bump-warp" => bump_warp(count(arg)?),
        "direct" => {
            let (b, f) = arg.split_once('/').ok_or_else(bad)?;
            direct(b.trim(), f.trim())
        }
        _ => Err(bad()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_lookup() {
        assert_eq!(from_name("cylinder:3,0.5").unwrap().dim(), 4);
        assert_eq!(from_name("sphere-split:2").unwrap().einstein_c(), Some(1.0));
        assert_eq!(from_name("bump-warp:2").unwrap().m1(), 1);
        let d = from_name("direct:euclidean:2/euclidean:2").unwrap();
        assert_eq!(d.einstein_c(), Some(0.0));
        assert!(from_name("sphere-split:1")
            .unwrap_err()
            .to_string()
            .contains("m2 >= 2"));
        assert!(from_name("cylinder:2").is_err());
        assert!(from_name("cylinder:2,-1").is_err());
        assert!(from_name("torus:2").is_err());
    }

    #[test]
    fn expression_warp() {
        let base = mc::interval(0.0, 1.0);
        let w = expr_warp("1 + x^2", &base).unwrap();
        assert_eq!(w.eval(&[0.5]), 1.25);
        assert!(expr_warp("x2", &base).is_err());
    }
}
