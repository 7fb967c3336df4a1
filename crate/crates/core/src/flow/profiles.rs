//! Initial profiles for the rotationally symmetric flows.
//!
//! | name                 | grid                      | λ            | μ   | c     |
//! |----------------------|---------------------------|--------------|-----|-------|
//! | `cylinder:n,r0`      | `[-1, 1]`, Neumann        | `r0`         | 1   | n − 1 |
//! | `sphere-profile:n,R` | `(0, π)`, poles           | `R sin x`    | `R` | n − 1 |
//! | `bump-warp:n`        | `[0, 2π)`, periodic       | `2 + cos x`  | 1   | n − 1 |
//! | `flat-product:n`     | `[0, 2π)`, periodic       | 1            | 1   | 0     |

use std::f64::consts::{PI, TAU};

use super::{Boundary, FlowCoeffs, FlowState, Grid};
use crate::error::{Error, Result};
use crate::expr::Expr;

fn build(
    grid: Grid,
    lam: impl Fn(f64) -> f64,
    mu: impl Fn(f64) -> f64,
    coeffs: FlowCoeffs,
    n: usize,
    c: f64,
) -> Result<FlowState> {
    let xs = grid.points();
    let lam = xs.iter().map(|x| lam(*x)).collect();
    let mu = xs.iter().map(|x| mu(*x)).collect();
    FlowState::new(grid, mu, lam, coeffs, n, c)
}

pub fn cylinder(n: usize, r0: f64, points: usize, coeffs: FlowCoeffs) -> Result<FlowState> {
    let grid = Grid::new(points, -1.0, 1.0, Boundary::Neumann)?;
    build(grid, |_| r0, |_| 1.0, coeffs, n, n as f64 - 1.0)
}

/// Round sphere of radius `r` written as `r² (dx² + sin²x g_{S^n})`.
pub fn sphere_profile(n: usize, r: f64, points: usize, coeffs: FlowCoeffs) -> Result<FlowState> {
    let grid = Grid::new(points, 0.0, PI, Boundary::Pole)?;
    build(grid, |x| r * x.sin(), |_| r, coeffs, n, n as f64 - 1.0)
}

pub fn bump_warp(n: usize, points: usize, coeffs: FlowCoeffs) -> Result<FlowState> {
    let grid = Grid::new(points, 0.0, TAU, Boundary::Periodic)?;
    build(grid, |x| 2.0 + x.cos(), |_| 1.0, coeffs, n, n as f64 - 1.0)
}

pub fn flat_product(n: usize, points: usize, coeffs: FlowCoeffs) -> Result<FlowState> {
    let grid = Grid::new(points, 0.0, TAU, Boundary::Periodic)?;
    build(grid, |_| 1.0, |_| 1.0, coeffs, n, 0.0)
}

/// Profiles given as expressions in `x`.
pub fn from_exprs(
    grid: Grid,
    lam: &str,
    mu: &str,
    coeffs: FlowCoeffs,
    n: usize,
    c: f64,
) -> Result<FlowState> {
    let (l, m) = (Expr::parse(lam, 1)?, Expr::parse(mu, 1)?);
    build(grid, |x| l.eval(&[x]), |x| m.eval(&[x]), coeffs, n, c)
}

/// Looks up an initial profile by catalog name.
pub fn from_name(name: &str, points: usize, coeffs: FlowCoeffs) -> Result<FlowState> {
    let bad = || Error::UnknownCatalog(name.to_string());
    let (kind, arg) = name.split_once(':').ok_or_else(bad)?;
    let count = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let pair = |s: &str| -> Result<(usize, f64)> {
        let (a, b) = s.split_once(',').ok_or_else(bad)?;
        let v: f64 = b.trim().parse().map_err(|_| bad())?;
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidSpec(format!(
                "{name}: radius must be positive"
            )));
        }
        Ok((count(a)?, v))
    };
    match kind.trim() {
        "cylinder" => {
            let (n, r0) = pair(arg)?;
            cylinder(n, r0, points, coeffs)
        }
        "sphere-profile" => {
            let (n, r) = pair(arg)?;
            sphere_profile(n, r, points, coeffs)
        }
        "bump-warp" => bump_warp(count(arg)?, points, coeffs),
        "flat-product" => flat_product(count(arg)?, points, coeffs),
        _ => Err(bad()),
    }
}
