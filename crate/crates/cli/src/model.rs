//! Builds core objects from configuration sections.

use warpflow::flow::{profiles, FlowState, Grid};
use warpflow::manifold::catalog as mc;
use warpflow::warped::{catalog, WarpedProductSpec};

use crate::config::{CurvatureConfig, FlowConfig, ProfileConfig, SpecConfig};
use crate::error::{CliError, Result};

pub fn warped_product(cfg: &CurvatureConfig) -> Result<WarpedProductSpec> {
    let wp = match &cfg.spec {
        SpecConfig::Catalog(name) => catalog::from_name(name)?,
        SpecConfig::Inline(s) => {
            let base = mc::from_name(&s.base)?;
            let fiber = mc::from_name(&s.fiber)?;
            let warp = catalog::expr_warp(&s.warp, &base)?;
            let label = format!("{}x_{{{}}}{}", s.base, s.warp, s.fiber);
            let wp = WarpedProductSpec::new(label, base, fiber, warp)?;
            match s
                .einstein_c
                .or_else(|| catalog::einstein_constant(&s.fiber))
            {
                Some(c) => wp.with_einstein(c),
                None => wp,
            }
        }
    };
    Ok(if cfg.finite_difference {
        wp.without_analytic()
    } else {
        wp
    })
}

/// Initial state of a flow section.
pub fn initial_state(cfg: &FlowConfig) -> Result<FlowState> {
    let coeffs = cfg.coeffs.resolve()?;
    let mut state = match &cfg.profile {
        ProfileConfig::Catalog(name) => profiles::from_name(name, cfg.points, coeffs)?,
        ProfileConfig::Inline(p) => {
            let grid = Grid::new(cfg.points, p.domain[0], p.domain[1], p.boundary.into())?;
            profiles::from_exprs(grid, &p.lambda, &p.mu, coeffs, p.n, p.c)?
        }
    };
    if let Some(v) = &cfg.velocity {
        if !coeffs.is_second_order() {
            return Err(CliError::Config(
                "initial velocities only apply to second-order flows (alpha > 0)".into(),
            ));
        }
        let eval = |src: &str| -> Result<Vec<f64>> {
            let e = warpflow::expr::Expr::parse(src, 1)?;
            Ok(state.grid.points().iter().map(|x| e.eval(&[*x])).collect())
        };
        let (mv, lv) = (eval(&v.mu)?, eval(&v.lambda)?);
        state = state.with_velocities(mv, lv)?;
    }
    if cfg.lam_min.is_some() || cfg.k_max.is_some() {
        let lam_min = cfg.lam_min.unwrap_or(state.lam_min);
        let k_max = cfg.k_max.unwrap_or(state.k_max);
        state = state.with_limits(lam_min, k_max)?;
    }
    Ok(state)
}
