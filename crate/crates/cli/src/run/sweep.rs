use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use warpflow::flow::{FlowCoeffs, FlowState};
use warpflow::manifold::{curvature_direct, CurvatureBundle};
use warpflow::warped::sample_points;

use super::flow::simulate;
use super::verify::verify_snapshots;
use super::{status_of, Check, Outcome, Status};
use crate::config::{FlowConfig, ProfileConfig, ScenarioConfig, SweepKind};
use crate::error::Result;
use crate::model;
use crate::output::{num, opt, OutDir, SCHEMA_VERSION};

/// One observed error at one refinement level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub level: usize,
    pub points: Option<usize>,
    /// Time step or finite-difference step.
    pub step: f64,
    pub quantity: String,
    /// Missing on the level used as the reference.
    pub error: Option<f64>,
    /// Observed order against the previous level of the same quantity.
    pub order: Option<f64>,
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// `λ` at the final time when the profile has a closed-form evolution.
fn exact_lambda(cfg: &FlowConfig, start: &FlowState, t: f64) -> Option<Vec<f64>> {
    let ProfileConfig::Catalog(name) = &cfg.profile else {
        return None;
    };
    let kind = name.split(':').next()?.trim();
    let coeffs = start.coeffs;
    let c = start.fiber_einstein_c;
    let at_rest = start
        .lam_vel
        .iter()
        .chain(&start.mu_vel)
        .flatten()
        .all(|v| *v == 0.0);
    let rf = coeffs == FlowCoeffs::RICCI;
    let hgf = coeffs == FlowCoeffs::HYPERBOLIC;
    match kind {
        "cylinder" if rf => Some(
            start
                .lam
                .iter()
                .map(|l| (l * l - 2.0 * c * t).sqrt())
                .collect(),
        ),
        "cylinder" if hgf => {
            let v = start.lam_vel.as_ref()?;
            Some(
                start
                    .lam
                    .iter()
                    .zip(v)
                    .map(|(l, v)| (l * l + 2.0 * l * v * t - c * t * t).sqrt())
                    .collect(),
            )
        }
        "sphere-profile" if (rf || hgf) && at_rest => {
            // λ = R sin x with R² shrinking like the round S^{n+1}
            let n = start.n as f64;
            let r0 = start.mu[0];
            let r2 = if rf {
                r0 * r0 - 2.0 * n * t
            } else {
                r0 * r0 - n * t * t
            };
            Some(
                start
                    .grid
                    .points()
                    .iter()
                    .map(|x| r2.sqrt() * x.sin())
                    .collect(),
            )
        }
        "flat-product" if (rf || hgf) && at_rest => Some(start.lam.clone()),
        _ => None,
    }
}

fn fill_orders(rows: &mut [SweepRow]) {
    for i in 0..rows.len() {
        let prev = rows[..i]
            .iter()
            .rev()
            .find(|r| r.quantity == rows[i].quantity && r.error.is_some());
        rows[i].order = match (prev, rows[i].error) {
            (Some(p), Some(e)) => {
                let (a, b) = (p.step, rows[i].step);
                Some((p.error.unwrap() / e).ln() / (a / b).ln())
            }
            _ => None,
        };
    }
}

fn flow_dt(cfg: &ScenarioConfig, values: &[f64]) -> Result<(Vec<SweepRow>, bool)> {
    let flow = cfg.flow()?;
    let start = model::initial_state(flow)?;
    let sims = values
        .par_iter()
        .map(|dt| {
            let mut f = flow.clone();
            f.dt = *dt;
            f.stride = usize::MAX;
            simulate(&f)
        })
        .collect::<Result<Vec<_>>>()?;
    let singular = sims.iter().any(|s| s.singularity.is_some());
    let exact = exact_lambda(flow, &start, flow.t_end);
    let finest = (0..values.len())
        .min_by(|a, b| values[*a].total_cmp(&values[*b]))
        .unwrap_or(0);
    let quantity = if exact.is_some() {
        "lambda-exact"
    } else {
        "lambda-finest"
    };
    let mut rows: Vec<SweepRow> = sims
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let error = match &exact {
                Some(e) => Some(max_abs_diff(&s.last.lam, e)),
                None if i == finest => None,
                None => Some(max_abs_diff(&s.last.lam, &sims[finest].last.lam)),
            };
            SweepRow {
                level: i,
                points: Some(flow.points),
                step: values[i],
                quantity: quantity.into(),
                error,
                order: None,
            }
        })
        .collect();
    fill_orders(&mut rows);
    Ok((rows, singular))
}

fn oracle_h(cfg: &ScenarioConfig, values: &[f64]) -> Result<Vec<SweepRow>> {
    let c = cfg.curvature()?;
    let mut exact_cfg = c.clone();
    exact_cfg.finite_difference = false;
    let wp = model::warped_product(&exact_cfg)?;
    let fd = wp.without_analytic().product_metric();
    let analytic = wp.product_metric();
    let points = sample_points(&wp, c.samples, c.inset);
    let at = |metric: &warpflow::manifold::MetricField, h: f64| -> Result<Vec<CurvatureBundle>> {
        Ok(points
            .iter()
            .map(|p| curvature_direct(metric, p, h))
            .collect::<std::result::Result<_, _>>()?)
    };
    let finest = values.iter().copied().fold(f64::INFINITY, f64::min);
    let reference = if analytic.has_analytic() {
        Some(at(&analytic, finest)?)
    } else {
        None
    };
    let runs = values
        .par_iter()
        .map(|h| at(&fd, *h))
        .collect::<Result<Vec<_>>>()?;
    let finest_run = values.iter().position(|v| *v == finest).unwrap_or(0);
    let mut rows = Vec::new();
    for quantity in ["riemann", "ricci", "scalar"] {
        for (i, run) in runs.iter().enumerate() {
            let refs = match &reference {
                Some(r) => r,
                None if i == finest_run => {
                    rows.push(SweepRow {
                        level: i,
                        points: None,
                        step: values[i],
                        quantity: quantity.into(),
                        error: None,
                        order: None,
                    });
                    continue;
                }
                None => &runs[finest_run],
            };
            let error = run
                .iter()
                .zip(refs)
                .map(|(a, b)| match quantity {
                    "riemann" => a.riemann.max_abs_diff(&b.riemann),
                    "ricci" => (&a.ricci - &b.ricci).amax(),
                    _ => (a.scalar - b.scalar).abs(),
                })
                .fold(0.0, f64::max);
            rows.push(SweepRow {
                level: i,
                points: None,
                step: values[i],
                quantity: quantity.into(),
                error: Some(error),
                order: None,
            });
        }
    }
    fill_orders(&mut rows);
    Ok(rows)
}

fn verify_grid(cfg: &ScenarioConfig) -> Result<(Vec<SweepRow>, Vec<Check>, bool)> {
    let s = cfg.sweep()?;
    let (flow, v) = (cfg.flow()?, cfg.verify()?);
    let runs = s
        .levels
        .par_iter()
        .map(|l| {
            let mut f = flow.clone();
            f.points = l.points;
            f.dt = l.dt;
            f.t_end = l.dt * s.steps as f64;
            let sim = simulate(&f)?;
            if sim.singularity.is_some() {
                return Ok((sim.last.grid.dx(), None));
            }
            let dx = sim.last.grid.dx();
            Ok((dx, Some(verify_snapshots(v, sim.snapshots)?.summary)))
        })
        .collect::<Result<Vec<_>>>()?;
    let singular = runs.iter().any(|r| r.1.is_none());
    let mut rows = Vec::new();
    for e in &v.equations {
        for (i, (dx, res)) in runs.iter().enumerate() {
            rows.push(SweepRow {
                level: i,
                points: Some(s.levels[i].points),
                step: *dx,
                quantity: e.clone(),
                error: res.as_ref().and_then(|r| r.linf(e)),
                order: None,
            });
        }
    }
    fill_orders(&mut rows);
    let checks = match runs.last() {
        Some((_, Some(finest))) => v
            .equations
            .iter()
            .map(|e| Check::new(e, finest.get(e).unwrap_or_default(), cfg.tolerance(e)))
            .collect(),
        _ => Vec::new(),
    };
    Ok((rows, checks, singular))
}

pub fn run_sweep(cfg: &ScenarioConfig, dir: &OutDir) -> Result<Outcome> {
    let s = cfg.sweep()?;
    let (rows, checks, singular) = match s.kind {
        SweepKind::FlowDt => {
            let (rows, singular) = flow_dt(cfg, &s.values)?;
            (rows, Vec::new(), singular)
        }
        SweepKind::OracleH => (oracle_h(cfg, &s.values)?, Vec::new(), false),
        SweepKind::VerifyGrid => verify_grid(cfg)?,
    };
    let header = [
        "kind", "level", "points", "step", "quantity", "error", "order",
    ]
    .map(String::from);
    let kind = serde_json::to_value(s.kind)?
        .as_str()
        .unwrap_or_default()
        .to_string();
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                kind.clone(),
                r.level.to_string(),
                r.points.map(|p| p.to_string()).unwrap_or_default(),
                num(r.step),
                r.quantity.clone(),
                opt(r.error),
                opt(r.order),
            ]
        })
        .collect();
    dir.csv("sweep.csv", &header, &table)?;
    let in_bounds =
        |o: f64| s.min_order.is_none_or(|m| o >= m) && s.max_order.is_none_or(|m| o <= m);
    let bounded = s.min_order.is_some() || s.max_order.is_some();
    let orders_ok = !bounded
        || rows
            .iter()
            .filter(|r| r.level > 0 && r.error.is_some())
            .all(|r| r.order.is_some_and(in_bounds));
    let status = if singular {
        Status::Singularity
    } else if orders_ok && status_of(&checks) == Status::Pass {
        Status::Pass
    } else {
        Status::Fail
    };
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "mode": cfg.mode,
        "kind": kind,
        "status": status,
        "min_order": s.min_order,
        "max_order": s.max_order,
        "orders_within_bounds": orders_ok,
        "checks": checks,
        "rows": rows,
    });
    Ok(Outcome { status, summary })
}
