use serde_json::json;
use warpflow::warped::{oracle_compare, sample_points};

use super::{status_of, Check, Outcome};
use crate::config::ScenarioConfig;
use crate::error::Result;
use crate::model;
use crate::output::{num, OutDir, SCHEMA_VERSION};

pub fn run_curvature(cfg: &ScenarioConfig, dir: &OutDir) -> Result<Outcome> {
    let c = cfg.curvature()?;
    let wp = model::warped_product(c)?;
    let points = sample_points(&wp, c.samples, c.inset);
    let cmp = oracle_compare(&wp, &points, c.h)?;
    let header = ["point", "coords", "unified_scalar", "oracle_scalar"].map(String::from);
    let rows: Vec<Vec<String>> = (0..points.len())
        .map(|i| {
            let coords: Vec<String> = points[i].iter().map(|x| num(*x)).collect();
            vec![
                i.to_string(),
                coords.join(" "),
                num(cmp.unified_scalar[i]),
                num(cmp.oracle_scalar[i]),
            ]
        })
        .collect();
    dir.csv("curvature.csv", &header, &rows)?;
    let checks: Vec<Check> = cmp
        .residuals
        .residuals
        .iter()
        .map(|(name, r)| Check::new(name, *r, cfg.tolerance(name)))
        .collect();
    let status = status_of(&checks);
    let stats = |v: &[f64]| {
        let (lo, hi) = v
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                (a.min(*x), b.max(*x))
            });
        json!({"min": lo, "max": hi, "mean": v.iter().sum::<f64>() / v.len() as f64})
    };
    let summary = json!({
        "schema_version": SCHEMA_VERSION,
        "mode": cfg.mode,
        "status": status,
        "spec": wp.label(),
        "dim": wp.dim(),
        "samples": points.len(),
        "finite_difference": c.finite_difference,
        "checks": checks,
        "unified_scalar": stats(&cmp.unified_scalar),
        "oracle_scalar": stats(&cmp.oracle_scalar),
    });
    Ok(Outcome { status, summary })
}
