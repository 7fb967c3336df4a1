use serde_json::json;
use warpflow::verify::{
    verify_named, EinsteinFiberContext, FlowTrajectory, TrajectoryResiduals, VerifyOptions,
};

use super::flow::{flow_summary, simulate, state_row, write_states, STATE_COLUMNS};
use super::{status_of, Check, Outcome, Status};
use crate::config::{ScenarioConfig, VerifyConfig};
use crate::error::{CliError, Result};
use crate::output::{num, OutDir};

fn options(v: &VerifyConfig) -> VerifyOptions {
    VerifyOptions {
        time_order: v.time_order.into(),
        margin: v.margin,
    }
}

/// Verifies stored snapshots, after applying any configured perturbation.
pub(super) fn verify_snapshots(
    v: &VerifyConfig,
    mut snapshots: Vec<warpflow::flow::FlowState>,
) -> Result<TrajectoryResiduals> {
    if let Some(p) = v.perturb {
        let count = snapshots.len();
        let snap = snapshots.get_mut(p.snapshot).ok_or_else(|| {
            CliError::Config(format!(
                "perturb.snapshot = {} but only {count} snapshots are stored",
                p.snapshot
            ))
        })?;
        snap.lam.iter_mut().for_each(|l| *l *= p.lambda_scale);
    }
    let traj = FlowTrajectory::new(snapshots)?;
    let ctx = v
        .einstein_fiber
        .then(|| EinsteinFiberContext::for_state(&traj.snapshots()[0]));
    Ok(verify_named(
        &traj,
        ctx.as_ref(),
        &options(v),
        &v.equations,
    )?)
}

pub fn run_verify(cfg: &ScenarioConfig, dir: &OutDir) -> Result<Outcome> {
    let v = cfg.verify()?;
    let sim = simulate(cfg.flow()?)?;
    write_states(cfg, dir, &sim)?;
    let mut header: Vec<String> = STATE_COLUMNS.iter().map(|s| s.to_string()).collect();
    if sim.singularity.is_some() {
        let rows: Vec<Vec<String>> = sim.snapshots.iter().map(state_row).collect();
        dir.csv("flow.csv", &header, &rows)?;
        return Ok(Outcome {
            status: Status::Singularity,
            summary: flow_summary(cfg, &sim),
        });
    }
    let res = verify_snapshots(v, sim.snapshots.clone())?;
    for e in &v.equations {
        header.push(format!("res.{e}.linf"));
        header.push(format!("res.{e}.l2"));
    }
    let rows: Vec<Vec<String>> = sim
        .snapshots
        .iter()
        .map(|s| {
            let mut row = state_row(s);
            let report = res.reports.iter().find(|r| r.t == Some(s.t));
            for e in &v.equations {
                match report.and_then(|r| r.get(e)) {
                    Some(r) => row.extend([num(r.linf), num(r.l2)]),
                    None => row.extend([String::new(), String::new()]),
                }
            }
            row
        })
        .collect();
    dir.csv("flow.csv", &header, &rows)?;
    let checks: Vec<Check> = v
        .equations
        .iter()
        .map(|e| {
            let r = res.summary.get(e).unwrap_or_default();
            Check::new(e, r, cfg.tolerance(e))
        })
        .collect();
    let status = status_of(&checks);
    let mut summary = flow_summary(cfg, &sim);
    summary["status"] = json!(status);
    summary["checks"] = json!(checks);
    summary["verified_snapshots"] = json!(res.reports.len());
    summary["perturbed"] = json!(v.perturb.is_some());
    Ok(Outcome { status, summary })
}
