use serde::Serialize;
use serde_json::json;
use warpflow::error::Error as CoreError;
use warpflow::flow::{integrate, sectional_curvatures, FlowState, Stepper};

use super::{Outcome, Status};
use crate::config::{FlowConfig, ScenarioConfig};
use crate::error::Result;
use crate::model;
use crate::output::{num, OutDir, SCHEMA_VERSION};

#[derive(Debug, Clone, Serialize)]
pub struct Singularity {
    pub t: f64,
    pub reason: String,
}

/// Stored snapshots and the state the run ended on.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub snapshots: Vec<FlowState>,
    pub last: FlowState,
    pub singularity: Option<Singularity>,
}

/// Integrates a flow section. A singularity ends the run early and is
/// reported, not raised.
pub fn simulate(cfg: &FlowConfig) -> Result<Simulation> {
    let start = model::initial_state(cfg)?;
    let stepper = Stepper::new(cfg.scheme);
    let mut snapshots = Vec::new();
    let res = integrate(&start, cfg.dt, cfg.t_end, &stepper, cfg.stride, |s| {
        snapshots.push(s.clone());
        Ok(())
    });
    match res {
        Ok(last) => Ok(Simulation {
            snapshots,
            last,
            singularity: None,
        }),
        Err(CoreError::SingularityReached { t, reason, state }) => Ok(Simulation {
            snapshots,
            last: *state,
            singularity: Some(Singularity { t, reason }),
        }),
        Err(e) => Err(e.into()),
    }
}

pub(super) const STATE_COLUMNS: [&str; 7] = [
    "t",
    "lambda_min",
    "lambda_max",
    "mu_min",
    "mu_max",
    "k_rad_abs_max",
    "k_sph_abs_max",
];

pub(super) fn state_row(s: &FlowState) -> Vec<String> {
    let (lmin, lmax) = FlowState::range(&s.lam);
    let (mmin, mmax) = FlowState::range(&s.mu);
    let amax = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let (kr, ks) = match sectional_curvatures(s) {
        Ok((kr, ks)) => (amax(&kr), amax(&ks)),
        Err(_) => (f64::NAN, f64::NAN),
    };
    [s.t, lmin, lmax, mmin, mmax, kr, ks].map(num).to_vec()
}

/// Writes `snapshots.json` (when asked for) and `final_state.json`.
pub(super) fn write_states(cfg: &ScenarioConfig, dir: &OutDir, sim: &Simulation) -> Result<()> {
    if cfg.output.snapshots {
        dir.json("snapshots.json", &sim.snapshots)?;
    }
    dir.json("final_state.json", &sim.last)
}

pub(super) fn flow_summary(cfg: &ScenarioConfig, sim: &Simulation) -> serde_json::Value {
    let f = cfg.flow.as_ref().expect("validated");
    let (lmin, _) = FlowState::range(&sim.last.lam);
    json!({
        "schema_version": SCHEMA_VERSION,
        "mode": cfg.mode,
        "status": if sim.singularity.is_some() { Status::Singularity } else { Status::Pass },
        "t_end": f.t_end,
        "t_final": sim.last.t,
        "snapshots": sim.snapshots.len(),
        "lambda_min_final": lmin,
        "singularity": sim.singularity,
    })
}

pub fn run_flow(cfg: &ScenarioConfig, dir: &OutDir) -> Result<Outcome> {
    let sim = simulate(cfg.flow()?)?;
    let header: Vec<String> = STATE_COLUMNS.iter().map(|s| s.to_string()).collect();
    let rows: Vec<Vec<String>> = sim.snapshots.iter().map(state_row).collect();
    dir.csv("flow.csv", &header, &rows)?;
    write_states(cfg, dir, &sim)?;
    let status = if sim.singularity.is_some() {
        Status::Singularity
    } else {
        Status::Pass
    };
    Ok(Outcome {
        status,
        summary: flow_summary(cfg, &sim),
    })
}
