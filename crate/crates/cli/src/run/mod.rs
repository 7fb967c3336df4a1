//! One function per mode. Each writes its files and returns the outcome.

mod curvature;
mod flow;
mod sweep;
mod verify;

use std::path::Path;

use serde::Serialize;
use warpflow::report::Residual;

use crate::config::{Mode, ScenarioConfig};
use crate::error::{exit, Result};
use crate::output::OutDir;

pub use curvature::run_curvature;
pub use flow::{run_flow, simulate, Simulation, Singularity};
pub use sweep::{run_sweep, SweepRow};
pub use verify::run_verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Singularity,
}

/// A residual norm against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub linf: f64,
    pub l2: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Check {
    pub fn new(name: &str, r: Residual, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            linf: r.linf,
            l2: r.l2,
            tolerance,
            // NaN fails
            pass: r.linf <= tolerance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub summary: serde_json::Value,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            Status::Pass => exit::OK,
            Status::Fail => exit::TOLERANCE,
            Status::Singularity => exit::SINGULARITY,
        }
    }

    pub fn checks(&self) -> Vec<Check> {
        self.summary["checks"]
            .as_array()
            .map(|a| {
                a.iter()
                    .map(|c| Check {
                        name: c["name"].as_str().unwrap_or_default().to_string(),
                        linf: c["linf"].as_f64().unwrap_or(f64::NAN),
                        l2: c["l2"].as_f64().unwrap_or(f64::NAN),
                        tolerance: c["tolerance"].as_f64().unwrap_or(f64::NAN),
                        pass: c["pass"].as_bool().unwrap_or(false),
                    })
                    .collect()
            })
            .unwrap_or_default()
    }
}

pub(crate) fn status_of(checks: &[Check]) -> Status {
    if checks.iter().all(|c| c.pass) {
        Status::Pass
    } else {
        Status::Fail
    }
}

/// Runs the scenario, writing into `out`.
pub fn run(cfg: &ScenarioConfig, out: &Path) -> Result<Outcome> {
    cfg.validate()?;
    let dir = OutDir::create(out)?;
    let outcome = match cfg.mode {
        Mode::Curvature => run_curvature(cfg, &dir)?,
        Mode::Flow => run_flow(cfg, &dir)?,
        Mode::Verify => run_verify(cfg, &dir)?,
        Mode::Sweep => run_sweep(cfg, &dir)?,
    };
    dir.json("summary.json", &outcome.summary)?;
    Ok(outcome)
}
