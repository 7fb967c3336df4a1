//! Scenario configuration, read from a single strict JSON document.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use warpflow::flow::{Boundary, FlowCoeffs, Scheme};
use warpflow::verify::TimeOrder;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Curvature,
    Flow,
    Verify,
    Sweep,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub mode: Mode,
    #[serde(default)]
    pub curvature: Option<CurvatureConfig>,
    #[serde(default)]
    pub flow: Option<FlowConfig>,
    #[serde(default)]
    pub verify: Option<VerifyConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    /// Residual name to tolerance; `default` applies to unnamed ones.
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A warped product by catalog name or spelled out.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpecConfig {
    Catalog(String),
    Inline(InlineSpec),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineSpec {
    /// Metric catalog name of the base, e.g. `interval:0,1`.
    pub base: String,
    pub fiber: String,
    /// Warping function in the base coordinates `x1..xd`.
    pub warp: String,
    /// Einstein constant of the fiber; looked up from the catalog when absent.
    #[serde(default)]
    pub einstein_c: Option<f64>,
}

fn default_samples() -> usize {
    8
}

fn default_inset() -> f64 {
    0.1
}

fn default_h() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    pub spec: SpecConfig,
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Fraction of each bounded extent kept clear of the boundary.
    #[serde(default = "default_inset")]
    pub inset: f64,
    #[serde(default = "default_h")]
    pub h: f64,
    /// Drop analytic jets so every derivative is a finite difference.
    #[serde(default)]
    pub finite_difference: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileConfig {
    Catalog(String),
    Inline(InlineProfile),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryConfig {
    Periodic,
    Neumann,
    Pole,
}

impl From<BoundaryConfig> for Boundary {
    fn from(b: BoundaryConfig) -> Self {
        match b {
            BoundaryConfig::Periodic => Boundary::Periodic,
            BoundaryConfig::Neumann => Boundary::Neumann,
            BoundaryConfig::Pole => Boundary::Pole,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineProfile {
    pub domain: [f64; 2],
    pub boundary: BoundaryConfig,
    /// `λ(x)` and `μ(x)` as expressions in `x1`.
    pub lambda: String,
    pub mu: String,
    /// Fiber dimension.
    pub n: usize,
    /// Einstein constant of the fiber sphere.
    pub c: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffsConfig {
    Named(String),
    Explicit(ExplicitCoeffs),
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CoeffsConfig {
    pub fn resolve(&self) -> Result<FlowCoeffs> {
        let c = match self {
            CoeffsConfig::Named(s) => match s.as_str() {
                "ricci" => FlowCoeffs::RICCI,
                "hyperbolic" => FlowCoeffs::HYPERBOLIC,
                other => {
                    return Err(CliError::Config(format!(
                        "unknown flow {other:?}; use \"ricci\", \"hyperbolic\" or explicit coefficients"
                    )))
                }
            },
            CoeffsConfig::Explicit(e) => FlowCoeffs::new(e.alpha, e.beta, e.gamma),
        };
        c.check_evolution()?;
        Ok(c)
    }
}

/// Initial velocities for second-order flows, as expressions in `x1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VelocityConfig {
    #[serde(default = "zero")]
    pub lambda: String,
    #[serde(default = "zero")]
    pub mu: String,
}

fn zero() -> String {
    "0".into()
}

fn default_stride() -> usize {
    10
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub profile: ProfileConfig,
    pub coeffs: CoeffsConfig,
    pub points: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default)]
    pub lam_min: Option<f64>,
    #[serde(default)]
    pub k_max: Option<f64>,
    #[serde(default)]
    pub velocity: Option<VelocityConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeOrderConfig {
    #[default]
    Second,
    Fourth,
}

impl From<TimeOrderConfig> for TimeOrder {
    fn from(t: TimeOrderConfig) -> Self {
        match t {
            TimeOrderConfig::Second => TimeOrder::Second,
            TimeOrderConfig::Fourth => TimeOrder::Fourth,
        }
    }
}

/// Scales `λ` on one stored snapshot before verification.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    pub snapshot: usize,
    pub lambda_scale: f64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfig {
    pub equations: Vec<String>,
    #[serde(default)]
    pub time_order: TimeOrderConfig,
    /// Distance kept from non-periodic ends; defaults to a tenth of the interval.
    #[serde(default)]
    pub margin: Option<f64>,
    /// Whether the verifier is told the fiber is Einstein.
    #[serde(default = "yes")]
    pub einstein_fiber: bool,
    #[serde(default)]
    pub perturb: Option<PerturbConfig>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridLevel {
    pub points: usize,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    /// `values` are time steps for the `flow` section, compared with the exact
    /// solution when one is known and with the smallest step otherwise.
    FlowDt,
    /// `values` are finite-difference steps for the `curvature` section,
    /// compared with analytic jets.
    OracleH,
    /// `levels` of the `flow` section, each run for `steps` steps and checked
    /// with the `verify` section.
    VerifyGrid,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub kind: SweepKind,
    #[serde(default)]
    pub values: Vec<f64>,
    #[serde(default)]
    pub levels: Vec<GridLevel>,
    #[serde(default)]
    pub steps: usize,
    /// Bounds on every observed order; a violation fails the run.
    #[serde(default)]
    pub min_order: Option<f64>,
    #[serde(default)]
    pub max_order: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<String>,
    /// Write every stored snapshot to `snapshots.json`.
    #[serde(default)]
    pub snapshots: bool,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn need<'a, T>(&self, section: &'a Option<T>, name: &str) -> Result<&'a T> {
        section.as_ref().ok_or_else(|| {
            CliError::Config(format!("mode {:?} needs a \"{name}\" section", self.mode))
        })
    }

    pub fn curvature(&self) -> Result<&CurvatureConfig> {
        self.need(&self.curvature, "curvature")
    }

    pub fn flow(&self) -> Result<&FlowConfig> {
        self.need(&self.flow, "flow")
    }

    pub fn verify(&self) -> Result<&VerifyConfig> {
        self.need(&self.verify, "verify")
    }

    pub fn sweep(&self) -> Result<&SweepConfig> {
        self.need(&self.sweep, "sweep")
    }

    /// Tolerance for a residual name.
    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .or_else(|| self.tolerances.get("default"))
            .copied()
            .unwrap_or(1e-6)
    }

    /// Checks everything that can be checked without building a model.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CliError::Config(msg));
        for (k, v) in &self.tolerances {
            if !(*v > 0.0 && v.is_finite()) {
                return bad(format!("tolerance {k:?} must be positive, got {v}"));
            }
        }
        let known = known_residuals(self.mode, self.sweep.as_ref());
        if let Some(k) = self
            .tolerances
            .keys()
            .find(|k| *k != "default" && !known.contains(&k.as_str()))
        {
            return bad(format!(
                "tolerance for unknown residual {k:?} in mode {:?}",
                self.mode
            ));
        }
        match self.mode {
            Mode::Curvature => self.curvature()?.validate()?,
            Mode::Flow => self.flow()?.validate()?,
            Mode::Verify => {
                self.flow()?.validate()?;
                self.verify()?.validate()?;
            }
            Mode::Sweep => {
                let s = self.sweep()?;
                let grid_fields = !s.levels.is_empty() || s.steps != 0;
                match s.kind {
                    SweepKind::FlowDt | SweepKind::OracleH => {
                        if s.kind == SweepKind::FlowDt {
                            self.flow()?.validate()?;
                        } else {
                            self.curvature()?.validate()?;
                        }
                        positive_list("sweep.values", &s.values)?;
                        if grid_fields {
                            return bad(format!(
                                "sweep kind {:?} takes values, not levels or steps",
                                s.kind
                            ));
                        }
                    }
                    SweepKind::VerifyGrid => {
                        self.flow()?.validate()?;
                        self.verify()?.validate()?;
                        if s.levels.is_empty() || s.steps == 0 || !s.values.is_empty() {
                            return bad("verify-grid takes levels and a positive step count".into());
                        }
                        for l in &s.levels {
                            if l.points < 5 || l.dt.is_nan() || l.dt <= 0.0 {
                                return bad(format!("bad grid level {l:?}"));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

fn positive_list(what: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() || values.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
        return Err(CliError::Config(format!(
            "{what} must be a non-empty list of positive numbers"
        )));
    }
    Ok(())
}

impl CurvatureConfig {
    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(CliError::Config("samples must be at least 1".into()));
        }
        if self.h.is_nan() || self.h <= 0.0 || !(0.0..0.5).contains(&self.inset) {
            return Err(CliError::Config(format!(
                "need h > 0 and 0 <= inset < 0.5, got h = {} and inset = {}",
                self.h, self.inset
            )));
        }
        Ok(())
    }
}

impl FlowConfig {
    fn validate(&self) -> Result<()> {
        self.coeffs.resolve()?;
        if self.points < 5 {
            return Err(CliError::Config(format!(
                "points = {} but at least 5 are needed",
                self.points
            )));
        }
        for (name, v) in [("dt", self.dt), ("t_end", self.t_end)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if self.stride == 0 {
            return Err(CliError::Config("stride must be at least 1".into()));
        }
        Ok(())
    }
}

impl VerifyConfig {
    fn validate(&self) -> Result<()> {
        if self.equations.is_empty() {
            return Err(CliError::Config("verify.equations is empty".into()));
        }
        if let Some(e) = self
            .equations
            .iter()
            .find(|e| !warpflow::verify::RESIDUAL_NAMES.contains(&e.as_str()))
        {
            return Err(CliError::Config(format!(
                "unknown equation {e:?}; known: {}",
                warpflow::verify::RESIDUAL_NAMES.join(", ")
            )));
        }
        if let Some(p) = self.perturb {
            if !(p.lambda_scale > 0.0 && p.lambda_scale.is_finite()) {
                return Err(CliError::Config(
                    "perturb.lambda_scale must be positive".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Residual names that may carry a tolerance in a mode.
pub fn known_residuals(mode: Mode, sweep: Option<&SweepConfig>) -> Vec<&'static str> {
    const CURVATURE: [&str; 5] = ["connection", "riemann", "ricci", "scalar", "cross-ricci"];
    match (mode, sweep.map(|s| s.kind)) {
        (Mode::Curvature, _) | (Mode::Sweep, Some(SweepKind::OracleH)) => CURVATURE.to_vec(),
        (Mode::Flow, _) => Vec::new(),
        _ => warpflow::verify::RESIDUAL_NAMES.to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = ScenarioConfig::from_json(r#"{"mode": "flow", "flwo": {}}"#).unwrap_err();
        assert!(err.to_string().contains("flwo"), "{err}");
        let nested =
            r#"{"mode": "curvature", "curvature": {"spec": "sphere-split:2", "sample": 3}}"#;
        assert!(ScenarioConfig::from_json(nested).is_err());
    }

    #[test]
    fn tolerance_names_are_checked() {
        let base =
            r#"{"mode": "curvature", "curvature": {"spec": "sphere-split:2"}, "tolerances": TOL}"#;
        assert!(ScenarioConfig::from_json(&base.replace("TOL", r#"{"ricci": 1e-6}"#)).is_ok());
        assert!(ScenarioConfig::from_json(&base.replace("TOL", r#"{"ricc": 1e-6}"#)).is_err());
        assert!(ScenarioConfig::from_json(&base.replace("TOL", r#"{"ricci": -1}"#)).is_err());
        let cfg =
            ScenarioConfig::from_json(&base.replace("TOL", r#"{"default": 1e-3, "scalar": 1e-9}"#))
                .unwrap();
        assert_eq!(cfg.tolerance("scalar"), 1e-9);
        assert_eq!(cfg.tolerance("ricci"), 1e-3);
    }

    #[test]
    fn sections_follow_the_mode() {
        assert!(ScenarioConfig::from_json(r#"{"mode": "verify"}"#).is_err());
        let text = r#"{
            "mode": "sweep",
            "flow": {"profile": "cylinder:2,1", "coeffs": "ricci", "points": 11, "dt": 1e-3, "t_end": 0.1},
            "sweep": {"kind": "flow-dt", "values": [1e-3, 5e-4], "min_order": 3.5}
        }"#;
        let cfg = ScenarioConfig::from_json(text).unwrap();
        assert_eq!(cfg.sweep().unwrap().kind, SweepKind::FlowDt);
        assert!(ScenarioConfig::from_json(
            &text.replace("\"min_order\"", "\"steps\": 4, \"min_order\"")
        )
        .is_err());
        let inline = r#"{
            "mode": "flow",
            "flow": {
                "profile": {"domain": [0, 1], "boundary": "neumann", "lambda": "1", "mu": "1", "n": 2, "c": 1},
                "coeffs": {"alpha": 0, "beta": 1, "gamma": 0.5},
                "points": 11, "dt": 1e-3, "t_end": 0.1, "scheme": "euler"
            }
        }"#;
        assert!(ScenarioConfig::from_json(inline).is_ok());
        assert!(ScenarioConfig::from_json(&inline.replace("\"euler\"", "\"midpoint\"")).is_err());
        assert!(ScenarioConfig::from_json(
            &inline.replace("\"gamma\": 0.5", "\"gamma\": 0.5, \"delta\": 1")
        )
        .is_err());
    }
}
