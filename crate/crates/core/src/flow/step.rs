use serde::{Deserialize, Serialize};

use super::{unified_rhs, Boundary, FlowState, Rhs};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    #[default]
    Rk4,
    Euler,
}

/// Time stepper with step-size safety factors.
///
/// First-order flows (`α = 0`) need `Δt ≤ σ_p β Δx² min μ²`; second-order
/// flows need `Δt ≤ σ_h √α Δx min μ`. Pole grids divide these by
/// `1.5 (1 + (n−1)/2)` and `√(1 + (n−1)/2)` respectively.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stepper {
    pub scheme: Scheme,
    pub sigma_parabolic: f64,
    pub sigma_hyperbolic: f64,
}

impl Stepper {
    pub fn new(scheme: Scheme) -> Self {
        let sigma_parabolic = match scheme {
            Scheme::Rk4 => 0.5,
            Scheme::Euler => 0.25,
        };
        Self {
            scheme,
            sigma_parabolic,
            sigma_hyperbolic: 0.5,
        }
    }

    /// Largest admissible step for `state`.
    pub fn max_dt(&self, state: &FlowState) -> f64 {
        let dx = state.grid.dx();
        let (mu_min, _) = FlowState::range(&state.mu);
        let c = state.coeffs;
        // near a pole the regular form of the μ rate carries an extra
        // n (u_s/λ − u/λ²) term as stiff as ∂_s²; factors measured on round spheres
        let pole = match state.grid.boundary {
            Boundary::Pole => 1.0 + (state.n as f64 - 1.0) * 0.5,
            _ => 1.0,
        };
        if c.alpha == 0.0 {
            let safety = if pole > 1.0 { 1.5 * pole } else { 1.0 };
            self.sigma_parabolic * c.beta * dx * dx * mu_min * mu_min / safety
        } else {
            self.sigma_hyperbolic * c.alpha.sqrt() * dx * mu_min / pole.sqrt()
        }
    }

    pub fn check_dt(&self, state: &FlowState, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::UnstableStep {
                t: state.t,
                reason: format!("time step {dt} must be positive"),
            });
        }
        let bound = self.max_dt(state);
        if dt > bound * (1.0 + 1e-12) {
            return Err(Error::UnstableStep {
                t: state.t,
                reason: format!("time step {dt:e} exceeds the stability bound {bound:e}"),
            });
        }
        Ok(())
    }

    /// One step of size `dt`.
    pub fn step(&self, state: &FlowState, dt: f64) -> Result<FlowState> {
        state.coeffs.check_evolution()?;
        self.check_dt(state, dt)?;
        let eval = |s: &FlowState| {
            unified_rhs(s).map_err(|e| match e {
                // blame the last accepted state, not the trial stage
                Error::SingularityReached { t, reason, .. } => Error::SingularityReached {
                    t,
                    reason,
                    state: Box::new(state.clone()),
                },
                other => other,
            })
        };
        let next = match self.scheme {
            Scheme::Euler => advance(state, &[(&eval(state)?, dt)], dt),
            Scheme::Rk4 => {
                let k1 = eval(state)?;
                let s2 = advance(state, &[(&k1, 0.5 * dt)], 0.5 * dt);
                let k2 = eval(&s2)?;
                let s3 = advance(state, &[(&k2, 0.5 * dt)], 0.5 * dt);
                let k3 = eval(&s3)?;
                let s4 = advance(state, &[(&k3, dt)], dt);
                let k4 = eval(&s4)?;
                let w = dt / 6.0;
                advance(
                    state,
                    &[(&k1, w), (&k2, 2.0 * w), (&k3, 2.0 * w), (&k4, w)],
                    dt,
                )
            }
        };
        post_check(next)
    }
}

impl Default for Stepper {
    fn default() -> Self {
        Self::new(Scheme::Rk4)
    }
}

fn axpy(base: &[f64], terms: &[(&[f64], f64)]) -> Vec<f64> {
    let mut out = base.to_vec();
    for (d, w) in terms {
        for (o, v) in out.iter_mut().zip(d.iter()) {
            *o += w * v;
        }
    }
    out
}

fn advance(state: &FlowState, ks: &[(&Rhs, f64)], dt: f64) -> FlowState {
    let pick = |f: fn(&Rhs) -> Option<&[f64]>| -> Vec<(&[f64], f64)> {
        ks.iter()
            .filter_map(|(k, w)| f(k).map(|d| (d, *w)))
            .collect()
    };
    let mut next = state.clone();
    next.mu = axpy(&state.mu, &pick(|k| Some(&k.dmu)));
    next.lam = axpy(&state.lam, &pick(|k| Some(&k.dlam)));
    if let Some(v) = &state.mu_vel {
        next.mu_vel = Some(axpy(v, &pick(|k| k.dmu_vel.as_deref())));
    }
    if let Some(v) = &state.lam_vel {
        next.lam_vel = Some(axpy(v, &pick(|k| k.dlam_vel.as_deref())));
    }
    next.t = state.t + dt;
    next
}

fn post_check(next: FlowState) -> Result<FlowState> {
    let all = next
        .mu
        .iter()
        .chain(&next.lam)
        .chain(next.mu_vel.iter().flatten())
        .chain(next.lam_vel.iter().flatten());
    if let Some(v) = all.copied().find(|v| !v.is_finite()) {
        return Err(Error::UnstableStep {
            t: next.t,
            reason: format!("non-finite value {v} after the step"),
        });
    }
    if let Some(i) = next.lam.iter().position(|v| *v < next.lam_min) {
        let reason = format!(
            "lambda = {:e} at x = {} fell below the floor {:e}",
            next.lam[i],
            next.grid.x(i),
            next.lam_min
        );
        return Err(next.singular(reason));
    }
    if let Some(i) = next.mu.iter().position(|v| *v <= 0.0) {
        let reason = format!(
            "mu = {:e} at x = {} is no longer positive",
            next.mu[i],
            next.grid.x(i)
        );
        return Err(next.singular(reason));
    }
    Ok(next)
}

/// One step with default safety factors.
pub fn step(state: &FlowState, dt: f64, scheme: Scheme) -> Result<FlowState> {
    Stepper::new(scheme).step(state, dt)
}

/// Advances `state` to `t_end` in steps of `dt`, handing the initial state and
/// every `stride`-th state to `on_snapshot`. Returns the final state.
pub fn integrate(
    state: &FlowState,
    dt: f64,
    t_end: f64,
    stepper: &Stepper,
    stride: usize,
    mut on_snapshot: impl FnMut(&FlowState) -> Result<()>,
) -> Result<FlowState> {
    if stride == 0 {
        return Err(Error::InvalidSpec(
            "snapshot stride must be at least 1".into(),
        ));
    }
    let span = t_end - state.t;
    if dt.is_nan() || dt <= 0.0 || span < 0.0 {
        return Err(Error::InvalidSpec(format!(
            "cannot step from t = {} to {t_end} with dt = {dt}",
            state.t
        )));
    }
    let steps = (span / dt).round() as usize;
    if (steps as f64 * dt - span).abs() > 1e-9 * span.max(1.0) {
        return Err(Error::InvalidSpec(format!(
            "t_end - t0 = {span} is not a whole number of steps of {dt}"
        )));
    }
    let t0 = state.t;
    let mut s = state.clone();
    on_snapshot(&s)?;
    for k in 1..=steps {
        s = stepper.step(&s, dt)?;
        // recompute from the start time so rounding does not accumulate
        s.t = t0 + k as f64 * dt;
        if k % stride == 0 {
            on_snapshot(&s)?;
        }
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::super::{FlowCoeffs, Grid};
    use super::*;
    use std::f64::consts::TAU;

    fn flat(coeffs: FlowCoeffs) -> FlowState {
        let g = Grid::new(10, 0.0, TAU, Boundary::Periodic).unwrap();
        FlowState::new(g, vec![1.0; 10], vec![1.0; 10], coeffs, 2, 0.0).unwrap()
    }

    fn cylinder(coeffs: FlowCoeffs) -> FlowState {
        let g = Grid::new(10, -1.0, 1.0, Boundary::Neumann).unwrap();
        FlowState::new(g, vec![1.0; 10], vec![1.0; 10], coeffs, 2, 1.0).unwrap()
    }

    #[test]
    fn static_flat_state_is_fixed() {
        for scheme in [Scheme::Rk4, Scheme::Euler] {
            for c in [FlowCoeffs::RICCI, FlowCoeffs::HYPERBOLIC] {
                let s = flat(c);
                let next = step(&s, 1e-3, scheme).unwrap();
                assert_eq!(next.lam, s.lam);
                assert_eq!(next.mu, s.mu);
                assert!((next.t - 1e-3).abs() < 1e-18);
            }
        }
    }

    #[test]
    fn cylinder_ricci_flow_exact() {
        let s = cylinder(FlowCoeffs::RICCI);
        let end = integrate(&s, 1e-4, 0.1, &Stepper::default(), 1000, |_| Ok(())).unwrap();
        for l in &end.lam {
            assert!((l * l - 0.8).abs() < 1e-8);
        }
    }

    #[test]
    fn cylinder_hyperbolic_exact() {
        let s = cylinder(FlowCoeffs::HYPERBOLIC);
        let end = integrate(&s, 1e-3, 0.5, &Stepper::default(), 500, |_| Ok(())).unwrap();
        for l in &end.lam {
            assert!((l * l - 0.75).abs() < 1e-6);
        }
    }

    #[test]
    fn unstable_step_rejected_before_stepping() {
        let s = cylinder(FlowCoeffs::RICCI);
        let dx = s.grid.dx();
        let err = step(&s, dx * dx, Scheme::Rk4).unwrap_err();
        assert!(matches!(err, Error::UnstableStep { .. }));
        let h = cylinder(FlowCoeffs::HYPERBOLIC);
        assert!(step(&h, 0.49 * dx, Scheme::Rk4).is_ok());
        assert!(step(&h, 0.51 * dx, Scheme::Rk4).is_err());
    }

    #[test]
    fn cylinder_singularity_time() {
        let s = cylinder(FlowCoeffs::RICCI);
        let err = integrate(&s, 1e-4, 0.6, &Stepper::default(), 1, |_| Ok(())).unwrap_err();
        match err {
            Error::SingularityReached { t, state, .. } => {
                assert!((t - 0.5).abs() <= 2e-4, "{t}");
                assert!(state.lam.iter().all(|v| v.is_finite()));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn snapshot_stride() {
        let s = cylinder(FlowCoeffs::RICCI);
        let mut ts = Vec::new();
        integrate(&s, 1e-4, 1e-3, &Stepper::default(), 5, |st| {
            ts.push(st.t);
            Ok(())
        })
        .unwrap();
        assert_eq!(ts.len(), 3);
        assert!((ts[2] - 1e-3).abs() < 1e-15);
        assert!(integrate(&s, 3e-4, 1e-3, &Stepper::default(), 1, |_| Ok(())).is_err());
    }
}
