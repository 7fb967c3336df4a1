//! Rotationally symmetric flows of `ḡ = μ(x,t)² dx² + λ(x,t)² g_{S^n}`.
//!
//! The fiber is fixed in time and Einstein with constant `c`, so its sectional
//! curvature is `κ = c / (n−1)`. In the orthonormal frame the Ricci tensor of
//! `ḡ` has radial eigenvalue `A = n K_rad` and fiber eigenvalue
//! `B = K_rad + (n−1) K_sph`.

pub mod grid;
mod pole;
pub mod profiles;
mod step;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::ResidualReport;

pub use grid::{Boundary, Grid, Parity};
pub use step::{integrate, step, Scheme, Stepper};

/// Constant coefficients of `α ∂ₜ²g + β ∂ₜg + γ g + 2 Ric = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowCoeffs {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl FlowCoeffs {
    pub const RICCI: Self = Self {
        alpha: 0.0,
        beta: 1.0,
        gamma: 0.0,
    };
    pub const HYPERBOLIC: Self = Self {
        alpha: 1.0,
        beta: 0.0,
        gamma: 0.0,
    };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn is_second_order(&self) -> bool {
        self.alpha != 0.0
    }

    /// Fails unless the coefficients define an evolution that can be stepped.
    pub fn check_evolution(&self) -> Result<()> {
        let Self { alpha, beta, gamma } = *self;
        if ![alpha, beta, gamma].iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidCoefficients(format!("non-finite {self:?}")));
        }
        if alpha < 0.0 || beta < 0.0 {
            return Err(Error::InvalidCoefficients(format!(
                "alpha = {alpha} and beta = {beta} must both be non-negative"
            )));
        }
        if alpha == 0.0 && beta == 0.0 {
            return Err(Error::InvalidCoefficients(
                "alpha = beta = 0 is the static Einstein equation, not a flow".into(),
            ));
        }
        Ok(())
    }
}

/// Profiles on a grid plus everything needed to evolve them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowState {
    pub grid: Grid,
    pub mu: Vec<f64>,
    pub lam: Vec<f64>,
    pub mu_vel: Option<Vec<f64>>,
    pub lam_vel: Option<Vec<f64>>,
    pub t: f64,
    pub coeffs: FlowCoeffs,
    /// Fiber dimension.
    pub n: usize,
    /// `ᴹ²Ric = c g₂`.
    pub fiber_einstein_c: f64,
    pub lam_min: f64,
    pub k_max: f64,
}

pub const DEFAULT_LAM_MIN: f64 = 1e-6;
pub const DEFAULT_K_MAX: f64 = 1e8;

impl FlowState {
    /// New state at `t = 0`; second-order flows start at rest.
    pub fn new(
        grid: Grid,
        mu: Vec<f64>,
        lam: Vec<f64>,
        coeffs: FlowCoeffs,
        n: usize,
        fiber_einstein_c: f64,
    ) -> Result<Self> {
        let (mu_vel, lam_vel) = if coeffs.is_second_order() {
            (Some(vec![0.0; grid.n]), Some(vec![0.0; grid.n]))
        } else {
            (None, None)
        };
        let s = Self {
            grid,
            mu,
            lam,
            mu_vel,
            lam_vel,
            t: 0.0,
            coeffs,
            n,
            fiber_einstein_c,
            lam_min: DEFAULT_LAM_MIN,
            k_max: DEFAULT_K_MAX,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_velocities(mut self, mu_vel: Vec<f64>, lam_vel: Vec<f64>) -> Result<Self> {
        self.mu_vel = Some(mu_vel);
        self.lam_vel = Some(lam_vel);
        self.validate()?;
        Ok(self)
    }

    pub fn with_limits(mut self, lam_min: f64, k_max: f64) -> Result<Self> {
        if !(lam_min > 0.0 && k_max > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "lam_min = {lam_min} and k_max = {k_max} must be positive"
            )));
        }
        self.lam_min = lam_min;
        self.k_max = k_max;
        Ok(self)
    }

    /// Checks shapes, positivity and the velocity/coefficient pairing.
    pub fn validate(&self) -> Result<()> {
        let n = self.grid.n;
        let bad_len = |v: &[f64]| v.len() != n;
        if bad_len(&self.mu) || bad_len(&self.lam) {
            return Err(Error::InvalidSpec(format!(
                "profiles must have {n} entries"
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidSpec(format!(
                "fiber dimension n = {} but the flow requires n >= 2",
                self.n
            )));
        }
        if self.grid.boundary == Boundary::Pole && (self.kappa().is_nan() || self.kappa() <= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "a pole grid closes the fiber off smoothly only if c > 0, got c = {}",
                self.fiber_einstein_c
            )));
        }
        if let Some(i) = self.mu.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidSpec(format!(
                "mu must be positive, got {} at node {i}",
                self.mu[i]
            )));
        }
        if let Some(i) = self.lam.iter().position(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidSpec(format!(
                "lambda must be positive, got {} at node {i}",
                self.lam[i]
            )));
        }
        match (&self.mu_vel, &self.lam_vel, self.coeffs.is_second_order()) {
            (Some(a), Some(b), true) if !bad_len(a) && !bad_len(b) => Ok(()),
            (Some(_), Some(_), true) => Err(Error::InvalidSpec(format!(
                "velocities must have {n} entries"
            ))),
            (None, None, false) => Ok(()),
            (_, _, true) => Err(Error::MissingVelocities),
            (_, _, false) => Err(Error::InvalidCoefficients(
                "velocities given but alpha = 0".into(),
            )),
        }
    }

    /// Fiber sectional curvature `κ`.
    pub fn kappa(&self) -> f64 {
        self.fiber_einstein_c / (self.n as f64 - 1.0)
    }

    /// `ᴹ²Scal = n c`.
    pub fn fiber_scalar(&self) -> f64 {
        self.n as f64 * self.fiber_einstein_c
    }

    fn parities(&self) -> (Parity, Parity) {
        // (mu, lambda): at a pole λ vanishes to first order, μ does not
        match self.grid.boundary {
            Boundary::Pole => (Parity::Even, Parity::Odd),
            _ => (Parity::Even, Parity::Even),
        }
    }

    pub(crate) fn singular(&self, reason: String) -> Error {
        Error::SingularityReached {
            t: self.t,
            reason,
            state: Box::new(self.clone()),
        }
    }

    fn check_floor(&self) -> Result<()> {
        match self
            .lam
            .iter()
            .enumerate()
            .find(|(_, v)| v.is_nan() || **v < self.lam_min)
        {
            Some((i, v)) => Err(self.singular(format!(
                "lambda = {v:e} at x = {} is below the floor {:e}",
                self.grid.x(i),
                self.lam_min
            ))),
            None => Ok(()),
        }
    }

    /// Arc-length derivatives and curvatures at every node.
    pub fn geometry(&self) -> Result<ProfileGeometry> {
        self.geometry_with(Grid::d2)
    }

    /// [`FlowState::geometry`] with a chosen second-derivative stencil.
    pub(crate) fn geometry_with(
        &self,
        d2: fn(&Grid, &[f64], Parity) -> Vec<f64>,
    ) -> Result<ProfileGeometry> {
        self.check_floor()?;
        let (pm, pl) = self.parities();
        let g = &self.grid;
        let lam_x = g.d1(&self.lam, pl);
        let lam_xx = d2(g, &self.lam, pl);
        let mu_x = g.d1(&self.mu, pm);
        let kappa = self.kappa();
        let nf = self.n as f64;
        let len = g.n;
        let mut geo = ProfileGeometry {
            lam_s: Vec::with_capacity(len),
            lam_ss: Vec::with_capacity(len),
            k_rad: Vec::with_capacity(len),
            k_sph: Vec::with_capacity(len),
            ric_rad: Vec::with_capacity(len),
            ric_fib: Vec::with_capacity(len),
        };
        for i in 0..len {
            let (lam, mu) = (self.lam[i], self.mu[i]);
            let lam_s = lam_x[i] / mu;
            let lam_ss = lam_xx[i] / (mu * mu) - lam_x[i] * mu_x[i] / (mu * mu * mu);
            let k_rad = -lam_ss / lam;
            let k_sph = (kappa - lam_s * lam_s) / (lam * lam);
            geo.lam_s.push(lam_s);
            geo.lam_ss.push(lam_ss);
            geo.k_rad.push(k_rad);
            geo.k_sph.push(k_sph);
            geo.ric_rad.push(nf * k_rad);
            geo.ric_fib.push(k_rad + (nf - 1.0) * k_sph);
        }
        if let Some(i) = (0..len)
            .find(|&i| !(geo.k_rad[i].abs() <= self.k_max && geo.k_sph[i].abs() <= self.k_max))
        {
            return Err(self.singular(format!(
                "curvature (K_rad, K_sph) = ({:e}, {:e}) at x = {} exceeds {:e}",
                geo.k_rad[i],
                geo.k_sph[i],
                self.grid.x(i),
                self.k_max
            )));
        }
        Ok(geo)
    }

    /// Minimum and maximum of a profile.
    pub fn range(v: &[f64]) -> (f64, f64) {
        v.iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| {
                (a.min(*x), b.max(*x))
            })
    }
}

/// Pointwise geometry of a profile, in the orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGeometry {
    pub lam_s: Vec<f64>,
    pub lam_ss: Vec<f64>,
    pub k_rad: Vec<f64>,
    pub k_sph: Vec<f64>,
    /// `A = n K_rad`, the radial Ricci eigenvalue.
    pub ric_rad: Vec<f64>,
    /// `B = K_rad + (n−1) K_sph`, the fiber Ricci eigenvalue.
    pub ric_fib: Vec<f64>,
}

/// `(K_rad, K_sph)` at every node.
pub fn sectional_curvatures(state: &FlowState) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = state.geometry()?;
    Ok((g.k_rad, g.k_sph))
}

/// Time derivatives of the evolved variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Rhs {
    /// `∂ₜμ` for first-order flows; the velocity itself for second-order ones.
    pub dmu: Vec<f64>,
    pub dlam: Vec<f64>,
    /// `∂ₜ²μ`, `∂ₜ²λ` for second-order flows.
    pub dmu_vel: Option<Vec<f64>>,
    pub dlam_vel: Option<Vec<f64>>,
}

/// Ricci flow: `(∂ₜμ, ∂ₜλ) = (−μ A, −λ B)`.
pub fn rf_rhs(state: &FlowState) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = state.geometry()?;
    let mut dmu: Vec<f64> = state
        .mu
        .iter()
        .zip(&g.ric_rad)
        .map(|(m, a)| -m * a)
        .collect();
    let dlam: Vec<f64> = state
        .lam
        .iter()
        .zip(&g.ric_fib)
        .map(|(l, b)| -l * b)
        .collect();
    if let Some(p) = pole_data(state, &g) {
        p.first_order(state, 1.0, 0.0, &dlam, &mut dmu);
    }
    Ok((dmu, dlam))
}

fn pole_data(state: &FlowState, g: &ProfileGeometry) -> Option<pole::PoleData> {
    (state.grid.boundary == Boundary::Pole).then(|| pole::PoleData::new(state, &g.lam_s))
}

/// Hyperbolic geometric flow: `(∂ₜ²μ, ∂ₜ²λ)`.
pub fn hgf_rhs(state: &FlowState) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mv, lv) = velocities(state)?;
    let g = state.geometry()?;
    let n = state.grid.n;
    let mut mu_tt = Vec::with_capacity(n);
    let mut lam_tt = Vec::with_capacity(n);
    for i in 0..n {
        let (m, l) = (state.mu[i], state.lam[i]);
        mu_tt.push((-m * m * g.ric_rad[i] - mv[i] * mv[i]) / m);
        lam_tt.push((-l * l * g.ric_fib[i] - lv[i] * lv[i]) / l);
    }
    if let Some(p) = pole_data(state, &g) {
        p.second_order(state, (1.0, 0.0, 0.0), mv, lv, &lam_tt, &mut mu_tt);
    }
    Ok((mu_tt, lam_tt))
}

fn velocities(state: &FlowState) -> Result<(&[f64], &[f64])> {
    match (&state.mu_vel, &state.lam_vel) {
        (Some(a), Some(b)) => Ok((a, b)),
        _ => Err(Error::MissingVelocities),
    }
}

/// Unified family. Each metric component `G ∈ {μ², λ²}` obeys
/// `α G̈ + β Ġ + γ G + 2 Ric_G = 0`, solved for its highest time derivative.
pub fn unified_rhs(state: &FlowState) -> Result<Rhs> {
    let FlowCoeffs { alpha, beta, gamma } = state.coeffs;
    state.coeffs.check_evolution()?;
    let g = state.geometry()?;
    let n = state.grid.n;
    if alpha == 0.0 {
        // 2 v v̇ β = −(γ v² + 2 v² R)  ⇒  v̇ = −v (γ + 2R) / (2β)
        let solve = |v: f64, r: f64| -v * ((gamma + 2.0 * r) / (2.0 * beta));
        let mut dmu: Vec<f64> = (0..n).map(|i| solve(state.mu[i], g.ric_rad[i])).collect();
        let dlam: Vec<f64> = (0..n).map(|i| solve(state.lam[i], g.ric_fib[i])).collect();
        if let Some(p) = pole_data(state, &g) {
            p.first_order(state, beta, gamma, &dlam, &mut dmu);
        }
        return Ok(Rhs {
            dmu,
            dlam,
            dmu_vel: None,
            dlam_vel: None,
        });
    }
    let (mv, lv) = velocities(state)?;
    // α(2ẇ² + 2 v v̈) + 2β v ẇ + γ v² + 2 v² R = 0 with ẇ = v̇
    let solve = |v: f64, w: f64, r: f64| {
        (-alpha * w * w - beta * v * w - 0.5 * gamma * v * v - v * v * r) / (alpha * v)
    };
    let mut mu_tt: Vec<f64> = (0..n)
        .map(|i| solve(state.mu[i], mv[i], g.ric_rad[i]))
        .collect();
    let lam_tt: Vec<f64> = (0..n)
        .map(|i| solve(state.lam[i], lv[i], g.ric_fib[i]))
        .collect();
    if let Some(p) = pole_data(state, &g) {
        p.second_order(state, (alpha, beta, gamma), mv, lv, &lam_tt, &mut mu_tt);
    }
    Ok(Rhs {
        dmu: mv.to_vec(),
        dlam: lv.to_vec(),
        dmu_vel: Some(mu_tt),
        dlam_vel: Some(lam_tt),
    })
}

/// Residuals of the Ricci-flow characterization of the warping function.
///
/// * `rf-char`: `∂ₜλ − (1 + m₂/(m₁λ²))Δλ − ((m₂−1)/λ)|grad λ|² − ((λ²−1)/(m₂λ)) ᴹ²Scal`
/// * `rf-char-hess`: `|Hess λ|`, in the unit radial frame
pub fn check_rf_characterization(state: &FlowState, dlam_dt: &[f64]) -> Result<ResidualReport> {
    let (res, hess) = rf_characterization_values(state, dlam_dt)?;
    let mut report = ResidualReport::at(state.t);
    report.insert("rf-char", &res);
    report.insert("rf-char-hess", &hess);
    Ok(report)
}

pub(crate) fn rf_characterization_values(
    state: &FlowState,
    dlam_dt: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let g = state.geometry()?;
    let (m1, m2) = (1.0, state.n as f64);
    let scal2 = state.fiber_scalar();
    let n = state.grid.n;
    if dlam_dt.len() != n {
        return Err(Error::InvalidSpec(format!("dlam/dt must have {n} entries")));
    }
    let res = (0..n)
        .map(|i| {
            let l = state.lam[i];
            let lap = g.lam_ss[i];
            let grad2 = g.lam_s[i] * g.lam_s[i];
            dlam_dt[i]
                - (1.0 + m2 / (m1 * l * l)) * lap
                - (m2 - 1.0) / l * grad2
                - (l * l - 1.0) / (m2 * l) * scal2
        })
        .collect();
    Ok((res, g.lam_ss))
}

/// Residuals of the hyperbolic-flow characterization with a time-independent fiber.
///
/// * `hgf-char`: `(m₂/2)∂ₜ²λ² − ((λ²+m₂)m₂/λ)Δλ − m₂(m₂−1)|grad λ|² − (λ²−1) ᴹ²Scal`
/// * `hgf-char-offdiag`: `(m₂/λ)Δλ`
///
/// `∂ₜ²λ² = 2λ̇² + 2λλ̈` with `λ̈` from [`hgf_rhs`].
pub fn check_hgf_characterization(state: &FlowState) -> Result<ResidualReport> {
    let (main, off) = hgf_characterization_values(state)?;
    let mut report = ResidualReport::at(state.t);
    report.insert("hgf-char", &main);
    report.insert("hgf-char-offdiag", &off);
    Ok(report)
}

pub(crate) fn hgf_characterization_values(state: &FlowState) -> Result<(Vec<f64>, Vec<f64>)> {
    let lv = state.lam_vel.as_ref().ok_or(Error::MissingVelocities)?;
    let (_, lam_tt) = hgf_rhs(state)?;
    let g = state.geometry()?;
    let m2 = state.n as f64;
    let scal2 = state.fiber_scalar();
    let n = state.grid.n;
    let mut main = Vec::with_capacity(n);
    let mut off = Vec::with_capacity(n);
    for i in 0..n {
        let l = state.lam[i];
        let lap = g.lam_ss[i];
        let grad2 = g.lam_s[i] * g.lam_s[i];
        let lam2_tt = 2.0 * lv[i] * lv[i] + 2.0 * l * lam_tt[i];
        main.push(
            0.5 * m2 * lam2_tt
                - (l * l + m2) * m2 / l * lap
                - m2 * (m2 - 1.0) * grad2
                - (l * l - 1.0) * scal2,
        );
        off.push(m2 / l * lap);
    }
    Ok((main, off))
}

/// `γ ḡ + 2 R̄ic` in the orthonormal frame; zero iff the profile is Einstein
/// with constant `−γ/2`. Reported as `einstein`.
pub fn check_einstein(state: &FlowState) -> Result<ResidualReport> {
    let g = state.geometry()?;
    let gamma = state.coeffs.gamma;
    let vals: Vec<f64> = g
        .ric_rad
        .iter()
        .zip(&g.ric_fib)
        .map(|(a, b)| f64::max((gamma + 2.0 * a).abs(), (gamma + 2.0 * b).abs()))
        .collect();
    let mut report = ResidualReport::at(state.t);
    report.insert("einstein", &vals);
    Ok(report)
}
