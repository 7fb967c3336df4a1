//! Rates of `μ` near a pole.
//!
//! A smooth profile has `λ_s → r = ±√κ` at a pole. Taking `∂ₜμ = −μA` there
//! lets small violations of this cone condition grow without bound, so inside
//! a window around each pole the rate of `μ` is derived from
//! `u = (λ_s − r)/λ`, an odd function that obeys
//!
//! ```text
//! α u_tt + β u_t = L(u) + (γ/2) u + α Q
//! L(u) = u_ss + n r (u_s − r u/λ)/λ + n u u_s − (3n−1) r u²/λ − n u³
//! ```
//!
//! `L(u)` is the first variation of `u` along `−2Ric` and `Q` its second
//! variation along the metric velocity. Both forms are consistent, so they
//! are blended with a smooth weight that is 1 within `INNER` of a pole and 0
//! beyond `OUTER`; the weight also fades out where `|λ_s|` drops below `√κ/2`.
//! A hard switch would leave an `O(Δx²)` jump in the rate, which shows up as
//! `O(1/Δx)` noise in third derivatives of `μ`.

use super::{FlowState, Grid, Parity};

/// Blend radii as fractions of the interval.
pub(crate) const INNER: f64 = 0.05;
pub(crate) const OUTER: f64 = 0.2;

/// Smooth step: 0 for `t <= 0`, 1 for `t >= 1`, infinitely differentiable.
fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / t).exp();
    let b = (-1.0 / (1.0 - t)).exp();
    a / (a + b)
}

pub(crate) struct PoleData {
    /// `(node, weight)` for every node with a positive weight.
    nodes: Vec<(usize, f64)>,
    w: Vec<f64>,
    u: Vec<f64>,
    /// `L(u)`
    lu: Vec<f64>,
}

impl PoleData {
    pub(crate) fn new(state: &FlowState, lam_s: &[f64]) -> Self {
        let g = &state.grid;
        let root = state.kappa().sqrt();
        let mid = 0.5 * (g.lo + g.hi);
        let len = g.hi - g.lo;
        let r: Vec<f64> = (0..g.n)
            .map(|i| if g.x(i) < mid { root } else { -root })
            .collect();
        let nodes = (0..g.n)
            .filter_map(|i| {
                let x = g.x(i);
                let d = (x - g.lo).min(g.hi - x) / len;
                let weight = smooth_step((OUTER - d) / (OUTER - INNER))
                    * smooth_step((lam_s[i].abs() / root - 0.25) / 0.25);
                (weight > 0.0).then_some((i, weight))
            })
            .collect();
        let u: Vec<f64> = (0..g.n).map(|i| (lam_s[i] - r[i]) / state.lam[i]).collect();
        let ux = g.d1(&u, Parity::Odd);
        let uxx = g.d2(&u, Parity::Odd);
        let mux = g.d1(&state.mu, Parity::Even);
        let n = state.n as f64;
        let lu = (0..g.n)
            .map(|i| {
                let (m, l, ri, ui) = (state.mu[i], state.lam[i], r[i], u[i]);
                let us = ux[i] / m;
                let uss = uxx[i] / (m * m) - ux[i] * mux[i] / (m * m * m);
                uss + n * ri * (us - ri * ui / l) / l + n * ui * us
                    - (3.0 * n - 1.0) * ri * ui * ui / l
                    - n * ui * ui * ui
            })
            .collect();
        Self {
            nodes,
            w: lam_s.to_vec(),
            u,
            lu,
        }
    }

    /// Replaces `∂ₜμ` in the windows for a first-order flow.
    pub(crate) fn first_order(
        &self,
        state: &FlowState,
        beta: f64,
        gamma: f64,
        dlam: &[f64],
        dmu: &mut [f64],
    ) {
        let lam_xt = state.grid.d1(dlam, Parity::Odd);
        for &(i, k) in &self.nodes {
            let u_t = (self.lu[i] + 0.5 * gamma * self.u[i]) / beta;
            let w_t = dlam[i] * self.u[i] + state.lam[i] * u_t;
            let regular = (lam_xt[i] - state.mu[i] * w_t) / self.w[i];
            dmu[i] = blend(dmu[i], regular, k);
        }
    }

    /// Replaces `∂ₜ²μ` in the windows for a second-order flow.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn second_order(
        &self,
        state: &FlowState,
        (alpha, beta, gamma): (f64, f64, f64),
        mu_t: &[f64],
        lam_t: &[f64],
        lam_tt: &[f64],
        mu_tt: &mut [f64],
    ) {
        let g: &Grid = &state.grid;
        let lam_xt = g.d1(lam_t, Parity::Odd);
        let lam_xtt = g.d1(lam_tt, Parity::Odd);
        let ell: Vec<f64> = (0..g.n)
            .map(|i| -lam_t[i] * lam_t[i] / state.lam[i])
            .collect();
        let ell_x = g.d1(&ell, Parity::Odd);
        for &(i, k) in &self.nodes {
            let (m, l, w, u) = (state.mu[i], state.lam[i], self.w[i], self.u[i]);
            let w_t = (lam_xt[i] - w * mu_t[i]) / m;
            let u_t = (w_t - u * lam_t[i]) / l;
            // second variation along the straight line in (λ, μ), plus the
            // first variation along its curvature (−λ_t²/λ, −μ_t²/μ)
            let d2u = (-2.0 * mu_t[i] * w_t / m - 2.0 * u_t * lam_t[i]) / l;
            let m2 = -mu_t[i] * mu_t[i] / m;
            let dp2 = (ell_x[i] - w * m2) / m;
            let du2 = (dp2 - u * ell[i]) / l;
            let q = d2u + du2;
            let u_tt = (self.lu[i] + 0.5 * gamma * u + alpha * q - beta * u_t) / alpha;
            let w_tt = lam_tt[i] * u + 2.0 * lam_t[i] * u_t + l * u_tt;
            let regular = (lam_xtt[i] - 2.0 * mu_t[i] * w_t - m * w_tt) / w;
            mu_tt[i] = blend(mu_tt[i], regular, k);
        }
    }

    #[cfg(test)]
    pub(crate) fn weights(&self) -> &[(usize, f64)] {
        &self.nodes
    }
}

fn blend(usual: f64, regular: f64, k: f64) -> f64 {
    if k == 1.0 {
        regular
    } else {
        usual + k * (regular - usual)
    }
}
