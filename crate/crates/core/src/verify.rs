//! Residuals of metric, warp, Ricci and `f` evolution equations along
//! integrated flows of `ḡ = μ² dx² + λ² g₂` with an Einstein fiber `ᴹ²Ric = c g₂`.
//!
//! Conventions: the base is one-dimensional with coordinate `x`, so base index
//! sums collapse to `x`. Fiber-block quantities are all multiples of `g₂` and
//! are reported as the coefficient of `(g₂)_αβ`. Time derivatives are central
//! differences across snapshots; spatial derivatives use the flow's grid
//! stencils, except that `Δλ²` is differenced from `λ²` directly so that it is
//! independent of the flow's own discretization.
//!
//! For a symmetric 2-tensor `T = A ds² + B λ² g₂` and `P = A − B`,
//! `q = (λ_s/λ)²`, the rough Laplacian of the product is
//! `(ΔT)_ss = ΔA − 2 m₂ q P` and, per unit fiber vector, `ΔB + 2 q P`, where
//! `Δu = u_ss + m₂ (λ_s/λ) u_s` is the Laplacian of base-lifted functions.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{Boundary, FlowCoeffs, FlowState, Grid, Parity, ProfileGeometry};
use crate::manifold::{curvature_from_jet, MetricJet};
use crate::report::ResidualReport;
use crate::warped::WarpedProductSpec;

/// Every residual name the verifier knows, in reporting order.
pub const RESIDUAL_NAMES: &[&str] = &[
    "flow-consistency",
    "base-metric-rf",
    "fiber-metric-rf",
    "warp-rf",
    "base-metric-hgf",
    "warp-hgf",
    "ricci-base-rf",
    "ricci-fiber-rf",
    "ricci-fiber-einstein-rf",
    "fiber-proportionality",
    "f-consistency",
    "f-evolution",
    "rf-char",
    "rf-char-hess",
    "hgf-char",
    "hgf-char-offdiag",
    "einstein",
];

/// Snapshots of one flow at uniformly spaced times.
#[derive(Debug, Clone)]
pub struct FlowTrajectory {
    snapshots: Vec<FlowState>,
    dt_snap: f64,
}

impl FlowTrajectory {
    pub fn new(snapshots: Vec<FlowState>) -> Result<Self> {
        if snapshots.len() < 3 {
            return Err(Error::InsufficientSnapshots {
                needed: 3,
                got: snapshots.len(),
            });
        }
        let dt_snap = snapshots[1].t - snapshots[0].t;
        if dt_snap.is_nan() || dt_snap <= 0.0 {
            return Err(Error::InvalidSpec("snapshot times must increase".into()));
        }
        for w in snapshots.windows(2) {
            let d = w[1].t - w[0].t;
            if d.is_nan() || d <= 0.0 || (d - dt_snap).abs() > 1e-6 * dt_snap {
                return Err(Error::InvalidSpec(format!(
                    "snapshots must be uniformly spaced: got step {d} after {dt_snap}"
                )));
            }
            let (a, b) = (&w[0], &w[1]);
            if a.grid != b.grid
                || a.n != b.n
                || a.coeffs != b.coeffs
                || a.fiber_einstein_c != b.fiber_einstein_c
            {
                return Err(Error::InvalidSpec(
                    "snapshots must share grid, fiber and coefficients".into(),
                ));
            }
        }
        Ok(Self { snapshots, dt_snap })
    }

    pub fn snapshots(&self) -> &[FlowState] {
        &self.snapshots
    }

    pub fn dt_snap(&self) -> f64 {
        self.dt_snap
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn coeffs(&self) -> FlowCoeffs {
        self.snapshots[0].coeffs
    }
}

/// Einstein fiber data: `ᴹ²Ric = c g₂`, base and fiber dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EinsteinFiberContext {
    pub c: f64,
    pub m1: usize,
    pub m2: usize,
}

impl EinsteinFiberContext {
    pub fn for_state(state: &FlowState) -> Self {
        Self {
            c: state.fiber_einstein_c,
            m1: 1,
            m2: state.n,
        }
    }

    fn check(&self, state: &FlowState) -> Result<()> {
        if self.m1 != 1 || self.m2 != state.n || self.c != state.fiber_einstein_c {
            return Err(Error::InvalidSpec(format!(
                "Einstein context {self:?} does not match the flow (n = {}, c = {})",
                state.n, state.fiber_einstein_c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum TimeOrder {
    #[default]
    Second,
    Fourth,
}

impl TimeOrder {
    fn reach(self) -> usize {
        match self {
            TimeOrder::Second => 1,
            TimeOrder::Fourth => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub time_order: TimeOrder,
    /// Distance from non-periodic ends inside which residuals are not
    /// reported. `None` means a tenth of the interval.
    pub margin: Option<f64>,
}

impl VerifyOptions {
    fn indices(&self, state: &FlowState) -> Vec<usize> {
        let g = &state.grid;
        let margin = match (self.margin, g.boundary) {
            (_, Boundary::Periodic) => 0.0,
            (Some(m), _) => m,
            (None, _) => 0.1 * (g.hi - g.lo),
        };
        g.interior(margin)
    }
}

/// Residual reports at every snapshot where they are defined, plus the
/// worst case over all of them.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResiduals {
    pub reports: Vec<ResidualReport>,
    pub summary: ResidualReport,
}

impl TrajectoryResiduals {
    fn push(&mut self, report: ResidualReport) {
        self.summary.merge(&report);
        self.reports.push(report);
    }

    /// Merges another result with reports at the same times.
    pub fn merge(&mut self, other: TrajectoryResiduals) {
        for r in other.reports {
            match self.reports.iter_mut().find(|x| x.t == r.t) {
                Some(x) => x.merge(&r),
                None => self.reports.push(r),
            }
        }
        self.reports
            .sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap_or(std::cmp::Ordering::Equal));
        self.summary.merge(&other.summary);
    }
}

/// Spatial fields of one snapshot that the residuals are built from.
#[derive(Debug, Clone)]
struct Fields {
    mu2: Vec<f64>,
    lam2: Vec<f64>,
    lam_s: Vec<f64>,
    lam_ss: Vec<f64>,
    /// Radial and fiber Ricci eigenvalues.
    a: Vec<f64>,
    b: Vec<f64>,
    /// `Δλ²` from differencing `λ²`.
    lap_lam2: Vec<f64>,
    /// Closed-form `f`.
    f: Vec<f64>,
}

/// Accessor for one of the fields.
type Field = fn(&Fields) -> &Vec<f64>;

impl Fields {
    fn new(state: &FlowState) -> Result<Self> {
        let geo = geometry(state)?;
        let lam2: Vec<f64> = state.lam.iter().map(|l| l * l).collect();
        let (_, lap_lam2) = arc_derivatives(state, &lam2, Parity::Even);
        let m2 = state.n as f64;
        let c = state.fiber_einstein_c;
        let f = (0..lam2.len())
            .map(|i| {
                let grad2 = geo.lam_s[i] * geo.lam_s[i];
                ((4.0 - 2.0 * m2) * grad2 - lap_lam2[i] + 2.0 * c) / (2.0 * lam2[i])
            })
            .collect();
        Ok(Self {
            mu2: state.mu.iter().map(|m| m * m).collect(),
            lam2,
            lam_s: geo.lam_s,
            lam_ss: geo.lam_ss,
            a: geo.ric_rad,
            b: geo.ric_fib,
            lap_lam2,
            f,
        })
    }
}

/// Profile geometry with 4th-order stencils, so residuals mostly measure the
/// flow's own discretization error.
fn geometry(state: &FlowState) -> Result<ProfileGeometry> {
    state.geometry_with(Grid::d2_fourth)
}

/// `(u_s, u_ss)` for a field with the given reflection parity.
fn arc_derivatives(state: &FlowState, u: &[f64], parity: Parity) -> (Vec<f64>, Vec<f64>) {
    let g = &state.grid;
    let mu_parity = Parity::Even;
    let ux = g.d1(u, parity);
    let uxx = g.d2_fourth(u, parity);
    let mux = g.d1(&state.mu, mu_parity);
    let us = ux.iter().zip(&state.mu).map(|(d, m)| d / m).collect();
    let uss = (0..u.len())
        .map(|i| {
            let m = state.mu[i];
            uxx[i] / (m * m) - ux[i] * mux[i] / (m * m * m)
        })
        .collect();
    (us, uss)
}

/// Laplacian of the product applied to a function of the base alone,
/// `Δu = u_ss + m₂ (λ_s/λ) u_s`.
pub fn lifted_laplacian(state: &FlowState, u: &[f64]) -> Result<Vec<f64>> {
    let geo = geometry(state)?;
    let (us, uss) = arc_derivatives(state, u, Parity::Even);
    let m2 = state.n as f64;
    Ok((0..u.len())
        .map(|i| uss[i] + m2 * geo.lam_s[i] / state.lam[i] * us[i])
        .collect())
}

#[derive(Clone, Copy)]
enum Deriv {
    First,
    Second,
}

fn time_derivative(series: &[&[f64]], j: usize, dt: f64, order: TimeOrder, d: Deriv) -> Vec<f64> {
    let len = series[j].len();
    (0..len)
        .map(|i| {
            let u = |k: isize| series[(j as isize + k) as usize][i];
            match (order, d) {
                (TimeOrder::Second, Deriv::First) => (u(1) - u(-1)) / (2.0 * dt),
                (TimeOrder::Second, Deriv::Second) => (u(1) - 2.0 * u(0) + u(-1)) / (dt * dt),
                (TimeOrder::Fourth, Deriv::First) => {
                    (u(-2) - u(2) + 8.0 * (u(1) - u(-1))) / (12.0 * dt)
                }
                (TimeOrder::Fourth, Deriv::Second) => {
                    (-u(-2) + 16.0 * u(-1) - 30.0 * u(0) + 16.0 * u(1) - u(2)) / (12.0 * dt * dt)
                }
            }
        })
        .collect()
}

/// Runs `residuals` at each snapshot that has enough neighbours for the time stencil.
fn along<F>(
    traj: &FlowTrajectory,
    opts: &VerifyOptions,
    mut residuals: F,
) -> Result<TrajectoryResiduals>
where
    F: FnMut(&TimeContext) -> Result<Vec<(&'static str, Vec<f64>)>>,
{
    let reach = opts.time_order.reach();
    let needed = 2 * reach + 1;
    if traj.len() < needed {
        return Err(Error::InsufficientSnapshots {
            needed,
            got: traj.len(),
        });
    }
    let fields = traj
        .snapshots
        .iter()
        .map(Fields::new)
        .collect::<Result<Vec<_>>>()?;
    let idx = opts.indices(&traj.snapshots[0]);
    let mut out = TrajectoryResiduals::default();
    for j in reach..traj.len() - reach {
        let ctx = TimeContext {
            traj,
            fields: &fields,
            j,
            opts,
        };
        let mut report = ResidualReport::at(traj.snapshots[j].t);
        for (name, vals) in residuals(&ctx)? {
            let picked: Vec<f64> = idx.iter().map(|&i| vals[i]).collect();
            report.insert(name, &picked);
        }
        out.push(report);
    }
    Ok(out)
}

struct TimeContext<'a> {
    traj: &'a FlowTrajectory,
    fields: &'a [Fields],
    j: usize,
    opts: &'a VerifyOptions,
}

impl TimeContext<'_> {
    fn state(&self) -> &FlowState {
        &self.traj.snapshots[self.j]
    }

    fn now(&self) -> &Fields {
        &self.fields[self.j]
    }

    fn dt_with(&self, pick: impl Fn(&Fields) -> Vec<f64>, d: Deriv) -> Vec<f64> {
        let owned: Vec<Vec<f64>> = self.fields.iter().map(pick).collect();
        let refs: Vec<&[f64]> = owned.iter().map(Vec::as_slice).collect();
        time_derivative(&refs, self.j, self.traj.dt_snap, self.opts.time_order, d)
    }

    fn dt_of(&self, pick: impl Fn(&Fields) -> &Vec<f64>, d: Deriv) -> Vec<f64> {
        let refs: Vec<&[f64]> = self.fields.iter().map(|f| pick(f).as_slice()).collect();
        time_derivative(&refs, self.j, self.traj.dt_snap, self.opts.time_order, d)
    }
}

fn rough_laplacians(state: &FlowState, f: &Fields) -> Result<(Vec<f64>, Vec<f64>)> {
    let m2 = state.n as f64;
    let lap_a = lifted_laplacian(state, &f.a)?;
    let lap_b = lifted_laplacian(state, &f.b)?;
    let mut rad = Vec::with_capacity(f.a.len());
    let mut fib = Vec::with_capacity(f.a.len());
    for i in 0..f.a.len() {
        let q = (f.lam_s[i] / state.lam[i]).powi(2);
        let p = f.a[i] - f.b[i];
        rad.push(lap_a[i] - 2.0 * m2 * q * p);
        fib.push(lap_b[i] + 2.0 * q * p);
    }
    Ok((rad, fib))
}

/// Metric evolution residuals.
///
/// * `flow-consistency`: `α∂ₜ²G + β∂ₜG + γG + 2Ric_G` for `G ∈ {μ², λ²}`, any coefficients
/// * `base-metric-rf`: `∂ₜ(g₁)_xx + 2 ᴹ¹Ric_xx − (2m₂/λ) Hess(λ)_xx` (Ricci flow)
/// * `fiber-metric-rf`: `∂ₜλ² + 2c − (Δλ² + (2m₂−4)|grad λ|²)` (Ricci flow)
/// * `base-metric-hgf`: `∂ₜ²(g₁)_xx + 2 ᴹ¹Ric_xx − (2m₂/λ) Hess(λ)_xx` (hyperbolic flow)
pub fn verify_metric_evolution(
    traj: &FlowTrajectory,
    opts: &VerifyOptions,
) -> Result<TrajectoryResiduals> {
    let coeffs = traj.coeffs();
    along(traj, opts, |ctx| {
        let s = ctx.state();
        let f = ctx.now();
        let m2 = s.n as f64;
        let c = s.fiber_einstein_c;
        let n = f.a.len();
        let mut out = Vec::new();

        let FlowCoeffs { alpha, beta, gamma } = coeffs;
        let mut cons = vec![0.0; n];
        let blocks: [(Field, Field); 2] = [(|fl| &fl.mu2, |fl| &fl.a), (|fl| &fl.lam2, |fl| &fl.b)];
        for (metric, ric) in blocks {
            let first = ctx.dt_of(metric, Deriv::First);
            let second = ctx.dt_of(metric, Deriv::Second);
            let (g, r) = (metric(f), ric(f));
            for i in 0..n {
                let v = alpha * second[i] + beta * first[i] + gamma * g[i] + 2.0 * g[i] * r[i];
                cons[i] = f64::max(cons[i], v.abs());
            }
        }
        out.push(("flow-consistency", cons));

        // Hess(λ)_xx = μ² λ_ss in x-coordinates; a 1-D base has no curvature
        let hess_term: Vec<f64> = (0..n)
            .map(|i| 2.0 * m2 / s.lam[i] * f.mu2[i] * f.lam_ss[i])
            .collect();
        let warp_rhs: Vec<f64> = (0..n)
            .map(|i| -2.0 * c + f.lap_lam2[i] + (2.0 * m2 - 4.0) * f.lam_s[i] * f.lam_s[i])
            .collect();
        if coeffs == FlowCoeffs::RICCI {
            let mu2_t = ctx.dt_of(|fl| &fl.mu2, Deriv::First);
            let lam2_t = ctx.dt_of(|fl| &fl.lam2, Deriv::First);
            out.push((
                "base-metric-rf",
                (0..n).map(|i| mu2_t[i] - hess_term[i]).collect(),
            ));
            out.push((
                "fiber-metric-rf",
                (0..n).map(|i| lam2_t[i] - warp_rhs[i]).collect(),
            ));
        }
        if coeffs == FlowCoeffs::HYPERBOLIC {
            let mu2_tt = ctx.dt_of(|fl| &fl.mu2, Deriv::Second);
            out.push((
                "base-metric-hgf",
                (0..n).map(|i| mu2_tt[i] - hess_term[i]).collect(),
            ));
        }
        Ok(out)
    })
}

fn require_einstein(ctx: Option<&EinsteinFiberContext>, traj: &FlowTrajectory) -> Result<()> {
    let ctx = ctx.ok_or(Error::NotEinsteinFiber)?;
    ctx.check(&traj.snapshots[0])
}

/// Warping-function evolution: `warp-rf` (`∂ₜλ² + 2c − Δλ² − (2m₂−4)|grad λ|²`)
/// for Ricci flow, `warp-hgf` (same with `∂ₜ²λ²`) for the hyperbolic flow.
pub fn verify_warp_evolution(
    traj: &FlowTrajectory,
    ctx: Option<&EinsteinFiberContext>,
    opts: &VerifyOptions,
) -> Result<TrajectoryResiduals> {
    require_einstein(ctx, traj)?;
    let (name, d) = match traj.coeffs() {
        FlowCoeffs::RICCI => ("warp-rf", Deriv::First),
        FlowCoeffs::HYPERBOLIC => ("warp-hgf", Deriv::Second),
        other => {
            return Err(Error::InvalidCoefficients(format!(
                "warp evolution is stated for Ricci or hyperbolic flow, not {other:?}"
            )))
        }
    };
    along(traj, opts, |tc| {
        let s = tc.state();
        let f = tc.now();
        let (m2, c) = (s.n as f64, s.fiber_einstein_c);
        let lam2_t = tc.dt_of(|fl| &fl.lam2, d);
        let r = (0..f.lam2.len())
            .map(|i| {
                lam2_t[i] + 2.0 * c - f.lap_lam2[i] - (2.0 * m2 - 4.0) * f.lam_s[i] * f.lam_s[i]
            })
            .collect();
        Ok(vec![(name, r)])
    })
}

/// Base-block quantities at one point in general index form.
#[derive(Debug, Clone)]
pub struct BaseBlock {
    /// `ḡ^{kl}` on the base block.
    pub gbar_inv: DMatrix<f64>,
    /// `R̄ic_kl`.
    pub ricbar: DMatrix<f64>,
    /// `ᴹ¹Ric_kl`.
    pub ric1: DMatrix<f64>,
    /// `(Δ̄R̄ic)_kl`.
    pub lap_ricbar: DMatrix<f64>,
}

/// Fiber-block quantities as coefficients of `(g₂)_αβ`.
#[derive(Debug, Clone, Copy)]
pub struct FiberBlock {
    pub m2: f64,
    /// `ḡ_αβ / g₂`, i.e. `λ²`.
    pub gbar: f64,
    /// `R̄ic_αβ / g₂`.
    pub ricbar: f64,
    /// `(Δ̄R̄ic)_αβ / g₂`.
    pub lap_ricbar: f64,
    /// `ḡ^{αβ} R̄ic_αβ`.
    pub trace: f64,
    /// `ᴹ²Rm_αγβσ` contracted with `g₂^{γσ}`, per `g₂`; equals `c`.
    pub fiber_ric: f64,
    pub grad_norm_sq: f64,
}

/// Right-hand sides in general index form.
pub mod general {
    use super::*;

    /// RHS of the base Ricci evolution, entry `(i, j)`.
    pub fn ricci_base(b: &BaseBlock, fib: &FiberBlock, i: usize, j: usize) -> f64 {
        let m1 = b.gbar_inv.nrows();
        let mut quad = 0.0;
        for k in 0..m1 {
            for l in 0..m1 {
                quad += b.gbar_inv[(k, l)] * b.ricbar[(i, k)] * b.ricbar[(j, l)];
            }
        }
        b.lap_ricbar[(i, j)] + 2.0 / fib.m2 * fib.trace * (b.ricbar[(i, j)] - b.ric1[(i, j)])
            - 2.0 * quad
    }

    /// `ḡ^{kp}(R̄ic_kp − ᴹ¹Ric_kp)`
    pub fn trace_diff(b: &BaseBlock) -> f64 {
        let m1 = b.gbar_inv.nrows();
        let mut s = 0.0;
        for k in 0..m1 {
            for p in 0..m1 {
                s += b.gbar_inv[(k, p)] * (b.ricbar[(k, p)] - b.ric1[(k, p)]);
            }
        }
        s
    }

    /// `ḡ^{kl} ḡ^{pq} (R̄ic_kp − ᴹ¹Ric_kp) R̄ic_lq`
    pub fn quad_diff(b: &BaseBlock) -> f64 {
        let m1 = b.gbar_inv.nrows();
        let mut s = 0.0;
        for k in 0..m1 {
            for l in 0..m1 {
                for p in 0..m1 {
                    for q in 0..m1 {
                        s += b.gbar_inv[(k, l)]
                            * b.gbar_inv[(p, q)]
                            * (b.ricbar[(k, p)] - b.ric1[(k, p)])
                            * b.ricbar[(l, q)];
                    }
                }
            }
        }
        s
    }

    /// RHS of the fiber Ricci evolution for a general fiber, per `g₂`.
    pub fn ricci_fiber(b: &BaseBlock, fib: &FiberBlock) -> f64 {
        // ḡ^{γδ}ḡ^{στ}R̄ic_δτ = (R̄ic/λ⁴) g₂^{γσ}; contracting the bracket with
        // g₂^{γσ} leaves ᴹ²Ric + |grad λ|² (1 − m₂) g₂
        let bracket = fib.fiber_ric + fib.grad_norm_sq * (1.0 - fib.m2);
        fib.lap_ricbar + 2.0 / fib.m2 * quad_diff(b) * fib.gbar
            - 2.0 * fib.ricbar * fib.ricbar / fib.gbar
            + 2.0 * fib.gbar * (fib.ricbar / (fib.gbar * fib.gbar)) * bracket
    }

    /// RHS of the fiber Ricci evolution for an Einstein fiber, per `g₂`.
    pub fn ricci_fiber_einstein(b: &BaseBlock, fib: &FiberBlock) -> f64 {
        fib.lap_ricbar - 2.0 / fib.m2 * trace_diff(b) * fib.ricbar
            + 2.0 / fib.m2 * quad_diff(b) * fib.gbar
    }

    /// RHS of the `f` evolution.
    pub fn f_evolution(b: &BaseBlock, f: f64, lap_f: f64, m2: f64) -> f64 {
        lap_f + 2.0 * f * f - 2.0 / m2 * trace_diff(b) * f + 2.0 / m2 * quad_diff(b)
    }
}

/// Right-hand sides with all base indices collapsed to `x` (one-dimensional
/// flat base, `ᴹ¹Ric = 0`).
pub mod collapsed {
    /// `Δ̄R̄ic_xx + (2/m₂) ḡ^{αβ}R̄ic_αβ R̄ic_xx − 2 ḡ^{xx} R̄ic_xx²`
    pub fn ricci_base(lap: f64, ric_xx: f64, gxx_inv: f64, trace: f64, m2: f64) -> f64 {
        lap + 2.0 / m2 * trace * ric_xx - 2.0 * (gxx_inv * ric_xx * ric_xx)
    }

    /// `Δ̄R̄ic_αβ − (2/m₂) ḡ^{xx}R̄ic_xx R̄ic_αβ + (2/m₂)(ḡ^{xx})² R̄ic_xx² ḡ_αβ`, per `g₂`
    pub fn ricci_fiber_einstein(
        lap: f64,
        ric_xx: f64,
        gxx_inv: f64,
        ric_fib: f64,
        g_fib: f64,
        m2: f64,
    ) -> f64 {
        lap - 2.0 / m2 * (gxx_inv * ric_xx) * ric_fib
            + 2.0 / m2 * (gxx_inv * gxx_inv * ric_xx * ric_xx) * g_fib
    }

    /// `Δ̄f + 2f² − (2/m₂) ḡ^{xx}R̄ic_xx f + (2/m₂)(ḡ^{xx})² R̄ic_xx²`
    pub fn f_evolution(lap_f: f64, f: f64, ric_xx: f64, gxx_inv: f64, m2: f64) -> f64 {
        lap_f + 2.0 * f * f - 2.0 / m2 * (gxx_inv * ric_xx) * f
            + 2.0 / m2 * (gxx_inv * gxx_inv * ric_xx * ric_xx)
    }
}

/// `ᴹ¹Ric_xx` of the base `μ² dx²` from the brute-force oracle.
fn base_ricci(state: &FlowState, i: usize) -> Result<f64> {
    let g = &state.grid;
    let mu_x = g.d1(&state.mu, Parity::Even)[i];
    let mu_xx = g.d2_fourth(&state.mu, Parity::Even)[i];
    let m = state.mu[i];
    let jet = MetricJet {
        g: DMatrix::from_element(1, 1, m * m),
        dg: vec![DMatrix::from_element(1, 1, 2.0 * m * mu_x)],
        ddg: vec![DMatrix::from_element(1, 1, 2.0 * (mu_x * mu_x + m * mu_xx))],
    };
    Ok(curvature_from_jet(&jet, &[g.x(i)])?.ricci[(0, 0)])
}

/// Index form used for the Ricci and `f` evolution residuals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum IndexForm {
    /// General sums over base indices with the base Ricci from the oracle.
    #[default]
    General,
    /// Base indices collapsed to `x`.
    Collapsed,
}

struct PointBlocks {
    base: BaseBlock,
    fiber: FiberBlock,
}

fn blocks(
    state: &FlowState,
    f: &Fields,
    rough: &(Vec<f64>, Vec<f64>),
    i: usize,
) -> Result<PointBlocks> {
    let m2 = state.n as f64;
    let one = |v: f64| DMatrix::from_element(1, 1, v);
    Ok(PointBlocks {
        base: BaseBlock {
            gbar_inv: one(1.0 / f.mu2[i]),
            ricbar: one(f.mu2[i] * f.a[i]),
            ric1: one(base_ricci(state, i)?),
            lap_ricbar: one(f.mu2[i] * rough.0[i]),
        },
        fiber: FiberBlock {
            m2,
            gbar: f.lam2[i],
            ricbar: f.lam2[i] * f.b[i],
            lap_ricbar: f.lam2[i] * rough.1[i],
            trace: m2 * f.b[i],
            fiber_ric: state.fiber_einstein_c,
            grad_norm_sq: f.lam_s[i] * f.lam_s[i],
        },
    })
}

/// Ricci evolution along a Ricci flow.
///
/// * `ricci-base-rf`: `∂ₜR̄ic_xx − RHS`
/// * `ricci-fiber-rf`: `∂ₜR̄ic_αβ − RHS` for a general fiber, per `g₂`
/// * `ricci-fiber-einstein-rf`: the Einstein-fiber form, per `g₂`; needs `ctx`
pub fn verify_ricci_evolution(
    traj: &FlowTrajectory,
    ctx: Option<&EinsteinFiberContext>,
    opts: &VerifyOptions,
    form: IndexForm,
) -> Result<TrajectoryResiduals> {
    if traj.coeffs() != FlowCoeffs::RICCI {
        return Err(Error::InvalidCoefficients(
            "Ricci evolution residuals are stated for Ricci flow only".into(),
        ));
    }
    if let Some(c) = ctx {
        c.check(&traj.snapshots[0])?;
    }
    along(traj, opts, |tc| {
        let s = tc.state();
        let f = tc.now();
        let m2 = s.n as f64;
        let rough = rough_laplacians(s, f)?;
        let ricxx_t = tc.dt_with(
            |fl| fl.mu2.iter().zip(&fl.a).map(|(g, a)| g * a).collect(),
            Deriv::First,
        );
        let ricf_t = tc.dt_with(
            |fl| fl.lam2.iter().zip(&fl.b).map(|(g, b)| g * b).collect(),
            Deriv::First,
        );
        let n = f.a.len();
        let (mut rb, mut rf, mut re) = (
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        );
        for i in 0..n {
            let pb = blocks(s, f, &rough, i)?;
            let (b, fb) = (&pb.base, &pb.fiber);
            let (base_rhs, ein_rhs) = match form {
                IndexForm::General => (
                    general::ricci_base(b, fb, 0, 0),
                    general::ricci_fiber_einstein(b, fb),
                ),
                IndexForm::Collapsed => (
                    collapsed::ricci_base(
                        b.lap_ricbar[(0, 0)],
                        b.ricbar[(0, 0)],
                        b.gbar_inv[(0, 0)],
                        fb.trace,
                        m2,
                    ),
                    collapsed::ricci_fiber_einstein(
                        fb.lap_ricbar,
                        b.ricbar[(0, 0)],
                        b.gbar_inv[(0, 0)],
                        fb.ricbar,
                        fb.gbar,
                        m2,
                    ),
                ),
            };
            rb.push(ricxx_t[i] - base_rhs);
            rf.push(ricf_t[i] - general::ricci_fiber(b, fb));
            re.push(ricf_t[i] - ein_rhs);
        }
        let mut out = vec![("ricci-base-rf", rb), ("ricci-fiber-rf", rf)];
        if ctx.is_some() {
            out.push(("ricci-fiber-einstein-rf", re));
        }
        Ok(out)
    })
}

/// `f` two ways at every node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FValues {
    /// `((4 − 2m₂)|grad λ|² − Δλ² + 2c) / (2λ²)`
    pub closed: Vec<f64>,
    /// `(1/m₂) ḡ^{αβ} R̄ic_αβ`
    pub trace: Vec<f64>,
}

pub fn compute_f(ctx: Option<&EinsteinFiberContext>, state: &FlowState) -> Result<FValues> {
    let ctx = ctx.ok_or(Error::NotEinsteinFiber)?;
    ctx.check(state)?;
    let f = Fields::new(state)?;
    Ok(FValues {
        closed: f.f,
        trace: f.b,
    })
}

/// `f-consistency` (closed versus trace form) and `fiber-proportionality`
/// (`R̄ic_αβ − f ḡ_αβ` per `g₂`, with `R̄ic_αβ` from the warped Ricci formula).
pub fn verify_f_consistency(
    ctx: Option<&EinsteinFiberContext>,
    state: &FlowState,
    opts: &VerifyOptions,
) -> Result<ResidualReport> {
    let fv = compute_f(ctx, state)?;
    let geo = geometry(state)?;
    let (m2, c) = (state.n as f64, state.fiber_einstein_c);
    let idx = opts.indices(state);
    let mut cons = Vec::with_capacity(idx.len());
    let mut prop = Vec::with_capacity(idx.len());
    for &i in &idx {
        let l = state.lam[i];
        let ric_fib = c - l * geo.lam_ss[i] - (m2 - 1.0) * geo.lam_s[i] * geo.lam_s[i];
        cons.push(fv.closed[i] - fv.trace[i]);
        prop.push(ric_fib - fv.closed[i] * l * l);
    }
    let mut r = ResidualReport::at(state.t);
    r.insert("f-consistency", &cons);
    r.insert("fiber-proportionality", &prop);
    Ok(r)
}

/// [`verify_f_consistency`] at every snapshot.
pub fn verify_f_consistency_along(
    traj: &FlowTrajectory,
    ctx: Option<&EinsteinFiberContext>,
    opts: &VerifyOptions,
) -> Result<TrajectoryResiduals> {
    let mut out = TrajectoryResiduals::default();
    for s in &traj.snapshots {
        out.push(verify_f_consistency(ctx, s, opts)?);
    }
    Ok(out)
}

/// `f-evolution`: `∂ₜf − [Δ̄f + 2f² − (2/m₂)ḡ^{kp}(R̄ic − ᴹ¹Ric)_kp f
/// + (2/m₂)ḡ^{kl}ḡ^{pq}(R̄ic − ᴹ¹Ric)_kp R̄ic_lq]`, with `Δ̄f` the Laplacian of
/// the base-lifted function `f`.
pub fn verify_f_evolution(
    traj: &FlowTrajectory,
    ctx: Option<&EinsteinFiberContext>,
    opts: &VerifyOptions,
    form: IndexForm,
) -> Result<TrajectoryResiduals> {
    require_einstein(ctx, traj)?;
    if traj.coeffs() != FlowCoeffs::RICCI {
        return Err(Error::InvalidCoefficients(
            "the f evolution is stated for Ricci flow only".into(),
        ));
    }
    along(traj, opts, |tc| {
        let s = tc.state();
        let f = tc.now();
        let m2 = s.n as f64;
        let rough = rough_laplacians(s, f)?;
        let lap_f = lifted_laplacian(s, &f.f)?;
        let f_t = tc.dt_of(|fl| &fl.f, Deriv::First);
        let mut r = Vec::with_capacity(f.f.len());
        for i in 0..f.f.len() {
            let rhs = match form {
                IndexForm::General => {
                    let pb = blocks(s, f, &rough, i)?;
                    general::f_evolution(&pb.base, f.f[i], lap_f[i], m2)
                }
                IndexForm::Collapsed => {
                    collapsed::f_evolution(lap_f[i], f.f[i], f.mu2[i] * f.a[i], 1.0 / f.mu2[i], m2)
                }
            };
            r.push(f_t[i] - rhs);
        }
        Ok(vec![("f-evolution", r)])
    })
}

/// Characterization residuals along a trajectory: `rf-char` and
/// `rf-char-hess` with `∂ₜλ` from snapshot differences for Ricci flow,
/// `hgf-char` and `hgf-char-offdiag` for the hyperbolic flow.
pub fn verify_characterization(
    traj: &FlowTrajectory,
    opts: &VerifyOptions,
) -> Result<TrajectoryResiduals> {
    use crate::flow::{hgf_characterization_values, rf_characterization_values};
    let idx = opts.indices(&traj.snapshots[0]);
    let mut out = TrajectoryResiduals::default();
    let mut push = |t: f64, names: [&str; 2], (u, v): (Vec<f64>, Vec<f64>)| {
        let mut r = ResidualReport::at(t);
        r.insert(names[0], &idx.iter().map(|&i| u[i]).collect::<Vec<_>>());
        r.insert(names[1], &idx.iter().map(|&i| v[i]).collect::<Vec<_>>());
        out.push(r);
    };
    match traj.coeffs() {
        FlowCoeffs::RICCI => {
            let reach = opts.time_order.reach();
            if traj.len() < 2 * reach + 1 {
                return Err(Error::InsufficientSnapshots {
                    needed: 2 * reach + 1,
                    got: traj.len(),
                });
            }
            let lams: Vec<&[f64]> = traj.snapshots.iter().map(|s| s.lam.as_slice()).collect();
            for j in reach..traj.len() - reach {
                let s = &traj.snapshots[j];
                let lam_t = time_derivative(&lams, j, traj.dt_snap, opts.time_order, Deriv::First);
                push(
                    s.t,
                    ["rf-char", "rf-char-hess"],
                    rf_characterization_values(s, &lam_t)?,
                );
            }
        }
        FlowCoeffs::HYPERBOLIC => {
            for s in &traj.snapshots {
                push(
                    s.t,
                    ["hgf-char", "hgf-char-offdiag"],
                    hgf_characterization_values(s)?,
                );
            }
        }
        other => {
            return Err(Error::InvalidCoefficients(format!(
                "characterization residuals are stated for Ricci or hyperbolic flow, not {other:?}"
            )))
        }
    }
    Ok(out)
}

/// Static Einstein residual at every snapshot.
pub fn verify_einstein(traj: &FlowTrajectory) -> Result<TrajectoryResiduals> {
    let mut out = TrajectoryResiduals::default();
    for s in &traj.snapshots {
        out.push(crate::flow::check_einstein(s)?);
    }
    Ok(out)
}

/// Runs the checks that produce the requested residual names.
pub fn verify_named(
    traj: &FlowTrajectory,
    ctx: Option<&EinsteinFiberContext>,
    opts: &VerifyOptions,
    names: &[String],
) -> Result<TrajectoryResiduals> {
    if let Some(bad) = names.iter().find(|n| !RESIDUAL_NAMES.contains(&n.as_str())) {
        return Err(Error::InvalidSpec(format!("unknown residual name {bad:?}")));
    }
    let wants = |group: &[&str]| names.iter().any(|n| group.contains(&n.as_str()));
    let mut all = TrajectoryResiduals::default();
    if wants(&[
        "flow-consistency",
        "base-metric-rf",
        "fiber-metric-rf",
        "base-metric-hgf",
    ]) {
        all.merge(verify_metric_evolution(traj, opts)?);
    }
    if wants(&["warp-rf", "warp-hgf"]) {
        all.merge(verify_warp_evolution(traj, ctx, opts)?);
    }
    if wants(&["ricci-fiber-einstein-rf"]) && ctx.is_none() {
        return Err(Error::NotEinsteinFiber);
    }
    if wants(&["ricci-base-rf", "ricci-fiber-rf", "ricci-fiber-einstein-rf"]) {
        all.merge(verify_ricci_evolution(traj, ctx, opts, IndexForm::General)?);
    }
    if wants(&["f-consistency", "fiber-proportionality"]) {
        all.merge(verify_f_consistency_along(traj, ctx, opts)?);
    }
    if wants(&["f-evolution"]) {
        all.merge(verify_f_evolution(traj, ctx, opts, IndexForm::General)?);
    }
    if wants(&["rf-char", "rf-char-hess", "hgf-char", "hgf-char-offdiag"]) {
        all.merge(verify_characterization(traj, opts)?);
    }
    if wants(&["einstein"]) {
        all.merge(verify_einstein(traj)?);
    }
    // keep only what was asked for
    let keep = |r: &mut ResidualReport| r.residuals.retain(|k, _| names.contains(k));
    all.reports.iter_mut().for_each(keep);
    keep(&mut all.summary);
    Ok(all)
}

/// Closed-form `f` of a warped product with Einstein fiber at a base point,
/// using the base operators of [`crate::manifold`].
pub fn f_closed_form(wp: &WarpedProductSpec, x: &[f64], h: f64) -> Result<f64> {
    use crate::manifold::{grad_norm_sq, laplacian, ScalarField, ScalarJet};
    use nalgebra::{DMatrix, DVector};
    let c = wp.einstein_c().ok_or(Error::NotEinsteinFiber)?;
    let w = wp.warp().clone();
    let wj = w.clone();
    // jet of λ² from the jet of λ, so no second differencing
    let lam2 = ScalarField::new("lambda^2", wp.base().domain().clone(), move |p| {
        w.eval(p).powi(2)
    })
    .with_analytic(move |p| {
        let j = wj.jet(p, h).unwrap_or_else(|_| ScalarJet {
            value: f64::NAN,
            grad: DVector::from_element(p.len(), f64::NAN),
            hess: DMatrix::from_element(p.len(), p.len(), f64::NAN),
        });
        ScalarJet {
            value: j.value * j.value,
            grad: 2.0 * j.value * &j.grad,
            hess: 2.0 * (&j.grad * j.grad.transpose() + j.value * &j.hess),
        }
    });
    let lam = wp.warp().eval(x);
    let m2 = wp.m2() as f64;
    let g2 = grad_norm_sq(wp.warp(), wp.base(), x, h)?;
    let lap = laplacian(&lam2, wp.base(), x, h)?;
    Ok(((4.0 - 2.0 * m2) * g2 - lap + 2.0 * c) / (2.0 * lam * lam))
}

/// Trace-form `f = (1/m₂) ḡ^{αβ} R̄ic_αβ` at a product point.
pub fn f_trace_form(wp: &WarpedProductSpec, point: &[f64], h: f64) -> Result<f64> {
    wp.einstein_c().ok_or(Error::NotEinsteinFiber)?;
    let geo = wp.geometry_at(point, h)?;
    let ric = geo.ricci_matrix();
    let m1 = wp.m1();
    let m2 = wp.m2();
    let lam2 = geo.lambda * geo.lambda;
    let ginv = &geo.fiber.inverse / lam2;
    let block = ric.view((m1, m1), (m2, m2)).into_owned();
    Ok(crate::manifold::trace_with(&ginv, &block) / m2 as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{integrate, profiles, Stepper};
    use crate::report::Residual;

    pub(crate) fn run(s: FlowState, dt: f64, t_end: f64, stride: usize) -> FlowTrajectory {
        let mut snaps = Vec::new();
        integrate(&s, dt, t_end, &Stepper::default(), stride, |st| {
            snaps.push(st.clone());
            Ok(())
        })
        .unwrap();
        FlowTrajectory::new(snaps).unwrap()
    }

    fn rf_names() -> Vec<String> {
        RESIDUAL_NAMES
            .iter()
            .filter(|n| !n.contains("hgf") && **n != "einstein")
            .map(|s| s.to_string())
            .collect()
    }

    fn summary(traj: &FlowTrajectory, opts: &VerifyOptions) -> ResidualReport {
        let ctx = EinsteinFiberContext::for_state(&traj.snapshots()[0]);
        verify_named(traj, Some(&ctx), opts, &rf_names())
            .unwrap()
            .summary
    }

    #[test]
    fn cylinder_residuals_vanish() {
        let t = run(
            profiles::cylinder(2, 1.0, 41, FlowCoeffs::RICCI).unwrap(),
            1e-4,
            1e-2,
            10,
        );
        let r = summary(&t, &VerifyOptions::default());
        for (name, v) in &r.residuals {
            match name.as_str() {
                // λ_t is not a multiple of λ here
                "rf-char" => assert!((v.linf - 1.0).abs() < 1e-2, "{name} {}", v.linf),
                "rf-char-hess" => assert!(v.linf < 1e-12, "{name} {}", v.linf),
                "f-evolution" => assert!(v.linf < 1e-4, "{name} {}", v.linf),
                _ => assert!(v.linf < 1e-6, "{name} {}", v.linf),
            }
        }
        let fourth = VerifyOptions {
            time_order: TimeOrder::Fourth,
            ..Default::default()
        };
        assert!(summary(&t, &fourth).linf("f-evolution").unwrap() < 1e-8);
    }

    #[test]
    fn residuals_decay_under_refinement() {
        let checked = [
            "base-metric-rf",
            "fiber-metric-rf",
            "warp-rf",
            "ricci-base-rf",
            "ricci-fiber-einstein-rf",
            "f-consistency",
        ];
        for name in ["sphere-profile:2,3", "bump-warp:2"] {
            let level = |n: usize, dt: f64| {
                let s = profiles::from_name(name, n, FlowCoeffs::RICCI).unwrap();
                summary(&run(s, dt, 100.0 * dt, 10), &VerifyOptions::default())
            };
            let (coarse, fine) = (level(81, 6e-4), level(161, 3e-4));
            for r in checked {
                let order = (coarse.linf(r).unwrap() / fine.linf(r).unwrap()).log2();
                assert!(order > 1.8, "{name} {r}: order {order}");
            }
        }
    }

    #[test]
    fn f_evolution_misses_the_rough_laplacian_term() {
        // Δ̄f differs from the fiber part of the rough Laplacian of R̄ic by
        // 2 (λ_s/λ)² (A − B); the measured residual is exactly that gap
        let s = profiles::bump_warp(2, 201, FlowCoeffs::RICCI).unwrap();
        let t = run(s, 2e-4, 4e-3, 10);
        let ctx = EinsteinFiberContext::for_state(&t.snapshots()[0]);
        let opts = VerifyOptions::default();
        let r = verify_f_evolution(&t, Some(&ctx), &opts, IndexForm::General).unwrap();
        let mid = &t.snapshots()[1];
        let fl = Fields::new(mid).unwrap();
        let gap: Vec<f64> = (0..fl.a.len())
            .map(|i| 2.0 * (fl.lam_s[i] / mid.lam[i]).powi(2) * (fl.a[i] - fl.b[i]))
            .collect();
        let want = Residual::from_values(&gap);
        let got = r.reports[0].get("f-evolution").unwrap();
        assert!(want.linf > 0.1);
        assert!(
            (got.linf / want.linf - 1.0).abs() < 2e-2,
            "{} {}",
            got.linf,
            want.linf
        );
        assert!(
            (got.l2 / want.l2 - 1.0).abs() < 2e-2,
            "{} {}",
            got.l2,
            want.l2
        );
    }

    #[test]
    fn collapsed_form_matches_general() {
        let s = profiles::bump_warp(3, 61, FlowCoeffs::RICCI).unwrap();
        let t = run(s, 1e-3, 6e-3, 2);
        let ctx = EinsteinFiberContext::for_state(&t.snapshots()[0]);
        let opts = VerifyOptions::default();
        let pairs = [
            (
                verify_ricci_evolution(&t, Some(&ctx), &opts, IndexForm::General).unwrap(),
                verify_ricci_evolution(&t, Some(&ctx), &opts, IndexForm::Collapsed).unwrap(),
            ),
            (
                verify_f_evolution(&t, Some(&ctx), &opts, IndexForm::General).unwrap(),
                verify_f_evolution(&t, Some(&ctx), &opts, IndexForm::Collapsed).unwrap(),
            ),
        ];
        for (g, c) in pairs {
            for (a, b) in g.reports.iter().zip(&c.reports) {
                for (name, ra) in &a.residuals {
                    let rb = b.get(name).unwrap();
                    assert!(
                        (ra.linf - rb.linf).abs() <= 1e-12 * ra.linf.max(1.0),
                        "{name}"
                    );
                }
            }
        }
    }

    #[test]
    fn errors() {
        let s = profiles::cylinder(2, 1.0, 21, FlowCoeffs::RICCI).unwrap();
        let short = FlowTrajectory::new(vec![s.clone(), s.clone()]);
        assert!(matches!(
            short,
            Err(Error::InsufficientSnapshots { needed: 3, got: 2 })
        ));
        let t = run(s, 1e-4, 1e-3, 5);
        let opts = VerifyOptions::default();
        assert!(matches!(
            verify_warp_evolution(&t, None, &opts),
            Err(Error::NotEinsteinFiber)
        ));
        assert!(matches!(
            verify_f_evolution(&t, None, &opts, IndexForm::General),
            Err(Error::NotEinsteinFiber)
        ));
        let four = VerifyOptions {
            time_order: TimeOrder::Fourth,
            ..Default::default()
        };
        assert!(matches!(
            verify_metric_evolution(&t, &four),
            Err(Error::InsufficientSnapshots { needed: 5, got: 3 })
        ));
        let bad = verify_named(&t, None, &opts, &["nope".to_string()]);
        assert!(matches!(bad, Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn sphere_split_f() {
        let wp = crate::warped::catalog::sphere_split(2).unwrap();
        for x in [0.7, 1.3, 2.0] {
            let closed = f_closed_form(&wp, &[x], 1e-4).unwrap();
            let trace = f_trace_form(&wp, &[x, 1.0, 0.5], 1e-4).unwrap();
            assert!((closed - 2.0).abs() < 1e-6, "{closed}");
            assert!((trace - 2.0).abs() < 1e-6, "{trace}");
        }
    }
}
