//! Coordinate-chart Riemannian metrics and brute-force connection/curvature.
//!
//! Everything here works directly from the metric components `g_ij(x)` and
//! their first and second partial derivatives, either supplied analytically
//! or obtained by central finite differences. This is the reference ("oracle")
//! path that the structure-exploiting warped product formulas are checked
//! against.
//!
//! Sign convention: `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`, with
//! `Ric(Y,Z) = tr(X ↦ R(X,Y)Z)` and `Rm(W,Z,X,Y) = g(W, R(X,Y)Z)`. The unit
//! sphere has `Ric = (n−1) g`.

pub mod catalog;
mod fd;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use fd::{FD_REACH, SECOND_DERIV_REACH};

/// One coordinate axis of a chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub periodic: bool,
}

impl Axis {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: false,
        }
    }

    pub fn periodic(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            periodic: true,
        }
    }

    pub fn extent(&self) -> f64 {
        self.hi - self.lo
    }

    fn wrap(&self, v: f64) -> f64 {
        if !self.periodic {
            return v;
        }
        let len = self.extent();
        let mut w = (v - self.lo) % len;
        if w < 0.0 {
            w += len;
        }
        self.lo + w
    }
}

/// Axis-aligned coordinate box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    axes: Vec<Axis>,
}

impl Domain {
    pub fn new(axes: Vec<Axis>) -> Self {
        Self { axes }
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        Self::new(vec![Axis::new(lo, hi); dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    /// Cartesian product, `self` axes first.
    pub fn product(&self, other: &Domain) -> Domain {
        let mut axes = self.axes.clone();
        axes.extend_from_slice(&other.axes);
        Domain { axes }
    }

    /// Default finite-difference step: 1e-3 of the smallest axis extent.
    pub fn default_step(&self) -> f64 {
        1e-3 * self
            .axes
            .iter()
            .map(Axis::extent)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn wrap(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.axes).map(|(v, a)| a.wrap(*v)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.axes)
                .all(|(v, a)| a.periodic || (*v >= a.lo && *v <= a.hi))
    }

    /// Fails unless `[x_k − reach, x_k + reach]` fits inside every non-periodic axis.
    pub fn check_stencil(&self, x: &[f64], reach: f64) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::InvalidSpec(format!(
                "point of dimension {} in a chart of dimension {}",
                x.len(),
                self.dim()
            )));
        }
        for (axis, (v, a)) in x.iter().zip(&self.axes).enumerate() {
            if !a.periodic && (v - reach < a.lo || v + reach > a.hi) {
                return Err(Error::OutOfDomain {
                    point: x.to_vec(),
                    axis,
                    reach,
                });
            }
        }
        Ok(())
    }
}

/// Metric components with first and second partial derivatives at a point.
///
/// `dg[k]` is `∂_k g` and `ddg[k * dim + l]` is `∂_k ∂_l g`.
#[derive(Debug, Clone)]
pub struct MetricJet {
    pub g: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub ddg: Vec<DMatrix<f64>>,
}

impl MetricJet {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn ddg(&self, k: usize, l: usize) -> &DMatrix<f64> {
        &self.ddg[k * self.dim() + l]
    }

    /// Largest absolute entry-wise difference over all three orders.
    pub fn max_abs_diff(&self, other: &MetricJet) -> f64 {
        let mut m = (&self.g - &other.g).amax();
        for (a, b) in self.dg.iter().zip(&other.dg) {
            m = m.max((a - b).amax());
        }
        for (a, b) in self.ddg.iter().zip(&other.ddg) {
            m = m.max((a - b).amax());
        }
        m
    }
}

/// Value, gradient and coordinate Hessian of a scalar at a point.
#[derive(Debug, Clone)]
pub struct ScalarJet {
    pub value: f64,
    pub grad: DVector<f64>,
    pub hess: DMatrix<f64>,
}

pub type ComponentFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
pub type MetricJetFn = dyn Fn(&[f64]) -> MetricJet + Send + Sync;
pub type ScalarFn = dyn Fn(&[f64]) -> f64 + Send + Sync;
pub type ScalarJetFn = dyn Fn(&[f64]) -> ScalarJet + Send + Sync;

/// A Riemannian metric on a single coordinate chart.
#[derive(Clone)]
pub struct MetricField {
    label: String,
    domain: Domain,
    components: Arc<ComponentFn>,
    analytic: Option<Arc<MetricJetFn>>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("label", &self.label)
            .field("dim", &self.dim())
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl MetricField {
    pub fn new(
        label: impl Into<String>,
        domain: Domain,
        components: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            domain,
            components: Arc::new(components),
            analytic: None,
        }
    }

    /// Attaches analytic first and second derivatives. The jet's `g` must agree
    /// with the component map.
    pub fn with_analytic(
        mut self,
        jet: impl Fn(&[f64]) -> MetricJet + Send + Sync + 'static,
    ) -> Self {
        self.analytic = Some(Arc::new(jet));
        self
    }

    /// Same metric with analytic derivatives dropped (finite differences only).
    pub fn without_analytic(&self) -> Self {
        Self {
            analytic: None,
            ..self.clone()
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Result<Self> {
        if domain.dim() != self.dim() {
            return Err(Error::InvalidSpec(format!(
                "domain of dimension {} for metric {} of dimension {}",
                domain.dim(),
                self.label,
                self.dim()
            )));
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn has_analytic(&self) -> bool {
        self.analytic.is_some()
    }

    /// Raw components at `x` (wrapped into periodic axes).
    pub fn components(&self, x: &[f64]) -> DMatrix<f64> {
        (self.components)(&self.domain.wrap(x))
    }

    /// Components at `x`, checked for finiteness, symmetry and positive definiteness.
    pub fn checked_components(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let g = self.components(x);
        validate_metric(&g, x)?;
        Ok(g)
    }

    /// Metric jet at `x`: analytic when available, else central differences with step `h`.
    pub fn jet(&self, x: &[f64], h: f64) -> Result<MetricJet> {
        match &self.analytic {
            Some(jet) => {
                self.domain.check_stencil(x, 0.0)?;
                let j = jet(&self.domain.wrap(x));
                validate_metric(&j.g, x)?;
                Ok(j)
            }
            None => self.fd_jet(x, h),
        }
    }

    /// Finite-difference jet regardless of analytic availability.
    pub fn fd_jet(&self, x: &[f64], h: f64) -> Result<MetricJet> {
        self.domain.check_stencil(x, FD_REACH * h)?;
        let g = self.checked_components(x)?;
        let dim = self.dim();
        let f = |p: &[f64]| self.components(p);
        let (dg, ddg) = fd::jet(&f, x, h, dim);
        for m in dg.iter().chain(&ddg) {
            if m.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!(
                    "metric derivative of {} at {x:?}",
                    self.label
                )));
            }
        }
        Ok(MetricJet { g, dg, ddg })
    }
}

fn validate_metric(g: &DMatrix<f64>, x: &[f64]) -> Result<()> {
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("metric components at {x:?}")));
    }
    let scale = g.amax().max(1.0);
    if (g - g.transpose()).amax() > 1e-12 * scale {
        return Err(Error::InvalidSpec(format!("metric not symmetric at {x:?}")));
    }
    if g.clone().cholesky().is_none() {
        return Err(Error::SingularMetric { point: x.to_vec() });
    }
    Ok(())
}

fn inverse_spd(g: &DMatrix<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
    g.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::SingularMetric { point: x.to_vec() })
}

/// A scalar function on a chart, such as a warping function.
#[derive(Clone)]
pub struct ScalarField {
    label: String,
    domain: Domain,
    eval: Arc<ScalarFn>,
    analytic: Option<Arc<ScalarJetFn>>,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarField")
            .field("label", &self.label)
            .field("dim", &self.domain.dim())
            .field("analytic", &self.analytic.is_some())
            .finish()
    }
}

impl ScalarField {
    pub fn new(
        label: impl Into<String>,
        domain: Domain,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            domain,
            eval: Arc::new(eval),
            analytic: None,
        }
    }

    pub fn constant(domain: Domain, c: f64) -> Self {
        let dim = domain.dim();
        Self::new(format!("{c}"), domain, move |_| c).with_analytic(move |_| ScalarJet {
            value: c,
            grad: DVector::zeros(dim),
            hess: DMatrix::zeros(dim, dim),
        })
    }

    pub fn with_analytic(
        mut self,
        jet: impl Fn(&[f64]) -> ScalarJet + Send + Sync + 'static,
    ) -> Self {
        self.analytic = Some(Arc::new(jet));
        self
    }

    pub fn without_analytic(&self) -> Self {
        Self {
            analytic: None,
            ..self.clone()
        }
    }

    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn has_analytic(&self) -> bool {
        self.analytic.is_some()
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(&self.domain.wrap(x))
    }

    /// Value, gradient and coordinate second derivatives at `x`.
    pub fn jet(&self, x: &[f64], h: f64) -> Result<ScalarJet> {
        let jet = match &self.analytic {
            Some(j) => {
                self.domain.check_stencil(x, 0.0)?;
                j(&self.domain.wrap(x))
            }
            None => self.fd_jet(x, h)?,
        };
        if !jet.value.is_finite()
            || jet
                .grad
                .iter()
                .chain(jet.hess.iter())
                .any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite(format!("scalar {} at {x:?}", self.label)));
        }
        Ok(jet)
    }

    pub fn fd_jet(&self, x: &[f64], h: f64) -> Result<ScalarJet> {
        self.domain.check_stencil(x, FD_REACH * h)?;
        let dim = self.domain.dim();
        let f = |p: &[f64]| DMatrix::from_element(1, 1, self.eval(p));
        let (d1, d2) = fd::jet(&f, x, h, dim);
        let grad = DVector::from_iterator(dim, d1.iter().map(|m| m[(0, 0)]));
        let hess = DMatrix::from_fn(dim, dim, |k, l| d2[k * dim + l][(0, 0)]);
        Ok(ScalarJet {
            value: self.eval(x),
            grad,
            hess,
        })
    }
}

/// Christoffel symbols of the second kind, `Γ^k_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `Γ^k_ij`
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.dim + i) * self.dim + j]
    }

    pub fn set(&mut self, k: usize, i: usize, j: usize, v: f64) {
        self.data[(k * self.dim + i) * self.dim + j] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `max |Γ^k_ij − Γ^k_ji|`
    pub fn asymmetry(&self) -> f64 {
        let n = self.dim;
        let mut m: f64 = 0.0;
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    m = m.max((self.get(k, i, j) - self.get(k, j, i)).abs());
                }
            }
        }
        m
    }
}

/// Fully covariant Riemann tensor, `Rm(a,b,c,d) = g(∂_a, R(∂_c,∂_d)∂_b)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    dim: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim.pow(4)],
        }
    }

    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &Riemann) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// Largest violation of the skew, pair and first Bianchi symmetries.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.dim;
        let mut m: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let r = self.get(a, b, c, d);
                        m = m.max((r + self.get(b, a, c, d)).abs());
                        m = m.max((r + self.get(a, b, d, c)).abs());
                        m = m.max((r - self.get(c, d, a, b)).abs());
                        let bianchi = r + self.get(a, c, d, b) + self.get(a, d, b, c);
                        m = m.max(bianchi.abs());
                    }
                }
            }
        }
        m
    }
}

/// Connection and curvature of a metric at one point.
#[derive(Debug, Clone)]
pub struct CurvatureBundle {
    pub metric: DMatrix<f64>,
    pub inverse: DMatrix<f64>,
    pub gamma: Christoffel,
    pub riemann: Riemann,
    pub ricci: DMatrix<f64>,
    pub scalar: f64,
}

impl CurvatureBundle {
    pub fn dim(&self) -> usize {
        self.metric.nrows()
    }

    /// `|scalar − g^{jk} Ric_jk|`
    pub fn trace_residual(&self) -> f64 {
        (self.scalar - trace_with(&self.inverse, &self.ricci)).abs()
    }
}

/// `g^{ij} T_ij`
pub fn trace_with(inverse: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    inverse.component_mul(t).sum()
}

fn christoffel_from_jet(jet: &MetricJet, inv: &DMatrix<f64>) -> Christoffel {
    let n = jet.dim();
    let mut gamma = Christoffel::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for j in i..n {
                let mut s = 0.0;
                for l in 0..n {
                    let first_kind =
                        0.5 * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
                    s += inv[(k, l)] * first_kind;
                }
                gamma.set(k, i, j, s);
                gamma.set(k, j, i, s);
            }
        }
    }
    gamma
}

/// `Γ^k_ij = ½ g^{kl}(∂_i g_jl + ∂_j g_il − ∂_l g_ij)` at `x`.
pub fn christoffel(metric: &MetricField, x: &[f64], h: f64) -> Result<Christoffel> {
    let jet = metric.jet(x, h)?;
    let inv = inverse_spd(&jet.g, x)?;
    Ok(christoffel_from_jet(&jet, &inv))
}

/// Curvature directly from a metric jet.
pub fn curvature_from_jet(jet: &MetricJet, x: &[f64]) -> Result<CurvatureBundle> {
    let n = jet.dim();
    let inv = inverse_spd(&jet.g, x)?;
    let gamma = christoffel_from_jet(jet, &inv);

    // ∂_m g^{kl} = −g^{ka} ∂_m g_ab g^{bl}
    let dinv: Vec<DMatrix<f64>> = (0..n).map(|m| -(&inv * &jet.dg[m] * &inv)).collect();

    // dgamma[m][(k,i,j)] = ∂_m Γ^k_ij
    let mut dgamma = vec![Christoffel::zeros(n); n];
    for (m, dg_m) in dgamma.iter_mut().enumerate() {
        for k in 0..n {
            for i in 0..n {
                for j in i..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        let first_kind =
                            0.5 * (jet.dg[i][(j, l)] + jet.dg[j][(i, l)] - jet.dg[l][(i, j)]);
                        let d_first_kind = 0.5
                            * (jet.ddg(m, i)[(j, l)] + jet.ddg(m, j)[(i, l)]
                                - jet.ddg(m, l)[(i, j)]);
                        s += dinv[m][(k, l)] * first_kind + inv[(k, l)] * d_first_kind;
                    }
                    dg_m.set(k, i, j, s);
                    dg_m.set(k, j, i, s);
                }
            }
        }
    }

    // R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_ip Γ^p_jk − Γ^l_jp Γ^p_ik
    let mut r_up = vec![0.0; n.pow(4)];
    let at = |l: usize, i: usize, j: usize, k: usize| ((l * n + i) * n + j) * n + k;
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = dgamma[i].get(l, j, k) - dgamma[j].get(l, i, k);
                    for p in 0..n {
                        v += gamma.get(l, i, p) * gamma.get(p, j, k)
                            - gamma.get(l, j, p) * gamma.get(p, i, k);
                    }
                    r_up[at(l, i, j, k)] = v;
                }
            }
        }
    }

    let mut riemann = Riemann::zeros(n);
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let v: f64 = (0..n).map(|m| jet.g[(a, m)] * r_up[at(m, c, d, b)]).sum();
                    riemann.set(a, b, c, d, v);
                }
            }
        }
    }

    let mut ricci = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            ricci[(j, k)] = (0..n).map(|i| r_up[at(i, i, j, k)]).sum();
        }
    }
    let scalar = trace_with(&inv, &ricci);

    Ok(CurvatureBundle {
        metric: jet.g.clone(),
        inverse: inv,
        gamma,
        riemann,
        ricci,
        scalar,
    })
}

/// Brute-force Riemann, Ricci and scalar curvature of `metric` at `x`.
pub fn curvature_direct(metric: &MetricField, x: &[f64], h: f64) -> Result<CurvatureBundle> {
    let jet = metric.jet(x, h)?;
    curvature_from_jet(&jet, x)
}

/// Covariant Hessian `∂_i∂_j f − Γ^k_ij ∂_k f`.
pub fn hessian(f: &ScalarField, metric: &MetricField, x: &[f64], h: f64) -> Result<DMatrix<f64>> {
    let gamma = christoffel(metric, x, h)?;
    let jet = f.jet(x, h)?;
    Ok(covariant_hessian(&jet, &gamma))
}

pub(crate) fn covariant_hessian(jet: &ScalarJet, gamma: &Christoffel) -> DMatrix<f64> {
    let n = gamma.dim();
    DMatrix::from_fn(n, n, |i, j| {
        let corr: f64 = (0..n).map(|k| gamma.get(k, i, j) * jet.grad[k]).sum();
        // symmetrize the coordinate part; the FD mixed stencil is symmetric already
        0.5 * (jet.hess[(i, j)] + jet.hess[(j, i)]) - corr
    })
}

/// `Δf = g^{ij} Hess(f)_ij`
pub fn laplacian(f: &ScalarField, metric: &MetricField, x: &[f64], h: f64) -> Result<f64> {
    let hess = hessian(f, metric, x, h)?;
    let g = metric.checked_components(x)?;
    let inv = inverse_spd(&g, x)?;
    Ok(trace_with(&inv, &hess))
}

/// `|grad f|² = g^{ij} ∂_i f ∂_j f`
pub fn grad_norm_sq(f: &ScalarField, metric: &MetricField, x: &[f64], h: f64) -> Result<f64> {
    let jet = f.jet(x, h)?;
    let g = metric.checked_components(x)?;
    let inv = inverse_spd(&g, x)?;
    Ok((jet.grad.transpose() * &inv * &jet.grad)[(0, 0)].max(0.0))
}
