//! Warped products `M₁ ×_λ M₂` with metric `ḡ = g₁ ⊕ λ² g₂`.
//!
//! Connection and curvature come from closed forms in terms of the factor
//! geometries and the base Hessian and gradient of `λ`. Product coordinates
//! are the base coordinates followed by the fiber coordinates.

pub mod catalog;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{
    christoffel, covariant_hessian, curvature_direct, curvature_from_jet, trace_with, Christoffel,
    CurvatureBundle, MetricField, MetricJet, Riemann, ScalarField, ScalarJet,
};
use crate::report::ResidualReport;

/// A tangent vector of the product split into base and fiber parts.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftVector {
    pub base_part: DVector<f64>,
    pub fiber_part: DVector<f64>,
}

impl LiftVector {
    pub fn new(base_part: DVector<f64>, fiber_part: DVector<f64>) -> Self {
        Self {
            base_part,
            fiber_part,
        }
    }

    /// Horizontal lift `(X₁, 0)`.
    pub fn horizontal(base_part: DVector<f64>, m2: usize) -> Self {
        Self::new(base_part, DVector::zeros(m2))
    }

    /// Vertical lift `(0, X₂)`.
    pub fn vertical(m1: usize, fiber_part: DVector<f64>) -> Self {
        Self::new(DVector::zeros(m1), fiber_part)
    }

    /// The `a`-th product coordinate vector.
    pub fn basis(m1: usize, m2: usize, a: usize) -> Self {
        let mut v = DVector::zeros(m1 + m2);
        v[a] = 1.0;
        Self::from_product(m1, &v)
    }

    pub fn from_product(m1: usize, v: &DVector<f64>) -> Self {
        let m2 = v.len() - m1;
        Self::new(v.rows(0, m1).into_owned(), v.rows(m1, m2).into_owned())
    }

    pub fn to_product(&self) -> DVector<f64> {
        let (m1, m2) = (self.base_part.len(), self.fiber_part.len());
        DVector::from_fn(m1 + m2, |a, _| {
            if a < m1 {
                self.base_part[a]
            } else {
                self.fiber_part[a - m1]
            }
        })
    }
}

/// Base metric, fiber metric and warping function.
#[derive(Debug, Clone)]
pub struct WarpedProductSpec {
    label: String,
    base: MetricField,
    fiber: MetricField,
    warp: ScalarField,
    einstein_c: Option<f64>,
}

impl WarpedProductSpec {
    pub fn new(
        label: impl Into<String>,
        base: MetricField,
        fiber: MetricField,
        warp: ScalarField,
    ) -> Result<Self> {
        if fiber.dim() < 2 {
            return Err(Error::InvalidSpec(format!(
                "fiber dimension m2 = {} but the curvature formulas require m2 >= 2",
                fiber.dim()
            )));
        }
        if warp.domain().dim() != base.dim() {
            return Err(Error::InvalidSpec(format!(
                "warping function lives in dimension {} but the base has dimension {}",
                warp.domain().dim(),
                base.dim()
            )));
        }
        let warp = warp.with_domain(base.domain().clone());
        Ok(Self {
            label: label.into(),
            base,
            fiber,
            warp,
            einstein_c: None,
        })
    }

    /// Declares `ᴹ²Ric = c g₂`; the fiber Ricci is then taken analytically.
    pub fn with_einstein(mut self, c: f64) -> Self {
        self.einstein_c = Some(c);
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn base(&self) -> &MetricField {
        &self.base
    }

    pub fn fiber(&self) -> &MetricField {
        &self.fiber
    }

    pub fn warp(&self) -> &ScalarField {
        &self.warp
    }

    pub fn einstein_c(&self) -> Option<f64> {
        self.einstein_c
    }

    pub fn m1(&self) -> usize {
        self.base.dim()
    }

    pub fn m2(&self) -> usize {
        self.fiber.dim()
    }

    pub fn dim(&self) -> usize {
        self.m1() + self.m2()
    }

    /// Drops analytic derivatives from every factor.
    pub fn without_analytic(&self) -> Self {
        Self {
            base: self.base.without_analytic(),
            fiber: self.fiber.without_analytic(),
            warp: self.warp.without_analytic(),
            ..self.clone()
        }
    }

    /// `(λ/c, c² g₂)`: the same product metric written with a rescaled fiber.
    pub fn rescaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidSpec(format!(
                "rescaling factor {c} must be positive"
            )));
        }
        let fiber_src = self.fiber.clone();
        let fiber_jet = self.fiber.clone();
        let c2 = c * c;
        let mut fiber = MetricField::new(
            format!("{}*{c2}", self.fiber.label()),
            self.fiber.domain().clone(),
            move |y| fiber_src.components(y) * c2,
        );
        if self.fiber.has_analytic() {
            fiber = fiber.with_analytic(move |y| {
                let j = fiber_jet.jet(y, 0.0).expect("analytic fiber jet");
                MetricJet {
                    g: j.g * c2,
                    dg: j.dg.into_iter().map(|m| m * c2).collect(),
                    ddg: j.ddg.into_iter().map(|m| m * c2).collect(),
                }
            });
        }
        let warp_src = self.warp.clone();
        let warp_jet = self.warp.clone();
        let mut warp = ScalarField::new(
            format!("({})/{c}", self.warp.label()),
            self.warp.domain().clone(),
            move |x| warp_src.eval(x) / c,
        );
        if self.warp.has_analytic() {
            warp = warp.with_analytic(move |x| {
                let j = warp_jet.jet(x, 0.0).expect("analytic warp jet");
                ScalarJet {
                    value: j.value / c,
                    grad: j.grad / c,
                    hess: j.hess / c,
                }
            });
        }
        Ok(Self {
            label: format!("{} rescaled by {c}", self.label),
            base: self.base.clone(),
            fiber,
            warp,
            einstein_c: self.einstein_c.map(|e| e / c2),
        })
    }

    fn split<'a>(&self, point: &'a [f64]) -> Result<(&'a [f64], &'a [f64])> {
        if point.len() != self.dim() {
            return Err(Error::InvalidSpec(format!(
                "point of dimension {} for a product of dimension {}",
                point.len(),
                self.dim()
            )));
        }
        Ok(point.split_at(self.m1()))
    }

    /// Fails unless `λ > 0` at every given base point.
    pub fn check_warp_positive(&self, base_points: &[Vec<f64>]) -> Result<()> {
        for x in base_points {
            let v = self.warp.eval(x);
            if v.is_nan() || v <= 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "warping function is {v} at {x:?}; it must be positive"
                )));
            }
        }
        Ok(())
    }

    /// The assembled metric `g₁ ⊕ λ² g₂` on the product chart.
    pub fn product_metric(&self) -> MetricField {
        let (m1, m2) = (self.m1(), self.m2());
        let n = m1 + m2;
        let domain = self.base.domain().product(self.fiber.domain());
        let (b, f, w) = (self.base.clone(), self.fiber.clone(), self.warp.clone());
        let components = move |p: &[f64]| {
            let (x, y) = p.split_at(m1);
            let lam = w.eval(x);
            let mut g = DMatrix::zeros(n, n);
            g.view_mut((0, 0), (m1, m1)).copy_from(&b.components(x));
            g.view_mut((m1, m1), (m2, m2))
                .copy_from(&(f.components(y) * (lam * lam)));
            g
        };
        let label = format!("product[{}]", self.label);
        let metric = MetricField::new(label, domain, components);
        if !(self.base.has_analytic() && self.fiber.has_analytic() && self.warp.has_analytic()) {
            return metric;
        }
        let (b, f, w) = (self.base.clone(), self.fiber.clone(), self.warp.clone());
        metric.with_analytic(move |p| {
            let (x, y) = p.split_at(m1);
            let jb = b.jet(x, 0.0).expect("analytic base jet");
            let jf = f.jet(y, 0.0).expect("analytic fiber jet");
            let jw = w.jet(x, 0.0).expect("analytic warp jet");
            product_jet(m1, m2, &jb, &jf, &jw)
        })
    }

    /// Everything the closed-form curvature expressions need at one product point.
    pub fn geometry_at(&self, point: &[f64], h: f64) -> Result<WarpedGeometry> {
        let (x, y) = self.split(point)?;
        let lam_jet = self.warp.jet(x, h)?;
        let lambda = lam_jet.value;
        if lambda.is_nan() || lambda <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "warping function is {lambda} at {x:?}; it must be positive"
            )));
        }
        let base = curvature_direct(&self.base, x, h)?;
        let fiber = curvature_direct(&self.fiber, y, h)?;
        let hess = covariant_hessian(&lam_jet, &base.gamma);
        let laplacian = trace_with(&base.inverse, &hess);
        let grad = &base.inverse * &lam_jet.grad;
        let grad_norm_sq = lam_jet.grad.dot(&grad).max(0.0);
        let (fiber_ricci, fiber_scalar) = match self.einstein_c {
            Some(c) => (&fiber.metric * c, c * self.m2() as f64),
            None => (fiber.ricci.clone(), fiber.scalar),
        };
        Ok(WarpedGeometry {
            m1: self.m1(),
            m2: self.m2(),
            lambda,
            dlambda: lam_jet.grad,
            grad,
            grad_norm_sq,
            hess,
            laplacian,
            base,
            fiber,
            fiber_ricci,
            fiber_scalar,
        })
    }
}

fn product_jet(m1: usize, m2: usize, jb: &MetricJet, jf: &MetricJet, jw: &ScalarJet) -> MetricJet {
    let n = m1 + m2;
    let lam = jw.value;
    let block = |base: Option<&DMatrix<f64>>, fib: Option<DMatrix<f64>>| {
        let mut g = DMatrix::zeros(n, n);
        if let Some(b) = base {
            g.view_mut((0, 0), (m1, m1)).copy_from(b);
        }
        if let Some(f) = fib {
            g.view_mut((m1, m1), (m2, m2)).copy_from(&f);
        }
        g
    };
    let g = block(Some(&jb.g), Some(&jf.g * (lam * lam)));
    let dg = (0..n)
        .map(|k| {
            if k < m1 {
                block(Some(&jb.dg[k]), Some(&jf.g * (2.0 * lam * jw.grad[k])))
            } else {
                block(None, Some(&jf.dg[k - m1] * (lam * lam)))
            }
        })
        .collect();
    let mut ddg = Vec::with_capacity(n * n);
    for k in 0..n {
        for l in 0..n {
            ddg.push(match (k < m1, l < m1) {
                (true, true) => {
                    let s = 2.0 * (jw.grad[k] * jw.grad[l] + lam * jw.hess[(k, l)]);
                    block(Some(jb.ddg(k, l)), Some(&jf.g * s))
                }
                (true, false) => block(None, Some(&jf.dg[l - m1] * (2.0 * lam * jw.grad[k]))),
                (false, true) => block(None, Some(&jf.dg[k - m1] * (2.0 * lam * jw.grad[l]))),
                (false, false) => block(None, Some(jf.ddg(k - m1, l - m1) * (lam * lam))),
            });
        }
    }
    MetricJet { g, dg, ddg }
}

/// Factor geometry and warp derivatives at one product point.
#[derive(Debug, Clone)]
pub struct WarpedGeometry {
    pub m1: usize,
    pub m2: usize,
    pub lambda: f64,
    /// Coordinate differential `∂_i λ`.
    pub dlambda: DVector<f64>,
    /// `grad λ` with respect to `g₁`.
    pub grad: DVector<f64>,
    pub grad_norm_sq: f64,
    /// Covariant Hessian of `λ` on the base.
    pub hess: DMatrix<f64>,
    pub laplacian: f64,
    pub base: CurvatureBundle,
    pub fiber: CurvatureBundle,
    /// `ᴹ²Ric`, either from the fiber oracle or `c g₂` for a declared Einstein fiber.
    pub fiber_ricci: DMatrix<f64>,
    pub fiber_scalar: f64,
}

impl WarpedGeometry {
    fn g2(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * &self.fiber.metric * b)[(0, 0)]
    }

    fn bilinear(m: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (a.transpose() * m * b)[(0, 0)]
    }

    fn gamma_apply(gamma: &Christoffel, a: &DVector<f64>, b: &DVector<f64>) -> DVector<f64> {
        let n = gamma.dim();
        DVector::from_fn(n, |k, _| {
            let mut s = 0.0;
            for i in 0..n {
                for j in 0..n {
                    s += gamma.get(k, i, j) * a[i] * b[j];
                }
            }
            s
        })
    }

    /// `∇̄_X Y` for constant-coefficient coordinate fields `X`, `Y`.
    pub fn connection(&self, x: &LiftVector, y: &LiftVector) -> LiftVector {
        let lam = self.lambda;
        let base = Self::gamma_apply(&self.base.gamma, &x.base_part, &y.base_part)
            - &self.grad * (lam * self.g2(&x.fiber_part, &y.fiber_part));
        let x1_lam = x.base_part.dot(&self.dlambda);
        let y1_lam = y.base_part.dot(&self.dlambda);
        let fiber = Self::gamma_apply(&self.fiber.gamma, &x.fiber_part, &y.fiber_part)
            + &y.fiber_part * (x1_lam / lam)
            + &x.fiber_part * (y1_lam / lam);
        LiftVector::new(base, fiber)
    }

    /// Product Christoffels `Γ̄^c_ab` assembled from the connection on basis lifts.
    pub fn christoffel(&self) -> Christoffel {
        let (m1, m2) = (self.m1, self.m2);
        let n = m1 + m2;
        let mut out = Christoffel::zeros(n);
        for a in 0..n {
            for b in 0..n {
                let v = self
                    .connection(&LiftVector::basis(m1, m2, a), &LiftVector::basis(m1, m2, b))
                    .to_product();
                for c in 0..n {
                    out.set(c, a, b, v[c]);
                }
            }
        }
        out
    }

    /// `R̄ic(X, Y)`.
    pub fn ricci(&self, x: &LiftVector, y: &LiftVector) -> f64 {
        let g2xy = self.g2(&x.fiber_part, &y.fiber_part);
        Self::bilinear(&self.base.ricci, &x.base_part, &y.base_part)
            + Self::bilinear(&self.fiber_ricci, &x.fiber_part, &y.fiber_part)
            - self.lambda * g2xy * self.laplacian
            - (self.m2 as f64 / self.lambda)
                * Self::bilinear(&self.hess, &x.base_part, &y.base_part)
            - (self.m2 as f64 - 1.0) * self.grad_norm_sq * g2xy
    }

    /// `R̄ic` in product coordinates.
    pub fn ricci_matrix(&self) -> DMatrix<f64> {
        let (m1, m2) = (self.m1, self.m2);
        let n = m1 + m2;
        let mut out = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in a..n {
                let v = self.ricci(&LiftVector::basis(m1, m2, a), &LiftVector::basis(m1, m2, b));
                out[(a, b)] = v;
                out[(b, a)] = v;
            }
        }
        out
    }

    /// `R̄m(W, Z, X, Y) = ḡ(W, R̄(X,Y)Z)`.
    pub fn riemann(&self, w: &LiftVector, z: &LiftVector, x: &LiftVector, y: &LiftVector) -> f64 {
        let lam = self.lambda;
        let (w1, z1, x1, y1) = (&w.base_part, &z.base_part, &x.base_part, &y.base_part);
        let (w2, z2, x2, y2) = (&w.fiber_part, &z.fiber_part, &x.fiber_part, &y.fiber_part);
        let hs = |a: &DVector<f64>, b: &DVector<f64>| Self::bilinear(&self.hess, a, b);
        contract4(&self.base.riemann, w1, z1, x1, y1)
            + lam * lam * contract4(&self.fiber.riemann, w2, z2, x2, y2)
            + lam * hs(y1, w1) * self.g2(x2, z2)
            - lam * hs(x1, w1) * self.g2(y2, z2)
            + lam * hs(x1, z1) * self.g2(w2, y2)
            - lam * hs(y1, z1) * self.g2(w2, x2)
            + lam * lam * self.grad_norm_sq * self.g2(x2, z2) * self.g2(w2, y2)
            - lam * lam * self.grad_norm_sq * self.g2(y2, z2) * self.g2(w2, x2)
    }

    /// `R̄m` on all product coordinate vectors.
    pub fn riemann_tensor(&self) -> Riemann {
        let (m1, m2) = (self.m1, self.m2);
        let n = m1 + m2;
        let e: Vec<LiftVector> = (0..n).map(|a| LiftVector::basis(m1, m2, a)).collect();
        let mut out = Riemann::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        out.set(a, b, c, d, self.riemann(&e[a], &e[b], &e[c], &e[d]));
                    }
                }
            }
        }
        out
    }

    /// `S̄cal`.
    pub fn scalar(&self) -> f64 {
        let (lam, m2) = (self.lambda, self.m2 as f64);
        self.base.scalar + self.fiber_scalar / (lam * lam)
            - (2.0 * m2 / lam) * self.laplacian
            - m2 * (m2 - 1.0) / (lam * lam) * self.grad_norm_sq
    }
}

fn contract4(
    r: &Riemann,
    w: &DVector<f64>,
    z: &DVector<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> f64 {
    let n = r.dim();
    let mut s = 0.0;
    for a in 0..n {
        if w[a] == 0.0 {
            continue;
        }
        for b in 0..n {
            if z[b] == 0.0 {
                continue;
            }
            for c in 0..n {
                if x[c] == 0.0 {
                    continue;
                }
                for d in 0..n {
                    s += r.get(a, b, c, d) * w[a] * z[b] * x[c] * y[d];
                }
            }
        }
    }
    s
}

/// `∇̄_X Y` at `point`, with `X`, `Y` extended as constant-coefficient coordinate fields.
pub fn warped_connection(
    wp: &WarpedProductSpec,
    x: &LiftVector,
    y: &LiftVector,
    point: &[f64],
    h: f64,
) -> Result<LiftVector> {
    Ok(wp.geometry_at(point, h)?.connection(x, y))
}

pub fn ricci_unified(
    wp: &WarpedProductSpec,
    x: &LiftVector,
    y: &LiftVector,
    point: &[f64],
    h: f64,
) -> Result<f64> {
    Ok(wp.geometry_at(point, h)?.ricci(x, y))
}

pub fn riemann_unified(
    wp: &WarpedProductSpec,
    vectors: [&LiftVector; 4],
    point: &[f64],
    h: f64,
) -> Result<f64> {
    let [w, z, x, y] = vectors;
    Ok(wp.geometry_at(point, h)?.riemann(w, z, x, y))
}

pub fn scalar_unified(wp: &WarpedProductSpec, point: &[f64], h: f64) -> Result<f64> {
    Ok(wp.geometry_at(point, h)?.scalar())
}

/// Deterministic sample of product points kept a fraction `inset` of each
/// non-periodic extent away from the boundary.
pub fn sample_points(wp: &WarpedProductSpec, count: usize, inset: f64) -> Vec<Vec<f64>> {
    let domain = wp.base().domain().product(wp.fiber().domain());
    // additive recurrence with irrational increments per axis
    let steps: Vec<f64> = (0..domain.dim())
        .map(|k| ((k as f64 + 2.0).sqrt()).fract())
        .collect();
    (0..count)
        .map(|i| {
            domain
                .axes()
                .iter()
                .zip(&steps)
                .map(|(a, s)| {
                    let u = (0.5 + (i as f64 + 1.0) * s).fract();
                    let pad = if a.periodic { 0.0 } else { inset * a.extent() };
                    a.lo + pad + u * (a.extent() - 2.0 * pad)
                })
                .collect()
        })
        .collect()
}

/// Unified versus brute-force curvature over a set of product points.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleComparison {
    pub residuals: ResidualReport,
    pub points: Vec<Vec<f64>>,
    pub unified_scalar: Vec<f64>,
    pub oracle_scalar: Vec<f64>,
}

/// Compares the closed forms against [`curvature_direct`] on the product metric.
///
/// Residual names: `connection`, `riemann`, `ricci`, `scalar`, `cross-ricci`
/// (the oracle's base/fiber Ricci block, which must vanish).
pub fn oracle_compare(
    wp: &WarpedProductSpec,
    points: &[Vec<f64>],
    h: f64,
) -> Result<OracleComparison> {
    use rayon::prelude::*;

    let product = wp.product_metric();
    let m1 = wp.m1();
    let rows = points
        .par_iter()
        .map(|p| -> Result<[f64; 7]> {
            let geo = wp.geometry_at(p, h)?;
            let direct = curvature_direct(&product, p, h)?;
            let gamma = christoffel(&product, p, h)?;
            let unified_ric = geo.ricci_matrix();
            let cross = direct.ricci.view((0, m1), (m1, wp.m2())).amax();
            Ok([
                geo.christoffel().max_abs_diff(&gamma),
                geo.riemann_tensor().max_abs_diff(&direct.riemann),
                (&unified_ric - &direct.ricci).amax(),
                (geo.scalar() - direct.scalar).abs(),
                cross,
                geo.scalar(),
                direct.scalar,
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    let col = |i: usize| rows.iter().map(|r| r[i]).collect::<Vec<f64>>();
    let mut residuals = ResidualReport::new();
    for (i, name) in ["connection", "riemann", "ricci", "scalar", "cross-ricci"]
        .iter()
        .enumerate()
    {
        residuals.insert(*name, &col(i));
    }
    Ok(OracleComparison {
        residuals,
        points: points.to_vec(),
        unified_scalar: col(5),
        oracle_scalar: col(6),
    })
}

/// Direct oracle curvature of the assembled product at `point`.
pub fn product_curvature(wp: &WarpedProductSpec, point: &[f64], h: f64) -> Result<CurvatureBundle> {
    let product = wp.product_metric();
    let jet = product.jet(point, h)?;
    curvature_from_jet(&jet, point)
}
