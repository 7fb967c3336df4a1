//! Built-in metrics, addressable by name.
//!
//! | name               | chart                                   |
//! |--------------------|-----------------------------------------|
//! | `euclidean:d`      | flat metric on `[-1, 1]^d`              |
//! | `sphere:n`         | round unit `S^n` in polar angles        |
//! | `hyperbolic:2`     | `dx² + e^{2x} dy²` on `[-1, 1]²`        |
//! | `diag:e1,...,ed`   | `diag(e1, ..., ed)` on `[-1, 1]^d`      |
//! | `circle:L`         | `ds²` on the periodic interval `[0, L)` |
//! | `interval:a,b`     | `ds²` on `[a, b]`                       |

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};

use super::{Axis, Domain, MetricField, MetricJet};
use crate::error::{Error, Result};
use crate::expr::Expr;

fn zero_jet(g: DMatrix<f64>) -> MetricJet {
    let d = g.nrows();
    MetricJet {
        dg: vec![DMatrix::zeros(d, d); d],
        ddg: vec![DMatrix::zeros(d, d); d * d],
        g,
    }
}

fn constant(label: String, domain: Domain, g: DMatrix<f64>) -> MetricField {
    let g2 = g.clone();
    MetricField::new(label, domain, move |_| g.clone()).with_analytic(move |_| zero_jet(g2.clone()))
}

pub fn euclidean(d: usize) -> MetricField {
    constant(
        format!("euclidean:{d}"),
        Domain::cube(d, -1.0, 1.0),
        DMatrix::identity(d, d),
    )
}

/// `ds²` on the periodic interval `[0, length)`.
pub fn circle(length: f64) -> MetricField {
    constant(
        format!("circle:{length}"),
        Domain::new(vec![Axis::periodic(0.0, length)]),
        DMatrix::identity(1, 1),
    )
}

/// `ds²` on `[lo, hi]`.
pub fn interval(lo: f64, hi: f64) -> MetricField {
    constant(
        format!("interval:{lo},{hi}"),
        Domain::new(vec![Axis::new(lo, hi)]),
        DMatrix::identity(1, 1),
    )
}

/// Round unit `S^n` with coordinates `(θ1, ..., θ_{n-1}, φ)`:
/// `g = dθ1² + sin²θ1 dθ2² + ... + (Π sin²θ_j) dφ²`.
pub fn sphere(n: usize) -> MetricField {
    if n == 1 {
        let mut c = circle(TAU);
        c.label = "sphere:1".into();
        return c;
    }
    let mut axes = vec![Axis::new(0.0, PI); n - 1];
    axes.push(Axis::periodic(0.0, TAU));
    let domain = Domain::new(axes);

    // g_kk = Π_{j<k} sin²(x_j), differentiated factor by factor
    let components = move |x: &[f64]| {
        DMatrix::from_diagonal(&DVector::from_fn(n, |k, _| {
            (0..k).map(|j| x[j].sin().powi(2)).product()
        }))
    };
    let jet = move |x: &[f64]| {
        let s2: Vec<f64> = x.iter().map(|v| v.sin().powi(2)).collect();
        let ds2: Vec<f64> = x.iter().map(|v| (2.0 * v).sin()).collect();
        let dds2: Vec<f64> = x.iter().map(|v| 2.0 * (2.0 * v).cos()).collect();
        let factor = |j: usize, dj: usize| match dj {
            0 => s2[j],
            1 => ds2[j],
            _ => dds2[j],
        };
        let entry = |k: usize, orders: &dyn Fn(usize) -> usize| -> f64 {
            (0..k).map(|j| factor(j, orders(j))).product()
        };
        let mut g = DMatrix::zeros(n, n);
        let mut dg = vec![DMatrix::zeros(n, n); n];
        let mut ddg = vec![DMatrix::zeros(n, n); n * n];
        for k in 0..n {
            g[(k, k)] = entry(k, &|_| 0);
            for a in 0..k {
                dg[a][(k, k)] = entry(k, &|j| usize::from(j == a));
                for b in 0..k {
                    ddg[a * n + b][(k, k)] =
                        entry(k, &|j| usize::from(j == a) + usize::from(j == b));
                }
            }
        }
        MetricJet { g, dg, ddg }
    };
    MetricField::new(format!("sphere:{n}"), domain, components).with_analytic(jet)
}

/// `dx² + e^{2x} dy²`, constant curvature −1.
pub fn hyperbolic2() -> MetricField {
    let g = |x: &[f64]| DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, (2.0 * x[0]).exp()]));
    let jet = move |x: &[f64]| {
        let e = (2.0 * x[0]).exp();
        let mut dg = vec![DMatrix::zeros(2, 2); 2];
        dg[0][(1, 1)] = 2.0 * e;
        let mut ddg = vec![DMatrix::zeros(2, 2); 4];
        ddg[0][(1, 1)] = 4.0 * e;
        MetricJet { g: g(x), dg, ddg }
    };
    MetricField::new("hyperbolic:2", Domain::cube(2, -1.0, 1.0), g).with_analytic(jet)
}

/// Diagonal metric with expression entries; derivatives by finite differences.
pub fn diag(exprs: &[&str]) -> Result<MetricField> {
    let d = exprs.len();
    if d == 0 {
        return Err(Error::InvalidSpec(
            "diag metric needs at least one entry".into(),
        ));
    }
    let parsed = exprs
        .iter()
        .map(|s| Expr::parse(s.trim(), d))
        .collect::<Result<Vec<_>>>()?;
    let label = format!("diag:{}", exprs.join(","));
    Ok(MetricField::new(
        label,
        Domain::cube(d, -1.0, 1.0),
        move |x| {
            DMatrix::from_diagonal(&DVector::from_iterator(d, parsed.iter().map(|e| e.eval(x))))
        },
    ))
}

fn parse_count(name: &str, arg: &str) -> Result<usize> {
    arg.trim()
        .parse::<usize>()
        .ok()
        .filter(|&v| v >= 1)
        .ok_or_else(|| Error::UnknownCatalog(format!("{name}: expected a positive integer")))
}

fn parse_reals(name: &str, arg: &str, count: usize) -> Result<Vec<f64>> {
    let v = arg
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|_| Error::UnknownCatalog(format!("{name}: bad numeric argument")))?;
    if v.len() != count || v.iter().any(|x| !x.is_finite()) {
        return Err(Error::UnknownCatalog(format!(
            "{name}: expected {count} finite number(s)"
        )));
    }
    Ok(v)
}

/// Looks up a metric by catalog name.
pub fn from_name(name: &str) -> Result<MetricField> {
    let (kind, arg) = name.split_once(':').unwrap_or((name, ""));
    match kind.trim() {
        "euclidean" => Ok(euclidean(parse_count(name, arg)?)),
        "sphere" => Ok(sphere(parse_count(name, arg)?)),
        "hyperbolic" if arg.trim() == "2" => Ok(hyperbolic2()),
        "diag" => diag(&arg.split(',').collect::<Vec<_>>()),
        "circle" => {
            let len = if arg.is_empty() {
                TAU
            } else {
                parse_reals(name, arg, 1)?[0]
            };
            if len <= 0.0 {
                return Err(Error::UnknownCatalog(format!(
                    "{name}: length must be positive"
                )));
            }
            Ok(circle(len))
        }
        "interval" => {
            let v = parse_reals(name, arg, 2)?;
            if v[1] <= v[0] {
                return Err(Error::UnknownCatalog(format!("{name}: empty interval")));
            }
            Ok(interval(v[0], v[1]))
        }
        _ => Err(Error::UnknownCatalog(name.to_string())),
    }
}
