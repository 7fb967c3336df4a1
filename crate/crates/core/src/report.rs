//! Named residual norms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Max-norm and root-mean-square of one residual field.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Residual {
    pub linf: f64,
    pub l2: f64,
}

impl Residual {
    /// Norms of a list of pointwise residuals. NaN entries poison both norms.
    pub fn from_values(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let mut linf: f64 = 0.0;
        let mut sq = 0.0;
        for v in values {
            if v.is_nan() {
                return Self {
                    linf: f64::NAN,
                    l2: f64::NAN,
                };
            }
            linf = linf.max(v.abs());
            sq += v * v;
        }
        Self {
            linf,
            l2: (sq / values.len() as f64).sqrt(),
        }
    }

    /// Elementwise maximum, used to fold reports over time.
    pub fn max(self, other: Self) -> Self {
        Self {
            linf: nan_max(self.linf, other.linf),
            l2: nan_max(self.l2, other.l2),
        }
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

/// Residuals keyed by equation name, optionally stamped with a time.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub t: Option<f64>,
    pub residuals: BTreeMap<String, Residual>,
}

impl ResidualReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn at(t: f64) -> Self {
        Self {
            t: Some(t),
            ..Self::default()
        }
    }

    pub fn insert(&mut self, name: impl Into<String>, values: &[f64]) {
        self.residuals
            .insert(name.into(), Residual::from_values(values));
    }

    pub fn insert_residual(&mut self, name: impl Into<String>, r: Residual) {
        self.residuals.insert(name.into(), r);
    }

    pub fn get(&self, name: &str) -> Option<Residual> {
        self.residuals.get(name).copied()
    }

    pub fn linf(&self, name: &str) -> Option<f64> {
        self.get(name).map(|r| r.linf)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.residuals.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.residuals.is_empty()
    }

    /// Adds all entries of `other`, keeping the larger norms on name clashes.
    pub fn merge(&mut self, other: &ResidualReport) {
        for (k, v) in &other.residuals {
            self.residuals
                .entry(k.clone())
                .and_modify(|e| *e = e.max(*v))
                .or_insert(*v);
        }
    }

    /// Largest L∞ entry (NaN if any entry is NaN).
    pub fn max_linf(&self) -> f64 {
        self.residuals.values().fold(0.0, |m, r| nan_max(m, r.linf))
    }
}
