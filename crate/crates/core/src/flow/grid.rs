//! Uniform 1-D grids and the finite-difference stencils used by the flow.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How a profile is continued past the ends of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    /// Wrap around; nodes at `lo + i dx`, `dx = L / N`.
    Periodic,
    /// Even reflection about the end nodes; nodes at `lo + i dx`, `dx = L / (N-1)`.
    Neumann,
    /// Both ends are poles where the fiber collapses. Nodes are staggered,
    /// `lo + (i + 1/2) dx` with `dx = L / N`, and each field is reflected
    /// about the end points with its own parity (see [`Parity`]).
    Pole,
}

/// Reflection symmetry of a field across a boundary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    Even,
    Odd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub boundary: Boundary,
}

/// Smallest grid the 5-point stencils can work with.
pub const MIN_POINTS: usize = 5;

impl Grid {
    pub fn new(n: usize, lo: f64, hi: f64, boundary: Boundary) -> Result<Self> {
        if n < MIN_POINTS {
            return Err(Error::InvalidSpec(format!(
                "grid needs at least {MIN_POINTS} points, got {n}"
            )));
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidSpec(format!(
                "empty grid interval [{lo}, {hi}]"
            )));
        }
        Ok(Self {
            n,
            lo,
            hi,
            boundary,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dx(&self) -> f64 {
        let l = self.hi - self.lo;
        match self.boundary {
            Boundary::Periodic | Boundary::Pole => l / self.n as f64,
            Boundary::Neumann => l / (self.n - 1) as f64,
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        let offset = match self.boundary {
            Boundary::Pole => 0.5,
            _ => 0.0,
        };
        self.lo + (i as f64 + offset) * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Value at a possibly out-of-range index, continued according to the boundary.
    fn at(&self, u: &[f64], i: isize, parity: Parity) -> f64 {
        let n = self.n as isize;
        if (0..n).contains(&i) {
            return u[i as usize];
        }
        let sign = match parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        };
        match self.boundary {
            Boundary::Periodic => u[i.rem_euclid(n) as usize],
            Boundary::Neumann => {
                let j = if i < 0 { -i } else { 2 * (n - 1) - i };
                sign * u[j as usize]
            }
            Boundary::Pole => {
                let j = if i < 0 { -1 - i } else { 2 * n - 1 - i };
                sign * u[j as usize]
            }
        }
    }

    /// First derivative, 4th-order central.
    pub fn d1(&self, u: &[f64], parity: Parity) -> Vec<f64> {
        let h = self.dx();
        (0..self.n as isize)
            .map(|i| {
                let f = |k: isize| self.at(u, i + k, parity);
                (f(-2) - f(2) + 8.0 * (f(1) - f(-1))) / (12.0 * h)
            })
            .collect()
    }

    /// Second derivative, 2nd-order central.
    pub fn d2(&self, u: &[f64], parity: Parity) -> Vec<f64> {
        let h2 = self.dx() * self.dx();
        (0..self.n as isize)
            .map(|i| {
                let f = |k: isize| self.at(u, i + k, parity);
                (f(1) - 2.0 * f(0) + f(-1)) / h2
            })
            .collect()
    }

    /// Second derivative, 4th-order central.
    pub fn d2_fourth(&self, u: &[f64], parity: Parity) -> Vec<f64> {
        let h2 = self.dx() * self.dx();
        (0..self.n as isize)
            .map(|i| {
                let f = |k: isize| self.at(u, i + k, parity);
                (16.0 * (f(1) + f(-1)) - f(2) - f(-2) - 30.0 * f(0)) / (12.0 * h2)
            })
            .collect()
    }

    /// Indices whose distance to a non-periodic end is at least `margin`.
    pub fn interior(&self, margin: f64) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| {
                self.boundary == Boundary::Periodic
                    || (self.x(i) - self.lo >= margin - 1e-12
                        && self.hi - self.x(i) >= margin - 1e-12)
            })
            .collect()
    }
}
