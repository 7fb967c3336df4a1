//! Central finite-difference stencils for matrix-valued maps.

use nalgebra::DMatrix;

/// Reach of the 4th-order first-derivative stencil, in units of `h`.
pub const FD_REACH: f64 = 2.0;
/// Reach of the second-derivative stencils, in units of `h`.
pub const SECOND_DERIV_REACH: f64 = 1.0;

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut p = x.to_vec();
    for &(k, d) in moves {
        p[k] += d;
    }
    p
}

/// First derivatives (4th order) and second derivatives (2nd order) of `f` at `x`.
///
/// The second-derivative list is indexed `k * dim + l` and is symmetric in `(k, l)`.
pub(crate) fn jet<F>(f: &F, x: &[f64], h: f64, dim: usize) -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>)
where
    F: Fn(&[f64]) -> DMatrix<f64>,
{
    let centre = f(x);
    let mut first = Vec::with_capacity(dim);
    let mut second = vec![DMatrix::zeros(centre.nrows(), centre.ncols()); dim * dim];

    for k in 0..dim {
        let p1 = f(&shifted(x, &[(k, h)]));
        let m1 = f(&shifted(x, &[(k, -h)]));
        let p2 = f(&shifted(x, &[(k, 2.0 * h)]));
        let m2 = f(&shifted(x, &[(k, -2.0 * h)]));
        first.push((&m2 - &p2 + (&p1 - &m1) * 8.0) / (12.0 * h));
        second[k * dim + k] = (&p1 - &centre * 2.0 + &m1) / (h * h);
    }

    for k in 0..dim {
        for l in (k + 1)..dim {
            let pp = f(&shifted(x, &[(k, h), (l, h)]));
            let pm = f(&shifted(x, &[(k, h), (l, -h)]));
            let mp = f(&shifted(x, &[(k, -h), (l, h)]));
            let mm = f(&shifted(x, &[(k, -h), (l, -h)]));
            let d = (pp - pm - mp + mm) / (4.0 * h * h);
            second[l * dim + k] = d.clone();
            second[k * dim + l] = d;
        }
    }
    (first, second)
}
