//! Uncertainty and mean-commutator matrices by explicit matrix products and
//! trace loops.

use crate::sampler::Sample;
use crate::C64;
use nalgebra::DMatrix;

fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    let n = a.nrows();
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for l in 0..n {
                acc += a[(i, l)] * b[(l, j)];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

fn trace_product(rho: &DMatrix<C64>, x: &DMatrix<C64>) -> C64 {
    let n = rho.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for l in 0..n {
            acc += rho[(i, l)] * x[(l, i)];
        }
    }
    acc
}

/// sigma_{mu nu} = <X_mu X_nu + X_nu X_mu>/2 - <X_mu><X_nu> and
/// C_{mu nu} = -(i/2) <[X_mu, X_nu]>.
pub fn brute_sigma(ops: &[DMatrix<C64>], state: &Sample) -> (DMatrix<f64>, DMatrix<f64>) {
    let rho = state.density();
    let n = ops.len();
    let means: Vec<f64> = ops.iter().map(|x| trace_product(&rho, x).re).collect();
    let mut sigma = DMatrix::zeros(n, n);
    let mut cmat = DMatrix::zeros(n, n);
    for mu in 0..n {
        for nu in 0..n {
            let xy = matmul(&ops[mu], &ops[nu]);
            let yx = matmul(&ops[nu], &ops[mu]);
            let anti = trace_product(&rho, &(&xy + &yx));
            let comm = trace_product(&rho, &(&xy - &yx));
            sigma[(mu, nu)] = 0.5 * anti.re - means[mu] * means[nu];
            cmat[(mu, nu)] = (C64::new(0.0, -0.5) * comm).re;
        }
    }
    (sigma, cmat)
}

/// Determinant by cofactor expansion along the first row. Exponential cost;
/// fine for the n <= 8 matrices it is used on.
pub fn cofactor_det(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    match n {
        0 => 1.0,
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => {
            let mut det = 0.0;
            for col in 0..n {
                let minor = m.clone().remove_row(0).remove_column(col);
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                det += sign * m[(0, col)] * cofactor_det(&minor);
            }
            det
        }
    }
}
