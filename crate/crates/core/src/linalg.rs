//! Small dense helpers shared by the numeric modules.

use crate::C64;
use nalgebra::{DMatrix, DVector};

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Determinant by LU with full pivoting.
pub fn det(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 1.0;
    }
    m.clone().full_piv_lu().determinant()
}

pub fn cdet(m: &DMatrix<C64>) -> C64 {
    if m.nrows() == 0 {
        return c(1.0);
    }
    m.clone().full_piv_lu().determinant()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn cmax_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

/// Largest |a_ij - conj(a_ji)|.
pub fn hermitian_residual(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut r: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            r = r.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    r
}

pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let n = 2 * n_modes;
    let mut j = DMatrix::zeros(n, n);
    for k in 0..n_modes {
        j[(k, n_modes + k)] = 1.0;
        j[(n_modes + k, k)] = -1.0;
    }
    j
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(c)
}

/// Symmetric eigendecomposition with eigenvalues sorted descending; ties
/// keep the order returned by the solver's column index.
pub fn sorted_symmetric_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = m.clone().symmetric_eigen();
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Applies f to the eigenvalues of a real symmetric matrix.
pub fn symmetric_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

/// Right null vector of a square matrix via SVD (the singular vector of the
/// smallest singular value) together with that singular value.
pub fn null_vector(m: &DMatrix<C64>) -> (DVector<C64>, f64) {
    let svd = m.clone().svd(false, true);
    let v_t = svd.v_t.expect("v_t requested");
    let (idx, smin) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &s)| if s < acc.1 { (i, s) } else { acc });
    let row = v_t.row(idx);
    (DVector::from_iterator(row.len(), row.iter().map(|x| x.conj())), smin)
}

/// Trace of m^k for k >= 1.
pub fn trace_power(m: &DMatrix<C64>, k: u32) -> C64 {
    let mut p = m.clone();
    for _ in 1..k {
        p = &p * m;
    }
    p.trace()
}

/// Neumaier-compensated complex accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct CompensatedSum {
    sum: C64,
    comp: C64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = if a.abs() >= b.abs() { (a - s) + b } else { (b - s) + a };
    (s, err)
}

impl CompensatedSum {
    pub fn add(&mut self, x: C64) {
        let (re, ere) = two_sum(self.sum.re, x.re);
        let (im, eim) = two_sum(self.sum.im, x.im);
        self.sum = C64::new(re, im);
        self.comp += C64::new(ere, eim);
    }

    pub fn value(&self) -> C64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symplectic_form_squares_to_minus_identity() {
        let j = symplectic_form(3);
        assert_eq!(&j * &j, -DMatrix::<f64>::identity(6, 6));
        assert_eq!(j.transpose(), -j);
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(c(1e16));
        for _ in 0..10 {
            s.add(c(1.0));
        }
        s.add(c(-1e16));
        assert_eq!(s.value().re, 10.0);
    }

    #[test]
    fn null_vector_of_rank_deficient() {
        let m = DMatrix::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(4.0)]);
        let (v, s) = null_vector(&m);
        assert!(s < 1e-14);
        assert!((&m * v).norm() < 1e-14);
    }
}
