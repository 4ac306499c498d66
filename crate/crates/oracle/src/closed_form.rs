//! Closed-form state vectors and special functions, written from their
//! textbook definitions.
//!
//! Basis conventions: Fock and discrete-series vectors are indexed by the
//! occupation / weight label m = 0, 1, ...; spin vectors by i = j - m, so
//! index 0 is the highest weight |j, j>.

use crate::{OracleError, Result, C64};
use nalgebra::DVector;

fn normalize(mut v: DVector<C64>) -> DVector<C64> {
    let n = v.norm();
    v /= C64::new(n, 0.0);
    v
}

/// Fock state |n> in a space of dimension `dim`.
pub fn fock(n: usize, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    v[n] = C64::new(1.0, 0.0);
    v
}

/// Glauber coherent state e^{-|a|^2/2} sum a^n / sqrt(n!) |n>, truncated
/// without renormalization.
pub fn glauber(alpha: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    let mut c = C64::new((-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for n in 0..dim {
        if n > 0 {
            c *= alpha / (n as f64).sqrt();
        }
        v[n] = c;
    }
    v
}

/// Even (`even = true`) or odd coherent state N (|a> +- |-a>) with
/// N^2 = 1 / (2 (1 +- e^{-2|a|^2})).
pub fn even_odd_cs(alpha: C64, even: bool, dim: usize) -> DVector<C64> {
    let sign = if even { 1.0 } else { -1.0 };
    let n2 = 1.0 / (2.0 * (1.0 + sign * (-2.0 * alpha.norm_sqr()).exp()));
    let plus = glauber(alpha, dim);
    let minus = glauber(-alpha, dim);
    (plus + minus * C64::new(sign, 0.0)) * C64::new(n2.sqrt(), 0.0)
}

/// SU(1,1) Perelomov coherent state (1 - |t|^2)^k sum sqrt((2k)_m / m!) t^m |m; k>.
pub fn su11_group_cs(k: f64, tau: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    let mut c = C64::new((1.0 - tau.norm_sqr()).powf(k), 0.0);
    for m in 0..dim {
        if m > 0 {
            let mf = m as f64;
            c *= tau * ((2.0 * k + mf - 1.0) / mf).sqrt();
        }
        v[m] = c;
    }
    v
}

/// Barut-Girardello state sum eta^m / sqrt(m! (2k)_m) |m; k>, normalized
/// numerically over the truncated basis.
pub fn barut_girardello(k: f64, eta: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    let mut c = C64::new(1.0, 0.0);
    for m in 0..dim {
        if m > 0 {
            let mf = m as f64;
            c *= eta / (mf * (2.0 * k + mf - 1.0)).sqrt();
        }
        v[m] = c;
    }
    normalize(v)
}

fn binomial(n: usize, r: usize) -> f64 {
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Spin coherent state (1 + |z|^2)^{-j} sum_n z^n sqrt(C(2j, n)) |j, n - j>.
pub fn su2_coherent(twice_j: usize, zeta: C64) -> DVector<C64> {
    let dim = twice_j + 1;
    let mut v = DVector::zeros(dim);
    for n in 0..dim {
        v[twice_j - n] = zeta.powu(n as u32) * binomial(twice_j, n).sqrt();
    }
    normalize(v)
}

/// Eigenstate of beta . J with eigenvalue m b, b = sqrt(beta . beta), from the
/// polynomial
///   (x - (b3 - b)/b_-)^{j+m} (x - (b3 + b)/b_-)^{j-m},  b_- = b1 - i b2,
/// whose coefficient of x^n is sqrt(C(2j, n)) times the amplitude of |j, n - j>.
/// The weight is passed as `j_plus_m` in 0..=2j.
pub fn su2_algebraic_state(beta: [C64; 3], twice_j: usize, j_plus_m: usize) -> Result<DVector<C64>> {
    let b = (beta[0] * beta[0] + beta[1] * beta[1] + beta[2] * beta[2]).sqrt();
    let bminus = beta[0] - C64::i() * beta[1];
    if b.norm() == 0.0 || bminus.norm() == 0.0 {
        return Err(OracleError::Degenerate("b^2 = 0 or b_- = 0".into()));
    }
    let r1 = (beta[2] - b) / bminus;
    let r2 = (beta[2] + b) / bminus;
    // polynomial coefficients, lowest degree first
    let mut poly = vec![C64::new(1.0, 0.0)];
    let mut mul_root = |root: C64| {
        let mut next = vec![C64::new(0.0, 0.0); poly.len() + 1];
        for (i, c) in poly.iter().enumerate() {
            next[i] -= root * c;
            next[i + 1] += c;
        }
        poly = next;
    };
    for _ in 0..j_plus_m {
        mul_root(r1);
    }
    for _ in 0..(twice_j - j_plus_m) {
        mul_root(r2);
    }
    let dim = twice_j + 1;
    let mut v = DVector::zeros(dim);
    for n in 0..dim {
        v[twice_j - n] = poly[n] / binomial(twice_j, n).sqrt();
    }
    Ok(normalize(v))
}

/// Hermite functions psi_0..psi_nmax at q for a = (q + ip)/sqrt(2), by the
/// three-term recurrence psi_n = sqrt(2/n) q psi_{n-1} - sqrt((n-1)/n) psi_{n-2}.
pub fn hermite_functions(nmax: usize, q: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(nmax + 1);
    h.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * q * q).exp());
    if nmax >= 1 {
        h.push(std::f64::consts::SQRT_2 * q * h[0]);
    }
    for n in 2..=nmax {
        let nf = n as f64;
        let next = (2.0 / nf).sqrt() * q * h[n - 1] - ((nf - 1.0) / nf).sqrt() * h[n - 2];
        h.push(next);
    }
    h
}

/// Coordinate-space wavefunction of a single-mode Fock expansion.
pub fn fock_to_position(amplitudes: &[C64], q: f64) -> C64 {
    let h = hermite_functions(amplitudes.len().saturating_sub(1), q);
    amplitudes.iter().zip(h.iter()).map(|(c, hn)| c * *hn).sum()
}

/// Eigenvector amplitudes of mu a + nu a^dagger with eigenvalue `beta`,
/// built from c_0 = 1 by mu sqrt(n+1) c_{n+1} = beta c_n - nu sqrt(n) c_{n-1}
/// and normalized.
pub fn single_mode_gaussian(mu: C64, nu: C64, beta: C64, dim: usize) -> DVector<C64> {
    let mut v: DVector<C64> = DVector::zeros(dim);
    v[0] = C64::new(1.0, 0.0);
    for n in 0..dim - 1 {
        let prev = if n > 0 { nu * (n as f64).sqrt() * v[n - 1] } else { C64::new(0.0, 0.0) };
        v[n + 1] = (beta * v[n] - prev) / (mu * ((n + 1) as f64).sqrt());
    }
    normalize(v)
}
