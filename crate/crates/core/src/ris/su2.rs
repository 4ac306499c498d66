use super::{RisSpec, RisState};
use crate::algebra::{build_spin, BasisSpec, ModeSystem, OperatorMatrix, QuantumState};
use crate::linalg::{c, null_vector};
use crate::{Error, Result, C64};
use nalgebra::DMatrix;

const EXCLUDED_TOL: f64 = 1e-14;

fn beta_dot_j(beta: &[C64; 3], twice_j: u32) -> Result<DMatrix<C64>> {
    let s = build_spin(twice_j)?;
    Ok(s.j1.entries() * beta[0] + s.j2.entries() * beta[1] + s.j3.entries() * beta[2])
}

fn principal_b(beta: &[C64; 3]) -> Result<C64> {
    let b2 = beta[0] * beta[0] + beta[1] * beta[1] + beta[2] * beta[2];
    if b2.norm() <= EXCLUDED_TOL * beta.iter().map(|x| x.norm_sqr()).sum::<f64>().max(1e-300) {
        return Err(Error::ExcludedParameters(format!("beta . beta = {b2} vanishes")));
    }
    Ok(b2.sqrt())
}

const SCHUR_ITERATIONS: usize = 10_000;

/// Eigenvalues from a complex Schur form. Unshifted QR steps can stall on
/// symmetric tridiagonal inputs such as J1, so a stalled attempt is retried
/// on a DFT-conjugated copy, which has the same spectrum.
fn schur_eigenvalues(mat: &DMatrix<C64>) -> Result<Vec<C64>> {
    let n = mat.nrows();
    let attempt = |m: DMatrix<C64>| {
        m.try_schur(f64::EPSILON, SCHUR_ITERATIONS).and_then(|s| s.eigenvalues()).map(|e| e.iter().copied().collect())
    };
    if let Some(e) = attempt(mat.clone()) {
        return Ok(e);
    }
    let w = C64::from_polar(1.0, -2.0 * std::f64::consts::PI / n as f64);
    let f = DMatrix::from_fn(n, n, |i, k| w.powu((i * k) as u32) / (n as f64).sqrt());
    attempt(&f * mat * f.adjoint()).ok_or_else(|| Error::Contract("Schur form did not converge".into()))
}

/// Eigenvalues of beta . J from a complex Schur form, ordered to pair with
/// m b for m = j, j-1, ..., -j.
pub fn su2_spectrum(beta: [C64; 3], twice_j: u32) -> Result<Vec<C64>> {
    let b = principal_b(&beta)?;
    let mat = beta_dot_j(&beta, twice_j)?;
    let mut pool = schur_eigenvalues(&mat)?;
    let j = twice_j as f64 / 2.0;
    let mut out = Vec::with_capacity(pool.len());
    for i in 0..=twice_j as usize {
        let target = b * (j - i as f64);
        let (idx, _) = pool
            .iter()
            .enumerate()
            .map(|(n, e)| (n, (e - target).norm()))
            .fold((0, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        out.push(pool.swap_remove(idx));
    }
    Ok(out)
}

/// All 2j+1 eigenstates of beta . J, ordered m = j first. Each eigenvector
/// is the null vector of beta . J - m b, phased so its largest amplitude is
/// real and positive.
pub fn su2_ris(beta: [C64; 3], twice_j: u32) -> Result<Vec<RisState>> {
    let b = principal_b(&beta)?;
    let spectrum = su2_spectrum(beta, twice_j)?;
    let mat = beta_dot_j(&beta, twice_j)?;
    let dim = twice_j as usize + 1;
    let system = ModeSystem::single(BasisSpec::Spin { twice_j })?;
    let j = twice_j as f64 / 2.0;
    let mut out = Vec::with_capacity(dim);
    for (i, lambda) in spectrum.into_iter().enumerate() {
        let z = b * (j - i as f64);
        let shifted = &mat - DMatrix::<C64>::identity(dim, dim) * z;
        let (mut psi, _) = null_vector(&shifted);
        let lead = psi.iter().copied().fold(c(0.0), |acc, x| if x.norm() > acc.norm() { x } else { acc });
        psi *= lead.conj() / lead.norm();
        let psi = psi.normalize();
        let residual = (&shifted * &psi).norm();
        let state = QuantumState::pure(psi, system.clone())?;
        let spec = RisSpec::Su2 { beta, twice_j, m_twice: twice_j as i32 - 2 * i as i32 };
        out.push(RisState::new(state, spec, vec![lambda], residual, false));
    }
    Ok(out)
}

/// Observables minimized by the eigenstates: (J1, J2, J3) for real beta,
/// otherwise the hermitian and anti-hermitian parts of beta . J.
pub fn su2_observables(beta: [C64; 3], twice_j: u32) -> Result<Vec<OperatorMatrix>> {
    let s = build_spin(twice_j)?;
    if beta.iter().all(|x| x.im == 0.0) {
        return Ok(vec![s.j1, s.j2, s.j3]);
    }
    let a = &(&s.j1.scale(beta[0]) + &s.j2.scale(beta[1])) + &s.j3.scale(beta[2]);
    let (x, y) = a.quadratures();
    Ok(vec![x, y])
}
