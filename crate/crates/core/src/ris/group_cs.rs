use super::canonical::lowering_defects;
use super::metaplectic::{expm_multiply, metaplectic_generator};
use super::su11::{su11_residual, su11_ris};
use super::{RisSpec, RisState, MAX_TRUNCATION, RESIDUAL_TOL, TAIL_TOL};
use crate::algebra::{BargmannIndex, BasisSpec, ModeSystem, QuantumState};
use crate::linalg::{c, cmax_abs};
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};

/// v = -u vtilde conj(utilde)^{-1}: the raising coefficient that makes
/// U(g)|lowest> an eigenstate of u E- + v E+, given
/// U^{-1} E- U = utilde E- + vtilde E+ + wtilde H.
pub fn group_cs_constraint(u: &DMatrix<C64>, utilde: &DMatrix<C64>, vtilde: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let ubar = utilde.map(|x| x.conj());
    let sv = ubar.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if smin <= 1e-12 * smax.max(1.0) {
        return Err(Error::SingularMap(format!("utilde has singular value {smin:e}")));
    }
    // v conj(utilde) = -u vtilde, solved from the right
    let rhs = -(u * vtilde);
    let vt = ubar
        .transpose()
        .full_piv_lu()
        .solve(&rhs.transpose())
        .ok_or_else(|| Error::SingularMap("utilde is not invertible".into()))?;
    Ok(vt.transpose())
}

/// Eigenvalue (u wtilde + v conj(wtilde)) h of the constrained combination on
/// U(g)|lowest>, where h is the Cartan weight of the lowest state.
pub fn group_cs_eigenvalue(u: C64, v: C64, wtilde: C64, lowest_weight: f64) -> C64 {
    (u * wtilde + v * wtilde.conj()) * lowest_weight
}

/// Coefficients of U^{-1} K- U = utilde K- + vtilde K+ + wtilde K3 for the
/// squeeze U = exp(xi K+ - conj(xi) K-) with tau = e^{i theta} tanh r,
/// xi = r e^{i theta}.
pub fn su11_squeeze_coefficients(tau: C64) -> Result<(C64, C64, C64)> {
    let t = tau.norm();
    if t >= 1.0 {
        return Err(Error::Domain(format!("|tau| = {t} must be below 1")));
    }
    let r = t.atanh();
    let phase = if t == 0.0 { c(1.0) } else { tau / t };
    Ok((c(r.cosh().powi(2)), phase * phase * r.sinh().powi(2), phase * (2.0 * r).sinh()))
}

fn group_cs_amplitudes(k: f64, tau: C64, dim: usize) -> DVector<C64> {
    let mut v = DVector::zeros(dim);
    let mut term = c((1.0 - tau.norm_sqr()).powf(k));
    for m in 0..dim {
        if m > 0 {
            let mf = m as f64;
            // (2k)_m / m! grows by (2k + m - 1)/m
            term *= tau * ((2.0 * k + mf - 1.0) / mf).sqrt();
        }
        v[m] = term;
    }
    v
}

/// The squeezed vacuum |tau; k> = (1 - |tau|^2)^k exp(tau K+)|0; k>, an
/// eigenstate of K- - tau^2 K+ with eigenvalue 2 k tau.
pub fn su11_group_cs(k: BargmannIndex, tau: C64, dim: usize) -> Result<RisState> {
    if tau.norm() >= 1.0 {
        return Err(Error::Domain(format!("|tau| = {} must be below 1", tau.norm())));
    }
    if dim < 16 {
        return Err(Error::InvalidTruncation(format!("truncation {dim} below 16")));
    }
    let kf = k.value();
    let z = tau * (2.0 * kf);
    let mut d = dim;
    let mut last_tail = 1.0;
    while d <= MAX_TRUNCATION {
        let psi = group_cs_amplitudes(kf, tau, d);
        let residual = su11_residual(c(1.0), -tau * tau, c(0.0), z, kf, psi.as_slice());
        let state = QuantumState::pure_normalized(psi, ModeSystem::single(BasisSpec::Su11 { k, dim: d })?)?;
        last_tail = state.tail_mass();
        if last_tail < TAIL_TOL && residual < RESIDUAL_TOL {
            return Ok(RisState::new(state, RisSpec::GroupCs { k, tau }, vec![z], residual, false));
        }
        d *= 2;
    }
    Err(Error::Truncation { tail_mass: last_tail, dim: MAX_TRUNCATION })
}

/// Image of a base eigenstate of the plain lowering operators under the
/// squeeze a -> u a + v a^dagger (K- -> u K- + v K+ for su(1,1)).
///
/// Canonical bases are transported by the metaplectic unitary; su(1,1)
/// bases are re-solved with the eigenvalue scaled by sqrt(|u|^2 - |v|^2).
pub fn squeeze_map(u: &DMatrix<C64>, v: &DMatrix<C64>, base: &RisState) -> Result<RisState> {
    match &base.spec {
        RisSpec::Canonical { u: bu, v: bv, alpha, dim } => {
            let n = bu.nrows();
            let identity = DMatrix::<C64>::identity(n, n);
            if cmax_abs(&(bu - &identity)) > 1e-12 || cmax_abs(bv) > 1e-12 {
                return Err(Error::Contract("base must be an eigenstate of the plain lowering operators".into()));
            }
            if u.nrows() != n || v.nrows() != n {
                return Err(Error::DimensionMismatch { expected: n, got: u.nrows() });
            }
            let g = metaplectic_generator(u, v, *dim)?;
            let out = expm_multiply(&g, base.amplitudes());
            let defect = (out.norm() - 1.0).abs();
            if defect > 1e-9 {
                return Err(Error::Contract(format!("metaplectic exponential lost unitarity (defect {defect:e})")));
            }
            let state = QuantumState::pure_normalized(out, base.state.system().clone())?;
            if state.tail_mass() >= TAIL_TOL {
                return Err(Error::Truncation { tail_mass: state.tail_mass(), dim: *dim });
            }
            let psi = state.amplitudes().expect("pure").clone();
            let residual = lowering_defects(u, v, alpha, &psi, *dim).into_iter().fold(0.0, f64::max);
            let spec = RisSpec::Canonical { u: u.clone(), v: v.clone(), alpha: alpha.clone(), dim: *dim };
            Ok(RisState::new(state, spec, alpha.iter().copied().collect(), residual, false))
        }
        RisSpec::Su11 { u: bu, v: bv, w, z, k } => {
            if (*bu - c(1.0)).norm() > 1e-12 || bv.norm() > 1e-12 || w.norm() > 1e-12 {
                return Err(Error::Contract("base must be a Barut-Girardello state".into()));
            }
            if u.shape() != (1, 1) || v.shape() != (1, 1) {
                return Err(Error::DimensionMismatch { expected: 1, got: u.nrows() });
            }
            let (su, sv) = (u[(0, 0)], v[(0, 0)]);
            let scale = su.norm_sqr() - sv.norm_sqr();
            if scale <= 0.0 {
                return Err(Error::NonNormalizable("|v| >= |u| has no squeezed image".into()));
            }
            su11_ris(su, sv, c(0.0), z * scale.sqrt(), *k, base.dim())
        }
        _ => Err(Error::Contract("no squeeze map for this family".into())),
    }
}
