use super::{RisSpec, RisState, TAIL_TOL};
use crate::algebra::{canonical_quadratures, ModeSystem, OperatorMatrix, QuantumState};
use crate::linalg::c;
use crate::moments::uncertainty_pair;
use crate::transform::williamson_diagonalize;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};
use std::f64::consts::{FRAC_1_SQRT_2, PI};

const SINGULAR_TOL: f64 = 1e-12;
const SYMMETRY_TOL: f64 = 1e-10;

fn check_shapes(u: &DMatrix<C64>, v: &DMatrix<C64>, alpha: &DVector<C64>) -> Result<usize> {
    let n = u.nrows();
    if n == 0 || u.ncols() != n {
        return Err(Error::Contract("u must be a non-empty square matrix".into()));
    }
    for got in [v.nrows(), v.ncols(), alpha.len()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    Ok(n)
}

fn smallest_singular(m: &DMatrix<C64>) -> (f64, f64) {
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    (min, max)
}

/// Bogoliubov matrix [[u, v], [conj v, conj u]].
fn bogoliubov(u: &DMatrix<C64>, v: &DMatrix<C64>) -> DMatrix<C64> {
    let n = u.nrows();
    let mut t = DMatrix::zeros(2 * n, 2 * n);
    t.view_mut((0, 0), (n, n)).copy_from(u);
    t.view_mut((0, n), (n, n)).copy_from(v);
    t.view_mut((n, 0), (n, n)).copy_from(&v.map(|x| x.conj()));
    t.view_mut((n, n), (n, n)).copy_from(&u.map(|x| x.conj()));
    t
}

/// Amplitude at the given occupations, zero outside the box.
fn amp(psi: &DVector<C64>, occ: &[isize], dim: usize) -> C64 {
    let mut idx = 0usize;
    for &n in occ {
        if n < 0 || n as usize >= dim {
            return c(0.0);
        }
        idx = idx * dim + n as usize;
    }
    psi[idx]
}

/// Defect ||(sum_k u_jk a_k + v_jk a_k^dagger - alpha_j) psi|| for every j,
/// evaluated on the box enlarged by one level per mode so that the
/// truncation edge is not hidden.
pub(crate) fn lowering_defects(
    u: &DMatrix<C64>,
    v: &DMatrix<C64>,
    alpha: &DVector<C64>,
    psi: &DVector<C64>,
    dim: usize,
) -> Vec<f64> {
    let n = u.nrows();
    let ext = dim + 1;
    let total = ext.pow(n as u32);
    let mut sums = vec![0.0; n];
    let mut occ = vec![0isize; n];
    for flat in 0..total {
        let mut rem = flat;
        for slot in occ.iter_mut().rev() {
            *slot = (rem % ext) as isize;
            rem /= ext;
        }
        let here = amp(psi, &occ, dim);
        let mut shifted = occ.clone();
        for j in 0..n {
            let mut out = -alpha[j] * here;
            for k in 0..n {
                let nk = occ[k];
                shifted[k] = nk + 1;
                out += u[(j, k)] * ((nk + 1) as f64).sqrt() * amp(psi, &shifted, dim);
                if nk > 0 {
                    shifted[k] = nk - 1;
                    out += v[(j, k)] * (nk as f64).sqrt() * amp(psi, &shifted, dim);
                }
                shifted[k] = nk;
            }
            sums[j] += out.norm_sqr();
        }
    }
    sums.into_iter().map(f64::sqrt).collect()
}

/// Simultaneous eigenstate of a'_j = sum_k u_jk a_k + v_jk a_k^dagger with
/// eigenvalues alpha_j, on a box of `dim` levels per mode.
///
/// Writing a'_j = u (a - X a^dagger) with X = -u^{-1} v, the Fock
/// coefficients obey
///   sqrt(n_j) c_n = y_j c_{n-e_j} + sum_k X_jk sqrt(n_k - delta_jk) c_{n-e_j-e_k},
/// y = u^{-1} alpha, which is consistent across j only for symmetric X.
pub fn canonical_ris(u: &DMatrix<C64>, v: &DMatrix<C64>, alpha: &DVector<C64>, dim: usize) -> Result<RisState> {
    let n = check_shapes(u, v, alpha)?;
    if dim < 2 {
        return Err(Error::InvalidTruncation(format!("dimension {dim} < 2")));
    }
    let (smin, smax) = smallest_singular(&bogoliubov(u, v));
    if smin <= SINGULAR_TOL * smax.max(1.0) {
        return Err(Error::SingularMap(format!("Bogoliubov matrix has singular value {smin:e}")));
    }
    let lu = u.clone().full_piv_lu();
    let (umin, umax) = smallest_singular(u);
    if umin <= SINGULAR_TOL * umax.max(1.0) {
        return Err(Error::NonNormalizable("u is singular: some combination of a'_j is a pure creation operator".into()));
    }
    let x = -lu.solve(v).ok_or_else(|| Error::SingularMap("u is not invertible".into()))?;
    let (mut worst_row, mut worst) = (0, 0.0);
    for j in 0..n {
        for k in 0..n {
            let d = (x[(j, k)] - x[(k, j)]).norm();
            if d > worst {
                worst = d;
                worst_row = j;
            }
        }
    }
    if worst > SYMMETRY_TOL {
        return Err(Error::NotSolvable { j: worst_row, residual: worst });
    }
    let xnorm = x.clone().singular_values().iter().cloned().fold(0.0, f64::max);
    if xnorm >= 1.0 {
        return Err(Error::NonNormalizable(format!("||u^-1 v|| = {xnorm} is not below 1")));
    }
    let y = lu.solve(alpha).ok_or_else(|| Error::SingularMap("u is not invertible".into()))?;

    let system = ModeSystem::fock(n, dim)?;
    let total = system.total_dim();
    let mut coeffs = DVector::<C64>::zeros(total);
    coeffs[0] = c(1.0);
    for flat in 1..total {
        let occ = system.occupations(flat);
        let j = occ.iter().position(|&o| o > 0).expect("nonzero flat index");
        let mut prev: Vec<isize> = occ.iter().map(|&o| o as isize).collect();
        prev[j] -= 1;
        let mut acc = y[j] * amp(&coeffs, &prev, dim);
        for k in 0..n {
            let mk = prev[k];
            if mk > 0 {
                prev[k] -= 1;
                acc += x[(j, k)] * (mk as f64).sqrt() * amp(&coeffs, &prev, dim);
                prev[k] += 1;
            }
        }
        coeffs[flat] = acc / (occ[j] as f64).sqrt();
    }
    let state = QuantumState::pure_normalized(coeffs, system)?;
    if state.tail_mass() >= TAIL_TOL {
        return Err(Error::Truncation { tail_mass: state.tail_mass(), dim });
    }
    let psi = state.amplitudes().expect("pure").clone();
    let residual = lowering_defects(u, v, alpha, &psi, dim).into_iter().fold(0.0, f64::max);
    let spec = RisSpec::Canonical { u: u.clone(), v: v.clone(), alpha: alpha.clone(), dim };
    Ok(RisState::new(state, spec, alpha.iter().copied().collect(), residual, false))
}

/// Quadratures (p_1..p_N, q_1..q_N) on the same Fock box.
pub fn canonical_observables(n_modes: usize, dim: usize) -> Result<Vec<OperatorMatrix>> {
    canonical_quadratures(n_modes, dim)
}

/// (lambda_q, lambda_p) with a' = (lambda_q q + lambda_p p)/sqrt(2).
pub fn lambda_blocks(u: &DMatrix<C64>, v: &DMatrix<C64>) -> (DMatrix<C64>, DMatrix<C64>) {
    (u + v, (u - v) * C64::i())
}

/// Coordinate wavefunction exp(gamma + nu.q - q mu q / 2) of the eigenstate
/// of a' = (lambda_q q + lambda_p p)/sqrt(2) with eigenvalues alpha, at
/// each sample point, with mu = i lambda_p^{-1} lambda_q and
///   nu    = (lambda_q^dagger - lambda_p^{-1} lambda_q lambda_p^dagger) alpha / sqrt(2),
///   gamma = -|alpha|^2/2 + (i/4) alpha^T (conj(lambda_p) lambda_p^{-1} lambda_q lambda_p^dagger
///           - conj(lambda_q) lambda_p^dagger) alpha,
/// and prefactor pi^{-N/4} det(Re mu)^{1/4}.
pub fn gaussian_wavefunction(
    lambda_q: &DMatrix<C64>,
    lambda_p: &DMatrix<C64>,
    alpha: &DVector<C64>,
    points: &[DVector<f64>],
) -> Result<Vec<C64>> {
    let n = lambda_q.nrows();
    if !(1..=2).contains(&n) {
        return Err(Error::Contract(format!("coordinate wavefunctions support 1 or 2 modes, got {n}")));
    }
    for got in [lambda_q.ncols(), lambda_p.nrows(), lambda_p.ncols(), alpha.len()] {
        if got != n {
            return Err(Error::DimensionMismatch { expected: n, got });
        }
    }
    let (pmin, pmax) = smallest_singular(lambda_p);
    if pmin <= SINGULAR_TOL * pmax.max(1.0) {
        return Err(Error::SingularMap("lambda_p is singular".into()));
    }
    let p_inv = lambda_p.clone().try_inverse().ok_or_else(|| Error::SingularMap("lambda_p is singular".into()))?;
    let mu = &p_inv * lambda_q * C64::i();
    let re_mu = mu.map(|x| x.re);
    let re_mu = (&re_mu + re_mu.transpose()) * 0.5;
    let det_re = match re_mu.clone().cholesky() {
        Some(ch) => ch.determinant(),
        None => return Err(Error::NonNormalizable("Re mu is not positive definite".into())),
    };
    let p_dag = lambda_p.adjoint();
    let nu = (lambda_q.adjoint() - &p_inv * lambda_q * &p_dag) * alpha * c(FRAC_1_SQRT_2);
    let inner = lambda_p.map(|x| x.conj()) * &p_inv * lambda_q * &p_dag - lambda_q.map(|x| x.conj()) * &p_dag;
    let quad = (alpha.transpose() * &inner * alpha)[(0, 0)];
    let gamma = c(-0.5 * alpha.norm_squared()) + C64::new(0.0, 0.25) * quad;
    let prefactor = PI.powf(-(n as f64) / 4.0) * det_re.powf(0.25);
    points
        .iter()
        .map(|q| {
            if q.len() != n {
                return Err(Error::DimensionMismatch { expected: n, got: q.len() });
            }
            let qc = q.map(c);
            let lin = (nu.transpose() * &qc)[(0, 0)];
            let form = (qc.transpose() * &mu * &qc)[(0, 0)];
            Ok((gamma + lin - form * 0.5).exp() * prefactor)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct CanonicalFit {
    pub u: DMatrix<C64>,
    pub v: DMatrix<C64>,
    pub alpha: DVector<C64>,
    /// Products of variance pairs after Williamson diagonalization.
    pub pair_products: DVector<f64>,
    /// Largest eigen-equation defect of the recovered a'_j.
    pub residual: f64,
}

/// Recovers (u, v, alpha) for a Fock-box state whose canonical moments are
/// minimal: Williamson-diagonalize sigma(p, q), read off the symplectic map,
/// and test the state against the resulting lowering operators.
pub fn recover_canonical_ris(state: &QuantumState, n_modes: usize, dim: usize) -> Result<CanonicalFit> {
    let psi = state
        .amplitudes()
        .ok_or_else(|| Error::Contract("recovery needs a pure state".into()))?;
    let ops = canonical_quadratures(n_modes, dim)?;
    let pair = uncertainty_pair(&ops, state)?;
    let w = williamson_diagonalize(&pair.sigma)?;
    let lam = &w.map.lambda;
    let n = n_modes;
    let blk = |r: usize, cidx: usize| lam.view((r, cidx), (n, n)).map(c);
    // rows 0..n give p', rows n..2n give q'; columns likewise (p, q)
    let lambda_p = blk(n, 0) + blk(0, 0) * C64::i();
    let lambda_q = blk(n, n) + blk(0, n) * C64::i();
    let u = (&lambda_q - &lambda_p * C64::i()) * c(0.5);
    let v = (&lambda_q + &lambda_p * C64::i()) * c(0.5);
    let means: Vec<C64> = ops.iter().map(|o| psi.dotc(&o.apply(psi))).collect();
    let alpha = DVector::from_fn(n, |j, _| {
        let mut s = c(0.0);
        for k in 0..n {
            s += lambda_q[(j, k)] * means[n + k] + lambda_p[(j, k)] * means[k];
        }
        s * FRAC_1_SQRT_2
    });
    let residual = lowering_defects(&u, &v, &alpha, psi, dim).into_iter().fold(0.0, f64::max);
    Ok(CanonicalFit { u, v, alpha, pair_products: w.pair_products.clone(), residual })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::symplectic_form;
    use crate::moments::robertson_minimized;
    use robertson_oracle::closed_form::{fock_to_position, glauber, single_mode_gaussian};

    fn cr(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn scalar(x: C64) -> DMatrix<C64> {
        DMatrix::from_element(1, 1, x)
    }

    #[test]
    fn identity_gives_glauber() {
        let alpha = cr(0.6, -0.3);
        let s = canonical_ris(&scalar(c(1.0)), &scalar(c(0.0)), &DVector::from_element(1, alpha), 40).unwrap();
        assert!(s.converged);
        let f = s.amplitudes().dotc(&glauber(alpha, 40)).norm_sqr();
        assert!((1.0 - f).abs() < 1e-13);
        let pair = uncertainty_pair(&canonical_observables(1, 40).unwrap(), &s.state).unwrap();
        assert!((pair.sigma[(0, 0)] - 0.5).abs() < 1e-10 && (pair.sigma[(1, 1)] - 0.5).abs() < 1e-10);
    }

    #[test]
    fn squeezed_vacuum_is_minimal() {
        let r: f64 = 0.5;
        let (u, v) = (scalar(c(r.cosh())), scalar(c(r.sinh())));
        let s = canonical_ris(&u, &v, &DVector::zeros(1), 60).unwrap();
        assert!(s.converged, "residual {}", s.residual);
        let pair = uncertainty_pair(&canonical_observables(1, 60).unwrap(), &s.state).unwrap();
        assert!(pair.sigma[(0, 1)].abs() < 1e-12);
        assert!((pair.det_sigma() - 0.25).abs() < 1e-8);
        assert!(robertson_minimized(&pair, 1e-8));
        // sigma_pp = e^{2r}/2 for a' = cosh r a + sinh r a^dagger
        assert!((pair.sigma[(0, 0)] - (2.0 * r).exp() / 2.0).abs() < 1e-8);
    }

    #[test]
    fn matches_gaussian_oracle() {
        let (mu, nu, beta) = (cr(1.1, 0.2), cr(0.3, -0.25), cr(0.4, 0.1));
        let s = canonical_ris(&scalar(mu), &scalar(nu), &DVector::from_element(1, beta), 50).unwrap();
        let f = s.amplitudes().dotc(&single_mode_gaussian(mu, nu, beta, 50)).norm_sqr();
        assert!(f > 1.0 - 1e-12);
    }

    #[test]
    fn two_mode_symplectic_sigma() {
        let r: f64 = 0.3;
        // two-mode squeezing: a1' = cosh r a1 + sinh r a2^dagger
        let u = DMatrix::from_diagonal_element(2, 2, c(r.cosh()));
        let v = DMatrix::from_row_slice(2, 2, &[c(0.0), c(r.sinh()), c(r.sinh()), c(0.0)]);
        let alpha = DVector::from_vec(vec![cr(0.2, 0.0), cr(0.0, -0.1)]);
        let s = canonical_ris(&u, &v, &alpha, 24).unwrap();
        assert!(s.converged, "residual {} tail {}", s.residual, s.tail_mass);
        let pair = uncertainty_pair(&canonical_observables(2, 24).unwrap(), &s.state).unwrap();
        let two = &pair.sigma * 2.0;
        let j = symplectic_form(2);
        assert!((&two * &j * two.transpose() - &j).amax() < 1e-8);
    }

    #[test]
    fn asymmetric_x_not_solvable() {
        let u = DMatrix::identity(2, 2).map(c);
        let v = DMatrix::from_row_slice(2, 2, &[c(0.0), c(0.3), c(0.0), c(0.0)]);
        let r = canonical_ris(&u, &v, &DVector::zeros(2), 10);
        assert!(matches!(r, Err(Error::NotSolvable { j: 0, .. })));
    }

    #[test]
    fn singular_map_rejected() {
        let r = canonical_ris(&scalar(c(1.0)), &scalar(c(1.0)), &DVector::zeros(1), 10);
        assert!(matches!(r, Err(Error::SingularMap(_))));
    }

    #[test]
    fn wavefunction_matches_glauber_at_identity() {
        let alpha = DVector::from_element(1, cr(0.5, 0.4));
        let (lq, lp) = lambda_blocks(&scalar(c(1.0)), &scalar(c(0.0)));
        let amps: Vec<C64> = glauber(alpha[0], 60).iter().copied().collect();
        for q in [-2.0, -0.3, 0.0, 0.7, 1.9] {
            let psi = gaussian_wavefunction(&lq, &lp, &alpha, &[DVector::from_element(1, q)]).unwrap()[0];
            assert!((psi - fock_to_position(&amps, q)).norm() < 1e-12, "q = {q}");
        }
    }

    #[test]
    fn recovers_squeezed_state() {
        let r: f64 = 0.35;
        let (u, v) = (scalar(cr(r.cosh(), 0.0)), scalar(cr(0.0, r.sinh())));
        let alpha = DVector::from_element(1, cr(0.3, 0.2));
        let s = canonical_ris(&u, &v, &alpha, 60).unwrap();
        let fit = recover_canonical_ris(&s.state, 1, 60).unwrap();
        assert!((fit.pair_products[0] - 0.25).abs() < 1e-9);
        assert!(fit.residual < 1e-7, "residual {}", fit.residual);
    }
}
