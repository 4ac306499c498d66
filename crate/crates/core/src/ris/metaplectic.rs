use super::{RisSpec, RisState};
use crate::algebra::{canonical_quadratures, multimode_lowering, ModeSystem, QuantumState};
use crate::linalg::c;
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};

const TAYLOR_TOL: f64 = 1e-17;
const UNITARITY_TOL: f64 = 1e-9;
const BOGOLIUBOV_TOL: f64 = 1e-10;

fn one_norm(m: &DMatrix<C64>) -> f64 {
    m.column_iter().map(|col| col.iter().map(|x| x.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// exp(g) psi by a scaled Taylor series: s steps of exp(g/s), each summed
/// until the terms drop below 1e-17 of the running vector.
pub fn expm_multiply(g: &DMatrix<C64>, psi: &DVector<C64>) -> DVector<C64> {
    let steps = one_norm(g).ceil().max(1.0) as usize;
    let scaled = g * c(1.0 / steps as f64);
    let mut out = psi.clone();
    for _ in 0..steps {
        let mut term = out.clone();
        let mut acc = out.clone();
        for n in 1..200 {
            term = &scaled * term * c(1.0 / n as f64);
            acc += &term;
            if term.norm() <= TAYLOR_TOL * acc.norm() {
                break;
            }
        }
        out = acc;
    }
    out
}

/// Principal logarithm by inverse scaling and squaring: Denman-Beavers
/// square roots until the matrix is near the identity, then the series of
/// log(I + X).
pub fn matrix_log(t: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    let n = t.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let mut y = t.clone();
    let mut squarings = 0;
    while one_norm(&(&y - &id)) > 0.25 {
        if squarings > 60 {
            return Err(Error::Contract("matrix logarithm did not converge".into()));
        }
        let mut z = id.clone();
        for _ in 0..100 {
            let yi = y.clone().try_inverse().ok_or_else(|| Error::SingularMap("square root iteration".into()))?;
            let zi = z.clone().try_inverse().ok_or_else(|| Error::SingularMap("square root iteration".into()))?;
            let ny = (&y + zi) * c(0.5);
            let nz = (&z + yi) * c(0.5);
            let delta = one_norm(&(&ny - &y));
            y = ny;
            z = nz;
            if delta <= 1e-15 * one_norm(&y) {
                break;
            }
        }
        squarings += 1;
    }
    let x = &y - &id;
    let mut term = x.clone();
    let mut log = x.clone();
    for k in 2..200 {
        term = &term * &x;
        let add = &term * c(if k % 2 == 0 { -1.0 } else { 1.0 } / k as f64);
        log += &add;
        if one_norm(&add) <= 1e-17 * one_norm(&log).max(1e-300) {
            break;
        }
    }
    Ok(log * c(2f64.powi(squarings)))
}

/// Bogoliubov blocks (u, v) of a real symplectic map on (p, q): the new
/// lowering operators are a' = u a + v a^dagger.
pub fn symplectic_to_bogoliubov(lambda: &DMatrix<f64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let m = lambda.nrows();
    if m % 2 == 1 || lambda.ncols() != m {
        return Err(Error::Contract("need a square map of even order".into()));
    }
    let n = m / 2;
    let blk = |r: usize, col: usize| lambda.view((r, col), (n, n)).map(c);
    let lambda_p = blk(n, 0) + blk(0, 0) * C64::i();
    let lambda_q = blk(n, n) + blk(0, n) * C64::i();
    Ok(((&lambda_q - &lambda_p * C64::i()) * c(0.5), (&lambda_q + &lambda_p * C64::i()) * c(0.5)))
}

fn check_bogoliubov(u: &DMatrix<C64>, v: &DMatrix<C64>) -> Result<()> {
    let n = u.nrows();
    let id = DMatrix::<C64>::identity(n, n);
    let comm = u * u.adjoint() - v * v.adjoint() - id;
    let sym = u * v.transpose() - v * u.transpose();
    let worst = comm.iter().chain(sym.iter()).fold(0.0_f64, |a, x| a.max(x.norm()));
    if worst > BOGOLIUBOV_TOL {
        return Err(Error::Contract(format!(
            "(u, v) does not preserve the canonical commutators (defect {worst:e})"
        )));
    }
    Ok(())
}

/// Anti-hermitian generator G on an N-mode Fock box with
/// exp(G) a exp(-G) = u a + v a^dagger:
///   G = -a^dagger A a - (1/2) a^dagger B a^dagger + (1/2) a conj(B) a,
/// where [[A, B], [conj B, conj A]] = log [[u, v], [conj v, conj u]].
pub fn metaplectic_generator(u: &DMatrix<C64>, v: &DMatrix<C64>, dim: usize) -> Result<DMatrix<C64>> {
    let n = u.nrows();
    check_bogoliubov(u, v)?;
    let mut t = DMatrix::<C64>::zeros(2 * n, 2 * n);
    t.view_mut((0, 0), (n, n)).copy_from(u);
    t.view_mut((0, n), (n, n)).copy_from(v);
    t.view_mut((n, 0), (n, n)).copy_from(&v.map(|x| x.conj()));
    t.view_mut((n, n), (n, n)).copy_from(&u.map(|x| x.conj()));
    let k = matrix_log(&t)?;
    let a_blk = k.view((0, 0), (n, n)).into_owned();
    let b_blk = k.view((0, n), (n, n)).into_owned();
    let ops = multimode_lowering(n, dim)?;
    let a: Vec<&DMatrix<C64>> = ops.iter().map(|o| o.entries()).collect();
    let ad: Vec<DMatrix<C64>> = a.iter().map(|m| m.adjoint()).collect();
    let d = a[0].nrows();
    let mut g = DMatrix::<C64>::zeros(d, d);
    for l in 0..n {
        for m in 0..n {
            g -= &ad[l] * a[m] * a_blk[(l, m)];
            g -= &ad[l] * &ad[m] * (b_blk[(l, m)] * 0.5);
            g += a[l] * a[m] * (b_blk[(l, m)].conj() * 0.5);
        }
    }
    Ok(g)
}

/// H = sum B_{mu nu} Q_mu Q_nu on the Fock box, Q = (p_1..p_N, q_1..q_N).
pub fn quadratic_hamiltonian(b: &DMatrix<C64>, dim: usize) -> Result<DMatrix<C64>> {
    let m = b.nrows();
    if m == 0 || m % 2 == 1 || b.ncols() != m {
        return Err(Error::Contract("B must be square of even order".into()));
    }
    let imag = b.iter().fold(0.0_f64, |a, x| a.max(x.im.abs()));
    if imag > 0.0 {
        return Err(Error::NonHermitianGenerator(format!("B has imaginary entries up to {imag:e}")));
    }
    let asym = (b - b.transpose()).iter().fold(0.0_f64, |a, x| a.max(x.norm()));
    if asym > 0.0 {
        return Err(Error::NonHermitianGenerator(format!("B is not symmetric (defect {asym:e})")));
    }
    let q = canonical_quadratures(m / 2, dim)?;
    let d = q[0].dim();
    let mut h = DMatrix::<C64>::zeros(d, d);
    for i in 0..m {
        for j in 0..m {
            if b[(i, j)].re != 0.0 {
                h += q[i].entries() * q[j].entries() * b[(i, j)];
            }
        }
    }
    Ok((&h + h.adjoint()) * c(0.5))
}

/// exp(-iH)|n> for the quadratic hamiltonian with coefficient matrix B. The
/// residual is the unitarity defect of the numerical exponential.
pub fn squeezed_fock(b: &DMatrix<C64>, n: &[usize], dim: usize) -> Result<RisState> {
    let h = quadratic_hamiltonian(b, dim)?;
    let modes = b.nrows() / 2;
    if n.len() != modes {
        return Err(Error::DimensionMismatch { expected: modes, got: n.len() });
    }
    let system = ModeSystem::fock(modes, dim)?;
    let base = QuantumState::basis(system.clone(), n)?;
    let g = h * C64::new(0.0, -1.0);
    let out = expm_multiply(&g, base.amplitudes().expect("basis states are pure"));
    let defect = (out.norm() - 1.0).abs();
    if defect > UNITARITY_TOL {
        return Err(Error::Contract(format!("exponential lost unitarity (defect {defect:e})")));
    }
    let state = QuantumState::pure_normalized(out, system)?;
    let spec = RisSpec::SqueezedFock { b: b.clone(), n: n.to_vec(), dim };
    Ok(RisState::new(state, spec, Vec::new(), defect, false))
}
