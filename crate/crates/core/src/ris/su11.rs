use super::{RisSpec, RisState, MAX_TRUNCATION, RESIDUAL_TOL, TAIL_TOL};
use crate::algebra::{build_su11, BargmannIndex, BasisSpec, ModeSystem, OperatorMatrix, QuantumState};
use crate::linalg::{c, CompensatedSum};
use crate::{Error, Result, C64};
use nalgebra::{DMatrix, DVector};

const MIN_TRUNCATION: usize = 16;
const DEFAULT_TRUNCATION: usize = 64;
const RESCALE_EVERY: usize = 64;
const RESCALE_ABOVE: f64 = 1e100;
const BOUNDARY_TOL: f64 = 1e-8;
const SPECTRUM_TOL: f64 = 1e-6;
const HERMITIAN_PARAM_TOL: f64 = 1e-12;

/// Asymptotic behaviour of the three-term recursion: amplitude ratios
/// c_{m+1}/c_m tend to a root of u r^2 + w r + v = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalizability {
    /// (-w + s)/(2u) and (-w - s)/(2u), s = sqrt(w^2 - 4uv) with Re s >= 0.
    pub roots: (C64, C64),
    /// How many roots lie strictly inside the unit circle.
    pub decaying: usize,
}

impl Normalizability {
    /// At least one branch of the normalizability condition holds.
    pub fn holds(&self) -> bool {
        self.decaying > 0
    }

    pub fn dominant(&self) -> f64 {
        self.roots.0.norm().max(self.roots.1.norm())
    }
}

pub fn normalizability(u: C64, v: C64, w: C64) -> Result<Normalizability> {
    if u.norm() == 0.0 {
        return Err(Error::UnsupportedLimit("u = 0".into()));
    }
    let mut s = (w * w - 4.0 * u * v).sqrt();
    if s.re < 0.0 {
        s = -s;
    }
    let roots = ((-w + s) / (2.0 * u), (-w - s) / (2.0 * u));
    let decaying = [roots.0, roots.1].iter().filter(|r| r.norm() < 1.0).count();
    Ok(Normalizability { roots, decaying })
}

fn raise_amp(m: usize, k: f64) -> f64 {
    let m = m as f64;
    ((m + 1.0) * (m + 2.0 * k)).sqrt()
}

fn lower_amp(m: usize, k: f64) -> f64 {
    let m = m as f64;
    (m * (m + 2.0 * k - 1.0)).sqrt()
}

fn is_hermitian_combination(u: C64, v: C64, w: C64) -> bool {
    (v - u.conj()).norm() <= HERMITIAN_PARAM_TOL * u.norm().max(1.0) && w.im.abs() <= HERMITIAN_PARAM_TOL
}

fn rescale(cs: &mut [C64]) {
    let n = cs.len();
    let big = cs[n.saturating_sub(2)..].iter().fold(0.0_f64, |a, x| a.max(x.norm()));
    if big > RESCALE_ABOVE {
        for x in cs.iter_mut() {
            *x /= big;
        }
    }
}

/// Unnormalized coefficients c_0..c_{m-1} from the forward recursion with
/// c_0 = 1. Returns `None` once the values stop being finite.
pub(crate) fn forward_recursion(u: C64, v: C64, w: C64, z: C64, k: f64, m: usize) -> Option<Vec<C64>> {
    let mut cs = Vec::with_capacity(m);
    cs.push(c(1.0));
    for n in 0..m - 1 {
        let mut acc = CompensatedSum::default();
        acc.add((w * (n as f64 + k) - z) * cs[n]);
        if n > 0 {
            acc.add(v * lower_amp(n, k) * cs[n - 1]);
        }
        let next = -acc.value() / (u * raise_amp(n, k));
        if !(next.re.is_finite() && next.im.is_finite()) {
            return None;
        }
        cs.push(next);
        if (n + 1) % RESCALE_EVERY == 0 {
            rescale(&mut cs);
        }
    }
    Some(cs)
}

/// Minimal solution by backward recursion from `start`, returned on
/// 0..m together with the relative defect of the m = 0 boundary equation.
fn miller_recursion(u: C64, v: C64, w: C64, z: C64, k: f64, m: usize, start: usize) -> Option<(Vec<C64>, f64)> {
    if v.norm() == 0.0 {
        return None;
    }
    let mut cs = vec![c(0.0); start + 1];
    cs[start - 1] = c(1e-300_f64.sqrt());
    for n in (1..start).rev() {
        let mut acc = CompensatedSum::default();
        acc.add(u * raise_amp(n, k) * cs[n + 1]);
        acc.add((w * (n as f64 + k) - z) * cs[n]);
        cs[n - 1] = -acc.value() / (v * lower_amp(n, k));
        if !(cs[n - 1].re.is_finite() && cs[n - 1].im.is_finite()) {
            return None;
        }
        if n % RESCALE_EVERY == 0 {
            let big = cs[n - 1].norm().max(cs[n].norm());
            if big > RESCALE_ABOVE {
                for x in cs[n - 1..].iter_mut() {
                    *x /= big;
                }
            }
        }
    }
    let lead = u * raise_amp(0, k) * cs[1];
    let diag = (w * k - z) * cs[0];
    let scale = lead.norm() + diag.norm();
    if scale == 0.0 {
        return None;
    }
    let defect = (lead + diag).norm() / scale;
    cs.truncate(m);
    Some((cs, defect))
}

/// Norm of (u K- + v K+ + w K3 - z) psi on the untruncated space: the
/// output carries one extra level.
pub fn su11_residual(u: C64, v: C64, w: C64, z: C64, k: f64, psi: &[C64]) -> f64 {
    let m = psi.len();
    let at = |i: usize| psi.get(i).copied().unwrap_or(c(0.0));
    let mut total = 0.0;
    for n in 0..=m {
        let mut out = (w * (n as f64 + k) - z) * at(n) + u * raise_amp(n, k) * at(n + 1);
        if n > 0 {
            out += v * lower_amp(n, k) * at(n - 1);
        }
        total += out.norm_sqr();
    }
    total.sqrt()
}

fn normalized(cs: Vec<C64>) -> Option<DVector<C64>> {
    let mut acc = 0.0;
    for x in &cs {
        acc += x.norm_sqr();
    }
    let norm = acc.sqrt();
    (norm.is_finite() && norm > 0.0).then(|| DVector::from_vec(cs) / c(norm))
}

/// Eigenvector of the truncated hermitian combination whose eigenvalue is
/// nearest to z.
fn hermitian_eigenvector(u: C64, w: f64, z: C64, k: f64, m: usize) -> (DVector<C64>, f64) {
    let mut h = DMatrix::<C64>::zeros(m, m);
    for n in 0..m {
        h[(n, n)] = c(w * (n as f64 + k));
        if n + 1 < m {
            h[(n, n + 1)] = u * raise_amp(n, k);
            h[(n + 1, n)] = u.conj() * raise_amp(n, k);
        }
    }
    let eig = h.symmetric_eigen();
    let idx = (0..m)
        .min_by(|&a, &b| {
            (c(eig.eigenvalues[a]) - z)
                .norm()
                .partial_cmp(&(c(eig.eigenvalues[b]) - z).norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
        .unwrap_or(0);
    (eig.eigenvectors.column(idx).into_owned(), eig.eigenvalues[idx])
}

struct Attempt {
    psi: DVector<C64>,
    eigenvalue: C64,
}

fn attempt(u: C64, v: C64, w: C64, z: C64, k: f64, m: usize, norm: &Normalizability) -> Result<Option<Attempt>> {
    if is_hermitian_combination(u, v, w) {
        let (psi, lambda) = hermitian_eigenvector(u, w.re, z, k, m);
        if (z - c(lambda)).norm() > SPECTRUM_TOL * z.norm().max(1.0) {
            return Err(Error::NonNormalizable(format!(
                "z = {z} is not an eigenvalue of the hermitian combination; nearest is {lambda}"
            )));
        }
        return Ok(Some(Attempt { psi, eigenvalue: c(lambda) }));
    }
    if let Some(psi) = forward_recursion(u, v, w, z, k, m).and_then(normalized) {
        let tail = tail_of(&psi);
        if tail < TAIL_TOL && su11_residual(u, v, w, z, k, psi.as_slice()) < RESIDUAL_TOL {
            return Ok(Some(Attempt { psi, eigenvalue: z }));
        }
        if norm.decaying == 2 {
            return Ok(None);
        }
    }
    if norm.decaying == 1 && v.norm() > 0.0 {
        if let Some((cs, defect)) = miller_recursion(u, v, w, z, k, m, m + m / 2) {
            if defect > BOUNDARY_TOL {
                return Err(Error::NonNormalizable(format!(
                    "z = {z} violates the m = 0 boundary condition of the decaying solution (defect {defect:e})"
                )));
            }
            if let Some(psi) = normalized(cs) {
                return Ok(Some(Attempt { psi, eigenvalue: z }));
            }
        }
    }
    Ok(None)
}

fn tail_of(psi: &DVector<C64>) -> f64 {
    let m = psi.len();
    let cut = m - m.div_ceil(10);
    psi.iter().skip(cut).map(|x| x.norm_sqr()).sum()
}

/// Eigenstate of u K- + v K+ + w K3 with eigenvalue z on the discrete series
/// with Bargmann index k, starting from truncation `m` (0 selects the
/// default) and doubling it until the state converges.
pub fn su11_ris(u: C64, v: C64, w: C64, z: C64, k: BargmannIndex, m: usize) -> Result<RisState> {
    let start = if m == 0 { DEFAULT_TRUNCATION } else { m };
    if start < MIN_TRUNCATION {
        return Err(Error::InvalidTruncation(format!("truncation {start} below {MIN_TRUNCATION}")));
    }
    let norm = normalizability(u, v, w)?;
    let hermitian = is_hermitian_combination(u, v, w);
    if !norm.holds() {
        return Err(Error::NonNormalizable(format!(
            "asymptotic ratios |r+| = {:.6}, |r-| = {:.6}, none inside the unit circle",
            norm.roots.0.norm(),
            norm.roots.1.norm()
        )));
    }
    let kf = k.value();
    let spec = RisSpec::Su11 { u, v, w, z, k };
    let mut dim = start;
    let mut last_tail = 1.0;
    while dim <= MAX_TRUNCATION {
        if let Some(Attempt { psi, eigenvalue }) = attempt(u, v, w, z, kf, dim, &norm)? {
            let residual = su11_residual(u, v, w, eigenvalue, kf, psi.as_slice());
            let system = ModeSystem::single(BasisSpec::Su11 { k, dim })?;
            let state = QuantumState::pure(psi, system)?;
            last_tail = state.tail_mass();
            if residual < RESIDUAL_TOL && last_tail < TAIL_TOL {
                return Ok(RisState::new(state, spec, vec![eigenvalue], residual, hermitian));
            }
        }
        dim *= 2;
    }
    if norm.dominant() >= 1.0 && !hermitian {
        return Err(Error::NonNormalizable(format!(
            "no decaying solution for z = {z} up to truncation {MAX_TRUNCATION}"
        )));
    }
    Err(Error::Truncation { tail_mass: last_tail, dim: MAX_TRUNCATION })
}

/// Observables for which the state is intelligent: (K1, K2) when w = 0,
/// the hermitian and anti-hermitian parts of the combination otherwise,
/// and (K1, K2, K3) for hermitian combinations.
pub fn su11_observables(u: C64, v: C64, w: C64, k: BargmannIndex, dim: usize) -> Result<Vec<OperatorMatrix>> {
    let s = build_su11(k, dim)?;
    if is_hermitian_combination(u, v, w) {
        return Ok(vec![s.k1, s.k2, s.k3]);
    }
    if w.norm() == 0.0 {
        return Ok(vec![s.k1, s.k2]);
    }
    let a = &(&s.kminus.scale(u) + &s.kplus.scale(v)) + &s.k3.scale(w);
    let (x, y) = a.quadratures();
    Ok(vec![x, y])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Su11ClosedForm {
    pub sigma11: f64,
    pub sigma22: f64,
    pub sigma12: f64,
    pub det_sigma: f64,
}

/// Moments of (K1, K2) in an eigenstate of u K- + v K+, in terms of <K3>.
pub fn su11_sigma_closed_form(u: C64, v: C64, mean_k3: f64) -> Result<Su11ClosedForm> {
    let d = u.norm_sqr() - v.norm_sqr();
    if d.abs() <= 1e-14 * u.norm_sqr().max(v.norm_sqr()).max(1e-300) {
        return Err(Error::DegenerateParameters("|u| = |v|".into()));
    }
    let sigma11 = 0.5 * (u - v).norm_sqr() * mean_k3 / d;
    let sigma22 = 0.5 * (u + v).norm_sqr() * mean_k3 / d;
    let sigma12 = (u.conj() * v).im * mean_k3 / d;
    Ok(Su11ClosedForm { sigma11, sigma22, sigma12, det_sigma: sigma11 * sigma22 - sigma12 * sigma12 })
}
