use super::su11::su11_ris;
use super::{RisSpec, RisState, MAX_TRUNCATION, RESIDUAL_TOL};
use crate::algebra::{build_boson, BargmannIndex, ModeSystem, OperatorMatrix, QuantumState};
use crate::linalg::c;
use crate::{Result, C64};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    /// Bargmann index of the sector: a^2/2 acts as K- on it.
    pub fn bargmann_index(self) -> BargmannIndex {
        match self {
            Parity::Even => BargmannIndex::QUARTER,
            Parity::Odd => BargmannIndex::THREE_QUARTERS,
        }
    }

    fn offset(self) -> usize {
        match self {
            Parity::Even => 0,
            Parity::Odd => 1,
        }
    }
}

fn squared_residual(u: C64, v: C64, z: C64, psi: &DVector<C64>) -> f64 {
    let d = psi.len();
    let at = |i: usize| psi.get(i).copied().unwrap_or(c(0.0));
    let mut total = 0.0;
    for n in 0..d + 2 {
        let nf = n as f64;
        let mut out = -z * at(n) + u * ((nf + 1.0) * (nf + 2.0)).sqrt() * at(n + 2);
        if n >= 2 {
            out += v * (nf * (nf - 1.0)).sqrt() * at(n - 2);
        }
        total += out.norm_sqr();
    }
    total.sqrt()
}

/// Eigenstate of u a^2 + v a^dagger^2 with eigenvalue z in one parity
/// sector. Since a^2 = 2 K- on the sector, this is the su(1,1) state with
/// eigenvalue z/2 placed on Fock levels 2m (+1). The Fock residual is twice
/// the sector one, so the sector truncation is doubled until it converges.
pub fn squared_amplitude_ris(u: C64, v: C64, z: C64, parity: Parity, dim: usize) -> Result<RisState> {
    let mut start = (dim / 2).max(16);
    loop {
        let sector = su11_ris(u, v, c(0.0), z * 0.5, parity.bargmann_index(), start)?;
        let m = sector.dim();
        let mut psi = DVector::<C64>::zeros(2 * m);
        for (i, a) in sector.amplitudes().iter().enumerate() {
            psi[2 * i + parity.offset()] = *a;
        }
        let residual = squared_residual(u, v, z, &psi);
        if residual >= RESIDUAL_TOL && 2 * m <= MAX_TRUNCATION {
            start = 2 * m;
            continue;
        }
        let state = QuantumState::pure(psi, ModeSystem::fock(1, 2 * m)?)?;
        let spec = RisSpec::SquaredAmplitude { u, v, z, parity };
        return Ok(RisState::new(state, spec, vec![z], residual, false));
    }
}

/// Even or odd coherent state (|alpha> +- |-alpha>)/N: the a^2 eigenstate
/// with eigenvalue alpha^2.
pub fn even_odd_cs(alpha: C64, parity: Parity, dim: usize) -> Result<RisState> {
    let mut s = squared_amplitude_ris(c(1.0), c(0.0), alpha * alpha, parity, dim)?;
    s.spec = RisSpec::EvenOddCs { alpha, parity };
    Ok(s)
}

/// (K1, K2) with K- = a^2/2 on a Fock box.
pub fn squared_amplitude_observables(dim: usize) -> Result<Vec<OperatorMatrix>> {
    let b = build_boson(dim)?;
    let kminus = (&b.a * &b.a).scale(c(0.5));
    let kplus = kminus.adjoint();
    let k1 = (&kplus + &kminus).scale(c(0.5));
    let k2 = (&kplus - &kminus).scale(C64::new(0.0, -0.5));
    Ok(vec![k1, k2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::uncertainty_pair;
    use robertson_oracle::closed_form::even_odd_cs as oracle_even_odd;

    fn cr(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn even_odd_match_superpositions() {
        let alpha = cr(1.1, 0.4);
        for (parity, even) in [(Parity::Even, true), (Parity::Odd, false)] {
            let s = even_odd_cs(alpha, parity, 40).unwrap();
            assert!(s.converged);
            let f = s.amplitudes().dotc(&oracle_even_odd(alpha, even, s.dim())).norm_sqr();
            assert!((1.0 - f).abs() < 1e-12, "{parity:?}: {f}");
        }
    }

    #[test]
    fn parity_separation() {
        let s = squared_amplitude_ris(cr(1.3, 0.0), cr(-0.5, 0.2), cr(0.4, 0.9), Parity::Even, 40).unwrap();
        for (i, a) in s.amplitudes().iter().enumerate() {
            if i % 2 == 1 {
                assert!(a.norm() < 1e-14);
            }
        }
    }

    #[test]
    fn matches_sector_solution() {
        let (u, v, z) = (cr(1.2, 0.1), cr(0.3, -0.4), cr(-0.6, 0.2));
        let s = squared_amplitude_ris(u, v, z, Parity::Odd, 40).unwrap();
        let sector = su11_ris(u, v, c(0.0), z / 2.0, BargmannIndex::THREE_QUARTERS, 20).unwrap();
        for (m, a) in sector.amplitudes().iter().enumerate() {
            assert!((s.amplitudes()[2 * m + 1] - a).norm() < 1e-10);
        }
    }

    #[test]
    fn minimizes_k1_k2() {
        let s = squared_amplitude_ris(cr(1.4, 0.0), cr(-0.6, 0.0), cr(0.5, 0.5), Parity::Even, 60).unwrap();
        let pair = uncertainty_pair(&squared_amplitude_observables(s.dim()).unwrap(), &s.state).unwrap();
        assert!((pair.det_sigma() - pair.det_c()).abs() < 1e-9 * pair.det_c().abs().max(1.0));
    }
}
