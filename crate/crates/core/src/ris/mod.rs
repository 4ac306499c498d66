//! Robertson intelligent states: eigenstates of complex combinations of
//! observables, which turn det sigma >= det C into an equality.

mod canonical;
mod group_cs;
mod metaplectic;
mod squared;
mod su11;
mod su2;

pub use canonical::{
    canonical_observables, canonical_ris, gaussian_wavefunction, lambda_blocks, recover_canonical_ris, CanonicalFit,
};
pub use group_cs::{group_cs_constraint, group_cs_eigenvalue, squeeze_map, su11_group_cs, su11_squeeze_coefficients};
pub use metaplectic::{
    expm_multiply, matrix_log, metaplectic_generator, quadratic_hamiltonian, squeezed_fock, symplectic_to_bogoliubov,
};
pub use squared::{even_odd_cs, squared_amplitude_observables, squared_amplitude_ris, Parity};
pub use su11::{
    normalizability, su11_observables, su11_residual, su11_ris, su11_sigma_closed_form, Normalizability,
    Su11ClosedForm,
};
pub use su2::{su2_observables, su2_ris, su2_spectrum};

use crate::algebra::{BargmannIndex, QuantumState};
use crate::C64;
use nalgebra::{DMatrix, DVector};

/// A state is accepted as converged when both hold.
pub const RESIDUAL_TOL: f64 = 1e-8;
pub const TAIL_TOL: f64 = 1e-6;

/// Largest truncation the adaptive solvers try.
pub const MAX_TRUNCATION: usize = 1 << 14;

#[derive(Debug, Clone, PartialEq)]
pub enum RisSpec {
    /// (u K- + v K+ + w K3) psi = z psi.
    Su11 { u: C64, v: C64, w: C64, z: C64, k: BargmannIndex },
    /// (beta . J) psi = m b psi.
    Su2 { beta: [C64; 3], twice_j: u32, m_twice: i32 },
    /// (u a + v a^dagger)_j psi = alpha_j psi.
    Canonical { u: DMatrix<C64>, v: DMatrix<C64>, alpha: DVector<C64>, dim: usize },
    /// (u a^2 + v a^dagger^2) psi = z psi on one parity sector.
    SquaredAmplitude { u: C64, v: C64, z: C64, parity: Parity },
    EvenOddCs { alpha: C64, parity: Parity },
    /// exp(-i sum B Q Q) |n>.
    SqueezedFock { b: DMatrix<C64>, n: Vec<usize>, dim: usize },
    /// (1 - |tau|^2)^k exp(tau K+) |0; k>.
    GroupCs { k: BargmannIndex, tau: C64 },
}

#[derive(Debug, Clone)]
pub struct RisState {
    pub state: QuantumState,
    pub spec: RisSpec,
    /// Eigenvalues the state satisfies, one per lowering combination.
    pub eigenvalues: Vec<C64>,
    /// Norm of the eigen-equation defect, evaluated without truncating the
    /// operator's action.
    pub residual: f64,
    pub converged: bool,
    pub tail_mass: f64,
    /// Set for su(1,1) combinations with v = conj(u) and real w, which are
    /// hermitian: their eigenstates minimize trivially (det sigma = 0).
    pub hermitian_combination: bool,
}

impl RisState {
    pub(crate) fn new(
        state: QuantumState,
        spec: RisSpec,
        eigenvalues: Vec<C64>,
        residual: f64,
        hermitian_combination: bool,
    ) -> Self {
        let tail_mass = state.tail_mass();
        RisState {
            state,
            spec,
            eigenvalues,
            residual,
            converged: residual < RESIDUAL_TOL && tail_mass < TAIL_TOL,
            tail_mass,
            hermitian_combination,
        }
    }

    pub fn dim(&self) -> usize {
        self.state.dim()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        self.state.amplitudes().expect("intelligent states are pure")
    }
}
