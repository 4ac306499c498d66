//! Uncertainty matrices, mean-commutator matrices and the inequalities
//! between them.

use crate::algebra::{expectation, OperatorMatrix, QuantumState, StateRepr};
use crate::error::{Error, Result};
use crate::linalg::{det, max_abs, symplectic_form, to_complex, trace_power};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// States whose tail mass exceeds this carry a truncation warning.
pub const TAIL_WARNING: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyPair {
    pub sigma: DMatrix<f64>,
    pub cmat: DMatrix<f64>,
    pub labels: Vec<String>,
    /// Set to the state's tail mass when it exceeded `TAIL_WARNING`.
    pub truncation_warning: Option<f64>,
}

impl UncertaintyPair {
    pub fn new(sigma: DMatrix<f64>, cmat: DMatrix<f64>, labels: Vec<String>) -> Result<Self> {
        let n = sigma.nrows();
        if sigma.ncols() != n || cmat.nrows() != n || cmat.ncols() != n || labels.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: cmat.nrows() });
        }
        let scale = max_abs(&sigma).max(1.0);
        if max_abs(&(&sigma - sigma.transpose())) > 1e-12 * scale {
            return Err(Error::Contract("sigma is not symmetric".into()));
        }
        if max_abs(&(&cmat + cmat.transpose())) > 1e-12 * scale {
            return Err(Error::Contract("C is not antisymmetric".into()));
        }
        Ok(UncertaintyPair { sigma, cmat, labels, truncation_warning: None })
    }

    pub fn n(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn det_sigma(&self) -> f64 {
        det(&self.sigma)
    }

    /// Vanishes identically for odd n; computed numerically regardless.
    pub fn det_c(&self) -> f64 {
        det(&self.cmat)
    }

    pub fn variances(&self) -> DVector<f64> {
        self.sigma.diagonal()
    }
}

fn default_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("X{i}")).collect()
}

/// sigma and C for hermitian observables in a state.
pub fn uncertainty_pair(ops: &[OperatorMatrix], state: &QuantumState) -> Result<UncertaintyPair> {
    uncertainty_pair_labeled(ops, state, default_labels(ops.len()))
}

pub fn uncertainty_pair_labeled(
    ops: &[OperatorMatrix],
    state: &QuantumState,
    labels: Vec<String>,
) -> Result<UncertaintyPair> {
    let n = ops.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
    }
    for (i, op) in ops.iter().enumerate() {
        if !op.is_hermitian() {
            return Err(Error::NotHermitian { index: i, residual: op.hermitian_residual() });
        }
        if op.dim() != state.dim() {
            return Err(Error::DimensionMismatch { expected: state.dim(), got: op.dim() });
        }
    }
    // second moments g[mu][nu] = <X_mu X_nu>
    let mut g = DMatrix::<C64>::zeros(n, n);
    match state.repr() {
        StateRepr::Pure(psi) => {
            let w: Vec<DVector<C64>> = ops.iter().map(|x| x.apply(psi)).collect();
            for mu in 0..n {
                for nu in mu..n {
                    let v = w[mu].dotc(&w[nu]);
                    g[(mu, nu)] = v;
                    g[(nu, mu)] = v.conj();
                }
            }
        }
        StateRepr::Mixed(rho) => {
            let r: Vec<DMatrix<C64>> = ops.iter().map(|x| rho * x.entries()).collect();
            for mu in 0..n {
                for nu in mu..n {
                    // Tr(rho X_mu X_nu) = sum_ij (rho X_mu)_ij (X_nu)_ji
                    let xt = ops[nu].entries().transpose();
                    let v = r[mu].component_mul(&xt).sum();
                    g[(mu, nu)] = v;
                    g[(nu, mu)] = v.conj();
                }
            }
        }
    }
    let mut means = DVector::<f64>::zeros(n);
    for (mu, op) in ops.iter().enumerate() {
        let m = match state.repr() {
            StateRepr::Pure(psi) => psi.dotc(&op.apply(psi)),
            StateRepr::Mixed(rho) => (rho * op.entries()).trace(),
        };
        if m.im.abs() > 1e-10 * m.norm().max(1.0) {
            return Err(Error::Contract(format!("mean of observable {mu} has imaginary part {:e}", m.im)));
        }
        means[mu] = m.re;
    }
    let mut sigma = DMatrix::zeros(n, n);
    let mut cmat = DMatrix::zeros(n, n);
    for mu in 0..n {
        for nu in 0..n {
            sigma[(mu, nu)] = g[(mu, nu)].re - means[mu] * means[nu];
            cmat[(mu, nu)] = g[(mu, nu)].im;
        }
    }
    let mut pair = UncertaintyPair::new(sigma, cmat, labels)?;
    if state.tail_mass() > TAIL_WARNING {
        pair.truncation_warning = Some(state.tail_mass());
    }
    Ok(pair)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceUr {
    pub k: u32,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Minimized {
    pub robertson: bool,
    pub product: bool,
    pub heisenberg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub det_sigma: f64,
    pub det_c: f64,
    pub robertson_gap: f64,
    pub product_gap: f64,
    pub heisenberg_gap: f64,
    pub trace_ur: Vec<TraceUr>,
    pub minimized: Minimized,
    pub tol: f64,
}

impl InequalityReport {
    /// All gaps are nonnegative to within `tol`.
    pub fn holds(&self) -> bool {
        self.robertson_gap >= -self.tol
            && self.product_gap >= -self.tol
            && self.heisenberg_gap >= -self.tol
            && self.trace_ur.iter().all(|t| t.gap >= -self.tol)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticForm {
    pub n_modes: usize,
    pub jmat: DMatrix<f64>,
}

impl SymplecticForm {
    pub fn new(n_modes: usize) -> Self {
        SymplecticForm { n_modes, jmat: symplectic_form(n_modes) }
    }
}

/// Tr(i sigma J)^{2k}, real by construction.
pub fn trace_i_sigma_j(sigma: &DMatrix<f64>, k: u32) -> Result<f64> {
    let n = sigma.nrows();
    if n % 2 == 1 || n == 0 {
        return Err(Error::Contract("trace relations need an even number of observables".into()));
    }
    let j = symplectic_form(n / 2);
    let m = to_complex(&(sigma * j)) * C64::i();
    Ok(trace_power(&m, 2 * k).re)
}

/// Robertson, product and Heisenberg gaps plus the trace family
/// Tr(i sigma J)^{2k} >= N c0^{2k} / 2^{2k-1}. `c0_squared` defaults to 1,
/// its value for canonical observables.
pub fn inequality_report(pair: &UncertaintyPair, trace_orders: &[u32], c0_squared: Option<f64>) -> Result<InequalityReport> {
    let n = pair.n();
    if !trace_orders.is_empty() && n % 2 == 1 {
        return Err(Error::Contract(format!("trace relations requested for odd n = {n}")));
    }
    let det_sigma = pair.det_sigma();
    let det_c = pair.det_c();
    let prod: f64 = pair.sigma.diagonal().iter().product();
    let tol = 1e-8 * det_sigma.abs().max(1.0);
    let c0 = c0_squared.unwrap_or(1.0);
    let n_modes = (n / 2) as f64;
    let mut trace_ur = Vec::with_capacity(trace_orders.len());
    for &k in trace_orders {
        if k == 0 {
            return Err(Error::Contract("trace order must be at least 1".into()));
        }
        let lhs = trace_i_sigma_j(&pair.sigma, k)?;
        let rhs = n_modes * c0.powi(k as i32) / 2f64.powi(2 * k as i32 - 1);
        trace_ur.push(TraceUr { k, lhs, rhs, gap: lhs - rhs });
    }
    let robertson_gap = det_sigma - det_c;
    let product_gap = prod - det_sigma;
    let heisenberg_gap = prod - det_c;
    let minimized = Minimized {
        robertson: robertson_gap.abs() <= tol,
        product: product_gap.abs() <= tol,
        heisenberg: heisenberg_gap.abs() <= tol,
    };
    Ok(InequalityReport { det_sigma, det_c, robertson_gap, product_gap, heisenberg_gap, trace_ur, minimized, tol })
}

/// |det sigma - det C| <= tol * max(1, |det C|).
pub fn robertson_minimized(pair: &UncertaintyPair, tol: f64) -> bool {
    let dc = pair.det_c();
    (pair.det_sigma() - dc).abs() <= tol * dc.abs().max(1.0)
}

/// det C through the pairwise product (1/2)^{2N} prod_j <-i[X_j, Y_j]>^2 for
/// observables ordered (X_1..X_N, Y_1..Y_N) whose only nonvanishing
/// commutators are the [X_j, Y_j].
pub fn detc_factorized(ops: &[OperatorMatrix], state: &QuantumState) -> Result<f64> {
    let n = ops.len();
    if n % 2 == 1 || n == 0 {
        return Err(Error::Structure(format!("{n} observables cannot be paired")));
    }
    let half = n / 2;
    let system = state.system().clone();
    let exact = ops.iter().map(OperatorMatrix::exact_dim).min().unwrap_or(0);
    let safe: Vec<usize> = (0..state.dim())
        .filter(|&i| system.occupations(i).iter().all(|&l| l + 1 < exact))
        .collect();
    let mut product = 1.0;
    for a in 0..n {
        for b in (a + 1)..n {
            let comm = ops[a].commutator(&ops[b]);
            if b == a + half {
                let v = expectation(&comm.scale(C64::new(0.0, -1.0)), state)?;
                product *= 0.25 * v.norm_sqr();
                continue;
            }
            let m = comm.entries();
            let worst = safe
                .iter()
                .flat_map(|&i| safe.iter().map(move |&j| m[(i, j)].norm()))
                .fold(0.0, f64::max);
            if worst > 1e-10 {
                return Err(Error::Structure(format!(
                    "[X_{}, X_{}] is nonzero ({worst:e}) on the truncation-safe subspace",
                    a + 1,
                    b + 1
                )));
            }
        }
    }
    Ok(product)
}
