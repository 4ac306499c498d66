//! Operator matrices on truncated bases.
//!
//! Truncation corrupts ladder identities near the top of each mode's basis,
//! so every builder records `exact_dim`: the number of low-lying basis
//! states per mode on which the algebra's commutators hold exactly.
//!
//! Multimode spaces are ordered row-major over the mode list, mode 0 being
//! the slowest index.

use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_residual};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::str::FromStr;

pub const HERMITIAN_TOL: f64 = 1e-12;

/// Bargmann index of a discrete-series su(1,1) representation. Admissible
/// values are 1/4, 3/4 and the positive half-integers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BargmannIndex(Ratio<u32>);

impl BargmannIndex {
    pub fn new(k: Ratio<u32>) -> Result<Self> {
        let ok = k == Ratio::new(1, 4)
            || k == Ratio::new(3, 4)
            || (*k.numer() > 0 && (*k.denom() == 1 || *k.denom() == 2));
        if ok {
            Ok(BargmannIndex(k))
        } else {
            Err(Error::Domain(format!("Bargmann index {k} is not 1/4, 3/4 or a positive half-integer")))
        }
    }

    pub fn ratio(self) -> Ratio<u32> {
        self.0
    }

    pub fn value(self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub const QUARTER: BargmannIndex = BargmannIndex(Ratio::new_raw(1, 4));
    pub const THREE_QUARTERS: BargmannIndex = BargmannIndex(Ratio::new_raw(3, 4));
}

impl FromStr for BargmannIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("cannot parse Bargmann index {s:?}"));
        let s = s.trim();
        let r = match s.split_once('/') {
            Some((n, d)) => {
                let n: u32 = n.trim().parse().map_err(|_| bad())?;
                let d: u32 = d.trim().parse().map_err(|_| bad())?;
                if d == 0 {
                    return Err(bad());
                }
                Ratio::new(n, d)
            }
            None => {
                // accept plain decimals that are exact quarters
                let x: f64 = s.parse().map_err(|_| bad())?;
                let quarters = (x * 4.0).round();
                if (quarters - x * 4.0).abs() > 1e-12 || quarters < 1.0 {
                    return Err(bad());
                }
                Ratio::new(quarters as u32, 4)
            }
        };
        BargmannIndex::new(r)
    }
}

impl fmt::Display for BargmannIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BasisSpec {
    Fock { dim: usize },
    Su11 { k: BargmannIndex, dim: usize },
    /// Spin j = twice_j / 2, basis |j, j>, |j, j-1>, ..., |j, -j>.
    Spin { twice_j: u32 },
}

impl BasisSpec {
    pub fn dim(&self) -> usize {
        match *self {
            BasisSpec::Fock { dim } | BasisSpec::Su11 { dim, .. } => dim,
            BasisSpec::Spin { twice_j } => twice_j as usize + 1,
        }
    }

    /// Whether the mode is a truncation of an infinite basis.
    pub fn is_truncated(&self) -> bool {
        !matches!(self, BasisSpec::Spin { .. })
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            BasisSpec::Fock { dim } | BasisSpec::Su11 { dim, .. } if dim < 2 => {
                Err(Error::InvalidTruncation(format!("dimension {dim} < 2")))
            }
            BasisSpec::Spin { twice_j: 0 } => Err(Error::Domain("spin j must be at least 1/2".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModeSystem {
    modes: Vec<BasisSpec>,
}

impl ModeSystem {
    pub fn new(modes: Vec<BasisSpec>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::Contract("mode system needs at least one mode".into()));
        }
        for m in &modes {
            m.validate()?;
        }
        Ok(ModeSystem { modes })
    }

    pub fn single(mode: BasisSpec) -> Result<Self> {
        Self::new(vec![mode])
    }

    pub fn fock(n_modes: usize, dim: usize) -> Result<Self> {
        Self::new(vec![BasisSpec::Fock { dim }; n_modes])
    }

    pub fn modes(&self) -> &[BasisSpec] {
        &self.modes
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn dims(&self) -> Vec<usize> {
        self.modes.iter().map(BasisSpec::dim).collect()
    }

    pub fn total_dim(&self) -> usize {
        self.modes.iter().map(BasisSpec::dim).product()
    }

    /// Per-mode labels of a flat basis index.
    pub fn occupations(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.modes.len()];
        let mut rem = index;
        for (slot, m) in out.iter_mut().zip(&self.modes).rev() {
            *slot = rem % m.dim();
            rem /= m.dim();
        }
        out
    }

    pub fn flat_index(&self, occupations: &[usize]) -> usize {
        occupations.iter().zip(&self.modes).fold(0, |acc, (&n, m)| acc * m.dim() + n)
    }

    /// Probability weight of basis states in which some truncated mode sits
    /// in the top 10% of its levels.
    pub fn tail_mass_of(&self, diag: impl Iterator<Item = f64>) -> f64 {
        let cut: Vec<Option<usize>> = self
            .modes
            .iter()
            .map(|m| m.is_truncated().then(|| m.dim() - m.dim().div_ceil(10)))
            .collect();
        diag.enumerate()
            .filter(|(i, _)| {
                self.occupations(*i)
                    .iter()
                    .zip(&cut)
                    .any(|(&n, c)| c.is_some_and(|c| n >= c))
            })
            .map(|(_, p)| p.max(0.0))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    entries: DMatrix<C64>,
    system: ModeSystem,
    hermitian: bool,
    exact_dim: usize,
}

impl OperatorMatrix {
    /// Wraps a matrix; the hermitian flag is set when the anti-hermitian
    /// residual is below `HERMITIAN_TOL`.
    pub fn new(entries: DMatrix<C64>, system: ModeSystem, exact_dim: usize) -> Result<Self> {
        let dim = system.total_dim();
        if entries.nrows() != dim || entries.ncols() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: entries.nrows() });
        }
        let hermitian = hermitian_residual(&entries) < HERMITIAN_TOL;
        Ok(OperatorMatrix { entries, system, hermitian, exact_dim })
    }

    fn from_parts(entries: DMatrix<C64>, system: ModeSystem, exact_dim: usize) -> Self {
        let hermitian = hermitian_residual(&entries) < HERMITIAN_TOL;
        OperatorMatrix { entries, system, hermitian, exact_dim }
    }

    pub fn identity(system: &ModeSystem) -> Self {
        let d = system.total_dim();
        let exact = system.modes.iter().map(BasisSpec::dim).min().unwrap_or(0);
        Self::from_parts(DMatrix::identity(d, d), system.clone(), exact)
    }

    pub fn entries(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn system(&self) -> &ModeSystem {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Number of low-lying levels per mode unaffected by truncation.
    pub fn exact_dim(&self) -> usize {
        self.exact_dim
    }

    pub fn adjoint(&self) -> Self {
        Self::from_parts(self.entries.adjoint(), self.system.clone(), self.exact_dim)
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::from_parts(&self.entries * s, self.system.clone(), self.exact_dim)
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn hermitian_residual(&self) -> f64 {
        hermitian_residual(&self.entries)
    }

    /// Hermitian and anti-hermitian quadratures (A + A^dagger)/2 and
    /// (A - A^dagger)/(2i).
    pub fn quadratures(&self) -> (Self, Self) {
        let ad = self.adjoint();
        let x = (self + &ad).scale(c(0.5));
        let y = (self - &ad).scale(C64::new(0.0, -0.5));
        (x.force_hermitian(), y.force_hermitian())
    }

    /// Replaces entries by (A + A^dagger)/2 when A is already hermitian to
    /// rounding; removes the 1e-16 asymmetry that products leave behind.
    fn force_hermitian(mut self) -> Self {
        if self.hermitian_residual() < 1e-10 {
            self.entries = (&self.entries + self.entries.adjoint()) * c(0.5);
            self.hermitian = true;
        }
        self
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.entries * v
    }
}

fn combine_exact(a: &OperatorMatrix, b: &OperatorMatrix) -> usize {
    a.exact_dim.min(b.exact_dim)
}

fn assert_same_system(a: &OperatorMatrix, b: &OperatorMatrix) {
    assert_eq!(a.system, b.system, "operators act on different mode systems");
}

impl<'a> Mul<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn mul(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_same_system(self, rhs);
        OperatorMatrix::from_parts(&self.entries * &rhs.entries, self.system.clone(), combine_exact(self, rhs))
    }
}

impl<'a> Add<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn add(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_same_system(self, rhs);
        OperatorMatrix::from_parts(&self.entries + &rhs.entries, self.system.clone(), combine_exact(self, rhs))
    }
}

impl<'a> Sub<&'a OperatorMatrix> for &'a OperatorMatrix {
    type Output = OperatorMatrix;
    fn sub(self, rhs: &'a OperatorMatrix) -> OperatorMatrix {
        assert_same_system(self, rhs);
        OperatorMatrix::from_parts(&self.entries - &rhs.entries, self.system.clone(), combine_exact(self, rhs))
    }
}

/// Linear combination sum_i coeffs[i] * ops[i] over a common system.
pub fn linear_combination(coeffs: &[C64], ops: &[OperatorMatrix]) -> Result<OperatorMatrix> {
    let first = ops.first().ok_or_else(|| Error::Contract("empty operator list".into()))?;
    if coeffs.len() != ops.len() {
        return Err(Error::DimensionMismatch { expected: ops.len(), got: coeffs.len() });
    }
    let mut acc = DMatrix::zeros(first.dim(), first.dim());
    let mut exact = first.exact_dim;
    for (w, op) in coeffs.iter().zip(ops) {
        if op.system != first.system {
            return Err(Error::DimensionMismatch { expected: first.dim(), got: op.dim() });
        }
        acc += &op.entries * *w;
        exact = exact.min(op.exact_dim);
    }
    Ok(OperatorMatrix::from_parts(acc, first.system.clone(), exact).force_hermitian())
}

#[derive(Debug, Clone, PartialEq)]
pub enum StateRepr {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumState {
    repr: StateRepr,
    system: ModeSystem,
    tail_mass: f64,
}

pub const STATE_TOL: f64 = 1e-10;

impl QuantumState {
    /// Pure state; the vector must already have unit norm.
    pub fn pure(v: DVector<C64>, system: ModeSystem) -> Result<Self> {
        if v.len() != system.total_dim() {
            return Err(Error::DimensionMismatch { expected: system.total_dim(), got: v.len() });
        }
        let norm = v.norm();
        if (norm - 1.0).abs() > STATE_TOL {
            return Err(Error::Contract(format!("state norm {norm} is not 1")));
        }
        let tail_mass = system.tail_mass_of(v.iter().map(|x| x.norm_sqr()));
        Ok(QuantumState { repr: StateRepr::Pure(v), system, tail_mass })
    }

    pub fn pure_normalized(mut v: DVector<C64>, system: ModeSystem) -> Result<Self> {
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::Contract("cannot normalize a zero or non-finite vector".into()));
        }
        v /= c(norm);
        Self::pure(v, system)
    }

    pub fn mixed(rho: DMatrix<C64>, system: ModeSystem) -> Result<Self> {
        let d = system.total_dim();
        if rho.nrows() != d || rho.ncols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: rho.nrows() });
        }
        let herm = hermitian_residual(&rho);
        if herm > STATE_TOL {
            return Err(Error::Contract(format!("density matrix not hermitian (residual {herm:e})")));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > STATE_TOL || trace.im.abs() > STATE_TOL {
            return Err(Error::Contract(format!("density matrix trace {trace} is not 1")));
        }
        let min_eig = rho.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
        if min_eig < -STATE_TOL {
            return Err(Error::Contract(format!("density matrix has eigenvalue {min_eig:e}")));
        }
        let tail_mass = system.tail_mass_of((0..d).map(|i| rho[(i, i)].re));
        Ok(QuantumState { repr: StateRepr::Mixed(rho), system, tail_mass })
    }

    /// Basis state with the given per-mode labels.
    pub fn basis(system: ModeSystem, occupations: &[usize]) -> Result<Self> {
        if occupations.len() != system.n_modes() {
            return Err(Error::DimensionMismatch { expected: system.n_modes(), got: occupations.len() });
        }
        for (&n, m) in occupations.iter().zip(system.modes()) {
            if n >= m.dim() {
                return Err(Error::InvalidTruncation(format!("level {n} outside dimension {}", m.dim())));
            }
        }
        let mut v = DVector::zeros(system.total_dim());
        v[system.flat_index(occupations)] = c(1.0);
        Self::pure(v, system)
    }

    pub fn repr(&self) -> &StateRepr {
        &self.repr
    }

    pub fn system(&self) -> &ModeSystem {
        &self.system
    }

    pub fn dim(&self) -> usize {
        self.system.total_dim()
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.repr, StateRepr::Pure(_))
    }

    pub fn amplitudes(&self) -> Option<&DVector<C64>> {
        match &self.repr {
            StateRepr::Pure(v) => Some(v),
            StateRepr::Mixed(_) => None,
        }
    }

    pub fn density(&self) -> DMatrix<C64> {
        match &self.repr {
            StateRepr::Pure(v) => v * v.adjoint(),
            StateRepr::Mixed(rho) => rho.clone(),
        }
    }

    /// |<a|b>|^2 for pure states, Tr(rho sigma) otherwise.
    pub fn fidelity(&self, other: &Self) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        Ok(match (&self.repr, &other.repr) {
            (StateRepr::Pure(a), StateRepr::Pure(b)) => a.dotc(b).norm_sqr(),
            _ => (self.density() * other.density()).trace().re,
        })
    }
}

pub fn expectation(op: &OperatorMatrix, state: &QuantumState) -> Result<C64> {
    if op.dim() != state.dim() {
        return Err(Error::DimensionMismatch { expected: state.dim(), got: op.dim() });
    }
    let value = match &state.repr {
        StateRepr::Pure(v) => v.dotc(&(&op.entries * v)),
        StateRepr::Mixed(rho) => (rho * &op.entries).trace(),
    };
    Ok(if op.hermitian { c(value.re) } else { value })
}

fn single_mode(spec: BasisSpec) -> Result<ModeSystem> {
    ModeSystem::single(spec)
}

fn lowering(dim: usize, amp: impl Fn(usize) -> f64) -> DMatrix<C64> {
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..dim {
        m[(n - 1, n)] = c(amp(n));
    }
    m
}

#[derive(Debug, Clone)]
pub struct Boson {
    pub a: OperatorMatrix,
    pub adag: OperatorMatrix,
    pub q: OperatorMatrix,
    pub p: OperatorMatrix,
}

/// Ladder and quadrature operators of one boson mode, a = (q + ip)/sqrt(2).
pub fn build_boson(dim: usize) -> Result<Boson> {
    if dim < 2 {
        return Err(Error::InvalidTruncation(format!("dimension {dim} < 2")));
    }
    let sys = single_mode(BasisSpec::Fock { dim })?;
    let a = lowering(dim, |n| (n as f64).sqrt());
    let ad = a.adjoint();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let q = (&a + &ad) * c(s);
    let p = (&a - &ad) * C64::new(0.0, -s);
    let exact = dim - 1;
    Ok(Boson {
        a: OperatorMatrix::from_parts(a, sys.clone(), exact),
        adag: OperatorMatrix::from_parts(ad, sys.clone(), exact),
        q: OperatorMatrix::from_parts(q, sys.clone(), exact),
        p: OperatorMatrix::from_parts(p, sys, exact),
    })
}

/// X = (a^k + a^dagger^k)/sqrt(2k), Y = -i(a^k - a^dagger^k)/sqrt(2k).
pub fn build_power_quadratures(k: usize, dim: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    if k == 0 {
        return Err(Error::Domain("power k must be at least 1".into()));
    }
    if dim < k + 1 {
        return Err(Error::InvalidTruncation(format!("dimension {dim} < k + 1 = {}", k + 1)));
    }
    let b = build_boson(dim)?;
    let mut ak = b.a.entries.clone();
    for _ in 1..k {
        ak = &ak * &b.a.entries;
    }
    let akd = ak.adjoint();
    let s = 1.0 / (2.0 * k as f64).sqrt();
    let x = (&ak + &akd) * c(s);
    let y = (&ak - &akd) * C64::new(0.0, -s);
    let sys = b.a.system;
    Ok((
        OperatorMatrix::from_parts(x, sys.clone(), dim - k),
        OperatorMatrix::from_parts(y, sys, dim - k),
    ))
}

/// q-bracket [n] = (q^n - q^-n)/(q - q^-1), with [n] = n at q = 1.
pub fn q_bracket(n: f64, q: f64) -> f64 {
    if q == 1.0 {
        return n;
    }
    let l = q.ln();
    (n * l).sinh() / l.sinh()
}

#[derive(Debug, Clone)]
pub struct QOscillator {
    pub a: OperatorMatrix,
    pub adag: OperatorMatrix,
    pub n: OperatorMatrix,
}

pub fn build_qdeformed(q: f64, dim: usize) -> Result<QOscillator> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(Error::Domain(format!("deformation parameter {q} must be positive")));
    }
    if dim < 2 {
        return Err(Error::InvalidTruncation(format!("dimension {dim} < 2")));
    }
    let sys = single_mode(BasisSpec::Fock { dim })?;
    let a = lowering(dim, |n| q_bracket(n as f64, q).sqrt());
    let n = DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| c(i as f64)));
    let exact = dim - 1;
    Ok(QOscillator {
        adag: OperatorMatrix::from_parts(a.adjoint(), sys.clone(), exact),
        a: OperatorMatrix::from_parts(a, sys.clone(), exact),
        n: OperatorMatrix::from_parts(n, sys, exact),
    })
}

/// Hermitian quadratures (a_q + a_q^dagger)/sqrt(2), -i(a_q - a_q^dagger)/sqrt(2).
pub fn qdeformed_quadratures(q: f64, dim: usize) -> Result<(OperatorMatrix, OperatorMatrix)> {
    let osc = build_qdeformed(q, dim)?;
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let x = (&osc.a + &osc.adag).scale(c(s));
    let y = (&osc.a - &osc.adag).scale(C64::new(0.0, -s));
    Ok((x, y))
}

#[derive(Debug, Clone)]
pub struct Su11 {
    pub k: BargmannIndex,
    pub kminus: OperatorMatrix,
    pub kplus: OperatorMatrix,
    pub k3: OperatorMatrix,
    pub k1: OperatorMatrix,
    pub k2: OperatorMatrix,
}

/// Discrete-series operators on |m; k>, m = 0..dim-1:
/// K- |m> = sqrt(m(m+2k-1)) |m-1>, K3 |m> = (m+k) |m>.
pub fn build_su11(k: BargmannIndex, dim: usize) -> Result<Su11> {
    let spec = BasisSpec::Su11 { k, dim };
    spec.validate()?;
    let sys = single_mode(spec)?;
    let kf = k.value();
    let km = lowering(dim, |m| {
        let m = m as f64;
        (m * (m + 2.0 * kf - 1.0)).sqrt()
    });
    let kp = km.adjoint();
    let k3 = DMatrix::from_diagonal(&DVector::from_fn(dim, |m, _| c(m as f64 + kf)));
    let k1 = (&kp + &km) * c(0.5);
    let k2 = (&kp - &km) * C64::new(0.0, -0.5);
    let exact = dim - 1;
    let op = |m: DMatrix<C64>| OperatorMatrix::from_parts(m, sys.clone(), exact);
    Ok(Su11 { k, kminus: op(km), kplus: op(kp), k3: op(k3), k1: op(k1), k2: op(k2) })
}

#[derive(Debug, Clone)]
pub struct Spin {
    pub twice_j: u32,
    pub j1: OperatorMatrix,
    pub j2: OperatorMatrix,
    pub j3: OperatorMatrix,
    pub jplus: OperatorMatrix,
    pub jminus: OperatorMatrix,
}

/// Spin-j matrices on the descending basis |j, j>, ..., |j, -j>.
pub fn build_spin(twice_j: u32) -> Result<Spin> {
    let spec = BasisSpec::Spin { twice_j };
    spec.validate()?;
    let sys = single_mode(spec)?;
    let dim = twice_j as usize + 1;
    let j = twice_j as f64 / 2.0;
    let m_of = |i: usize| j - i as f64;
    // J+ |j, m> = sqrt(j(j+1) - m(m+1)) |j, m+1>; index i+1 -> i
    let mut jp = DMatrix::zeros(dim, dim);
    for i in 1..dim {
        let m = m_of(i);
        jp[(i - 1, i)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt());
    }
    let jm = jp.adjoint();
    let j3 = DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| c(m_of(i))));
    let j1 = (&jp + &jm) * c(0.5);
    let j2 = (&jp - &jm) * C64::new(0.0, -0.5);
    let op = |m: DMatrix<C64>| OperatorMatrix::from_parts(m, sys.clone(), dim);
    Ok(Spin { twice_j, j1: op(j1), j2: op(j2), j3: op(j3), jplus: op(jp), jminus: op(jm) })
}

/// Embeds a single-mode operator into `mode` of `system`, acting as the
/// identity elsewhere.
pub fn tensor_embed(op: &OperatorMatrix, mode: usize, system: &ModeSystem) -> Result<OperatorMatrix> {
    let target = system
        .modes
        .get(mode)
        .ok_or_else(|| Error::DimensionMismatch { expected: system.n_modes(), got: mode + 1 })?;
    if op.system.n_modes() != 1 || op.dim() != target.dim() {
        return Err(Error::DimensionMismatch { expected: target.dim(), got: op.dim() });
    }
    let before: usize = system.modes[..mode].iter().map(BasisSpec::dim).product();
    let after: usize = system.modes[mode + 1..].iter().map(BasisSpec::dim).product();
    let left = DMatrix::<C64>::identity(before, before);
    let right = DMatrix::<C64>::identity(after, after);
    let entries = left.kronecker(&op.entries).kronecker(&right);
    Ok(OperatorMatrix::from_parts(entries, system.clone(), op.exact_dim))
}

/// Canonical quadratures of `n_modes` bosons in the order (p_1..p_N, q_1..q_N).
pub fn canonical_quadratures(n_modes: usize, dim: usize) -> Result<Vec<OperatorMatrix>> {
    let sys = ModeSystem::fock(n_modes, dim)?;
    let b = build_boson(dim)?;
    let mut out = Vec::with_capacity(2 * n_modes);
    for j in 0..n_modes {
        out.push(tensor_embed(&b.p, j, &sys)?);
    }
    for j in 0..n_modes {
        out.push(tensor_embed(&b.q, j, &sys)?);
    }
    Ok(out)
}

/// Embedded lowering operators a_1..a_N.
pub fn multimode_lowering(n_modes: usize, dim: usize) -> Result<Vec<OperatorMatrix>> {
    let sys = ModeSystem::fock(n_modes, dim)?;
    let b = build_boson(dim)?;
    (0..n_modes).map(|j| tensor_embed(&b.a, j, &sys)).collect()
}

#[derive(Debug, Clone)]
pub struct SpGenerators {
    /// K_{jk} = a_j a_k / 2 for j <= k.
    pub lowering: Vec<((usize, usize), OperatorMatrix)>,
    /// K_{jk}^dagger, same ordering.
    pub raising: Vec<((usize, usize), OperatorMatrix)>,
    /// K^{(3)}_{jk} = (a_j^dagger a_k + a_k^dagger a_j)/4 for j <= k.
    pub cartan: Vec<((usize, usize), OperatorMatrix)>,
}

impl SpGenerators {
    /// Hermitian observables spanning the algebra: both quadratures of every
    /// K_{jk}, then every K^{(3)}_{jk}.
    pub fn hermitian_quadratures(&self) -> Vec<OperatorMatrix> {
        let mut out = Vec::new();
        for (_, k) in &self.lowering {
            let (x, y) = k.quadratures();
            out.push(x);
            out.push(y);
        }
        out.extend(self.cartan.iter().map(|(_, k)| k.clone()));
        out
    }
}

pub fn build_spn_generators(n_modes: usize, dim: usize) -> Result<SpGenerators> {
    if n_modes == 0 {
        return Err(Error::Domain("need at least one mode".into()));
    }
    let a = multimode_lowering(n_modes, dim)?;
    let ad: Vec<OperatorMatrix> = a.iter().map(OperatorMatrix::adjoint).collect();
    let mut g = SpGenerators { lowering: Vec::new(), raising: Vec::new(), cartan: Vec::new() };
    for j in 0..n_modes {
        for k in j..n_modes {
            let mut kjk = (&a[j] * &a[k]).scale(c(0.5));
            kjk.exact_dim = dim.saturating_sub(2);
            g.raising.push(((j, k), kjk.adjoint()));
            g.lowering.push(((j, k), kjk));
            let mut k3 = (&(&ad[j] * &a[k]) + &(&ad[k] * &a[j])).scale(c(0.25)).force_hermitian();
            k3.exact_dim = dim - 1;
            g.cartan.push(((j, k), k3));
        }
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn close(a: &DMatrix<C64>, b: &DMatrix<C64>, tol: f64) -> bool {
        (a - b).iter().all(|x| x.norm() < tol)
    }

    #[test]
    fn ladder_entries() {
        let b = build_boson(3).unwrap();
        assert_eq!(b.a.entries()[(0, 1)], c(1.0));
        assert_relative_eq!(b.a.entries()[(1, 2)].re, 2f64.sqrt());
        assert!(b.q.is_hermitian() && b.p.is_hermitian());
        assert!(!b.a.is_hermitian());
        assert!(matches!(build_boson(1), Err(Error::InvalidTruncation(_))));
    }

    #[test]
    fn canonical_commutator_and_edge() {
        let b = build_boson(40).unwrap();
        let comm = b.q.commutator(&b.p);
        for n in 0..39 {
            assert!((comm.entries()[(n, n)] - C64::i()).norm() < 1e-12);
        }
        assert!((comm.entries()[(39, 39)] - C64::new(0.0, -39.0)).norm() < 1e-12);
    }

    #[test]
    fn power_one_is_canonical_pair() {
        let b = build_boson(10).unwrap();
        let (x, y) = build_power_quadratures(1, 10).unwrap();
        assert!(close(x.entries(), b.q.entries(), 1e-15));
        assert!(close(y.entries(), b.p.entries(), 1e-15));
    }

    #[test]
    fn power_two_vacuum_commutator() {
        let (x, y) = build_power_quadratures(2, 50).unwrap();
        let mic = x.commutator(&y).scale(C64::new(0.0, -1.0));
        assert_relative_eq!(mic.entries()[(0, 0)].re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn q_bracket_values() {
        assert_relative_eq!(q_bracket(2.0, 2.0), 2.5, epsilon = 1e-14);
        let osc = build_qdeformed(2.0, 5).unwrap();
        assert_relative_eq!(osc.a.entries()[(1, 2)].re, 2.5f64.sqrt(), epsilon = 1e-14);
        let b = build_boson(10).unwrap();
        assert_eq!(build_qdeformed(1.0, 10).unwrap().a.entries(), b.a.entries());
        assert!(matches!(build_qdeformed(0.0, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn q_deformation_is_continuous_at_one() {
        let a1 = build_qdeformed(1.0, 30).unwrap().a;
        for q in [1.0 - 1e-6, 1.0 + 1e-6] {
            let aq = build_qdeformed(q, 30).unwrap().a;
            assert!(crate::linalg::cmax_abs(&(aq.entries() - a1.entries())) < 1e-4);
        }
    }

    #[test]
    fn q_commutator_positive_below_edge() {
        let osc = build_qdeformed(0.5, 20).unwrap();
        let comm = osc.a.commutator(&osc.adag);
        for n in 0..19 {
            assert!(comm.entries()[(n, n)].re > 0.0);
        }
    }

    #[test]
    fn su11_lowest_weight_and_amplitude() {
        let s = build_su11("1".parse().unwrap(), 10).unwrap();
        assert_relative_eq!(s.k3.entries()[(0, 0)].re, 1.0);
        assert_relative_eq!(s.kminus.entries()[(2, 3)].re, 2.0 * 3f64.sqrt(), epsilon = 1e-14);
        assert!(s.k1.is_hermitian() && s.k2.is_hermitian());
        // [K-, K+] = 2 K3 below the edge
        let comm = s.kminus.commutator(&s.kplus);
        for m in 0..9 {
            assert_relative_eq!(comm.entries()[(m, m)].re, 2.0 * s.k3.entries()[(m, m)].re, epsilon = 1e-12);
        }
    }

    #[test]
    fn bargmann_parsing() {
        assert_eq!("1/4".parse::<BargmannIndex>().unwrap(), BargmannIndex::QUARTER);
        assert_eq!("0.75".parse::<BargmannIndex>().unwrap(), BargmannIndex::THREE_QUARTERS);
        assert!("1/3".parse::<BargmannIndex>().is_err());
        assert!("5/4".parse::<BargmannIndex>().is_err());
        assert_eq!("3/2".parse::<BargmannIndex>().unwrap().value(), 1.5);
    }

    #[test]
    fn su11_quarter_matches_even_fock_sector() {
        let s = build_su11(BargmannIndex::QUARTER, 30).unwrap();
        let s3 = build_su11(BargmannIndex::THREE_QUARTERS, 30).unwrap();
        let b = build_boson(60).unwrap();
        let a2 = (&b.a * &b.a).scale(c(0.5));
        let n = &b.adag * &b.a;
        for m in 0..30 {
            for l in 0..30 {
                let even = a2.entries()[(2 * m, 2 * l)];
                assert!((even - s.kminus.entries()[(m, l)]).norm() < 1e-12);
                if 2 * l + 1 < 60 {
                    let odd = a2.entries()[(2 * m + 1, 2 * l + 1)];
                    assert!((odd - s3.kminus.entries()[(m, l)]).norm() < 1e-12);
                }
            }
            let k3 = (2.0 * n.entries()[(2 * m, 2 * m)].re + 1.0) / 4.0;
            assert_relative_eq!(k3, s.k3.entries()[(m, m)].re, epsilon = 1e-12);
        }
    }

    #[test]
    fn spin_half_is_pauli() {
        let s = build_spin(1).unwrap();
        let half = c(0.5);
        assert!(close(s.j1.entries(), &DMatrix::from_row_slice(2, 2, &[c(0.0), half, half, c(0.0)]), 1e-15));
        let i2 = C64::new(0.0, 0.5);
        assert!(close(s.j2.entries(), &DMatrix::from_row_slice(2, 2, &[c(0.0), -i2, i2, c(0.0)]), 1e-15));
        assert!(close(s.j3.entries(), &DMatrix::from_row_slice(2, 2, &[half, c(0.0), c(0.0), -half]), 1e-15));
    }

    #[test]
    fn spin_casimir_and_traces() {
        for twice_j in 1..8u32 {
            let s = build_spin(twice_j).unwrap();
            let j = twice_j as f64 / 2.0;
            let cas = &(&(&s.j1 * &s.j1) + &(&s.j2 * &s.j2)) + &(&s.j3 * &s.j3);
            let dim = twice_j as usize + 1;
            let expect = DMatrix::<C64>::identity(dim, dim) * c(j * (j + 1.0));
            assert!(close(cas.entries(), &expect, 1e-12));
            // [J1, J2] = i J3
            let comm = s.j1.commutator(&s.j2);
            assert!(close(comm.entries(), s.j3.scale(C64::i()).entries(), 1e-12));
        }
        let s = build_spin(3).unwrap();
        for op in [&s.j1, &s.j2, &s.j3] {
            assert_relative_eq!((op * op).entries().trace().re, 5.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn embedding_commutes_across_modes() {
        let sys = ModeSystem::fock(2, 6).unwrap();
        let b = build_boson(6).unwrap();
        let a0 = tensor_embed(&b.a, 0, &sys).unwrap();
        let ad1 = tensor_embed(&b.adag, 1, &sys).unwrap();
        assert!(crate::linalg::cmax_abs(a0.commutator(&ad1).entries()) < 1e-14);
        let vac = QuantumState::basis(sys.clone(), &[0, 0]).unwrap();
        assert!(a0.apply(vac.amplitudes().unwrap()).norm() == 0.0);
        assert!(tensor_embed(&b.a, 2, &sys).is_err());
        let b5 = build_boson(5).unwrap();
        assert!(matches!(tensor_embed(&b5.a, 0, &sys), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn row_major_mode_order() {
        let sys = ModeSystem::fock(2, 3).unwrap();
        assert_eq!(sys.flat_index(&[1, 2]), 5);
        assert_eq!(sys.occupations(5), vec![1, 2]);
    }

    #[test]
    fn expectations() {
        let b = build_boson(20).unwrap();
        let n = &b.adag * &b.a;
        let sys = b.a.system().clone();
        let vac = QuantumState::basis(sys.clone(), &[0]).unwrap();
        assert_eq!(expectation(&n, &vac).unwrap(), c(0.0));
        let three = QuantumState::basis(sys, &[3]).unwrap();
        assert_relative_eq!(expectation(&n, &three).unwrap().re, 3.0, epsilon = 1e-14);
    }

    #[test]
    fn spn_generators_single_mode() {
        let g = build_spn_generators(1, 20).unwrap();
        let b = build_boson(20).unwrap();
        let a2 = (&b.a * &b.a).scale(c(0.5));
        assert!(close(g.lowering[0].1.entries(), a2.entries(), 1e-14));
        assert_eq!(g.hermitian_quadratures().len(), 3);
        assert!(g.hermitian_quadratures().iter().all(OperatorMatrix::is_hermitian));
    }

    #[test]
    fn spn_generators_two_modes() {
        let g = build_spn_generators(2, 6).unwrap();
        assert_eq!(g.lowering.len(), 3);
        let k11 = &g.lowering[0].1;
        let k22d = &g.raising[2].1;
        assert_eq!(g.raising[2].0, (1, 1));
        assert!(crate::linalg::cmax_abs(k11.commutator(k22d).entries()) < 1e-14);
        let vac = QuantumState::basis(ModeSystem::fock(2, 6).unwrap(), &[0, 0]).unwrap();
        for (_, k3) in &g.cartan {
            assert_eq!(expectation(k3, &vac).unwrap(), c(0.0));
        }
    }

    #[test]
    fn mixed_state_validation() {
        let sys = ModeSystem::fock(1, 4).unwrap();
        let mut rho = DMatrix::<C64>::zeros(4, 4);
        rho[(0, 0)] = c(0.5);
        rho[(1, 1)] = c(0.5);
        assert!(QuantumState::mixed(rho.clone(), sys.clone()).is_ok());
        rho[(1, 1)] = c(0.6);
        assert!(QuantumState::mixed(rho, sys).is_err());
    }
}
