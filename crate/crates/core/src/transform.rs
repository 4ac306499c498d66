//! Linear maps X' = Lambda X on observable lists and the congruences they
//! induce, sigma' = Lambda sigma Lambda^T.

use crate::algebra::{linear_combination, OperatorMatrix, QuantumState, Spin};
use crate::error::{Error, Result};
use crate::linalg::{c, det, max_abs, sorted_symmetric_eigen, symmetric_function, symplectic_form, to_complex};
use crate::moments::{trace_i_sigma_j, uncertainty_pair_labeled, UncertaintyPair};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub const CLASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MapClass {
    General,
    Orthogonal,
    Symplectic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CongruenceMap {
    pub lambda: DMatrix<f64>,
    pub class: MapClass,
    pub det: f64,
}

impl CongruenceMap {
    pub fn new(lambda: DMatrix<f64>, class: MapClass) -> Result<Self> {
        let n = lambda.nrows();
        if lambda.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: lambda.ncols() });
        }
        let d = det(&lambda);
        if d.abs() < 1e-14 * max_abs(&lambda).max(1.0).powi(n as i32) {
            return Err(Error::SingularMap(format!("det = {d:e}")));
        }
        match class {
            MapClass::General => {}
            MapClass::Orthogonal => {
                let r = max_abs(&(&lambda * lambda.transpose() - DMatrix::identity(n, n)));
                if r > CLASS_TOL {
                    return Err(Error::Contract(format!("map is not orthogonal (residual {r:e})")));
                }
            }
            MapClass::Symplectic => {
                if n % 2 == 1 {
                    return Err(Error::Contract("symplectic maps need even dimension".into()));
                }
                let j = symplectic_form(n / 2);
                let r = max_abs(&(&lambda * &j * lambda.transpose() - &j));
                if r > CLASS_TOL {
                    return Err(Error::Contract(format!("map is not symplectic (residual {r:e})")));
                }
            }
        }
        Ok(CongruenceMap { lambda, class, det: d })
    }

    pub fn identity(n: usize) -> Self {
        CongruenceMap { lambda: DMatrix::identity(n, n), class: MapClass::Orthogonal, det: 1.0 }
    }

    pub fn n(&self) -> usize {
        self.lambda.nrows()
    }

    /// Most specific class the matrix satisfies.
    pub fn classify(lambda: DMatrix<f64>) -> Result<Self> {
        let n = lambda.nrows();
        if n % 2 == 0 {
            if let Ok(m) = Self::new(lambda.clone(), MapClass::Symplectic) {
                if Self::new(lambda.clone(), MapClass::Orthogonal).is_err() {
                    return Ok(m);
                }
            }
        }
        Self::new(lambda.clone(), MapClass::Orthogonal).or_else(|_| Self::new(lambda, MapClass::General))
    }
}

fn primed_labels(pair: &UncertaintyPair) -> Vec<String> {
    pair.labels.iter().map(|l| format!("{l}'")).collect()
}

/// sigma' = Lambda sigma Lambda^T and C' = Lambda C Lambda^T.
pub fn transform_sigma(map: &CongruenceMap, pair: &UncertaintyPair) -> Result<UncertaintyPair> {
    if map.n() != pair.n() {
        return Err(Error::DimensionMismatch { expected: pair.n(), got: map.n() });
    }
    let l = &map.lambda;
    let sigma = l * &pair.sigma * l.transpose();
    let cmat = l * &pair.cmat * l.transpose();
    // symmetrize away rounding
    let sigma = (&sigma + sigma.transpose()) * 0.5;
    let cmat = (&cmat - cmat.transpose()) * 0.5;
    let mut out = UncertaintyPair::new(sigma, cmat, primed_labels(pair))?;
    out.truncation_warning = pair.truncation_warning;
    Ok(out)
}

/// X'_mu = Lambda_{mu nu} X_nu.
pub fn transform_operators(map: &CongruenceMap, ops: &[OperatorMatrix]) -> Result<Vec<OperatorMatrix>> {
    if map.n() != ops.len() {
        return Err(Error::DimensionMismatch { expected: ops.len(), got: map.n() });
    }
    (0..map.n())
        .map(|mu| {
            let coeffs: Vec<C64> = (0..map.n()).map(|nu| c(map.lambda[(mu, nu)])).collect();
            linear_combination(&coeffs, ops)
        })
        .collect()
}

/// Orders eigenpairs by descending eigenvalue; near-equal eigenvalues are
/// ordered by the index of the eigenvector's largest component. Each
/// eigenvector is signed so that component is positive.
fn canonical_eigen(sigma: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let (vals, mut vecs) = sorted_symmetric_eigen(sigma);
    let n = vals.len();
    let lead: Vec<usize> = (0..n).map(|k| vecs.column(k).iamax()).collect();
    for k in 0..n {
        if vecs[(lead[k], k)] < 0.0 {
            vecs.column_mut(k).neg_mut();
        }
    }
    let scale = vals.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    let mut order: Vec<usize> = (0..n).collect();
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (vals[end - 1] - vals[end]).abs() <= 1e-12 * scale {
            end += 1;
        }
        order[start..end].sort_by_key(|&k| lead[k]);
        start = end;
    }
    let values = DVector::from_iterator(n, order.iter().map(|&k| vals[k]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &vecs.column(src));
    }
    (values, vectors)
}

/// Orthogonal Lambda = V^T with sigma = V diag V^T, eigenvalues descending.
pub fn orthogonal_diagonalize(pair: &UncertaintyPair) -> Result<(CongruenceMap, UncertaintyPair)> {
    let (_, vecs) = canonical_eigen(&pair.sigma);
    let map = CongruenceMap::new(vecs.transpose(), MapClass::Orthogonal)?;
    let mut out = transform_sigma(&map, pair)?;
    // zero the rounding-level covariances the rotation leaves
    for i in 0..out.n() {
        for j in 0..out.n() {
            if i != j {
                out.sigma[(i, j)] = 0.0;
            }
        }
    }
    Ok((map, out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct WilliamsonResult {
    pub map: CongruenceMap,
    /// (d_1..d_N, d_1..d_N), d descending.
    pub diagonal: DVector<f64>,
    /// d_j * d_{N+j}.
    pub pair_products: DVector<f64>,
}

impl WilliamsonResult {
    pub fn symplectic_eigenvalues(&self) -> DVector<f64> {
        let n = self.pair_products.len();
        self.diagonal.rows(0, n).into_owned()
    }

    /// Lambda^{-1} diag Lambda^{-T}.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let inv = self.map.lambda.clone().try_inverse().expect("symplectic maps are invertible");
        &inv * DMatrix::from_diagonal(&self.diagonal) * inv.transpose()
    }

    /// 2 sum_j (d_j d_{N+j})^k.
    pub fn trace_identity(&self, k: u32) -> f64 {
        2.0 * self.pair_products.iter().map(|p| p.powi(k as i32)).sum::<f64>()
    }
}

/// Symplectic diagonalization of a positive-definite matrix.
///
/// With K = sigma^{1/2} J sigma^{1/2} (real antisymmetric), the hermitian
/// matrix iK has eigenpairs (d, x + iy), d > 0, and the columns sqrt(2)(y, x)
/// form an orthogonal O with O^T K O = [[0, D], [-D, 0]]. Then
/// Lambda = D^{1/2} O^T sigma^{-1/2} is symplectic and Lambda sigma Lambda^T = D.
pub fn williamson_diagonalize(sigma: &DMatrix<f64>) -> Result<WilliamsonResult> {
    let n = sigma.nrows();
    if sigma.ncols() != n || n % 2 == 1 || n == 0 {
        return Err(Error::Contract(format!("need a square matrix of even order, got {}x{}", n, sigma.ncols())));
    }
    if max_abs(&(sigma - sigma.transpose())) > 1e-12 * max_abs(sigma).max(1.0) {
        return Err(Error::Contract("matrix is not symmetric".into()));
    }
    let sigma = (sigma + sigma.transpose()) * 0.5;
    let eig = sigma.clone().symmetric_eigen();
    let (index, eigenvalue) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &e)| if e < acc.1 { (i, e) } else { acc });
    if eigenvalue <= 1e-10 {
        return Err(Error::NotPositiveDefinite { eigenvalue, index });
    }
    let half = n / 2;
    if max_abs(&(&sigma - DMatrix::from_diagonal(&sigma.diagonal()))) == 0.0 {
        return diagonal_williamson(&sigma, half);
    }
    let s_half = symmetric_function(&sigma, f64::sqrt);
    let s_mhalf = symmetric_function(&sigma, |x| 1.0 / x.sqrt());
    let j = symplectic_form(half);
    let kmat = &s_half * &j * &s_half;
    let kmat = (&kmat - kmat.transpose()) * 0.5;
    let ik = to_complex(&kmat) * C64::i();
    let herm = ik.symmetric_eigen();

    let mut positive: Vec<(f64, DVector<f64>, DVector<f64>)> = (0..n)
        .filter(|&i| herm.eigenvalues[i] > 0.0)
        .map(|i| {
            let v = herm.eigenvectors.column(i);
            let x = DVector::from_iterator(n, v.iter().map(|z| z.re * std::f64::consts::SQRT_2));
            let y = DVector::from_iterator(n, v.iter().map(|z| z.im * std::f64::consts::SQRT_2));
            (herm.eigenvalues[i], x, y)
        })
        .collect();
    if positive.len() != half {
        return Err(Error::Contract(format!("expected {half} positive symplectic eigenvalues, got {}", positive.len())));
    }
    let scale = positive.iter().fold(0.0f64, |a, p| a.max(p.0));
    positive.sort_by(|a, b| {
        if (a.0 - b.0).abs() > 1e-12 * scale {
            b.0.partial_cmp(&a.0).unwrap()
        } else {
            a.1.iter().partial_cmp(b.1.iter()).unwrap_or(std::cmp::Ordering::Equal)
        }
    });

    let mut o = DMatrix::zeros(n, n);
    let mut dvals = DVector::zeros(n);
    for (slot, (d, x, y)) in positive.iter().enumerate() {
        o.set_column(slot, y);
        o.set_column(half + slot, x);
        dvals[slot] = *d;
        dvals[half + slot] = *d;
    }
    let d_half = DMatrix::from_diagonal(&dvals.map(f64::sqrt));
    let lambda = d_half * o.transpose() * s_mhalf;
    let map = CongruenceMap::new(lambda, MapClass::Symplectic)?;
    let pair_products = DVector::from_fn(half, |i, _| dvals[i] * dvals[half + i]);
    Ok(WilliamsonResult { map, diagonal: dvals, pair_products })
}

/// Already-diagonal input: each (p_j, q_j) pair only needs the squeeze
/// diag(s, 1/s), and modes are permuted into descending order. Degenerate
/// spectra such as I/2 then give the identity rather than an arbitrary
/// rotation of the eigenspace.
fn diagonal_williamson(sigma: &DMatrix<f64>, half: usize) -> Result<WilliamsonResult> {
    let n = 2 * half;
    let d: Vec<f64> = (0..half).map(|j| (sigma[(j, j)] * sigma[(half + j, half + j)]).sqrt()).collect();
    let mut order: Vec<usize> = (0..half).collect();
    order.sort_by(|&a, &b| d[b].partial_cmp(&d[a]).unwrap().then(a.cmp(&b)));
    let mut lambda = DMatrix::zeros(n, n);
    let mut dvals = DVector::zeros(n);
    for (slot, &j) in order.iter().enumerate() {
        let s = (sigma[(half + j, half + j)] / sigma[(j, j)]).powf(0.25);
        lambda[(slot, j)] = s;
        lambda[(half + slot, half + j)] = 1.0 / s;
        dvals[slot] = d[j];
        dvals[half + slot] = d[j];
    }
    let map = CongruenceMap::new(lambda, MapClass::Symplectic)?;
    let pair_products = DVector::from_fn(half, |i, _| dvals[i] * dvals[half + i]);
    Ok(WilliamsonResult { map, diagonal: dvals, pair_products })
}

/// c0^2 = min_j |<[X'_j, X'_{N+j}]>|^2 for the Williamson-rotated
/// observables; equals 1 for canonical pairs.
pub fn c0_squared(pair: &UncertaintyPair, w: &WilliamsonResult) -> Result<f64> {
    let rotated = transform_sigma(&w.map, pair)?;
    let half = pair.n() / 2;
    let c0 = (0..half)
        .map(|j| 2.0 * rotated.cmat[(j, half + j)].abs())
        .fold(f64::INFINITY, f64::min);
    Ok(c0 * c0)
}

#[derive(Debug, Clone)]
pub struct SpinDecorrelation {
    /// Proper rotation R with J'_mu = R_{mu nu} J_nu.
    pub rotation: CongruenceMap,
    pub pair: UncertaintyPair,
    pub operators: [OperatorMatrix; 3],
    /// max |[J'_1, J'_2] - i J'_3| over the three cyclic relations.
    pub commutator_residual: f64,
}

/// Rotates the spin triple so its uncertainty matrix is diagonal.
pub fn spin_decorrelate(spin: &Spin, state: &QuantumState) -> Result<SpinDecorrelation> {
    let ops = [spin.j1.clone(), spin.j2.clone(), spin.j3.clone()];
    let labels = vec!["J1".to_string(), "J2".to_string(), "J3".to_string()];
    let pair = uncertainty_pair_labeled(&ops, state, labels)?;
    let (mut map, _) = orthogonal_diagonalize(&pair)?;
    if map.det < 0.0 {
        map.lambda.row_mut(2).neg_mut();
        map.det = -map.det;
    }
    let rotated = transform_sigma(&map, &pair)?;
    let mut rotated = rotated;
    for i in 0..3 {
        for j in 0..3 {
            if i != j {
                rotated.sigma[(i, j)] = 0.0;
            }
        }
    }
    let new_ops = transform_operators(&map, &ops)?;
    let mut residual: f64 = 0.0;
    for (a, b, c3) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        let comm = new_ops[a].commutator(&new_ops[b]);
        let target = new_ops[c3].scale(C64::i());
        residual = residual.max(crate::linalg::cmax_abs(&(comm.entries() - target.entries())));
    }
    if residual > 1e-10 {
        return Err(Error::Contract(format!("rotated spin commutators violated ({residual:e})")));
    }
    let [a, b, c3]: [OperatorMatrix; 3] = new_ops.try_into().expect("three operators");
    Ok(SpinDecorrelation { rotation: map, pair: rotated, operators: [a, b, c3], commutator_residual: residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantDrift {
    pub name: String,
    pub before: f64,
    pub after: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantReport {
    pub class: MapClass,
    pub entries: Vec<InvariantDrift>,
    pub max_drift: f64,
    pub pass: bool,
}

pub const INVARIANT_TOL: f64 = 1e-9;

fn drift(name: String, before: f64, after: f64) -> InvariantDrift {
    InvariantDrift { name, before, after, drift: (after - before).abs() / before.abs().max(1.0) }
}

fn trace_pow(m: &DMatrix<f64>, k: u32) -> f64 {
    let mut p = m.clone();
    for _ in 1..k {
        p = &p * m;
    }
    p.trace()
}

/// Checks the invariants the map's class guarantees: det sigma (scaled by
/// det(Lambda)^2) always, Tr sigma^k for orthogonal maps and Tr(sigma J)^k
/// for symplectic ones.
pub fn invariant_suite(map: &CongruenceMap, pair: &UncertaintyPair, orders: &[u32]) -> Result<InvariantReport> {
    let out = transform_sigma(map, pair)?;
    let mut entries = vec![drift("det".into(), map.det * map.det * pair.det_sigma(), out.det_sigma())];
    match map.class {
        MapClass::General => {}
        MapClass::Orthogonal => {
            for &k in orders {
                entries.push(drift(format!("tr_sigma^{k}"), trace_pow(&pair.sigma, k), trace_pow(&out.sigma, k)));
            }
        }
        MapClass::Symplectic => {
            let j = symplectic_form(pair.n() / 2);
            for &k in orders {
                entries.push(drift(
                    format!("tr_(sigma_J)^{k}"),
                    trace_pow(&(&pair.sigma * &j), k),
                    trace_pow(&(&out.sigma * &j), k),
                ));
            }
        }
    }
    let max_drift = entries.iter().fold(0.0f64, |a, e| a.max(e.drift));
    Ok(InvariantReport { class: map.class, entries, max_drift, pass: max_drift < INVARIANT_TOL })
}

/// Tr(i sigma J)^{2k} against its Williamson form 2 sum_j (d_j d_{N+j})^k.
pub fn trace_identity_residual(sigma: &DMatrix<f64>, w: &WilliamsonResult, k: u32) -> Result<f64> {
    let lhs = trace_i_sigma_j(sigma, k)?;
    let rhs = w.trace_identity(k);
    Ok((lhs - rhs).abs() / rhs.abs().max(1.0))
}
