//! Seeded invariant suite. Every property draws its cases from the seed
//! manifest and reports the worst defect against its tolerance.

use crate::error::{CliError, CliResult};
use crate::output::{Sink, SCHEMA};
use crate::ris_cmd::{grow, truncation_cap};
use clap::Args;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use robertson::algebra::{build_qdeformed, BargmannIndex, ModeSystem, OperatorMatrix, QuantumState};
use robertson::linalg::{max_abs, symplectic_form};
use robertson::moments::{detc_factorized, inequality_report, uncertainty_pair, UncertaintyPair};
use robertson::ris::{
    canonical_observables, canonical_ris, squared_amplitude_observables, squared_amplitude_ris, su11_observables,
    su11_ris, su2_observables, su2_ris, Parity, RisState,
};
use robertson::transform::{invariant_suite, williamson_diagonalize, CongruenceMap, MapClass};
use robertson::C64;
use robertson_oracle::sampler::{random_state, Sample, StateKind};
use robertson_oracle::seeds::{default_seeds, parse_manifest};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Seed manifest: one decimal seed per line, `#` comments.
    #[arg(long)]
    pub seeds: Option<PathBuf>,
    /// Shrinks every sigma by EPS times the identity before the Robertson check.
    #[arg(long, hide = true)]
    pub perturb_sigma: Option<f64>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Serialize)]
struct Summary {
    schema: u32,
    command: &'static str,
    seeds: Vec<u64>,
    properties: Vec<PropertyResult>,
    pass: bool,
}

/// Defects for one seed; a larger value is worse.
type Case = robertson::Result<Vec<f64>>;

struct Property {
    name: &'static str,
    tolerance: f64,
    case: fn(&mut ChaCha8Rng, &Ctx) -> Case,
}

struct Ctx {
    perturb: f64,
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn cnormal(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(normal(rng), normal(rng))
}

fn kind(rng: &mut ChaCha8Rng) -> StateKind {
    [StateKind::Pure, StateKind::Mixed, StateKind::GaussianLike][rng.random_range(0..3)]
}

fn hermitian(rng: &mut ChaCha8Rng, system: &ModeSystem) -> robertson::Result<OperatorMatrix> {
    let d = system.total_dim();
    let a = DMatrix::from_fn(d, d, |_, _| cnormal(rng));
    OperatorMatrix::new((&a + a.adjoint()) * C64::new(0.5, 0.0), system.clone(), d)
}

fn quantum(sample: Sample, system: ModeSystem) -> robertson::Result<QuantumState> {
    match sample {
        Sample::Pure(v) => QuantumState::pure_normalized(v, system),
        Sample::Mixed(rho) => QuantumState::mixed(rho, system),
    }
}

/// Random state on `dims`, zero-padded by `extra` levels per mode so that
/// truncated quadratures act exactly on its support.
fn padded_state(rng: &mut ChaCha8Rng, dims: &[usize], extra: usize) -> robertson::Result<QuantumState> {
    let sample = random_state(dims, kind(rng), rng.random());
    let small = ModeSystem::fock(dims.len(), dims[0])?;
    let big = ModeSystem::fock(dims.len(), dims[0] + extra)?;
    let map: Vec<usize> = (0..small.total_dim()).map(|i| big.flat_index(&small.occupations(i))).collect();
    let n = big.total_dim();
    match sample {
        Sample::Pure(v) => {
            let mut out = DVector::zeros(n);
            for (i, &j) in map.iter().enumerate() {
                out[j] = v[i];
            }
            QuantumState::pure_normalized(out, big)
        }
        Sample::Mixed(rho) => {
            let mut out = DMatrix::zeros(n, n);
            for (a, &ja) in map.iter().enumerate() {
                for (b, &jb) in map.iter().enumerate() {
                    out[(ja, jb)] = rho[(a, b)];
                }
            }
            QuantumState::mixed(out, big)
        }
    }
}

/// Random observables in a random state on a 10-level space.
fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> robertson::Result<UncertaintyPair> {
    let sys = ModeSystem::fock(1, 10)?;
    let ops = (0..n).map(|_| hermitian(rng, &sys)).collect::<robertson::Result<Vec<_>>>()?;
    let state = quantum(random_state(&[10], kind(rng), rng.random()), sys)?;
    uncertainty_pair(&ops, &state)
}

fn random_spd(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| normal(rng));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.1
}

fn robertson_defect(pair: &UncertaintyPair, perturb: f64) -> f64 {
    let n = pair.n();
    let sigma = &pair.sigma - DMatrix::identity(n, n) * perturb;
    let det_sigma = sigma.determinant();
    -(det_sigma - pair.det_c()) / det_sigma.abs().max(1.0)
}

/// Minimizers put the Robertson check at its edge; the rest are generic.
fn robertson_gap(rng: &mut ChaCha8Rng, ctx: &Ctx) -> Case {
    let mut out = Vec::new();
    for n in [2, 3, 4, 5] {
        out.push(robertson_defect(&random_pair(rng, n)?, ctx.perturb));
    }
    let r: f64 = rng.random_range(0.0..0.8);
    let u = DMatrix::from_element(1, 1, C64::new(r.cosh(), 0.0));
    let v = DMatrix::from_element(1, 1, C64::from_polar(r.sinh(), rng.random_range(0.0..6.28)));
    let alpha = DVector::from_element(1, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let s = grow(64, truncation_cap(1), |d| canonical_ris(&u, &v, &alpha, d))?;
    out.push(robertson_defect(&uncertainty_pair(&canonical_observables(1, s.dim())?, &s.state)?, ctx.perturb));
    Ok(out)
}

fn product_gap(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    [2, 3, 4, 6]
        .iter()
        .map(|&n| {
            let p = random_pair(rng, n)?;
            let prod: f64 = p.sigma.diagonal().iter().product();
            Ok(-(prod - p.det_sigma()) / prod.abs().max(1.0))
        })
        .collect()
}

fn odd_det_c(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    [3, 5]
        .iter()
        .map(|&n| {
            let p = random_pair(rng, n)?;
            Ok(p.det_c().abs() / max_abs(&p.cmat).max(1.0).powi(n as i32))
        })
        .collect()
}

fn sigma_psd(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    [2, 4, 6]
        .iter()
        .map(|&n| {
            let p = random_pair(rng, n)?;
            let min = p.sigma.symmetric_eigenvalues().min();
            Ok(-min / max_abs(&p.sigma).max(1.0))
        })
        .collect()
}

fn detc_factorization(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    let state = padded_state(rng, &[6, 6], 2)?;
    let ops = canonical_observables(2, 8)?;
    let pair = uncertainty_pair(&ops, &state)?;
    let f = detc_factorized(&ops, &state)?;
    Ok(vec![(f - pair.det_c()).abs() / pair.det_c().abs().max(1.0)])
}

fn congruence_invariants(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    let pair = random_pair(rng, 4)?;
    let general = loop {
        let m = DMatrix::from_fn(4, 4, |_, _| normal(rng)) + DMatrix::identity(4, 4) * 2.0;
        if m.determinant().abs() > 0.1 {
            break m;
        }
    };
    let orthogonal = DMatrix::from_fn(4, 4, |_, _| normal(rng)).qr().q();
    let symplectic = williamson_diagonalize(&random_spd(rng, 4))?.map.lambda;
    let maps = [
        CongruenceMap::new(general, MapClass::General)?,
        CongruenceMap::new(orthogonal, MapClass::Orthogonal)?,
        CongruenceMap::new(symplectic, MapClass::Symplectic)?,
    ];
    maps.iter().map(|m| Ok(invariant_suite(m, &pair, &[1, 2, 3])?.max_drift)).collect()
}

fn williamson_cases(rng: &mut ChaCha8Rng) -> robertson::Result<Vec<(DMatrix<f64>, robertson::transform::WilliamsonResult)>> {
    (1..=4)
        .map(|half| {
            let s = random_spd(rng, 2 * half);
            let w = williamson_diagonalize(&s)?;
            Ok((s, w))
        })
        .collect()
}

fn williamson_diagonal(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    Ok(williamson_cases(rng)?
        .iter()
        .map(|(s, w)| {
            let d = &w.map.lambda * s * w.map.lambda.transpose();
            let off = &d - DMatrix::from_diagonal(&d.diagonal());
            max_abs(&off) / max_abs(&d).max(1.0)
        })
        .collect())
}

fn williamson_symplectic(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    Ok(williamson_cases(rng)?
        .iter()
        .map(|(s, w)| {
            let j = symplectic_form(s.nrows() / 2);
            max_abs(&(&w.map.lambda * &j * w.map.lambda.transpose() - &j))
        })
        .collect())
}

fn trace_identity(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    let mut out = Vec::new();
    for (s, w) in williamson_cases(rng)? {
        for k in 1..=3 {
            out.push(robertson::transform::trace_identity_residual(&s, &w, k)?);
        }
    }
    Ok(out)
}

fn trace_ur(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    let mut out = Vec::new();
    for (dims, d) in [(vec![14], 16), (vec![6, 6], 8)] {
        let state = padded_state(rng, &dims, 2)?;
        let pair = uncertainty_pair(&canonical_observables(dims.len(), d)?, &state)?;
        let r = inequality_report(&pair, &[1, 2, 3], None)?;
        out.extend(r.trace_ur.iter().map(|t| -t.gap / t.rhs));
    }
    Ok(out)
}

fn canonical_pair_products(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    let mut out = Vec::new();
    for (dims, d) in [(vec![14], 16), (vec![6, 6], 8)] {
        let state = padded_state(rng, &dims, 2)?;
        let pair = uncertainty_pair(&canonical_observables(dims.len(), d)?, &state)?;
        let w = williamson_diagonalize(&pair.sigma)?;
        out.extend(w.pair_products.iter().map(|p| 0.25 - p));
    }
    Ok(out)
}

fn qdeformed_positivity(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    let q = rng.random_range(0.05..1.5);
    let dim = 20;
    let o = build_qdeformed(q, dim)?;
    let comm = (&(&o.a * &o.adag) - &(&o.adag * &o.a)).into_entries();
    // the last level is cut by the truncation
    Ok((0..dim - 1).map(|i| -comm[(i, i)].re).collect())
}

fn minimization_defect(s: &RisState, ops: &[OperatorMatrix]) -> robertson::Result<f64> {
    if !s.converged {
        return Err(robertson::Error::Truncation { tail_mass: s.tail_mass.max(s.residual), dim: s.dim() });
    }
    let pair = uncertainty_pair(ops, &s.state)?;
    Ok((pair.det_sigma() - pair.det_c()).abs() / pair.det_c().abs().max(1.0))
}

fn ris_su11(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    let ks = ["1/4", "1/2", "3/4", "1", "3/2"];
    let k: BargmannIndex = ks[rng.random_range(0..ks.len())].parse()?;
    let u = C64::from_polar(1.0, rng.random_range(0.0..6.28));
    let v = C64::from_polar(rng.random_range(0.0..0.8), rng.random_range(0.0..6.28));
    let z = C64::new(rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5));
    let zero = C64::new(0.0, 0.0);
    let s = su11_ris(u, v, zero, z, k, 64)?;
    Ok(vec![minimization_defect(&s, &su11_observables(u, v, zero, k, s.dim())?)?])
}

fn ris_su2(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    let beta = [0; 3].map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0));
    let twice_j = rng.random_range(1..=6u32);
    let ops = su2_observables(beta, twice_j)?;
    su2_ris(beta, twice_j)?.iter().map(|s| minimization_defect(s, &ops)).collect()
}

fn ris_canonical(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    let r: f64 = rng.random_range(0.0..0.8);
    let u = DMatrix::from_element(1, 1, C64::new(r.cosh(), 0.0));
    let v = DMatrix::from_element(1, 1, C64::from_polar(r.sinh(), rng.random_range(0.0..6.28)));
    let alpha = DVector::from_element(1, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let s = grow(64, truncation_cap(1), |d| canonical_ris(&u, &v, &alpha, d))?;
    Ok(vec![minimization_defect(&s, &canonical_observables(1, s.dim())?)?])
}

fn ris_squared(rng: &mut ChaCha8Rng, _: &Ctx) -> Case {
    let x: f64 = rng.random_range(0.0..1.5);
    let u = C64::new((1.0 + x * x).sqrt(), 0.0);
    let v = C64::new(-x, 0.0);
    let z = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let parity = if rng.random() { Parity::Even } else { Parity::Odd };
    let s = squared_amplitude_ris(u, v, z, parity, 64)?;
    Ok(vec![minimization_defect(&s, &squared_amplitude_observables(s.dim())?)?])
}

const PROPERTIES: &[Property] = &[
    Property { name: "robertson_gap", tolerance: 1e-10, case: robertson_gap },
    Property { name: "product_gap", tolerance: 1e-10, case: product_gap },
    Property { name: "odd_det_c", tolerance: 1e-12, case: odd_det_c },
    Property { name: "sigma_psd", tolerance: 1e-12, case: sigma_psd },
    Property { name: "detc_factorization", tolerance: 1e-9, case: detc_factorization },
    Property { name: "congruence_invariants", tolerance: 1e-9, case: congruence_invariants },
    Property { name: "williamson_diagonal", tolerance: 1e-9, case: williamson_diagonal },
    Property { name: "williamson_symplectic", tolerance: 1e-10, case: williamson_symplectic },
    Property { name: "trace_identity", tolerance: 1e-8, case: trace_identity },
    Property { name: "trace_ur", tolerance: 1e-8, case: trace_ur },
    Property { name: "canonical_pair_products", tolerance: 1e-9, case: canonical_pair_products },
    Property { name: "qdeformed_positivity", tolerance: 0.0, case: qdeformed_positivity },
    Property { name: "ris_su11", tolerance: 1e-8, case: ris_su11 },
    Property { name: "ris_su2", tolerance: 1e-8, case: ris_su2 },
    Property { name: "ris_canonical", tolerance: 1e-8, case: ris_canonical },
    Property { name: "ris_squared", tolerance: 1e-8, case: ris_squared },
];

fn check(p: &Property, seeds: &[u64], ctx: &Ctx) -> PropertyResult {
    let mut worst = f64::NEG_INFINITY;
    let mut cases = 0;
    let mut error = None;
    for (i, &seed) in seeds.iter().enumerate() {
        // distinct streams per property
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(i as u64 + 1)));
        rng.set_stream(p.name.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(b as u64)));
        match (p.case)(&mut rng, ctx) {
            Ok(defects) => {
                cases += defects.len();
                worst = defects.into_iter().fold(worst, f64::max);
            }
            Err(e) => {
                error = Some(format!("seed {seed}: {e}"));
                break;
            }
        }
    }
    let pass = error.is_none() && worst <= p.tolerance;
    PropertyResult { name: p.name.to_string(), cases, worst, tolerance: p.tolerance, pass, error }
}

pub fn run(a: &VerifyArgs) -> CliResult<()> {
    let seeds = match &a.seeds {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
            parse_manifest(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
        }
        None => default_seeds(),
    };
    if seeds.is_empty() {
        return Err(CliError::Usage("seed manifest is empty".into()));
    }
    let ctx = Ctx { perturb: a.perturb_sigma.unwrap_or(0.0) };
    let properties: Vec<PropertyResult> = PROPERTIES.iter().map(|p| check(p, &seeds, &ctx)).collect();
    let failing: Vec<String> = properties.iter().filter(|p| !p.pass).map(|p| p.name.clone()).collect();
    let summary = Summary { schema: SCHEMA, command: "verify", seeds, pass: failing.is_empty(), properties };
    Sink::new(a.output.clone()).write_json(&summary)?;
    if !failing.is_empty() {
        return Err(CliError::Verify(failing.join(", ")));
    }
    Ok(())
}

