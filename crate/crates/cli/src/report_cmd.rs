use crate::error::{usage, CliError, CliResult};
use crate::output::{rows, ObservableReport, Sink, SCHEMA};
use crate::parse;
use crate::ris_cmd::{bargmann, name};
use clap::{Args, ValueEnum};
use nalgebra::DVector;
use robertson::algebra::{
    build_power_quadratures, build_spin, build_su11, qdeformed_quadratures, BargmannIndex, BasisSpec, ModeSystem,
    OperatorMatrix, QuantumState,
};
use robertson::moments::uncertainty_pair_labeled;
use robertson::transform::{c0_squared, spin_decorrelate, williamson_diagonalize};
use robertson_oracle::sampler::{random_state, Sample, StateKind};
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::FRAC_1_SQRT_2;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Observables {
    /// (p_1..p_N, q_1..q_N)
    Canonical,
    /// Power-k quadratures; needs --power.
    Power,
    /// q-deformed quadratures; needs --q.
    Qdeformed,
    /// (K1, K2) on an su(1,1) discrete series; needs --k.
    Su11,
    /// (J1, J2, J3); needs --j.
    Spin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RandomKind {
    Pure,
    Mixed,
    Gaussian,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long, value_enum, default_value_t = Observables::Canonical)]
    pub observables: Observables,
    /// Pure-state amplitudes, one `re,im` per line.
    #[arg(long, conflicts_with = "random")]
    pub state: Option<PathBuf>,
    /// Draw a seeded random state instead of reading one.
    #[arg(long, value_enum, requires = "seed")]
    pub random: Option<RandomKind>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Per-mode dimension of random states.
    #[arg(long, default_value_t = 24)]
    pub dim: usize,
    #[arg(long, default_value_t = 1)]
    pub modes: usize,
    #[arg(long)]
    pub power: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long, value_parser = bargmann)]
    pub k: Option<BargmannIndex>,
    #[arg(long, value_parser = parse::twice_j)]
    pub j: Option<u32>,
    /// Orders of the trace relations; defaults to 1,2,3 for canonical observables.
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u32).range(1..))]
    pub trace_orders: Option<Vec<u32>>,
    #[arg(long, default_value_t = 1e-8, value_parser = parse::tolerance)]
    pub tol: f64,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct WilliamsonSummary {
    symplectic_eigenvalues: Vec<f64>,
    pair_products: Vec<f64>,
    c0_squared: f64,
}

#[derive(Serialize)]
struct SpinSummary {
    rotation: Vec<Vec<f64>>,
    sigma_prime: Vec<Vec<f64>>,
    commutator_residual: f64,
}

#[derive(Serialize)]
struct Report {
    schema: u32,
    command: &'static str,
    observables: String,
    state: Value,
    report: ObservableReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    williamson: Option<WilliamsonSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    spin_rotation: Option<SpinSummary>,
}

struct Setup {
    system: ModeSystem,
    ops: Vec<OperatorMatrix>,
    labels: Vec<String>,
    references: Vec<Option<f64>>,
}

fn labelled_pair(x: OperatorMatrix, y: OperatorMatrix, r: Option<f64>) -> (Vec<OperatorMatrix>, Vec<String>, Vec<Option<f64>>) {
    (vec![x, y], vec!["X".into(), "Y".into()], vec![r, r])
}

/// Per-mode dimension d with d^modes = len.
fn mode_dim(len: usize, modes: usize) -> CliResult<usize> {
    let d = (len as f64).powf(1.0 / modes as f64).round() as usize;
    if d.checked_pow(modes as u32) != Some(len) {
        return usage(format!("{len} amplitudes do not form a product basis of {modes} modes"));
    }
    Ok(d)
}

fn setup(a: &ReportArgs, dim: usize) -> CliResult<Setup> {
    let single_fock = || ModeSystem::fock(1, dim);
    let (system, (ops, labels, references)) = match a.observables {
        Observables::Canonical => {
            let ops = robertson::algebra::canonical_quadratures(a.modes, dim)?;
            let mut labels: Vec<String> = (1..=a.modes).map(|j| format!("p{j}")).collect();
            labels.extend((1..=a.modes).map(|j| format!("q{j}")));
            (ModeSystem::fock(a.modes, dim)?, (ops, labels, vec![Some(FRAC_1_SQRT_2); 2 * a.modes]))
        }
        Observables::Power => {
            let k = a.power.ok_or_else(|| CliError::Usage("--power is required for power observables".into()))?;
            let (x, y) = build_power_quadratures(k, dim)?;
            (single_fock()?, labelled_pair(x, y, None))
        }
        Observables::Qdeformed => {
            let q = a.q.ok_or_else(|| CliError::Usage("--q is required for qdeformed observables".into()))?;
            let (x, y) = qdeformed_quadratures(q, dim)?;
            (single_fock()?, labelled_pair(x, y, None))
        }
        Observables::Su11 => {
            let k = a.k.ok_or_else(|| CliError::Usage("--k is required for su11 observables".into()))?;
            let s = build_su11(k, dim)?;
            let r = Some((k.value() / 2.0).sqrt());
            let (ops, _, refs) = labelled_pair(s.k1, s.k2, r);
            (ModeSystem::single(BasisSpec::Su11 { k, dim })?, (ops, vec!["K1".into(), "K2".into()], refs))
        }
        Observables::Spin => {
            let twice_j = a.j.ok_or_else(|| CliError::Usage("--j is required for spin observables".into()))?;
            let s = build_spin(twice_j)?;
            let r = Some((twice_j as f64 / 4.0).sqrt());
            (
                ModeSystem::single(BasisSpec::Spin { twice_j })?,
                (vec![s.j1, s.j2, s.j3], vec!["J1".into(), "J2".into(), "J3".into()], vec![r, r, None]),
            )
        }
    };
    Ok(Setup { system, ops, labels, references })
}

pub fn run(a: &ReportArgs) -> CliResult<()> {
    if a.modes == 0 {
        return usage("--modes must be at least 1");
    }
    let multimode = a.observables == Observables::Canonical;
    if !multimode && a.modes != 1 {
        return usage("--modes applies to canonical observables only");
    }
    let modes = if multimode { a.modes } else { 1 };
    let (amplitudes, state_info) = match (&a.state, a.random) {
        (Some(path), _) => {
            let amps = parse::read_amplitudes(path)?;
            let info = json!({"source": path.display().to_string(), "dim": amps.len()});
            (Some(amps), info)
        }
        (None, Some(kind)) => {
            let info = json!({"source": "random", "kind": name(kind), "seed": a.seed});
            (None, info)
        }
        (None, None) => return usage("give --state FILE or --random KIND --seed N"),
    };
    let dim = match (&amplitudes, a.observables, a.j) {
        (_, Observables::Spin, Some(tj)) => tj as usize + 1,
        (Some(v), _, _) => mode_dim(v.len(), modes)?,
        (None, _, _) => a.dim,
    };
    let s = setup(a, dim)?;
    let state = match amplitudes {
        Some(v) => QuantumState::pure_normalized(DVector::from_vec(v), s.system.clone())?,
        None => {
            if dim < 2 {
                return usage("--dim must be at least 2");
            }
            let kind = match a.random.expect("random kind") {
                RandomKind::Pure => StateKind::Pure,
                RandomKind::Mixed => StateKind::Mixed,
                RandomKind::Gaussian => StateKind::GaussianLike,
            };
            match random_state(&vec![dim; modes], kind, a.seed.expect("seed")) {
                Sample::Pure(v) => QuantumState::pure_normalized(v, s.system.clone())?,
                Sample::Mixed(rho) => QuantumState::mixed(rho, s.system.clone())?,
            }
        }
    };
    let pair = uncertainty_pair_labeled(&s.ops, &state, s.labels.clone())?;
    let even = pair.n() % 2 == 0;
    let williamson = if even { williamson_diagonalize(&pair.sigma).ok() } else { None };
    let c0 = match &williamson {
        Some(w) if !multimode => Some(c0_squared(&pair, w)?),
        _ => None,
    };
    let orders = match (&a.trace_orders, multimode) {
        (Some(o), _) => o.clone(),
        (None, true) => vec![1, 2, 3],
        (None, false) => vec![],
    };
    if !orders.is_empty() && !even {
        return usage("trace relations need an even number of observables");
    }
    if !orders.is_empty() && !multimode && c0.is_none() {
        return usage("trace relations on non-canonical observables need a positive-definite sigma");
    }
    let report = ObservableReport::with_c0(&pair, a.tol, &orders, &s.references, c0)?;
    let williamson = match williamson {
        Some(w) => Some(WilliamsonSummary {
            symplectic_eigenvalues: w.symplectic_eigenvalues().iter().copied().collect(),
            pair_products: w.pair_products.iter().copied().collect(),
            c0_squared: c0_squared(&pair, &w)?,
        }),
        None => None,
    };
    let spin_rotation = if a.observables == Observables::Spin {
        let d = spin_decorrelate(&build_spin(a.j.expect("spin"))?, &state)?;
        Some(SpinSummary {
            rotation: rows(&d.rotation.lambda),
            sigma_prime: rows(&d.pair.sigma),
            commutator_residual: d.commutator_residual,
        })
    } else {
        None
    };
    let mut state_info = state_info;
    state_info["tail_mass"] = json!(state.tail_mass());
    state_info["mode_dim"] = json!(dim);
    let holds = report.inequalities.holds();
    let out = Report {
        schema: SCHEMA,
        command: "report",
        observables: name(a.observables),
        state: state_info,
        report,
        williamson,
        spin_rotation,
    };
    Sink::new(a.output.clone()).write_json(&out)?;
    if !holds {
        return Err(CliError::Verify("an uncertainty relation is violated".into()));
    }
    Ok(())
}
