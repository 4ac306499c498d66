use crate::error::{usage, CliError, CliResult};
use crate::output::{csv_text, num, ObservableReport, Sink, SCHEMA};
use crate::parse;
use clap::{Args, ValueEnum};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use robertson::algebra::{build_spn_generators, build_su11, BargmannIndex, OperatorMatrix};
use robertson::moments::uncertainty_pair_labeled;
use robertson::ris::{
    canonical_observables, canonical_ris, even_odd_cs, squared_amplitude_observables, squared_amplitude_ris,
    squeezed_fock, su11_group_cs, su11_observables, su11_ris, su2_observables, su2_ris, Parity, RisState,
};
use serde::Serialize;
use serde_json::{json, Value};
use std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Su11,
    Su2,
    Canonical,
    Squared,
    EvenOdd,
    SqueezedFock,
    GroupCs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParityArg {
    Even,
    Odd,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Self {
        match p {
            ParityArg::Even => Parity::Even,
            ParityArg::Odd => Parity::Odd,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

/// The value's command-line spelling.
pub fn name<T: ValueEnum>(v: T) -> String {
    v.to_possible_value().expect("no skipped variants").get_name().to_string()
}

pub fn bargmann(s: &str) -> Result<BargmannIndex, String> {
    s.parse::<BargmannIndex>().map_err(|e| e.to_string())
}

#[derive(Debug, Args)]
pub struct RisArgs {
    #[arg(long, value_enum)]
    pub family: Family,
    /// Bargmann index (su11, group-cs), e.g. 1/4.
    #[arg(long, value_parser = bargmann)]
    pub k: Option<BargmannIndex>,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub u: Option<C64>,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub v: Option<C64>,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub w: Option<C64>,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub z: Option<C64>,
    /// Spin j (su2), e.g. 1 or 3/2.
    #[arg(long, value_parser = parse::twice_j)]
    pub j: Option<u32>,
    /// Real parts of (beta1, beta2, beta3).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta: Option<Vec<f64>>,
    /// Imaginary parts of (beta1, beta2, beta3).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub beta_im: Option<Vec<f64>>,
    /// Number of modes (canonical, squeezed-fock).
    #[arg(long = "N", default_value_t = 1)]
    pub modes: usize,
    /// Squeeze strength.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub r: f64,
    /// Squeeze phase.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    /// Eigenvalue per mode (canonical) or coherent amplitude (even-odd);
    /// repeat per mode, a single value is used for every mode.
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub alpha: Vec<C64>,
    #[arg(long, value_enum)]
    pub parity: Option<ParityArg>,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub tau: Option<C64>,
    /// Fock occupation per mode, comma-separated (squeezed-fock).
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    /// Starting truncation; the solvers enlarge it when needed.
    #[arg(long)]
    pub truncation: Option<usize>,
    /// Relative tolerance of the det sigma = det C check.
    #[arg(long, default_value_t = 1e-8, value_parser = parse::tolerance)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<std::path::PathBuf>,
}

fn need<T: Copy>(v: Option<T>, name: &str, family: &str) -> CliResult<T> {
    v.ok_or_else(|| CliError::Usage(format!("--{name} is required for --family {family}")))
}

#[derive(Serialize)]
struct StateEntry {
    index: usize,
    eigenvalues: Vec<C64>,
    dim: usize,
    residual: f64,
    tail_mass: f64,
    converged: bool,
    hermitian_combination: bool,
    reports: Vec<ObservableReport>,
}

#[derive(Serialize)]
struct RisReport {
    schema: u32,
    command: &'static str,
    family: String,
    spec: Value,
    converged: bool,
    minimized: bool,
    states: Vec<StateEntry>,
}

/// An observable set with labels and coherent-state reference uncertainties.
struct ObservableSet {
    ops: Vec<OperatorMatrix>,
    labels: Vec<String>,
    references: Vec<Option<f64>>,
    trace_orders: Vec<u32>,
}

fn k_pair_set(ops: Vec<OperatorMatrix>, k: f64) -> ObservableSet {
    let r = (k / 2.0).sqrt();
    let n = ops.len();
    let labels: Vec<String> = ["K1", "K2", "K3"][..n].iter().map(|s| s.to_string()).collect();
    let references = (0..n).map(|i| if i < 2 { Some(r) } else { None }).collect();
    ObservableSet { ops, labels, references, trace_orders: vec![] }
}

fn canonical_set(modes: usize, dim: usize) -> CliResult<ObservableSet> {
    let ops = canonical_observables(modes, dim)?;
    let mut labels: Vec<String> = (1..=modes).map(|j| format!("p{j}")).collect();
    labels.extend((1..=modes).map(|j| format!("q{j}")));
    Ok(ObservableSet { ops, labels, references: vec![Some(FRAC_1_SQRT_2); 2 * modes], trace_orders: vec![1, 2, 3] })
}

fn sp_set(modes: usize, dim: usize) -> CliResult<ObservableSet> {
    let g = build_spn_generators(modes, dim)?;
    let mut labels = Vec::new();
    for ((j, k), _) in &g.lowering {
        labels.push(format!("X{}{}", j + 1, k + 1));
        labels.push(format!("Y{}{}", j + 1, k + 1));
    }
    for ((j, k), _) in &g.cartan {
        labels.push(format!("K3_{}{}", j + 1, k + 1));
    }
    let ops = g.hermitian_quadratures();
    let references = vec![None; ops.len()];
    Ok(ObservableSet { ops, labels, references, trace_orders: vec![] })
}

fn entry(index: usize, s: &RisState, sets: &[ObservableSet], tol: f64) -> CliResult<StateEntry> {
    let mut reports = Vec::new();
    for set in sets {
        let pair = uncertainty_pair_labeled(&set.ops, &s.state, set.labels.clone())?;
        reports.push(ObservableReport::new(&pair, tol, &set.trace_orders, &set.references)?);
    }
    Ok(StateEntry {
        index,
        eigenvalues: s.eigenvalues.clone(),
        dim: s.dim(),
        residual: s.residual,
        tail_mass: s.tail_mass,
        converged: s.converged,
        hermitian_combination: s.hermitian_combination,
        reports,
    })
}

/// Largest per-mode truncation tried for fixed-box constructions.
pub fn truncation_cap(modes: usize) -> usize {
    match modes {
        1 => 1024,
        2 => 48,
        _ => 12,
    }
}

/// Runs a fixed-truncation construction, doubling the per-mode dimension
/// until the state converges.
pub fn grow(start: usize, cap: usize, build: impl Fn(usize) -> robertson::Result<RisState>) -> robertson::Result<RisState> {
    let mut dim = start;
    loop {
        let tail_mass = match build(dim) {
            Ok(s) if s.converged => return Ok(s),
            Ok(s) => s.tail_mass.max(s.residual),
            Err(robertson::Error::Truncation { tail_mass, .. }) => tail_mass,
            Err(e) => return Err(e),
        };
        if dim * 2 > cap {
            return Err(robertson::Error::Truncation { tail_mass, dim });
        }
        dim *= 2;
    }
}

fn modes_vector(values: &[C64], modes: usize, name: &str) -> CliResult<DVector<C64>> {
    match values.len() {
        0 => Ok(DVector::zeros(modes)),
        1 => Ok(DVector::from_element(modes, values[0])),
        n if n == modes => Ok(DVector::from_column_slice(values)),
        n => usage(format!("--{name} given {n} times for {modes} modes")),
    }
}

fn build(a: &RisArgs) -> CliResult<(Value, Vec<StateEntry>)> {
    let fam = name(a.family);
    let zero = C64::new(0.0, 0.0);
    match a.family {
        Family::Su11 => {
            let k = need(a.k, "k", "su11")?;
            let u = need(a.u, "u", "su11")?;
            let v = need(a.v, "v", "su11")?;
            let z = need(a.z, "z", "su11")?;
            let w = a.w.unwrap_or(zero);
            let s = su11_ris(u, v, w, z, k, a.truncation.unwrap_or(64))?;
            let ops = su11_observables(u, v, w, k, s.dim())?;
            let set = if ops.len() == 3 || w.norm() == 0.0 {
                k_pair_set(ops, k.value())
            } else {
                ObservableSet { ops, labels: vec!["X'".into(), "Y'".into()], references: vec![None, None], trace_orders: vec![] }
            };
            let spec = json!({"k": k.to_string(), "u": u, "v": v, "w": w, "z": z});
            Ok((spec, vec![entry(0, &s, &[set], a.tol)?]))
        }
        Family::Su2 => {
            let twice_j = need(a.j, "j", "su2")?;
            let re = a.beta.clone().ok_or_else(|| CliError::Usage("--beta is required for --family su2".into()))?;
            let im = a.beta_im.clone().unwrap_or_else(|| vec![0.0; 3]);
            if re.len() != 3 || im.len() != 3 {
                return usage("--beta and --beta-im take three comma-separated values");
            }
            let beta = [C64::new(re[0], im[0]), C64::new(re[1], im[1]), C64::new(re[2], im[2])];
            let states = su2_ris(beta, twice_j)?;
            let ops = su2_observables(beta, twice_j)?;
            let j = twice_j as f64 / 2.0;
            let set = if ops.len() == 3 {
                let r = (j / 2.0).sqrt();
                ObservableSet {
                    ops,
                    labels: vec!["J1".into(), "J2".into(), "J3".into()],
                    references: vec![Some(r), Some(r), None],
                    trace_orders: vec![],
                }
            } else {
                ObservableSet { ops, labels: vec!["X'".into(), "Y'".into()], references: vec![None, None], trace_orders: vec![] }
            };
            let entries = states
                .iter()
                .enumerate()
                .map(|(i, s)| entry(i, s, std::slice::from_ref(&set), a.tol))
                .collect::<CliResult<Vec<_>>>()?;
            Ok((json!({"j": j, "beta": beta}), entries))
        }
        Family::Canonical => {
            let n = a.modes;
            if n == 0 {
                return usage("--N must be at least 1");
            }
            let u = DMatrix::from_diagonal_element(n, n, C64::new(a.r.cosh(), 0.0));
            let v = DMatrix::from_diagonal_element(n, n, C64::from_polar(a.r.sinh(), a.theta));
            let alpha = modes_vector(&a.alpha, n, "alpha")?;
            let start = a.truncation.unwrap_or(if n == 1 { 64 } else { 16 });
            let s = grow(start, truncation_cap(n).max(start), |d| canonical_ris(&u, &v, &alpha, d))?;
            let dim = s.state.system().modes()[0].dim();
            let set = canonical_set(n, dim)?;
            let spec = json!({"N": n, "r": a.r, "theta": a.theta, "alpha": alpha.as_slice(), "dim": dim});
            Ok((spec, vec![entry(0, &s, &[set], a.tol)?]))
        }
        Family::Squared | Family::EvenOdd => {
            let parity: Parity = need(a.parity, "parity", &fam)?.into();
            let dim = a.truncation.unwrap_or(64);
            let (s, spec) = if a.family == Family::Squared {
                let u = need(a.u, "u", "squared")?;
                let v = need(a.v, "v", "squared")?;
                let z = need(a.z, "z", "squared")?;
                (squared_amplitude_ris(u, v, z, parity, dim)?, json!({"u": u, "v": v, "z": z, "parity": parity}))
            } else {
                let alpha = *a.alpha.first().ok_or_else(|| CliError::Usage("--alpha is required for --family even-odd".into()))?;
                (even_odd_cs(alpha, parity, dim)?, json!({"alpha": alpha, "parity": parity}))
            };
            let set = k_pair_set(squared_amplitude_observables(s.dim())?, parity.bargmann_index().value());
            let canon = canonical_set(1, s.dim())?;
            Ok((spec, vec![entry(0, &s, &[set, canon], a.tol)?]))
        }
        Family::SqueezedFock => {
            let n = a.modes;
            let occ = if a.n.is_empty() { vec![0; n] } else { a.n.clone() };
            if occ.len() != n {
                return usage(format!("--n lists {} occupations for {n} modes", occ.len()));
            }
            let start = a.truncation.unwrap_or(if n == 1 { 64 } else { 16 });
            // H = sum_j (r/2)(p_j q_j + q_j p_j)
            let mut b = DMatrix::zeros(2 * n, 2 * n);
            for j in 0..n {
                b[(j, n + j)] = C64::new(a.r / 2.0, 0.0);
                b[(n + j, j)] = C64::new(a.r / 2.0, 0.0);
            }
            let s = grow(start, truncation_cap(n).max(start), |d| squeezed_fock(&b, &occ, d))?;
            let dim = s.state.system().modes()[0].dim();
            let sets = [sp_set(n, dim)?, canonical_set(n, dim)?];
            Ok((json!({"N": n, "r": a.r, "n": occ, "dim": dim}), vec![entry(0, &s, &sets, a.tol)?]))
        }
        Family::GroupCs => {
            let k = need(a.k, "k", "group-cs")?;
            let tau = need(a.tau, "tau", "group-cs")?;
            let s = su11_group_cs(k, tau, a.truncation.unwrap_or(64))?;
            let sys = build_su11(k, s.dim())?;
            let set = k_pair_set(vec![sys.k1, sys.k2], k.value());
            Ok((json!({"k": k.to_string(), "tau": tau}), vec![entry(0, &s, &[set], a.tol)?]))
        }
    }
}

pub fn run(a: &RisArgs) -> CliResult<()> {
    let (spec, states) = build(a)?;
    let converged = states.iter().all(|s| s.converged);
    let minimized = states.iter().all(|s| s.reports[0].minimized);
    let report = RisReport {
        schema: SCHEMA,
        command: "ris",
        family: name(a.family),
        spec,
        converged,
        minimized,
        states,
    };
    let sink = Sink::new(a.output.clone());
    match a.format {
        Format::Json => sink.write_json(&report)?,
        Format::Csv => {
            let header: Vec<String> = [
                "index", "eigenvalue_re", "eigenvalue_im", "dim", "residual", "tail_mass", "converged", "det_sigma",
                "det_c", "robertson_gap", "minimized",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect();
            let records: Vec<Vec<String>> = report
                .states
                .iter()
                .map(|s| {
                    let ev = s.eigenvalues.first().copied().unwrap_or_default();
                    let r = &s.reports[0];
                    vec![
                        s.index.to_string(),
                        num(ev.re),
                        num(ev.im),
                        s.dim.to_string(),
                        num(s.residual),
                        num(s.tail_mass),
                        s.converged.to_string(),
                        num(r.inequalities.det_sigma),
                        num(r.inequalities.det_c),
                        num(r.inequalities.robertson_gap),
                        r.minimized.to_string(),
                    ]
                })
                .collect();
            sink.write_bytes(&csv_text(&header, &records)?)?;
        }
    }
    if !converged {
        return Err(CliError::Verify("state did not converge".into()));
    }
    if !minimized {
        return Err(CliError::Verify("det sigma = det C does not hold".into()));
    }
    Ok(())
}
