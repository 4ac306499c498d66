use crate::error::{usage, CliError, CliResult};
use crate::output::{csv_text, num, Sink, SCHEMA};
use crate::parse;
use crate::ris_cmd::{bargmann, name, Format, ParityArg};
use clap::{Args, ValueEnum};
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use robertson::algebra::{build_su11, BargmannIndex, OperatorMatrix};
use robertson::moments::{robertson_minimized, uncertainty_pair, UncertaintyPair};
use robertson::ris::{canonical_observables, squared_amplitude_observables, squared_amplitude_ris, su11_group_cs, su11_ris, Parity, RisState};
use serde::Serialize;
use std::f64::consts::FRAC_1_SQRT_2;
use std::path::PathBuf;

pub const MAX_POINTS: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepFamily {
    /// Eigenstates of sqrt(1+x^2) K- - x K+.
    Su11,
    /// The same combination with K- = a^2/2; adds the canonical pair.
    Squared,
    /// Group coherent states with tau = x e^{i phase}.
    GroupCs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_enum)]
    pub family: SweepFamily,
    #[arg(long, value_parser = bargmann)]
    pub k: Option<BargmannIndex>,
    #[arg(long, value_parser = parse::complex, allow_hyphen_values = true)]
    pub z: Option<C64>,
    #[arg(long, value_enum)]
    pub parity: Option<ParityArg>,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub phase: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x_from: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub x_to: f64,
    #[arg(long)]
    pub x_step: f64,
    #[arg(long, default_value_t = 64)]
    pub truncation: usize,
    #[arg(long, default_value_t = 1e-8, value_parser = parse::tolerance)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(usize),
    Real(f64),
    Flag(bool),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) => num(*x),
            Cell::Flag(b) => b.to_string(),
        }
    }
}

#[derive(Serialize)]
struct SweepReport {
    schema: u32,
    command: &'static str,
    family: String,
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

/// Grid points from..=to in steps of `step`.
pub fn grid(from: f64, to: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0) || !from.is_finite() || !to.is_finite() || to < from {
        return usage(format!("bad grid: from {from}, to {to}, step {step}"));
    }
    let count = ((to - from) / step + 1e-9).floor() + 1.0;
    if count > MAX_POINTS as f64 {
        return usage(format!("grid has {count} points, limit is {MAX_POINTS}"));
    }
    Ok((0..count as usize).map(|i| from + i as f64 * step).collect())
}

/// Thread count from ROBERTSON_THREADS, if set.
pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var("ROBERTSON_THREADS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => usage(format!("ROBERTSON_THREADS must be a positive integer, got {s:?}")),
        },
        Err(_) => Ok(None),
    }
}

fn k_columns(pair: &UncertaintyPair, k: f64, tol: f64) -> Vec<Cell> {
    let reference = (k / 2.0).sqrt();
    let d2 = pair.sigma[(1, 1)].max(0.0).sqrt();
    vec![
        Cell::Real(pair.sigma[(0, 0)].max(0.0).sqrt()),
        Cell::Real(d2),
        Cell::Real(pair.sigma[(0, 0)]),
        Cell::Real(pair.sigma[(1, 1)]),
        Cell::Real(pair.sigma[(0, 1)]),
        Cell::Real(pair.det_sigma()),
        Cell::Real(pair.det_c()),
        Cell::Real(pair.det_sigma() - pair.det_c()),
        Cell::Flag(robertson_minimized(pair, tol)),
        Cell::Real(d2 / reference),
    ]
}

const K_HEADER: [&str; 10] = [
    "delta_k1", "delta_k2", "var_k1", "var_k2", "sigma12", "det_sigma", "det_c", "robertson_gap", "minimized", "ratio_k2",
];

fn header(family: SweepFamily) -> Vec<String> {
    let mut h = vec!["index", "x"];
    h.extend(K_HEADER);
    match family {
        SweepFamily::Su11 => h.push("k2_squeezed"),
        SweepFamily::Squared => h.extend(["delta_p", "delta_q", "k2_squeezed", "p_squeezed", "joint_squeezed"]),
        SweepFamily::GroupCs => h.extend(["var_k1_above_k", "var_k2_above_k"]),
    }
    h.extend(["residual", "dim"]);
    h.into_iter().map(String::from).collect()
}

fn ops_pair(ops: &[OperatorMatrix], s: &RisState) -> CliResult<UncertaintyPair> {
    Ok(uncertainty_pair(ops, &s.state)?)
}

fn point(a: &SweepArgs, index: usize, x: f64) -> CliResult<Vec<Cell>> {
    let u = C64::new((1.0 + x * x).sqrt(), 0.0);
    let v = C64::new(-x, 0.0);
    let mut row = vec![Cell::Int(index), Cell::Real(x)];
    let s = match a.family {
        SweepFamily::Su11 => {
            let k = a.k.expect("checked");
            let s = su11_ris(u, v, C64::new(0.0, 0.0), a.z.expect("checked"), k, a.truncation)?;
            let sys = build_su11(k, s.dim())?;
            let pair = ops_pair(&[sys.k1, sys.k2], &s)?;
            let cols = k_columns(&pair, k.value(), a.tol);
            let squeezed = pair.sigma[(1, 1)].sqrt() < (k.value() / 2.0).sqrt();
            row.extend(cols);
            row.push(Cell::Flag(squeezed));
            s
        }
        SweepFamily::Squared => {
            let parity: Parity = a.parity.expect("checked").into();
            let k = parity.bargmann_index().value();
            let s = squared_amplitude_ris(u, v, a.z.expect("checked"), parity, a.truncation)?;
            let pair = ops_pair(&squared_amplitude_observables(s.dim())?, &s)?;
            let canon = ops_pair(&canonical_observables(1, s.dim())?, &s)?;
            let dp = canon.sigma[(0, 0)].max(0.0).sqrt();
            let dq = canon.sigma[(1, 1)].max(0.0).sqrt();
            let k2 = pair.sigma[(1, 1)].sqrt() < (k / 2.0).sqrt();
            let p = dp < FRAC_1_SQRT_2;
            row.extend(k_columns(&pair, k, a.tol));
            row.extend([Cell::Real(dp), Cell::Real(dq), Cell::Flag(k2), Cell::Flag(p), Cell::Flag(k2 && p)]);
            s
        }
        SweepFamily::GroupCs => {
            let k = a.k.expect("checked");
            let s = su11_group_cs(k, C64::from_polar(x, a.phase), a.truncation)?;
            let sys = build_su11(k, s.dim())?;
            let pair = ops_pair(&[sys.k1, sys.k2], &s)?;
            row.extend(k_columns(&pair, k.value(), a.tol));
            row.push(Cell::Flag(pair.sigma[(0, 0)] > k.value()));
            row.push(Cell::Flag(pair.sigma[(1, 1)] > k.value()));
            s
        }
    };
    row.push(Cell::Real(s.residual));
    row.push(Cell::Int(s.dim()));
    Ok(row)
}

pub fn run(a: &SweepArgs) -> CliResult<()> {
    let xs = grid(a.x_from, a.x_to, a.x_step)?;
    match a.family {
        SweepFamily::Su11 | SweepFamily::GroupCs if a.k.is_none() => return usage("--k is required"),
        SweepFamily::Su11 | SweepFamily::Squared if a.z.is_none() => return usage("--z is required"),
        SweepFamily::Squared if a.parity.is_none() => return usage("--parity is required"),
        _ => {}
    }
    let work = || {
        xs.par_iter()
            .enumerate()
            .map(|(i, &x)| point(a, i, x).map_err(|e| (i, x, e)))
            .collect::<Result<Vec<_>, _>>()
    };
    let result = match thread_cap()? {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };
    let rows = result.map_err(|(i, x, e)| {
        eprintln!("grid point {i} (x = {x}) failed");
        e
    })?;
    let report = SweepReport {
        schema: SCHEMA,
        command: "sweep",
        family: name(a.family),
        columns: header(a.family),
        rows,
    };
    let sink = Sink::new(a.output.clone());
    match a.format {
        Format::Json => sink.write_json(&report),
        Format::Csv => {
            let records: Vec<Vec<String>> = report.rows.iter().map(|r| r.iter().map(Cell::text).collect()).collect();
            sink.write_bytes(&csv_text(&report.columns, &records)?)
        }
    }
}
