use crate::error::{usage, CliError, CliResult};
use crate::output::{csv_text, num, rows, Sink, SCHEMA};
use crate::parse;
use crate::ris_cmd::{name, Format};
use clap::{Args, ValueEnum};
use nalgebra::DMatrix;
use robertson::linalg::symplectic_form;
use robertson::moments::{trace_i_sigma_j, UncertaintyPair};
use robertson::transform::{
    invariant_suite, orthogonal_diagonalize, transform_sigma, williamson_diagonalize, InvariantReport,
    MapClass,
};
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Williamson form; rows ordered (p_1..p_N, q_1..q_N).
    Symplectic,
    /// Eigenvector rotation.
    Orthogonal,
}

#[derive(Debug, Args)]
pub struct DiagonalizeArgs {
    /// CSV matrix, one row per line.
    #[arg(long)]
    pub matrix: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Symplectic)]
    pub mode: Mode,
    #[arg(long, value_delimiter = ',', value_parser = clap::value_parser!(u32).range(1..), default_value = "1,2,3")]
    pub trace_orders: Vec<u32>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Serialize)]
struct TraceRow {
    k: u32,
    /// Tr(i sigma J)^{2k}
    lhs: f64,
    /// 2 sum_j (d_j d_{N+j})^k
    williamson: f64,
    /// N / 2^{2k-1}
    rhs: f64,
    gap: f64,
}

#[derive(Serialize)]
struct SymplecticPart {
    diagonal: Vec<f64>,
    symplectic_eigenvalues: Vec<f64>,
    pair_products: Vec<f64>,
    trace_ur: Vec<TraceRow>,
}

#[derive(Serialize)]
struct Report {
    schema: u32,
    command: &'static str,
    mode: String,
    class: MapClass,
    lambda: Vec<Vec<f64>>,
    sigma_prime: Vec<Vec<f64>>,
    max_offdiagonal: f64,
    invariants: InvariantReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    symplectic: Option<SymplecticPart>,
}

fn max_offdiagonal(m: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    worst
}

pub fn run(a: &DiagonalizeArgs) -> CliResult<()> {
    let sigma = parse::read_matrix(&a.matrix)?;
    let n = sigma.nrows();
    let (map, pair, symplectic) = match a.mode {
        Mode::Symplectic => {
            if n % 2 == 1 {
                return usage(format!("symplectic mode needs an even order, got {n}"));
            }
            let w = williamson_diagonalize(&sigma)?;
            let half = n / 2;
            let mut labels: Vec<String> = (1..=half).map(|j| format!("p{j}")).collect();
            labels.extend((1..=half).map(|j| format!("q{j}")));
            let pair = UncertaintyPair::new((&sigma + sigma.transpose()) * 0.5, symplectic_form(half) * -0.5, labels)?;
            let trace_ur = a
                .trace_orders
                .iter()
                .map(|&k| {
                    let lhs = trace_i_sigma_j(&pair.sigma, k)?;
                    let rhs = half as f64 / 2f64.powi(2 * k as i32 - 1);
                    Ok(TraceRow { k, lhs, williamson: w.trace_identity(k), rhs, gap: lhs - rhs })
                })
                .collect::<CliResult<Vec<_>>>()?;
            let part = SymplecticPart {
                diagonal: w.diagonal.iter().copied().collect(),
                symplectic_eigenvalues: w.symplectic_eigenvalues().iter().copied().collect(),
                pair_products: w.pair_products.iter().copied().collect(),
                trace_ur,
            };
            (w.map, pair, Some(part))
        }
        Mode::Orthogonal => {
            let labels = (1..=n).map(|j| format!("X{j}")).collect();
            let pair = UncertaintyPair::new(sigma.clone(), DMatrix::zeros(n, n), labels)?;
            let (map, _) = orthogonal_diagonalize(&pair)?;
            (map, pair, None)
        }
    };
    let out = transform_sigma(&map, &pair)?;
    let invariants = invariant_suite(&map, &pair, &a.trace_orders)?;
    let pass = invariants.pass;
    let report = Report {
        schema: SCHEMA,
        command: "diagonalize",
        mode: name(a.mode),
        class: map.class,
        lambda: rows(&map.lambda),
        max_offdiagonal: max_offdiagonal(&out.sigma),
        sigma_prime: rows(&out.sigma),
        invariants,
        symplectic,
    };
    let sink = Sink::new(a.output.clone());
    match a.format {
        Format::Json => sink.write_json(&report)?,
        Format::Csv => {
            // bare rows, readable back through --matrix
            let records: Vec<Vec<String>> = report.lambda.iter().map(|r| r.iter().map(|&x| num(x)).collect()).collect();
            sink.write_bytes(&csv_text(&[], &records)?)?;
        }
    }
    if !pass {
        return Err(CliError::Verify(format!("invariant drift {:e}", report.invariants.max_drift)));
    }
    Ok(())
}
