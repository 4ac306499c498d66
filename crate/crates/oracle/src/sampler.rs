//! Seeded random states on truncated product bases.
//!
//! Amplitudes are damped by exp(-kappa * total occupation) so that the
//! probability in the top 10% of each mode's levels stays far below the
//! truncation-sensitivity threshold. The nominal rate is 1/8; small bases
//! use a faster rate so the bound still holds.

use crate::closed_form::single_mode_gaussian;
use crate::C64;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateKind {
    Pure,
    Mixed,
    GaussianLike,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Pure(DVector<C64>),
    Mixed(DMatrix<C64>),
}

impl Sample {
    pub fn density(&self) -> DMatrix<C64> {
        match self {
            Sample::Pure(v) => v * v.adjoint(),
            Sample::Mixed(rho) => rho.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Sample::Pure(v) => v.len(),
            Sample::Mixed(rho) => rho.nrows(),
        }
    }
}

/// Damping rate for a mode of dimension `dim`.
pub fn damping_rate(dim: usize) -> f64 {
    let top = dim - dim.div_ceil(10);
    (1.0f64 / 8.0).max(9.5 / top.max(1) as f64)
}

fn occupations(index: usize, mode_dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; mode_dims.len()];
    let mut rem = index;
    for (slot, &d) in out.iter_mut().zip(mode_dims.iter()).rev() {
        *slot = rem % d;
        rem /= d;
    }
    out
}

fn complex_normal(rng: &mut ChaCha8Rng) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

fn damped_pure(mode_dims: &[usize], rng: &mut ChaCha8Rng) -> DVector<C64> {
    let total: usize = mode_dims.iter().product();
    let rates: Vec<f64> = mode_dims.iter().map(|&d| damping_rate(d)).collect();
    let mut v = DVector::from_fn(total, |i, _| {
        let occ = occupations(i, mode_dims);
        let weight: f64 = occ.iter().zip(&rates).map(|(&n, &r)| -r * n as f64).sum();
        complex_normal(rng) * weight.exp()
    });
    let n = v.norm();
    v /= C64::new(n, 0.0);
    v
}

fn gaussian_like(mode_dims: &[usize], rng: &mut ChaCha8Rng) -> DVector<C64> {
    let mut state = DVector::from_element(1, C64::new(1.0, 0.0));
    for &d in mode_dims {
        // Small enough that a 20-level mode keeps its top-10% tail below 1e-7.
        let r: f64 = rng.random_range(0.0..0.3);
        let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let amp: f64 = rng.random_range(0.0..0.8);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let mu = C64::new(r.cosh(), 0.0);
        let nu = C64::from_polar(r.sinh(), theta);
        let beta = C64::from_polar(amp, phase);
        let mode = single_mode_gaussian(mu, nu, beta, d);
        state = state.kronecker(&mode);
    }
    state
}

/// Draws a state on the product basis with the given per-mode dimensions.
/// Identical seeds give identical states.
pub fn random_state(mode_dims: &[usize], kind: StateKind, seed: u64) -> Sample {
    assert!(mode_dims.iter().all(|&d| d >= 2), "mode dimensions must be at least 2");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        StateKind::Pure => Sample::Pure(damped_pure(mode_dims, &mut rng)),
        StateKind::GaussianLike => Sample::Pure(gaussian_like(mode_dims, &mut rng)),
        StateKind::Mixed => {
            let total: usize = mode_dims.iter().product();
            let rank = total.min(4);
            let weights: Vec<f64> = (0..rank).map(|_| rng.random_range(0.05..1.0)).collect();
            let wsum: f64 = weights.iter().sum();
            let mut rho = DMatrix::zeros(total, total);
            for w in weights {
                let psi = damped_pure(mode_dims, &mut rng);
                rho += (&psi * psi.adjoint()) * C64::new(w / wsum, 0.0);
            }
            Sample::Mixed(rho)
        }
    }
}

/// Probability in basis states where some mode sits in its top 10% of levels.
pub fn tail_probability(sample: &Sample, mode_dims: &[usize]) -> f64 {
    let rho_diag: Vec<f64> = match sample {
        Sample::Pure(v) => v.iter().map(|c| c.norm_sqr()).collect(),
        Sample::Mixed(rho) => (0..rho.nrows()).map(|i| rho[(i, i)].re).collect(),
    };
    rho_diag
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            occupations(*i, mode_dims)
                .iter()
                .zip(mode_dims)
                .any(|(&n, &d)| n >= d - d.div_ceil(10))
        })
        .map(|(_, p)| p)
        .sum()
}
