//! Trapezoidal-rule moments of wavefunctions sampled on uniform grids.

use crate::{OracleError, Result, C64};
use nalgebra::DMatrix;

/// Boundary amplitudes above this fraction of the peak are rejected.
const BOUNDARY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMoments {
    pub norm: f64,
    pub mean: f64,
    pub variance: f64,
}

fn trapezoid_weights(len: usize, step: f64) -> Vec<f64> {
    (0..len)
        .map(|i| if i == 0 || i + 1 == len { 0.5 * step } else { step })
        .collect()
}

fn uniform_step(grid: &[f64]) -> f64 {
    (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64
}

pub fn grid_moments(samples: &[C64], grid: &[f64]) -> Result<GridMoments> {
    if samples.len() != grid.len() || grid.len() < 3 {
        return Err(OracleError::GridMismatch { grid: grid.len(), samples: samples.len() });
    }
    let peak = samples.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let edge = samples[0].norm().max(samples[samples.len() - 1].norm());
    if edge > BOUNDARY_TOLERANCE * peak {
        return Err(OracleError::BoundaryMass { ratio: edge / peak });
    }
    let w = trapezoid_weights(grid.len(), uniform_step(grid));
    let mut m0 = 0.0;
    let mut m1 = 0.0;
    let mut m2 = 0.0;
    for ((c, &q), &wi) in samples.iter().zip(grid).zip(&w) {
        let p = c.norm_sqr() * wi;
        m0 += p;
        m1 += p * q;
        m2 += p * q * q;
    }
    let mean = m1 / m0;
    Ok(GridMoments { norm: m0, mean, variance: m2 / m0 - mean * mean })
}

/// <q^2> - <q>^2 of |psi(q)|^2, normalized by its own quadrature norm.
pub fn grid_variance(samples: &[C64], grid: &[f64]) -> Result<f64> {
    grid_moments(samples, grid).map(|m| m.variance)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridMoments2d {
    pub norm: f64,
    pub mean: [f64; 2],
    pub covariance: [[f64; 2]; 2],
}

/// Moments of |psi(x, y)|^2 with samples[(i, j)] = psi(gx[i], gy[j]).
pub fn grid_moments_2d(samples: &DMatrix<C64>, gx: &[f64], gy: &[f64]) -> Result<GridMoments2d> {
    if samples.nrows() != gx.len() || samples.ncols() != gy.len() {
        return Err(OracleError::GridMismatch { grid: gx.len() * gy.len(), samples: samples.len() });
    }
    let peak = samples.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let (nx, ny) = (gx.len(), gy.len());
    let mut edge: f64 = 0.0;
    for i in 0..nx {
        edge = edge.max(samples[(i, 0)].norm()).max(samples[(i, ny - 1)].norm());
    }
    for j in 0..ny {
        edge = edge.max(samples[(0, j)].norm()).max(samples[(nx - 1, j)].norm());
    }
    if edge > BOUNDARY_TOLERANCE * peak {
        return Err(OracleError::BoundaryMass { ratio: edge / peak });
    }
    let wx = trapezoid_weights(nx, uniform_step(gx));
    let wy = trapezoid_weights(ny, uniform_step(gy));
    let mut m0 = 0.0;
    let mut m1 = [0.0; 2];
    let mut m2 = [[0.0; 2]; 2];
    for i in 0..nx {
        for j in 0..ny {
            let p = samples[(i, j)].norm_sqr() * wx[i] * wy[j];
            let r = [gx[i], gy[j]];
            m0 += p;
            for a in 0..2 {
                m1[a] += p * r[a];
                for b in 0..2 {
                    m2[a][b] += p * r[a] * r[b];
                }
            }
        }
    }
    let mean = [m1[0] / m0, m1[1] / m0];
    let mut covariance = [[0.0; 2]; 2];
    for a in 0..2 {
        for b in 0..2 {
            covariance[a][b] = m2[a][b] / m0 - mean[a] * mean[b];
        }
    }
    Ok(GridMoments2d { norm: m0, mean, covariance })
}
