//! Conjugate gradients preconditioned by the row-averaged separable operator.

use super::stencil::System;
use crate::error::{Error, Result};
use rustfft::{num_complex::Complex64, Fft, FftPlanner};
use std::sync::Arc;

/// `H_j (2v_i - v_{i+1} - v_{i-1}) + vertical three-point terms`, inverted by an
/// FFT in x and one tridiagonal sweep per Fourier mode.
pub struct SeparablePreconditioner {
    nx: usize,
    rows: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    // Thomas factors per mode: modified super-diagonal and pivot reciprocals.
    upper: Vec<f64>,
    inv_pivot: Vec<f64>,
    lower: Vec<f64>,
}

impl SeparablePreconditioner {
    pub fn new(sys: &System) -> Self {
        let nx = sys.nx;
        let rows = sys.ny - 1;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(nx);
        let inverse = planner.plan_fft_inverse(nx);
        let mut upper = vec![0.0; nx * rows];
        let mut inv_pivot = vec![0.0; nx * rows];
        let mut lower = vec![0.0; rows];
        for r in 0..rows {
            lower[r] = sys.row_d22_half[r];
        }
        for k in 0..nx {
            let mu = 2.0 - 2.0 * (2.0 * std::f64::consts::PI * k as f64 / nx as f64).cos();
            let mut prev_upper = 0.0;
            for r in 0..rows {
                let j = r + 1;
                let below = sys.row_d22_half[j - 1];
                let above = sys.row_d22_half[j];
                let diag = sys.row_d11[j] * mu + below + above;
                let sub = if r > 0 { -below } else { 0.0 };
                let pivot = diag - sub * prev_upper;
                let ip = 1.0 / pivot;
                let up = if r + 1 < rows { -above * ip } else { 0.0 };
                upper[k * rows + r] = up;
                inv_pivot[k * rows + r] = ip;
                prev_upper = up;
            }
        }
        Self {
            nx,
            rows,
            forward,
            inverse,
            upper,
            inv_pivot,
            lower,
        }
    }

    pub fn apply(&self, r: &[f64], z: &mut [f64], scratch: &mut Vec<Complex64>) {
        let (nx, rows) = (self.nx, self.rows);
        scratch.clear();
        scratch.extend(r.iter().map(|&v| Complex64::new(v, 0.0)));
        for row in scratch.chunks_mut(nx) {
            self.forward.process(row);
        }
        for k in 0..nx {
            // forward elimination
            let mut prev = Complex64::new(0.0, 0.0);
            for rr in 0..rows {
                let idx = rr * nx + k;
                let sub = if rr > 0 { -self.lower[rr] } else { 0.0 };
                let val = (scratch[idx] - prev * sub) * self.inv_pivot[k * rows + rr];
                scratch[idx] = val;
                prev = val;
            }
            for rr in (0..rows.saturating_sub(1)).rev() {
                let idx = rr * nx + k;
                let next = scratch[idx + nx];
                scratch[idx] -= next * self.upper[k * rows + rr];
            }
        }
        for row in scratch.chunks_mut(nx) {
            self.inverse.process(row);
        }
        let scale = 1.0 / nx as f64;
        for (zi, c) in z.iter_mut().zip(scratch.iter()) {
            *zi = c.re * scale;
        }
    }
}

pub struct PcgOutcome {
    pub solution: Vec<f64>,
    pub iterations: usize,
}

pub fn solve(sys: &System, rhs: &[f64], tol: f64, max_iter: usize) -> Result<PcgOutcome> {
    let n = sys.unknowns();
    let bnorm = norm(rhs);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok(PcgOutcome {
            solution: x,
            iterations: 0,
        });
    }
    let pre = SeparablePreconditioner::new(sys);
    let mut scratch = Vec::with_capacity(n);
    let mut r = rhs.to_vec();
    let mut z = vec![0.0; n];
    pre.apply(&r, &mut z, &mut scratch);
    let mut p = z.clone();
    let mut q = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let mut history = Vec::new();
    for it in 1..=max_iter {
        sys.apply(&p, &mut q);
        let alpha = rz / dot(&p, &q);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        let rel = norm(&r) / bnorm;
        history.push(rel);
        if !rel.is_finite() {
            break;
        }
        if rel <= tol {
            // recompute the true residual to guard against drift of the recurrence
            sys.apply(&x, &mut q);
            let true_rel = norm(&rhs.iter().zip(&q).map(|(b, kx)| b - kx).collect::<Vec<_>>()) / bnorm;
            if true_rel <= tol {
                return Ok(PcgOutcome {
                    solution: x,
                    iterations: it,
                });
            }
            r = rhs.iter().zip(&q).map(|(b, kx)| b - kx).collect();
        }
        pre.apply(&r, &mut z, &mut scratch);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::SolverDiverged {
        iterations: history.len(),
        residual: history.last().copied().unwrap_or(f64::NAN),
        history,
    })
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
