//! Bulk problems on the two phases, flattened onto `[0, P) x [0, 1]`.
//!
//! The plus phase `0 < y < f(x)` is mapped by `(x, y) -> (x, y / f)`, the minus
//! phase `f(x) < y < L` by `(x, y) -> (x, (y - f) / (L - f))`. The potential is
//! `1` on `y = 0`, `0` on the interface and `-1` on `y = L`.

mod banded;
mod pcg;
pub mod stencil;
mod verify;

pub use stencil::MonotonicityAudit;
pub use verify::{
    greens_function, greens_ratio_check, harmonic_decay_check, harmonic_measure, linear_growth_check,
    DecayRadiusRow, GreensReport, GreensRow, GrowthReport, HarmonicDecayReport,
};

use crate::error::{Error, Result};
use crate::interface::{GradientBackend, GraphInterface};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Plus,
    Minus,
}

impl Phase {
    fn name(self) -> &'static str {
        match self {
            Phase::Plus => "plus",
            Phase::Minus => "minus",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Edge {
    GammaPlus,
    GammaMinus,
}

/// Symmetric 2x2 matrix `[[a11, a12], [a12, a22]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spd2 {
    pub a11: f64,
    pub a12: f64,
    pub a22: f64,
}

impl Spd2 {
    pub const IDENTITY: Spd2 = Spd2 {
        a11: 1.0,
        a12: 0.0,
        a22: 1.0,
    };

    pub fn diag(a11: f64, a22: f64) -> Self {
        Self { a11, a12: 0.0, a22 }
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let m = 0.5 * (self.a11 + self.a22);
        let r = (0.25 * (self.a11 - self.a22).powi(2) + self.a12 * self.a12).sqrt();
        (m - r, m + r)
    }

    pub fn condition(&self) -> f64 {
        let (lo, hi) = self.eigenvalues();
        hi / lo
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, _) = self.eigenvalues();
        if [self.a11, self.a12, self.a22].iter().all(|v| v.is_finite()) && lo > 0.0 {
            Ok(())
        } else {
            Err(Error::NotSpd(format!("{self:?} has smallest eigenvalue {lo}")))
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverBackend {
    #[default]
    Pcg,
    Direct,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub backend: SolverBackend,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            backend: SolverBackend::Pcg,
            tol: 1e-10,
            max_iter: 2000,
        }
    }
}

/// Vertical resolution, gradient source and linear solver used for every phase solve.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BulkConfig {
    pub ny: usize,
    pub backend: GradientBackend,
    pub solver: SolverConfig,
}

impl BulkConfig {
    pub fn new(ny: usize) -> Self {
        Self {
            ny,
            backend: GradientBackend::Spectral,
            solver: SolverConfig::default(),
        }
    }

    pub fn with_backend(mut self, backend: GradientBackend) -> Self {
        self.backend = backend;
        self
    }
}

/// Flatten and solve the standard problem of one phase.
pub fn solve_phase(f: &GraphInterface, phase: Phase, a2: Spd2, cfg: &BulkConfig) -> Result<BulkSolution> {
    solve_bulk(&flatten(f, phase, a2, cfg.ny, cfg.backend)?, &cfg.solver)
}

/// Divergence-form problem `-div(A grad V) = source` on the unit-height rectangle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TransformedProblem {
    pub phase: Phase,
    pub nx: usize,
    pub ny: usize,
    pub period: f64,
    pub strip_height: f64,
    /// Vertex fields, index `j * nx + i` for `j = 0..=ny`.
    pub a11: Vec<f64>,
    pub a12: Vec<f64>,
    pub a22: Vec<f64>,
    pub source: Vec<f64>,
    pub bottom: Vec<f64>,
    pub top: Vec<f64>,
    /// Interface samples and their slope, as used by the map.
    pub f: Vec<f64>,
    pub slope: Vec<f64>,
    pub thickness: Vec<f64>,
    pub a2: Spd2,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl TransformedProblem {
    /// Problem with given coefficient fields and zero data; `f`, `slope` describe a flat unit strip.
    pub fn from_coefficients(
        phase: Phase,
        nx: usize,
        ny: usize,
        period: f64,
        a11: Vec<f64>,
        a12: Vec<f64>,
        a22: Vec<f64>,
    ) -> Result<Self> {
        let mut p = Self {
            phase,
            nx,
            ny,
            period,
            strip_height: 1.0,
            a11,
            a12,
            a22,
            source: vec![0.0; (ny + 1) * nx],
            bottom: vec![0.0; nx],
            top: vec![0.0; nx],
            f: vec![1.0; nx],
            slope: vec![0.0; nx],
            thickness: vec![1.0; nx],
            a2: Spd2::IDENTITY,
            lambda_min: 0.0,
            lambda_max: 0.0,
        };
        p.check()?;
        Ok(p)
    }

    fn check(&mut self) -> Result<()> {
        let nv = (self.ny + 1) * self.nx;
        if self.nx < 4 || self.ny < 4 {
            return Err(Error::InvalidParameter {
                name: "grid",
                reason: format!("need nx, ny >= 4, got {} x {}", self.nx, self.ny),
            });
        }
        if [&self.a11, &self.a12, &self.a22, &self.source].iter().any(|v| v.len() != nv) {
            return Err(Error::InvalidParameter {
                name: "coefficients",
                reason: format!("fields must have (ny+1)*nx = {nv} entries"),
            });
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for v in 0..nv {
            let m = Spd2 {
                a11: self.a11[v],
                a12: self.a12[v],
                a22: self.a22[v],
            };
            let (l, h) = m.eigenvalues();
            if !(l > 0.0) || !h.is_finite() {
                return Err(Error::NotSpd(format!("coefficient at vertex {v} has eigenvalues ({l}, {h})")));
            }
            lo = lo.min(l);
            hi = hi.max(h);
        }
        self.lambda_min = lo;
        self.lambda_max = hi;
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.period / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn with_boundary(mut self, bottom: Vec<f64>, top: Vec<f64>) -> Self {
        assert_eq!(bottom.len(), self.nx);
        assert_eq!(top.len(), self.nx);
        self.bottom = bottom;
        self.top = top;
        self
    }

    pub fn with_source(mut self, source: Vec<f64>) -> Self {
        assert_eq!(source.len(), (self.ny + 1) * self.nx);
        self.source = source;
        self
    }

    /// Data on the interface row (top for plus, bottom for minus).
    pub fn gamma_row(&self) -> usize {
        match self.phase {
            Phase::Plus => self.ny,
            Phase::Minus => 0,
        }
    }
}

/// Pushforward of the phase operator to the flattened rectangle.
///
/// `ny` vertical cells; `a2` is ignored for the plus phase.
pub fn flatten(
    f: &GraphInterface,
    phase: Phase,
    a2: Spd2,
    ny: usize,
    backend: GradientBackend,
) -> Result<TransformedProblem> {
    let l = f.strip_height();
    let (lo, hi) = (f.min(), f.max());
    if !(lo > 0.0 && hi < l) {
        return Err(Error::InvalidInterface(format!(
            "interface must lie strictly inside (0, {l}); range is [{lo}, {hi}]"
        )));
    }
    let a2 = match phase {
        Phase::Plus => Spd2::IDENTITY,
        Phase::Minus => {
            a2.validate()?;
            a2
        }
    };
    let nx = f.len();
    let fs = f.samples();
    let fp = f.gradient(backend);
    let nv = (ny + 1) * nx;
    let (mut a11, mut a12, mut a22) = (vec![0.0; nv], vec![0.0; nv], vec![0.0; nv]);
    for j in 0..=ny {
        let yh = j as f64 / ny as f64;
        for i in 0..nx {
            let c = coefficients(phase, fs[i], fp[i], yh, l, a2);
            let v = j * nx + i;
            a11[v] = c.a11;
            a12[v] = c.a12;
            a22[v] = c.a22;
        }
    }
    let thickness: Vec<f64> = match phase {
        Phase::Plus => fs.to_vec(),
        Phase::Minus => fs.iter().map(|v| l - v).collect(),
    };
    let (bottom, top) = match phase {
        Phase::Plus => (vec![1.0; nx], vec![0.0; nx]),
        Phase::Minus => (vec![0.0; nx], vec![-1.0; nx]),
    };
    let mut p = TransformedProblem {
        phase,
        nx,
        ny,
        period: f.period(),
        strip_height: l,
        a11,
        a12,
        a22,
        source: vec![0.0; nv],
        bottom,
        top,
        f: fs.to_vec(),
        slope: fp.to_vec(),
        thickness,
        a2,
        lambda_min: 0.0,
        lambda_max: 0.0,
    };
    p.check()?;
    Ok(p)
}

/// Flattened coefficient tensor at interface height `f`, slope `fp` and mapped height `yh`.
pub fn coefficients(phase: Phase, f: f64, fp: f64, yh: f64, l: f64, a2: Spd2) -> Spd2 {
    match phase {
        Phase::Plus => Spd2 {
            a11: f,
            a12: -yh * fp,
            a22: (1.0 + yh * yh * fp * fp) / f,
        },
        Phase::Minus => {
            // g * DPhi A2 DPhi^T with DPhi = [[1, 0], [s, 1/g]], s = fp (yh - 1) / g
            let g = l - f;
            let s = fp * (yh - 1.0) / g;
            let b11 = a2.a11;
            let b12 = s * a2.a11 + a2.a12 / g;
            let b22 = s * s * a2.a11 + 2.0 * s * a2.a12 / g + a2.a22 / (g * g);
            Spd2 {
                a11: g * b11,
                a12: g * b12,
                a22: g * b22,
            }
        }
    }
}

/// Discrete potential on the flattened rectangle.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BulkSolution {
    /// `(ny + 1) * nx` values, index `j * nx + i`.
    pub values: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub audit: MonotonicityAudit,
    /// Amount by which the solution leaves the range allowed by the data and source sign.
    pub max_principle_violation: f64,
    pub problem: TransformedProblem,
}

impl BulkSolution {
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.problem.nx + i]
    }

    /// Value at a flattened point by 4x4 Lagrange interpolation (periodic in x).
    pub fn interpolate(&self, x: f64, yh: f64) -> f64 {
        let p = &self.problem;
        let (nx, ny) = (p.nx as i64, p.ny as i64);
        let sx = x / p.dx();
        let sy = yh * ny as f64;
        let ix = sx.floor() as i64 - 1;
        let iy = (sy.floor() as i64 - 1).clamp(0, ny - 3);
        let wx = lagrange4(sx - ix as f64);
        let wy = lagrange4(sy - iy as f64);
        let mut acc = 0.0;
        for (b, wyb) in wy.iter().enumerate() {
            let j = (iy + b as i64) as usize;
            for (a, wxa) in wx.iter().enumerate() {
                let i = (ix + a as i64).rem_euclid(nx) as usize;
                acc += wxa * wyb * self.at(i, j);
            }
        }
        acc
    }

    /// Interface height at `x` by periodic cubic interpolation of the samples.
    pub fn interface_at(&self, x: f64) -> (f64, f64) {
        let p = &self.problem;
        let nx = p.nx as i64;
        let s = x / p.dx();
        let i0 = s.floor() as i64 - 1;
        let w = lagrange4(s - i0 as f64);
        let (mut f, mut fp) = (0.0, 0.0);
        for (a, wa) in w.iter().enumerate() {
            let i = (i0 + a as i64).rem_euclid(nx) as usize;
            f += wa * p.f[i];
            fp += wa * p.slope[i];
        }
        (f, fp)
    }

    /// Potential at a physical point `(x, y)` of this phase.
    pub fn physical_value(&self, x: f64, y: f64) -> f64 {
        let (f, _) = self.interface_at(x);
        let yh = match self.problem.phase {
            Phase::Plus => y / f,
            Phase::Minus => (y - f) / (self.problem.strip_height - f),
        };
        self.interpolate(x, yh)
    }
}

/// Weights of the cubic through nodes `0, 1, 2, 3` at position `t`.
fn lagrange4(t: f64) -> [f64; 4] {
    let (a, b, c, d) = (t, t - 1.0, t - 2.0, t - 3.0);
    [
        -b * c * d / 6.0,
        a * c * d / 2.0,
        -a * b * d / 2.0,
        a * b * c / 6.0,
    ]
}

pub fn solve_bulk(p: &TransformedProblem, cfg: &SolverConfig) -> Result<BulkSolution> {
    if !(cfg.tol > 0.0) {
        return Err(Error::InvalidParameter {
            name: "solver.tol",
            reason: format!("must be positive, got {}", cfg.tol),
        });
    }
    let (nx, ny) = (p.nx, p.ny);
    let sys = stencil::assemble(nx, ny, p.dx(), p.dy(), &p.a11, &p.a12, &p.a22);
    let mut values = vec![0.0; (ny + 1) * nx];
    values[..nx].copy_from_slice(&p.bottom);
    values[ny * nx..].copy_from_slice(&p.top);
    let n = sys.unknowns();
    let mut rhs: Vec<f64> = p.source[nx..ny * nx].to_vec();
    for u in 0..n {
        for &(b, w) in &sys.boundary[u] {
            rhs[u] += w * values[b];
        }
    }
    let (x, iterations) = match cfg.backend {
        SolverBackend::Pcg => {
            let out = pcg::solve(&sys, &rhs, cfg.tol, cfg.max_iter)?;
            (out.solution, out.iterations)
        }
        SolverBackend::Direct => (banded::solve(&sys, &rhs)?, 0),
    };
    let mut kx = vec![0.0; n];
    sys.apply(&x, &mut kx);
    let bnorm = pcg::norm(&rhs);
    let rnorm = pcg::norm(&rhs.iter().zip(&kx).map(|(b, k)| b - k).collect::<Vec<_>>());
    let residual_norm = if bnorm > 0.0 { rnorm / bnorm } else { rnorm };
    values[nx..ny * nx].copy_from_slice(&x);
    let max_principle_violation = max_principle_violation(p, &values);
    Ok(BulkSolution {
        values,
        residual_norm,
        iterations,
        audit: sys.audit,
        max_principle_violation,
        problem: p.clone(),
    })
}

fn max_principle_violation(p: &TransformedProblem, values: &[f64]) -> f64 {
    let data = p.bottom.iter().chain(&p.top);
    let lo = data.clone().copied().fold(f64::INFINITY, f64::min);
    let hi = data.copied().fold(f64::NEG_INFINITY, f64::max);
    let nonneg = p.source.iter().all(|&s| s >= 0.0);
    let nonpos = p.source.iter().all(|&s| s <= 0.0);
    let interior = &values[p.nx..p.ny * p.nx];
    let mut worst = 0.0f64;
    for &v in interior {
        if nonneg {
            worst = worst.max(lo - v);
        }
        if nonpos {
            worst = worst.max(v - hi);
        }
    }
    worst
}

/// Flattened vertical derivative on row 0 or row ny: one-sided three-point
/// differences at spacings `dy` and `2 dy`, combined by one Richardson step.
fn vertical_derivative(u: &BulkSolution, i: usize, at_top: bool) -> f64 {
    let ny = u.problem.ny;
    let h = u.problem.dy();
    let v = |k: usize| if at_top { u.at(i, ny - k) } else { u.at(i, k) };
    let d1 = (3.0 * v(0) - 4.0 * v(1) + v(2)) / (2.0 * h);
    let d2 = (3.0 * v(0) - 4.0 * v(2) + v(4)) / (4.0 * h);
    let d = (4.0 * d1 - d2) / 3.0;
    if at_top {
        d
    } else {
        -d
    }
}

/// Normal derivative on the interface with the normal pointing into the plus phase.
///
/// `GammaPlus` returns `I+ = d_nu U`, `GammaMinus` returns `I- = -d_nu U`, so both are
/// positive for the standard data.
pub fn boundary_flux(u: &BulkSolution, edge: Edge) -> Result<Vec<f64>> {
    let p = &u.problem;
    let (matches, at_top) = match (edge, p.phase) {
        (Edge::GammaPlus, Phase::Plus) => (true, true),
        (Edge::GammaMinus, Phase::Minus) => (true, false),
        _ => (false, false),
    };
    if !matches {
        return Err(Error::EdgePhaseMismatch {
            edge: match edge {
                Edge::GammaPlus => "gamma_plus",
                Edge::GammaMinus => "gamma_minus",
            },
            phase: p.phase.name(),
        });
    }
    Ok((0..p.nx)
        .map(|i| {
            let vy = vertical_derivative(u, i, at_top);
            -vy * (1.0 + p.slope[i] * p.slope[i]).sqrt() / p.thickness[i]
        })
        .collect())
}

#[cfg(test)]
mod tests;
