//! Harmonic measures, Green's functions and boundary growth of the phase potentials.

use super::{flatten, solve_bulk, BulkConfig, BulkSolution, Phase, Spd2};
use crate::error::{Error, Result};
use crate::interface::GraphInterface;
use serde::{Deserialize, Serialize};

/// Solution with data `1` on the flagged interface nodes and `0` on the rest of the boundary.
pub fn harmonic_measure(
    f: &GraphInterface,
    indicator: &[bool],
    phase: Phase,
    a2: Spd2,
    cfg: &BulkConfig,
) -> Result<BulkSolution> {
    if indicator.len() != f.len() || !indicator.iter().any(|&b| b) {
        return Err(Error::InvalidParameter {
            name: "indicator",
            reason: "must flag at least one interface node and match the grid".into(),
        });
    }
    let p = flatten(f, phase, a2, cfg.ny, cfg.backend)?;
    let gamma: Vec<f64> = indicator.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let zero = vec![0.0; f.len()];
    let p = match phase {
        Phase::Plus => p.with_boundary(zero, gamma),
        Phase::Minus => p.with_boundary(gamma, zero),
    };
    solve_bulk(&p, &cfg.solver)
}

/// Green's function with pole at flattened node `(i, j)` and zero boundary data.
///
/// The discrete delta has unit mass against the flattened cell measure, which equals
/// the physical one because the pushforward is exact.
pub fn greens_function(
    f: &GraphInterface,
    source: (usize, usize),
    phase: Phase,
    a2: Spd2,
    cfg: &BulkConfig,
) -> Result<BulkSolution> {
    let (i, j) = source;
    if j == 0 || j >= cfg.ny || i >= f.len() {
        return Err(Error::SourceOnBoundary(i, j));
    }
    let p = flatten(f, phase, a2, cfg.ny, cfg.backend)?;
    let zero = vec![0.0; f.len()];
    let mut src = vec![0.0; (cfg.ny + 1) * f.len()];
    src[j * f.len() + i] = 1.0 / (p.dx() * p.dy());
    let p = p.with_boundary(zero.clone(), zero).with_source(src);
    solve_bulk(&p, &cfg.solver)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GrowthReport {
    pub node: usize,
    pub s: Vec<f64>,
    pub ratio: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    /// Smallest `C` with every ratio in `[1/C, C]`.
    pub constant: f64,
}

/// `|U(X0 + s nu)| / s` along the normal into the phase at interface node `node`.
pub fn linear_growth_check(
    f: &GraphInterface,
    node: usize,
    phase: Phase,
    a2: Spd2,
    ladder: &[f64],
    cfg: &BulkConfig,
) -> Result<GrowthReport> {
    let u = super::solve_phase(f, phase, a2, cfg)?;
    growth_from_solution(&u, node, ladder)
}

pub(crate) fn growth_from_solution(u: &BulkSolution, node: usize, ladder: &[f64]) -> Result<GrowthReport> {
    let p = &u.problem;
    let x0 = node as f64 * p.dx();
    let f0 = p.f[node];
    let fp = p.slope[node];
    let norm = (1.0 + fp * fp).sqrt();
    // unit normal into the phase
    let (nx, ny) = match p.phase {
        Phase::Plus => (fp / norm, -1.0 / norm),
        Phase::Minus => (-fp / norm, 1.0 / norm),
    };
    let mut ratio = Vec::with_capacity(ladder.len());
    for &s in ladder {
        let (x, y) = (x0 + s * nx, f0 + s * ny);
        let (fx, _) = u.interface_at(x);
        let inside = match p.phase {
            Phase::Plus => y > 0.0 && y < fx,
            Phase::Minus => y > fx && y < p.strip_height,
        };
        if !(s > 0.0) || !inside {
            return Err(Error::LadderOutsideDomain(s));
        }
        ratio.push(u.physical_value(x.rem_euclid(p.period), y).abs() / s);
    }
    let lower = ratio.iter().copied().fold(f64::INFINITY, f64::min);
    let upper = ratio.iter().copied().fold(0.0, f64::max);
    Ok(GrowthReport {
        node,
        s: ladder.to_vec(),
        ratio,
        lower,
        upper,
        constant: upper.max(1.0 / lower),
    })
}

/// Physical position of flattened node `(i, j)`.
fn node_position(p: &super::TransformedProblem, i: usize, j: usize) -> (f64, f64) {
    let yh = j as f64 / p.ny as f64;
    let x = i as f64 * p.dx();
    let y = match p.phase {
        Phase::Plus => yh * p.f[i],
        Phase::Minus => p.f[i] + yh * (p.strip_height - p.f[i]),
    };
    (x, y)
}

/// Distance from `(x, y)` to the boundary of the phase, using the interface samples and
/// their periodic images as a polyline.
fn boundary_distance(p: &super::TransformedProblem, x: f64, y: f64) -> f64 {
    let wall = match p.phase {
        Phase::Plus => y,
        Phase::Minus => p.strip_height - y,
    };
    let n = p.nx;
    let dx = p.dx();
    let mut best = wall;
    for k in 0..n {
        let (x1, y1) = (k as f64 * dx, p.f[k]);
        let (x2, y2) = (x1 + dx, p.f[(k + 1) % n]);
        for shift in [-p.period, 0.0, p.period] {
            let (ax, bx) = (x1 + shift, x2 + shift);
            let (ex, ey) = (bx - ax, y2 - y1);
            let t = (((x - ax) * ex + (y - y1) * ey) / (ex * ex + ey * ey)).clamp(0.0, 1.0);
            let (qx, qy) = (ax + t * ex - x, y1 + t * ey - y);
            best = best.min((qx * qx + qy * qy).sqrt());
        }
    }
    best
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreensRow {
    pub pole: (usize, usize),
    pub node: (usize, usize),
    pub distance: f64,
    pub d_pole: f64,
    pub d_node: f64,
    /// `G |X - Y|^2 / (d(X) d(Y))`.
    pub ratio: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GreensReport {
    pub rows: Vec<GreensRow>,
    pub lower: f64,
    pub upper: f64,
    pub constant: f64,
}

/// Boundary-regime ratios `G(X, Y) |X - Y|^2 / (d(X) d(Y))` for each pole. A node `Y` enters
/// when `d(X), d(Y) <= |X - Y| / 4`, `d(Y) >= 2 dy` and `|X - Y| <= min thickness / 2`,
/// so that neither the pole singularity nor the far wall dominates.
pub fn greens_ratio_check(
    f: &GraphInterface,
    poles: &[(usize, usize)],
    phase: Phase,
    a2: Spd2,
    cfg: &BulkConfig,
) -> Result<GreensReport> {
    let mut rows = Vec::new();
    for &pole in poles {
        let g = greens_function(f, pole, phase, a2, cfg)?;
        let p = &g.problem;
        let (px, py) = node_position(p, pole.0, pole.1);
        let d_pole = boundary_distance(p, px, py);
        let reach = 0.5 * p.thickness.iter().copied().fold(f64::INFINITY, f64::min);
        let floor = 2.0 * p.dy() * p.thickness.iter().copied().fold(0.0, f64::max);
        for j in 1..p.ny {
            for i in 0..p.nx {
                let (x, y) = node_position(p, i, j);
                let mut dxp = (x - px).abs();
                dxp = dxp.min(p.period - dxp);
                let dist = (dxp * dxp + (y - py) * (y - py)).sqrt();
                if dist > reach || d_pole > 0.25 * dist {
                    continue;
                }
                let d_node = boundary_distance(p, x, y);
                if d_node > 0.25 * dist || d_node < floor {
                    continue;
                }
                rows.push(GreensRow {
                    pole,
                    node: (i, j),
                    distance: dist,
                    d_pole,
                    d_node,
                    ratio: g.at(i, j) * dist * dist / (d_pole * d_node),
                });
            }
        }
    }
    if rows.is_empty() {
        return Err(Error::InvalidParameter {
            name: "poles",
            reason: "no node lies in the boundary regime of any pole".into(),
        });
    }
    let lower = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    let upper = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    Ok(GreensReport {
        rows,
        lower,
        upper,
        constant: upper.max(1.0 / lower),
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecayRadiusRow {
    pub radius: f64,
    pub growth: GrowthReport,
    /// `max(W/s) / min(W/s) - 1` along the ladder.
    pub spread: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HarmonicDecayReport {
    pub rows: Vec<DecayRadiusRow>,
    /// `-d log(mean W/s) / d log R`.
    pub alpha: f64,
    pub max_spread: f64,
}

/// Harmonic measure `W` of the interface outside `B_R(X0)` for each radius, read along the
/// normal at `X0`: `W(X0 + s nu) / s` should be flat in `s` and decay in `R`.
pub fn harmonic_decay_check(
    f: &GraphInterface,
    node: usize,
    radii: &[f64],
    ladder: &[f64],
    phase: Phase,
    a2: Spd2,
    cfg: &BulkConfig,
) -> Result<HarmonicDecayReport> {
    let (n, period, dx) = (f.len(), f.period(), f.dx());
    let x0 = node as f64 * dx;
    let mut rows = Vec::new();
    for &r in radii {
        let indicator: Vec<bool> = (0..n)
            .map(|i| {
                let mut d = (i as f64 * dx - x0).abs();
                d = d.min(period - d);
                d > r
            })
            .collect();
        let w = harmonic_measure(f, &indicator, phase, a2, cfg)?;
        let growth = growth_from_solution(&w, node, ladder)?;
        let spread = growth.upper / growth.lower - 1.0;
        rows.push(DecayRadiusRow { radius: r, growth, spread });
    }
    let alpha = if rows.len() >= 2 {
        let x: Vec<f64> = rows.iter().map(|r| r.radius).collect();
        let y: Vec<f64> = rows
            .iter()
            .map(|r| r.growth.ratio.iter().sum::<f64>() / r.growth.ratio.len() as f64)
            .collect();
        -crate::quadrature::loglog_slope(&x, &y)
    } else {
        f64::NAN
    };
    let max_spread = rows.iter().map(|r| r.spread).fold(0.0, f64::max);
    Ok(HarmonicDecayReport { rows, alpha, max_spread })
}
