//! Checks of the cube and partition properties and the sweeps over `m` for `pi_m` and `J^m`.

use crate::cubes::{cell_keys, keys_in_cell, CubeKey, WhitneyDecomposition};
use crate::error::Result;
use crate::extension::{approximate, extend0, project, Field, GridSamples, Operator};
use crate::partition::{weights, EPS};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeAudit {
    pub cubes: usize,
    /// Pairwise disjoint interiors.
    pub disjoint: bool,
    /// Every sampled point off the grid lies in a member cube.
    pub covered: bool,
    /// `1 - sum |Q|` over the listed cubes of one cell; shrinks with the listing depth.
    pub uncovered_volume: f64,
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// `c1 <= dist / diam <= c2` for every cube.
    pub ratios_ok: bool,
    /// The listed family maps onto itself under every unit lattice shift.
    pub translation_invariant: bool,
}

impl CubeAudit {
    pub fn pass(&self) -> bool {
        self.disjoint && self.covered && self.ratios_ok && self.translation_invariant
    }
}

fn bounds(k: &CubeKey) -> Vec<(f64, f64)> {
    let s = k.side();
    k.anchor
        .iter()
        .zip(&k.offset)
        .map(|(&a, &o)| (a as f64 + o as f64 * s, a as f64 + (o + 1) as f64 * s))
        .collect()
}

fn interiors_meet(a: &CubeKey, b: &CubeKey) -> bool {
    bounds(a).iter().zip(bounds(b)).all(|(x, y)| x.0 < y.1 && y.0 < x.1)
}

/// Audits the four cube properties on the cells of `[-1, 1]^N` (grid units), listing
/// cubes down to `depth`, and checks coverage at the given points (physical units).
pub fn cube_audit(dec: &WhitneyDecomposition, depth: u32, points: &[Vec<f64>]) -> CubeAudit {
    let cubes = dec.cubes_in_box(-1, 1, depth);
    let keys: Vec<&CubeKey> = cubes.iter().map(|c| &c.key).collect();
    let disjoint = keys
        .par_iter()
        .enumerate()
        .all(|(i, a)| keys[i + 1..].iter().all(|b| !interiors_meet(a, b)));
    let covered = points.iter().all(|x| {
        let u: Vec<f64> = x.iter().map(|v| v / dec.h).collect();
        if u.iter().all(|v| v.fract() == 0.0) {
            return true;
        }
        match dec.cube_containing(x) {
            Some(k) => {
                k.in_decomposition() && bounds(&k).iter().zip(&u).all(|((lo, hi), v)| *lo <= *v && *v <= *hi)
            }
            None => false,
        }
    });
    let cell = cell_keys(dec.dim, depth);
    let volume: f64 = cell.iter().map(|k| k.side().powi(dec.dim as i32)).sum();
    let (mut min_ratio, mut max_ratio) = (f64::INFINITY, 0.0f64);
    for c in &cubes {
        min_ratio = min_ratio.min(c.ratio());
        max_ratio = max_ratio.max(c.ratio());
    }
    let ratios_ok = min_ratio >= dec.c1 && max_ratio <= dec.c2;
    // tree descents in the shifted cells against translates of the original ones
    let translation_invariant = (0..dec.dim).all(|j| {
        let mut z = vec![0i64; dec.dim];
        z[j] = 1;
        let moved: BTreeSet<CubeKey> = cell_offsets(dec.dim, -1, 1)
            .iter()
            .flat_map(|c| keys_in_cell(c, depth))
            .map(|k| k.translated(&z))
            .collect();
        let fresh: BTreeSet<CubeKey> = cell_offsets(dec.dim, -1, 1)
            .iter()
            .flat_map(|c| {
                let c: Vec<i64> = c.iter().zip(&z).map(|(a, b)| a + b).collect();
                keys_in_cell(&c, depth)
            })
            .collect();
        moved == fresh
    });
    CubeAudit {
        cubes: cubes.len(),
        disjoint,
        covered,
        uncovered_volume: 1.0 - volume,
        min_ratio,
        max_ratio,
        ratios_ok,
        translation_invariant,
    }
}

fn cell_offsets(dim: usize, lo: i64, hi: i64) -> Vec<Vec<i64>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|p| {
                (lo..hi).map(move |c| {
                    let mut q = p.clone();
                    q.push(c);
                    q
                })
            })
            .collect();
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionAudit {
    pub points: usize,
    pub max_sum_error: f64,
    pub min_phi: f64,
    pub max_phi: f64,
    /// `0 <= phi <= 1` and every cube with `phi > 0` has the point in its `Q*`.
    pub bounds_ok: bool,
    /// `max |grad phi_k| diam(Q_k)`.
    pub max_gradient: f64,
    pub gradient_constant: f64,
    /// Weights at `x + z` are the weights at `x` on the translated cubes, bit for bit.
    pub translation_exact: bool,
}

impl PartitionAudit {
    pub fn pass(&self) -> bool {
        self.max_sum_error <= 1e-12 && self.bounds_ok && self.max_gradient <= self.gradient_constant && self.translation_exact
    }
}

/// Audits the four partition properties at `points` (physical units) and under the
/// grid shift `z` (grid units).
pub fn partition_audit(dec: &WhitneyDecomposition, points: &[Vec<f64>], z: &[i64]) -> PartitionAudit {
    let h = dec.h;
    let rows: Vec<(f64, f64, f64, bool, f64, bool)> = points
        .par_iter()
        .map(|x| {
            let u: Vec<f64> = x.iter().map(|v| v / h).collect();
            let w = weights(&u);
            if w.is_empty() {
                return (0.0, 1.0, 0.0, true, 0.0, true);
            }
            let sum: f64 = w.iter().map(|k| k.phi).sum();
            let min_phi = w.iter().map(|k| k.phi).fold(f64::INFINITY, f64::min);
            let max_phi = w.iter().map(|k| k.phi).fold(0.0, f64::max);
            let support = w.iter().all(|k| {
                let s = k.key.side();
                k.key
                    .center()
                    .iter()
                    .zip(&u)
                    .all(|(c, v)| (v - c).abs() <= (0.5 + EPS) * s * (1.0 + 1e-12))
            });
            let grad = w
                .iter()
                .map(|k| {
                    let g: f64 = k.grad.iter().map(|v| v * v).sum::<f64>().sqrt();
                    g * k.key.diam2().sqrt()
                })
                .fold(0.0, f64::max);
            let moved: Vec<f64> = u.iter().zip(z).map(|(v, d)| v + *d as f64).collect();
            let wz = weights(&moved);
            let exact = wz.len() == w.len()
                && w.iter().zip(&wz).all(|(a, b)| a.key.translated(z) == b.key && a.phi == b.phi);
            (
                (sum - 1.0).abs(),
                min_phi,
                max_phi,
                support && min_phi >= 0.0 && max_phi <= 1.0,
                grad,
                exact,
            )
        })
        .collect();
    PartitionAudit {
        points: points.len(),
        max_sum_error: rows.iter().map(|r| r.0).fold(0.0, f64::max),
        min_phi: rows.iter().map(|r| r.1).fold(f64::INFINITY, f64::min),
        max_phi: rows.iter().map(|r| r.2).fold(0.0, f64::max),
        bounds_ok: rows.iter().all(|r| r.3),
        max_gradient: rows.iter().map(|r| r.4).fold(0.0, f64::max),
        gradient_constant: dec.gradient_constant,
        translation_exact: rows.iter().all(|r| r.5),
    }
}

/// `max |pi_m(tau_z f)(x) - (pi_m f)(x + z)|` over the points, `tau_z f = f(. + z)`,
/// with `z` in grid units. Points and their shifts must stay well inside the window.
pub fn translation_defect(f: Arc<dyn Field>, m: u32, z: &[i64], points: &[Vec<f64>]) -> Result<f64> {
    let h = (-(m as f64)).exp2();
    let zp: Vec<f64> = z.iter().map(|&k| k as f64 * h).collect();
    let base = project(f.clone(), m)?;
    let zc = zp.clone();
    let shifted = project(
        crate::extension::field(f.dim(), move |x: &[f64]| {
            let y: Vec<f64> = x.iter().zip(&zc).map(|(a, b)| a + b).collect();
            f.eval(&y)
        }),
        m,
    )?;
    Ok(points
        .iter()
        .map(|x| {
            let xz: Vec<f64> = x.iter().zip(&zp).map(|(a, b)| a + b).collect();
            (shifted.eval(x) - base.eval(&xz)).abs()
        })
        .fold(0.0, f64::max))
}

/// Same for `J^m`, at grid-aligned shifts.
pub fn approximation_translation_defect(
    op: Arc<dyn Operator>,
    f: Arc<dyn Field>,
    m: u32,
    z: &[i64],
    points: &[Vec<f64>],
) -> Result<f64> {
    let h = (-(m as f64)).exp2();
    let zp: Vec<f64> = z.iter().map(|&k| k as f64 * h).collect();
    let base = approximate(op.clone(), f.clone(), m)?;
    let zc = zp.clone();
    let shifted = approximate(
        op,
        crate::extension::field(f.dim(), move |x: &[f64]| {
            let y: Vec<f64> = x.iter().zip(&zc).map(|(a, b)| a + b).collect();
            f.eval(&y)
        }),
        m,
    )?;
    let moved: Vec<Vec<f64>> = points
        .iter()
        .map(|x| x.iter().zip(&zp).map(|(a, b)| a + b).collect())
        .collect();
    shifted.prefetch(points)?;
    base.prefetch(&moved)?;
    let mut worst = 0.0f64;
    for (x, xz) in points.iter().zip(&moved) {
        worst = worst.max((shifted.eval(x)? - base.eval(xz)?).abs());
    }
    Ok(worst)
}

/// Largest difference quotient over consecutive points of a sorted one-dimensional
/// sample, or over all pairs in two dimensions.
pub fn sampled_lipschitz(f: &dyn Field, points: &[Vec<f64>]) -> f64 {
    let vals: Vec<f64> = points.par_iter().map(|x| f.eval(x)).collect();
    if f.dim() == 1 {
        return points
            .windows(2)
            .zip(vals.windows(2))
            .map(|(p, v)| ((v[1] - v[0]) / (p[1][0] - p[0][0])).abs())
            .fold(0.0, f64::max);
    }
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut best = 0.0f64;
            for j in i + 1..points.len() {
                let d: f64 = points[i].iter().zip(&points[j]).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                if d > 0.0 {
                    best = best.max((vals[i] - vals[j]).abs() / d);
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzRow {
    pub m: u32,
    pub lip_projection: f64,
    /// `Lip(pi_m f) / Lip(f)` on the sample.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub lip_f: f64,
    pub rows: Vec<LipschitzRow>,
    /// Largest ratio over the sweep.
    pub constant: f64,
    /// Level-free bound `sqrt(N) (1 + S (1 + 1.032 sqrt(N)))` from the partition alone.
    pub bound: f64,
}

impl LipschitzReport {
    pub fn pass(&self) -> bool {
        self.constant <= self.bound
    }
}

/// `sup_x sum |grad phi_k(x)|` in cell units over `n` points of the cell per axis, summed
/// over the cubes whose grid point is not the nearest one to `x`. The construction is
/// the same in every cell at every level, so this does not depend on `m`.
pub fn partition_gradient_sum(dim: usize, n: usize) -> f64 {
    let pts = cell_samples(dim, n);
    pts.par_iter()
        .map(|u| {
            let near = crate::cubes::split(u).0;
            weights(u)
                .iter()
                .filter(|w| w.key.anchor != near)
                .map(|w| w.grad.iter().map(|g| g * g).sum::<f64>().sqrt())
                .sum::<f64>()
        })
        .reduce(|| 0.0, f64::max)
}

fn cell_samples(dim: usize, n: usize) -> Vec<Vec<f64>> {
    let axis: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    match dim {
        1 => axis.iter().map(|&a| vec![a]).collect(),
        _ => axis.iter().flat_map(|&a| axis.iter().map(move |&b| vec![a, b])).collect(),
    }
}

/// `Lip(pi_m f) / Lip(f)` on the sample for each level. Where cubes of two grid points
/// `a`, `b` overlap, `grad E1 = sum phi_k grad P_k + sum grad phi_k (P_k - P_a)` with `a` the nearest grid point, with
/// `|grad P_k| <= sqrt(N) Lip` and `|P_k - P_a| <= sqrt(N)(1 + 1.032 sqrt(N)) Lip h`,
/// which gives the stored bound.
pub fn lipschitz_sweep(f: Arc<dyn Field>, ms: &[u32], points: &[Vec<f64>]) -> Result<LipschitzReport> {
    let lip_f = sampled_lipschitz(f.as_ref(), points);
    let mut rows = Vec::new();
    for &m in ms {
        let p = project(f.clone(), m)?;
        let lip = sampled_lipschitz(&p, points);
        rows.push(LipschitzRow {
            m,
            lip_projection: lip,
            ratio: lip / lip_f,
        });
    }
    let constant = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let root = (f.dim() as f64).sqrt();
    let s = partition_gradient_sum(f.dim(), if f.dim() == 1 { 4096 } else { 256 });
    let bound = root * (1.0 + s * (1.0 + 1.032 * root));
    Ok(LipschitzReport {
        lip_f,
        rows,
        constant,
        bound,
    })
}

fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderRow {
    pub m: u32,
    pub h: f64,
    /// `max(0, -min pi_m w)` on the sample.
    pub negativity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemainderReport {
    pub rows: Vec<RemainderRow>,
    pub norm: f64,
    /// Fitted exponent in `negativity ~ h^beta`.
    pub beta: f64,
    /// `max negativity / (h^beta norm)`.
    pub constant: f64,
}

impl RemainderReport {
    pub fn pass(&self) -> bool {
        self.beta > 0.0 && self.constant.is_finite()
    }
}

/// Negative part of `pi_m w` for a nonnegative `w` vanishing at a grid point; `norm`
/// is the caller's `||w||_{C^{1,alpha}}`.
pub fn remainder_sweep(w: Arc<dyn Field>, norm: f64, ms: &[u32], points: &[Vec<f64>]) -> Result<RemainderReport> {
    let mut rows = Vec::new();
    for &m in ms {
        let p = project(w.clone(), m)?;
        let min = points.par_iter().map(|x| p.eval(x)).reduce(|| f64::INFINITY, f64::min);
        rows.push(RemainderRow {
            m,
            h: p.samples.h,
            negativity: (-min).max(0.0),
        });
    }
    let positive: Vec<&RemainderRow> = rows.iter().filter(|r| r.negativity > 0.0).collect();
    let beta = if positive.len() >= 2 {
        let h: Vec<f64> = positive.iter().map(|r| r.h).collect();
        let n: Vec<f64> = positive.iter().map(|r| r.negativity).collect();
        loglog_slope(&h, &n)
    } else {
        f64::NAN
    };
    let constant = rows
        .iter()
        .map(|r| r.negativity / (r.h.powf(beta) * norm))
        .fold(0.0, f64::max);
    Ok(RemainderReport { rows, norm, beta, constant })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub m: u32,
    /// `max |J^m f - J f|` on the sample.
    pub error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    /// Slope of `log2(error)` against `m`.
    pub rate: f64,
    /// Negative slope and a smaller error at the finest level than at the coarsest.
    pub decreasing: bool,
}

/// `||J^m f - J f||` over the sample for each level, with `J f` from `oracle`.
pub fn convergence_sweep(
    op: Arc<dyn Operator>,
    f: Arc<dyn Field>,
    oracle: &(dyn Fn(&[f64]) -> f64 + Sync),
    ms: &[u32],
    points: &[Vec<f64>],
) -> Result<ConvergenceReport> {
    let exact: Vec<f64> = points.par_iter().map(|x| oracle(x)).collect();
    let mut rows = Vec::new();
    for &m in ms {
        let a = approximate(op.clone(), f.clone(), m)?;
        a.prefetch(points)?;
        let mut err = 0.0f64;
        for (x, e) in points.iter().zip(&exact) {
            err = err.max((a.eval(x)? - e).abs());
        }
        rows.push(ConvergenceRow { m, error: err });
    }
    let ms_f: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let le: Vec<f64> = rows.iter().map(|r| r.error.log2()).collect();
    let n = ms_f.len() as f64;
    let mx = ms_f.iter().sum::<f64>() / n;
    let my = le.iter().sum::<f64>() / n;
    let rate = ms_f.iter().zip(&le).map(|(a, b)| (a - mx) * (b - my)).sum::<f64>()
        / ms_f.iter().map(|a| (a - mx).powi(2)).sum::<f64>();
    let decreasing = rate < 0.0 && rows.last().map(|r| r.error) < rows.first().map(|r| r.error);
    Ok(ConvergenceReport { rows, rate, decreasing })
}

/// `max (E0 g1 - E0 g2)` over the points for grid data `g1 <= g2`; nonpositive when
/// the extension preserves order.
pub fn order_defect(g1: &GridSamples, g2: &GridSamples, points: &[Vec<f64>]) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    for x in points {
        worst = worst.max(extend0(g1, x)? - extend0(g2, x)?);
    }
    Ok(worst)
}
