//! Global comparison and far-field decay.

use super::profile::BumpSpec;
use crate::dtn::HeleShawOperator;
use crate::error::{Error, Result};
use crate::interface::GraphInterface;
use crate::quadrature;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcpConfig {
    pub n: usize,
    pub period: f64,
    pub strip_height: f64,
    /// Mean height of the random base interfaces.
    pub mean_height: f64,
    /// Largest amplitude of each of the three base modes.
    pub mode_amplitude: f64,
    /// Largest bump amplitude.
    pub bump_amplitude: f64,
    /// Violations are counted beyond `tol_factor * solver tol * max(1, |H(f, x0)|)`.
    pub tol_factor: f64,
}

impl GcpConfig {
    pub fn new(n: usize, period: f64, strip_height: f64) -> Self {
        Self {
            n,
            period,
            strip_height,
            mean_height: 0.5 * strip_height,
            mode_amplitude: 0.08 * strip_height,
            bump_amplitude: 0.05 * strip_height,
            tol_factor: 10.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcpViolation {
    pub pair: usize,
    pub node: usize,
    /// `H(f, x0) - H(g, x0)`, positive for a violation.
    pub deficit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GcpReport {
    pub seed: u64,
    pub pairs: usize,
    pub tol: f64,
    pub violations: Vec<GcpViolation>,
    /// `min (H(g, x0) - H(f, x0))` over the pairs with a nonzero bump.
    pub min_margin: f64,
    /// `|H(g, x0) - H(f, x0)|` for the identical pair 0.
    pub identity_gap: f64,
}

impl GcpReport {
    pub fn pass(&self) -> bool {
        self.violations.is_empty()
    }
}

struct Pair {
    f: Vec<f64>,
    bump: Vec<f64>,
    node: usize,
}

fn random_pair(rng: &mut ChaCha8Rng, cfg: &GcpConfig, identical: bool) -> Pair {
    let (n, period) = (cfg.n, cfg.period);
    let dx = period / n as f64;
    let modes: Vec<(f64, f64)> = (1..=3)
        .map(|_| (rng.gen_range(-1.0..1.0) * cfg.mode_amplitude / 3.0, rng.gen_range(0.0..std::f64::consts::TAU)))
        .collect();
    let wave = std::f64::consts::TAU / period;
    let f: Vec<f64> = (0..n)
        .map(|j| {
            let x = j as f64 * dx;
            cfg.mean_height
                + modes
                    .iter()
                    .enumerate()
                    .map(|(k, (a, ph))| a * (wave * (k + 1) as f64 * x + ph).cos())
                    .sum::<f64>()
        })
        .collect();
    let node = rng.gen_range(0..n);
    let mut bump = vec![0.0; n];
    if !identical {
        for _ in 0..rng.gen_range(1..=3) {
            let width = rng.gen_range(2.0 * dx..0.25 * period);
            let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let max_center = 0.5 * period - width;
            let min_center = width + 2.0 * dx;
            if max_center <= min_center {
                continue;
            }
            let center = side * rng.gen_range(min_center..max_center);
            let spec = BumpSpec::new(center, width, rng.gen_range(0.0..cfg.bump_amplitude));
            for (b, v) in bump.iter_mut().zip(spec.samples(n, period, node)) {
                *b += v;
            }
        }
    }
    Pair { f, bump, node }
}

/// Random ordered pairs `f <= g = f + bumps` touching at a random node, where the
/// bumps vanish on the two nodes on each side so that the centered gradients agree.
/// Checks `H(f, x0) <= H(g, x0)` for every pair. Pair 0 has `g = f`.
pub fn gcp_test(seed: u64, op: &HeleShawOperator, n_pairs: usize, cfg: &GcpConfig) -> Result<GcpReport> {
    let op = super::local(op);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<Pair> = (0..n_pairs).map(|i| random_pair(&mut rng, cfg, i == 0)).collect();
    let outcomes: Vec<(f64, f64)> = pairs
        .par_iter()
        .map(|p| {
            let f = GraphInterface::new(p.f.clone(), cfg.period, cfg.strip_height)?;
            let g = f.perturbed(&p.bump, 1.0)?;
            let (hf, hg) = rayon::join(|| op.velocity(&f), || op.velocity(&g));
            Ok((hf?.values[p.node], hg?.values[p.node]))
        })
        .collect::<Result<_>>()?;
    let base_tol = cfg.tol_factor * op.bulk.solver.tol;
    let mut violations = Vec::new();
    let mut min_margin = f64::INFINITY;
    let mut tol = 0.0f64;
    for (i, (p, (hf, hg))) in pairs.iter().zip(&outcomes).enumerate() {
        let t = base_tol * hf.abs().max(1.0);
        tol = tol.max(t);
        if hf - hg > t {
            violations.push(GcpViolation {
                pair: i,
                node: p.node,
                deficit: hf - hg,
            });
        }
        if p.bump.iter().any(|b| *b > 0.0) {
            min_margin = min_margin.min(hg - hf);
        }
    }
    let identity_gap = outcomes.first().map(|(a, b)| (a - b).abs()).unwrap_or(0.0);
    Ok(GcpReport {
        seed,
        pairs: n_pairs,
        tol,
        violations,
        min_margin,
        identity_gap,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub radius: f64,
    /// `sup_{B_R} |H(f + far bump) - H(f)|`, bump supported in `[2R, 3R]`.
    pub far: f64,
    /// Same for the bump moved to `[R/2, 3R/2]`.
    pub near: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub rows: Vec<DecayRow>,
    pub amplitude: f64,
    /// `-d log(far) / d log(R)`.
    pub alpha: f64,
    pub pass: bool,
}

/// Sensitivity of `H` on `B_R(x0)` to a bump of height `amplitude` and width `R/2`
/// placed outside `B_{2R}`, for each `R`; fits `far ~ R^{-alpha}`.
pub fn decay_test(
    f: &GraphInterface,
    op: &HeleShawOperator,
    radii: &[f64],
    amplitude: f64,
    x0: usize,
) -> Result<DecayReport> {
    let op = &super::local(op);
    let (n, period, dx) = (f.len(), f.period(), f.dx());
    for &r in radii {
        if period < 8.0 * r {
            return Err(Error::SupportViolation(format!("period {period} is below 8 R = {}", 8.0 * r)));
        }
        if r < 4.0 * dx {
            return Err(Error::SupportViolation(format!("R = {r} is not resolved by dx = {dx}")));
        }
    }
    let base = op.velocity(f)?.values;
    let in_ball = |j: usize, r: f64| {
        let y = super::profile::periodic_offset((j as f64 - x0 as f64) * dx, 0.0, period);
        y.abs() <= r
    };
    let rows: Vec<DecayRow> = radii
        .par_iter()
        .map(|&r| {
            let sup_change = |center: f64| -> Result<f64> {
                let psi = BumpSpec::new(center, 0.5 * r, amplitude).samples(n, period, x0);
                let h = op.velocity(&f.perturbed(&psi, 1.0)?)?.values;
                Ok((0..n)
                    .filter(|&j| in_ball(j, r))
                    .map(|j| (h[j] - base[j]).abs())
                    .fold(0.0, f64::max))
            };
            Ok(DecayRow {
                radius: r,
                far: sup_change(2.5 * r)?,
                near: sup_change(r)?,
            })
        })
        .collect::<Result<_>>()?;
    let alpha = if rows.len() >= 2 && rows.iter().all(|r| r.far > 0.0) {
        let x: Vec<f64> = rows.iter().map(|r| r.radius).collect();
        let y: Vec<f64> = rows.iter().map(|r| r.far).collect();
        -quadrature::loglog_slope(&x, &y)
    } else {
        f64::NAN
    };
    Ok(DecayReport {
        pass: alpha > 0.0,
        rows,
        amplitude,
        alpha,
    })
}
