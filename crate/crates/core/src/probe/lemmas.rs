//! Finite-perturbation checks: bump sandwich, constant shift, rotation, drift.

use super::profile::{cutoff, periodic_offset, BumpSpec};
use super::{check_clearance, fd_probe, local, richardson, ExtractedKernel, ProbeConfig};
use crate::dtn::HeleShawOperator;
use crate::error::{Error, Result};
use crate::interface::GraphInterface;
use crate::quadrature;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichRow {
    pub bump: BumpSpec,
    /// `H(f + psi)(x0) - H(f)(x0)`.
    pub difference: f64,
    /// `∫ psi(y) |y|^{-2} dy`.
    pub integral: f64,
    /// `integral / difference`; a lower constant must dominate it.
    pub lower_ratio: f64,
    /// `difference / (R0^{-alpha} sup psi + integral)`.
    pub upper_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub rows: Vec<SandwichRow>,
    pub r0: f64,
    pub alpha: f64,
    pub c_lower: f64,
    pub c_upper: f64,
    pub constant: f64,
    /// Every nonzero bump produced a positive difference and the constants are finite.
    pub pass: bool,
}

/// Two-sided bound of the response to finite nonnegative bumps:
/// `(1/C) ∫ psi |y|^{-2} <= H(f + psi) - H(f) <= C (R0^{-alpha} sup psi + ∫ psi |y|^{-2})`.
pub fn bump_sandwich_test(
    f: &GraphInterface,
    op: &HeleShawOperator,
    bumps: &[BumpSpec],
    r0: f64,
    alpha: f64,
    x0: usize,
) -> Result<SandwichReport> {
    let op = &local(op);
    let (n, dx, period) = (f.len(), f.dx(), f.period());
    for b in bumps {
        if b.amplitude < 0.0 {
            return Err(Error::InvalidParameter {
                name: "bump.amplitude",
                reason: "sandwich bumps must be nonnegative".into(),
            });
        }
        check_clearance(b, dx, period)?;
    }
    let base = op.velocity(f)?.values[x0];
    let rows: Vec<SandwichRow> = bumps
        .par_iter()
        .map(|b| {
            let psi = b.samples(n, period, x0);
            let difference = op.velocity(&f.perturbed(&psi, 1.0)?)?.values[x0] - base;
            let integral = b.weighted_integral(|y| 1.0 / (y * y));
            let (lower_ratio, upper_ratio) = if b.amplitude == 0.0 {
                (0.0, 0.0)
            } else {
                (integral / difference, difference / (r0.powf(-alpha) * b.amplitude + integral))
            };
            Ok(SandwichRow {
                bump: *b,
                difference,
                integral,
                lower_ratio,
                upper_ratio,
            })
        })
        .collect::<Result<_>>()?;
    let c_lower = rows.iter().map(|r| r.lower_ratio).fold(0.0, f64::max);
    let c_upper = rows.iter().map(|r| r.upper_ratio).fold(0.0, f64::max);
    let constant = c_lower.max(c_upper).max(1.0);
    let pass = constant.is_finite()
        && rows
            .iter()
            .all(|r| if r.bump.amplitude == 0.0 { r.difference == 0.0 } else { r.difference > 0.0 });
    Ok(SandwichReport {
        rows,
        r0,
        alpha,
        c_lower,
        c_upper,
        constant,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftRow {
    pub eps: f64,
    /// `max_x (i+(f) - i+(f + eps)) / eps`.
    pub c_plus: f64,
    /// `max_x (i-(f + eps) - i-(f)) / eps`.
    pub c_minus: f64,
    /// `i+(f + eps) <= i+(f) + tol` at every node.
    pub plus_monotone: bool,
    /// `i-(f + eps) >= i-(f) - tol` at every node.
    pub minus_monotone: bool,
    /// `max |i+(c + eps) - 1/(c + eps)|` when `f` is constant.
    pub flat_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftReport {
    pub rows: Vec<ShiftRow>,
    pub tol: f64,
    pub constant: f64,
    pub pass: bool,
}

/// Raising the whole interface by `eps` lowers the plus flux and raises the minus
/// flux, each by at most `C eps`. `delta` is the clearance from the fixed walls;
/// every `eps` must be below `delta / 2`.
pub fn constant_shift_test(
    f: &GraphInterface,
    op: &HeleShawOperator,
    eps_list: &[f64],
    delta: f64,
    tol: f64,
) -> Result<ShiftReport> {
    for &eps in eps_list {
        if !(eps > 0.0 && eps < 0.5 * delta) {
            return Err(Error::InvalidParameter {
                name: "eps",
                reason: format!("need 0 < eps < delta/2 = {}, got {eps}", 0.5 * delta),
            });
        }
    }
    let (plus0, minus0) = rayon::join(|| op.dtn_plus(f), || op.dtn_minus(f));
    let (plus0, minus0) = (plus0?, minus0?);
    let flat = f.max() - f.min() == 0.0;
    let rows: Vec<ShiftRow> = eps_list
        .par_iter()
        .map(|&eps| {
            let g = f.with_samples(f.samples().iter().map(|v| v + eps).collect())?;
            let (plus, minus) = rayon::join(|| op.dtn_plus(&g), || op.dtn_minus(&g));
            let (plus, minus) = (plus?, minus?);
            let drop: Vec<f64> = plus0.iter().zip(&plus).map(|(a, b)| a - b).collect();
            let rise: Vec<f64> = minus.iter().zip(&minus0).map(|(a, b)| a - b).collect();
            Ok(ShiftRow {
                eps,
                c_plus: drop.iter().fold(f64::NEG_INFINITY, |m, d| m.max(d / eps)),
                c_minus: rise.iter().fold(f64::NEG_INFINITY, |m, d| m.max(d / eps)),
                plus_monotone: drop.iter().all(|d| *d >= -tol),
                minus_monotone: rise.iter().all(|d| *d >= -tol),
                flat_error: flat.then(|| {
                    let exact = 1.0 / (f.samples()[0] + eps);
                    plus.iter().fold(0.0f64, |m, v| m.max((v - exact).abs()))
                }),
            })
        })
        .collect::<Result<_>>()?;
    let constant = rows.iter().map(|r| r.c_plus.max(r.c_minus)).fold(0.0, f64::max);
    let pass = constant.is_finite() && rows.iter().all(|r| r.plus_monotone && r.minus_monotone);
    Ok(ShiftReport {
        rows,
        tol,
        constant,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationRow {
    pub tilt: f64,
    /// `|i+(f + psi)(x0) - i+(f)(x0)|`.
    pub difference: f64,
    pub grad_psi: f64,
    pub eps2: f64,
    pub sup_psi: f64,
    /// `difference / (|grad psi(x0)| + eps2 sup psi)`.
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationReport {
    pub rows: Vec<RotationRow>,
    pub constant: f64,
    pub pass: bool,
}

/// Tilts `psi_a(x) = a sin(x - x0)` through the probe point: `psi(x0) = 0`,
/// `psi'(x0) = a`, `|psi'| <= a`. Bounds the flux change by `|psi'(x0)| + eps2 sup psi`.
/// Like every bump probe, runs with the centered gradient.
pub fn rotation_estimate_test(
    f: &GraphInterface,
    op: &HeleShawOperator,
    tilts: &[f64],
    x0: usize,
) -> Result<RotationReport> {
    let op = &local(op);
    let n = f.len();
    let base = op.dtn_plus(f)?[x0];
    let wave = 2.0 * std::f64::consts::PI / f.period();
    let rows: Vec<RotationRow> = tilts
        .par_iter()
        .map(|&a| {
            let psi: Vec<f64> = (0..n)
                .map(|j| a / wave * (wave * (f.x(j) - f.x(x0))).sin())
                .collect();
            let sup_psi = (a / wave).abs();
            let grad_psi = a.abs();
            let eps2 = a.abs();
            let difference = (op.dtn_plus(&f.perturbed(&psi, 1.0)?)?[x0] - base).abs();
            let denom = grad_psi + eps2 * sup_psi;
            Ok(RotationRow {
                tilt: a,
                difference,
                grad_psi,
                eps2,
                sup_psi,
                ratio: if denom == 0.0 { 0.0 } else { difference / denom },
            })
        })
        .collect::<Result<_>>()?;
    let constant = rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
    let pass = constant.is_finite() && rows.iter().all(|r| r.tilt != 0.0 || r.difference == 0.0);
    Ok(RotationReport { rows, constant, pass })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftRow {
    pub tau: f64,
    pub r: f64,
    /// Linear response to `phi_{tau,r}` at the probe point.
    pub ell: f64,
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompensatedDrift {
    pub r: f64,
    /// `ell(phi_{1,r}) + ∫_{r/2<|h|<r} h (1 - eta(h/r)) K(h) dh`, which equals
    /// `b - ∫_{B_r0 \ B_r} h K` for any truncation radius `r0 >= r`.
    pub compensated: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub rows: Vec<DriftRow>,
    /// `max |ell(phi_{tau,r})| / tau`.
    pub constant: f64,
    pub compensated: Vec<CompensatedDrift>,
    /// `max - min` of the compensated drift over `r`.
    pub compensation_spread: f64,
}

/// Samples of `phi_{tau,r}(y) = tau y eta(y/r)` around node `x0`.
pub fn drift_profile(n: usize, period: f64, x0: usize, tau: f64, r: f64) -> Vec<f64> {
    let dx = period / n as f64;
    (0..n)
        .map(|j| {
            let y = periodic_offset((j as f64 - x0 as f64) * dx, 0.0, period);
            tau * y * cutoff(y / r)
        })
        .collect()
}

/// Odd probes `phi_{tau,r}` for every `tau <= r`; with a kernel, also the
/// compensated drift at every `r` whose annulus `[r/2, r]` the kernel covers.
pub fn probe_drift(
    f: &GraphInterface,
    op: &HeleShawOperator,
    taus: &[f64],
    rs: &[f64],
    kernel: Option<&ExtractedKernel>,
    cfg: &ProbeConfig,
) -> Result<DriftReport> {
    let op = &local(op);
    let (n, period) = (f.len(), f.period());
    for &r in rs {
        if !(r > 0.0 && r < 0.5 * period) {
            return Err(Error::InvalidParameter {
                name: "r",
                reason: format!("need 0 < r < P/2, got {r}"),
            });
        }
    }
    let pairs: Vec<(f64, f64)> = rs
        .iter()
        .flat_map(|&r| taus.iter().filter(move |&&t| t > 0.0 && t <= r).map(move |&t| (t, r)))
        .collect();
    if pairs.is_empty() {
        return Err(Error::InvalidParameter {
            name: "tau",
            reason: "no pair with 0 < tau <= r".into(),
        });
    }
    let rows: Vec<DriftRow> = pairs
        .iter()
        .map(|&(tau, r)| {
            let p = fd_probe(op, f, &drift_profile(n, period, cfg.x0, tau, r), cfg)?;
            let (ell, defect) = richardson(p.d1[cfg.x0], p.d2[cfg.x0], cfg)?;
            Ok(DriftRow { tau, r, ell, defect })
        })
        .collect::<Result<_>>()?;
    let constant = rows.iter().map(|row| row.ell.abs() / row.tau).fold(0.0, f64::max);

    let mut compensated = Vec::new();
    if let Some(k) = kernel {
        let mut seen: Vec<f64> = Vec::new();
        for row in &rows {
            if seen.contains(&row.r) {
                continue;
            }
            seen.push(row.r);
            let r = row.r;
            let mut annulus = 0.0;
            let mut covered = true;
            for sign in [1.0, -1.0] {
                if k.interpolate(sign * 0.5 * r).is_none() || k.interpolate(sign * r).is_none() {
                    covered = false;
                    break;
                }
                annulus += quadrature::integrate(
                    |a| {
                        let h = sign * a;
                        h * (1.0 - cutoff(h / r)) * k.interpolate(h).unwrap_or(0.0)
                    },
                    0.5 * r,
                    r,
                    4,
                    8,
                );
            }
            if covered {
                compensated.push(CompensatedDrift {
                    r,
                    compensated: row.ell / row.tau + annulus,
                });
            }
        }
    }
    let spread = if compensated.is_empty() {
        0.0
    } else {
        let hi = compensated.iter().map(|c| c.compensated).fold(f64::NEG_INFINITY, f64::max);
        let lo = compensated.iter().map(|c| c.compensated).fold(f64::INFINITY, f64::min);
        hi - lo
    };
    Ok(DriftReport {
        rows,
        constant,
        compensated,
        compensation_spread: spread,
    })
}
