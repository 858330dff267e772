//! Linearization probes of `H` at smooth states.
//!
//! Every probe is a centered difference `(H(f + e psi) - H(f - e psi)) / 2e` at two
//! step sizes, combined by one Richardson step. The step `e` is chosen so that the
//! perturbation has sup norm `ProbeConfig::amplitude`.

mod comparison;
mod lemmas;
pub mod profile;

pub use comparison::{decay_test, gcp_test, DecayReport, DecayRow, GcpConfig, GcpReport, GcpViolation};
pub use lemmas::{
    bump_sandwich_test, constant_shift_test, probe_drift, rotation_estimate_test, CompensatedDrift, DriftReport,
    DriftRow, RotationReport, RotationRow, SandwichReport, SandwichRow, ShiftReport, ShiftRow,
};
pub use profile::BumpSpec;

use crate::dtn::{HeleShawOperator, LawKind};
use crate::error::{Error, Result};
use crate::interface::{class_k_check, GradientBackend, GraphInterface};
use crate::{quadrature, spectral};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Sup norm of the smaller perturbation `e psi`.
    pub amplitude: f64,
    /// Largest accepted `|D(2e) - D(e)| / |D(e)|`.
    pub defect_tol: f64,
    /// Responses below this magnitude are treated as zero when computing defects.
    pub noise_floor: f64,
    /// Probe node.
    pub x0: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            amplitude: 1e-3,
            defect_tol: 0.05,
            noise_floor: 1e-7,
            x0: 0,
        }
    }
}

/// Copy of `op` with the centered gradient, so that data vanishing on the two
/// nodes next to the probe point leaves the local geometry there untouched.
pub(crate) fn local(op: &HeleShawOperator) -> HeleShawOperator {
    let mut op = op.clone();
    op.bulk.backend = GradientBackend::Centered;
    op
}

/// Nodewise centered differences at step `e` and `2e`.
pub(crate) struct FdProbe {
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

pub(crate) fn fd_probe(op: &HeleShawOperator, f: &GraphInterface, psi: &[f64], cfg: &ProbeConfig) -> Result<FdProbe> {
    let sup = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup == 0.0 {
        return Ok(FdProbe {
            d1: vec![0.0; f.len()],
            d2: vec![0.0; f.len()],
        });
    }
    let e = cfg.amplitude / sup;
    if let Some(k) = op.class.as_ref().filter(|_| op.strict) {
        let worst = f.perturbed(psi, 2.0 * e)?;
        let r = class_k_check(&worst, k, op.bulk.backend);
        if !r.member {
            return Err(Error::ClassViolation { violations: r.violations });
        }
    }
    let scales = [e, -e, 2.0 * e, -2.0 * e];
    let values: Vec<Vec<f64>> = scales
        .par_iter()
        .map(|&s| Ok(op.velocity(&f.perturbed(psi, s)?)?.values))
        .collect::<Result<_>>()?;
    let n = f.len();
    Ok(FdProbe {
        d1: (0..n).map(|i| (values[0][i] - values[1][i]) / (2.0 * e)).collect(),
        d2: (0..n).map(|i| (values[2][i] - values[3][i]) / (4.0 * e)).collect(),
    })
}

/// Richardson value and defect of a scalar projection of the probe.
pub(crate) fn richardson(d1: f64, d2: f64, cfg: &ProbeConfig) -> Result<(f64, f64)> {
    let value = (4.0 * d1 - d2) / 3.0;
    let defect = if d1.abs() < cfg.noise_floor {
        0.0
    } else {
        (d2 - d1).abs() / d1.abs()
    };
    if defect > cfg.defect_tol {
        return Err(Error::RichardsonDefect {
            defect,
            suggested_eps: cfg.amplitude * (cfg.defect_tol / defect).sqrt() * 0.5,
        });
    }
    Ok((value, defect))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExtractedKernel {
    /// Bump centers, offsets from the probe point.
    pub h_samples: Vec<f64>,
    pub k_values: Vec<f64>,
    pub defects: Vec<f64>,
    /// `b - ∫_{B_r0 \ B_r} h K` at `r = r_drift`.
    pub drift_estimate: f64,
    pub r_drift: f64,
    /// Response to a constant shift.
    pub zero_order_estimate: f64,
    pub r0: f64,
    pub amplitude: f64,
    /// Range of `|h|` used for the constants.
    pub fit_range: (f64, f64),
    pub c_lower: f64,
    pub c_upper: f64,
}

impl ExtractedKernel {
    /// Smallest `C` with `K h^2` in `[1/C, C]` over the fit range.
    pub fn sandwich_constant(&self) -> f64 {
        self.c_lower.max(self.c_upper)
    }

    fn side(&self, sign: f64) -> Vec<(f64, f64)> {
        let mut pts: Vec<(f64, f64)> = self
            .h_samples
            .iter()
            .zip(&self.k_values)
            .filter(|(x, _)| x.signum() == sign)
            .map(|(x, k)| (x.abs(), k * x * x))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        pts
    }

    /// `K h^2` interpolated linearly between probed offsets of the same sign.
    fn kh2(&self, h: f64, extrapolate: bool) -> Option<f64> {
        let pts = self.side(h.signum());
        let a = h.abs();
        let (first, last) = (pts.first()?, pts.last()?);
        if a <= first.0 {
            return (extrapolate || a == first.0).then_some(first.1);
        }
        if a >= last.0 {
            return (extrapolate || a == last.0).then_some(last.1);
        }
        let i = pts.windows(2).position(|w| a <= w[1].0)?;
        let ((x0, v0), (x1, v1)) = (pts[i], pts[i + 1]);
        let t = (a - x0) / (x1 - x0);
        Some((1.0 - t) * v0 + t * v1)
    }

    /// `K(h)` between probed offsets of the same sign; `None` outside.
    pub fn interpolate(&self, h: f64) -> Option<f64> {
        self.kh2(h, false).map(|v| v / (h * h))
    }

    /// `c + ∫_{-P/2}^{P/2} (cos(xi h) - 1) K(h) dh`, with `K h^2` held constant
    /// outside the probed range.
    pub fn reconstruct_symbol(&self, xi: f64, period: f64) -> f64 {
        let mut total = self.zero_order_estimate;
        for sign in [1.0, -1.0] {
            let mut knots = vec![0.0];
            knots.extend(self.side(sign).into_iter().map(|p| p.0).filter(|&a| a < 0.5 * period));
            knots.push(0.5 * period);
            for w in knots.windows(2) {
                total += quadrature::integrate(
                    |a| {
                        let h = sign * a;
                        let k = self.kh2(h, true).unwrap_or(0.0);
                        // (cos(xi h) - 1) / h^2 without cancellation
                        let s = (0.5 * xi * h).sin();
                        let q = if h == 0.0 { -0.5 * xi * xi } else { -2.0 * s * s / (h * h) };
                        q * k
                    },
                    w[0],
                    w[1],
                    2,
                    10,
                );
            }
        }
        total
    }
}

/// Default bump for offset `h`: width `|h|/3`, shrunk to keep `2 dx` clearance
/// from the probe point and to stay inside the half period.
pub fn kernel_bump(h: f64, dx: f64, period: f64) -> BumpSpec {
    let a = h.abs();
    let w = (a / 3.0).min(a - 2.0 * dx).min(0.5 * period - a);
    BumpSpec::new(h, w, 1.0)
}

/// Offsets with `|h|` geometric from `h_min` to `h_max`, both signs.
pub fn kernel_ladder(h_min: f64, h_max: f64, per_side: usize) -> Vec<f64> {
    let q = if per_side > 1 {
        (h_max / h_min).powf(1.0 / (per_side - 1) as f64)
    } else {
        1.0
    };
    let mut out = Vec::with_capacity(2 * per_side);
    for i in 0..per_side {
        let a = h_min * q.powi(i as i32);
        out.push(a);
        out.push(-a);
    }
    out
}

/// Probe-point-centered `∫ psi(y) |y|^{-2} dy` by the grid sum.
pub(crate) fn inverse_square_weight(psi: &[f64], dx: f64, x0: usize, period: f64) -> f64 {
    psi.iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(j, v)| {
            let y = profile::periodic_offset((j as f64 - x0 as f64) * dx, 0.0, period);
            v / (y * y)
        })
        .sum::<f64>()
        * dx
}

/// `K(h)` from bumps, the zero-order coefficient from a constant shift, the drift
/// through the odd probe at `r = r_drift`, and the sandwich constants over `fit_range`.
/// Gradients are taken with the centered backend whatever `op` says.
///
/// Each bump response `R` is converted with `K(h) h^2 = R / ∫ psi |y|^{-2}`, which
/// is exact for an inverse-square kernel and removes most of the averaging bias
/// of a wide bump.
pub fn probe_kernel(
    f: &GraphInterface,
    op: &HeleShawOperator,
    bumps: &[BumpSpec],
    fit_range: (f64, f64),
    r_drift: f64,
    cfg: &ProbeConfig,
) -> Result<ExtractedKernel> {
    let op = &local(op);
    let n = f.len();
    let dx = f.dx();
    let period = f.period();
    for b in bumps {
        check_clearance(b, dx, period)?;
    }
    let x0 = cfg.x0;
    let rows: Vec<(f64, f64, f64)> = bumps
        .iter()
        .map(|b| {
            let psi = b.samples(n, period, x0);
            let weight = inverse_square_weight(&psi, dx, x0, period);
            let p = fd_probe(op, f, &psi, cfg)?;
            let (v, d) = richardson(p.d1[x0], p.d2[x0], cfg)?;
            Ok((b.center, v / (weight * b.center * b.center), d))
        })
        .collect::<Result<_>>()?;
    let shift = fd_probe(op, f, &vec![1.0; n], cfg)?;
    let (zero_order_estimate, _) = richardson(shift.d1[x0], shift.d2[x0], cfg)?;

    let mut kernel = ExtractedKernel {
        h_samples: rows.iter().map(|r| r.0).collect(),
        k_values: rows.iter().map(|r| r.1).collect(),
        defects: rows.iter().map(|r| r.2).collect(),
        drift_estimate: f64::NAN,
        r_drift,
        zero_order_estimate,
        r0: fit_range.1,
        amplitude: cfg.amplitude,
        fit_range,
        c_lower: f64::NAN,
        c_upper: f64::NAN,
    };
    let in_range: Vec<f64> = kernel
        .h_samples
        .iter()
        .zip(&kernel.k_values)
        .filter(|(h, _)| (fit_range.0 * (1.0 - 1e-12)..=fit_range.1 * (1.0 + 1e-12)).contains(&h.abs()))
        .map(|(h, k)| k * h * h)
        .collect();
    if !in_range.is_empty() {
        kernel.c_lower = 1.0 / in_range.iter().copied().fold(f64::INFINITY, f64::min);
        kernel.c_upper = in_range.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    }
    let drift = probe_drift(f, op, &[r_drift], &[r_drift], Some(&kernel), cfg)?;
    if let Some(c) = drift.compensated.first() {
        kernel.drift_estimate = c.compensated;
    }
    Ok(kernel)
}

pub(crate) fn check_clearance(b: &BumpSpec, dx: f64, period: f64) -> Result<()> {
    if b.gap(period) < 2.0 * dx * (1.0 - 1e-9) {
        return Err(Error::SupportViolation(format!(
            "bump at h = {} with width {} comes within 2 dx of the probe point",
            b.center, b.width
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolRow {
    pub xi: f64,
    pub measured: f64,
    pub oracle: f64,
    pub rel_error: f64,
}

/// Flat-strip symbol of the linearized operator for identity `A2`.
pub fn strip_symbol(xi: f64, c: f64, l: f64, two_phase: bool) -> f64 {
    let one = |d: f64| if xi == 0.0 { 1.0 / (d * d) } else { xi / (d * (d * xi).tanh()) };
    -one(c) - if two_phase { one(l - c) } else { 0.0 }
}

/// Response of `H` at the flat state `c` to `cos(xi x)`, against the closed form.
pub fn symbol_check(
    op: &HeleShawOperator,
    c: f64,
    strip_height: f64,
    period: f64,
    n: usize,
    xi_list: &[f64],
    cfg: &ProbeConfig,
) -> Result<Vec<SymbolRow>> {
    let f = GraphInterface::new(vec![c; n], period, strip_height)?;
    let two_phase = match &op.law.kind {
        LawKind::OnePhaseIdentity => false,
        LawKind::Difference if op.law.a2 == crate::Spd2::IDENTITY => true,
        _ => {
            return Err(Error::InvalidParameter {
                name: "law",
                reason: "the closed-form symbol needs the one-phase law or the difference law with A2 = I".into(),
            })
        }
    };
    let dx = f.dx();
    let mut rows = Vec::new();
    for &xi in xi_list {
        if xi * dx > 0.5 {
            return Err(Error::UnresolvedMode { xi, xi_dx: xi * dx });
        }
        let k = xi * period / (2.0 * std::f64::consts::PI);
        if (k - k.round()).abs() > 1e-9 {
            return Err(Error::InvalidParameter {
                name: "xi",
                reason: format!("{xi} is not a wavenumber of period {period}"),
            });
        }
        let k = k.round() as usize;
        let psi: Vec<f64> = (0..n).map(|j| (xi * f.x(j)).cos()).collect();
        let p = fd_probe(op, &f, &psi, cfg)?;
        let (measured, _) = if k == 0 {
            richardson(mean(&p.d1), mean(&p.d2), cfg)?
        } else {
            richardson(
                spectral::cosine_coefficient(&p.d1, k),
                spectral::cosine_coefficient(&p.d2, k),
                cfg,
            )?
        };
        let oracle = strip_symbol(xi, c, strip_height, two_phase);
        rows.push(SymbolRow {
            xi,
            measured,
            oracle,
            rel_error: ((measured - oracle) / oracle).abs(),
        });
    }
    Ok(rows)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

#[cfg(test)]
mod tests;
