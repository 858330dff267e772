//! Order-one nonlocal operators on periodic grid functions: the kernel-drift class,
//! its extremal operators, rescaling, and a difference-quotient harness for trajectories.
//!
//! Every integral runs over the symmetric window `|h| <= P/2` with the trapezoid rule.
//! The shell `|h| <= 2 dx` is replaced by its second-order Taylor value
//! `u''(x)/2 ∫_shell h^2 K`.

use crate::error::{Error, Result};
use crate::evolution::FlowState;
use crate::interface::{pairwise_seminorm, SeminormKind};
use crate::{quadrature, spectral};
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelClassParams {
    pub lambda: f64,
    /// Radius of the gradient correction in `delta_h u`.
    pub r0: f64,
    /// Interface dimension; only 1 is supported.
    pub n: usize,
}

impl KernelClassParams {
    pub fn new(lambda: f64, r0: f64) -> Self {
        Self { lambda, r0, n: 1 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 1.0) {
            return Err(Error::InvalidParameter {
                name: "lambda",
                reason: format!("need lambda >= 1, got {}", self.lambda),
            });
        }
        if !(self.r0 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "r0",
                reason: format!("need r0 > 0, got {}", self.r0),
            });
        }
        if self.n != 1 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: "only one-dimensional interfaces are supported".into(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extremal {
    Plus,
    Minus,
}

pub type Kernel = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `L u = b u' + ∫ delta_h u K(h) dh` with the class conditions checked on a sample ladder.
#[derive(Clone)]
pub struct LinearMember {
    pub b: f64,
    pub kernel: Kernel,
    pub params: KernelClassParams,
    /// Window half-width the kernel was verified on.
    pub window: f64,
    /// Offsets where `K h^2 ∈ [1/Λ, Λ]` was checked.
    pub ladder: Vec<f64>,
    /// `sup_rho |b - ∫_{B_r0 \ B_rho} h K|` over the radius ladder.
    pub drift_bound: f64,
}

impl std::fmt::Debug for LinearMember {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LinearMember")
            .field("b", &self.b)
            .field("params", &self.params)
            .field("window", &self.window)
            .field("drift_bound", &self.drift_bound)
            .finish()
    }
}

const LADDER_POINTS: usize = 400;

impl LinearMember {
    /// Checks `Λ^{-1} h^{-2} <= K(h) <= Λ h^{-2}` on a geometric ladder of `0 < |h| <= window`
    /// and `|b - ∫_{B_r0 \ B_rho} h K| <= Λ` for `rho` on a ladder down to `window * 1e-6`.
    pub fn new(b: f64, kernel: Kernel, params: KernelClassParams, window: f64) -> Result<Self> {
        params.validate()?;
        let lo = window * 1e-6;
        let q = (window / lo).powf(1.0 / (LADDER_POINTS - 1) as f64);
        let ladder: Vec<f64> = (0..LADDER_POINTS).map(|i| lo * q.powi(i as i32)).collect();
        let lam = params.lambda;
        for &a in &ladder {
            for h in [a, -a] {
                let v = kernel(h) * h * h;
                if !(v >= (1.0 - 1e-12) / lam && v <= lam * (1.0 + 1e-12)) {
                    return Err(Error::InvalidParameter {
                        name: "kernel",
                        reason: format!("K(h) h^2 = {v} at h = {h} leaves [1/{lam}, {lam}]"),
                    });
                }
            }
        }
        // odd moment on dyadic shells, accumulated from r0 inward
        let top = params.r0.min(window);
        let mut moment = 0.0;
        let mut drift_bound = b.abs();
        let mut hi = top;
        while hi > lo {
            let lo_shell = (0.5 * hi).max(lo);
            moment += quadrature::integrate(|a| a * (kernel(a) - kernel(-a)), lo_shell, hi, 1, 10);
            drift_bound = drift_bound.max((b - moment).abs());
            hi = lo_shell;
        }
        if drift_bound > lam * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter {
                name: "b",
                reason: format!("compensated drift reaches {drift_bound} > {lam}"),
            });
        }
        Ok(Self {
            b,
            kernel,
            params,
            window,
            ladder,
            drift_bound,
        })
    }

    /// `K_r(h) = r^2 K(r h)` and `b_r = b - ∫_{B_{r0/r} \ B_r0} h K_r`, verified again on
    /// the window `window / r`.
    pub fn rescaled(&self, r: f64) -> Result<Self> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::IncompatibleScale(format!("need 0 < r <= 1, got {r}")));
        }
        let k = self.kernel.clone();
        let kernel: Kernel = Arc::new(move |h: f64| r * r * k(r * h));
        let r0 = self.params.r0;
        let outer = quadrature::integrate(|a| a * (kernel(a) - kernel(-a)), r0, r0 / r, 16, 10);
        Self::new(self.b - outer, kernel, self.params, self.window / r)
    }

    /// Random smooth member: `K(h) = a(h) / h^2` with
    /// `log a(h) = 0.9 log Λ (s1 cos(w h + phi) + s2 tanh(h / l)) / 2` and `|b| <= Λ/2`,
    /// redrawn until the class checks pass.
    pub fn random(rng: &mut impl Rng, params: KernelClassParams, window: f64) -> Result<Self> {
        params.validate()?;
        let scale = 0.45 * params.lambda.ln();
        let mut last = None;
        for _ in 0..32 {
            let s1: f64 = rng.gen_range(-1.0..1.0);
            let s2: f64 = rng.gen_range(-1.0..1.0);
            let w: f64 = rng.gen_range(0.5..8.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let l: f64 = rng.gen_range(0.1..2.0);
            let b = rng.gen_range(-0.5..0.5) * params.lambda;
            let kernel: Kernel =
                Arc::new(move |h: f64| (scale * (s1 * (w * h + phi).cos() + s2 * (h / l).tanh())).exp() / (h * h));
            match Self::new(b, kernel, params, window) {
                Ok(m) => return Ok(m),
                Err(e) => last = Some(e),
            }
        }
        Err(last.expect("at least one draw"))
    }

    pub fn apply(&self, u: &[f64], period: f64) -> Vec<f64> {
        linear_apply(u, period, self.b, self.params.r0, self.kernel.as_ref())
    }
}

/// `shell(i) + ∫_{2dx<|h|<=P/2} g(delta_h u(x_i), h) dh` at every node, trapezoid in `h`.
///
/// `delta_h u` jumps at `|h| = r0`; the cell containing `r0` is split there, with
/// `u(x + r0)` interpolated linearly, so the jump costs no accuracy.
fn window_sum(
    u: &[f64],
    du: &[f64],
    period: f64,
    r0: f64,
    shell: impl Fn(usize) -> f64,
    g: impl Fn(f64, f64) -> f64,
) -> Vec<f64> {
    let n = u.len() as isize;
    let dx = period / n as f64;
    let half = n / 2;
    let at = |i: isize| u[i.rem_euclid(n) as usize];
    let split = r0 > 2.0 * dx && r0 < half as f64 * dx;
    // cell (k, k+1] holds r0
    let k = ((r0 / dx).ceil() as isize - 1).max(2);
    (0..n)
        .map(|i| {
            let ui = u[i as usize];
            let d = du[i as usize];
            let delta = |h: f64, v: f64| v - ui - if h.abs() < r0 { d * h } else { 0.0 };
            let mut acc = shell(i as usize);
            for m in 2..=half {
                let w = if m == 2 || (n % 2 == 0 && m == half) { 0.5 * dx } else { dx };
                for s in [1isize, -1] {
                    let h = (s * m) as f64 * dx;
                    acc += w * g(delta(h, at(i + s * m)), h);
                }
            }
            if split {
                for s in [1isize, -1] {
                    let sf = s as f64;
                    let (ha, hb) = (k as f64 * dx, (k + 1) as f64 * dx);
                    let (ua, ub) = (at(i + s * k), at(i + s * (k + 1)));
                    let ur = ua + (r0 - ha) / dx * (ub - ua);
                    let ga = g(delta(sf * ha, ua), sf * ha);
                    let gb = g(delta(sf * hb, ub), sf * hb);
                    let inner = g(ur - ui - d * sf * r0, sf * r0);
                    let outer = g(ur - ui, sf * r0);
                    acc += 0.5 * (r0 - ha) * (ga + inner) + 0.5 * (hb - r0) * (outer + gb) - 0.5 * dx * (ga + gb);
                }
            }
            acc
        })
        .collect()
}

/// `b u' + ∫ delta_h u K(h) dh` at every node, with
/// `delta_h u(x) = u(x+h) - u(x) - 1_{|h|<r0} u'(x) h`.
pub fn linear_apply(u: &[f64], period: f64, b: f64, r0: f64, kernel: &(dyn Fn(f64) -> f64 + Send + Sync)) -> Vec<f64> {
    let s = 2.0 * period / u.len() as f64;
    let du = spectral::derivative(u, period, 1);
    let d2u = spectral::derivative(u, period, 2);
    let shell_moment = quadrature::integrate(|h| h * h * kernel(h), -s, 0.0, 2, 10)
        + quadrature::integrate(|h| h * h * kernel(h), 0.0, s, 2, 10);
    let acc = window_sum(u, &du, period, r0, |i| 0.5 * d2u[i] * shell_moment, |d, h| d * kernel(h));
    acc.iter().zip(&du).map(|(a, d)| b * d + a).collect()
}

/// `M+ u = Λ|u'| + ∫ [Λ (delta_h u)^+ - Λ^{-1} (delta_h u)^-] |h|^{-2} dh`, and
/// `M- u = -Λ|u'| + ∫ [Λ^{-1} (delta_h u)^+ - Λ (delta_h u)^-] |h|^{-2} dh`.
///
/// The drift bound is taken independently of the kernel, so this form dominates
/// (resp. is dominated by) every member with `|b| <= Λ`.
pub fn extremal(u: &[f64], period: f64, params: &KernelClassParams, sign: Extremal) -> Vec<f64> {
    let s = 2.0 * period / u.len() as f64;
    let du = spectral::derivative(u, period, 1);
    let d2u = spectral::derivative(u, period, 2);
    let lam = params.lambda;
    let (up, down, grad) = match sign {
        Extremal::Plus => (lam, 1.0 / lam, lam),
        Extremal::Minus => (1.0 / lam, lam, -lam),
    };
    let pucci = |d: f64| if d >= 0.0 { up * d } else { down * d };
    // On the shell delta_h u / h^2 ≈ u''/2 + u''' h / 6, linear in h; the Pucci
    // nonlinearity does not cancel the odd term, so it is integrated exactly.
    let d3u = spectral::derivative(u, period, 3);
    let shell = |i: usize| {
        let (a, c) = (0.5 * d2u[i], d3u[i] / 6.0);
        let piece = |lo: f64, hi: f64| (hi - lo) * pucci(a + c * 0.5 * (lo + hi));
        let root = if c != 0.0 { -a / c } else { f64::INFINITY };
        if root.abs() < s {
            piece(-s, root) + piece(root, s)
        } else {
            piece(-s, s)
        }
    };
    let acc = window_sum(u, &du, period, params.r0, shell, |d, h| pucci(d) / (h * h));
    acc.iter().zip(&du).map(|(a, d)| grad * d.abs() + a).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub r: f64,
    /// `max |M+(u_r)(x) - M+(u)(r x)|` over matched nodes.
    pub plus_error: f64,
    pub minus_error: f64,
    pub matched_nodes: usize,
    /// Rescaled members passed the class checks.
    pub members_ok: bool,
}

/// Compares `M±(u_r)(x)` with `M±(u)(r x)` for `u_r(x) = u(r x)/r`. Both are sampled
/// with spacing `dx = period / n`; `u_r` lives on the period `period / r`, so `1/r`
/// must be an integer dividing into the grid. The rescaled operator uses the gradient
/// correction radius `r0 / r`, which is what the substitution `h -> r h` produces.
pub fn scaling_check(
    u: &(dyn Fn(f64) -> f64 + Sync),
    period: f64,
    n: usize,
    r: f64,
    params: &KernelClassParams,
    members: &[LinearMember],
) -> Result<ScalingReport> {
    params.validate()?;
    let inv = 1.0 / r;
    if !(r > 0.0 && r <= 1.0) || (inv - inv.round()).abs() > 1e-12 {
        return Err(Error::IncompatibleScale(format!("1/r must be a positive integer, got r = {r}")));
    }
    let m = inv.round() as usize;
    let dx = period / n as f64;
    let base: Vec<f64> = (0..n).map(|j| u(j as f64 * dx)).collect();
    let scaled: Vec<f64> = (0..n * m).map(|j| u(r * j as f64 * dx) / r).collect();
    let scaled_params = KernelClassParams {
        r0: params.r0 / r,
        ..*params
    };
    let mut plus_error = 0.0f64;
    let mut minus_error = 0.0f64;
    let mut matched = 0;
    for (sign, err) in [(Extremal::Plus, &mut plus_error), (Extremal::Minus, &mut minus_error)] {
        let a = extremal(&base, period, params, sign);
        let b = extremal(&scaled, period / r, &scaled_params, sign);
        matched = 0;
        // node j of u_r sits at x = j dx, matched to r x = (j r) dx on the base grid
        for (i, av) in a.iter().enumerate() {
            *err = err.max((b[i * m] - av).abs());
            matched += 1;
        }
    }
    let members_ok = members.iter().all(|mem| mem.rescaled(r).is_ok());
    Ok(ScalingReport {
        r,
        plus_error,
        minus_error,
        matched_nodes: matched,
        members_ok,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientRow {
    pub t: f64,
    /// Shift in grid nodes.
    pub shift: usize,
    pub h: f64,
    pub frac_sub_ok: f64,
    pub frac_super_ok: f64,
    pub holder_seminorm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub rows: Vec<QuotientRow>,
    pub gamma: f64,
    pub a: f64,
    pub tol: f64,
    /// Smallest satisfaction fraction over all rows and both inequalities.
    pub min_fraction: f64,
    /// Per shift: `[v_h]` at the end of the run over `[v_h]` at half the end time,
    /// read as `2^{-gamma_fit}`.
    pub fitted_gamma: Vec<f64>,
    /// Per shift: `max_t t^gamma [v_h(t)] / (|v_h|_inf + t A)` over `[T/2, T]`.
    pub normalized_holder: Vec<f64>,
}

/// For each shift `h` builds `v_h = (f(x+h) - f(x)) / |h|` on every snapshot and checks
/// `∂_t v_h - M+ v_h <= A + tol` and `∂_t v_h - M- v_h >= -A - tol` at interior
/// snapshots, with `∂_t` a centered difference between neighboring snapshots.
pub fn difference_quotient_check(
    snapshots: &[FlowState],
    shifts: &[usize],
    params: &KernelClassParams,
    a: f64,
    tol: f64,
    gamma: f64,
) -> Result<QuotientReport> {
    params.validate()?;
    if snapshots.len() < 3 {
        return Err(Error::InsufficientSnapshots(format!(
            "need at least 3 snapshots for centered time differences, got {}",
            snapshots.len()
        )));
    }
    let first = &snapshots[0].f;
    let (n, period, dx) = (first.len(), first.period(), first.dx());
    let t_end = snapshots.last().map(|s| s.t).unwrap_or(0.0);
    let mut rows = Vec::new();
    let mut fitted_gamma = Vec::new();
    let mut normalized_holder = Vec::new();
    for &shift in shifts {
        if shift == 0 || shift >= n {
            return Err(Error::InvalidParameter {
                name: "shift",
                reason: format!("need 0 < shift < {n}, got {shift}"),
            });
        }
        let h = shift as f64 * dx;
        let quotient = |s: &FlowState| -> Vec<f64> {
            let f = s.f.samples();
            (0..n).map(|i| (f[(i + shift) % n] - f[i]) / h).collect()
        };
        let v: Vec<Vec<f64>> = snapshots.iter().map(quotient).collect();
        let holder: Vec<f64> = v
            .iter()
            .map(|vk| pairwise_seminorm(vk, period, SeminormKind::Holder { gamma }).value)
            .collect();
        for k in 1..snapshots.len() - 1 {
            let dt = snapshots[k + 1].t - snapshots[k - 1].t;
            let mp = extremal(&v[k], period, params, Extremal::Plus);
            let mm = extremal(&v[k], period, params, Extremal::Minus);
            let mut sub = 0usize;
            let mut sup = 0usize;
            for i in 0..n {
                let vt = (v[k + 1][i] - v[k - 1][i]) / dt;
                if vt - mp[i] <= a + tol {
                    sub += 1;
                }
                if vt - mm[i] >= -a - tol {
                    sup += 1;
                }
            }
            rows.push(QuotientRow {
                t: snapshots[k].t,
                shift,
                h,
                frac_sub_ok: sub as f64 / n as f64,
                frac_super_ok: sup as f64 / n as f64,
                holder_seminorm: holder[k],
            });
        }
        let at = |t: f64| -> usize {
            snapshots
                .iter()
                .enumerate()
                .min_by(|x, y| (x.1.t - t).abs().total_cmp(&(y.1.t - t).abs()))
                .map(|p| p.0)
                .unwrap_or(0)
        };
        let (late, mid) = (holder[at(t_end)], holder[at(0.5 * t_end)]);
        fitted_gamma.push(if late > 0.0 && mid > 0.0 { (mid / late).log2() } else { f64::NAN });
        let norm = snapshots
            .iter()
            .zip(&v)
            .zip(&holder)
            .filter(|((s, _), _)| s.t >= 0.5 * t_end && s.t > 0.0)
            .map(|((s, vk), hk)| {
                let sup = vk.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                s.t.powf(gamma) * hk / (sup + s.t * a)
            })
            .fold(0.0f64, f64::max);
        normalized_holder.push(norm);
    }
    let min_fraction = rows
        .iter()
        .map(|r| r.frac_sub_ok.min(r.frac_super_ok))
        .fold(1.0f64, f64::min);
    Ok(QuotientReport {
        rows,
        gamma,
        a,
        tol,
        min_fraction,
        fitted_gamma,
        normalized_holder,
    })
}
