//! One function per verification. Each returns an [`Outcome`] with a one-line summary,
//! a JSON detail record and the CSV tables it produced. Parameter defaults are the
//! acceptance settings.

use crate::table::{num, Table};
use anyhow::{ensure, Context, Result};
use helegraph::elliptic::{
    greens_function, greens_ratio_check, harmonic_decay_check, solve_bulk, solve_phase, Phase, SolverBackend,
    SolverConfig, TransformedProblem,
};
use helegraph::evolution::DiagRecord;
use helegraph::parabolic::{
    difference_quotient_check, extremal, scaling_check, Extremal, Kernel, KernelClassParams, LinearMember,
};
use helegraph::probe::{
    bump_sandwich_test, constant_shift_test, decay_test, gcp_test, kernel_bump, kernel_ladder, probe_drift,
    probe_kernel, rotation_estimate_test, symbol_check, BumpSpec, ExtractedKernel, GcpConfig, ProbeConfig,
};
use helegraph::{
    evolve, BoundaryLaw, BulkConfig, ClassKParams, DiniModulus, EvolutionConfig, GradientBackend, GraphInterface,
    HeleShawOperator, LawKind, Spd2, Trajectory,
};
use helegraph_whitney::{run_suite, SuiteConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::f64::consts::{E, PI};
use std::sync::Arc;

#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub name: String,
    pub pass: bool,
    pub summary: String,
    pub detail: Value,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Outcome {
    fn new(name: &str, pass: bool, summary: String, detail: Value) -> Self {
        Self {
            name: name.into(),
            pass,
            summary,
            detail,
            tables: Vec::new(),
        }
    }

    fn with_table(mut self, t: Table) -> Self {
        self.tables.push(t);
        self
    }

    pub fn line(&self) -> String {
        format!("{} {} {}", if self.pass { "PASS" } else { "FAIL" }, self.name, self.summary)
    }
}

fn operator(law: BoundaryLaw, ny: usize, tol: f64) -> HeleShawOperator {
    let mut bulk = BulkConfig::new(ny);
    bulk.solver.tol = tol;
    HeleShawOperator::new(law, bulk)
}

fn law_name(law: &BoundaryLaw) -> &'static str {
    match law.kind {
        LawKind::OnePhaseIdentity => "one_phase",
        LawKind::Difference => "difference",
        LawKind::Table(_) => "table",
    }
}

fn worst(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(0.0, f64::max)
}

// ---------------------------------------------------------------- evolution

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum Initial {
    Flat { height: f64 },
    Cosine { mean: f64, amplitude: f64, mode: f64 },
    /// `mean + ∫ amplitude sign(sin x) / ln(e + 1/|sin x|)^power`: the slope has a
    /// jump at every zero of `sin` smoothed only by a logarithm.
    BarelyDini { mean: f64, amplitude: f64, power: f64 },
}

impl Initial {
    pub fn build(&self, n: usize, period: f64, strip_height: f64) -> Result<GraphInterface> {
        let f = match *self {
            Initial::Flat { height } => GraphInterface::new(vec![height; n], period, strip_height)?,
            Initial::Cosine { mean, amplitude, mode } => {
                GraphInterface::from_fn(n, period, strip_height, |x| mean + amplitude * (mode * x).cos())?
            }
            Initial::BarelyDini { mean, amplitude, power } => {
                let w = 2.0 * PI / period;
                let slope: Vec<f64> = (0..n)
                    .map(|j| {
                        let s = (w * j as f64 * period / n as f64).sin();
                        if s == 0.0 {
                            0.0
                        } else {
                            amplitude * s.signum() / (E + 1.0 / s.abs()).ln().powf(power)
                        }
                    })
                    .collect();
                let g = helegraph::spectral::antiderivative(&slope, period);
                GraphInterface::new(g.iter().map(|v| mean + v).collect(), period, strip_height)?
            }
        };
        Ok(f)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveParams {
    pub nx: usize,
    pub ny: usize,
    pub period: f64,
    pub strip_height: f64,
    pub law: BoundaryLaw,
    pub initial: Initial,
    pub delta: f64,
    pub lip_bound: f64,
    pub modulus: DiniModulus,
    pub t_end: f64,
    pub cadence: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub gammas: Vec<f64>,
    pub solver_tol: f64,
    pub backend: GradientBackend,
    /// Relative tolerance against the planar solution `sqrt(c^2 + 2t)`.
    pub planar_tol: f64,
    /// Largest `|f - L/2|` accepted for the two-phase equilibrium.
    pub equilibrium_tol: f64,
}

impl Default for EvolveParams {
    fn default() -> Self {
        Self {
            nx: 128,
            ny: 128,
            period: 2.0 * PI,
            strip_height: 2.0,
            law: BoundaryLaw::one_phase(),
            initial: Initial::Flat { height: 1.0 },
            delta: 0.2,
            lip_bound: 1.0,
            modulus: DiniModulus::Holder { beta: 0.5 },
            t_end: 0.5,
            cadence: 0.05,
            cfl: 0.5,
            dt_max: 1e-2,
            gammas: vec![0.1, 0.25, 0.5],
            solver_tol: 1e-10,
            backend: GradientBackend::Spectral,
            planar_tol: 1e-3,
            equilibrium_tol: 1e-6,
        }
    }
}

impl EvolveParams {
    pub fn equilibrium() -> Self {
        Self {
            nx: 64,
            ny: 64,
            law: BoundaryLaw::difference(Spd2::IDENTITY),
            t_end: 1.0,
            cadence: 0.1,
            ..Self::default()
        }
    }

    pub fn barely_dini() -> Self {
        Self {
            nx: 128,
            ny: 64,
            initial: Initial::BarelyDini {
                mean: 1.0,
                amplitude: 0.3,
                power: 1.5,
            },
            modulus: DiniModulus::Log { power: 1.5 },
            t_end: 0.4,
            cadence: 0.02,
            gammas: vec![0.1],
            ..Self::default()
        }
    }

    pub fn class(&self) -> ClassKParams {
        ClassKParams {
            delta: self.delta,
            strip_height: self.strip_height,
            lip_bound: self.lip_bound,
            modulus: self.modulus,
        }
    }

    pub fn operator(&self) -> HeleShawOperator {
        let mut op = operator(self.law.clone(), self.ny, self.solver_tol);
        op.bulk.backend = self.backend;
        op
    }

    pub fn config(&self) -> EvolutionConfig {
        let mut cfg = EvolutionConfig::new(self.class());
        cfg.cfl = self.cfl;
        cfg.dt_max = self.dt_max;
        cfg.gammas = self.gammas.clone();
        cfg
    }

    pub fn run(&self, f0: GraphInterface) -> Result<Trajectory> {
        Ok(evolve(f0, &self.operator(), &self.config(), self.t_end, self.cadence)?)
    }
}

/// `t,min_f,max_f,lip,holder_g1,...` for every accepted step.
pub fn trajectory_table(diagnostics: &[DiagRecord], gammas: usize) -> Table {
    let mut cols: Vec<String> = ["t", "min_f", "max_f", "lip"].iter().map(|s| s.to_string()).collect();
    cols.extend((1..=gammas).map(|k| format!("holder_g{k}")));
    let mut t = Table::new("trajectory", cols);
    for d in diagnostics {
        let mut row = vec![num(d.t), num(d.min_f), num(d.max_f), num(d.lip)];
        row.extend(d.holder.iter().map(|&h| num(h)));
        t.push(row);
    }
    t
}

/// Runs the flow and checks it against the closed form it has, if any: the planar
/// solution for a flat one-phase start, the equilibrium for a flat two-phase start at
/// mid-height with the difference law.
///
/// A resumed run starts from `f0` at time `t0` and stops at `p.t_end`; reported times
/// are absolute.
pub fn evolution(p: &EvolveParams, f0: GraphInterface, t0: f64) -> Result<(Outcome, Trajectory)> {
    ensure!(p.t_end > t0, "t_end = {} is not after the start time {t0}", p.t_end);
    let flat = f0.samples().iter().all(|&v| v == f0.samples()[0]);
    let c = f0.samples()[0];
    let mut tr = evolve(f0, &p.operator(), &p.config(), p.t_end - t0, p.cadence)?;
    for s in &mut tr.snapshots {
        s.t += t0;
        s.diagnostics.iter_mut().for_each(|d| d.t += t0);
    }
    tr.diagnostics.iter_mut().for_each(|d| d.t += t0);
    tr.report.final_t += t0;
    let last = tr.snapshots.last().context("trajectory has a final state")?;
    let table = trajectory_table(&tr.diagnostics, p.gammas.len());
    let base = json!({
        "law": law_name(&p.law),
        "nx": p.nx,
        "ny": p.ny,
        "t_end": last.t,
        "steps": tr.report.steps,
        "report": tr.report,
    });
    let out = match (&p.law.kind, flat) {
        (LawKind::OnePhaseIdentity, true) => {
            let exact = (c * c + 2.0 * (last.t - t0)).sqrt();
            let err = worst(last.f.samples().iter().map(|v| ((v - exact) / exact).abs()));
            let mut detail = base;
            detail["planar_exact"] = json!(exact);
            detail["planar_rel_error"] = json!(err);
            Outcome::new(
                "planar",
                err <= p.planar_tol,
                format!("rel error {err:.3e} <= {:.0e} at T = {:.6}", p.planar_tol, last.t),
                detail,
            )
        }
        (LawKind::Difference, true) if (c - 0.5 * p.strip_height).abs() < 1e-12 && p.law.a2 == Spd2::IDENTITY => {
            let dev = worst(tr.diagnostics.iter().map(|d| (d.max_f - c).abs().max((d.min_f - c).abs())));
            let mut detail = base;
            detail["equilibrium_deviation"] = json!(dev);
            Outcome::new(
                "equilibrium",
                dev <= p.equilibrium_tol,
                format!("max |f - {c}| = {dev:.3e} <= {:.0e} over [0, {:.6}]", p.equilibrium_tol, last.t),
                detail,
            )
        }
        _ => Outcome::new(
            "evolve",
            true,
            format!("reached T = {:.6} in {} steps", last.t, tr.report.steps),
            base,
        ),
    };
    Ok((out.with_table(table), tr))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularityParams {
    pub evolve: EvolveParams,
    /// Relative slack when reading "non-increasing" between consecutive snapshots.
    pub monotone_slack: f64,
}

impl Default for RegularityParams {
    fn default() -> Self {
        Self {
            evolve: EvolveParams::barely_dini(),
            monotone_slack: 1e-9,
        }
    }
}

/// Hölder seminorm of `f'` after a rough start: finite, non-increasing in trend over
/// `[T/2, T]`, and a positive fitted decay exponent of `|f'|_inf + [f']_gamma`.
pub fn regularity(p: &RegularityParams) -> Result<Outcome> {
    let e = &p.evolve;
    let f0 = e.initial.build(e.nx, e.period, e.strip_height)?;
    let tr = e.run(f0)?;
    let holder: Vec<f64> = tr
        .snapshots
        .iter()
        .map(|s| s.diagnostics.back().map_or(f64::NAN, |d| d.holder[0]))
        .collect();
    let r = &tr.report;
    let finite = r.late_holder[0].is_finite();
    let slope = r.late_holder_slope[0];
    let g_hat = r.norm_exponent[0];
    let monotone = holder.windows(2).all(|w| w[1] <= w[0] * (1.0 + p.monotone_slack));
    let pass = finite && slope <= 0.0 && g_hat > 0.0;
    let mut t = Table::new("holder", vec!["t".into(), "holder_g1".into()]);
    for (s, h) in tr.snapshots.iter().zip(&holder) {
        t.push(vec![num(s.t), num(*h)]);
    }
    Ok(Outcome::new(
        "regularity",
        pass,
        format!(
            "gamma {}: late [f']_C^g {:.4} slope {:.3e}, fitted exponent {:.3}",
            r.gammas[0], r.late_holder[0], slope, g_hat
        ),
        json!({
            "report": r,
            "snapshot_holder": holder,
            "monotone_between_snapshots": monotone,
        }),
    )
    .with_table(trajectory_table(&tr.diagnostics, e.gammas.len()))
    .with_table(t))
}

// ---------------------------------------------------------------- probes

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolParams {
    pub n: usize,
    pub ny: usize,
    pub height: f64,
    pub strip_height: f64,
    pub period: f64,
    pub xi: Vec<f64>,
    pub two_phase: bool,
    pub rel_tol: f64,
    pub probe: ProbeConfig,
}

impl Default for SymbolParams {
    fn default() -> Self {
        Self {
            n: 256,
            ny: 128,
            height: 1.0,
            strip_height: 2.0,
            period: 2.0 * PI,
            xi: vec![1.0, 2.0, 4.0, 8.0],
            two_phase: false,
            rel_tol: 0.01,
            probe: ProbeConfig::default(),
        }
    }
}

pub fn symbol(p: &SymbolParams) -> Result<Outcome> {
    let law = if p.two_phase {
        BoundaryLaw::difference(Spd2::IDENTITY)
    } else {
        BoundaryLaw::one_phase()
    };
    let op = operator(law, p.ny, 1e-12);
    let rows = symbol_check(&op, p.height, p.strip_height, p.period, p.n, &p.xi, &p.probe)?;
    let err = worst(rows.iter().map(|r| r.rel_error));
    let mut t = Table::new("symbol", ["xi", "measured", "oracle", "rel_error"].map(String::from).to_vec());
    for r in &rows {
        t.push(vec![num(r.xi), num(r.measured), num(r.oracle), num(r.rel_error)]);
    }
    Ok(Outcome::new(
        "symbol",
        err <= p.rel_tol,
        format!("{} modes, max rel error {err:.3e} <= {}", rows.len(), p.rel_tol),
        json!({ "rows": rows }),
    )
    .with_table(t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KernelParams {
    pub n: usize,
    pub ny: usize,
    pub strip_height: f64,
    /// Curved state `1 + amplitude cos x`.
    pub amplitude: f64,
    pub delta: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub per_side: usize,
    /// Largest accepted `C` in `K h^2 ∈ [1/C, C]`.
    pub c_max: f64,
    /// Probe node on the curved state, as a fraction of the period.
    pub curved_x0: f64,
    pub drift_taus: Vec<f64>,
    pub drift_radii: Vec<f64>,
    pub probe: ProbeConfig,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self {
            n: 256,
            ny: 128,
            strip_height: 2.0,
            amplitude: 0.2,
            delta: 0.2,
            h_min: 0.1,
            h_max: 2.5,
            per_side: 10,
            c_max: 20.0,
            curved_x0: 0.125,
            drift_taus: vec![0.05, 0.1],
            drift_radii: vec![0.2, 0.4, 0.8, 1.6, 2.0],
            probe: ProbeConfig::default(),
        }
    }
}

impl KernelParams {
    /// `[h_min, min(P/4, 5 delta)]`.
    pub fn fit_range(&self) -> (f64, f64) {
        (self.h_min, (0.5 * PI).min(5.0 * self.delta))
    }

    fn states(&self) -> Result<Vec<(&'static str, GraphInterface, usize)>> {
        let period = 2.0 * PI;
        let flat = GraphInterface::new(vec![1.0; self.n], period, self.strip_height)?;
        let a = self.amplitude;
        let curved = GraphInterface::from_fn(self.n, period, self.strip_height, |x| 1.0 + a * x.cos())?;
        let x0 = (self.curved_x0 * self.n as f64).round() as usize % self.n;
        Ok(vec![("flat", flat, 0), ("curved", curved, x0)])
    }

    fn extract(&self, f: &GraphInterface, x0: usize) -> Result<ExtractedKernel> {
        let op = operator(BoundaryLaw::one_phase(), self.ny, 1e-12);
        let bumps: Vec<BumpSpec> = kernel_ladder(self.h_min, self.h_max, self.per_side)
            .into_iter()
            .map(|h| kernel_bump(h, f.dx(), f.period()))
            .collect();
        let cfg = ProbeConfig { x0, ..self.probe };
        Ok(probe_kernel(f, &op, &bumps, self.fit_range(), 1.0, &cfg)?)
    }
}

/// `K > 0` and `K h^2 ∈ [1/C, C]` with `C <= c_max` on a flat and a curved state.
pub fn kernel(p: &KernelParams) -> Result<Outcome> {
    let mut t = Table::new("kernel", ["state", "x0", "h", "k", "k_h2", "defect"].map(String::from).to_vec());
    let mut consts = Vec::new();
    let mut positive = true;
    let mut states = Vec::new();
    for (name, f, x0) in p.states()? {
        let k = p.extract(&f, x0)?;
        for i in 0..k.h_samples.len() {
            let h = k.h_samples[i];
            t.push(vec![
                name.into(),
                x0.to_string(),
                num(h),
                num(k.k_values[i]),
                num(k.k_values[i] * h * h),
                num(k.defects[i]),
            ]);
        }
        positive &= k.k_values.iter().all(|v| *v > 0.0);
        consts.push(k.sandwich_constant());
        states.push(json!({ "state": name, "x0": x0, "kernel": k }));
    }
    let c = consts.iter().copied().fold(0.0, f64::max);
    let pass = positive && c.is_finite() && c <= p.c_max;
    let (lo, hi) = p.fit_range();
    Ok(Outcome::new(
        "kernel",
        pass,
        format!("K > 0: {positive}, C = {c:.3} <= {} over [{lo}, {hi}]", p.c_max),
        json!({ "constant": c, "fit_range": [lo, hi], "states": states }),
    )
    .with_table(t))
}

/// Odd probes on the curved state away from its symmetry points, with the kernel
/// extracted there used to compensate the drift over the radii.
pub fn drift(p: &KernelParams) -> Result<Outcome> {
    let (_, f, x0) = p.states()?.pop().context("curved state")?;
    let k = p.extract(&f, x0)?;
    let op = operator(BoundaryLaw::one_phase(), p.ny, 1e-12);
    let cfg = ProbeConfig { x0, ..p.probe };
    let r = probe_drift(&f, &op, &p.drift_taus, &p.drift_radii, Some(&k), &cfg)?;
    let radii: Vec<f64> = r.compensated.iter().map(|c| c.r).collect();
    let span = radii.iter().copied().fold(0.0, f64::max) / radii.iter().copied().fold(f64::INFINITY, f64::min);
    let bounded = r.constant.is_finite() && r.compensation_spread.is_finite();
    let pass = bounded && span >= 10.0 * (1.0 - 1e-12);
    let mut t = Table::new("drift", ["r", "compensated"].map(String::from).to_vec());
    for c in &r.compensated {
        t.push(vec![num(c.r), num(c.compensated)]);
    }
    Ok(Outcome::new(
        "drift",
        pass,
        format!(
            "x0 = {x0}: |ell|/tau <= {:.4}, compensated drift spread {:.4} over r in [{}, {}]",
            r.constant,
            r.compensation_spread,
            radii.first().copied().unwrap_or(f64::NAN),
            radii.last().copied().unwrap_or(f64::NAN)
        ),
        json!({ "x0": x0, "report": r, "radius_span": span }),
    )
    .with_table(t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandwichParams {
    pub n: usize,
    pub ny: usize,
    pub amplitude: f64,
    pub centers: Vec<f64>,
    pub width: f64,
    pub height: f64,
    pub r0: f64,
    pub alpha: f64,
}

impl Default for SandwichParams {
    fn default() -> Self {
        Self {
            n: 256,
            ny: 128,
            amplitude: 0.2,
            centers: vec![0.3, 0.5, -0.7, 1.0],
            width: 0.2,
            height: 0.05,
            r0: 1.0,
            alpha: 1.0,
        }
    }
}

pub fn sandwich(p: &SandwichParams) -> Result<Outcome> {
    let op = operator(BoundaryLaw::one_phase(), p.ny, 1e-12);
    let a = p.amplitude;
    let states = [
        ("flat", GraphInterface::new(vec![1.0; p.n], 2.0 * PI, 2.0)?),
        ("curved", GraphInterface::from_fn(p.n, 2.0 * PI, 2.0, |x| 1.0 + a * x.cos())?),
    ];
    let bumps: Vec<BumpSpec> = p.centers.iter().map(|&c| BumpSpec::new(c, p.width, p.height)).collect();
    let mut t = Table::new(
        "sandwich",
        ["state", "center", "difference", "integral", "lower_ratio", "upper_ratio"].map(String::from).to_vec(),
    );
    let mut pass = true;
    let mut consts = Vec::new();
    let mut reports = Vec::new();
    for (name, f) in &states {
        let r = bump_sandwich_test(f, &op, &bumps, p.r0, p.alpha, 0)?;
        for row in &r.rows {
            t.push(vec![
                name.to_string(),
                num(row.bump.center),
                num(row.difference),
                num(row.integral),
                num(row.lower_ratio),
                num(row.upper_ratio),
            ]);
        }
        pass &= r.pass && r.constant.is_finite();
        consts.push(r.constant);
        reports.push(json!({ "state": name, "report": r }));
    }
    Ok(Outcome::new(
        "sandwich",
        pass,
        format!("constants {:.3} (flat), {:.3} (curved)", consts[0], consts[1]),
        json!({ "states": reports }),
    )
    .with_table(t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShiftParams {
    pub n: usize,
    pub ny: usize,
    pub eps: Vec<f64>,
    pub amplitude: f64,
    pub tol: f64,
    /// Largest accepted `|i+(c + eps) - 1/(c + eps)|` on the flat state.
    pub flat_tol: f64,
}

impl Default for ShiftParams {
    fn default() -> Self {
        Self {
            n: 64,
            ny: 64,
            eps: vec![0.01, 0.05],
            amplitude: 0.2,
            tol: 1e-9,
            flat_tol: 1e-8,
        }
    }
}

pub fn shift(p: &ShiftParams) -> Result<Outcome> {
    let op = operator(BoundaryLaw::one_phase(), p.ny, 1e-12);
    let a = p.amplitude;
    let flat = GraphInterface::new(vec![1.0; p.n], 2.0 * PI, 2.0)?;
    let curved = GraphInterface::from_fn(2 * p.n, 2.0 * PI, 2.0, |x| 1.0 + a * x.cos())?;
    let rf = constant_shift_test(&flat, &op, &p.eps, 0.5, p.tol)?;
    let rc = constant_shift_test(&curved, &op, &p.eps, 0.6, p.tol)?;
    let flat_err = worst(rf.rows.iter().map(|r| r.flat_error.unwrap_or(f64::INFINITY)));
    let pass = rf.pass && rc.pass && flat_err <= p.flat_tol && rc.constant.is_finite();
    let mut t = Table::new(
        "shift",
        ["state", "eps", "c_plus", "c_minus", "plus_monotone", "minus_monotone"].map(String::from).to_vec(),
    );
    for (name, r) in [("flat", &rf), ("curved", &rc)] {
        for row in &r.rows {
            t.push(vec![
                name.into(),
                num(row.eps),
                num(row.c_plus),
                num(row.c_minus),
                row.plus_monotone.to_string(),
                row.minus_monotone.to_string(),
            ]);
        }
    }
    Ok(Outcome::new(
        "shift",
        pass,
        format!(
            "flat |i+ - 1/(c+eps)| = {flat_err:.3e} <= {:.0e}, constants {:.4} (flat), {:.4} (curved)",
            p.flat_tol, rf.constant, rc.constant
        ),
        json!({ "flat": rf, "curved": rc, "flat_error": flat_err }),
    )
    .with_table(t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RotationParams {
    pub n: usize,
    pub ny: usize,
    pub amplitude: f64,
    pub tilts: Vec<f64>,
    pub x0: usize,
}

impl Default for RotationParams {
    fn default() -> Self {
        Self {
            n: 128,
            ny: 64,
            amplitude: 0.2,
            tilts: vec![0.0, 0.01, 0.02],
            x0: 5,
        }
    }
}

pub fn rotation(p: &RotationParams) -> Result<Outcome> {
    let op = operator(BoundaryLaw::one_phase(), p.ny, 1e-12);
    let a = p.amplitude;
    let f = GraphInterface::from_fn(p.n, 2.0 * PI, 2.0, |x| 1.0 + a * x.cos())?;
    let r = rotation_estimate_test(&f, &op, &p.tilts, p.x0)?;
    let mut t = Table::new(
        "rotation",
        ["tilt", "difference", "grad_psi", "eps2", "sup_psi", "ratio"].map(String::from).to_vec(),
    );
    for row in &r.rows {
        t.push(vec![
            num(row.tilt),
            num(row.difference),
            num(row.grad_psi),
            num(row.eps2),
            num(row.sup_psi),
            num(row.ratio),
        ]);
    }
    Ok(Outcome::new(
        "rotation",
        r.pass && r.constant.is_finite(),
        format!("constant {:.4} over {} tilts", r.constant, r.rows.len()),
        json!({ "report": r }),
    )
    .with_table(t))
}

// ---------------------------------------------------------------- comparison and decay

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GcpParams {
    pub pairs: usize,
    pub n: usize,
    pub ny: usize,
    pub solver_tol: f64,
    pub tol_factor: f64,
}

impl Default for GcpParams {
    fn default() -> Self {
        Self {
            pairs: 100,
            n: 64,
            ny: 32,
            solver_tol: 1e-12,
            tol_factor: 10.0,
        }
    }
}

pub fn gcp(p: &GcpParams, seed: u64) -> Result<Outcome> {
    let op = operator(BoundaryLaw::one_phase(), p.ny, p.solver_tol);
    let cfg = GcpConfig {
        tol_factor: p.tol_factor,
        ..GcpConfig::new(p.n, 2.0 * PI, 2.0)
    };
    let r = gcp_test(seed, &op, p.pairs, &cfg)?;
    let mut bad: Vec<usize> = r.violations.iter().map(|v| v.pair).collect();
    bad.dedup();
    let ok = r.pairs - bad.len();
    let mut t = Table::new("gcp", ["pair", "node", "deficit"].map(String::from).to_vec());
    for v in &r.violations {
        t.push(vec![v.pair.to_string(), v.node.to_string(), num(v.deficit)]);
    }
    Ok(Outcome::new("gcp", r.pass(), format!("{ok}/{}", r.pairs), json!({ "report": r })).with_table(t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayParams {
    pub n: usize,
    pub ny: usize,
    pub period: f64,
    pub strip_height: f64,
    pub base: f64,
    pub wave_amplitude: f64,
    /// Bump height, kept small so the response stays linear.
    pub amplitude: f64,
    /// Radii as fractions of the period.
    pub radii: Vec<f64>,
}

impl Default for DecayParams {
    fn default() -> Self {
        Self {
            n: 256,
            ny: 64,
            period: 16.0 * PI,
            strip_height: 16.0,
            base: 10.0,
            wave_amplitude: 1.0,
            amplitude: 0.02,
            radii: vec![1.0 / 32.0, 1.0 / 16.0, 1.0 / 8.0],
        }
    }
}

pub fn decay(p: &DecayParams) -> Result<Outcome> {
    let op = operator(BoundaryLaw::one_phase(), p.ny, 1e-12);
    let w = 2.0 * PI / p.period;
    let (b, a) = (p.base, p.wave_amplitude);
    let f = GraphInterface::from_fn(p.n, p.period, p.strip_height, |x| b + a * (w * x).cos())?;
    let radii: Vec<f64> = p.radii.iter().map(|r| r * p.period).collect();
    let r = decay_test(&f, &op, &radii, p.amplitude, 0)?;
    let mut t = Table::new("decay", ["radius", "far", "near"].map(String::from).to_vec());
    for row in &r.rows {
        t.push(vec![num(row.radius), num(row.far), num(row.near)]);
    }
    Ok(Outcome::new(
        "decay",
        r.pass,
        format!("alpha = {:.3} over R = {:?}", r.alpha, radii.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>()),
        json!({ "report": r }),
    )
    .with_table(t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreensParams {
    pub n: usize,
    pub amplitude: f64,
    /// Flattened pole nodes `(i, j)`.
    pub poles: Vec<(usize, usize)>,
    pub c_max: f64,
    pub radii: Vec<f64>,
    /// Ladder `s = 4 dy 2^(k/3)`, `k = 0..=ladder_steps`.
    pub ladder_steps: usize,
    pub spread_tol: f64,
    pub solver_tol: f64,
}

impl Default for GreensParams {
    fn default() -> Self {
        Self {
            n: 256,
            amplitude: 0.2,
            poles: vec![(0, 252), (64, 250), (128, 4)],
            c_max: 50.0,
            radii: vec![0.25, 0.5, 1.0],
            ladder_steps: 6,
            spread_tol: 0.1,
            solver_tol: 1e-12,
        }
    }
}

/// Green's ratio bounds and the linear growth of far harmonic measures, on a flat and a
/// curved plus phase.
pub fn greens(p: &GreensParams) -> Result<Outcome> {
    let mut cfg = BulkConfig::new(p.n);
    cfg.solver.tol = p.solver_tol;
    let a = p.amplitude;
    let states = [
        ("flat", GraphInterface::new(vec![1.0; p.n], 2.0 * PI, 2.0)?),
        ("curved", GraphInterface::from_fn(p.n, 2.0 * PI, 2.0, |x| 1.0 + a * x.cos())?),
    ];
    let dy = 1.0 / p.n as f64;
    let ladder: Vec<f64> = (0..=p.ladder_steps).map(|k| 4.0 * dy * (k as f64 / 3.0).exp2()).collect();
    let mut t = Table::new(
        "greens",
        ["state", "pole_i", "pole_j", "node_i", "node_j", "distance", "ratio"].map(String::from).to_vec(),
    );
    let mut c = 0.0f64;
    let mut spread = 0.0f64;
    let mut alphas = Vec::new();
    let mut details = Vec::new();
    for (name, f) in &states {
        let g = greens_ratio_check(f, &p.poles, Phase::Plus, Spd2::IDENTITY, &cfg)?;
        for row in &g.rows {
            t.push(vec![
                name.to_string(),
                row.pole.0.to_string(),
                row.pole.1.to_string(),
                row.node.0.to_string(),
                row.node.1.to_string(),
                num(row.distance),
                num(row.ratio),
            ]);
        }
        let h = harmonic_decay_check(f, 0, &p.radii, &ladder, Phase::Plus, Spd2::IDENTITY, &cfg)?;
        c = c.max(g.constant);
        spread = spread.max(h.max_spread);
        alphas.push(h.alpha);
        details.push(json!({
            "state": name,
            "greens": { "lower": g.lower, "upper": g.upper, "constant": g.constant, "rows": g.rows.len() },
            "harmonic": h,
        }));
    }
    let pass = c <= p.c_max && spread <= p.spread_tol && alphas.iter().all(|a| *a > 0.0);
    Ok(Outcome::new(
        "greens",
        pass,
        format!(
            "C = {c:.3} <= {} at {}^2, W/s spread {:.2}% <= {}%, alpha {:.3} (flat), {:.3} (curved)",
            p.c_max,
            p.n,
            100.0 * spread,
            100.0 * p.spread_tol,
            alphas[0],
            alphas[1]
        ),
        json!({ "constant": c, "max_spread": spread, "states": details }),
    )
    .with_table(t))
}

/// Green's function of the flat plus phase with its pole at `pole`, for the bulk CSV.
pub fn greens_bulk(p: &GreensParams, pole: (usize, usize)) -> Result<Table> {
    let mut cfg = BulkConfig::new(p.n);
    cfg.solver.tol = p.solver_tol;
    let f = GraphInterface::new(vec![1.0; p.n], 2.0 * PI, 2.0)?;
    let g = greens_function(&f, pole, Phase::Plus, Spd2::IDENTITY, &cfg)?;
    Ok(crate::table::bulk("bulk_greens", &g, "plus"))
}

// ---------------------------------------------------------------- whitney

pub fn whitney(cfg: &SuiteConfig) -> Result<Outcome> {
    let r = run_suite(cfg)?;
    let mut t = Table::new("whitney", ["item", "pass", "detail"].map(String::from).to_vec());
    for i in &r.items {
        t.push(vec![i.name.clone(), i.pass.to_string(), i.detail.clone()]);
    }
    Ok(Outcome::new(
        "whitney",
        r.pass(),
        format!("{}/{} properties", r.passed(), r.items.len()),
        serde_json::to_value(&r)?,
    )
    .with_table(t))
}

// ---------------------------------------------------------------- parabolic

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParabolicParams {
    pub members: usize,
    pub lambda: f64,
    pub r0: f64,
    pub n: usize,
    pub sandwich_tol: f64,
    pub scaling_n: usize,
    pub scaling_r: f64,
    pub scaling_tol: f64,
    /// Relaxation run for the difference quotients.
    pub relaxation: EvolveParams,
    pub quotient_lambda: f64,
    pub quotient_a: f64,
    pub quotient_tol: f64,
    pub shifts: Vec<usize>,
    pub gamma: f64,
    pub min_fraction: f64,
}

impl Default for ParabolicParams {
    fn default() -> Self {
        Self {
            members: 50,
            lambda: 2.5,
            r0: 1.0,
            n: 128,
            sandwich_tol: 1e-12,
            scaling_n: 512,
            scaling_r: 0.5,
            scaling_tol: 1e-4,
            relaxation: EvolveParams {
                nx: 64,
                ny: 32,
                law: BoundaryLaw::difference(Spd2::IDENTITY),
                initial: Initial::Cosine {
                    mean: 1.0,
                    amplitude: 0.1,
                    mode: 1.0,
                },
                t_end: 0.5,
                cadence: 0.01,
                gammas: vec![0.1],
                ..EvolveParams::default()
            },
            quotient_lambda: 4.0,
            quotient_a: 0.0,
            quotient_tol: 1e-9,
            shifts: vec![1, 4],
            gamma: 0.1,
            min_fraction: 0.95,
        }
    }
}

fn bump(x: f64) -> f64 {
    let y = (x + PI).rem_euclid(2.0 * PI) - PI;
    (-2.0 * y * y).exp()
}

/// Symmetric member `K(h) = a(|h|) / h^2` with `b = 0`, redrawn until the class checks pass.
fn symmetric_member(rng: &mut ChaCha8Rng, params: KernelClassParams) -> Result<LinearMember> {
    let scale = 0.45 * params.lambda.ln();
    let mut last = None;
    for _ in 0..32 {
        let s: f64 = rng.gen_range(-1.0..1.0);
        let w: f64 = rng.gen_range(0.5..8.0);
        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let kernel: Kernel = Arc::new(move |h: f64| (scale * s * (w * h.abs() + phi).cos()).exp() / (h * h));
        match LinearMember::new(0.0, kernel, params, PI) {
            Ok(m) => return Ok(m),
            Err(e) => last = Some(e),
        }
    }
    Err(last.context("no draw")?.into())
}

pub fn parabolic(p: &ParabolicParams, seed: u64) -> Result<Outcome> {
    ensure!(p.members >= 2, "parabolic.members must be at least 2");
    let params = KernelClassParams::new(p.lambda, p.r0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = p.n;
    let u: Vec<f64> = (0..n)
        .map(|j| {
            let x = j as f64 * 2.0 * PI / n as f64;
            bump(x) - 0.4 * (2.0 * x + 0.3).sin()
        })
        .collect();
    let plus = extremal(&u, 2.0 * PI, &params, Extremal::Plus);
    let minus = extremal(&u, 2.0 * PI, &params, Extremal::Minus);
    let mut members = Vec::new();
    for k in 0..p.members {
        let m = if k % 2 == 0 {
            symmetric_member(&mut rng, params)?
        } else {
            LinearMember::random(&mut rng, params, PI)?
        };
        members.push(m);
    }
    let mut sandwich_gap = f64::NEG_INFINITY;
    let mut t = Table::new("members", ["member", "b", "lower_gap", "upper_gap"].map(String::from).to_vec());
    for (k, m) in members.iter().enumerate() {
        let l = m.apply(&u, 2.0 * PI);
        let lo = (0..n).map(|i| minus[i] - l[i]).fold(f64::NEG_INFINITY, f64::max);
        let hi = (0..n).map(|i| l[i] - plus[i]).fold(f64::NEG_INFINITY, f64::max);
        sandwich_gap = sandwich_gap.max(lo).max(hi);
        t.push(vec![k.to_string(), num(m.b), num(lo), num(hi)]);
    }
    let sandwich_ok = sandwich_gap <= p.sandwich_tol;

    let probe = members.iter().take(4).cloned().collect::<Vec<_>>();
    let scaling = scaling_check(&bump, 2.0 * PI, p.scaling_n, p.scaling_r, &params, &probe)?;
    let scaling_ok = scaling.plus_error <= p.scaling_tol && scaling.minus_error <= p.scaling_tol && scaling.members_ok;

    let e = &p.relaxation;
    let f0 = e.initial.build(e.nx, e.period, e.strip_height)?;
    let tr = e.run(f0)?;
    let q = difference_quotient_check(
        &tr.snapshots,
        &p.shifts,
        &KernelClassParams::new(p.quotient_lambda, p.r0),
        p.quotient_a,
        p.quotient_tol,
        p.gamma,
    )?;
    let quotient_ok = q.min_fraction >= p.min_fraction;
    let mut residual = Table::new(
        "residual",
        ["t", "h", "frac_sub_ok", "frac_super_ok", "holder_seminorm"].map(String::from).to_vec(),
    );
    for row in &q.rows {
        residual.push(vec![
            num(row.t),
            num(row.h),
            num(row.frac_sub_ok),
            num(row.frac_super_ok),
            num(row.holder_seminorm),
        ]);
    }
    Ok(Outcome::new(
        "parabolic",
        sandwich_ok && scaling_ok && quotient_ok,
        format!(
            "sandwich on {} members (gap {:.1e}), scaling error {:.2e} <= {:.0e}, quotients {:.1}% >= {:.0}%",
            members.len(),
            sandwich_gap,
            scaling.plus_error.max(scaling.minus_error),
            p.scaling_tol,
            100.0 * q.min_fraction,
            100.0 * p.min_fraction
        ),
        json!({
            "sandwich_gap": sandwich_gap,
            "symmetric_members": members.iter().filter(|m| m.b == 0.0).count(),
            "scaling": scaling,
            "quotients": q,
        }),
    )
    .with_table(t)
    .with_table(residual))
}

// ---------------------------------------------------------------- elliptic

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipticParams {
    pub coarse: usize,
    pub fine: usize,
    pub ratio_range: (f64, f64),
    pub max_principle_tol: f64,
}

impl Default for EllipticParams {
    fn default() -> Self {
        Self {
            coarse: 64,
            fine: 128,
            ratio_range: (3.5, 4.5),
            max_principle_tol: 1e-12,
        }
    }
}

/// Max-norm error of the Laplacian on the flat unit strip against `sin x sinh y`.
fn manufactured_error(n: usize) -> Result<f64> {
    let exact = |x: f64, y: f64| x.sin() * y.sinh();
    let ones = vec![1.0; (n + 1) * n];
    let zeros = vec![0.0; (n + 1) * n];
    let p = TransformedProblem::from_coefficients(Phase::Plus, n, n, 2.0 * PI, ones.clone(), zeros, ones)?;
    let dx = p.dx();
    let bottom = (0..n).map(|i| exact(i as f64 * dx, 0.0)).collect();
    let top = (0..n).map(|i| exact(i as f64 * dx, 1.0)).collect();
    let cfg = SolverConfig {
        tol: 1e-13,
        ..Default::default()
    };
    let u = solve_bulk(&p.with_boundary(bottom, top), &cfg)?;
    let mut err = 0.0f64;
    for j in 0..=n {
        for i in 0..n {
            err = err.max((u.at(i, j) - exact(i as f64 * dx, j as f64 / n as f64)).abs());
        }
    }
    Ok(err)
}

/// Second-order convergence and the discrete maximum principle over a family of
/// interfaces, coefficients, phases and both solver backends.
pub fn elliptic(p: &EllipticParams) -> Result<Outcome> {
    let ec = manufactured_error(p.coarse)?;
    let ef = manufactured_error(p.fine)?;
    let ratio = ec / ef;
    let ratio_ok = (p.ratio_range.0..=p.ratio_range.1).contains(&ratio);
    let shapes: [(&str, fn(f64) -> f64); 3] = [
        ("flat", |_| 1.0),
        ("cosine", |x| 1.0 + 0.5 * x.cos()),
        ("mixed", |x| 0.9 + 0.3 * x.sin() + 0.15 * (3.0 * x).cos()),
    ];
    let coefficients = [Spd2::IDENTITY, Spd2 { a11: 2.0, a12: 0.5, a22: 1.0 }, Spd2::diag(1.0, 3.0)];
    let mut t = Table::new(
        "max_principle",
        ["shape", "a11", "a12", "a22", "phase", "backend", "violation"].map(String::from).to_vec(),
    );
    let mut violation = 0.0f64;
    let mut solves = 0;
    for (name, shape) in shapes {
        let f = GraphInterface::from_fn(p.coarse, 2.0 * PI, 2.0, shape)?;
        for a2 in coefficients {
            for phase in [Phase::Plus, Phase::Minus] {
                for backend in [SolverBackend::Pcg, SolverBackend::Direct] {
                    let mut cfg = BulkConfig::new(p.coarse / 2);
                    cfg.solver.backend = backend;
                    let u = solve_phase(&f, phase, a2, &cfg)?;
                    violation = violation.max(u.max_principle_violation);
                    solves += 1;
                    t.push(vec![
                        name.into(),
                        num(a2.a11),
                        num(a2.a12),
                        num(a2.a22),
                        format!("{phase:?}").to_lowercase(),
                        format!("{backend:?}").to_lowercase(),
                        num(u.max_principle_violation),
                    ]);
                }
            }
        }
    }
    let mp_ok = violation <= p.max_principle_tol;
    Ok(Outcome::new(
        "elliptic",
        ratio_ok && mp_ok,
        format!(
            "error ratio {}/{} = {ratio:.3} in [{}, {}], max principle violation {violation:.1e} over {solves} solves",
            p.coarse, p.fine, p.ratio_range.0, p.ratio_range.1
        ),
        json!({ "errors": [ec, ef], "ratio": ratio, "max_principle_violation": violation, "solves": solves }),
    )
    .with_table(t))
}
