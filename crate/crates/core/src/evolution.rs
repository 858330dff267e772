//! Explicit time stepping of `f_t = H(f)`.

use crate::dtn::{BoundaryLaw, HeleShawOperator, VelocityField};
use crate::error::{Error, Result};
use crate::interface::{class_k_check, ClassKParams, GraphInterface, SeminormKind};
use crate::quadrature::linear_fit;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

const RING: usize = 256;
const MAX_HALVINGS: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagRecord {
    pub t: f64,
    pub min_f: f64,
    pub max_f: f64,
    pub lip: f64,
    /// `[f']_{C^gamma}` for each configured exponent.
    pub holder: Vec<f64>,
    pub member: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FlowState {
    pub t: f64,
    pub f: GraphInterface,
    pub last_velocity: Option<VelocityField>,
    /// Most recent records; the full series lives in [`Trajectory`].
    pub diagnostics: VecDeque<DiagRecord>,
}

impl FlowState {
    pub fn new(f: GraphInterface, cfg: &EvolutionConfig) -> Self {
        let mut s = Self {
            t: 0.0,
            f,
            last_velocity: None,
            diagnostics: VecDeque::new(),
        };
        let rec = diagnose(&s.f, 0.0, cfg);
        s.diagnostics.push_back(rec);
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub cfl: f64,
    pub dt_max: f64,
    pub gammas: Vec<f64>,
    /// Steps are rejected when `f` comes within `delta / 2` of either wall.
    pub class: ClassKParams,
}

impl EvolutionConfig {
    pub fn new(class: ClassKParams) -> Self {
        Self {
            cfl: 0.5,
            dt_max: 1e-2,
            gammas: vec![0.1, 0.25, 0.5],
            class,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "cfl",
                reason: format!("must lie in (0, 1], got {}", self.cfl),
            });
        }
        if !(self.dt_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt_max",
                reason: format!("must be positive, got {}", self.dt_max),
            });
        }
        if self.gammas.iter().any(|g| !(*g > 0.0 && *g <= 1.0)) {
            return Err(Error::InvalidParameter {
                name: "gammas",
                reason: "exponents must lie in (0, 1]".into(),
            });
        }
        self.class.validate()
    }
}

/// Largest flat-strip symbol `xi coth(d xi) / d` over the resolved wavenumbers.
pub fn strip_symbol_max(d: f64, period: f64, n: usize) -> f64 {
    let xi = std::f64::consts::PI * n as f64 / period;
    xi / (d * (d * xi).tanh())
}

/// `cfl * dx / S`, capped at `dt_max`, with `S` the linearized speed bound of the
/// measured phase thicknesses.
pub fn cfl_dt(f: &GraphInterface, law: &BoundaryLaw, cfl: f64, dt_max: f64) -> f64 {
    let n = f.len();
    let mut s = strip_symbol_max(f.min(), f.period(), n);
    if law.two_phase() {
        s += strip_symbol_max(f.strip_height() - f.max(), f.period(), n) * law.a2.condition().sqrt();
    }
    (cfl * f.dx() / (law.big_lambda * s)).min(dt_max)
}

pub fn diagnose(f: &GraphInterface, t: f64, cfg: &EvolutionConfig) -> DiagRecord {
    let backend = crate::GradientBackend::Spectral;
    DiagRecord {
        t,
        min_f: f.min(),
        max_f: f.max(),
        lip: f.seminorm(SeminormKind::Lipschitz, backend).value,
        holder: cfg
            .gammas
            .iter()
            .map(|&gamma| f.seminorm(SeminormKind::Holder { gamma }, backend).value)
            .collect(),
        member: class_k_check(f, &cfg.class, backend).member,
    }
}

fn within_margin(f: &GraphInterface, k: &ClassKParams) -> bool {
    f.min() > 0.5 * k.delta && f.max() < f.strip_height() - 0.5 * k.delta
}

fn euler(f: &GraphInterface, v: &VelocityField, dt: f64) -> Result<GraphInterface> {
    f.perturbed(&v.values, dt)
}

/// One SSP-RK2 step; `dt` is halved up to eight times if a stage leaves the
/// margin or produces a non-finite velocity. Returns the new state and the step taken.
pub fn step(state: &FlowState, dt: f64, op: &HeleShawOperator, cfg: &EvolutionConfig) -> Result<(FlowState, f64)> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter {
            name: "dt",
            reason: format!("must be positive, got {dt}"),
        });
    }
    let v0 = op.velocity(&state.f)?;
    let mut h = dt;
    for _ in 0..=MAX_HALVINGS {
        if let Some(next) = try_stage(&state.f, &v0, h, op, cfg)? {
            let t = state.t + h;
            let mut diagnostics = state.diagnostics.clone();
            if diagnostics.len() == RING {
                diagnostics.pop_front();
            }
            diagnostics.push_back(diagnose(&next, t, cfg));
            return Ok((
                FlowState {
                    t,
                    f: next,
                    last_velocity: Some(v0),
                    diagnostics,
                },
                h,
            ));
        }
        h *= 0.5;
    }
    Err(Error::StepRejected {
        halvings: MAX_HALVINGS,
        t: state.t,
        last_state: Box::new(state.clone()),
    })
}

fn try_stage(
    f: &GraphInterface,
    v0: &VelocityField,
    h: f64,
    op: &HeleShawOperator,
    cfg: &EvolutionConfig,
) -> Result<Option<GraphInterface>> {
    if v0.values.iter().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    let Ok(f1) = euler(f, v0, h) else { return Ok(None) };
    if !within_margin(&f1, &cfg.class) {
        return Ok(None);
    }
    let v1 = match op.velocity(&f1) {
        Ok(v) => v,
        Err(Error::ClassViolation { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    if v1.values.iter().any(|v| !v.is_finite()) {
        return Ok(None);
    }
    let samples: Vec<f64> = (0..f.len())
        .map(|i| 0.5 * f.samples()[i] + 0.5 * (f1.samples()[i] + h * v1.values[i]))
        .collect();
    let Ok(f2) = f.with_samples(samples) else { return Ok(None) };
    Ok(within_margin(&f2, &cfg.class).then_some(f2))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvolutionReport {
    pub final_t: f64,
    pub steps: usize,
    pub gammas: Vec<f64>,
    /// Largest `[f']_{C^gamma}` over snapshots in `[T/2, T]`.
    pub late_holder: Vec<f64>,
    /// Least-squares slope of `[f']_{C^gamma}` against `t` on `[T/2, T]`.
    pub late_holder_slope: Vec<f64>,
    /// Fitted `g` in `|f'|_inf + [f']_{C^gamma} ~ t^(-g)` over snapshots with `t > 0`.
    pub norm_exponent: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Trajectory {
    pub snapshots: Vec<FlowState>,
    pub diagnostics: Vec<DiagRecord>,
    pub report: EvolutionReport,
}

/// Integrate to `t_end`, recording a snapshot every `cadence` time units (and at `t = 0`).
pub fn evolve(
    f0: GraphInterface,
    op: &HeleShawOperator,
    cfg: &EvolutionConfig,
    t_end: f64,
    cadence: f64,
) -> Result<Trajectory> {
    cfg.validate()?;
    let admission = class_k_check(&f0, &cfg.class, op.bulk.backend);
    if !admission.member && op.strict {
        return Err(Error::ClassViolation {
            violations: admission.violations,
        });
    }
    let mut state = FlowState::new(f0, cfg);
    let mut diagnostics = vec![state.diagnostics[0].clone()];
    let mut snapshots = vec![state.clone()];
    let mut next_out = cadence.min(t_end);
    let mut steps = 0;
    let eps = 1e-12 * t_end.max(1.0);
    while state.t < t_end - eps {
        let dt = cfl_dt(&state.f, &op.law, cfg.cfl, cfg.dt_max).min(next_out - state.t);
        let (next, _) = step(&state, dt, op, cfg)?;
        state = next;
        steps += 1;
        diagnostics.push(state.diagnostics.back().expect("record appended").clone());
        if state.t >= next_out - eps {
            snapshots.push(state.clone());
            next_out = (next_out + cadence).min(t_end);
        }
    }
    let report = report(&snapshots, cfg, steps);
    Ok(Trajectory {
        snapshots,
        diagnostics,
        report,
    })
}

fn report(snapshots: &[FlowState], cfg: &EvolutionConfig, steps: usize) -> EvolutionReport {
    let t_end = snapshots.last().map(|s| s.t).unwrap_or(0.0);
    let late: Vec<&FlowState> = snapshots.iter().filter(|s| s.t >= 0.5 * t_end - 1e-12).collect();
    let record = |s: &FlowState| s.diagnostics.back().expect("state has a record").clone();
    let mut late_holder = Vec::new();
    let mut late_holder_slope = Vec::new();
    let mut norm_exponent = Vec::new();
    for k in 0..cfg.gammas.len() {
        let ts: Vec<f64> = late.iter().map(|s| s.t).collect();
        let hs: Vec<f64> = late.iter().map(|s| record(s).holder[k]).collect();
        late_holder.push(hs.iter().copied().fold(0.0, f64::max));
        late_holder_slope.push(if ts.len() >= 2 { linear_fit(&ts, &hs).0 } else { 0.0 });
        let pos: Vec<&FlowState> = snapshots.iter().filter(|s| s.t > 0.0).collect();
        let lt: Vec<f64> = pos.iter().map(|s| s.t.ln()).collect();
        let ln: Vec<f64> = pos
            .iter()
            .map(|s| {
                let g = s.f.gradient(crate::GradientBackend::Spectral);
                let sup = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                (sup + record(s).holder[k]).ln()
            })
            .collect();
        norm_exponent.push(if lt.len() >= 2 { -linear_fit(&lt, &ln).0 } else { 0.0 });
    }
    EvolutionReport {
        final_t: t_end,
        steps,
        gammas: cfg.gammas.clone(),
        late_holder,
        late_holder_slope,
        norm_exponent,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elliptic::{BulkConfig, Spd2};
    use crate::interface::DiniModulus;
    use std::f64::consts::PI;

    const TWO_PI: f64 = 2.0 * PI;

    fn class() -> ClassKParams {
        ClassKParams {
            delta: 0.2,
            strip_height: 2.0,
            lip_bound: 1.0,
            modulus: DiniModulus::Holder { beta: 0.5 },
        }
    }

    fn flat(n: usize, c: f64) -> GraphInterface {
        GraphInterface::new(vec![c; n], TWO_PI, 2.0).unwrap()
    }

    #[test]
    fn cfl_examples() {
        let f = flat(64, 1.0);
        let law = BoundaryLaw::one_phase();
        let dt = cfl_dt(&f, &law, 0.5, 1.0);
        let xi = 32.0f64;
        let s = xi / xi.tanh();
        assert!((dt - 0.5 * f.dx() / s).abs() < 1e-15 && dt > 0.0);
        assert!((cfl_dt(&f, &law, 1.0, 1.0) - 2.0 * dt).abs() < 1e-15);
        assert_eq!(cfl_dt(&flat(8, 1.0), &law, 1.0, 1e-4), 1e-4);
    }

    #[test]
    fn equilibrium_is_stationary() {
        let op = HeleShawOperator::new(BoundaryLaw::difference(Spd2::IDENTITY), BulkConfig::new(16));
        let cfg = EvolutionConfig::new(class());
        let mut s = FlowState::new(flat(16, 1.0), &cfg);
        for _ in 0..5 {
            s = step(&s, 1e-2, &op, &cfg).unwrap().0;
        }
        assert!(s.f.samples().iter().all(|v| (v - 1.0).abs() < 1e-8));
        assert_eq!(s.diagnostics.len(), 6);
    }

    #[test]
    fn flat_one_phase_step_is_second_order() {
        let op = HeleShawOperator::new(BoundaryLaw::one_phase(), BulkConfig::new(16));
        let cfg = EvolutionConfig::new(class());
        let s = FlowState::new(flat(16, 1.0), &cfg);
        let dt = 1e-3;
        let (n, taken) = step(&s, dt, &op, &cfg).unwrap();
        assert_eq!(taken, dt);
        let exact = (1.0 + 2.0 * dt).sqrt();
        assert!(n.f.samples().iter().all(|v| (v - exact).abs() < dt * dt));
        assert!(n.f.samples().iter().all(|v| (v - (1.0 + dt)).abs() < dt * dt));
    }

    #[test]
    fn even_data_stays_even() {
        let op = HeleShawOperator::new(BoundaryLaw::difference(Spd2::IDENTITY), BulkConfig::new(24));
        let cfg = EvolutionConfig::new(class());
        let f = GraphInterface::from_fn(32, TWO_PI, 2.0, |x| 1.0 + 0.2 * x.cos() + 0.1 * (2.0 * x).cos()).unwrap();
        let mut s = FlowState::new(f, &cfg);
        for _ in 0..3 {
            s = step(&s, 2e-3, &op, &cfg).unwrap().0;
        }
        let v = s.f.samples();
        for i in 1..32 {
            assert!((v[i] - v[32 - i]).abs() < 1e-10);
        }
    }

    #[test]
    fn leaving_the_margin_halves_then_fails() {
        let op = HeleShawOperator::new(BoundaryLaw::one_phase(), BulkConfig::new(16)).warn_only();
        let cfg = EvolutionConfig::new(class());
        // flux 1/f is about 9; a huge step leaves the strip and is halved
        let s = FlowState::new(flat(16, 0.11), &cfg);
        let (_, taken) = step(&s, 0.5, &op, &cfg).unwrap();
        assert!(taken < 0.5);
        let tight = EvolutionConfig {
            class: ClassKParams { delta: 3.9, strip_height: 8.0, ..class() },
            ..cfg.clone()
        };
        // starts inside the forbidden band, so no step size helps
        let g = GraphInterface::new(vec![6.1; 16], TWO_PI, 8.0).unwrap();
        let s = FlowState::new(g, &tight);
        assert!(matches!(step(&s, 1.0, &op, &tight), Err(Error::StepRejected { .. })));
    }

    #[test]
    fn planar_solution_over_short_time() {
        let op = HeleShawOperator::new(BoundaryLaw::one_phase(), BulkConfig::new(16));
        let cfg = EvolutionConfig::new(class());
        let tr = evolve(flat(16, 1.0), &op, &cfg, 0.1, 0.05).unwrap();
        assert_eq!(tr.snapshots.len(), 3);
        let last = tr.snapshots.last().unwrap();
        assert!((last.t - 0.1).abs() < 1e-12);
        let exact = 1.2f64.sqrt();
        assert!(last.f.samples().iter().all(|v| ((v - exact) / exact).abs() < 1e-3));
    }
}
