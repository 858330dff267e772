//! The full property suite on fixed deterministic samples.

use crate::audit::*;
use crate::cubes::decompose;
use crate::error::Result;
use crate::extension::{field, FractionalLaplacian, GridSamples, Operator};
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteConfig {
    pub points: usize,
    pub depth: u32,
    pub lipschitz_levels: Vec<u32>,
    pub remainder_levels: Vec<u32>,
    pub convergence_levels: Vec<u32>,
    pub r0: f64,
    pub panels: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            points: 1000,
            depth: 8,
            lipschitz_levels: vec![2, 3, 4, 5, 6],
            remainder_levels: vec![2, 3, 4, 5, 6, 7, 8],
            convergence_levels: vec![3, 4, 5, 6],
            r0: 1.0,
            panels: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteItem {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub items: Vec<SuiteItem>,
    pub cubes: Vec<CubeAudit>,
    pub partitions: Vec<PartitionAudit>,
    pub lipschitz: LipschitzReport,
    pub remainder: RemainderReport,
    pub convergence: ConvergenceReport,
}

impl SuiteReport {
    pub fn pass(&self) -> bool {
        self.items.iter().all(|i| i.pass)
    }

    pub fn passed(&self) -> usize {
        self.items.iter().filter(|i| i.pass).count()
    }
}

/// Low-discrepancy points in `[-radius, radius]^N`, rounded to multiples of `2^-24` so
/// that shifting them by grid vectors is exact.
pub fn sample_points(dim: usize, n: usize, radius: f64) -> Vec<Vec<f64>> {
    // additive recurrence with the generalized golden ratio
    let g: f64 = if dim == 1 { 1.618_033_988_749_895 } else { 1.324_717_957_244_746 };
    let alpha: Vec<f64> = (1..=dim).map(|k| 1.0 / g.powi(k as i32)).collect();
    let q = (24f64).exp2();
    (1..=n)
        .map(|i| {
            alpha
                .iter()
                .map(|a| {
                    let t = (0.5 + a * i as f64).fract();
                    ((2.0 * t - 1.0) * radius * q).round() / q
                })
                .collect()
        })
        .collect()
}

fn item(name: &str, pass: bool, detail: String) -> SuiteItem {
    SuiteItem {
        name: name.into(),
        pass,
        detail,
    }
}

pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    let mut items = Vec::new();
    let mut cubes = Vec::new();
    let mut partitions = Vec::new();
    for (dim, m) in [(1usize, 0u32), (1, 5), (2, 0), (2, 3)] {
        let dec = decompose(m, dim)?;
        let pts = sample_points(dim, cfg.points, 2.0 * dec.h);
        let c = cube_audit(&dec, cfg.depth, &pts);
        let tag = format!("N={dim} m={m}");
        items.push(item("cube disjoint interiors", c.disjoint, tag.clone()));
        items.push(item("cube cover", c.covered, format!("{tag} uncovered volume at depth {}: {:.3e}", cfg.depth, c.uncovered_volume)));
        items.push(item(
            "cube dist/diam in [c1, c2]",
            c.ratios_ok,
            format!("{tag} ratios [{}, {}] within [{}, {}]", c.min_ratio, c.max_ratio, dec.c1, dec.c2),
        ));
        items.push(item("cube lattice translation", c.translation_invariant, tag.clone()));
        let z = vec![3i64; dim];
        let p = partition_audit(&dec, &pts, &z);
        items.push(item("partition bounds and support", p.bounds_ok, format!("{tag} phi in [{:.3e}, {}]", p.min_phi, p.max_phi)));
        items.push(item("partition sums to one", p.max_sum_error <= 1e-12, format!("{tag} max error {:.3e}", p.max_sum_error)));
        items.push(item(
            "partition gradient bound",
            p.max_gradient <= p.gradient_constant,
            format!("{tag} max |grad phi| diam {:.3} <= {:.1}", p.max_gradient, p.gradient_constant),
        ));
        items.push(item("partition translation", p.translation_exact, tag));
        cubes.push(c);
        partitions.push(p);
    }

    let smooth1 = field(1, |x: &[f64]| (2.0 * x[0]).sin() + 0.5 * (5.0 * x[0] + 1.0).cos());
    let smooth2 = field(2, |x: &[f64]| (1.5 * x[0] - x[1]).sin() + 0.3 * (2.0 * x[1]).cos());
    let d1 = translation_defect(smooth1.clone(), 4, &[5], &sample_points(1, 200, 1.0))?;
    let d2 = translation_defect(smooth2, 3, &[-2, 3], &sample_points(2, 200, 1.0))?;
    items.push(item("projection translation covariance", d1 == 0.0 && d2 == 0.0, format!("defects {d1:e} (N=1), {d2:e} (N=2)")));

    let bump = |x: f64| (-4.0 * x * x).exp();
    let op: Arc<dyn Operator> = Arc::new(FractionalLaplacian::new(cfg.r0, cfg.panels));
    let dj = approximation_translation_defect(op.clone(), field(1, move |x: &[f64]| bump(x[0])), 4, &[3], &sample_points(1, 40, 0.5))?;
    items.push(item("approximation translation covariance", dj == 0.0, format!("defect {dj:e}")));

    let line: Vec<Vec<f64>> = (0..=4000).map(|i| vec![-1.0 + 2.0 * i as f64 / 4000.0 + 1e-7]).collect();
    let lipschitz = lipschitz_sweep(smooth1, &cfg.lipschitz_levels, &line)?;
    items.push(item(
        "projection Lipschitz uniform in m",
        lipschitz.pass(),
        format!(
            "ratios {:?} <= {:.1}",
            lipschitz.rows.iter().map(|r| (r.ratio * 1e3).round() / 1e3).collect::<Vec<_>>(),
            lipschitz.bound
        ),
    ));

    // nonnegative, zero at the grid point 0, with a second off-grid zero at 1/3
    let x1 = 1.0 / 3.0;
    let w = field(1, move |x: &[f64]| (x[0] * (x[0] - x1)).abs().powf(1.5));
    let remainder = remainder_sweep(w, remainder_norm(), &cfg.remainder_levels, &line)?;
    items.push(item(
        "negativity remainder",
        remainder.pass(),
        format!("beta {:.3}, C {:.3}", remainder.beta, remainder.constant),
    ));

    let oracle_op = FractionalLaplacian::new(cfg.r0, cfg.panels);
    let target = field(1, move |x: &[f64]| bump(x[0]));
    let t2 = target.clone();
    let oracle = move |x: &[f64]| oracle_op.apply(t2.as_ref(), x).unwrap_or(f64::NAN);
    let pts: Vec<Vec<f64>> = (0..=100).map(|i| vec![-1.0 + 2.0 * i as f64 / 100.0 + 1e-3]).collect();
    let convergence = convergence_sweep(op, target, &oracle, &cfg.convergence_levels, &pts)?;
    items.push(item(
        "J^m -> L_Delta",
        convergence.decreasing,
        format!(
            "errors {:?}, rate {:.3}",
            convergence.rows.iter().map(|r| r.error).collect::<Vec<_>>(),
            convergence.rate
        ),
    ));

    // ordered data with a common grid point
    let g1 = GridSamples::new(field(2, |x: &[f64]| (x[0] + 2.0 * x[1]).sin()), 3)?;
    let g2 = GridSamples::new(field(2, |x: &[f64]| (x[0] + 2.0 * x[1]).sin() + (3.0 * x[0]).cos().powi(2)), 3)?;
    let od = order_defect(&g1, &g2, &sample_points(2, cfg.points, 1.0))?;
    items.push(item("E0 preserves order", od <= 0.0, format!("max (E0 g1 - E0 g2) = {od:e}")));

    Ok(SuiteReport {
        items,
        cubes,
        partitions,
        lipschitz,
        remainder,
        convergence,
    })
}

/// `||w||_{C^{1,1/2}}` on `[-1, 1]` for `w = |x (x - 1/3)|^{3/2}`, from a fine sample.
fn remainder_norm() -> f64 {
    let x1 = 1.0 / 3.0;
    let w = |x: f64| (x * (x - x1)).abs().powf(1.5);
    let dw = |x: f64| {
        let q = x * (x - x1);
        1.5 * q.abs().sqrt() * q.signum() * (2.0 * x - x1)
    };
    let n = 2000;
    let xs: Vec<f64> = (0..=n).map(|i| -1.0 + 2.0 * i as f64 / n as f64).collect();
    let sup = xs.iter().map(|&x| w(x).abs() + dw(x).abs()).fold(0.0, f64::max);
    let mut holder = 0.0f64;
    for i in 0..xs.len() {
        for j in (i + 1..xs.len()).step_by(7) {
            holder = holder.max((dw(xs[i]) - dw(xs[j])).abs() / (xs[j] - xs[i]).sqrt());
        }
    }
    sup + holder
}
