//! Interface fluxes `I+`, `I-`, the normal velocity `H = G(I+, I-) sqrt(1 + f'^2)`
//! and the Muskat operator used as an independent reference.

use crate::elliptic::{boundary_flux, solve_phase, BulkConfig, Edge, Phase, Spd2};
use crate::error::{Error, Result};
use crate::interface::{class_k_check, ClassKParams, GraphInterface};
use serde::{Deserialize, Serialize};

/// Monotone table on a uniform `(a, b)` grid, evaluated by bicubic Hermite
/// interpolation with centered slopes and linear extension outside the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableLaw {
    pub a_range: (f64, f64),
    pub b_range: (f64, f64),
    /// `values[ia * nb + ib]`
    pub values: Vec<f64>,
    pub na: usize,
    pub nb: usize,
}

impl TableLaw {
    pub fn from_fn(a_range: (f64, f64), b_range: (f64, f64), na: usize, nb: usize, g: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(na * nb);
        for ia in 0..na {
            for ib in 0..nb {
                let a = a_range.0 + (a_range.1 - a_range.0) * ia as f64 / (na - 1) as f64;
                let b = b_range.0 + (b_range.1 - b_range.0) * ib as f64 / (nb - 1) as f64;
                values.push(g(a, b));
            }
        }
        Self { a_range, b_range, values, na, nb }
    }

    fn node(&self, ia: usize, ib: usize) -> f64 {
        self.values[ia * self.nb + ib]
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        let ha = (self.a_range.1 - self.a_range.0) / (self.na - 1) as f64;
        let hb = (self.b_range.1 - self.b_range.0) / (self.nb - 1) as f64;
        let sa = (a - self.a_range.0) / ha;
        let sb = (b - self.b_range.0) / hb;
        // interpolate along b on each needed a-row, then along a
        let row = |ia: usize| hermite_line(sb, self.nb, |ib| self.node(ia, ib));
        hermite_line(sa, self.na, row)
    }
}

/// Cubic Hermite through samples `v(0..n)` at unit spacing, linear outside `[0, n-1]`.
fn hermite_line(s: f64, n: usize, v: impl Fn(usize) -> f64) -> f64 {
    let slope = |k: usize| {
        if k == 0 {
            v(1) - v(0)
        } else if k == n - 1 {
            v(n - 1) - v(n - 2)
        } else {
            0.5 * (v(k + 1) - v(k - 1))
        }
    };
    if s <= 0.0 {
        return v(0) + s * slope(0);
    }
    if s >= (n - 1) as f64 {
        return v(n - 1) + (s - (n - 1) as f64) * slope(n - 1);
    }
    let k = (s.floor() as usize).min(n - 2);
    let t = s - k as f64;
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * v(k)
        + (t3 - 2.0 * t2 + t) * slope(k)
        + (-2.0 * t3 + 3.0 * t2) * v(k + 1)
        + (t3 - t2) * slope(k + 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LawKind {
    /// `G(a, b) = a`
    OnePhaseIdentity,
    /// `G(a, b) = a - b`
    Difference,
    Table(TableLaw),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryLaw {
    pub kind: LawKind,
    pub lambda: f64,
    pub big_lambda: f64,
    pub a2: Spd2,
}

impl BoundaryLaw {
    pub fn one_phase() -> Self {
        Self {
            kind: LawKind::OnePhaseIdentity,
            lambda: 1.0,
            big_lambda: 1.0,
            a2: Spd2::IDENTITY,
        }
    }

    pub fn difference(a2: Spd2) -> Self {
        Self {
            kind: LawKind::Difference,
            lambda: 1.0,
            big_lambda: 1.0,
            a2,
        }
    }

    /// Table law, validated by sampled finite differences over the table range.
    pub fn table(table: TableLaw, lambda: f64, big_lambda: f64, a2: Spd2) -> Result<Self> {
        let law = Self {
            kind: LawKind::Table(table),
            lambda,
            big_lambda,
            a2,
        };
        law.validate()?;
        Ok(law)
    }

    pub fn eval(&self, a: f64, b: f64) -> f64 {
        match &self.kind {
            LawKind::OnePhaseIdentity => a,
            LawKind::Difference => a - b,
            LawKind::Table(t) => t.eval(a, b),
        }
    }

    pub fn two_phase(&self) -> bool {
        !matches!(self.kind, LawKind::OnePhaseIdentity)
    }

    /// Sampled check of `lambda <= dG/da <= Lambda` and `lambda <= -dG/db <= Lambda`.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda <= self.big_lambda) {
            return Err(Error::InvalidParameter {
                name: "law.lambda",
                reason: format!("need 0 < lambda <= Lambda, got {} and {}", self.lambda, self.big_lambda),
            });
        }
        self.a2.validate()?;
        let (ar, br) = match &self.kind {
            LawKind::Table(t) => (t.a_range, t.b_range),
            _ => ((0.0, 10.0), (0.0, 10.0)),
        };
        let tol = 1e-6;
        let h = 1e-4 * (ar.1 - ar.0).max(br.1 - br.0);
        let (lo, hi) = (self.lambda - tol, self.big_lambda + tol);
        for ia in 0..=24 {
            for ib in 0..=24 {
                let a = ar.0 + (ar.1 - ar.0) * ia as f64 / 24.0;
                let b = br.0 + (br.1 - br.0) * ib as f64 / 24.0;
                let ga = (self.eval(a + h, b) - self.eval(a - h, b)) / (2.0 * h);
                let gb = -(self.eval(a, b + h) - self.eval(a, b - h)) / (2.0 * h);
                let b_ok = !self.two_phase() || (lo..=hi).contains(&gb);
                if !(lo..=hi).contains(&ga) || !b_ok {
                    return Err(Error::InvalidParameter {
                        name: "law",
                        reason: format!("ellipticity fails at (a, b) = ({a}, {b}): dG/da = {ga}, -dG/db = {gb}"),
                    });
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VelocityField {
    pub values: Vec<f64>,
    pub i_plus: Vec<f64>,
    /// Empty for the one-phase law, which never solves the minus phase.
    pub i_minus: Vec<f64>,
    pub gradient_factor: Vec<f64>,
}

/// `f -> H(f)` with a fixed law, bulk resolution and class constraint.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeleShawOperator {
    pub law: BoundaryLaw,
    pub bulk: BulkConfig,
    pub class: Option<ClassKParams>,
    /// When false, class violations are ignored.
    pub strict: bool,
}

impl HeleShawOperator {
    pub fn new(law: BoundaryLaw, bulk: BulkConfig) -> Self {
        Self {
            law,
            bulk,
            class: None,
            strict: true,
        }
    }

    pub fn with_class(mut self, class: ClassKParams) -> Self {
        self.class = Some(class);
        self
    }

    pub fn warn_only(mut self) -> Self {
        self.strict = false;
        self
    }

    fn admit(&self, f: &GraphInterface) -> Result<()> {
        if let (Some(k), true) = (&self.class, self.strict) {
            let r = class_k_check(f, k, self.bulk.backend);
            if !r.member {
                return Err(Error::ClassViolation { violations: r.violations });
            }
        }
        Ok(())
    }

    pub fn dtn_plus(&self, f: &GraphInterface) -> Result<Vec<f64>> {
        self.admit(f)?;
        let u = solve_phase(f, Phase::Plus, Spd2::IDENTITY, &self.bulk)?;
        boundary_flux(&u, Edge::GammaPlus)
    }

    pub fn dtn_minus(&self, f: &GraphInterface) -> Result<Vec<f64>> {
        self.admit(f)?;
        let u = solve_phase(f, Phase::Minus, self.law.a2, &self.bulk)?;
        boundary_flux(&u, Edge::GammaMinus)
    }

    pub fn velocity(&self, f: &GraphInterface) -> Result<VelocityField> {
        let (i_plus, i_minus) = if self.law.two_phase() {
            let (p, m) = rayon::join(|| self.dtn_plus(f), || self.dtn_minus(f));
            (p?, m?)
        } else {
            (self.dtn_plus(f)?, Vec::new())
        };
        let gradient_factor: Vec<f64> = f
            .gradient(self.bulk.backend)
            .iter()
            .map(|g| (1.0 + g * g).sqrt())
            .collect();
        let values = (0..f.len())
            .map(|i| {
                let b = i_minus.get(i).copied().unwrap_or(0.0);
                self.law.eval(i_plus[i], b) * gradient_factor[i]
            })
            .collect();
        Ok(VelocityField {
            values,
            i_plus,
            i_minus,
            gradient_factor,
        })
    }
}

/// Muskat right-hand side on the symmetric window `|y - x| <= P/2` around each node.
///
/// Trapezoid rule with an endpoint Euler-Maclaurin correction; the removable
/// singularity at `y = x` takes its limit `f''/(2 (1 + f'^2))`.
pub fn muskat_rhs(f: &GraphInterface) -> Vec<f64> {
    let n = f.len();
    let fs = f.samples();
    let fp = f.gradient(crate::GradientBackend::Spectral);
    let fpp = f.second_derivative(crate::GradientBackend::Spectral);
    let h = f.dx();
    let half = n / 2;
    (0..n)
        .map(|j| {
            let g = |k: i64| -> f64 {
                if k == 0 {
                    return 0.5 * fpp[j] / (1.0 + fp[j] * fp[j]);
                }
                let d = k as f64 * h;
                let fy = fs[(j as i64 + k).rem_euclid(n as i64) as usize];
                let df = fy - fs[j];
                (df - d * fp[j]) / (d * d + df * df)
            };
            window_sum(&g, half as i64, h)
        })
        .collect()
}

/// Muskat integrand of a function on the line, integrated over `[x - w, x + w]` with `2m` panels.
pub fn muskat_window(f: impl Fn(f64) -> f64, fp: f64, fpp: f64, x: f64, w: f64, m: usize) -> f64 {
    let h = w / m as f64;
    let fx = f(x);
    let g = |k: i64| -> f64 {
        if k == 0 {
            return 0.5 * fpp / (1.0 + fp * fp);
        }
        let d = k as f64 * h;
        let df = f(x + d) - fx;
        (df - d * fp) / (d * d + df * df)
    };
    window_sum(&g, m as i64, h)
}

/// Trapezoid over `k = -m..=m` plus `-(h^2/12) (g'(m) - g'(-m))`, end slopes by
/// one-sided four-point differences.
fn window_sum(g: &dyn Fn(i64) -> f64, m: i64, h: f64) -> f64 {
    let mut s = 0.5 * (g(-m) + g(m));
    for k in (-m + 1)..m {
        s += g(k);
    }
    let right = (11.0 * g(m) - 18.0 * g(m - 1) + 9.0 * g(m - 2) - 2.0 * g(m - 3)) / (6.0 * h);
    let left = -(11.0 * g(-m) - 18.0 * g(-m + 1) + 9.0 * g(-m + 2) - 2.0 * g(-m + 3)) / (6.0 * h);
    h * s - h * h / 12.0 * (right - left)
}
