//! Periodic graph interfaces, their seminorms and the convex class K(δ, L, m, ρ).

use crate::error::{Error, Result};
use crate::spectral;
use serde::{Deserialize, Serialize};

/// Which discrete derivative an operation reads from a [`GraphInterface`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientBackend {
    #[default]
    Spectral,
    Centered,
}

/// Periodic samples of the free-boundary graph `f` on `x_j = j * period / n`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GraphInterface {
    samples: Vec<f64>,
    period: f64,
    strip_height: f64,
    grad_spectral: Vec<f64>,
    grad_centered: Vec<f64>,
}

impl GraphInterface {
    pub fn new(samples: Vec<f64>, period: f64, strip_height: f64) -> Result<Self> {
        let n = samples.len();
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidInterface(format!(
                "need an even number of samples >= 8, got {n}"
            )));
        }
        if let Some(j) = samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInterface(format!("sample {j} is not finite")));
        }
        if !(period > 0.0 && period.is_finite()) {
            return Err(Error::InvalidInterface(format!("period must be positive, got {period}")));
        }
        if !(strip_height > 0.0 && strip_height.is_finite()) {
            return Err(Error::InvalidInterface(format!(
                "strip height must be positive, got {strip_height}"
            )));
        }
        let dx = period / n as f64;
        let grad_centered = (0..n)
            .map(|j| (samples[(j + 1) % n] - samples[(j + n - 1) % n]) / (2.0 * dx))
            .collect();
        let grad_spectral = spectral::derivative(&samples, period, 1);
        Ok(Self {
            samples,
            period,
            strip_height,
            grad_spectral,
            grad_centered,
        })
    }

    /// Sample `f` at the grid points.
    pub fn from_fn(n: usize, period: f64, strip_height: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = period / n as f64;
        Self::new((0..n).map(|j| f(j as f64 * dx)).collect(), period, strip_height)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn strip_height(&self) -> f64 {
        self.strip_height
    }

    pub fn dx(&self) -> f64 {
        self.period / self.len() as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 * self.dx()
    }

    pub fn gradient(&self, backend: GradientBackend) -> &[f64] {
        match backend {
            GradientBackend::Spectral => &self.grad_spectral,
            GradientBackend::Centered => &self.grad_centered,
        }
    }

    pub fn second_derivative(&self, backend: GradientBackend) -> Vec<f64> {
        match backend {
            GradientBackend::Spectral => spectral::derivative(&self.samples, self.period, 2),
            GradientBackend::Centered => {
                let n = self.len();
                let dx2 = self.dx() * self.dx();
                (0..n)
                    .map(|j| {
                        (self.samples[(j + 1) % n] - 2.0 * self.samples[j]
                            + self.samples[(j + n - 1) % n])
                            / dx2
                    })
                    .collect()
            }
        }
    }

    pub fn min(&self) -> f64 {
        self.samples.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.samples.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Same grid and strip, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        Self::new(samples, self.period, self.strip_height)
    }

    /// `f + perturbation` nodewise.
    pub fn perturbed(&self, perturbation: &[f64], scale: f64) -> Result<Self> {
        assert_eq!(perturbation.len(), self.len());
        self.with_samples(
            self.samples
                .iter()
                .zip(perturbation)
                .map(|(f, p)| f + scale * p)
                .collect(),
        )
    }

    /// Grid translate: the result takes the value `f(x + z*dx)` at `x`.
    pub fn shifted(&self, z: isize) -> Self {
        let mut s = self.samples.clone();
        let n = s.len() as isize;
        s.rotate_left(z.rem_euclid(n) as usize);
        self.with_samples(s).expect("a shift keeps samples valid")
    }

    pub fn seminorm(&self, kind: SeminormKind, backend: GradientBackend) -> SeminormReport {
        match kind {
            SeminormKind::Lipschitz => pairwise_seminorm(&self.samples, self.period, kind),
            _ => pairwise_seminorm(self.gradient(backend), self.period, kind),
        }
    }
}

/// Dini moduli supported by the class checks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DiniModulus {
    /// ρ(s) = s^β, 0 < β ≤ 1.
    Holder { beta: f64 },
    /// ρ(s) = ln(e + 1/s)^(-p); summable against ds/s only for p > 1.
    Log { power: f64 },
}

impl DiniModulus {
    pub fn eval(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        match *self {
            DiniModulus::Holder { beta } => s.powf(beta),
            DiniModulus::Log { power } => (std::f64::consts::E + 1.0 / s).ln().powf(-power),
        }
    }

    /// Closed-form summability check of ∫₀¹ ρ(s)/s ds.
    pub fn validate(&self) -> Result<()> {
        match *self {
            DiniModulus::Holder { beta } if beta > 0.0 && beta <= 1.0 => Ok(()),
            DiniModulus::Holder { beta } => Err(Error::InvalidParameter {
                name: "modulus.beta",
                reason: format!("need 0 < beta <= 1, got {beta}"),
            }),
            DiniModulus::Log { power } if power > 1.0 => Ok(()),
            DiniModulus::Log { power } => Err(Error::InvalidParameter {
                name: "modulus.power",
                reason: format!("∫ρ(s)/s ds diverges unless power > 1, got {power}"),
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SeminormKind {
    /// sup |f(x) - f(y)| / |x - y| on the samples.
    Lipschitz,
    /// sup |g(x) - g(y)| / |x - y|^γ; applied to ∇f by [`GraphInterface::seminorm`].
    Holder { gamma: f64 },
    /// sup |g(x) - g(y)| / ρ(|x - y|); applied to ∇f by [`GraphInterface::seminorm`].
    Dini { modulus: DiniModulus },
}

impl SeminormKind {
    fn weight(&self, d: f64) -> f64 {
        match self {
            SeminormKind::Lipschitz => d,
            SeminormKind::Holder { gamma } => d.powf(*gamma),
            SeminormKind::Dini { modulus } => modulus.eval(d),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeminormReport {
    pub kind: SeminormKind,
    pub value: f64,
    pub witness: (usize, usize),
}

/// Discrete sup of the difference quotient of `values` over all grid pairs,
/// with periodic distance.
pub fn pairwise_seminorm(values: &[f64], period: f64, kind: SeminormKind) -> SeminormReport {
    let n = values.len();
    let dx = period / n as f64;
    // weights depend only on the index gap
    let weights: Vec<f64> = (0..n)
        .map(|k| kind.weight(k.min(n - k) as f64 * dx))
        .collect();
    let mut best = (0.0, (0, 0));
    for i in 0..n {
        for j in (i + 1)..n {
            let q = (values[i] - values[j]).abs() / weights[j - i];
            if q > best.0 {
                best = (q, (i, j));
            }
        }
    }
    SeminormReport {
        kind,
        value: best.0,
        witness: best.1,
    }
}

/// Parameters of the convex class K(δ, L, m, ρ).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassKParams {
    pub delta: f64,
    pub strip_height: f64,
    pub lip_bound: f64,
    pub modulus: DiniModulus,
}

impl ClassKParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 0.5 * self.strip_height) {
            return Err(Error::InvalidParameter {
                name: "class.delta",
                reason: format!("need 0 < delta < L/2, got delta = {}, L = {}", self.delta, self.strip_height),
            });
        }
        if !(self.lip_bound > 0.0) {
            return Err(Error::InvalidParameter {
                name: "class.lip_bound",
                reason: format!("must be positive, got {}", self.lip_bound),
            });
        }
        self.modulus.validate()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClassReport {
    pub member: bool,
    pub violations: Vec<String>,
    pub min_f: f64,
    pub max_f: f64,
    pub lipschitz: f64,
    /// Measured constant C_f in |∇f(x) - ∇f(y)| ≤ C_f ρ(|x - y|).
    pub dini_constant: f64,
}

pub fn class_k_check(f: &GraphInterface, k: &ClassKParams, backend: GradientBackend) -> ClassReport {
    let mut violations = Vec::new();
    if (f.strip_height() - k.strip_height).abs() > 1e-12 * k.strip_height {
        violations.push(format!(
            "strip height mismatch: interface L = {}, class L = {}",
            f.strip_height(),
            k.strip_height
        ));
    }
    let (lo, hi) = (f.min(), f.max());
    if lo <= k.delta {
        violations.push(format!("f <= delta (min f = {lo}, delta = {})", k.delta));
    }
    if hi >= k.strip_height - k.delta {
        violations.push(format!("f >= L - delta (max f = {hi}, L - delta = {})", k.strip_height - k.delta));
    }
    let lip = f.seminorm(SeminormKind::Lipschitz, backend).value;
    if lip > k.lip_bound {
        violations.push(format!("Lipschitz constant {lip} exceeds m = {}", k.lip_bound));
    }
    let dini = f
        .seminorm(SeminormKind::Dini { modulus: k.modulus }, backend)
        .value;
    if !dini.is_finite() {
        violations.push("gradient modulus constant is not finite".to_string());
    }
    ClassReport {
        member: violations.is_empty(),
        violations,
        min_f: lo,
        max_f: hi,
        lipschitz: lip,
        dini_constant: dini,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const TWO_PI: f64 = 2.0 * PI;

    fn class(delta: f64, m: f64) -> ClassKParams {
        ClassKParams {
            delta,
            strip_height: 2.0,
            lip_bound: m,
            modulus: DiniModulus::Holder { beta: 0.5 },
        }
    }

    #[test]
    fn flat_interface_has_zero_gradient() {
        let f = GraphInterface::new(vec![1.0; 64], TWO_PI, 2.0).unwrap();
        for b in [GradientBackend::Spectral, GradientBackend::Centered] {
            assert!(f.gradient(b).iter().all(|g| g.abs() < 1e-14));
        }
    }

    #[test]
    fn spectral_gradient_is_exact_on_cosine() {
        let f = GraphInterface::from_fn(64, TWO_PI, 2.0, |x| 1.0 + 0.1 * x.cos()).unwrap();
        let g = f.gradient(GradientBackend::Spectral);
        let err = (0..64)
            .map(|j| (g[j] + 0.1 * f.x(j).sin()).abs())
            .fold(0.0, f64::max);
        assert!(err <= 1e-10, "{err}");
    }

    #[test]
    fn sawtooth_is_accepted_but_rejected_by_class() {
        let f = GraphInterface::from_fn(64, TWO_PI, 2.0, |x| 1.0 + 0.5 * (x / TWO_PI)).unwrap();
        let r = class_k_check(&f, &class(0.2, 1.0), GradientBackend::Centered);
        assert!(!r.member);
    }

    #[test]
    fn construction_errors() {
        assert!(GraphInterface::new(vec![1.0; 7], 1.0, 2.0).is_err());
        assert!(GraphInterface::new(vec![1.0; 6], 1.0, 2.0).is_err());
        let mut s = vec![1.0; 16];
        s[3] = f64::NAN;
        assert!(GraphInterface::new(s, 1.0, 2.0).is_err());
    }

    #[test]
    fn class_examples() {
        let k = class(0.2, 1.0);
        let flat = GraphInterface::new(vec![1.0; 64], TWO_PI, 2.0).unwrap();
        let r = class_k_check(&flat, &k, GradientBackend::Spectral);
        assert!(r.member);
        assert_eq!(r.dini_constant, 0.0);

        let wavy = GraphInterface::from_fn(128, TWO_PI, 2.0, |x| 1.0 + 0.5 * x.cos()).unwrap();
        assert!(class_k_check(&wavy, &k, GradientBackend::Spectral).member);

        let low = GraphInterface::new(vec![0.1; 64], TWO_PI, 2.0).unwrap();
        let r = class_k_check(&low, &k, GradientBackend::Spectral);
        assert!(!r.member);
        assert!(r.violations.iter().any(|v| v.starts_with("f <= delta")));
    }

    #[test]
    fn log_modulus_requires_power_above_one() {
        assert!(DiniModulus::Log { power: 1.0 }.validate().is_err());
        assert!(DiniModulus::Log { power: 2.0 }.validate().is_ok());
        assert!(DiniModulus::Holder { beta: 1.2 }.validate().is_err());
        // summability of ∫ρ(s)/s over (0,1]: with ρ = ln(e+1/s)^-2 the tail mass below s is ~ 1/ln(1/s)
        let rho = DiniModulus::Log { power: 2.0 };
        let tail = crate::quadrature::integrate_graded(|s| rho.eval(s) / s, 1e-3, 200, 8);
        assert!(tail < 0.2, "{tail}");
    }

    #[test]
    fn lipschitz_of_cosine_against_fine_oracle() {
        let oracle = {
            let f = GraphInterface::from_fn(4096, TWO_PI, 2.0, f64::cos).unwrap();
            f.seminorm(SeminormKind::Lipschitz, GradientBackend::Spectral).value
        };
        assert!((oracle - 1.0).abs() < 1e-6);
        for n in [64usize, 128, 256] {
            let f = GraphInterface::from_fn(n, TWO_PI, 2.0, f64::cos).unwrap();
            let v = f.seminorm(SeminormKind::Lipschitz, GradientBackend::Spectral).value;
            let h = TWO_PI / n as f64;
            assert!((v - oracle).abs() <= h * h, "n={n}: {v}");
        }
    }

    #[test]
    fn holder_of_rough_gradient_depends_on_exponent() {
        let profile = |x: f64| (x / 2.0).sin().abs().powf(1.5);
        let value = |n: usize, gamma: f64| {
            let f = GraphInterface::from_fn(n, TWO_PI, 2.0, profile).unwrap();
            f.seminorm(SeminormKind::Holder { gamma }, GradientBackend::Centered).value
        };
        let (h_lo, h_hi) = (value(256, 0.5), value(1024, 0.5));
        assert!(h_lo.is_finite() && h_hi.is_finite());
        assert!(h_hi / h_lo < 1.1, "{h_lo} {h_hi}");
        let (r_lo, r_hi) = (value(256, 0.9), value(1024, 0.9));
        assert!(r_hi / r_lo > 1.4, "{r_lo} {r_hi}");
    }

    proptest! {
        #[test]
        fn gradient_is_linear(a in -2.0f64..2.0, b in -2.0f64..2.0, phase in 0.0f64..6.0) {
            let u = GraphInterface::from_fn(32, TWO_PI, 2.0, |x| (x + phase).sin()).unwrap();
            let v = GraphInterface::from_fn(32, TWO_PI, 2.0, |x| (2.0 * x).cos() + 0.3 * (5.0 * x).sin()).unwrap();
            let w = u.with_samples(u.samples().iter().zip(v.samples()).map(|(p, q)| a * p + b * q).collect()).unwrap();
            for backend in [GradientBackend::Spectral, GradientBackend::Centered] {
                for j in 0..32 {
                    let expect = a * u.gradient(backend)[j] + b * v.gradient(backend)[j];
                    prop_assert!((w.gradient(backend)[j] - expect).abs() < 1e-11);
                }
            }
        }

        #[test]
        fn seminorm_is_homogeneous(lambda in -5.0f64..5.0, gamma in 0.1f64..1.0) {
            let f = GraphInterface::from_fn(48, TWO_PI, 2.0, |x| 1.0 + 0.2 * x.cos() + 0.05 * (3.0 * x).sin()).unwrap();
            let g = f.with_samples(f.samples().iter().map(|v| lambda * v).collect()).unwrap();
            for kind in [SeminormKind::Lipschitz, SeminormKind::Holder { gamma }, SeminormKind::Dini { modulus: DiniModulus::Log { power: 2.0 } }] {
                let a = f.seminorm(kind, GradientBackend::Spectral).value;
                let b = g.seminorm(kind, GradientBackend::Spectral).value;
                prop_assert!((b - lambda.abs() * a).abs() <= 1e-12 * (1.0 + b.abs()));
            }
        }

        #[test]
        fn class_membership_is_monotone(delta in 0.05f64..0.9, m in 0.05f64..2.0, amp in 0.0f64..0.6) {
            let f = GraphInterface::from_fn(64, TWO_PI, 2.0, |x| 1.0 + amp * x.cos()).unwrap();
            let k = class(delta, m);
            if class_k_check(&f, &k, GradientBackend::Spectral).member {
                let looser = class(0.5 * delta, 2.0 * m);
                prop_assert!(class_k_check(&f, &looser, GradientBackend::Spectral).member);
            }
        }

        #[test]
        fn constants_have_zero_seminorm(c in -3.0f64..3.0) {
            let f = GraphInterface::new(vec![c; 32], TWO_PI, 8.0).unwrap();
            for kind in [SeminormKind::Lipschitz, SeminormKind::Holder { gamma: 0.3 }] {
                prop_assert_eq!(f.seminorm(kind, GradientBackend::Centered).value, 0.0);
            }
        }
    }
}
