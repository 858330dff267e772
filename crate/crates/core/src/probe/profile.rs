//! Bump and cutoff profiles used by the probes.

use crate::quadrature;
use serde::{Deserialize, Serialize};

/// Cardinal quartic B-spline on `[0, 5]`.
fn m5(u: f64) -> f64 {
    if !(0.0..5.0).contains(&u) {
        return 0.0;
    }
    const BINOM: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];
    let mut s = 0.0;
    for (i, b) in BINOM.iter().enumerate() {
        let t = u - i as f64;
        if t > 0.0 {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            s += sign * b * t.powi(4);
        }
    }
    s / 24.0
}

const M5_PEAK: f64 = 115.0 / 192.0;

/// Quartic B-spline rescaled to `[-1, 1]` with peak 1 (C^3, compact support).
pub fn bump_profile(s: f64) -> f64 {
    m5(2.5 * (s + 1.0)) / M5_PEAK
}

/// `∫ bump_profile = 1 / (2.5 * M5(2.5))`.
pub const BUMP_MASS: f64 = 1.0 / (2.5 * M5_PEAK);

/// C^2 cutoff: 1 on `|s| <= 1/2`, 0 on `|s| >= 1`, quintic smoothstep between.
pub fn cutoff(s: f64) -> f64 {
    let a = s.abs();
    if a <= 0.5 {
        1.0
    } else if a >= 1.0 {
        0.0
    } else {
        let t = 2.0 * a - 1.0;
        1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// Signed periodic offset of `x` from `c`, in `[-P/2, P/2)`.
pub fn periodic_offset(x: f64, c: f64, period: f64) -> f64 {
    (x - c + 0.5 * period).rem_euclid(period) - 0.5 * period
}

/// Nonnegative bump `A * profile((x - h) / w)`, `h` measured from the probe point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl BumpSpec {
    pub fn new(center: f64, width: f64, amplitude: f64) -> Self {
        Self { center, width, amplitude }
    }

    /// Samples on the grid of `n` points with the probe point at node `x0`.
    pub fn samples(&self, n: usize, period: f64, x0: usize) -> Vec<f64> {
        let dx = period / n as f64;
        (0..n)
            .map(|j| {
                let y = periodic_offset((j as f64 - x0 as f64) * dx, self.center, period);
                self.amplitude * bump_profile(y / self.width)
            })
            .collect()
    }

    /// Distance from the probe point to the support.
    pub fn gap(&self, period: f64) -> f64 {
        periodic_offset(self.center, 0.0, period).abs() - self.width
    }

    pub fn mass(&self) -> f64 {
        self.amplitude * self.width * BUMP_MASS
    }

    /// `∫ psi(y) w(y) dy` with Gauss-Legendre on each polynomial piece.
    pub fn weighted_integral(&self, w: impl Fn(f64) -> f64) -> f64 {
        let mut s = 0.0;
        for k in 0..5 {
            let a = self.center + self.width * (-1.0 + 0.4 * k as f64);
            let b = a + 0.4 * self.width;
            s += quadrature::integrate(|y| self.amplitude * bump_profile((y - self.center) / self.width) * w(y), a, b, 2, 8);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_shape() {
        assert!((bump_profile(0.0) - 1.0).abs() < 1e-14);
        assert_eq!(bump_profile(1.0), 0.0);
        assert_eq!(bump_profile(-1.2), 0.0);
        assert!((bump_profile(0.3) - bump_profile(-0.3)).abs() < 1e-14);
        let mass = quadrature::integrate(bump_profile, -1.0, 1.0, 5, 8);
        assert!((mass - BUMP_MASS).abs() < 1e-13);
    }

    #[test]
    fn cutoff_is_c2() {
        assert_eq!(cutoff(0.4), 1.0);
        assert_eq!(cutoff(-1.1), 0.0);
        // second derivative continuous: its jump across the knots shrinks with h
        for h in [1e-3, 1e-4] {
            let d2 = |x: f64| (cutoff(x + h) - 2.0 * cutoff(x) + cutoff(x - h)) / (h * h);
            for s in [0.5, 1.0] {
                assert!((d2(s + 2.0 * h) - d2(s - 2.0 * h)).abs() < 2000.0 * h);
            }
        }
    }

    #[test]
    fn weighted_integral_of_constant_is_mass() {
        let b = BumpSpec::new(0.7, 0.2, 0.05);
        assert!((b.weighted_integral(|_| 1.0) - b.mass()).abs() < 1e-15);
        assert!((b.gap(6.0) - 0.5).abs() < 1e-15);
    }
}
