//! Partition of unity subordinate to the stretched cubes `Q*` (sides scaled by 9/8).
//!
//! Each cube carries `prod_i psi((u_i - c_i) / s)`, where `psi` is the indicator of
//! `[-1/2, 1/2]` convolved with a cubic B-spline of half-width `1/16`; its support is
//! exactly the side of `Q*`. Normalizing by the sum over all cubes gives `phi_{m,k}`.
//! On its own cube `psi >= 1/2` in every direction, so the sum is at least `2^-N`.

use crate::cubes::{split, CubeKey, MAX_DEPTH};

/// Mollifier half-width in units of the cube side.
pub const EPS: f64 = 1.0 / 16.0;
/// Number of dyadic levels scanned around a point.
pub const LEVEL_SPAN: usize = 6;
/// `sup |psi'|` in units of the cube side: `(2 / EPS) * 2/3`.
pub const PSI_SLOPE: f64 = 64.0 / 3.0;

fn bspline(v: f64) -> f64 {
    let a = v.abs();
    if a <= 1.0 {
        2.0 / 3.0 - a * a + 0.5 * a * a * a
    } else if a <= 2.0 {
        (2.0 - a).powi(3) / 6.0
    } else {
        0.0
    }
}

fn bspline_cdf(v: f64) -> f64 {
    let a = v.abs();
    let half = if a <= 1.0 {
        2.0 * a / 3.0 - a * a * a / 3.0 + a.powi(4) / 8.0
    } else if a <= 2.0 {
        0.5 - (2.0 - a).powi(4) / 24.0
    } else {
        0.5
    };
    0.5 + half.copysign(v)
}

/// Mollified indicator of `[-1/2, 1/2]`, supported in `[-9/16, 9/16]`.
pub fn psi(t: f64) -> f64 {
    let k = 2.0 / EPS;
    bspline_cdf(k * (t + 0.5)) - bspline_cdf(k * (t - 0.5))
}

pub fn psi_prime(t: f64) -> f64 {
    let k = 2.0 / EPS;
    k * (bspline(k * (t + 0.5)) - bspline(k * (t - 0.5)))
}

/// Bound on `|grad phi_Q| diam(Q)` from the quotient rule, given at most `overlap`
/// stretched cubes at a point and diameters of overlapping cubes within a factor 5.5.
pub fn gradient_constant(dim: usize, overlap: usize) -> f64 {
    (1u64 << dim) as f64 * dim as f64 * PSI_SLOPE * (1.0 + 5.5 * overlap as f64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    pub key: CubeKey,
    pub phi: f64,
    /// Gradient in cell units; divide by `h` for physical units.
    pub grad: Vec<f64>,
}

/// Distance from `u` (cell units) to `Z^N`, scaled so it does not underflow.
pub fn lattice_dist(u: &[f64]) -> f64 {
    norm(&split(u).1)
}

fn norm(r: &[f64]) -> f64 {
    let big = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if big == 0.0 {
        return 0.0;
    }
    big * r.iter().map(|v| (v / big).powi(2)).sum::<f64>().sqrt()
}

/// Decomposition cubes whose `Q*` contains `u`, with the unnormalized weight and its gradient.
fn raw_weights(u: &[f64]) -> Vec<(CubeKey, f64, Vec<f64>)> {
    let dim = u.len();
    let (anchor, r) = split(u);
    let d = norm(&r);
    let root = (dim as f64).sqrt();
    // a member Q with u in Q* has d / 5.125 <= diam(Q) <= 16 d / 15
    let lo = ((root / (2.0 * d)).log2().floor() as i64).max(1);
    let hi = ((6.0 * root / d).log2().ceil() as i64).min(MAX_DEPTH as i64);
    let mut out = Vec::new();
    for level in lo..=hi {
        let s = (-(level as f64)).exp2();
        let ranges: Vec<(i64, i64)> = r
            .iter()
            .map(|v| (((v - EPS * s) / s).floor() as i64, ((v + EPS * s) / s).floor() as i64))
            .collect();
        let mut offset: Vec<i64> = ranges.iter().map(|q| q.0).collect();
        'cubes: loop {
            let key = CubeKey::new(level as u32, anchor.clone(), offset.clone());
            if key.in_decomposition() {
                // local coordinate against the canonical anchor
                let t: Vec<f64> = (0..dim)
                    .map(|i| {
                        let shift = (key.anchor[i] - anchor[i]) as f64;
                        (r[i] - shift - (key.offset[i] as f64 + 0.5) * s) / s
                    })
                    .collect();
                let vals: Vec<f64> = t.iter().map(|&ti| psi(ti)).collect();
                let w: f64 = vals.iter().product();
                if w > 0.0 {
                    let grad = (0..dim)
                        .map(|i| {
                            let others: f64 = (0..dim).filter(|&j| j != i).map(|j| vals[j]).product();
                            psi_prime(t[i]) / s * others
                        })
                        .collect();
                    out.push((key, w, grad));
                }
            }
            let mut i = 0;
            loop {
                if i == dim {
                    break 'cubes;
                }
                offset[i] += 1;
                if offset[i] <= ranges[i].1 {
                    break;
                }
                offset[i] = ranges[i].0;
                i += 1;
            }
        }
    }
    out
}

/// `phi_{m,k}(x)` and gradients for every cube whose `Q*` contains the point `u` (cell
/// units). Empty on the lattice and within about `2^-1000` of it.
pub fn weights(u: &[f64]) -> Vec<Weight> {
    if lattice_dist(u) < (-(MAX_DEPTH as f64) + 8.0).exp2() {
        return Vec::new();
    }
    let raw = raw_weights(u);
    let sum: f64 = raw.iter().map(|r| r.1).sum();
    let dim = u.len();
    let mut gsum = vec![0.0; dim];
    for r in &raw {
        for i in 0..dim {
            gsum[i] += r.2[i];
        }
    }
    raw.into_iter()
        .map(|(key, w, g)| Weight {
            key,
            phi: w / sum,
            grad: (0..dim).map(|i| g[i] / sum - w * gsum[i] / (sum * sum)).collect(),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn psi_profile() {
        assert_eq!(psi(0.0), 1.0);
        assert!((psi(0.5) - 0.5).abs() < 1e-15);
        assert_eq!(psi(9.0 / 16.0), 0.0);
        assert_eq!(psi(0.5 - EPS), 1.0);
        // derivative against a centered difference
        for t in [0.45, 0.47, 0.5, 0.52, 0.55, -0.49] {
            let fd = (psi(t + 1e-7) - psi(t - 1e-7)) / 2e-7;
            assert!((fd - psi_prime(t)).abs() < 1e-5, "{t}");
        }
        let peak = (0..2001).map(|i| psi_prime(0.4 + 0.2 * i as f64 / 2000.0).abs()).fold(0.0, f64::max);
        assert!(peak <= PSI_SLOPE * (1.0 + 1e-12));
        assert!(peak > 0.99 * PSI_SLOPE);
    }

    #[test]
    fn sums_to_one_in_a_gap() {
        for i in 1..200 {
            let u = [i as f64 / 200.0 + 3.0];
            let w = weights(&u);
            let s: f64 = w.iter().map(|x| x.phi).sum();
            assert!((s - 1.0).abs() < 1e-13, "{u:?} {s}");
            assert!(w.len() <= LEVEL_SPAN * 2);
        }
        assert!(weights(&[2.0]).is_empty());
    }

    #[test]
    fn very_close_to_the_grid() {
        for e in [1e-3, 1e-9, 1e-200] {
            let w = weights(&[e, -e]);
            let s: f64 = w.iter().map(|x| x.phi).sum();
            assert!((s - 1.0).abs() < 1e-13, "{e} {s} {w:?}");
        }
    }
}
