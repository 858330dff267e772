//! Banded Cholesky on the interleaved ordering `0, nx-1, 1, nx-2, ...`,
//! which keeps periodic neighbours within a narrow band.

use super::stencil::System;
use crate::error::{Error, Result};

fn position(i: usize, nx: usize) -> usize {
    if i < nx / 2 {
        2 * i
    } else {
        2 * (nx - 1 - i) + 1
    }
}

pub fn solve(sys: &System, rhs: &[f64]) -> Result<Vec<f64>> {
    let nx = sys.nx;
    let n = sys.unknowns();
    let perm: Vec<usize> = (0..n).map(|u| (u / nx) * nx + position(u % nx, nx)).collect();
    let mut bw = 0;
    for u in 0..n {
        for (v, _) in sys.entries(u) {
            bw = bw.max(perm[u].abs_diff(perm[v]));
        }
    }
    // lower band stored row-wise: band[r * (bw + 1) + (bw - (r - c))] = L[r][c]
    let w = bw + 1;
    let mut band = vec![0.0; n * w];
    for u in 0..n {
        for (v, val) in sys.entries(u) {
            let (r, c) = (perm[u], perm[v]);
            if c <= r {
                band[r * w + bw - (r - c)] = val;
            }
        }
    }
    for r in 0..n {
        let c0 = r.saturating_sub(bw);
        for c in c0..=r {
            let mut s = band[r * w + bw - (r - c)];
            let k0 = c0.max(c.saturating_sub(bw));
            for k in k0..c {
                s -= band[r * w + bw - (r - k)] * band[c * w + bw - (c - k)];
            }
            if c == r {
                if s <= 0.0 {
                    return Err(Error::NotSpd(format!("nonpositive pivot {s:e} at row {r}")));
                }
                band[r * w + bw] = s.sqrt();
            } else {
                band[r * w + bw - (r - c)] = s / band[c * w + bw];
            }
        }
    }
    let mut y = vec![0.0; n];
    for u in 0..n {
        y[perm[u]] = rhs[u];
    }
    for r in 0..n {
        let mut s = y[r];
        for k in r.saturating_sub(bw)..r {
            s -= band[r * w + bw - (r - k)] * y[k];
        }
        y[r] = s / band[r * w + bw];
    }
    for r in (0..n).rev() {
        let mut s = y[r];
        for k in (r + 1)..(r + w).min(n) {
            s -= band[k * w + bw - (k - r)] * y[k];
        }
        y[r] = s / band[r * w + bw];
    }
    Ok((0..n).map(|u| y[perm[u]]).collect())
}
