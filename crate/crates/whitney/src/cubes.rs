//! Lattice-invariant dyadic Whitney cubes for `R^N \ h Z^N`.
//!
//! Work in cell units `u = x / h`. A dyadic cube `[k s, (k+1) s]^N` with `s = 2^-level`
//! is *admissible* when `diam <= dist(cube, Z^N)`. The decomposition is the set of
//! maximal admissible cubes: admissible with a non-admissible parent. This gives
//! `c1 = 1`, and since the parent fails, `dist < diam(parent) + diam(parent) = 4 diam`,
//! so `c2 = 4`. Every test is on integer keys, so translating by a lattice vector maps
//! the family onto itself exactly. In one dimension the rule produces the usual ladder
//! `[2^-j-1, 2^-j]` and its mirror image in every gap.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MAX_LEVEL_1D: u32 = 12;
pub const MAX_LEVEL_2D: u32 = 7;
pub const C1: f64 = 1.0;
pub const C2: f64 = 4.0;

/// Dyadic cube in cell units, anchored at the lattice point nearest to its center:
/// `anchor + [offset s, (offset + 1) s]^N` with `s = 2^-level`. Anchoring keeps the
/// offsets small at every depth, since a member cube lies within `4 diam` of the lattice.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeKey {
    pub level: u32,
    pub anchor: Vec<i64>,
    pub offset: Vec<i64>,
}

impl CubeKey {
    /// Canonical key: moves the anchor so the center lies in `[-1/2, 1/2]^N` around it.
    pub fn new(level: u32, mut anchor: Vec<i64>, mut offset: Vec<i64>) -> Self {
        if level < 62 {
            let n = 1i64 << level;
            for (a, o) in anchor.iter_mut().zip(offset.iter_mut()) {
                // center (o + 1/2) / n in [-1/2, 1/2]
                while 2 * *o + 1 > n {
                    *o -= n;
                    *a += 1;
                }
                while 2 * *o + 1 < -n {
                    *o += n;
                    *a -= 1;
                }
            }
        }
        Self { level, anchor, offset }
    }

    pub fn side(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn parent(&self) -> Option<CubeKey> {
        if self.level == 0 {
            return None;
        }
        Some(CubeKey::new(
            self.level - 1,
            self.anchor.clone(),
            self.offset.iter().map(|k| k.div_euclid(2)).collect(),
        ))
    }

    pub fn children(&self) -> Vec<CubeKey> {
        let n = self.dim();
        (0..1usize << n)
            .map(|bits| {
                CubeKey::new(
                    self.level + 1,
                    self.anchor.clone(),
                    (0..n).map(|i| 2 * self.offset[i] + ((bits >> i) & 1) as i64).collect(),
                )
            })
            .collect()
    }

    /// Translate by the lattice vector `z` (cell units).
    pub fn translated(&self, z: &[i64]) -> CubeKey {
        CubeKey {
            level: self.level,
            anchor: self.anchor.iter().zip(z).map(|(a, d)| a + d).collect(),
            offset: self.offset.clone(),
        }
    }

    /// `dist(cube, Z^N)^2` in cell units. Dyadic intervals of side at most 1/2 inside
    /// `[-1/2, 1/2]` never straddle 0, so the nearest integer is the anchor.
    pub fn lattice_dist2(&self) -> f64 {
        if self.level == 0 {
            return 0.0;
        }
        let s = self.side();
        self.offset
            .iter()
            .map(|&o| {
                let d = if o >= 0 { o as f64 * s } else { -((o + 1) as f64) * s };
                d * d
            })
            .sum()
    }

    pub fn diam2(&self) -> f64 {
        let s = self.side();
        s * s * self.dim() as f64
    }

    /// `diam <= dist(cube, Z^N)`, compared in units of the side so it stays exact at any depth.
    pub fn admissible(&self) -> bool {
        if self.level == 0 {
            return false;
        }
        let gaps: i128 = self
            .offset
            .iter()
            .map(|&o| {
                let k = if o >= 0 { o } else { -o - 1 } as i128;
                k * k
            })
            .sum();
        gaps >= self.dim() as i128
    }

    pub fn in_decomposition(&self) -> bool {
        self.admissible() && self.parent().map_or(true, |p| !p.admissible())
    }

    /// Center relative to the anchor, in cell units.
    pub fn relative_center(&self) -> Vec<f64> {
        let s = self.side();
        self.offset.iter().map(|&o| (o as f64 + 0.5) * s).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.relative_center().iter().zip(&self.anchor).map(|(c, &a)| a as f64 + c).collect()
    }

    /// Nearest lattice point to the center. It is unique: member cubes have side at
    /// most 1/4 and do not cross the hyperplanes halfway between lattice points.
    pub fn nearest(&self) -> Vec<i64> {
        self.anchor.clone()
    }
}

/// A cube of the decomposition in physical coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub key: CubeKey,
    pub center: Vec<f64>,
    pub diameter: f64,
    /// `dist(Q, G_m)`.
    pub dist: f64,
    /// Index of the nearest grid point to the center, in units of `h_m`.
    pub nearest: Vec<i64>,
}

impl Cube {
    pub fn new(key: CubeKey, h: f64) -> Self {
        let center = key.center().iter().map(|c| c * h).collect();
        let diameter = key.diam2().sqrt() * h;
        let dist = key.lattice_dist2().sqrt() * h;
        let nearest = key.nearest();
        Self {
            key,
            center,
            diameter,
            dist,
            nearest,
        }
    }

    /// `dist / diam`, which the construction keeps in `[C1, C2)`.
    pub fn ratio(&self) -> f64 {
        self.dist / self.diameter
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitneyDecomposition {
    pub m: u32,
    pub dim: usize,
    /// `h_m = 2^-m`.
    pub h: f64,
    /// Radius `2^m` of the truncation ball.
    pub window: f64,
    pub c1: f64,
    pub c2: f64,
    /// Depth below the cell to which `cell_cubes` is listed.
    pub depth: u32,
    /// Cubes inside the fundamental cell `[0, h]^N` down to `depth`; the full family
    /// is their lattice translates together with the finer cubes near the grid.
    pub cell_cubes: Vec<Cube>,
    /// Upper bound on `|grad phi| diam(Q)` for the partition functions.
    pub gradient_constant: f64,
    /// Upper bound on the number of stretched cubes `Q*` containing a point.
    pub overlap_bound: usize,
}

/// Deepest level the point queries descend to; points closer than about `2^-1000` cell
/// units to the lattice are treated as lattice points.
pub const MAX_DEPTH: u32 = 1000;

/// Nearest lattice point and the offset from it, in cell units. The subtraction is exact.
pub fn split(u: &[f64]) -> (Vec<i64>, Vec<f64>) {
    let anchor: Vec<i64> = u.iter().map(|v| v.round() as i64).collect();
    let r = u.iter().zip(&anchor).map(|(v, &a)| v - a as f64).collect();
    (anchor, r)
}

/// Default listing depth for the cell cubes.
pub const DEFAULT_DEPTH: u32 = 8;

/// Decomposition of `R^N \ G_m`, `G_m = 2^-m Z^N`.
pub fn decompose(m: u32, dim: usize) -> Result<WhitneyDecomposition> {
    decompose_to_depth(m, dim, DEFAULT_DEPTH)
}

pub fn decompose_to_depth(m: u32, dim: usize, depth: u32) -> Result<WhitneyDecomposition> {
    let cap = match dim {
        1 => MAX_LEVEL_1D,
        2 => MAX_LEVEL_2D,
        _ => return Err(Error::UnsupportedDimension(dim)),
    };
    if m > cap {
        return Err(Error::LevelCap { m, dim, cap });
    }
    let h = (-(m as f64)).exp2();
    let cell_cubes = cell_keys(dim, depth).into_iter().map(|k| Cube::new(k, h)).collect();
    let overlap_bound = crate::partition::LEVEL_SPAN * (1 << dim);
    Ok(WhitneyDecomposition {
        m,
        dim,
        h,
        window: (m as f64).exp2(),
        c1: C1,
        c2: C2,
        depth,
        cell_cubes,
        gradient_constant: crate::partition::gradient_constant(dim, overlap_bound),
        overlap_bound,
    })
}

/// Keys of decomposition cubes in `[0, 1]^N` with level at most `depth`.
pub fn cell_keys(dim: usize, depth: u32) -> Vec<CubeKey> {
    keys_in_cell(&vec![0; dim], depth)
}

/// Keys of decomposition cubes in the cell `corner + [0, 1]^N`, found by descending the
/// dyadic tree of that cell.
pub fn keys_in_cell(corner: &[i64], depth: u32) -> Vec<CubeKey> {
    let dim = corner.len();
    let mut out = Vec::new();
    let mut stack = vec![CubeKey::new(0, corner.to_vec(), vec![0; dim])];
    while let Some(q) = stack.pop() {
        if q.in_decomposition() {
            out.push(q);
        } else if q.level < depth && !q.admissible() {
            stack.extend(q.children());
        }
    }
    out.sort();
    out
}

impl WhitneyDecomposition {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("decomposition serializes")
    }

    /// Decomposition cubes whose closure lies in the box `[lo, hi]^N` (grid units),
    /// with level at most `depth`.
    pub fn cubes_in_box(&self, lo: i64, hi: i64, depth: u32) -> Vec<Cube> {
        let cell = cell_keys(self.dim, depth);
        let mut out = Vec::new();
        let mut offset = vec![lo; self.dim];
        loop {
            for k in &cell {
                let t = k.translated(&offset);
                out.push(Cube::new(t, self.h));
            }
            // odometer over cells
            let mut i = 0;
            loop {
                if i == self.dim {
                    out.sort_by(|a, b| a.key.cmp(&b.key));
                    return out;
                }
                offset[i] += 1;
                if offset[i] < hi {
                    break;
                }
                offset[i] = lo;
                i += 1;
            }
        }
    }

    /// The decomposition cube whose half-open box contains `x`, or `None` on `G_m`.
    pub fn cube_containing(&self, x: &[f64]) -> Option<CubeKey> {
        let u: Vec<f64> = x.iter().map(|v| v / self.h).collect();
        let (anchor, r) = split(&u);
        if r.iter().all(|&v| v == 0.0) {
            return None;
        }
        for level in 1..=MAX_DEPTH {
            let s = (-(level as f64)).exp2();
            let key = CubeKey::new(level, anchor.clone(), r.iter().map(|v| (v / s).floor() as i64).collect());
            if key.admissible() {
                return Some(key);
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_ladder() {
        let keys = cell_keys(1, 6);
        // [1/4, 1/2], [1/2, 3/4], then pairs shrinking towards 0 and 1
        let lens: Vec<(u32, i64, i64)> = keys.iter().map(|k| (k.level, k.anchor[0], k.offset[0])).collect();
        assert!(lens.contains(&(2, 0, 1)) && lens.contains(&(2, 1, -2)));
        assert!(lens.contains(&(3, 0, 1)) && lens.contains(&(3, 1, -2)));
        assert!(lens.contains(&(6, 0, 1)) && lens.contains(&(6, 1, -2)));
        assert_eq!(keys.len(), 10);
        for k in &keys {
            let c = Cube::new(k.clone(), 1.0);
            assert_eq!(c.ratio(), 1.0);
        }
    }

    #[test]
    fn ratios_within_constants_in_the_plane() {
        let d = decompose(3, 2).unwrap();
        assert!(!d.cell_cubes.is_empty());
        for c in &d.cell_cubes {
            assert!(c.ratio() >= C1 && c.ratio() < C2, "{c:?}");
        }
    }

    #[test]
    fn nearest_point_is_a_corner_of_the_cell() {
        for k in cell_keys(2, 7) {
            let n = k.nearest();
            assert!(n.iter().all(|&v| v == 0 || v == 1));
            assert!(k.offset.iter().all(|o| o.abs() <= 8), "{k:?}");
            let c = k.center();
            let d0: f64 = c.iter().zip(&n).map(|(a, b)| (a - *b as f64).powi(2)).sum();
            for other in [[0, 0], [0, 1], [1, 0], [1, 1]] {
                let d: f64 = c.iter().zip(other).map(|(a, b)| (a - b as f64).powi(2)).sum();
                assert!(d0 <= d);
                if other.to_vec() != n {
                    assert!(d0 < d);
                }
            }
        }
    }

    #[test]
    fn level_caps() {
        assert!(decompose(12, 1).is_ok());
        assert!(matches!(decompose(13, 1), Err(Error::LevelCap { .. })));
        assert!(decompose(7, 2).is_ok());
        assert!(matches!(decompose(8, 2), Err(Error::LevelCap { .. })));
        assert!(matches!(decompose(1, 3), Err(Error::UnsupportedDimension(3))));
    }

    #[test]
    fn containing_cube_is_a_member() {
        let d = decompose(2, 2).unwrap();
        for x in [[0.1, 0.2], [0.0001, 0.13], [-0.3, 0.7], [0.125, 0.0625]] {
            let k = d.cube_containing(&x).unwrap();
            assert!(k.in_decomposition());
        }
        assert!(d.cube_containing(&[0.25, -0.5]).is_none());
    }
}
