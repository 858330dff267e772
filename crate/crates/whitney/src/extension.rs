//! Grid restriction `T_m`, the extensions `E0` and `E1`, the projection `pi_m` and the
//! approximations `J^m`.

use crate::cubes::{split, MAX_LEVEL_1D, MAX_LEVEL_2D};
use crate::error::{Error, Result};
use crate::partition::weights;
use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex};

/// A function on `R^N` that can be sampled anywhere.
pub trait Field: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> f64;
}

pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Send + Sync> Field for FnField<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

pub fn field<F: Fn(&[f64]) -> f64 + Send + Sync + 'static>(dim: usize, f: F) -> Arc<dyn Field> {
    Arc::new(FnField { dim, f })
}

fn check_level(m: u32, dim: usize) -> Result<()> {
    let cap = match dim {
        1 => MAX_LEVEL_1D,
        2 => MAX_LEVEL_2D,
        _ => return Err(Error::UnsupportedDimension(dim)),
    };
    if m > cap {
        return Err(Error::LevelCap { m, dim, cap });
    }
    Ok(())
}

/// `T_m f`: values of the truncation `f 1_{B_{2^m}}` on `G_m`, read lazily from `f`.
#[derive(Clone)]
pub struct GridSamples {
    pub m: u32,
    pub dim: usize,
    pub h: f64,
    pub window: f64,
    source: Arc<dyn Field>,
}

impl std::fmt::Debug for GridSamples {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridSamples").field("m", &self.m).field("dim", &self.dim).finish()
    }
}

impl GridSamples {
    pub fn new(f: Arc<dyn Field>, m: u32) -> Result<Self> {
        let dim = f.dim();
        check_level(m, dim)?;
        Ok(Self {
            m,
            dim,
            h: (-(m as f64)).exp2(),
            window: (m as f64).exp2(),
            source: f,
        })
    }

    pub fn point(&self, idx: &[i64]) -> Vec<f64> {
        idx.iter().map(|&i| i as f64 * self.h).collect()
    }

    pub fn in_window(&self, idx: &[i64]) -> bool {
        let r2: f64 = self.point(idx).iter().map(|v| v * v).sum();
        r2 < self.window * self.window
    }

    /// Sample of the truncated function at grid index `idx`; zero outside the window.
    pub fn value(&self, idx: &[i64]) -> f64 {
        if self.in_window(idx) {
            self.source.eval(&self.point(idx))
        } else {
            0.0
        }
    }

    /// Centered difference of the truncated samples, no window check.
    fn gradient_unchecked(&self, idx: &[i64]) -> Vec<f64> {
        let mut nb = idx.to_vec();
        (0..self.dim)
            .map(|j| {
                nb[j] = idx[j] + 1;
                let up = self.value(&nb);
                nb[j] = idx[j] - 1;
                let down = self.value(&nb);
                nb[j] = idx[j];
                (up - down) / (2.0 * self.h)
            })
            .collect()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch(x.to_vec(), x.len(), self.dim));
        }
        Ok(())
    }
}

/// `grad_m u(x) . e_j = (u(x + h e_j) - u(x - h e_j)) / 2h` at the grid point with index `idx`.
pub fn discrete_gradient(g: &GridSamples, idx: &[i64]) -> Result<Vec<f64>> {
    if idx.len() != g.dim {
        return Err(Error::InvalidParameter {
            name: "idx",
            reason: format!("expected {} coordinates, got {}", g.dim, idx.len()),
        });
    }
    if !g.in_window(idx) {
        return Err(Error::OutsideWindow(idx.to_vec(), idx.to_vec()));
    }
    let mut nb = idx.to_vec();
    for j in 0..g.dim {
        for d in [-1, 1] {
            nb[j] = idx[j] + d;
            if !g.in_window(&nb) {
                return Err(Error::OutsideWindow(idx.to_vec(), nb.clone()));
            }
        }
        nb[j] = idx[j];
    }
    Ok(g.gradient_unchecked(idx))
}

/// `E0 g(x) = sum_k g(y_k) phi_k(x)`, or the sample itself on the grid.
pub fn extend0(g: &GridSamples, x: &[f64]) -> Result<f64> {
    g.check_dim(x)?;
    let u: Vec<f64> = x.iter().map(|v| v / g.h).collect();
    let (anchor, r) = split(&u);
    let w = weights(&u);
    if w.is_empty() || r.iter().all(|&v| v == 0.0) {
        // every cube near a grid point shares it as nearest point
        return Ok(g.value(&anchor));
    }
    Ok(w.iter().map(|k| k.phi * g.value(&k.key.anchor)).sum())
}

/// `P1_k` at the point `(base + u) h`, for the grid point `base + k`. Working in cell
/// offsets from `base` keeps the arithmetic identical under grid shifts.
fn first_order(g: &GridSamples, base: &[i64], k: &[i64], u: &[f64]) -> f64 {
    let idx: Vec<i64> = base.iter().zip(k).map(|(a, b)| a + b).collect();
    let grad = g.gradient_unchecked(&idx);
    g.value(&idx) + (0..g.dim).map(|j| grad[j] * (u[j] - k[j] as f64) * g.h).sum::<f64>()
}

fn extend1_cells(g: &GridSamples, base: &[i64], u: &[f64]) -> f64 {
    let (anchor, r) = split(u);
    if r.iter().all(|&v| v == 0.0) {
        let idx: Vec<i64> = base.iter().zip(&anchor).map(|(a, b)| a + b).collect();
        return g.value(&idx);
    }
    let w = weights(u);
    if w.is_empty() {
        return first_order(g, base, &anchor, u);
    }
    // group cubes by their grid point so each polynomial is built once
    let mut seen: Vec<(Vec<i64>, f64)> = Vec::new();
    for k in &w {
        match seen.iter_mut().find(|(a, _)| *a == k.key.anchor) {
            Some((_, phi)) => *phi += k.phi,
            None => seen.push((k.key.anchor.clone(), k.phi)),
        }
    }
    seen.iter().map(|(a, phi)| phi * first_order(g, base, a, u)).sum()
}

/// `E1 g(x) = sum_k P1_k(x) phi_k(x)`, or the sample itself on the grid.
pub fn extend1(g: &GridSamples, x: &[f64]) -> Result<f64> {
    g.check_dim(x)?;
    let u: Vec<f64> = x.iter().map(|v| v / g.h).collect();
    Ok(extend1_cells(g, &vec![0; g.dim], &u))
}

/// `pi_m f` seen from the grid point `base`: `eval(y) = pi_m f(base h + y)`.
struct Recentered<'a> {
    samples: &'a GridSamples,
    base: Vec<i64>,
}

impl Field for Recentered<'_> {
    fn dim(&self) -> usize {
        self.samples.dim
    }

    fn eval(&self, y: &[f64]) -> f64 {
        let u: Vec<f64> = y.iter().map(|v| v / self.samples.h).collect();
        extend1_cells(self.samples, &self.base, &u)
    }
}

/// `pi_m f = E1 T_m f`.
#[derive(Clone, Debug)]
pub struct Projection {
    pub samples: GridSamples,
}

pub fn project(f: Arc<dyn Field>, m: u32) -> Result<Projection> {
    Ok(Projection {
        samples: GridSamples::new(f, m)?,
    })
}

impl Field for Projection {
    fn dim(&self) -> usize {
        self.samples.dim
    }

    fn eval(&self, x: &[f64]) -> f64 {
        extend1(&self.samples, x).expect("dimension checked at construction")
    }
}

/// Black-box operator on sampled functions.
pub trait Operator: Send + Sync {
    fn apply(&self, f: &dyn Field, x: &[f64]) -> Result<f64>;

    /// Whether `J(f(. + z))(x) = (J f)(x + z)`. Such operators are evaluated around each
    /// grid point in local coordinates, which makes `J^m` exactly covariant under grid shifts.
    fn translation_invariant(&self) -> bool {
        false
    }
}

pub struct Identity;

impl Operator for Identity {
    fn apply(&self, f: &dyn Field, x: &[f64]) -> Result<f64> {
        Ok(f.eval(x))
    }

    fn translation_invariant(&self) -> bool {
        true
    }
}

/// `L_Delta f(x) = ∫_{B_r0} delta_h f(x) |h|^{-N-1} dh`. On the symmetric ball the
/// gradient term integrates to zero, so the integrand is the second difference
/// `f(x+h) + f(x-h) - 2 f(x)` over a half-ball, by Gauss-Legendre on `panels` panels in
/// the radius (and in the angle for `N = 2`).
#[derive(Clone, Debug)]
pub struct FractionalLaplacian {
    pub r0: f64,
    pub panels: usize,
    pub order: usize,
}

impl FractionalLaplacian {
    pub fn new(r0: f64, panels: usize) -> Self {
        Self { r0, panels, order: 8 }
    }
}

impl Operator for FractionalLaplacian {
    fn apply(&self, f: &dyn Field, x: &[f64]) -> Result<f64> {
        let dim = f.dim();
        if x.len() != dim {
            return Err(Error::DimensionMismatch(x.to_vec(), x.len(), dim));
        }
        let (nodes, wts) = gauss_legendre(self.order);
        let fx = f.eval(x);
        let width = self.r0 / self.panels as f64;
        let second = |dir: &[f64], rho: f64| {
            let p: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a + rho * d).collect();
            let q: Vec<f64> = x.iter().zip(dir).map(|(a, d)| a - rho * d).collect();
            f.eval(&p) + f.eval(&q) - 2.0 * fx
        };
        let mut total = 0.0;
        for p in 0..self.panels {
            let a = p as f64 * width;
            for (t, w) in nodes.iter().zip(&wts) {
                let rho = a + 0.5 * width * (t + 1.0);
                let wr = 0.5 * width * w;
                match dim {
                    1 => total += wr * second(&[1.0], rho) / (rho * rho),
                    2 => {
                        // |h|^-3 h dh dtheta over theta in [0, pi)
                        let mut ang = 0.0;
                        let na = 4 * self.order;
                        for k in 0..na {
                            let th = std::f64::consts::PI * (k as f64 + 0.5) / na as f64;
                            ang += second(&[th.cos(), th.sin()], rho);
                        }
                        total += wr * ang * std::f64::consts::PI / na as f64 / (rho * rho);
                    }
                    _ => return Err(Error::UnsupportedDimension(dim)),
                }
            }
        }
        Ok(total)
    }

    fn translation_invariant(&self) -> bool {
        true
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// `J^m f = E0 T_m J pi_m f`. Values of `J pi_m f` on the grid are cached.
pub struct Approximation {
    op: Arc<dyn Operator>,
    projection: Projection,
    cache: Mutex<HashMap<Vec<i64>, f64>>,
}

pub fn approximate(op: Arc<dyn Operator>, f: Arc<dyn Field>, m: u32) -> Result<Approximation> {
    Ok(Approximation {
        op,
        projection: project(f, m)?,
        cache: Mutex::new(HashMap::new()),
    })
}

impl Approximation {
    pub fn projection(&self) -> &Projection {
        &self.projection
    }

    /// `T_m J pi_m f` at the grid index `idx`.
    pub fn grid_value(&self, idx: &[i64]) -> Result<f64> {
        if let Some(v) = self.cache.lock().expect("cache lock").get(idx) {
            return Ok(*v);
        }
        let g = &self.projection.samples;
        let v = if !g.in_window(idx) {
            0.0
        } else if self.op.translation_invariant() {
            let local = Recentered {
                samples: g,
                base: idx.to_vec(),
            };
            self.op.apply(&local, &vec![0.0; g.dim])?
        } else {
            self.op.apply(&self.projection, &g.point(idx))?
        };
        self.cache.lock().expect("cache lock").insert(idx.to_vec(), v);
        Ok(v)
    }

    /// Fills the cache for every grid point that the partition uses around `points`.
    pub fn prefetch(&self, points: &[Vec<f64>]) -> Result<()> {
        let h = self.projection.samples.h;
        let mut need: Vec<Vec<i64>> = points
            .iter()
            .flat_map(|x| {
                let u: Vec<f64> = x.iter().map(|v| v / h).collect();
                let mut idx: Vec<Vec<i64>> = weights(&u).into_iter().map(|w| w.key.anchor).collect();
                idx.push(split(&u).0);
                idx
            })
            .collect();
        need.sort();
        need.dedup();
        need.par_iter().try_for_each(|idx| self.grid_value(idx).map(|_| ()))
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let g = &self.projection.samples;
        g.check_dim(x)?;
        let u: Vec<f64> = x.iter().map(|v| v / g.h).collect();
        let (anchor, r) = split(&u);
        let w = weights(&u);
        if w.is_empty() || r.iter().all(|&v| v == 0.0) {
            return self.grid_value(&anchor);
        }
        let mut acc = 0.0;
        for k in &w {
            acc += k.phi * self.grid_value(&k.key.anchor)?;
        }
        Ok(acc)
    }
}
