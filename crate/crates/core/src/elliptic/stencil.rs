//! Monotone assembly of `-div(A grad V)` on the vertex grid.
//!
//! At every vertex the scaled tensor `D = E^-1 A E^-1` (`E = diag(dx, dy)`) is
//! split with Selling's obtuse superbase into three nonnegative rank-one terms
//! `w_k v_k v_k^T` over integer offsets `v_k`. An edge `(x, x + v)` gets the
//! average of the weights its two endpoints assign to `v`, so the matrix is
//! symmetric with nonpositive off-diagonals.

/// Offsets and nonnegative weights with `sum w v v^T = [[d11, d12], [d12, d22]]`.
pub fn selling(d11: f64, d12: f64, d22: f64) -> [([i64; 2], f64); 3] {
    let dot = |u: [i64; 2], v: [i64; 2]| {
        d11 * (u[0] * v[0]) as f64 + d12 * (u[0] * v[1] + u[1] * v[0]) as f64 + d22 * (u[1] * v[1]) as f64
    };
    let mut e: [[i64; 2]; 3] = [[1, 0], [0, 1], [-1, -1]];
    let pairs = [(0usize, 1usize, 2usize), (0, 2, 1), (1, 2, 0)];
    for _ in 0..10_000 {
        let Some(&(i, j, k)) = pairs.iter().find(|&&(i, j, _)| dot(e[i], e[j]) > 0.0) else {
            break;
        };
        let (ei, ej) = (e[i], e[j]);
        e[i] = [-ei[0], -ei[1]];
        e[k] = [ei[0] - ej[0], ei[1] - ej[1]];
    }
    pairs.map(|(i, j, k)| {
        let v = canonical([-e[k][1], e[k][0]]);
        (v, (-dot(e[i], e[j])).max(0.0))
    })
}

fn canonical(v: [i64; 2]) -> [i64; 2] {
    if v[1] < 0 || (v[1] == 0 && v[0] < 0) {
        [-v[0], -v[1]]
    } else {
        v
    }
}

/// Counters for stencil edges that could not be kept.
#[derive(Clone, Debug, Default, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MonotonicityAudit {
    /// Edges from an interior vertex that cross a boundary row and end on it instead.
    pub cut_edges: usize,
    /// Off-diagonal entries with the wrong sign (none by construction).
    pub positive_offdiagonals: usize,
    pub max_offset: [i64; 2],
}

/// Symmetric system on the interior rows `1..ny` with the Dirichlet rows folded in.
#[derive(Clone, Debug)]
pub struct System {
    pub nx: usize,
    pub ny: usize,
    pub diag: Vec<f64>,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<u32>,
    pub vals: Vec<f64>,
    /// Per interior unknown, the boundary couplings `(boundary vertex, weight)`.
    pub boundary: Vec<Vec<(usize, f64)>>,
    /// Row-averaged `d11` (rows `1..ny`) and `d22` between consecutive rows.
    pub row_d11: Vec<f64>,
    pub row_d22_half: Vec<f64>,
    pub audit: MonotonicityAudit,
}

impl System {
    pub fn unknowns(&self) -> usize {
        self.nx * (self.ny - 1)
    }

    /// `y = K x` over unknowns.
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for u in 0..self.unknowns() {
            let mut acc = self.diag[u] * x[u];
            for p in self.row_ptr[u]..self.row_ptr[u + 1] {
                acc -= self.vals[p] * x[self.cols[p] as usize];
            }
            y[u] = acc;
        }
    }

    /// Entry `K[u][v]`, used by the direct factorization.
    pub fn entries(&self, u: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        std::iter::once((u, self.diag[u])).chain(
            (self.row_ptr[u]..self.row_ptr[u + 1]).map(move |p| (self.cols[p] as usize, -self.vals[p])),
        )
    }
}

/// Assemble from vertex coefficient fields of length `(ny + 1) * nx`, row-major in `j`.
pub fn assemble(nx: usize, ny: usize, dx: f64, dy: f64, a11: &[f64], a12: &[f64], a22: &[f64]) -> System {
    let nv = (ny + 1) * nx;
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nv];
    let mut audit = MonotonicityAudit::default();
    let add = |adj: &mut Vec<Vec<(usize, f64)>>, a: usize, b: usize, w: f64| {
        for (s, t) in [(a, b), (b, a)] {
            match adj[s].iter_mut().find(|(n, _)| *n == t) {
                Some(slot) => slot.1 += w,
                None => adj[s].push((t, w)),
            }
        }
    };
    let mut d11_row = vec![0.0; ny + 1];
    let mut d22_row = vec![0.0; ny + 1];
    for j in 0..=ny {
        for i in 0..nx {
            let v = j * nx + i;
            let (d11, d12, d22) = (a11[v] / (dx * dx), a12[v] / (dx * dy), a22[v] / (dy * dy));
            d11_row[j] += d11 / nx as f64;
            d22_row[j] += d22 / nx as f64;
            for (off, w) in selling(d11, d12, d22) {
                if w == 0.0 {
                    continue;
                }
                audit.max_offset = [audit.max_offset[0].max(off[0].abs()), audit.max_offset[1].max(off[1])];
                for sign in [1i64, -1] {
                    let jj = j as i64 + sign * off[1];
                    if jj < 0 || jj > ny as i64 {
                        if j > 0 && j < ny {
                            // cut the edge where it meets the boundary row; the full
                            // weight over the shortened length keeps first-order terms balanced
                            audit.cut_edges += 1;
                            let jb = if jj < 0 { 0 } else { ny };
                            let t = j.abs_diff(jb) as f64 / off[1].abs() as f64;
                            let xi = i as f64 + (sign * off[0]) as f64 * t;
                            let i0 = xi.floor();
                            let theta = xi - i0;
                            let i0 = (i0 as i64).rem_euclid(nx as i64) as usize;
                            let i1 = (i0 + 1) % nx;
                            add(&mut adj, v, jb * nx + i0, (1.0 - theta) * w / t);
                            if theta > 0.0 {
                                add(&mut adj, v, jb * nx + i1, theta * w / t);
                            }
                        }
                        continue;
                    }
                    let ii = (i as i64 + sign * off[0]).rem_euclid(nx as i64) as usize;
                    let nb = jj as usize * nx + ii;
                    // each endpoint contributes half of its weight to the shared edge
                    if sign == 1 {
                        add(&mut adj, v, nb, 0.5 * w);
                    } else {
                        add(&mut adj, nb, v, 0.5 * w);
                    }
                }
            }
        }
    }
    let n = nx * (ny - 1);
    let mut diag = vec![0.0; n];
    let mut row_ptr = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut boundary = vec![Vec::new(); n];
    row_ptr.push(0);
    for u in 0..n {
        let v = u + nx;
        let mut list = adj[v].clone();
        list.sort_by_key(|e| e.0);
        for (nb, w) in list {
            if w < 0.0 {
                audit.positive_offdiagonals += 1;
            }
            diag[u] += w;
            let jn = nb / nx;
            if jn == 0 || jn == ny {
                boundary[u].push((nb, w));
            } else {
                cols.push((nb - nx) as u32);
                vals.push(w);
            }
        }
        row_ptr.push(cols.len());
    }
    let row_d11 = d11_row.clone();
    let row_d22_half = (0..ny).map(|j| 0.5 * (d22_row[j] + d22_row[j + 1])).collect();
    System {
        nx,
        ny,
        diag,
        row_ptr,
        cols,
        vals,
        boundary,
        row_d11,
        row_d22_half,
        audit,
    }
}
