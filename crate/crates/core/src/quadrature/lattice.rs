//! Pair weights between congruent cells of a uniform grid.
//!
//! For two cells at integer offset `o`, splitting each into `2^n` halves gives
//! `W(o) = 2^{-(n-s)} * sum_{a,b in {0,1}^n} W(2o + b - a)`. Offsets far enough
//! apart are evaluated with a tensor Gauss rule; the touching offsets (sup-norm 1)
//! close the recursion through a small linear system.

use rayon::prelude::*;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use super::rules::gauss_legendre_cached;
use crate::geometry::P3;
use crate::kernel::KernelParams;

/// Separation (gap / cell diameter) at which the recursion stops.
pub const LEAF_SEPARATION: f64 = 2.0;

/// Leaf rule chosen from the separation ratio `gap / diameter`.
///
/// Orders were tuned so that the relative leaf error stays below about 1e-7
/// for `s` in (0,1) and n <= 3; `extra` adds points for tighter tolerances.
pub fn leaf_order(ratio: f64, extra: usize) -> usize {
    let base = if ratio < 4.0 {
        5
    } else if ratio < 8.0 {
        4
    } else if ratio < 60.0 {
        3
    } else {
        1
    };
    base + extra
}

/// Extra leaf points needed to reach `rel_tol`.
pub fn extra_points(rel_tol: f64) -> usize {
    if rel_tol >= 1e-7 {
        0
    } else if rel_tol >= 1e-9 {
        1
    } else {
        2
    }
}

/// Tensor Gauss-Legendre approximation of `s(1-s) * iint |x-y|^{-(n+s)}` over two
/// boxes with dimensions `h`, whose lower corners differ by `c`. Order 1 uses the
/// midpoint value with its second-order moment correction.
pub fn box_pair_leaf(k: &KernelParams, h: &P3, c: &P3, order: usize) -> f64 {
    let n = k.n;
    let p = k.exponent();
    let vol: f64 = h[..n].iter().product();
    if order <= 1 {
        let r2: f64 = c[..n].iter().map(|x| x * x).sum();
        // E[f(c + z)] with z the difference of two uniform points: f + (1/12) sum h_i^2 f_ii
        let corr: f64 = (0..n).map(|i| h[i] * h[i] * p * ((p + 2.0) * c[i] * c[i] / r2 - 1.0) / r2).sum::<f64>() / 12.0;
        return k.normalization() * vol * vol * r2.powf(-0.5 * p) * (1.0 + corr);
    }
    let rule = gauss_legendre_cached(order);
    let (x, w) = (&rule.0, &rule.1);
    // differences of 1D nodes (in cell units) with product weights, per axis
    let q = order;
    let mut diff: Vec<Vec<(f64, f64)>> = Vec::with_capacity(n);
    for axis in 0..n {
        let mut d = Vec::with_capacity(q * q);
        for i in 0..q {
            for j in 0..q {
                let dx = c[axis] + 0.5 * h[axis] * (x[j] - x[i]);
                d.push((dx * dx, 0.25 * w[i] * w[j]));
            }
        }
        diff.push(d);
    }
    let e = -0.5 * p;
    let mut acc = 0.0;
    match n {
        1 => {
            for (d0, w0) in &diff[0] {
                acc += w0 * d0.powf(e);
            }
        }
        2 => {
            for (d0, w0) in &diff[0] {
                for (d1, w1) in &diff[1] {
                    acc += w0 * w1 * (d0 + d1).powf(e);
                }
            }
        }
        _ => {
            for (d0, w0) in &diff[0] {
                for (d1, w1) in &diff[1] {
                    let r01 = d0 + d1;
                    let w01 = w0 * w1;
                    for (d2, w2) in &diff[2] {
                        acc += w01 * w2 * (r01 + d2).powf(e);
                    }
                }
            }
        }
    }
    k.normalization() * vol * vol * acc
}

/// Gap between two congruent cells at integer offset `o` and the cell diameter.
fn gap_and_diameter(n: usize, h: &P3, o: &[i64; 3]) -> (f64, f64) {
    let mut g2 = 0.0;
    let mut d2 = 0.0;
    for i in 0..n {
        let gi = ((o[i].abs() - 1).max(0)) as f64 * h[i];
        g2 += gi * gi;
        d2 += h[i] * h[i];
    }
    (g2.sqrt(), d2.sqrt())
}

/// Pair weights for one cell shape, keyed by absolute integer offsets.
#[derive(Debug)]
pub struct LatticeTable {
    pub kernel: KernelParams,
    pub h: P3,
    /// Largest absolute offset stored per axis.
    pub extent: [usize; 3],
    values: Vec<f64>,
    /// Estimated relative quadrature error of the entries.
    pub rel_error: f64,
    extra: usize,
}

impl LatticeTable {
    pub fn new(kernel: KernelParams, h: P3, extent: [usize; 3], rel_tol: f64) -> Self {
        let n = kernel.n;
        let mut ext = [0usize; 3];
        ext[..n].copy_from_slice(&extent[..n]);
        let extra = extra_points(rel_tol);
        let mut b = Builder { k: kernel, h, extra, memo: HashMap::new() };
        b.solve_touching();
        let dims: Vec<usize> = (0..3).map(|i| ext[i] + 1).collect();
        let total = dims[0] * dims[1] * dims[2];
        let mut values = vec![0.0; total];
        let offset = |idx: usize| {
            [(idx / (dims[1] * dims[2])) as i64, ((idx / dims[2]) % dims[1]) as i64, (idx % dims[2]) as i64]
        };
        // far entries are independent leaves; near ones go through the memoized recursion
        values.par_iter_mut().enumerate().for_each(|(idx, v)| {
            let o = offset(idx);
            let (gap, diam) = gap_and_diameter(n, &h, &o);
            if gap >= LEAF_SEPARATION * diam {
                let c = [o[0] as f64 * h[0], o[1] as f64 * h[1], o[2] as f64 * h[2]];
                *v = box_pair_leaf(&kernel, &h, &c, leaf_order(gap / diam, extra));
            }
        });
        for (idx, v) in values.iter_mut().enumerate() {
            let o = offset(idx);
            let (gap, diam) = gap_and_diameter(n, &h, &o);
            if o != [0, 0, 0] && gap < LEAF_SEPARATION * diam {
                *v = b.weight(o);
            }
        }
        let rel_error = estimate_leaf_error(&kernel, &h, extra);
        Self { kernel, h, extent: ext, values, rel_error, extra }
    }

    /// Weight for the integer offset `o` (self pair `o = 0` returns 0).
    #[inline]
    pub fn get(&self, o: [i64; 3]) -> f64 {
        let a = [o[0].unsigned_abs() as usize, o[1].unsigned_abs() as usize, o[2].unsigned_abs() as usize];
        if a[0] <= self.extent[0] && a[1] <= self.extent[1] && a[2] <= self.extent[2] {
            self.values[(a[0] * (self.extent[1] + 1) + a[1]) * (self.extent[2] + 1) + a[2]]
        } else {
            self.compute(o)
        }
    }

    /// Direct evaluation for offsets outside the stored range.
    pub fn compute(&self, o: [i64; 3]) -> f64 {
        let n = self.kernel.n;
        let (gap, diam) = gap_and_diameter(n, &self.h, &o);
        if gap >= LEAF_SEPARATION * diam {
            let c = [o[0] as f64 * self.h[0], o[1] as f64 * self.h[1], o[2] as f64 * self.h[2]];
            box_pair_leaf(&self.kernel, &self.h, &c, leaf_order(gap / diam, self.extra))
        } else {
            // inside the stored range by construction for any table with extent >= 6
            let mut b = Builder { k: self.kernel, h: self.h, extra: self.extra, memo: HashMap::new() };
            b.solve_touching();
            b.weight(o)
        }
    }

    /// Raw table slice, indexed by `(|o0| * (e1+1) + |o1|) * (e2+1) + |o2|`.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

struct Builder {
    k: KernelParams,
    h: P3,
    extra: usize,
    memo: HashMap<[i64; 3], f64>,
}

impl Builder {
    fn children(&self, o: [i64; 3]) -> Vec<[i64; 3]> {
        let n = self.k.n;
        let mut out = Vec::with_capacity(1 << (2 * n));
        for a in 0..(1usize << n) {
            for b in 0..(1usize << n) {
                let mut q = [0i64; 3];
                for i in 0..n {
                    let ai = ((a >> i) & 1) as i64;
                    let bi = ((b >> i) & 1) as i64;
                    q[i] = (2 * o[i] + bi - ai).abs();
                }
                out.push(q);
            }
        }
        out
    }

    fn factor(&self) -> f64 {
        2f64.powf(-self.k.scaling_degree())
    }

    fn weight(&mut self, o: [i64; 3]) -> f64 {
        let o = [o[0].abs(), o[1].abs(), o[2].abs()];
        if let Some(v) = self.memo.get(&o) {
            return *v;
        }
        let n = self.k.n;
        let (gap, diam) = gap_and_diameter(n, &self.h, &o);
        let v = if gap >= LEAF_SEPARATION * diam {
            let c = [o[0] as f64 * self.h[0], o[1] as f64 * self.h[1], o[2] as f64 * self.h[2]];
            box_pair_leaf(&self.k, &self.h, &c, leaf_order(gap / diam, self.extra))
        } else {
            let mut acc = 0.0;
            for q in self.children(o) {
                acc += self.weight(q);
            }
            self.factor() * acc
        };
        self.memo.insert(o, v);
        v
    }

    /// Touching offsets satisfy `x = f (M x + F)`; solve `(I - f M) x = f F`.
    fn solve_touching(&mut self) {
        let n = self.k.n;
        let near: Vec<[i64; 3]> = (1..(1usize << n))
            .map(|m| {
                let mut o = [0i64; 3];
                for (i, oi) in o.iter_mut().enumerate().take(n) {
                    *oi = ((m >> i) & 1) as i64;
                }
                o
            })
            .collect();
        let m = near.len();
        let index = |q: &[i64; 3]| near.iter().position(|x| x == q);
        let f = self.factor();
        let mut a = vec![vec![0.0; m]; m];
        let mut rhs = vec![0.0; m];
        for (r, o) in near.iter().enumerate() {
            a[r][r] += 1.0;
            for q in self.children(*o) {
                match index(&q) {
                    Some(c) => a[r][c] -= f,
                    None => rhs[r] += f * self.weight(q),
                }
            }
        }
        let x = solve_dense(a, rhs);
        for (o, v) in near.iter().zip(x) {
            self.memo.insert(*o, v);
        }
    }
}

/// Gaussian elimination with partial pivoting for the tiny touching system.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let m = b.len();
    for col in 0..m {
        let piv = (col..m).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..m {
            let f = a[row][col] / a[col][col];
            for c in col..m {
                a[row][c] -= f * a[col][c];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; m];
    for row in (0..m).rev() {
        let mut acc = b[row];
        for c in row + 1..m {
            acc -= a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    x
}

/// Relative change of the leaf value when one more point per axis is used,
/// maximized over representative separations; bounds the table's relative error.
fn estimate_leaf_error(k: &KernelParams, h: &P3, extra: usize) -> f64 {
    let n = k.n;
    let diam = (0..n).map(|i| h[i] * h[i]).sum::<f64>().sqrt();
    let mut worst: f64 = 0.0;
    for ratio in [2.0, 4.0, 8.0, 60.0] {
        // offset along the longest axis giving the requested gap
        let axis = (0..n).max_by(|&i, &j| h[i].partial_cmp(&h[j]).unwrap()).unwrap();
        let steps = (ratio * diam / h[axis]).ceil() + 1.0;
        let mut c = [0.0; 3];
        c[axis] = steps * h[axis];
        let (gap, _) = gap_and_diameter(n, h, &[if axis == 0 { steps as i64 } else { 0 }, if axis == 1 { steps as i64 } else { 0 }, if axis == 2 { steps as i64 } else { 0 }]);
        let q = leaf_order(gap / diam, extra);
        let a = box_pair_leaf(k, h, &c, q);
        let b = box_pair_leaf(k, h, &c, q.max(2) + 2);
        worst = worst.max(((a - b) / b).abs());
    }
    // the recursion mixes leaves, so the table inherits the worst leaf error
    worst.max(1e-15)
}

/// Tables cached per kernel, cell shape and tolerance class.
pub fn shared_table(kernel: KernelParams, h: P3, extent: [usize; 3], rel_tol: f64) -> Arc<LatticeTable> {
    type Key = (usize, u64, [u64; 3], [usize; 3], usize);
    static CACHE: OnceLock<Mutex<HashMap<Key, Arc<LatticeTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let key: Key = (kernel.n, kernel.s.to_bits(), h.map(f64::to_bits), extent, extra_points(rel_tol));
    if let Some(t) = cache.lock().unwrap().get(&key) {
        return t.clone();
    }
    let t = Arc::new(LatticeTable::new(kernel, h, extent, rel_tol));
    let mut guard = cache.lock().unwrap();
    if guard.len() > 64 {
        guard.clear();
    }
    guard.insert(key, t.clone());
    t
}
