//! Interaction weight between two axis-aligned boxes.

use super::lattice::{box_pair_leaf, extra_points, leaf_order, LatticeTable, LEAF_SEPARATION};
use super::rules::gauss_legendre_cached;
use super::QuadratureOptions;
use crate::error::{Error, Result};
use crate::geometry::P3;
use crate::kernel::KernelParams;

/// Axis-aligned box given by its lower and upper corners.
pub type CellBox = (P3, P3);

/// `s(1-s) * iint_{a x b} |x-y|^{-(n+s)}` for disjoint boxes (touching allowed).
///
/// Congruent boxes on a common lattice use the self-similar recursion, which
/// resolves touching pairs exactly. Other pairs are split recursively until they
/// are separated by twice their diameter or the depth limit is reached; touching
/// pairs of unequal boxes therefore carry a truncation error that shrinks like
/// `2^{-depth (1-s)}` relative to the near-contact part.
pub fn pair_weight(a: &CellBox, b: &CellBox, k: &KernelParams, opts: &QuadratureOptions) -> Result<f64> {
    let n = k.n;
    for bx in [a, b] {
        if (0..n).any(|i| !(bx.1[i] > bx.0[i])) {
            return Err(Error::param("cell", "boxes need hi > lo on every axis"));
        }
    }
    if (0..n).all(|i| a.0[i] < b.1[i] && b.0[i] < a.1[i]) {
        return Err(Error::Overlap);
    }
    if let Some(o) = lattice_offset(a, b, n) {
        let h = dims(a, n);
        let table = LatticeTable::new(*k, h, [0, 0, 0], opts.near_field_rel_tol);
        return Ok(table.compute(o));
    }
    Ok(recurse(a, b, k, opts, 0))
}

fn dims(a: &CellBox, n: usize) -> P3 {
    let mut h = [1.0; 3];
    for i in 0..n {
        h[i] = a.1[i] - a.0[i];
    }
    h
}

/// Integer offset between congruent boxes whose corners differ by whole cells.
fn lattice_offset(a: &CellBox, b: &CellBox, n: usize) -> Option<[i64; 3]> {
    let mut o = [0i64; 3];
    for i in 0..n {
        let ha = a.1[i] - a.0[i];
        let hb = b.1[i] - b.0[i];
        if (ha - hb).abs() > 1e-12 * ha {
            return None;
        }
        let t = (b.0[i] - a.0[i]) / ha;
        let r = t.round();
        if (t - r).abs() > 1e-9 {
            return None;
        }
        o[i] = r as i64;
    }
    Some(o)
}

fn gap_between(a: &CellBox, b: &CellBox, n: usize) -> f64 {
    (0..n)
        .map(|i| {
            let g = (b.0[i] - a.1[i]).max(a.0[i] - b.1[i]).max(0.0);
            g * g
        })
        .sum::<f64>()
        .sqrt()
}

fn diameter(a: &CellBox, n: usize) -> f64 {
    (0..n).map(|i| (a.1[i] - a.0[i]).powi(2)).sum::<f64>().sqrt()
}

fn recurse(a: &CellBox, b: &CellBox, k: &KernelParams, opts: &QuadratureOptions, depth: usize) -> f64 {
    let n = k.n;
    let diam = diameter(a, n).max(diameter(b, n));
    let gap = gap_between(a, b, n);
    if gap >= LEAF_SEPARATION * diam || depth >= opts.max_subdivision_depth {
        let q = leaf_order(gap / diam, extra_points(opts.near_field_rel_tol)).max(2);
        return general_leaf(a, b, k, q);
    }
    let mut acc = 0.0;
    for ca in split(a, n) {
        for cb in split(b, n) {
            acc += recurse(&ca, &cb, k, opts, depth + 1);
        }
    }
    acc
}

fn split(a: &CellBox, n: usize) -> Vec<CellBox> {
    let mut out = Vec::with_capacity(1 << n);
    for m in 0..(1usize << n) {
        let mut lo = a.0;
        let mut hi = a.1;
        for i in 0..n {
            let mid = 0.5 * (a.0[i] + a.1[i]);
            if (m >> i) & 1 == 0 {
                hi[i] = mid;
            } else {
                lo[i] = mid;
            }
        }
        out.push((lo, hi));
    }
    out
}

/// Tensor Gauss rule on two boxes of arbitrary (possibly different) sizes.
fn general_leaf(a: &CellBox, b: &CellBox, k: &KernelParams, q: usize) -> f64 {
    let n = k.n;
    let ha = dims(a, n);
    let hb = dims(b, n);
    if (0..n).all(|i| (ha[i] - hb[i]).abs() <= 1e-14 * ha[i]) {
        let c = [b.0[0] - a.0[0], b.0[1] - a.0[1], b.0[2] - a.0[2]];
        return box_pair_leaf(k, &ha, &c, q);
    }
    let rule = gauss_legendre_cached(q);
    let pts = |bx: &CellBox| -> Vec<(P3, f64)> {
        let mut out = vec![([0.0; 3], 1.0)];
        for i in 0..n {
            let mut next = Vec::with_capacity(out.len() * q);
            let (c, h) = (0.5 * (bx.0[i] + bx.1[i]), 0.5 * (bx.1[i] - bx.0[i]));
            for (p, w) in &out {
                for (x, wx) in rule.0.iter().zip(&rule.1) {
                    let mut p2 = *p;
                    p2[i] = c + h * x;
                    next.push((p2, w * wx * h));
                }
            }
            out = next;
        }
        out
    };
    let pa = pts(a);
    let pb = pts(b);
    let mut acc = 0.0;
    for (x, wx) in &pa {
        for (y, wy) in &pb {
            let r2: f64 = (0..n).map(|i| (x[i] - y[i]).powi(2)).sum();
            acc += wx * wy * r2.powf(-0.5 * k.exponent());
        }
    }
    k.normalization() * acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize, at: f64) -> CellBox {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        lo[0] = at;
        hi[0] = at + 1.0;
        for i in 1..n {
            hi[i] = 1.0;
        }
        (lo, hi)
    }

    #[test]
    fn adjacent_unit_intervals() {
        // s(1-s) iint_{[0,1]x[1,2]} |x-y|^{-1-s} = 2 - 2^{1-s}
        let k = KernelParams::new(1, 0.5).unwrap();
        let opts = QuadratureOptions::default();
        let w = pair_weight(&unit(1, 0.0), &unit(1, 1.0), &k, &opts).unwrap();
        assert!((w - (2.0 - 2f64.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn far_cells_follow_the_kernel() {
        let k = KernelParams::new(2, 0.3).unwrap();
        let opts = QuadratureOptions::default();
        let mut last = f64::INFINITY;
        for d in [10.0, 100.0, 1000.0] {
            let w = pair_weight(&unit(2, 0.0), &unit(2, d), &k, &opts).unwrap();
            let approx = k.normalization() * d.powf(-k.exponent());
            let rel = (w / approx - 1.0).abs();
            assert!(rel < last);
            last = rel;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn symmetric_and_overlap_rejected() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let opts = QuadratureOptions { max_subdivision_depth: 5, ..Default::default() };
        let a = ([0.0, 0.0, 0.0], [1.0, 0.5, 0.0]);
        let b = ([1.0, 0.2, 0.0], [1.7, 1.0, 0.0]);
        let w1 = pair_weight(&a, &b, &k, &opts).unwrap();
        let w2 = pair_weight(&b, &a, &k, &opts).unwrap();
        assert!((w1 - w2).abs() < 1e-12 * w1);
        assert!(matches!(pair_weight(&a, &a, &k, &opts), Err(Error::Overlap)));
    }

    #[test]
    fn non_lattice_split_matches_lattice_path() {
        // a unit square against the union of two half cells equals the unit pair
        let k = KernelParams::new(2, 0.5).unwrap();
        let opts = QuadratureOptions::default();
        let a = unit(2, 0.0);
        let b = unit(2, 3.0);
        let whole = pair_weight(&a, &b, &k, &opts).unwrap();
        let b1 = ([3.0, 0.0, 0.0], [4.0, 0.3, 0.0]);
        let b2 = ([3.0, 0.3, 0.0], [4.0, 1.0, 0.0]);
        let parts = pair_weight(&a, &b1, &k, &opts).unwrap() + pair_weight(&a, &b2, &k, &opts).unwrap();
        assert!(((whole - parts) / whole).abs() < 1e-6);
    }
}
