//! Potentials of sets outside the computational box, integrated along rays.
//!
//! For a point `x` inside the box, `int_{X \ box} |x-y|^{-(n+s)} dy` equals
//! `(1/s) int_{S^{n-1}} sum (a^{-s} - b^{-s}) dw` over the intervals `[a,b]` of the ray
//! `x + t w` that lie in `X` beyond the box exit. The radial part is exact.

use std::f64::consts::PI;

use super::rules::{gauss_legendre_cached, integrate_adaptive};
use crate::geometry::shape::interval_clip_below;
use crate::geometry::{Intervals, ShapeExpr, P3};

/// Distance from `x` (inside the box) to the box boundary along the unit vector `d`.
pub fn box_exit(x: &P3, d: &P3, lo: &P3, hi: &P3, n: usize) -> f64 {
    let mut t = f64::INFINITY;
    for i in 0..n {
        if d[i] > 0.0 {
            t = t.min((hi[i] - x[i]) / d[i]);
        } else if d[i] < 0.0 {
            t = t.min((lo[i] - x[i]) / d[i]);
        }
    }
    t.max(0.0)
}

/// `(1/s) sum (a^{-s} - b^{-s})` over intervals.
pub fn radial_sum(iv: &Intervals, s: f64) -> f64 {
    let mut acc = 0.0;
    for &(a, b) in iv {
        let fa = if a > 0.0 { a.powf(-s) } else { f64::INFINITY };
        let fb = if b.is_finite() { b.powf(-s) } else { 0.0 };
        acc += fa - fb;
    }
    acc / s
}

/// Integral over the unit sphere `S^{n-1}` with an error estimate.
///
/// In 2D the circle is split at `breaks` (angles where the integrand has kinks)
/// and each arc is integrated adaptively. In 3D a cube-sphere composite Gauss rule
/// is compared against a finer one.
pub fn sphere_integral<F: FnMut(&P3) -> f64>(n: usize, mut f: F, breaks: &[f64], rel_tol: f64) -> (f64, f64) {
    match n {
        1 => (f(&[1.0, 0.0, 0.0]) + f(&[-1.0, 0.0, 0.0]), 0.0),
        2 => {
            let mut cuts: Vec<f64> = breaks.iter().map(|b| b.rem_euclid(2.0 * PI)).collect();
            cuts.push(0.0);
            cuts.push(2.0 * PI);
            cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
            let mut val = 0.0;
            let mut err = 0.0;
            for w in cuts.windows(2) {
                let (v, e) = integrate_adaptive(
                    |phi| {
                        let (s, c) = phi.sin_cos();
                        f(&[c, s, 0.0])
                    },
                    w[0],
                    w[1],
                    1e-300,
                    rel_tol,
                    400,
                );
                val += v;
                err += e;
            }
            (val, err)
        }
        _ => {
            let coarse = cube_sphere(&mut f, 2, 6);
            let fine = cube_sphere(&mut f, 3, 6);
            (fine, (fine - coarse).abs())
        }
    }
}

/// Adaptive integral over `S^{n-1}` in polar coordinates about `axis`.
///
/// In 2D the angle is measured from `axis` and `breaks` are angles where the
/// integrand may jump or kink. In 3D the polar angle is measured from `axis`,
/// `breaks` are polar angles, and the azimuthal integral is nested. Returns
/// (value, error estimate).
pub fn sphere_integral_adaptive<F: FnMut(&P3) -> f64>(n: usize, mut f: F, axis: &P3, breaks: &[f64], rel_tol: f64, max_panels: usize) -> (f64, f64) {
    let split = |lo: f64, hi: f64| -> Vec<f64> {
        let mut c: Vec<f64> = breaks.iter().copied().filter(|b| *b > lo && *b < hi).collect();
        c.push(lo);
        c.push(hi);
        c.sort_by(|a, b| a.partial_cmp(b).unwrap());
        c.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        c
    };
    match n {
        1 => (f(&[1.0, 0.0, 0.0]) + f(&[-1.0, 0.0, 0.0]), 0.0),
        2 => {
            let base = axis[1].atan2(axis[0]);
            let mut val = 0.0;
            let mut err = 0.0;
            for w in split(-PI, PI).windows(2) {
                let (v, e) = integrate_adaptive(
                    |phi| {
                        let (s, c) = (base + phi).sin_cos();
                        f(&[c, s, 0.0])
                    },
                    w[0],
                    w[1],
                    1e-300,
                    rel_tol,
                    max_panels,
                );
                val += v;
                err += e;
            }
            (val, err)
        }
        _ => {
            let (e1, e2) = orthonormal_frame(axis);
            let mut inner_rel: f64 = 0.0;
            let mut val = 0.0;
            let mut err = 0.0;
            for w in split(0.0, PI).windows(2) {
                let (v, e) = integrate_adaptive(
                    |theta| {
                        let (st, ct) = theta.sin_cos();
                        let (w, e) = integrate_adaptive(
                            |phi| {
                                let (sp, cp) = phi.sin_cos();
                                let mut d = [0.0; 3];
                                for i in 0..3 {
                                    d[i] = st * (cp * e1[i] + sp * e2[i]) + ct * axis[i];
                                }
                                f(&d)
                            },
                            0.0,
                            2.0 * PI,
                            1e-300,
                            rel_tol,
                            max_panels,
                        );
                        if w != 0.0 {
                            inner_rel = inner_rel.max(e / w.abs());
                        }
                        st * w
                    },
                    w[0],
                    w[1],
                    1e-300,
                    rel_tol,
                    max_panels,
                );
                val += v;
                err += e;
            }
            (val, err + inner_rel * val.abs())
        }
    }
}

/// Two unit vectors completing `axis` (unit) to an orthonormal frame.
pub fn orthonormal_frame(axis: &P3) -> (P3, P3) {
    let t = if axis[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = t[0] * axis[0] + t[1] * axis[1] + t[2] * axis[2];
    let mut e1 = [t[0] - d * axis[0], t[1] - d * axis[1], t[2] - d * axis[2]];
    let l = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = e1.map(|v| v / l);
    let e2 = [
        axis[1] * e1[2] - axis[2] * e1[1],
        axis[2] * e1[0] - axis[0] * e1[2],
        axis[0] * e1[1] - axis[1] * e1[0],
    ];
    (e1, e2)
}

/// Composite tensor Gauss rule on the six faces of the cube, projected to the sphere.
fn cube_sphere<F: FnMut(&P3) -> f64>(f: &mut F, panels: usize, q: usize) -> f64 {
    let rule = gauss_legendre_cached(q);
    let hp = 2.0 / panels as f64;
    let mut nodes = Vec::with_capacity(panels * q);
    for p in 0..panels {
        let c = -1.0 + (p as f64 + 0.5) * hp;
        for (x, w) in rule.0.iter().zip(&rule.1) {
            nodes.push((c + 0.5 * hp * x, 0.5 * hp * w));
        }
    }
    let mut acc = 0.0;
    for face in 0..6 {
        let axis = face / 2;
        let sign = if face % 2 == 0 { 1.0 } else { -1.0 };
        let (ua, va) = ((axis + 1) % 3, (axis + 2) % 3);
        for &(u, wu) in &nodes {
            for &(v, wv) in &nodes {
                let r2 = 1.0 + u * u + v * v;
                let r = r2.sqrt();
                let mut d = [0.0; 3];
                d[axis] = sign / r;
                d[ua] = u / r;
                d[va] = v / r;
                acc += wu * wv * f(&d) / (r2 * r);
            }
        }
    }
    acc
}

/// Directions from `x` toward the box corners (2D), where the exit distance has kinks.
pub fn corner_angles(x: &P3, lo: &P3, hi: &P3) -> Vec<f64> {
    let mut out = Vec::with_capacity(4);
    for cx in [lo[0], hi[0]] {
        for cy in [lo[1], hi[1]] {
            out.push((cy - x[1]).atan2(cx - x[0]));
        }
    }
    out
}

/// `int_{X \ box} |x-y|^{-(n+s)} dy` for `x` inside the box (without `s(1-s)`).
///
/// `set = None` stands for the whole space. Returns (value, error estimate).
pub fn exterior_potential(set: Option<&ShapeExpr>, x: &P3, lo: &P3, hi: &P3, n: usize, s: f64, rel_tol: f64) -> (f64, f64) {
    let breaks = if n == 2 { corner_angles(x, lo, hi) } else { Vec::new() };
    sphere_integral(
        n,
        |d| {
            let t = box_exit(x, d, lo, hi, n);
            match set {
                None => t.powf(-s) / s,
                Some(shape) => radial_sum(&interval_clip_below(&shape.ray_intervals(x, d), t), s),
            }
        },
        &breaks,
        rel_tol,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_areas() {
        for n in 1..=3 {
            let (v, e) = sphere_integral(n, |_| 1.0, &[], 1e-10);
            let exact = crate::kernel::unit_sphere_area(n);
            assert!((v - exact).abs() < 1e-7, "n={n} {v}");
            assert!(e < 1e-6 && e + 1e-15 >= 0.1 * (v - exact).abs());
        }
        let (v, _) = sphere_integral(3, |d| d[2] * d[2], &[], 1e-10);
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-8);
    }

    #[test]
    fn adaptive_sphere_integral_with_a_jump() {
        // indicator of a cap of half-angle 0.7 about a tilted axis
        let axis = [0.6, 0.0, 0.8];
        let (v, _) = sphere_integral_adaptive(3, |d| if d[0] * 0.6 + d[2] * 0.8 > 0.7f64.cos() { 1.0 } else { 0.0 }, &axis, &[0.7], 1e-10, 200);
        assert!((v - crate::geometry::shape::cap_area(3, 0.7)).abs() < 1e-9, "{v}");
        let (v, _) = sphere_integral_adaptive(2, |d| d[0].abs(), &[1.0, 0.0, 0.0], &[-PI / 2.0, PI / 2.0], 1e-12, 200);
        assert!((v - 4.0).abs() < 1e-12);
        let (v, _) = sphere_integral_adaptive(3, |d| d[1] * d[1], &[0.0, 0.0, 1.0], &[], 1e-12, 200);
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn one_dimensional_exterior_of_interval() {
        // complement of (-1,1) seen from 0: 2 * int_1^inf t^{-1-s} dt = 2/s
        let s = 0.3;
        let (v, _) = exterior_potential(None, &[0.0; 3], &[-1.0, 0.0, 0.0], &[1.0, 0.0, 0.0], 1, s, 1e-10);
        assert!((v - 2.0 / s).abs() < 1e-12);
    }

    #[test]
    fn exterior_of_disk_box_against_polar_quadrature() {
        // whole space outside the square [-1,1]^2 from the center:
        // (1/s) int_0^{2pi} rho(phi)^{-s} dphi, rho = 1/max(|cos|,|sin|)
        let s = 0.5;
        let lo = [-1.0, -1.0, 0.0];
        let hi = [1.0, 1.0, 0.0];
        let (v, e) = exterior_potential(None, &[0.0; 3], &lo, &hi, 2, s, 1e-12);
        let m = 200_000;
        let mut acc = 0.0;
        for i in 0..m {
            let phi = (i as f64 + 0.5) / m as f64 * 2.0 * PI;
            let rho = 1.0 / phi.cos().abs().max(phi.sin().abs());
            acc += rho.powf(-s);
        }
        let oracle = acc / s * 2.0 * PI / m as f64;
        assert!((v - oracle).abs() < 1e-8, "{v} {oracle} {e}");
    }

    #[test]
    fn half_space_exterior_is_half_of_full() {
        // by symmetry about the box center the upper half-space carries half the mass
        let s = 0.4;
        let lo = [-1.0, -1.0, 0.0];
        let hi = [1.0, 1.0, 0.0];
        let x = [0.0; 3];
        let hp = ShapeExpr::half_space(&[0.0, 1.0], 0.0);
        let (a, _) = exterior_potential(Some(&hp), &x, &lo, &hi, 2, s, 1e-12);
        let (b, _) = exterior_potential(None, &x, &lo, &hi, 2, s, 1e-12);
        assert!((2.0 * a - b).abs() < 1e-9 * b);
    }
}
