//! Fractional mean curvature `H^s_E(x) = s(1-s) PV int (chi_{E^c} - chi_E)(y) |x-y|^{-(n+s)} dy`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geometry::shape::interval_clip_below;
use crate::geometry::{BoundaryMesh, ShapeExpr, P3};
use crate::kernel::KernelParams;
use crate::quadrature::exterior::{radial_sum, sphere_integral_adaptive};
use crate::quadrature::QuadratureOptions;

/// Probe directions used to locate the boundary and estimate the normal.
const PROBES_2D: usize = 720;
const PROBES_3D: usize = 4000;
/// Largest deviation of the inside fraction of a small sphere from 1/2 accepted
/// at a C^1 boundary point.
const KINK_TOL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvatureValue {
    pub value: f64,
    pub error_bound: f64,
    pub pv_radius: f64,
    /// Outward normal estimated from the inside fraction of a small sphere.
    pub normal: P3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureProfile {
    pub mesh: BoundaryMesh,
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    pub mean: f64,
    pub rel_std: f64,
    pub pv_radius: f64,
}

/// Default exclusion radius: two cells of the grid that `opts` would lay over
/// the set (unit scale for unbounded sets).
pub fn default_pv_radius(e: &ShapeExpr, n: usize, opts: &QuadratureOptions) -> f64 {
    let ext = match e.bounds() {
        Some((lo, hi)) if (0..n).all(|i| lo[i] <= hi[i]) => (0..n).map(|i| hi[i] - lo[i]).fold(0.0, f64::max),
        _ => 2.0,
    };
    2.0 * ext / opts.cells_per_axis as f64
}

fn probe_directions(n: usize) -> Vec<P3> {
    match n {
        1 => vec![[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]],
        2 => (0..PROBES_2D)
            .map(|i| {
                let a = (i as f64 + 0.5) * 2.0 * PI / PROBES_2D as f64;
                [a.cos(), a.sin(), 0.0]
            })
            .collect(),
        _ => {
            // Fibonacci sphere
            let g = PI * (3.0 - 5f64.sqrt());
            (0..PROBES_3D)
                .map(|i| {
                    let z = 1.0 - (2.0 * i as f64 + 1.0) / PROBES_3D as f64;
                    let r = (1.0 - z * z).sqrt();
                    let a = g * i as f64;
                    [r * a.cos(), r * a.sin(), z]
                })
                .collect()
        }
    }
}

/// Checks that `x` is a C^1 boundary point and returns the outward normal.
pub fn boundary_normal(e: &ShapeExpr, x: &P3, n: usize, eps: f64) -> Result<P3> {
    let dirs = probe_directions(n);
    let mut inside = 0usize;
    let mut acc = [0.0; 3];
    for d in &dirs {
        let p = [x[0] + eps * d[0], x[1] + eps * d[1], x[2] + eps * d[2]];
        let sign = if e.contains_p(&p) {
            inside += 1;
            -1.0
        } else {
            1.0
        };
        for i in 0..3 {
            acc[i] += sign * d[i];
        }
    }
    if inside == 0 || inside == dirs.len() {
        return Err(Error::NotOnBoundary(eps));
    }
    let frac = inside as f64 / dirs.len() as f64;
    if n > 1 && (frac - 0.5).abs() > KINK_TOL {
        return Err(Error::Unsupported(format!("boundary corner at the point (inside fraction {frac:.3})")));
    }
    if n == 2 {
        if let Some(nu) = refine_normal_2d(e, x, eps) {
            return Ok(nu);
        }
    }
    let l = (acc[0] * acc[0] + acc[1] * acc[1] + acc[2] * acc[2]).sqrt();
    Ok(acc.map(|v| v / l))
}

/// Bisects the two points where the circle of radius `eps` crosses the boundary;
/// the inside arc between them is centered on the inward normal.
fn refine_normal_2d(e: &ShapeExpr, x: &P3, eps: f64) -> Option<P3> {
    let at = |a: f64| e.contains_p(&[x[0] + eps * a.cos(), x[1] + eps * a.sin(), 0.0]);
    let step = 2.0 * PI / PROBES_2D as f64;
    let angle = |i: usize| (i as f64 + 0.5) * step;
    let states: Vec<bool> = (0..PROBES_2D).map(|i| at(angle(i))).collect();
    let mut enter = None;
    let mut leave = None;
    for i in 0..PROBES_2D {
        let (a, b) = (states[i], states[(i + 1) % PROBES_2D]);
        if a == b {
            continue;
        }
        let slot = if b { &mut enter } else { &mut leave };
        if slot.is_some() {
            return None;
        }
        let (mut lo, mut hi) = (angle(i), angle(i) + step);
        for _ in 0..60 {
            let m = 0.5 * (lo + hi);
            if at(m) == a {
                lo = m;
            } else {
                hi = m;
            }
        }
        *slot = Some(0.5 * (lo + hi));
    }
    let (a1, mut a2) = (enter?, leave?);
    if a2 < a1 {
        a2 += 2.0 * PI;
    }
    let mid = 0.5 * (a1 + a2);
    Some([-mid.cos(), -mid.sin(), 0.0])
}

/// `s(1-s) int_{|y-x|>delta} (chi_{E^c} - chi_E)(y) |x-y|^{-(n+s)} dy` along exact rays.
fn truncated(e: &ShapeExpr, x: &P3, normal: &P3, k: &KernelParams, delta: f64, rel_tol: f64) -> (f64, f64) {
    let s = k.s;
    let full = delta.powf(-s) / s;
    let f = |d: &P3| full - 2.0 * radial_sum(&interval_clip_below(&e.ray_intervals(x, d), delta), s);
    // the tangent directions carry the kink of the integrand
    let breaks: &[f64] = if k.n == 2 { &[-PI / 2.0, PI / 2.0] } else { &[PI / 2.0] };
    let (v, err) = sphere_integral_adaptive(k.n, f, normal, breaks, rel_tol, 400);
    (k.normalization() * v, k.normalization() * err)
}

/// Principal-value fractional mean curvature at a boundary point.
///
/// The ball `B_delta(x)` is excluded and its contribution taken as zero. The
/// reported error adds the angular quadrature error and the size of the
/// `O(delta^{1-s})` remainder, estimated from the change between `delta` and `delta/2`.
pub fn fractional_mean_curvature(e: &ShapeExpr, x: &[f64], k: &KernelParams, pv_radius: f64) -> Result<CurvatureValue> {
    let n = e.validate()?;
    if n != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, got: n });
    }
    if x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x.len() });
    }
    if !(pv_radius > 0.0) {
        return Err(Error::param("pv_radius", "must be positive"));
    }
    let mut p = [0.0; 3];
    p[..n].copy_from_slice(x);
    let scale = 1.0 + p.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let normal = boundary_normal(e, &p, n, 1e-7 * scale.min(1e3 * pv_radius))?;
    let tol = 1e-10;
    let (h1, e1) = truncated(e, &p, &normal, k, pv_radius, tol);
    let (h2, e2) = truncated(e, &p, &normal, k, 0.5 * pv_radius, tol);
    // H(delta) - H = c delta^{1-s}  =>  |c delta^{1-s}| = |H(delta) - H(delta/2)| / (1 - 2^{s-1})
    let remainder = (h1 - h2).abs() / (1.0 - 2f64.powf(k.s - 1.0));
    Ok(CurvatureValue { value: h1, error_bound: e1 + e2 + remainder, pv_radius, normal })
}

/// Curvature at every mesh point with mean and relative standard deviation.
pub fn curvature_profile(e: &ShapeExpr, mesh: &BoundaryMesh, k: &KernelParams, pv_radius: f64) -> Result<CurvatureProfile> {
    mesh.validate()?;
    if mesh.dim != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, got: mesh.dim });
    }
    let vals: Vec<CurvatureValue> = mesh
        .points
        .par_iter()
        .map(|p| fractional_mean_curvature(e, &p[..k.n], k, pv_radius))
        .collect::<Result<_>>()?;
    let values: Vec<f64> = vals.iter().map(|v| v.value).collect();
    let errors = vals.iter().map(|v| v.error_bound).collect();
    let (mean, rel_std) = mean_rel_std(&values);
    Ok(CurvatureProfile { mesh: mesh.clone(), values, errors, mean, rel_std, pv_radius })
}

/// Mean and `std / |mean|` (population standard deviation; 0 when the mean vanishes).
pub fn mean_rel_std(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    let mean = v.iter().sum::<f64>() / m;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    let rel = if mean != 0.0 { var.sqrt() / mean.abs() } else { 0.0 };
    (mean, rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boundary_mesh;

    #[test]
    fn half_space_is_flat() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let hs = ShapeExpr::half_space(&[0.3f64.cos(), 0.3f64.sin()], 0.0);
        let x = [-0.3f64.sin(), 0.3f64.cos()];
        let h = fractional_mean_curvature(&hs, &x, &k, 0.05).unwrap();
        assert!(h.value.abs() < 1e-8, "{h:?}");
        // outward normal of {nu . x > 0} is -nu
        assert!((h.normal[0] + 0.3f64.cos()).abs() < 1e-2);
    }

    #[test]
    fn ball_scaling_and_sign() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let b1 = ShapeExpr::ball(&[0.0, 0.0], 1.0);
        let b2 = ShapeExpr::ball(&[0.0, 0.0], 2.0);
        let h1 = fractional_mean_curvature(&b1, &[1.0, 0.0], &k, 0.05).unwrap();
        let h2 = fractional_mean_curvature(&b2, &[2.0, 0.0], &k, 0.1).unwrap();
        assert!(h1.value > 0.0);
        assert!((h2.value / h1.value - 2f64.powf(-0.5)).abs() < 1e-8);
        assert!(h1.error_bound < 0.2 * h1.value);
    }

    #[test]
    fn three_dimensional_ball() {
        let k = KernelParams::new(3, 0.4).unwrap();
        let b = ShapeExpr::ball(&[0.0, 0.0, 0.0], 1.0);
        let a = fractional_mean_curvature(&b, &[0.0, 0.0, 1.0], &k, 0.05).unwrap();
        let c = fractional_mean_curvature(&b, &[0.6, 0.0, 0.8], &k, 0.05).unwrap();
        assert!(a.value > 0.0);
        assert!((a.value - c.value).abs() < 1e-6 * a.value, "{a:?} {c:?}");
    }

    #[test]
    fn rejects_interior_points_and_corners() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let b = ShapeExpr::ball(&[0.0, 0.0], 1.0);
        assert!(matches!(fractional_mean_curvature(&b, &[0.5, 0.0], &k, 0.05), Err(Error::NotOnBoundary(_))));
        let sq = ShapeExpr::cuboid(&[0.0, 0.0], &[1.0, 1.0]);
        assert!(matches!(fractional_mean_curvature(&sq, &[1.0, 1.0], &k, 0.05), Err(Error::Unsupported(_))));
        assert!(fractional_mean_curvature(&sq, &[1.0, 0.5], &k, 0.05).is_ok());
    }

    #[test]
    fn disk_profile_is_constant() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let b = ShapeExpr::ball(&[0.0, 0.0], 1.0);
        let mesh = boundary_mesh(&b, 36).unwrap();
        let p = curvature_profile(&b, &mesh, &k, 0.05).unwrap();
        assert!(p.rel_std < 1e-6, "{}", p.rel_std);
    }
}
