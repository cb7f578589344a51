//! Kernel mass of a set outside a ball: `int_{E \ B_R} |x|^{-(n+s)} dx`.

use super::exterior::{radial_sum, sphere_integral_adaptive};
use super::InteractionEstimate;
use crate::error::{Error, Result};
use crate::geometry::shape::interval_clip_below;
use crate::geometry::{ShapeExpr, P3};
use crate::kernel::{unit_sphere_area, KernelParams};

const MAX_PANELS: usize = 500;

/// `int_{E \ B_R} |x|^{-(n+s)} dx` (no `s(1-s)` factor).
///
/// Cones, half-spaces through the origin, the full and the empty set use the
/// polar closed form `theta |S^{n-1}| R^{-s} / s`. Every other shape goes through
/// [`tail_integral_numeric`].
pub fn tail_integral(shape: &ShapeExpr, r: f64, k: &KernelParams) -> Result<InteractionEstimate> {
    check(shape, r, k)?;
    if let Some(theta) = shape.aperture_fraction() {
        let v = theta * unit_sphere_area(k.n) * r.powf(-k.s) / k.s;
        return Ok(InteractionEstimate::new(v, 0.0));
    }
    tail_integral_numeric(shape, r, k, 1e-10)
}

/// Angular quadrature of exact radial integrals along rays from the origin.
/// Only the angular integral carries an error; no radial cutoff is involved.
pub fn tail_integral_numeric(shape: &ShapeExpr, r: f64, k: &KernelParams, rel_tol: f64) -> Result<InteractionEstimate> {
    check(shape, r, k)?;
    let s = k.s;
    let origin = [0.0; 3];
    let radial = |d: &P3| radial_sum(&interval_clip_below(&shape.ray_intervals(&origin, d), r), s);
    let (v, e) = sphere_integral_adaptive(k.n, radial, &[0.0, 0.0, 1.0], &[], rel_tol, MAX_PANELS);
    if !v.is_finite() {
        return Err(Error::NonIntegrableTail);
    }
    Ok(InteractionEstimate::new(v, e))
}

fn check(shape: &ShapeExpr, r: f64, k: &KernelParams) -> Result<()> {
    let n = shape.validate()?;
    if n != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, got: n });
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::param("radius", "must be positive and finite"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn closed_forms() {
        for n in 1..=3 {
            let k = KernelParams::new(n, 0.3).unwrap();
            let full = tail_integral(&ShapeExpr::full(n), 1.0, &k).unwrap().value;
            assert!((full - unit_sphere_area(n) / 0.3).abs() < 1e-12);
            let mut e = vec![0.0; n];
            e[0] = 1.0;
            let half = tail_integral(&ShapeExpr::half_space(&e, 0.0), 1.0, &k).unwrap().value;
            assert!((half - unit_sphere_area(n) / 0.6).abs() < 1e-12);
            assert_eq!(tail_integral(&ShapeExpr::empty(n), 1.0, &k).unwrap().value, 0.0);
        }
    }

    #[test]
    fn quarter_plane_numeric_matches_polar_form() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let q = ShapeExpr::cone(&[1.0, 1.0], PI / 4.0);
        let exact = tail_integral(&q, 1.0, &k).unwrap().value;
        assert!((exact - PI).abs() < 1e-12);
        let num = tail_integral_numeric(&q, 1.0, &k, 1e-10).unwrap();
        assert!((num.value - PI).abs() < 1e-6, "{num:?}");
    }

    #[test]
    fn complement_of_ball_and_bounded_sets() {
        // complement of B_2 seen from R = 1: |S| 2^{-s} / s
        let k = KernelParams::new(2, 0.4).unwrap();
        let c = ShapeExpr::ball(&[0.0, 0.0], 2.0).complement();
        let v = tail_integral(&c, 1.0, &k).unwrap();
        assert!((v.value - 2.0 * PI * 2f64.powf(-0.4) / 0.4).abs() < 1e-8);
        let b = ShapeExpr::ball(&[0.0, 0.0], 0.5);
        assert_eq!(tail_integral(&b, 1.0, &k).unwrap().value, 0.0);
        let k3 = KernelParams::new(3, 0.4).unwrap();
        let c3 = ShapeExpr::ball(&[0.0, 0.0, 0.0], 2.0).complement();
        let v3 = tail_integral(&c3, 1.0, &k3).unwrap();
        assert!((v3.value - 4.0 * PI * 2f64.powf(-0.4) / 0.4).abs() < 1e-7 * v3.value);
    }

    #[test]
    fn translated_half_space_is_numeric() {
        // {x_1 > 1} outside B_1 in the plane
        let k = KernelParams::new(2, 0.5).unwrap();
        let hs = ShapeExpr::half_space(&[1.0, 0.0], 1.0);
        let v = tail_integral(&hs, 1.0, &k).unwrap();
        // oracle: int_{-pi/2}^{pi/2} (cos phi)^{s} / s dphi
        let m = 200_000;
        let mut acc = 0.0;
        for i in 0..m {
            let phi = -PI / 2.0 + (i as f64 + 0.5) * PI / m as f64;
            acc += phi.cos().powf(0.5) / 0.5;
        }
        let oracle = acc * PI / m as f64;
        assert!((v.value - oracle).abs() < 1e-6, "{} {}", v.value, oracle);
    }
}
