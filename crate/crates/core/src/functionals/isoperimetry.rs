//! Fraenkel asymmetry and the fractional isoperimetric deficit.

use ratio_cache::BallRatioCache;
use serde::{Deserialize, Serialize};

use super::perimeter::per_s_global;
use crate::error::{Error, Result};
use crate::geometry::shape::interval_intersection;
use crate::geometry::{default_lines, voxelize_lines, Intervals, ShapeExpr, VoxelSet, P3};
use crate::kernel::{unit_ball_volume, KernelParams};
use crate::quadrature::engine::grid_for_shapes;
use crate::quadrature::exterior::sphere_integral_adaptive;
use crate::quadrature::{QuadratureOptions, SetArg};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FraenkelResult {
    /// `inf_x |E Δ B_{r_E}(x)| / |E|`.
    pub asymmetry: f64,
    pub center: Vec<f64>,
    pub radius: f64,
    pub volume: f64,
    /// Accuracy of the overlap volumes relative to `|E|` (search tolerance excluded).
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsoperimetricReport {
    pub perimeter_global: f64,
    pub perimeter_error: f64,
    pub volume: f64,
    /// `Per_s(E) / |E|^{(n-s)/n}`.
    pub ratio: f64,
    /// The same ratio for the unit ball at matched resolution.
    pub ball_ratio: f64,
    pub ball_ratio_error: f64,
    pub deficit: f64,
    pub deficit_error: f64,
    pub asymmetry: f64,
    pub asymmetry_center: Vec<f64>,
    /// `A(E)^2 / deficit`: the smallest constant compatible with the stable
    /// inequality on this set, when the deficit is positive.
    pub implied_constant: Option<f64>,
    pub kernel: KernelParams,
}

/// `(1/n) sum (b^n - a^n)` over intervals clipped to `[0, r]`.
fn radial_volume(iv: &Intervals, r: f64, n: usize) -> f64 {
    let mut cap = Intervals::new();
    cap.push((0.0, r));
    interval_intersection(iv, &cap).iter().map(|(a, b)| (b.powi(n as i32) - a.powi(n as i32)) / n as f64).sum()
}

/// `|E ∩ B_r(c)|` in polar coordinates about `c` (`r = inf` gives `|E|`).
pub fn ball_overlap(e: &ShapeExpr, c: &P3, r: f64, n: usize, rel_tol: f64) -> (f64, f64) {
    sphere_integral_adaptive(n, |d| radial_volume(&e.ray_intervals(c, d), r, n), &[1.0, 0.0, 0.0], &[], rel_tol, 400)
}

/// Volume of a bounded shape.
pub fn shape_volume(e: &ShapeExpr) -> Result<f64> {
    let n = e.validate()?;
    let (lo, hi) = e.bounds().ok_or_else(|| Error::Unbounded("volume of an unbounded set".into()))?;
    if (0..n).any(|i| lo[i] > hi[i]) {
        return Ok(0.0);
    }
    let mut c = [0.0; 3];
    for i in 0..n {
        c[i] = 0.5 * (lo[i] + hi[i]);
    }
    Ok(ball_overlap(e, &c, f64::INFINITY, n, 1e-11).0)
}

enum Body<'a> {
    Shape(&'a ShapeExpr),
    Voxels(&'a VoxelSet),
}

impl Body<'_> {
    fn overlap(&self, c: &P3, r: f64, n: usize, tol: f64) -> f64 {
        match self {
            Body::Shape(e) => ball_overlap(e, c, r, n, tol).0,
            Body::Voxels(vs) => {
                let mut center = vec![0.0; n];
                center.copy_from_slice(&c[..n]);
                let ball = ShapeExpr::ball(&center, r);
                let g = &vs.grid;
                let lines = default_lines(n);
                vs.occupancy
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| **o > 0.0)
                    .map(|(i, o)| o * g.cell_fraction_lines(&ball, i, lines))
                    .sum::<f64>()
                    * g.cell_volume()
            }
        }
    }
}

/// Fraenkel asymmetry with the optimal center: start at the centroid, scan a
/// coarse grid of radius `8h`, then coordinate descent down to `1e-4 r_E`.
/// `h` is the cell size of the grid `opts` lays over the set. The search is
/// local; global optimality is not guaranteed for sets with several lobes.
pub fn fraenkel_asymmetry(e: SetArg, opts: &QuadratureOptions) -> Result<FraenkelResult> {
    let (n, vs_owned);
    let body = match e {
        SetArg::Shape(s) => {
            n = s.validate()?;
            if s.bounds().is_none() {
                return Err(Error::Unbounded("Fraenkel asymmetry needs a bounded set".into()));
            }
            let g = grid_for_shapes(&[s], n, opts).map_err(|_| Error::ZeroVolume)?;
            vs_owned = voxelize_lines(s, &g, default_lines(n))?;
            Body::Shape(s)
        }
        SetArg::Voxels(v) => {
            n = v.grid.dim();
            if v.has_exterior() {
                return Err(Error::Unbounded("voxel set extends outside its grid".into()));
            }
            vs_owned = v.clone();
            Body::Voxels(v)
        }
    };
    let g = &vs_owned.grid;
    let vox_volume = vs_owned.volume_in_box();
    let volume = match body {
        Body::Shape(s) => shape_volume(s)?,
        Body::Voxels(_) => vox_volume,
    };
    if !(volume > 0.0) {
        return Err(Error::ZeroVolume);
    }
    let mut centroid = [0.0; 3];
    for (i, o) in vs_owned.occupancy.iter().enumerate() {
        let x = g.cell_center(i);
        for a in 0..n {
            centroid[a] += o * x[a];
        }
    }
    for a in 0..n {
        centroid[a] *= g.cell_volume() / vox_volume;
    }
    let radius = (volume / unit_ball_volume(n)).powf(1.0 / n as f64);
    let tol = if n == 3 { 1e-7 } else { 1e-10 };
    let h = g.h(0);
    let score = |c: &P3| body.overlap(c, radius, n, tol);

    let mut best = centroid;
    let mut best_v = score(&best);
    let reach = 4i64;
    let total = (2 * reach + 1).pow(n as u32);
    for k in 0..total {
        let mut rest = k;
        let mut c = centroid;
        for a in 0..n {
            let j = rest % (2 * reach + 1) - reach;
            rest /= 2 * reach + 1;
            c[a] += 2.0 * h * j as f64;
        }
        let v = score(&c);
        if v > best_v {
            best_v = v;
            best = c;
        }
    }
    let mut step = h;
    while step >= 1e-4 * radius {
        let mut moved = false;
        for a in 0..n {
            for sign in [1.0, -1.0] {
                let mut c = best;
                c[a] += sign * step;
                let v = score(&c);
                if v > best_v {
                    best_v = v;
                    best = c;
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    let asymmetry = (2.0 * (1.0 - best_v / volume)).clamp(0.0, 2.0);
    Ok(FraenkelResult { asymmetry, center: best[..n].to_vec(), radius, volume, tolerance: 2.0 * tol })
}

/// Perimeter ratio of the unit ball for `(k, opts)`, computed once per process.
pub fn ball_ratio(k: &KernelParams, opts: &QuadratureOptions) -> Result<(f64, f64)> {
    BallRatioCache::get_or_compute(k, opts, || {
        let ball = ShapeExpr::ball(&vec![0.0; k.n], 1.0);
        let p = per_s_global(SetArg::Shape(&ball), k, opts)?;
        let scale = unit_ball_volume(k.n).powf((k.n as f64 - k.s) / k.n as f64);
        Ok((p.value / scale, p.error_bound / scale))
    })
}

/// Isoperimetric ratio, deficit against the ball at matched resolution, and asymmetry.
pub fn isoperimetric_report(e: SetArg, k: &KernelParams, opts: &QuadratureOptions) -> Result<IsoperimetricReport> {
    let per = per_s_global(e, k, opts)?;
    let fr = fraenkel_asymmetry(e, opts)?;
    let expo = (k.n as f64 - k.s) / k.n as f64;
    let denom = fr.volume.powf(expo);
    let ratio = per.value / denom;
    let (br, br_err) = ball_ratio(k, opts)?;
    let q = ratio / br;
    let deficit = q - 1.0;
    let deficit_error = q * (per.error_bound / per.value.max(f64::MIN_POSITIVE) + br_err / br);
    let implied_constant = if deficit > 0.0 && fr.asymmetry > 0.0 { Some(fr.asymmetry.powi(2) / deficit) } else { None };
    Ok(IsoperimetricReport {
        perimeter_global: per.value,
        perimeter_error: per.error_bound,
        volume: fr.volume,
        ratio,
        ball_ratio: br,
        ball_ratio_error: br_err,
        deficit,
        deficit_error,
        asymmetry: fr.asymmetry,
        asymmetry_center: fr.center,
        implied_constant,
        kernel: *k,
    })
}

mod ratio_cache {
    use std::collections::HashMap;
    use std::sync::Mutex;

    use crate::error::Result;
    use crate::kernel::KernelParams;
    use crate::quadrature::QuadratureOptions;

    type Key = (usize, u64, u64, usize, usize, usize, usize);
    static CACHE: Mutex<Option<HashMap<Key, (f64, f64)>>> = Mutex::new(None);

    pub struct BallRatioCache;

    impl BallRatioCache {
        pub fn get_or_compute<F: FnOnce() -> Result<(f64, f64)>>(k: &KernelParams, o: &QuadratureOptions, f: F) -> Result<(f64, f64)> {
            let key = (
                k.n,
                k.s.to_bits(),
                o.near_field_rel_tol.to_bits(),
                o.cells_per_axis,
                o.padding_cells,
                o.refinement_levels,
                o.grid_shifts,
            );
            if let Some(v) = CACHE.lock().unwrap().as_ref().and_then(|m| m.get(&key)) {
                return Ok(*v);
            }
            let v = f()?;
            CACHE.lock().unwrap().get_or_insert_with(HashMap::new).insert(key, v);
            Ok(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn volumes_by_polar_rays() {
        let b = ShapeExpr::ball(&[0.3, 0.1], 1.2);
        assert!((shape_volume(&b).unwrap() - PI * 1.44).abs() < 1e-9);
        let two = ShapeExpr::ball(&[0.0, 0.0], 1.0).union(ShapeExpr::ball(&[3.0, 0.0], 1.0));
        assert!((shape_volume(&two).unwrap() - 2.0 * PI).abs() < 1e-8);
        let e = ShapeExpr::ball(&[0.0, 0.0], 1.0).stretch(&[2.0, 1.0]);
        assert!((shape_volume(&e).unwrap() - 2.0 * PI).abs() < 1e-9);
        let b3 = ShapeExpr::ball(&[0.0, 0.0, 0.0], 1.0);
        assert!((shape_volume(&b3).unwrap() - 4.0 * PI / 3.0).abs() < 1e-8);
    }

    #[test]
    fn ball_has_zero_asymmetry() {
        let b = ShapeExpr::ball(&[0.25, -0.4], 0.7);
        let opts = QuadratureOptions { cells_per_axis: 32, ..QuadratureOptions::for_dim(2) };
        let r = fraenkel_asymmetry(SetArg::Shape(&b), &opts).unwrap();
        assert!(r.asymmetry < 1e-3, "{r:?}");
        assert!((r.center[0] - 0.25).abs() < 1e-3 && (r.center[1] + 0.4).abs() < 1e-3);
        assert!((r.radius - 0.7).abs() < 1e-9);
    }

    #[test]
    fn disjoint_balls_are_far_from_a_ball() {
        let two = ShapeExpr::ball(&[0.0, 0.0], 1.0).union(ShapeExpr::ball(&[5.0, 0.0], 1.0));
        let opts = QuadratureOptions { cells_per_axis: 32, ..QuadratureOptions::for_dim(2) };
        let r = fraenkel_asymmetry(SetArg::Shape(&two), &opts).unwrap();
        assert!(r.asymmetry > 0.5 && r.asymmetry <= 2.0, "{r:?}");
    }
}
