//! Mass at infinity and the `s -> 0` limit of the local perimeter.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{default_lines, voxelize_lines, GridSpec, ShapeExpr};
use crate::kernel::{unit_sphere_area, KernelParams};
use crate::quadrature::engine::grid_for_box;
use crate::quadrature::tail_integral;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaSample {
    pub s: f64,
    pub value: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZetaEstimate {
    pub samples: Vec<ZetaSample>,
    /// Intercept of the least-squares line through the samples, clamped to `[0,1]`.
    pub extrapolated: f64,
    /// Root mean square residual of the linear fit.
    pub fit_residual: f64,
    /// Error bound of the extrapolated value: the fit residual plus the largest
    /// sample error, scaled by the intercept's sensitivity to the samples.
    pub error_bound: f64,
    /// Set when the residual is large compared with the spread of the samples,
    /// i.e. the limit may not exist or is approached nonlinearly.
    pub limit_doubtful: bool,
}

/// `(s / |S^{n-1}|) int_{E \ B_1} |x|^{-(n+s)} dx`.
pub fn zeta_sample(e: &ShapeExpr, k: &KernelParams) -> Result<ZetaSample> {
    let t = tail_integral(e, 1.0, k)?;
    let f = k.s / unit_sphere_area(k.n);
    Ok(ZetaSample { s: k.s, value: f * t.value, error_bound: f * t.error_bound })
}

/// Samples at every `s` in `s_list` and a linear extrapolation to `s = 0`.
pub fn zeta_estimate(e: &ShapeExpr, s_list: &[f64]) -> Result<ZetaEstimate> {
    let n = e.validate()?;
    if s_list.len() < 3 {
        return Err(Error::param("kernel.s_list", "needs at least three values"));
    }
    if s_list.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::param("kernel.s_list", "must be strictly descending"));
    }
    let samples = s_list
        .iter()
        .map(|&s| zeta_sample(e, &KernelParams::new(n, s)?))
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = samples.iter().map(|p| p.s).collect();
    let ys: Vec<f64> = samples.iter().map(|p| p.value).collect();
    let (a, _, rms, lever) = line_fit(&xs, &ys);
    let max_err = samples.iter().map(|p| p.error_bound).fold(0.0, f64::max);
    let spread = ys.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - ys.iter().cloned().fold(f64::INFINITY, f64::min);
    let extrapolated = a.clamp(0.0, 1.0);
    Ok(ZetaEstimate {
        samples,
        extrapolated,
        fit_residual: rms,
        error_bound: lever * (rms + max_err),
        limit_doubtful: rms > 0.1 * spread.max(1e-12) && rms > 1e-6,
    })
}

/// Least-squares line `y = a + b x`; returns (a, b, rms residual, sum of |weights|
/// of the intercept as a linear functional of the data).
pub fn line_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let rms = (xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum::<f64>() / m).sqrt();
    // a = sum_i y_i (1/m - mx (x_i - mx) / sxx)
    let lever = xs.iter().map(|x| (1.0 / m - if sxx > 0.0 { mx * (x - mx) / sxx } else { 0.0 }).abs()).sum();
    (a, b, rms, lever)
}

/// The polar computation for cones: `zeta` equals the aperture fraction.
pub fn zeta_cone_exact(aperture_fraction: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&aperture_fraction) {
        return Err(Error::param("aperture_fraction", "must lie in [0,1]"));
    }
    Ok(aperture_fraction)
}

/// Volumes `|E∩Ω|` and `|E^c∩Ω|` by line occupancy on a fine grid over `Omega`.
pub fn split_volumes(e: &ShapeExpr, omega: &ShapeExpr, cells: usize) -> Result<(f64, f64)> {
    let n = omega.validate()?;
    let (lo, hi) = omega.bounds().ok_or_else(|| Error::Unbounded("the domain Omega must be bounded".into()))?;
    let g: GridSpec = grid_for_box(&lo, &hi, n, cells, 1)?;
    let inside = voxelize_lines(&e.clone().intersect(omega.clone()), &g, default_lines(n))?.volume_in_box();
    let outside = voxelize_lines(&e.clone().complement().intersect(omega.clone()), &g, default_lines(n))?.volume_in_box();
    Ok((inside, outside))
}

/// `(1 - zeta) |E∩Ω| + zeta |E^c∩Ω|`.
pub fn s0_limit_prediction(e: &ShapeExpr, omega: &ShapeExpr, zeta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(Error::param("zeta", "must lie in [0,1]"));
    }
    let (vi, vo) = prediction_volumes(e, omega)?;
    Ok(s0_limit_from_volumes(vi, vo, zeta))
}

/// `split_volumes` at the resolution used for the prediction.
pub fn prediction_volumes(e: &ShapeExpr, omega: &ShapeExpr) -> Result<(f64, f64)> {
    let cells = match omega.validate()? {
        1 => 4096,
        2 => 512,
        _ => 96,
    };
    split_volumes(e, omega, cells)
}

pub fn s0_limit_from_volumes(inside: f64, outside: f64, zeta: f64) -> f64 {
    if inside == outside {
        return inside;
    }
    (1.0 - zeta) * inside + zeta * outside
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const S_LIST: [f64; 4] = [0.2, 0.1, 0.05, 0.025];

    #[test]
    fn closed_form_values() {
        let z = zeta_estimate(&ShapeExpr::full(2), &S_LIST).unwrap();
        assert!(z.samples.iter().all(|p| p.value == 1.0));
        assert_eq!(z.extrapolated, 1.0);
        let z = zeta_estimate(&ShapeExpr::empty(3), &S_LIST).unwrap();
        assert_eq!(z.extrapolated, 0.0);
        let z = zeta_estimate(&ShapeExpr::half_space(&[0.0, 1.0], 0.0), &S_LIST).unwrap();
        assert!((z.extrapolated - 0.5).abs() < 1e-12);
        let q = ShapeExpr::cone(&[1.0, 1.0], PI / 4.0);
        let z = zeta_estimate(&q, &S_LIST).unwrap();
        assert!((z.extrapolated - 0.25).abs() < 1e-12);
    }

    #[test]
    fn complement_of_ball_tends_to_one() {
        // zeta sample = R^{-s} for the complement of B_R
        let c = ShapeExpr::ball(&[0.0, 0.0], 3.0).complement();
        let z = zeta_estimate(&c, &S_LIST).unwrap();
        for p in &z.samples {
            assert!((p.value - 3f64.powf(-p.s)).abs() < 1e-8);
        }
        assert!((z.extrapolated - 1.0).abs() < 1e-2);
    }

    #[test]
    fn bounded_sets_have_no_mass_at_infinity() {
        let b = ShapeExpr::ball(&[5.0, 0.0], 1.0);
        let z = zeta_estimate(&b, &S_LIST).unwrap();
        assert!(z.extrapolated.abs() < 1e-3, "{z:?}");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(zeta_estimate(&ShapeExpr::full(2), &[0.1, 0.2, 0.05]).is_err());
        assert!(zeta_estimate(&ShapeExpr::full(2), &[0.1, 0.05]).is_err());
        assert!(zeta_cone_exact(1.5).is_err());
        assert_eq!(zeta_cone_exact(0.5).unwrap(), 0.5);
    }

    #[test]
    fn s0_prediction_examples() {
        let disk = ShapeExpr::ball(&[0.0, 0.0], 1.0);
        let hp = ShapeExpr::half_space(&[0.0, -1.0], 0.0);
        let v = s0_limit_prediction(&hp, &disk, 0.5).unwrap();
        assert!((v - PI / 2.0).abs() < 1e-3);
        let q = ShapeExpr::cone(&[1.0, 1.0], PI / 4.0);
        let v = s0_limit_prediction(&q, &disk, 0.25).unwrap();
        assert!((v - 3.0 * PI / 8.0).abs() < 1e-3);
        let big = ShapeExpr::ball(&[0.0, 0.0], 2.0);
        assert!(s0_limit_prediction(&big, &disk, 1.0).unwrap().abs() < 1e-12);
        assert_eq!(s0_limit_from_volumes(1.25, 1.25, 0.9), 1.25);
    }
}
