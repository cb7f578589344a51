//! s-sweeps of the local perimeter extrapolated to `s -> 0` and `s -> 1`.

use serde::{Deserialize, Serialize};

use super::perimeter::per_s_local;
use super::zeta::{line_fit, prediction_volumes, s0_limit_from_volumes, zeta_estimate, ZetaEstimate};
use crate::error::{Error, Result};
use crate::geometry::{classical_perimeter, ShapeExpr};
use crate::kernel::{unit_ball_volume, unit_sphere_area, KernelParams};
use crate::quadrature::{QuadratureOptions, SetArg};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub s: f64,
    pub value: f64,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitCheck {
    pub samples: Vec<SweepPoint>,
    /// Value of the least-squares line through the samples at the limit `s`.
    pub extrapolated: f64,
    pub error_bound: f64,
    pub fit_residual: f64,
    /// Limit formula as stated: `(1-zeta)|E∩Ω| + zeta|E^c∩Ω|` for `s -> 0`,
    /// `omega_{n-1} Per(E, closure Ω)` for `s -> 1`.
    pub prediction: f64,
    pub prediction_tolerance: f64,
    /// `extrapolated / prediction - 1` (the absolute difference when the prediction vanishes).
    pub relative_gap: f64,
    /// For `s -> 0`: `|S^{n-1}|` times the prediction, the limit under the
    /// `s(1-s)` normalization of the kernel, and the gap against it.
    pub normalized_prediction: Option<f64>,
    pub normalized_relative_gap: Option<f64>,
    pub zeta: Option<ZetaEstimate>,
}

fn check_list(s_list: &[f64]) -> Result<()> {
    if s_list.len() < 2 {
        return Err(Error::param("kernel.s_list", "needs at least two values"));
    }
    if s_list.iter().any(|s| !(*s > 0.0 && *s < 1.0)) {
        return Err(Error::param("kernel.s_list", "values must lie in (0,1)"));
    }
    Ok(())
}

fn sweep(e: &ShapeExpr, omega: &ShapeExpr, n: usize, s_list: &[f64], opts: &QuadratureOptions) -> Result<Vec<SweepPoint>> {
    s_list
        .iter()
        .map(|&s| {
            let r = per_s_local(SetArg::Shape(e), omega, &KernelParams::new(n, s)?, opts)?;
            Ok(SweepPoint { s, value: r.total, error_bound: r.error_bound })
        })
        .collect()
}

fn gap(v: f64, target: f64) -> f64 {
    if target != 0.0 {
        v / target - 1.0
    } else {
        v - target
    }
}

/// Linear fit of the samples in `x(s)`, evaluated at `x = 0`.
fn fit(samples: &[SweepPoint], x: impl Fn(f64) -> f64) -> (f64, f64, f64) {
    let xs: Vec<f64> = samples.iter().map(|p| x(p.s)).collect();
    let ys: Vec<f64> = samples.iter().map(|p| p.value).collect();
    let (a, _, rms, lever) = line_fit(&xs, &ys);
    let max_err = samples.iter().map(|p| p.error_bound).fold(0.0, f64::max);
    (a, lever * (rms + max_err), rms)
}

/// Sweep toward `s = 0` compared with the mass-at-infinity formula.
pub fn s0_check(e: &ShapeExpr, omega: &ShapeExpr, s_list: &[f64], opts: &QuadratureOptions) -> Result<LimitCheck> {
    check_list(s_list)?;
    let n = e.validate()?;
    let zeta = zeta_estimate(e, s_list)?;
    let (vi, vo) = prediction_volumes(e, omega)?;
    let prediction = s0_limit_from_volumes(vi, vo, zeta.extrapolated);
    let samples = sweep(e, omega, n, s_list, opts)?;
    let (extrapolated, error_bound, fit_residual) = fit(&samples, |s| s);
    let normalized = unit_sphere_area(n) * prediction;
    Ok(LimitCheck {
        samples,
        extrapolated,
        error_bound,
        fit_residual,
        prediction,
        prediction_tolerance: zeta.error_bound * (vo - vi).abs(),
        relative_gap: gap(extrapolated, prediction),
        normalized_prediction: Some(normalized),
        normalized_relative_gap: Some(gap(extrapolated, normalized)),
        zeta: Some(zeta),
    })
}

/// Sweep toward `s = 1` compared with `omega_{n-1}` times the classical perimeter in the closure of Ω.
pub fn s1_check(e: &ShapeExpr, omega: &ShapeExpr, s_list: &[f64], opts: &QuadratureOptions) -> Result<LimitCheck> {
    check_list(s_list)?;
    let n = e.validate()?;
    let per = classical_perimeter(e, omega)?;
    let prediction = unit_ball_volume(n - 1) * per;
    let samples = sweep(e, omega, n, s_list, opts)?;
    let (extrapolated, error_bound, fit_residual) = fit(&samples, |s| 1.0 - s);
    Ok(LimitCheck {
        samples,
        extrapolated,
        error_bound,
        fit_residual,
        prediction,
        prediction_tolerance: 1e-9 * prediction.abs(),
        relative_gap: gap(extrapolated, prediction),
        normalized_prediction: None,
        normalized_relative_gap: None,
        zeta: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_set_sweeps_to_zero() {
        let disk = ShapeExpr::ball(&[0.0, 0.0], 1.0);
        let opts = QuadratureOptions { cells_per_axis: 16, refinement_levels: 2, ..QuadratureOptions::for_dim(2) };
        let c = s1_check(&ShapeExpr::empty(2), &disk, &[0.8, 0.9], &opts).unwrap();
        assert_eq!(c.extrapolated, 0.0);
        assert_eq!(c.prediction, 0.0);
        assert!(s1_check(&ShapeExpr::empty(2), &disk, &[0.8], &opts).is_err());
        assert!(s0_check(&ShapeExpr::empty(2), &disk, &[0.2, 1.5, 0.1], &opts).is_err());
    }
}
