//! Local and global s-perimeter.

use serde::{Deserialize, Serialize};

use super::refine::{extrapolate, levels, Level};
use crate::error::{Error, Result};
use crate::geometry::{default_lines, GridSpec, ShapeExpr, VoxelSet};
use crate::kernel::KernelParams;
use crate::quadrature::engine::{grid_for_box, grid_for_shapes};
use crate::quadrature::{interaction_on_grid, Exterior, InteractionEstimate, Operand, QuadratureOptions, SetArg};

/// The three interactions of `Per_s(E, Omega)`:
/// `E∩Ω` vs `E^c∩Ω`, `E∩Ω` vs `E^c∩Ω^c`, `E∩Ω^c` vs `E^c∩Ω`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerimeterReport {
    pub terms: [f64; 3],
    pub term_errors: [f64; 3],
    pub total: f64,
    pub error_bound: f64,
    pub kernel: KernelParams,
    /// Raw values per grid level, coarse to fine.
    pub levels: Vec<Level>,
}

impl PerimeterReport {
    fn from_levels(levels: Vec<Level>, k: &KernelParams) -> Self {
        let mut terms = [0.0; 3];
        let mut term_errors = [0.0; 3];
        for c in 0..3 {
            let e = extrapolate(&levels, c, 1.0 - k.s);
            terms[c] = e.value;
            term_errors[c] = e.error_bound;
        }
        PerimeterReport {
            terms,
            term_errors,
            total: terms[0] + terms[1] + terms[2],
            error_bound: term_errors.iter().sum(),
            kernel: *k,
            levels,
        }
    }

    pub fn estimate(&self) -> InteractionEstimate {
        InteractionEstimate::new(self.total, self.error_bound)
    }
}

fn check_dim(n: usize, k: &KernelParams) -> Result<()> {
    if n != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, got: n });
    }
    Ok(())
}

/// `Per_s(E, Omega)` for a bounded domain `Omega`.
///
/// Analytic sets are voxelized on the refinement levels of `opts` over the
/// bounding box of `Omega` and the result is extrapolated in the cell size.
/// A voxel set is evaluated on its own grid only, with `Omega` entering through
/// cell fractions (the product of occupancy and domain fraction).
pub fn per_s_local(e: SetArg, omega: &ShapeExpr, k: &KernelParams, opts: &QuadratureOptions) -> Result<PerimeterReport> {
    opts.validate()?;
    check_dim(omega.validate()?, k)?;
    let (olo, ohi) = omega.bounds().ok_or_else(|| Error::Unbounded("the domain Omega must be bounded".into()))?;
    if (0..k.n).any(|i| olo[i] >= ohi[i]) {
        return Err(Error::ZeroVolume);
    }
    let lines = default_lines(k.n);
    match e {
        SetArg::Shape(e) => {
            check_dim(e.validate()?, k)?;
            let a1 = e.clone().intersect(omega.clone());
            let b1 = e.clone().complement().intersect(omega.clone());
            let b2 = e.clone().complement().intersect(omega.clone().complement());
            let a2 = e.clone().intersect(omega.clone().complement());
            let lv = levels(
                opts,
                k.n,
                |m| grid_for_box(&olo, &ohi, k.n, m, opts.padding_cells),
                |g| {
                    let oa1 = Operand::from_shape(&a1, g, lines)?;
                    let ob1 = Operand::from_shape(&b1, g, lines)?;
                    let ob2 = Operand::from_shape(&b2, g, lines)?;
                    let oa2 = Operand::from_shape(&a2, g, lines)?;
                    let o = QuadratureOptions { cells_per_axis: g.cells[0], ..*opts };
                    Ok(vec![
                        interaction_on_grid(g, &oa1, &ob1, k, &o)?,
                        interaction_on_grid(g, &oa1, &ob2, k, &o)?,
                        interaction_on_grid(g, &oa2, &ob1, k, &o)?,
                    ])
                },
            )?;
            Ok(PerimeterReport::from_levels(lv, k))
        }
        SetArg::Voxels(vs) => {
            check_dim(vs.grid.dim(), k)?;
            let g = &vs.grid;
            let frac: Vec<f64> = (0..g.num_cells()).map(|i| g.cell_fraction_lines(omega, i, lines)).collect();
            let ext = vs.exterior.clone().unwrap_or(ShapeExpr::empty(k.n));
            let mk = |occ: Vec<f64>, shape: ShapeExpr| Operand { occupancy: occ, exterior: Exterior::from_shape(&shape, g) };
            let occ = &vs.occupancy;
            let oa1 = mk(occ.iter().zip(&frac).map(|(o, f)| o * f).collect(), ShapeExpr::empty(k.n));
            let ob1 = mk(occ.iter().zip(&frac).map(|(o, f)| (1.0 - o) * f).collect(), ShapeExpr::empty(k.n));
            let ob2 = mk(
                occ.iter().zip(&frac).map(|(o, f)| (1.0 - o) * (1.0 - f)).collect(),
                ext.clone().complement().intersect(omega.clone().complement()),
            );
            let oa2 = mk(occ.iter().zip(&frac).map(|(o, f)| o * (1.0 - f)).collect(), ext.intersect(omega.clone().complement()));
            let values = vec![
                interaction_on_grid(g, &oa1, &ob1, k, opts)?,
                interaction_on_grid(g, &oa1, &ob2, k, opts)?,
                interaction_on_grid(g, &oa2, &ob1, k, opts)?,
            ];
            let lv = vec![Level { cells_per_axis: g.cells[0], h: g.h(0), values }];
            Ok(PerimeterReport::from_levels(lv, k))
        }
    }
}

/// `Per_s(E, R^n) = I_s(E, E^c)` for a bounded set, with all levels reported.
pub fn per_s_global_levels(e: SetArg, k: &KernelParams, opts: &QuadratureOptions) -> Result<Vec<Level>> {
    opts.validate()?;
    match e {
        SetArg::Shape(e) => {
            check_dim(e.validate()?, k)?;
            if e.bounds().is_none() {
                return Err(Error::Unbounded("the global perimeter needs a bounded set".into()));
            }
            if is_empty_box(e) {
                return Ok(vec![Level { cells_per_axis: 0, h: 0.0, values: vec![InteractionEstimate::ZERO] }]);
            }
            let c = e.clone().complement();
            let lines = default_lines(k.n);
            levels(
                opts,
                k.n,
                |m| grid_for_shapes(&[e], k.n, &QuadratureOptions { cells_per_axis: m, ..*opts }),
                |g| {
                    let a = Operand::from_shape(e, g, lines)?;
                    let b = Operand::from_shape(&c, g, lines)?;
                    Ok(vec![interaction_on_grid(g, &a, &b, k, opts)?])
                },
            )
        }
        SetArg::Voxels(vs) => {
            check_dim(vs.grid.dim(), k)?;
            if vs.has_exterior() {
                return Err(Error::Unbounded("voxel set extends outside its grid".into()));
            }
            let g: &GridSpec = &vs.grid;
            let a = Operand { occupancy: vs.occupancy.clone(), exterior: Exterior::Empty };
            let b = Operand { occupancy: vs.occupancy.iter().map(|o| 1.0 - o).collect(), exterior: Exterior::Full };
            let v = interaction_on_grid(g, &a, &b, k, opts)?;
            Ok(vec![Level { cells_per_axis: g.cells[0], h: g.h(0), values: vec![v] }])
        }
    }
}

fn is_empty_box(e: &ShapeExpr) -> bool {
    match e.bounds() {
        Some((lo, hi)) => (0..3).any(|i| lo[i] > hi[i]),
        None => false,
    }
}

/// `Per_s(E, R^n)`, extrapolated in the cell size for analytic sets.
pub fn per_s_global(e: SetArg, k: &KernelParams, opts: &QuadratureOptions) -> Result<InteractionEstimate> {
    let lv = per_s_global_levels(e, k, opts)?;
    Ok(extrapolate(&lv, 0, 1.0 - k.s))
}

/// Convenience wrapper for voxel sets built from a shape.
pub fn voxel_perimeter(vs: &VoxelSet, k: &KernelParams, opts: &QuadratureOptions) -> Result<InteractionEstimate> {
    per_s_global(SetArg::Voxels(vs), k, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_is_two() {
        for s in [0.2, 0.5, 0.8] {
            let k = KernelParams::new(1, s).unwrap();
            let e = ShapeExpr::cuboid(&[0.0], &[1.0]);
            let v = per_s_global(SetArg::Shape(&e), &k, &QuadratureOptions::for_dim(1)).unwrap();
            assert!((v.value - 2.0).abs() < 1e-3 * 2.0, "s={s} {v:?}");
        }
    }

    #[test]
    fn empty_set_has_zero_perimeter() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let e = ShapeExpr::empty(2);
        let opts = QuadratureOptions { cells_per_axis: 16, ..QuadratureOptions::for_dim(2) };
        assert_eq!(per_s_global(SetArg::Shape(&e), &k, &opts).unwrap().value, 0.0);
        let omega = ShapeExpr::ball(&[0.0, 0.0], 1.0);
        let r = per_s_local(SetArg::Shape(&e), &omega, &k, &opts).unwrap();
        assert_eq!(r.total, 0.0);
    }
}
