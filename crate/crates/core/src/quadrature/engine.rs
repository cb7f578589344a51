//! Dense evaluation of `I_s(A,B)` on a uniform grid plus exact tails outside it.

use rayon::prelude::*;
use std::cmp::Ordering;

use super::exterior::exterior_potential;
use super::lattice::shared_table;
use super::rules::gauss_legendre_cached;
use super::{InteractionEstimate, QuadratureOptions};
use crate::error::{Error, Result};
use crate::geometry::grid::shape_within_box;
use crate::geometry::{default_lines, voxelize_lines, GridSpec, ShapeExpr, VoxelSet, P3};
use crate::kernel::KernelParams;
use crate::sum::{compensated_sum, NeumaierSum};

/// Part of a set outside the computational box.
#[derive(Debug, Clone, PartialEq)]
pub enum Exterior {
    Empty,
    Full,
    Shape(ShapeExpr),
}

impl Exterior {
    pub fn from_shape(shape: &ShapeExpr, grid: &GridSpec) -> Self {
        match shape {
            ShapeExpr::Empty { .. } => Exterior::Empty,
            ShapeExpr::Full { .. } => Exterior::Full,
            _ if shape_within_box(shape, grid) => Exterior::Empty,
            _ => Exterior::Shape(shape.clone()),
        }
    }

    pub fn is_empty(&self) -> bool {
        matches!(self, Exterior::Empty)
    }
}

/// A set on a grid: occupancy fractions inside the box and its exterior part.
#[derive(Debug, Clone, PartialEq)]
pub struct Operand {
    pub occupancy: Vec<f64>,
    pub exterior: Exterior,
}

impl Operand {
    /// Occupancy measured along `lines^{n-1}` exact line segments per cell.
    pub fn from_shape(shape: &ShapeExpr, grid: &GridSpec, lines: usize) -> Result<Self> {
        let vs = voxelize_lines(shape, grid, lines)?;
        Ok(Self { occupancy: vs.occupancy, exterior: Exterior::from_shape(shape, grid) })
    }

    pub fn from_voxels(vs: &VoxelSet) -> Self {
        let exterior = match &vs.exterior {
            None => Exterior::Empty,
            Some(s) => Exterior::from_shape(s, &vs.grid),
        };
        Self { occupancy: vs.occupancy.clone(), exterior }
    }

    pub fn is_empty(&self) -> bool {
        self.exterior.is_empty() && self.occupancy.iter().all(|v| *v == 0.0)
    }
}

/// Either an analytic set or a voxel set.
#[derive(Debug, Clone, Copy)]
pub enum SetArg<'a> {
    Shape(&'a ShapeExpr),
    Voxels(&'a VoxelSet),
}

impl SetArg<'_> {
    fn dim(&self) -> Result<usize> {
        match self {
            SetArg::Shape(s) => s.validate(),
            SetArg::Voxels(v) => Ok(v.grid.dim()),
        }
    }
}

/// Grid covering the bounded shapes, with cubic cells and a padding ring.
pub fn grid_for_shapes(shapes: &[&ShapeExpr], n: usize, opts: &QuadratureOptions) -> Result<GridSpec> {
    let mut lo = [f64::INFINITY; 3];
    let mut hi = [f64::NEG_INFINITY; 3];
    let mut any = false;
    for s in shapes {
        if let Some((a, b)) = s.bounds() {
            any = true;
            for i in 0..n {
                lo[i] = lo[i].min(a[i]);
                hi[i] = hi[i].max(b[i]);
            }
        }
    }
    if !any {
        return Err(Error::NonIntegrableTail);
    }
    grid_for_box(&lo, &hi, n, opts.cells_per_axis, opts.padding_cells)
}

/// Grid over `[lo, hi]` with `cells` cells along the longest axis, cubic cells
/// and `pad` extra layers; box faces stay on cell faces.
pub fn grid_for_box(lo: &P3, hi: &P3, n: usize, cells: usize, pad: usize) -> Result<GridSpec> {
    let ext = (0..n).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    if !(ext > 0.0) {
        return Err(Error::ZeroVolume);
    }
    let h = ext / cells as f64;
    let mut glo = vec![0.0; n];
    let mut ghi = vec![0.0; n];
    let mut counts = vec![0; n];
    for i in 0..n {
        let m = (((hi[i] - lo[i]) / h) - 1e-9).ceil().max(1.0) as usize;
        let c = 0.5 * (lo[i] + hi[i]);
        let extra = m as f64 * h;
        // keep aligned faces when the extent is a whole number of cells
        let start = if ((hi[i] - lo[i]) / h - m as f64).abs() < 1e-9 { lo[i] } else { c - 0.5 * extra };
        glo[i] = start - pad as f64 * h;
        ghi[i] = start + extra + pad as f64 * h;
        counts[i] = m + 2 * pad;
    }
    GridSpec::new(&glo, &ghi, &counts)
}

/// `I_s(A,B)` for analytic or voxel sets.
pub fn interaction(a: SetArg, b: SetArg, k: &KernelParams, opts: &QuadratureOptions) -> Result<InteractionEstimate> {
    opts.validate()?;
    let (na, nb) = (a.dim()?, b.dim()?);
    if na != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, got: na });
    }
    if nb != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, got: nb });
    }
    let grid = match (a, b) {
        (SetArg::Voxels(va), SetArg::Voxels(vb)) => {
            if va.grid != vb.grid {
                return Err(Error::param("grid", "voxel sets must share one grid"));
            }
            va.grid.clone()
        }
        (SetArg::Voxels(v), _) | (_, SetArg::Voxels(v)) => v.grid.clone(),
        (SetArg::Shape(sa), SetArg::Shape(sb)) => grid_for_shapes(&[sa, sb], k.n, opts)?,
    };
    let op = |x: SetArg| -> Result<Operand> {
        match x {
            SetArg::Shape(s) => Operand::from_shape(s, &grid, default_lines(k.n)),
            SetArg::Voxels(v) => Ok(Operand::from_voxels(v)),
        }
    };
    let (oa, ob) = (op(a)?, op(b)?);
    check_disjoint(&oa, &ob, &grid)?;
    interaction_on_grid(&grid, &oa, &ob, k, opts)
}

fn check_disjoint(a: &Operand, b: &Operand, grid: &GridSpec) -> Result<()> {
    let excess: f64 = a.occupancy.iter().zip(&b.occupancy).map(|(x, y)| (x + y - 1.0).max(0.0)).sum();
    if excess * grid.cell_volume() > 1e-9 * grid.box_volume() {
        return Err(Error::Overlap);
    }
    Ok(())
}

/// Total order on operands used to fix the summation roles.
fn canonical_order(a: &Operand, b: &Operand) -> Ordering {
    for (x, y) in a.occupancy.iter().zip(&b.occupancy) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Interaction of two operands on a common grid.
///
/// The value is symmetric bitwise in its arguments and independent of the number
/// of worker threads.
pub fn interaction_on_grid(grid: &GridSpec, a: &Operand, b: &Operand, k: &KernelParams, opts: &QuadratureOptions) -> Result<InteractionEstimate> {
    if grid.dim() != k.n {
        return Err(Error::DimensionMismatch { expected: k.n, got: grid.dim() });
    }
    if a.occupancy.len() != grid.num_cells() || b.occupancy.len() != grid.num_cells() {
        return Err(Error::param("occupancy", "length differs from the grid cell count"));
    }
    if !a.exterior.is_empty() && !b.exterior.is_empty() {
        return Err(Error::NonIntegrableTail);
    }
    let (rows, cols) = if canonical_order(a, b) == Ordering::Greater { (b, a) } else { (a, b) };
    let dense = dense_sum(grid, &rows.occupancy, &cols.occupancy, k, opts);
    let t1 = exterior_term(grid, &rows.occupancy, &cols.exterior, k, opts);
    let t2 = exterior_term(grid, &cols.occupancy, &rows.exterior, k, opts);
    // the two tail terms are added first so that swapping arguments is exact
    let tails = t1 + t2;
    Ok(dense + tails)
}

/// `sum_{i != j} a_i b_j W(i - j)` with the lattice table for the grid's cell shape.
pub fn dense_sum(grid: &GridSpec, a: &[f64], b: &[f64], k: &KernelParams, opts: &QuadratureOptions) -> InteractionEstimate {
    let n = grid.dim();
    let h = grid.cell_dims();
    let mut extent = [0usize; 3];
    for i in 0..n {
        extent[i] = grid.cells[i] - 1;
    }
    let nz = |v: &[f64]| -> Vec<([i64; 3], f64)> {
        v.iter()
            .enumerate()
            .filter(|(_, x)| **x != 0.0)
            .map(|(i, x)| {
                let m = grid.unravel(i);
                ([m[0] as i64, m[1] as i64, m[2] as i64], *x)
            })
            .collect()
    };
    let ra = nz(a);
    let cb = nz(b);
    if ra.is_empty() || cb.is_empty() {
        return InteractionEstimate::ZERO;
    }
    let table = shared_table(*k, h, extent, opts.near_field_rel_tol);
    let vals = table.values();
    let (s1, s2) = (extent[1] + 1, extent[2] + 1);
    let rows: Vec<f64> = ra
        .par_iter()
        .map(|(mi, ai)| {
            let mut acc = NeumaierSum::new();
            for (mj, bj) in &cb {
                let o0 = (mi[0] - mj[0]).unsigned_abs() as usize;
                let o1 = (mi[1] - mj[1]).unsigned_abs() as usize;
                let o2 = (mi[2] - mj[2]).unsigned_abs() as usize;
                let w = vals[(o0 * s1 + o1) * s2 + o2];
                acc.add(bj * w);
            }
            ai * acc.value()
        })
        .collect();
    let value = compensated_sum(rows.iter().copied());
    let terms = (ra.len() * cb.len()) as f64;
    let error_bound = value * (table.rel_error + terms.sqrt() * f64::EPSILON);
    InteractionEstimate::new(value, error_bound)
}

/// `s(1-s) sum_i occ_i int_{cell_i} u(x) dx` with `u` the potential of the exterior part.
pub fn exterior_term(grid: &GridSpec, occ: &[f64], ext: &Exterior, k: &KernelParams, opts: &QuadratureOptions) -> InteractionEstimate {
    let shape = match ext {
        Exterior::Empty => return InteractionEstimate::ZERO,
        Exterior::Full => None,
        Exterior::Shape(s) => Some(s),
    };
    let cells: Vec<(usize, f64)> = occ.iter().copied().enumerate().filter(|(_, x)| *x != 0.0).collect();
    let per_cell: Vec<(f64, f64)> = cells
        .par_iter()
        .map(|(idx, o)| {
            let (u, e) = cell_average_potential(grid, *idx, shape, k, opts);
            (o * u, o * e)
        })
        .collect();
    let vol = grid.cell_volume();
    let value = compensated_sum(per_cell.iter().map(|p| p.0));
    let err = compensated_sum(per_cell.iter().map(|p| p.1));
    InteractionEstimate::new(value, err) * (k.normalization() * vol)
}

/// Mean of the exterior potential over one cell (Gauss points in n <= 2, the
/// center in 3D), with the difference to the midpoint value as error estimate.
pub fn cell_average_potential(grid: &GridSpec, idx: usize, shape: Option<&ShapeExpr>, k: &KernelParams, opts: &QuadratureOptions) -> (f64, f64) {
    let n = k.n;
    let (lo, hi) = (grid.lo_p3(), grid.hi_p3());
    let tol = opts.near_field_rel_tol;
    let center = grid.cell_center(idx);
    let (mid, mid_err) = exterior_potential(shape, &center, &lo, &hi, n, k.s, tol);
    if n == 3 {
        return (mid, mid_err);
    }
    let rule = gauss_legendre_cached(2);
    let h = grid.cell_dims();
    let mut acc = 0.0;
    let mut err = 0.0;
    let pts = if n == 1 { 2 } else { 4 };
    for m in 0..pts {
        let mut x = center;
        for i in 0..n {
            x[i] += 0.5 * h[i] * rule.0[(m >> i) & 1];
        }
        let (u, e) = exterior_potential(shape, &x, &lo, &hi, n, k.s, tol);
        acc += u;
        err += e;
    }
    let avg = acc / pts as f64;
    (avg, err / pts as f64 + (avg - mid).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_against_its_complement() {
        // s(1-s) int_0^1 (x^{-s} + (1-x)^{-s})/s dx = 2
        for s in [0.2, 0.5, 0.8] {
            let k = KernelParams::new(1, s).unwrap();
            let e = ShapeExpr::cuboid(&[0.0], &[1.0]);
            let c = e.clone().complement();
            let opts = QuadratureOptions::for_dim(1);
            let v = interaction(SetArg::Shape(&e), SetArg::Shape(&c), &k, &opts).unwrap();
            assert!((v.value - 2.0).abs() < 1e-3 * 2.0, "s={s} {v:?}");
        }
    }

    #[test]
    fn empty_set_gives_zero() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let e = ShapeExpr::empty(2);
        let b = ShapeExpr::ball(&[0.0, 0.0], 1.0);
        let v = interaction(SetArg::Shape(&e), SetArg::Shape(&b), &k, &QuadratureOptions::for_dim(2)).unwrap();
        assert_eq!(v.value, 0.0);
    }

    #[test]
    fn overlap_is_rejected() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let a = ShapeExpr::ball(&[0.0, 0.0], 1.0);
        let b = ShapeExpr::ball(&[0.5, 0.0], 1.0);
        let r = interaction(SetArg::Shape(&a), SetArg::Shape(&b), &k, &QuadratureOptions::for_dim(2));
        assert!(matches!(r, Err(Error::Overlap)));
    }

    #[test]
    fn two_unbounded_tails_are_rejected() {
        let k = KernelParams::new(2, 0.5).unwrap();
        let a = ShapeExpr::half_space(&[0.0, 1.0], 0.0);
        let b = a.clone().complement();
        let r = interaction(SetArg::Shape(&a), SetArg::Shape(&b), &k, &QuadratureOptions::for_dim(2));
        assert!(matches!(r, Err(Error::NonIntegrableTail)));
    }
}
