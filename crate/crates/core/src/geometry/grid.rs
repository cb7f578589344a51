//! Uniform grids and voxelized sets with fractional occupancy.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, Write};

use super::shape::{ShapeExpr, P3};
use crate::error::{Error, Result};
use crate::sum::compensated_sum;

/// Default per-axis subsampling used for occupancy fractions.
pub const DEFAULT_SUBSAMPLES: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub cells: Vec<usize>,
}

impl GridSpec {
    pub fn new(lo: &[f64], hi: &[f64], cells: &[usize]) -> Result<Self> {
        let g = GridSpec { lo: lo.to_vec(), hi: hi.to_vec(), cells: cells.to_vec() };
        g.validate()?;
        Ok(g)
    }

    /// Cube `[lo, hi]^n` with `m` cells per axis.
    pub fn cube(n: usize, lo: f64, hi: f64, m: usize) -> Result<Self> {
        Self::new(&vec![lo; n], &vec![hi; n], &vec![m; n])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.lo.len();
        if !(1..=3).contains(&n) {
            return Err(Error::UnsupportedDimension(n));
        }
        if self.hi.len() != n || self.cells.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: self.hi.len().min(self.cells.len()) });
        }
        if self.lo.iter().zip(&self.hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::param("grid", "requires finite lo < hi componentwise"));
        }
        if self.cells.iter().any(|&c| c < 2) {
            return Err(Error::param("grid.cells", "need at least 2 cells per axis"));
        }
        Ok(())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo_p3(&self) -> P3 {
        let mut p = [0.0; 3];
        p[..self.dim()].copy_from_slice(&self.lo);
        p
    }

    pub fn hi_p3(&self) -> P3 {
        let mut p = [0.0; 3];
        p[..self.dim()].copy_from_slice(&self.hi);
        p
    }

    #[inline]
    pub fn h(&self, axis: usize) -> f64 {
        (self.hi[axis] - self.lo[axis]) / self.cells[axis] as f64
    }

    /// Cell edge lengths, zero-padded to three components.
    pub fn cell_dims(&self) -> P3 {
        let mut d = [0.0; 3];
        for (i, v) in d.iter_mut().enumerate().take(self.dim()) {
            *v = self.h(i);
        }
        d
    }

    pub fn cell_volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.h(i)).product()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn box_volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn diameter(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| (b - a) * (b - a)).sum::<f64>().sqrt()
    }

    /// Multi-index of a flat index (first axis slowest).
    #[inline]
    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let n = self.dim();
        let mut out = [0usize; 3];
        for axis in (0..n).rev() {
            out[axis] = idx % self.cells[axis];
            idx /= self.cells[axis];
        }
        out
    }

    #[inline]
    pub fn ravel(&self, m: &[usize; 3]) -> usize {
        let mut idx = 0;
        for axis in 0..self.dim() {
            idx = idx * self.cells[axis] + m[axis];
        }
        idx
    }

    pub fn cell_center(&self, idx: usize) -> P3 {
        let m = self.unravel(idx);
        let mut c = [0.0; 3];
        for axis in 0..self.dim() {
            c[axis] = self.lo[axis] + (m[axis] as f64 + 0.5) * self.h(axis);
        }
        c
    }

    pub fn cell_bounds(&self, idx: usize) -> (P3, P3) {
        let m = self.unravel(idx);
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for axis in 0..self.dim() {
            lo[axis] = self.lo[axis] + m[axis] as f64 * self.h(axis);
            hi[axis] = lo[axis] + self.h(axis);
        }
        (lo, hi)
    }

    /// Whether `x` lies in the closed bounding box.
    pub fn box_contains(&self, x: &P3) -> bool {
        (0..self.dim()).all(|i| x[i] >= self.lo[i] && x[i] <= self.hi[i])
    }

    /// Grid with `k` extra cells on every side and the same spacing.
    pub fn padded(&self, k: usize) -> GridSpec {
        let n = self.dim();
        let lo = (0..n).map(|i| self.lo[i] - k as f64 * self.h(i)).collect();
        let hi = (0..n).map(|i| self.hi[i] + k as f64 * self.h(i)).collect();
        let cells = self.cells.iter().map(|c| c + 2 * k).collect();
        GridSpec { lo, hi, cells }
    }

    /// Grid with cells twice as large per axis, if every count is even and at least 4.
    pub fn coarsened(&self) -> Option<GridSpec> {
        if self.cells.iter().all(|&c| c % 2 == 0 && c >= 4) {
            Some(GridSpec {
                lo: self.lo.clone(),
                hi: self.hi.clone(),
                cells: self.cells.iter().map(|c| c / 2).collect(),
            })
        } else {
            None
        }
    }

    /// Same cell counts over the dilated box `lambda * box`.
    pub fn scaled(&self, lambda: f64) -> GridSpec {
        GridSpec {
            lo: self.lo.iter().map(|v| v * lambda).collect(),
            hi: self.hi.iter().map(|v| v * lambda).collect(),
            cells: self.cells.clone(),
        }
    }

    pub fn translated(&self, v: &[f64]) -> GridSpec {
        GridSpec {
            lo: self.lo.iter().zip(v).map(|(a, b)| a + b).collect(),
            hi: self.hi.iter().zip(v).map(|(a, b)| a + b).collect(),
            cells: self.cells.clone(),
        }
    }

    /// Fraction of the `m^n` sub-cell centers of cell `idx` inside `shape`.
    pub fn cell_fraction(&self, shape: &ShapeExpr, idx: usize, m: usize) -> f64 {
        let n = self.dim();
        let (lo, _) = self.cell_bounds(idx);
        let dims = self.cell_dims();
        let total = m.pow(n as u32);
        let mut inside = 0usize;
        for k in 0..total {
            let mut rest = k;
            let mut x = [0.0; 3];
            for axis in 0..n {
                let j = rest % m;
                rest /= m;
                x[axis] = lo[axis] + (j as f64 + 0.5) / m as f64 * dims[axis];
            }
            if shape.contains_p(&x) {
                inside += 1;
            }
        }
        inside as f64 / total as f64
    }

    /// Occupied fraction of a cell measured along `m^{n-1}` lines parallel to the
    /// last axis; the length along each line is exact (ray intervals), the
    /// transverse average uses the midpoint rule.
    pub fn cell_fraction_lines(&self, shape: &ShapeExpr, idx: usize, m: usize) -> f64 {
        let n = self.dim();
        let last = n - 1;
        let (lo, _) = self.cell_bounds(idx);
        let dims = self.cell_dims();
        let mut d = [0.0; 3];
        d[last] = 1.0;
        let total = m.pow(last as u32);
        let mut acc = 0.0;
        for k in 0..total {
            let mut rest = k;
            let mut p = lo;
            for axis in 0..last {
                let j = rest % m;
                rest /= m;
                p[axis] = lo[axis] + (j as f64 + 0.5) / m as f64 * dims[axis];
            }
            for (a, b) in shape.ray_intervals(&p, &d) {
                let len = b.min(dims[last]) - a.max(0.0);
                if len > 0.0 {
                    acc += len;
                }
            }
        }
        (acc / (total as f64 * dims[last])).clamp(0.0, 1.0)
    }
}

/// Transverse line count per cell used by [`voxelize_lines`] by default.
pub fn default_lines(n: usize) -> usize {
    match n {
        1 => 1,
        2 => 32,
        _ => 12,
    }
}

/// Like [`voxelize`], with occupancy measured along lines (see
/// [`GridSpec::cell_fraction_lines`]); much closer to the exact area fraction
/// for the same cost.
pub fn voxelize_lines(shape: &ShapeExpr, grid: &GridSpec, lines: usize) -> Result<VoxelSet> {
    let n = shape.validate()?;
    grid.validate()?;
    if n != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: n });
    }
    if lines == 0 {
        return Err(Error::param("lines", "must be at least 1"));
    }
    let occupancy = (0..grid.num_cells())
        .into_par_iter()
        .map(|idx| grid.cell_fraction_lines(shape, idx, lines))
        .collect();
    Ok(VoxelSet { grid: grid.clone(), occupancy, exterior: Some(shape.clone()) })
}

/// A set discretized on a grid by occupancy fractions, with an optional analytic
/// description of the set outside the grid box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VoxelSet {
    pub grid: GridSpec,
    pub occupancy: Vec<f64>,
    pub exterior: Option<ShapeExpr>,
}

impl VoxelSet {
    pub fn new(grid: GridSpec, occupancy: Vec<f64>, exterior: Option<ShapeExpr>) -> Result<Self> {
        grid.validate()?;
        if occupancy.len() != grid.num_cells() {
            return Err(Error::param("occupancy", format!("expected {} values, got {}", grid.num_cells(), occupancy.len())));
        }
        if occupancy.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::param("occupancy", "values must lie in [0,1]"));
        }
        if let Some(e) = &exterior {
            let n = e.validate()?;
            if n != grid.dim() {
                return Err(Error::DimensionMismatch { expected: grid.dim(), got: n });
            }
        }
        Ok(Self { grid, occupancy, exterior })
    }

    pub fn empty(grid: GridSpec) -> Self {
        let n = grid.num_cells();
        Self { grid, occupancy: vec![0.0; n], exterior: None }
    }

    /// Volume inside the grid box.
    pub fn volume_in_box(&self) -> f64 {
        compensated_sum(self.occupancy.iter().copied()) * self.grid.cell_volume()
    }

    /// Whether any part of the set may lie outside the grid box.
    pub fn has_exterior(&self) -> bool {
        match &self.exterior {
            None => false,
            Some(e) => !shape_within_box(e, &self.grid),
        }
    }

    /// Average occupancies over 2^n blocks.
    pub fn coarsened(&self) -> Option<VoxelSet> {
        let coarse = self.grid.coarsened()?;
        let n = self.grid.dim();
        let per = 1usize << n;
        let mut occ = vec![0.0; coarse.num_cells()];
        for (idx, v) in self.occupancy.iter().enumerate() {
            let m = self.grid.unravel(idx);
            let cm = [m[0] / 2, m[1] / 2, m[2] / 2];
            occ[coarse.ravel(&cm)] += v;
        }
        for v in occ.iter_mut() {
            *v /= per as f64;
        }
        Some(VoxelSet { grid: coarse, occupancy: occ, exterior: self.exterior.clone() })
    }

    /// Writes a one-line JSON header followed by little-endian f64 occupancies.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let header = serde_json::json!({
            "format": "fracperim-voxels",
            "version": 1,
            "grid": self.grid,
            "exterior": self.exterior,
            "count": self.occupancy.len(),
        });
        let mut line = serde_json::to_vec(&header)?;
        line.push(b'\n');
        w.write_all(&line)?;
        for v in &self.occupancy {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: BufRead>(mut r: R) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: serde_json::Value = serde_json::from_str(line.trim_end())?;
        if header["format"] != "fracperim-voxels" {
            return Err(Error::Format("not a voxel file".into()));
        }
        let grid: GridSpec = serde_json::from_value(header["grid"].clone())?;
        let exterior: Option<ShapeExpr> = serde_json::from_value(header["exterior"].clone())?;
        let count = header["count"].as_u64().ok_or_else(|| Error::Format("missing count".into()))? as usize;
        let mut buf = vec![0u8; count * 8];
        r.read_exact(&mut buf)?;
        let occ = buf.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        VoxelSet::new(grid, occ, exterior)
    }
}

/// True when the conservative bounds of `shape` lie inside the closed grid box.
pub fn shape_within_box(shape: &ShapeExpr, grid: &GridSpec) -> bool {
    match shape.bounds() {
        None => false,
        Some((lo, hi)) => {
            let n = grid.dim();
            (0..n).any(|i| lo[i] > hi[i])
                || (0..n).all(|i| lo[i] >= grid.lo[i] && hi[i] <= grid.hi[i])
        }
    }
}

/// Occupancy fractions of `shape` on `grid` with `subsamples` points per axis and cell.
pub fn voxelize(shape: &ShapeExpr, grid: &GridSpec, subsamples: usize) -> Result<VoxelSet> {
    let n = shape.validate()?;
    grid.validate()?;
    if n != grid.dim() {
        return Err(Error::DimensionMismatch { expected: grid.dim(), got: n });
    }
    if subsamples == 0 {
        return Err(Error::param("subsamples", "must be at least 1"));
    }
    let occupancy = (0..grid.num_cells())
        .into_par_iter()
        .map(|idx| grid.cell_fraction(shape, idx, subsamples))
        .collect();
    Ok(VoxelSet { grid: grid.clone(), occupancy, exterior: Some(shape.clone()) })
}

/// `sum occupancy * (cell ∩ region fraction) * h^n`, restricted to the grid box.
pub fn volume(vs: &VoxelSet, region: &ShapeExpr) -> Result<f64> {
    volume_with(vs, region, DEFAULT_SUBSAMPLES)
}

pub fn volume_with(vs: &VoxelSet, region: &ShapeExpr, subsamples: usize) -> Result<f64> {
    let n = region.validate()?;
    if n != vs.grid.dim() {
        return Err(Error::DimensionMismatch { expected: vs.grid.dim(), got: n });
    }
    let g = &vs.grid;
    let parts: Vec<f64> = (0..g.num_cells())
        .into_par_iter()
        .map(|idx| {
            let o = vs.occupancy[idx];
            if o == 0.0 {
                0.0
            } else {
                o * g.cell_fraction(region, idx, subsamples)
            }
        })
        .collect();
    Ok(compensated_sum(parts) * g.cell_volume())
}

/// Bounding box of a bounded shape enlarged by `margin` (relative to its extent) on every side.
pub fn grid_around(shape: &ShapeExpr, margin: f64, cells_per_axis: usize) -> Result<GridSpec> {
    let n = shape.validate()?;
    let (lo, hi) = shape.bounds().ok_or_else(|| Error::Unbounded("a bounded shape is required to size the grid".into()))?;
    let ext = (0..n).map(|i| hi[i] - lo[i]).fold(0.0, f64::max);
    if !(ext > 0.0) {
        return Err(Error::ZeroVolume);
    }
    let pad = margin * ext;
    let center: Vec<f64> = (0..n).map(|i| 0.5 * (lo[i] + hi[i])).collect();
    let half = 0.5 * ext + pad;
    let glo: Vec<f64> = center.iter().map(|c| c - half).collect();
    let ghi: Vec<f64> = center.iter().map(|c| c + half).collect();
    GridSpec::new(&glo, &ghi, &vec![cells_per_axis; n])
}
