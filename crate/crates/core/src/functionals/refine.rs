//! Grid refinement sequences and extrapolation in the cell size.
//!
//! Voxelizing a curved interface perturbs interactions by `c h^{1-s}` to leading
//! order. Values are computed on grids with `m, m/2, m/4, ...` cells per axis,
//! optionally averaged over sub-cell grid offsets (which removes the dependence
//! on where the interface cuts the cells), and extrapolated with that exponent.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::geometry::{GridSpec, P3};
use crate::quadrature::{InteractionEstimate, QuadratureOptions};

/// Values of several quantities on one grid level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Level {
    pub cells_per_axis: usize,
    pub h: f64,
    pub values: Vec<InteractionEstimate>,
}

/// Offsets in `[0,1)^n` (fractions of a cell) from the additive recurrence with
/// the generalized golden ratio; the first offset is zero.
pub fn grid_offsets(n: usize, count: usize) -> Vec<P3> {
    // phi_d solves x^{d+1} = x + 1
    let phi: f64 = match n {
        1 => 1.618_033_988_749_895,
        2 => 1.324_717_957_244_746,
        _ => 1.220_744_084_605_759_5,
    };
    let mut alpha = [0.0; 3];
    for (i, a) in alpha.iter_mut().enumerate().take(n) {
        *a = phi.powi(-(i as i32 + 1));
    }
    (0..count)
        .map(|k| {
            let mut o = [0.0; 3];
            for i in 0..n {
                o[i] = (k as f64 * alpha[i]).fract();
            }
            o
        })
        .collect()
}

/// `grid` moved by `-offset * h` with one extra cell per axis so it still covers the box.
pub fn shifted(grid: &GridSpec, offset: &P3) -> Result<GridSpec> {
    if offset.iter().all(|v| *v == 0.0) {
        return Ok(grid.clone());
    }
    let n = grid.dim();
    let mut lo = grid.lo.clone();
    let mut hi = grid.hi.clone();
    let mut cells = grid.cells.clone();
    for i in 0..n {
        let h = grid.h(i);
        lo[i] -= offset[i] * h;
        hi[i] = lo[i] + (cells[i] + 1) as f64 * h;
        cells[i] += 1;
    }
    GridSpec::new(&lo, &hi, &cells)
}

/// Evaluates `eval` on every level and offset. `make_grid(m)` builds the
/// unshifted grid with `m` cells across the bounded part.
pub fn levels<G, F>(opts: &QuadratureOptions, n: usize, make_grid: G, eval: F) -> Result<Vec<Level>>
where
    G: Fn(usize) -> Result<GridSpec>,
    F: Fn(&GridSpec) -> Result<Vec<InteractionEstimate>>,
{
    let offsets = grid_offsets(n, opts.grid_shifts);
    let mut out = Vec::with_capacity(opts.refinement_levels);
    for j in (0..opts.refinement_levels).rev() {
        let m = opts.cells_per_axis >> j;
        let base = make_grid(m)?;
        let mut sum: Vec<InteractionEstimate> = Vec::new();
        for off in &offsets {
            let g = shifted(&base, off)?;
            let v = eval(&g)?;
            if sum.is_empty() {
                sum = v;
            } else {
                for (a, b) in sum.iter_mut().zip(v) {
                    *a = *a + b;
                }
            }
        }
        let k = offsets.len() as f64;
        let values = sum.into_iter().map(|v| v * (1.0 / k)).collect();
        out.push(Level { cells_per_axis: m, h: base.h(0), values });
    }
    Ok(out)
}

/// Richardson step between a coarse and a fine value with error exponent `p`.
fn richardson(coarse: &InteractionEstimate, fine: &InteractionEstimate, ratio: f64, p: f64) -> InteractionEstimate {
    let a = 1.0 / (ratio.powf(p) - 1.0);
    InteractionEstimate::new(
        fine.value + a * (fine.value - coarse.value),
        (1.0 + a) * fine.error_bound + a * coarse.error_bound,
    )
}

/// Extrapolated value of component `c` across the levels (coarse to fine).
///
/// With three or more levels the error bound is the change between the last two
/// extrapolants; with two it is the full correction. The quadrature bounds are
/// propagated through the extrapolation weights. Negative estimates are clamped
/// to zero since every quantity here is an interaction.
pub fn extrapolate(levels: &[Level], c: usize, p: f64) -> InteractionEstimate {
    let last = levels.len() - 1;
    let fine = levels[last].values[c];
    if levels.len() == 1 {
        return fine;
    }
    let step = |j: usize| {
        let (a, b) = (&levels[j - 1], &levels[j]);
        richardson(&a.values[c], &b.values[c], a.h / b.h, p)
    };
    let r = step(last);
    let spread = if levels.len() >= 3 { (r.value - step(last - 1).value).abs() } else { (r.value - fine.value).abs() };
    let value = r.value.max(0.0);
    let clamp = value - r.value;
    InteractionEstimate::new(value, r.error_bound + spread + clamp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_removes_the_leading_power() {
        let p = 0.3;
        let f = |h: f64| 5.0 + 2.0 * h.powf(p) + 0.5 * h * h;
        let lv: Vec<Level> = [0.04, 0.02, 0.01]
            .iter()
            .map(|&h| Level { cells_per_axis: (1.0 / h) as usize, h, values: vec![InteractionEstimate::new(f(h), 0.0)] })
            .collect();
        let e = extrapolate(&lv, 0, p);
        assert!((e.value - 5.0).abs() < 1e-3);
        assert!(e.error_bound >= (e.value - 5.0).abs());
        assert!((extrapolate(&lv[2..], 0, p).value - f(0.01)).abs() < 1e-15);
    }

    #[test]
    fn offsets_are_distinct_fractions() {
        let o = grid_offsets(2, 4);
        assert_eq!(o[0], [0.0; 3]);
        for a in &o {
            assert!(a.iter().all(|v| (0.0..1.0).contains(v)));
        }
        assert!(o[1] != o[2] && o[2] != o[3]);
    }
}
