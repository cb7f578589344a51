//! Singular interaction integrals for the kernel `s(1-s) |x-y|^{-(n+s)}`.

pub mod engine;
pub mod exterior;
pub mod lattice;
pub mod pair;
pub mod rules;
pub mod tail;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use engine::{interaction, interaction_on_grid, Exterior, Operand, SetArg};
pub use pair::{pair_weight, CellBox};
pub use tail::{tail_integral, tail_integral_numeric};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureOptions {
    /// Relative accuracy requested from box-pair weights and angular integrals.
    pub near_field_rel_tol: f64,
    /// Radius beyond which tails are summed in closed form; `None` means
    /// eight times the diameter of the computational box.
    pub far_cutoff: Option<f64>,
    pub max_subdivision_depth: usize,
    /// Cells per axis across the bounded part when a shape must be voxelized.
    pub cells_per_axis: usize,
    /// Layers of extra cells placed around the bounded part.
    pub padding_cells: usize,
    /// Grids used by the set functionals: `cells_per_axis / 2^j`, j below this count.
    /// Two or more enable extrapolation in the cell size.
    pub refinement_levels: usize,
    /// Sub-cell offsets of the grid averaged per level (1 = no offset).
    pub grid_shifts: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self {
            near_field_rel_tol: 1e-6,
            far_cutoff: None,
            max_subdivision_depth: 12,
            cells_per_axis: 64,
            padding_cells: 4,
            refinement_levels: 3,
            grid_shifts: 1,
        }
    }
}

impl QuadratureOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.near_field_rel_tol > 0.0) {
            return Err(Error::param("quadrature.near_field_rel_tol", "must be positive"));
        }
        if let Some(c) = self.far_cutoff {
            if !(c > 0.0) {
                return Err(Error::param("quadrature.far_cutoff", "must be positive"));
            }
        }
        if self.max_subdivision_depth < 1 {
            return Err(Error::param("quadrature.max_subdivision_depth", "must be at least 1"));
        }
        if self.cells_per_axis < 2 {
            return Err(Error::param("quadrature.cells_per_axis", "must be at least 2"));
        }
        if !(1..=6).contains(&self.refinement_levels) {
            return Err(Error::param("quadrature.refinement_levels", "must lie in 1..=6"));
        }
        if self.cells_per_axis >> (self.refinement_levels - 1) < 2 {
            return Err(Error::param("quadrature.refinement_levels", "coarsest grid would have fewer than 2 cells per axis"));
        }
        if self.grid_shifts < 1 {
            return Err(Error::param("quadrature.grid_shifts", "must be at least 1"));
        }
        Ok(())
    }

    /// Default resolution per dimension, sized for desk-scale dense sums.
    pub fn for_dim(n: usize) -> Self {
        let cells_per_axis = match n {
            1 => 512,
            2 => 64,
            _ => 16,
        };
        Self { cells_per_axis, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct InteractionEstimate {
    pub value: f64,
    pub error_bound: f64,
}

impl InteractionEstimate {
    pub const ZERO: Self = Self { value: 0.0, error_bound: 0.0 };

    pub fn new(value: f64, error_bound: f64) -> Self {
        Self { value, error_bound }
    }
}

impl std::ops::Add for InteractionEstimate {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self { value: self.value + o.value, error_bound: self.error_bound + o.error_bound }
    }
}

impl std::ops::Mul<f64> for InteractionEstimate {
    type Output = Self;
    fn mul(self, f: f64) -> Self {
        Self { value: self.value * f, error_bound: self.error_bound * f.abs() }
    }
}
