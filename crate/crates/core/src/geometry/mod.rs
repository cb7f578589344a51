//! Analytic and voxel sets, volumes, classical perimeters and boundary meshes.

pub mod grid;
pub mod mesh;
pub mod perimeter;
pub mod shape;

pub use grid::{default_lines, grid_around, voxelize, voxelize_lines, volume, GridSpec, VoxelSet, DEFAULT_SUBSAMPLES};
pub use mesh::{boundary_mesh, BoundaryMesh};
pub use perimeter::{classical_perimeter, interface_measure};
pub use shape::{cap_fraction, Intervals, RadialMode, ShapeExpr, P3};
