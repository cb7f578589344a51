//! Set functionals built on the interaction engine.

pub mod perimeter;
pub mod refine;

pub use perimeter::{per_s_global, per_s_global_levels, per_s_local, PerimeterReport};
pub use refine::{extrapolate, Level};
pub mod zeta;
pub use zeta::{s0_limit_prediction, zeta_cone_exact, zeta_estimate, ZetaEstimate, ZetaSample};
pub mod curvature;
pub use curvature::{curvature_profile, fractional_mean_curvature, CurvatureProfile, CurvatureValue};
pub mod isoperimetry;
pub use isoperimetry::{fraenkel_asymmetry, isoperimetric_report, FraenkelResult, IsoperimetricReport};
pub mod contour;
pub use contour::{planar_contour_perimeter, radial_graph_perimeter};
pub mod second_variation;
pub use second_variation::{second_variation_form, Calibration, SecondVariationForm};
pub mod limits;
pub use limits::{s0_check, s1_check, LimitCheck, SweepPoint};
