//! Pointwise bounds, potential growth and volume growth on rigid models.

mod bounds;
mod growth;
mod potential;
mod volume;

pub use bounds::{pointwise_bounds_check, BoundsReport, CURVATURE_BOUND_TOL, GRADIENT_BOUND_TOL};
pub use growth::*;
pub use potential::{default_fit_radii, potential_growth_fit, PotentialGrowthReport, COEFFICIENT_TOL, MIN_FIT_RADIUS};
pub use volume::*;
