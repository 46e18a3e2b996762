//! Integral curves of `grad f / |grad f|^2` and the facts they satisfy.

mod checks;
mod integrate;

pub use checks::{
    affine_and_distance_check, arclength_geodesic_check, extract_b, AffineDistanceReport, GeodesicReport,
    AFFINE_TOL, DISTANCE_TOL, GEODESIC_TOL, UNIT_SPEED_TOL,
};
pub use integrate::{integrate_flow, integrate_gradient_flow, Endpoint, FlowCurve, FlowPath, EPS_CRIT};
