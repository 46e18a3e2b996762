//! Chart metrics and coordinate tensor calculus.

pub mod curvature;
pub mod diff;
pub mod field;
pub mod metric;
pub mod oracle;
pub mod sampling;

pub use curvature::{christoffel_at, curvature_numeric, Christoffel, CurvatureSample, FdConfig};
pub use field::{FnField, ScalarField, ZeroField};
pub use metric::{
    unit_ball_volume, unit_sphere_area, FnMetric, MetricField, ProductChart, SpaceForm, SpaceFormChart,
};
pub use oracle::{curvature_oracle, oracle_agreement, OracleSample};
