mod bfunction;
mod certificates;
mod checks;
mod equality;

pub use bfunction::{BFunction, BKind, Jet, SampledB};
pub(crate) use bfunction::first_derivative;
pub use certificates::{bound_certificates, BoundCertificates, BoundCheck, GrowthCertificate, Verdict, CERTIFICATE_TOL};
pub use checks::*;
pub use equality::{integrate_equality_ode, EqualitySolution, POSITIVITY_FLOOR};
