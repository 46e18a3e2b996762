pub mod error;
pub mod estimates;
pub mod flow;
pub mod geometry;
pub mod ode;
pub mod quadrature;
pub mod scenario;
pub mod soliton;

pub use error::{Error, Result};
