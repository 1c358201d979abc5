//! Heat-flux large deviations for harmonic oscillator networks driven by
//! Langevin reservoirs at different temperatures.
//!
//! The numerical core is generic over the floating-point type through
//! [`Real`]; the aliases at the crate root fix it to `f64`.

pub mod cgf;
pub mod error;
pub mod ldp;
pub mod linalg;
pub mod network;
pub mod optim;
pub mod scalar;
pub mod sim;

pub use error::{Error, Result};
pub use network::{parse_spec, presets, NetworkSpec};
pub use scalar::Real;

/// Double-precision model.
pub type Model = network::LinearModel<f64>;
/// Double-precision Riccati solution.
pub type Riccati = linalg::RiccatiSolution<f64>;
/// Double-precision domain geometry.
pub type Geometry = cgf::DomainGeometry<f64>;
