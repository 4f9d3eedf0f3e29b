//! Geodesic model spaces and a barycenter laboratory.
//!
//! The crate provides
//!
//! * [`comparison`]: curvature-comparison primitives (`s_kappa`, comparison
//!   angles, quadruple and angle-monotonicity tests, cone metric);
//! * [`space`]: Euclidean, spherical, hyperbolic, 1-D quantile and Gaussian
//!   (Bures-Wasserstein) spaces with closed-form geodesics and exp/log maps;
//! * [`barycenter`]: Fréchet-mean solvers and variances;
//! * [`hugging`]: the hugging function, variance-equality residuals and
//!   extendibility-based lower bounds;
//! * [`ratelab`]: seeded Monte Carlo checks of `E d^2(b_n, b*)` rates and
//!   tail bounds.

pub mod barycenter;
pub mod comparison;
pub mod error;
pub mod hugging;
pub mod linalg;
pub mod ratelab;
pub mod rng;
pub mod space;

pub use error::{Error, Result};

/// Library version.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use space::{SpaceKind, SpacePoint, TangentVector};
