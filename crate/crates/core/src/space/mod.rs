//! Concrete geodesic model spaces with closed-form metrics, geodesics and
//! exponential/logarithm maps.
//!
//! Five families are supported:
//!
//! | space | curvature | representation |
//! |-------|-----------|----------------|
//! | Euclidean `R^d` | 0 | coordinates |
//! | unit sphere `S^d` | 1 | unit vector in `R^{d+1}` |
//! | hyperbolic `H^d` | -1 | hyperboloid sheet in Minkowski `R^{1,d}` |
//! | quantile grid | 0 | `m` sorted values at levels `(i - 1/2)/m` |
//! | Gaussian (Bures-Wasserstein) | >= 0 | mean + SPD covariance |
//!
//! The quantile space is the 2-Wasserstein space over the line restricted to
//! measures with `m` equal atoms; it is a convex subset of `R^m` with the
//! `1/m`-scaled Euclidean metric.

mod family;
mod gaussian;
mod geodesic;
mod point;
mod serde_impl;
mod tangent;

pub use family::{normal_quantiles, Family, GaussianMapsParams};
pub use gaussian::Gaussian;
pub use geodesic::{
    distance, exp_map, geodesic, log_map, max_extendibility, Extendibility, GeodesicSegment,
};
pub use point::{SpaceKind, SpacePoint};
pub use tangent::{TangentRepr, TangentVector};

/// Geodesic distance below which the sphere treats two points as antipodal.
pub const ANTIPODAL_TOL: f64 = 1e-9;
