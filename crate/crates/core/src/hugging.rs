//! Hugging function and the lower bounds on it.
//!
//! For a barycenter `b*`, a target `b` and a point `x`,
//!
//! ```text
//! k^b_{b*}(x) = 1 - (|log_{b*} x - log_{b*} b|^2 - d^2(x, b)) / d^2(b, b*)
//! ```
//!
//! Hilbert spaces have `k = 1`; it is at most one under nonnegative
//! curvature and at least one under nonpositive curvature.

use serde::Serialize;

use crate::barycenter::{tangent_mean, DiscreteDistribution};
use crate::error::{Error, Result};
use crate::linalg::{self, compensated_sum};
use crate::rng;
use crate::space::{distance, log_map, max_extendibility, Extendibility, Family, SpacePoint};

/// Targets closer than this to `b*` are rejected.
pub const COINCIDENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HuggingReport {
    pub k_value: f64,
    pub extendibility: Extendibility,
    pub k_min_bound: f64,
    pub variance_eq_residual: f64,
}

pub fn hugging_value(b_star: &SpacePoint, b: &SpacePoint, x: &SpacePoint) -> Result<f64> {
    b_star.ensure_same_space(b)?;
    b_star.ensure_same_space(x)?;
    let d_bb = distance(b, b_star)?;
    if d_bb <= COINCIDENT_TOL {
        return Err(Error::CoincidentPoints(d_bb));
    }
    let lx = log_map(b_star, x)?;
    let lb = log_map(b_star, b)?;
    let cone2 = lx.sub(&lb)?.magnitude().powi(2);
    let d_xb = distance(x, b)?;
    Ok(1.0 - (cone2 - d_xb * d_xb) / (d_bb * d_bb))
}

/// `| d^2(b, b*) sum_i w_i k(x_i) - sum_i w_i (d^2(x_i, b) - d^2(x_i, b*)) |`.
pub fn variance_equality_residual(p: &DiscreteDistribution, b_star: &SpacePoint, b: &SpacePoint) -> Result<f64> {
    let d_bb = distance(b, b_star)?;
    let mut lhs = Vec::with_capacity(p.len());
    let mut rhs = Vec::with_capacity(p.len());
    for (w, x) in p.iter() {
        lhs.push(w * hugging_value(b_star, b, x)?);
        let (a, c) = (distance(x, b)?, distance(x, b_star)?);
        rhs.push(w * (a * a - c * c));
    }
    Ok((d_bb * d_bb * compensated_sum(lhs) - compensated_sum(rhs)).abs())
}

/// Lower bound `lambda_out / (1 + lambda_out) - 1 / lambda_in` on the
/// hugging function along `(lambda_in, lambda_out)`-extendible geodesics.
/// Infinite factors are taken as limits.
pub fn extendibility_kmin(lambda_in: f64, lambda_out: f64) -> Result<f64> {
    if !(lambda_in > 0.0) || !(lambda_out >= 0.0) {
        return Err(Error::BadLambda);
    }
    let outer = if lambda_out.is_infinite() { 1.0 } else { lambda_out / (1.0 + lambda_out) };
    Ok(outer - 1.0 / lambda_in)
}

/// Per-support-point extendibility of the geodesic from `b_star`.
pub fn point_extendibilities(p: &DiscreteDistribution, b_star: &SpacePoint) -> Result<Vec<Extendibility>> {
    p.points().iter().map(|x| max_extendibility(b_star, x)).collect()
}

/// Componentwise infimum of [`point_extendibilities`].
pub fn support_extendibility(p: &DiscreteDistribution, b_star: &SpacePoint) -> Result<Extendibility> {
    Ok(point_extendibilities(p, b_star)?
        .into_iter()
        .fold(Extendibility::UNBOUNDED, Extendibility::meet))
}

/// `sum_i sum_j w_i w_j <log_b x_i, log_b x_j>_b`.
///
/// By bilinearity this is the squared norm of the tangent mean, which is how
/// it is evaluated.
pub fn exp_barycenter_residual(p: &DiscreteDistribution, b: &SpacePoint) -> Result<f64> {
    Ok(tangent_mean(p, b)?.magnitude().powi(2))
}

/// Extreme eigenvalues `(alpha, beta)` of the optimal linear map from
/// `b_star` to `mu`, i.e. the strong-convexity and smoothness constants of
/// the Brenier potential between two Gaussians.
pub fn bures_potential_bounds(b_star: &SpacePoint, mu: &SpacePoint) -> Result<(f64, f64)> {
    let (a, m) = match (b_star, mu) {
        (SpacePoint::Gaussian(a), SpacePoint::Gaussian(m)) => (a, m),
        _ => return Err(Error::SpaceMismatch("gaussian".into(), format!("{} / {}", b_star.signature(), mu.signature()))),
    };
    b_star.ensure_same_space(mu)?;
    let eigs = linalg::sym_eigen(&a.transport_map_to(m)?).0;
    Ok((eigs.min(), eigs.max()))
}

/// `1 - beta + alpha`: positive iff `beta - alpha < 1`.
pub fn wasserstein_kmin(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0 && beta >= alpha && beta.is_finite()) {
        return Err(Error::BadBounds { alpha, beta });
    }
    Ok(1.0 - beta + alpha)
}

/// Smallest hugging value over explicit targets, skipping targets within
/// [`COINCIDENT_TOL`] of `b_star`. `None` when every target was skipped.
pub fn min_hugging_over(b_star: &SpacePoint, x: &SpacePoint, targets: &[SpacePoint]) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for b in targets {
        match hugging_value(b_star, b, x) {
            Ok(k) => best = Some(best.map_or(k, |m| m.min(k))),
            Err(Error::CoincidentPoints(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(best)
}

/// Monte Carlo estimate of `min_b k^b_{b*}(x)` with `n_targets` targets
/// drawn from `family`. This is an upper bound on the true minimum.
pub fn min_hugging_over_targets(
    b_star: &SpacePoint,
    x: &SpacePoint,
    family: &Family,
    n_targets: usize,
    seed: u64,
) -> Result<f64> {
    if n_targets == 0 {
        return Err(Error::InvalidConfig("n_targets must be >= 1".into()));
    }
    let targets = family.sample_n(n_targets, &mut rng::stream(seed, &[0]))?;
    min_hugging_over(b_star, x, &targets)?
        .ok_or(Error::CoincidentPoints(0.0))
}

/// All diagnostics for one `(b*, b, x)` triple against the measure `p`.
pub fn hugging_report(p: &DiscreteDistribution, b_star: &SpacePoint, b: &SpacePoint, x: &SpacePoint) -> Result<HuggingReport> {
    let extendibility = support_extendibility(p, b_star)?;
    Ok(HuggingReport {
        k_value: hugging_value(b_star, b, x)?,
        extendibility,
        k_min_bound: extendibility_kmin(extendibility.lambda_in, extendibility.lambda_out)?,
        variance_eq_residual: variance_equality_residual(p, b_star, b)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barycenter::{empirical_barycenter, SolverOptions};
    use nalgebra::{DMatrix, DVector};

    fn s(v: &[f64]) -> SpacePoint {
        SpacePoint::sphere(v.to_vec()).unwrap()
    }

    fn g(cov: &[f64]) -> SpacePoint {
        let d = (cov.len() as f64).sqrt() as usize;
        SpacePoint::gaussian(DVector::zeros(d), DMatrix::from_row_slice(d, d, cov)).unwrap()
    }

    #[test]
    fn hugging_examples() {
        let e = |v: &[f64]| SpacePoint::euclidean(v.to_vec()).unwrap();
        let k = hugging_value(&e(&[0.0, 1.0]), &e(&[3.0, -2.0]), &e(&[0.5, 7.0])).unwrap();
        assert!((k - 1.0).abs() < 1e-14);
        let (bs, b) = (s(&[0.0, 0.0, 1.0]), s(&[0.0, 1.0, 0.0]));
        assert!((hugging_value(&bs, &b, &bs).unwrap() - 1.0).abs() < 1e-14);
        let k = hugging_value(&bs, &b, &s(&[1.0, 0.0, 0.0])).unwrap();
        assert!(k.abs() < 1e-14, "{k}");
        assert!(matches!(hugging_value(&bs, &bs, &b), Err(Error::CoincidentPoints(_))));
    }

    #[test]
    fn kmin_formulas() {
        assert_eq!(extendibility_kmin(4.0, 1.0).unwrap(), 0.25);
        assert_eq!(extendibility_kmin(f64::INFINITY, f64::INFINITY).unwrap(), 1.0);
        assert_eq!(extendibility_kmin(1.0, 1.0).unwrap(), -0.5);
        assert!(matches!(extendibility_kmin(0.0, 1.0), Err(Error::BadLambda)));
        assert_eq!(wasserstein_kmin(1.0, 1.0).unwrap(), 1.0);
        assert!((wasserstein_kmin(0.8, 1.6).unwrap() - 0.2).abs() < 1e-15);
        assert!((wasserstein_kmin(0.5, 1.6).unwrap() + 0.1).abs() < 1e-15);
        assert!(matches!(wasserstein_kmin(1.6, 0.5), Err(Error::BadBounds { .. })));
    }

    #[test]
    fn potential_bounds() {
        let id = g(&[1.0, 0.0, 0.0, 1.0]);
        let (a, b) = bures_potential_bounds(&id, &id).unwrap();
        assert!((a - 1.0).abs() < 1e-14 && (b - 1.0).abs() < 1e-14);
        let (a, b) = bures_potential_bounds(&g(&[1.0]), &g(&[4.0])).unwrap();
        assert!((a - 2.0).abs() < 1e-14 && (b - 2.0).abs() < 1e-14);
        let (a, b) = bures_potential_bounds(&id, &g(&[0.81, 0.0, 0.0, 2.25])).unwrap();
        assert!((a - 0.9).abs() < 1e-14 && (b - 1.5).abs() < 1e-14);
    }

    #[test]
    fn residuals_at_barycenter() {
        let pts = vec![s(&[1.0, 0.0, 0.0]), s(&[0.0, 1.0, 0.0]), s(&[0.0, 0.0, 1.0])];
        let r = empirical_barycenter(&pts, &SolverOptions::default()).unwrap();
        let p = DiscreteDistribution::uniform(pts).unwrap();
        let res = variance_equality_residual(&p, &r.point, &s(&[0.0, 0.0, 1.0])).unwrap();
        assert!(res <= 1e-8, "{res}");
        assert!(exp_barycenter_residual(&p, &r.point).unwrap() <= 1e-20);

        let e = |v: f64| SpacePoint::euclidean(vec![v]).unwrap();
        let p = DiscreteDistribution::uniform(vec![e(-1.0), e(2.0)]).unwrap();
        assert_eq!(exp_barycenter_residual(&p, &e(0.5)).unwrap(), 0.0);
        assert!((exp_barycenter_residual(&p, &e(1.5)).unwrap() - 1.0).abs() < 1e-15);
        assert!(variance_equality_residual(&p, &e(0.5), &e(3.0)).unwrap() < 1e-14);
        let x = e(1.0);
        let p = DiscreteDistribution::uniform(vec![x.clone()]).unwrap();
        assert_eq!(variance_equality_residual(&p, &x, &e(4.0)).unwrap(), 0.0);
    }

    #[test]
    fn support_extendibility_examples() {
        let e = |v: f64| SpacePoint::euclidean(vec![v]).unwrap();
        let p = DiscreteDistribution::uniform(vec![e(-1.0), e(2.0)]).unwrap();
        assert_eq!(support_extendibility(&p, &e(0.5)).unwrap(), Extendibility::UNBOUNDED);

        let bs = g(&[1.0, 0.0, 0.0, 1.0]);
        let p = DiscreteDistribution::uniform(vec![g(&[0.64, 0.0, 0.0, 1.0]), g(&[1.0, 0.0, 0.0, 2.56])]).unwrap();
        let ext = support_extendibility(&p, &bs).unwrap();
        assert!((ext.lambda_in - 1.0 / 0.6).abs() < 1e-12);
        assert!((ext.lambda_out - 4.0).abs() < 1e-12);
        let k = extendibility_kmin(ext.lambda_in, ext.lambda_out).unwrap();
        assert!((k - wasserstein_kmin(0.8, 1.6).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn hyperbolic_targets_hug_from_above() {
        let fam = Family::HyperbolicGaussian { dim: 2, scale: 0.8, center: None };
        let bs = fam.anchor().unwrap();
        let x = fam.sample(11).unwrap();
        assert!(min_hugging_over_targets(&bs, &x, &fam, 200, 5).unwrap() >= 1.0 - 1e-9);
        let fam = Family::EuclideanGaussian { dim: 3, scale: 1.0, center: None };
        let k = min_hugging_over_targets(&fam.anchor().unwrap(), &fam.sample(1).unwrap(), &fam, 50, 2).unwrap();
        assert!((k - 1.0).abs() < 1e-12);
    }
}
