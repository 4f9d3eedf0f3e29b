use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::gaussian::Gaussian;
use super::geodesic::exp_map;
use super::point::{SpaceKind, SpacePoint};
use super::tangent::{TangentRepr, TangentVector};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng;

/// Parameters of the Gaussian-space family: pushforwards of an anchor
/// `N(anchor_mean, anchor_cov)` by `z -> m + A (z - anchor_mean)`, where
/// `A = R diag(l) R^T` has a Haar-random rotation `R` and eigenvalues in
/// `[alpha, beta]`. Each eigenvalue is drawn uniformly from `[alpha, 1]` or
/// `[1, beta]`, with branch weights chosen so that `E[l] = 1`; the anchor is
/// then the population barycenter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianMapsParams {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub mean_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_mean: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor_cov: Option<Vec<Vec<f64>>>,
}

/// Built-in sampling families. Each is symmetric about its anchor, which is
/// therefore the population barycenter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// `N(center, scale^2 I)` on `R^dim`.
    EuclideanGaussian {
        dim: usize,
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// Uniform on the geodesic ball of radius `radius < pi/4` in `S^dim`.
    SphereCap {
        dim: usize,
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    /// `exp_c(v)` with `v ~ N(0, scale^2 I)` in the tangent space of `H^dim`.
    HyperbolicGaussian {
        dim: usize,
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        center: Option<Vec<f64>>,
    },
    GaussianMaps(GaussianMapsParams),
    /// Quantile grids of `N(mu, s^2)` with `mu ~ N(0, mean_scale^2)` and
    /// `s ~ U[min_std, max_std]`.
    QuantileGaussian {
        #[serde(default = "default_grid")]
        grid: usize,
        mean_scale: f64,
        min_std: f64,
        max_std: f64,
    },
}

fn default_grid() -> usize {
    256
}

fn bad(msg: impl Into<String>) -> Error {
    Error::BadFamilyParams(msg.into())
}

impl Family {
    pub fn kind(&self) -> SpaceKind {
        match self {
            Family::EuclideanGaussian { .. } => SpaceKind::Euclidean,
            Family::SphereCap { .. } => SpaceKind::Sphere,
            Family::HyperbolicGaussian { .. } => SpaceKind::Hyperbolic,
            Family::GaussianMaps(_) => SpaceKind::Gaussian,
            Family::QuantileGaussian { .. } => SpaceKind::Quantile,
        }
    }

    /// Lists every violated parameter constraint.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut need = |ok: bool, msg: &str| {
            if !ok {
                out.push(msg.to_string());
            }
        };
        match self {
            Family::EuclideanGaussian { dim, scale, center } => {
                need(*dim >= 1, "dim must be >= 1");
                need(scale.is_finite() && *scale > 0.0, "scale must be positive");
                if let Some(c) = center {
                    need(c.len() == *dim, "center length must equal dim");
                }
            }
            Family::SphereCap { dim, radius, center } => {
                need(*dim >= 1, "dim must be >= 1");
                need(radius.is_finite() && *radius > 0.0 && *radius < PI / 4.0, "radius must lie in (0, pi/4)");
                if let Some(c) = center {
                    need(c.len() == dim + 1, "center length must equal dim + 1");
                    need(SpacePoint::sphere(c.clone()).is_ok(), "center must be a unit vector");
                }
            }
            Family::HyperbolicGaussian { dim, scale, center } => {
                need(*dim >= 1, "dim must be >= 1");
                need(scale.is_finite() && *scale > 0.0, "scale must be positive");
                if let Some(c) = center {
                    need(c.len() == dim + 1, "center length must equal dim + 1");
                    need(SpacePoint::hyperbolic(c.clone()).is_ok(), "center must lie on the hyperboloid");
                }
            }
            Family::GaussianMaps(p) => {
                need(p.dim >= 1, "dim must be >= 1");
                need(p.alpha.is_finite() && p.alpha > 0.0 && p.alpha <= 1.0, "alpha must lie in (0, 1]");
                need(p.beta.is_finite() && p.beta >= 1.0, "beta must be >= 1");
                need(p.mean_scale.is_finite() && p.mean_scale >= 0.0, "mean_scale must be >= 0");
                if let Some(m) = &p.anchor_mean {
                    need(m.len() == p.dim, "anchor_mean length must equal dim");
                }
                if let Some(c) = &p.anchor_cov {
                    need(c.len() == p.dim && c.iter().all(|r| r.len() == p.dim), "anchor_cov must be dim x dim");
                }
                if out.is_empty() && p.anchor_cov.is_some() {
                    let ok = anchor_gaussian(p).is_ok();
                    out.extend((!ok).then(|| "anchor_cov must be symmetric positive definite".to_string()));
                }
            }
            Family::QuantileGaussian { grid, mean_scale, min_std, max_std } => {
                need(*grid >= 1, "grid must be >= 1");
                need(mean_scale.is_finite() && *mean_scale >= 0.0, "mean_scale must be >= 0");
                need(min_std.is_finite() && *min_std > 0.0, "min_std must be positive");
                need(max_std.is_finite() && max_std >= min_std, "max_std must be >= min_std");
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(bad(v.join("; ")))
        }
    }

    /// The family's anchor, which is its population barycenter.
    pub fn anchor(&self) -> Result<SpacePoint> {
        self.validate()?;
        match self {
            Family::EuclideanGaussian { dim, center, .. } => {
                SpacePoint::euclidean(center.clone().unwrap_or_else(|| vec![0.0; *dim]))
            }
            Family::SphereCap { dim, center, .. } => Ok(SpacePoint::Sphere(center.clone().unwrap_or_else(|| north(*dim)))),
            Family::HyperbolicGaussian { dim, center, .. } => {
                Ok(SpacePoint::Hyperbolic(center.clone().unwrap_or_else(|| north_h(*dim))))
            }
            Family::GaussianMaps(p) => anchor_gaussian(p).map(SpacePoint::Gaussian),
            Family::QuantileGaussian { grid, min_std, max_std, .. } => {
                Ok(SpacePoint::Quantile(normal_quantiles(*grid, 0.0, 0.5 * (min_std + max_std))))
            }
        }
    }

    /// Deterministic single draw.
    pub fn sample(&self, seed: u64) -> Result<SpacePoint> {
        self.validate()?;
        Ok(self.draw(&mut rng::from_seed(seed)))
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<SpacePoint>> {
        self.validate()?;
        Ok((0..n).map(|_| self.draw(rng)).collect())
    }

    /// Draw one point; parameters must already be valid.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> SpacePoint {
        match self {
            Family::EuclideanGaussian { dim, scale, center } => SpacePoint::Euclidean(
                (0..*dim)
                    .map(|i| center.as_ref().map_or(0.0, |c| c[i]) + scale * normal(rng))
                    .collect(),
            ),
            Family::SphereCap { dim, radius, center } => {
                let theta = cap_angle(*dim, *radius, rng);
                let dir = unit_gaussian(*dim, rng);
                let mut at_pole: Vec<f64> = dir.iter().map(|x| x * theta.sin()).collect();
                at_pole.push(theta.cos());
                let p = match center {
                    Some(c) => reflect_pole_to(c, &at_pole),
                    None => at_pole,
                };
                SpacePoint::sphere_normalized(p).expect("nonzero")
            }
            Family::HyperbolicGaussian { dim, scale, center } => {
                let mut v = vec![0.0];
                v.extend((0..*dim).map(|_| scale * normal(rng)));
                let o = SpacePoint::Hyperbolic(north_h(*dim));
                let t = TangentVector::new(o.clone(), TangentRepr::Ambient(v));
                let at_origin = exp_map(&o, &t).expect("hyperbolic exp at origin");
                match center {
                    Some(c) => SpacePoint::Hyperbolic(boost(c, at_origin.coords().unwrap())),
                    None => at_origin,
                }
            }
            Family::GaussianMaps(p) => {
                let anchor = anchor_gaussian(p).expect("validated");
                let (map, shift) = random_map(p, rng);
                let mean = anchor.mean() + shift;
                let cov = linalg::symmetrize(&(&map * anchor.cov() * &map));
                SpacePoint::Gaussian(Gaussian::from_parts_unchecked(mean, cov))
            }
            Family::QuantileGaussian { grid, mean_scale, min_std, max_std } => {
                let mu = mean_scale * normal(rng);
                let s = if max_std > min_std { rng.random_range(*min_std..=*max_std) } else { *min_std };
                SpacePoint::Quantile(normal_quantiles(*grid, mu, s))
            }
        }
    }

    /// Support points that realise the smallest geodesic extendibility from
    /// the anchor (used to compute the uniform lower bound on the hugging
    /// function). Unbounded families return just the anchor.
    pub fn extremal_support(&self) -> Result<Vec<SpacePoint>> {
        let anchor = self.anchor()?;
        Ok(match self {
            Family::EuclideanGaussian { .. } | Family::HyperbolicGaussian { .. } => vec![anchor],
            Family::SphereCap { dim, radius, .. } => {
                let mut dir = vec![0.0; dim + 1];
                dir[0] = 1.0;
                let dir = project_tangent_sphere(anchor.coords().unwrap(), &dir);
                let v = TangentVector::new(anchor.clone(), TangentRepr::Ambient(dir.iter().map(|x| x * radius).collect()));
                vec![exp_map(&anchor, &v)?]
            }
            Family::GaussianMaps(p) => {
                let g = anchor.as_gaussian().unwrap().clone();
                [p.alpha, p.beta]
                    .into_iter()
                    .map(|e| {
                        let m = DMatrix::identity(p.dim, p.dim) * e;
                        SpacePoint::Gaussian(Gaussian::from_parts_unchecked(
                            g.mean().clone(),
                            linalg::symmetrize(&(&m * g.cov() * &m)),
                        ))
                    })
                    .collect()
            }
            Family::QuantileGaussian { grid, min_std, max_std, .. } => vec![
                SpacePoint::Quantile(normal_quantiles(*grid, 0.0, *min_std)),
                SpacePoint::Quantile(normal_quantiles(*grid, 0.0, *max_std)),
            ],
        })
    }

    /// Largest geodesic radius of the support around the anchor, if bounded.
    pub fn support_radius(&self) -> Option<f64> {
        match self {
            Family::SphereCap { radius, .. } => Some(*radius),
            _ => None,
        }
    }
}

fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

fn unit_gaussian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| normal(rng)).collect();
        let n = linalg::dot(&v, &v).sqrt();
        if n > 1e-12 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// Geodesic radius of a uniform point in a cap of `S^dim`: density `sin^{dim-1}`.
fn cap_angle<R: Rng + ?Sized>(dim: usize, radius: f64, rng: &mut R) -> f64 {
    match dim {
        1 => radius * rng.random::<f64>(),
        2 => {
            let c = 1.0 - rng.random::<f64>() * (1.0 - radius.cos());
            c.clamp(-1.0, 1.0).acos()
        }
        _ => {
            let env = radius.sin().powi(dim as i32 - 1);
            loop {
                let t = radius * rng.random::<f64>();
                if rng.random::<f64>() * env <= t.sin().powi(dim as i32 - 1) {
                    return t;
                }
            }
        }
    }
}

fn north(dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim + 1];
    v[dim] = 1.0;
    v
}

fn north_h(dim: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim + 1];
    v[0] = 1.0;
    v
}

/// Householder reflection taking the pole `e_dim` to `c`, applied to `x`.
fn reflect_pole_to(c: &[f64], x: &[f64]) -> Vec<f64> {
    let d = c.len() - 1;
    let mut u: Vec<f64> = c.iter().map(|v| -v).collect();
    u[d] += 1.0;
    let uu = linalg::dot(&u, &u);
    if uu < 1e-30 {
        return x.to_vec();
    }
    let k = 2.0 * linalg::dot(&u, x) / uu;
    x.iter().zip(&u).map(|(xi, ui)| xi - k * ui).collect()
}

fn project_tangent_sphere(p: &[f64], v: &[f64]) -> Vec<f64> {
    let mut w: Vec<f64> = v.to_vec();
    let c = linalg::dot(p, &w);
    w.iter_mut().zip(p).for_each(|(wi, pi)| *wi -= c * pi);
    if linalg::dot(&w, &w) < 1e-20 {
        // v was parallel to p; pick another axis
        w = vec![0.0; p.len()];
        w[1 % p.len()] = 1.0;
        let c = linalg::dot(p, &w);
        w.iter_mut().zip(p).for_each(|(wi, pi)| *wi -= c * pi);
    }
    let n = linalg::dot(&w, &w).sqrt();
    w.into_iter().map(|x| x / n).collect()
}

/// Lorentz boost taking the origin `(1, 0, ..)` to `c`, applied to `x`.
fn boost(c: &[f64], x: &[f64]) -> Vec<f64> {
    let c0 = c[0];
    let cs = &c[1..];
    let xs = &x[1..];
    let cx = linalg::dot(cs, xs);
    let mut out = Vec::with_capacity(c.len());
    out.push(c0 * x[0] + cx);
    for (ci, xi) in cs.iter().zip(xs) {
        out.push(ci * x[0] + xi + ci * cx / (1.0 + c0));
    }
    super::point::lift_hyperboloid(&out[1..])
}

fn anchor_gaussian(p: &GaussianMapsParams) -> Result<Gaussian> {
    let mean = DVector::from_vec(p.anchor_mean.clone().unwrap_or_else(|| vec![0.0; p.dim]));
    let cov = match &p.anchor_cov {
        Some(rows) => DMatrix::from_fn(p.dim, p.dim, |i, j| rows[i][j]),
        None => DMatrix::identity(p.dim, p.dim),
    };
    Gaussian::new(mean, cov)
}

/// Eigenvalue draw in `[alpha, beta]` with mean exactly one.
fn mean_one_eigenvalue<R: Rng + ?Sized>(alpha: f64, beta: f64, rng: &mut R) -> f64 {
    if beta <= alpha {
        return alpha;
    }
    let p_upper = (1.0 - alpha) / (beta - alpha);
    let u: f64 = rng.random();
    let v: f64 = rng.random();
    if u < p_upper {
        1.0 + v * (beta - 1.0)
    } else {
        alpha + v * (1.0 - alpha)
    }
}

fn haar_rotation<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| normal(rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Random symmetric map with eigenvalues in `[alpha, beta]` and a mean shift.
pub(crate) fn random_map<R: Rng + ?Sized>(p: &GaussianMapsParams, rng: &mut R) -> (DMatrix<f64>, DVector<f64>) {
    let rot = haar_rotation(p.dim, rng);
    let eig = DVector::from_fn(p.dim, |_, _| mean_one_eigenvalue(p.alpha, p.beta, rng));
    let map = linalg::symmetrize(&(&rot * DMatrix::from_diagonal(&eig) * rot.transpose()));
    let shift = DVector::from_fn(p.dim, |_, _| p.mean_scale * normal(rng));
    (map, shift)
}

/// Quantiles of `N(mu, s^2)` at levels `(i - 1/2)/m`.
pub fn normal_quantiles(m: usize, mu: f64, s: f64) -> Vec<f64> {
    let std = Normal::standard();
    let mut q: Vec<f64> = (0..m)
        .map(|i| mu + s * std.inverse_cdf((i as f64 + 0.5) / m as f64))
        .collect();
    for i in 1..q.len() {
        if q[i] < q[i - 1] {
            q[i] = q[i - 1];
        }
    }
    q
}
