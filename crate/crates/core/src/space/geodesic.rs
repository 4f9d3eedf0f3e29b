use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::gaussian::Gaussian;
use super::point::{hyperbolic_tangent_dot, lift_hyperboloid, minkowski_dot, norm, SpacePoint};
use super::tangent::{TangentRepr, TangentVector};
use super::ANTIPODAL_TOL;
use crate::error::{Error, Result};
use crate::linalg;

/// Geodesic distance between two points of the same space.
pub fn distance(x: &SpacePoint, y: &SpacePoint) -> Result<f64> {
    x.ensure_same_space(y)?;
    Ok(match (x, y) {
        (SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => diff_norm(a, b),
        (SpacePoint::Quantile(a), SpacePoint::Quantile(b)) => diff_norm(a, b) / (a.len() as f64).sqrt(),
        (SpacePoint::Sphere(a), SpacePoint::Sphere(b)) => {
            let minus = diff_norm(a, b);
            let plus = norm(&a.iter().zip(b).map(|(p, q)| p + q).collect::<Vec<_>>());
            2.0 * minus.atan2(plus)
        }
        (SpacePoint::Hyperbolic(a), SpacePoint::Hyperbolic(b)) => {
            // 2 sinh(d/2) is the Minkowski length of the chord; avoids arccosh near 1.
            let diff: Vec<f64> = a.iter().zip(b).map(|(p, q)| p - q).collect();
            let chord = minkowski_dot(&diff, &diff).max(0.0).sqrt();
            2.0 * (chord / 2.0).asinh()
        }
        (SpacePoint::Gaussian(a), SpacePoint::Gaussian(b)) => gaussian_log(a, b)?.1,
        _ => unreachable!("same_space checked"),
    })
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    linalg::compensated_sum(a.iter().zip(b).map(|(p, q)| (p - q) * (p - q))).sqrt()
}

/// Returns the tangent representation of `log_a(b)` and its magnitude.
fn gaussian_log(a: &Gaussian, b: &Gaussian) -> Result<(TangentRepr, f64)> {
    let map = a.transport_map_to(b)?;
    let linear = map - DMatrix::identity(a.dim(), a.dim());
    let shift = b.mean() - a.mean();
    let repr = TangentRepr::Gaussian { shift, linear };
    let t = TangentVector::new(SpacePoint::Gaussian(a.clone()), repr);
    let m = t.magnitude();
    Ok((t.repr().clone(), m))
}

/// `log_p(x)`: direction of the unique geodesic from `p` to `x`, scaled by `d(p, x)`.
///
/// Points on or near the sphere's cut locus (`d >= pi - 1e-9`) are refused.
pub fn log_map(p: &SpacePoint, x: &SpacePoint) -> Result<TangentVector> {
    p.ensure_same_space(x)?;
    let repr = match (p, x) {
        (SpacePoint::Euclidean(a), SpacePoint::Euclidean(b))
        | (SpacePoint::Quantile(a), SpacePoint::Quantile(b)) => {
            TangentRepr::Ambient(b.iter().zip(a).map(|(q, r)| q - r).collect())
        }
        (SpacePoint::Sphere(a), SpacePoint::Sphere(b)) => {
            let c = linalg::dot(a, b).clamp(-1.0, 1.0);
            let u: Vec<f64> = b.iter().zip(a).map(|(q, r)| q - c * r).collect();
            let s = norm(&u);
            let theta = distance(p, x)?;
            if theta > PI - ANTIPODAL_TOL {
                return Err(Error::CutLocus);
            }
            if s == 0.0 {
                TangentRepr::Ambient(vec![0.0; a.len()])
            } else {
                TangentRepr::Ambient(u.iter().map(|v| v * theta / s).collect())
            }
        }
        (SpacePoint::Hyperbolic(a), SpacePoint::Hyperbolic(b)) => {
            // u = x + <p, x> p, with <p, x> + 1 = -chord^2 / 2 kept exact for nearby points.
            let diff: Vec<f64> = b.iter().zip(a).map(|(q, r)| q - r).collect();
            let half_chord2 = 0.5 * minkowski_dot(&diff, &diff).max(0.0);
            let u: Vec<f64> = diff.iter().zip(a).map(|(q, r)| q - half_chord2 * r).collect();
            let s = hyperbolic_tangent_dot(a, &u, &u).max(0.0).sqrt();
            let dist = distance(p, x)?;
            if s == 0.0 || dist == 0.0 {
                TangentRepr::Ambient(vec![0.0; a.len()])
            } else {
                TangentRepr::Ambient(u.iter().map(|v| v * dist / s).collect())
            }
        }
        (SpacePoint::Gaussian(a), SpacePoint::Gaussian(b)) => gaussian_log(a, b)?.0,
        _ => unreachable!("same_space checked"),
    };
    Ok(TangentVector::new(p.clone(), repr))
}

/// `exp_p(v)`, the endpoint of the geodesic leaving `p` with initial velocity `v`.
pub fn exp_map(p: &SpacePoint, v: &TangentVector) -> Result<SpacePoint> {
    p.ensure_same_space(v.base())?;
    match (p, v.repr()) {
        (SpacePoint::Euclidean(a), TangentRepr::Ambient(t)) => {
            Ok(SpacePoint::Euclidean(a.iter().zip(t).map(|(x, y)| x + y).collect()))
        }
        (SpacePoint::Quantile(a), TangentRepr::Ambient(t)) => {
            let mut out: Vec<f64> = a.iter().zip(t).map(|(x, y)| x + y).collect();
            let scale = out.iter().map(|x| x.abs()).fold(1.0, f64::max);
            for i in 1..out.len() {
                if out[i] < out[i - 1] {
                    if out[i - 1] - out[i] > 1e-12 * scale {
                        return Err(Error::OutOfDomain(format!("quantile grid would decrease at index {i}")));
                    }
                    out[i] = out[i - 1];
                }
            }
            Ok(SpacePoint::Quantile(out))
        }
        (SpacePoint::Sphere(a), TangentRepr::Ambient(t)) => {
            let theta = v.magnitude();
            if theta == 0.0 {
                return Ok(p.clone());
            }
            if theta >= PI {
                return Err(Error::OutOfDomain(format!("sphere tangent magnitude {theta} >= pi")));
            }
            let (c, s) = (theta.cos(), theta.sin() / theta);
            SpacePoint::sphere_normalized(a.iter().zip(t).map(|(x, y)| c * x + s * y).collect())
        }
        (SpacePoint::Hyperbolic(a), TangentRepr::Ambient(t)) => {
            let r = v.magnitude();
            if r == 0.0 {
                return Ok(p.clone());
            }
            let (c, s) = (r.cosh(), r.sinh() / r);
            let raw: Vec<f64> = a.iter().zip(t).map(|(x, y)| c * x + s * y).collect();
            if !raw.iter().all(|x| x.is_finite()) {
                return Err(Error::OutOfDomain("hyperbolic exp overflowed".into()));
            }
            Ok(SpacePoint::Hyperbolic(lift_hyperboloid(&raw[1..])))
        }
        (SpacePoint::Gaussian(g), TangentRepr::Gaussian { shift, linear }) => {
            let d = g.dim();
            let m = DMatrix::identity(d, d) + linear;
            let lo = linalg::min_eigenvalue(&m);
            if !(lo > 0.0) {
                return Err(Error::OutOfDomain(format!("I + linear part not positive definite (min eig {lo:e})")));
            }
            let cov = linalg::symmetrize(&(&m * g.cov() * &m));
            Gaussian::new(g.mean() + shift, cov).map(SpacePoint::Gaussian)
        }
        _ => Err(Error::OutOfDomain("tangent representation does not match base".into())),
    }
}

/// Constant-speed geodesic `[0, 1] -> S` between two points.
#[derive(Debug, Clone)]
pub struct GeodesicSegment {
    start: SpacePoint,
    end: SpacePoint,
    kind: SegmentKind,
}

#[derive(Debug, Clone)]
enum SegmentKind {
    /// Affine interpolation (Euclidean and quantile spaces).
    Linear,
    /// `t -> exp_x(t log_x(y))` (sphere and hyperboloid).
    Exponential(TangentVector),
    /// Displacement interpolation with transport map `A` from start to end.
    Bures(DMatrix<f64>),
}

impl GeodesicSegment {
    pub fn start(&self) -> &SpacePoint {
        &self.start
    }

    pub fn end(&self) -> &SpacePoint {
        &self.end
    }

    pub fn length(&self) -> f64 {
        distance(&self.start, &self.end).unwrap_or(f64::NAN)
    }

    /// Point at parameter `t in [0, 1]` (clamped).
    pub fn at(&self, t: f64) -> SpacePoint {
        let t = t.clamp(0.0, 1.0);
        if t == 0.0 {
            return self.start.clone();
        }
        if t == 1.0 {
            return self.end.clone();
        }
        self.extended(t).expect("interior points of a geodesic are always defined")
    }

    /// Point at any real parameter on the natural extension of the segment;
    /// fails once the extension leaves the space (non-monotone quantiles,
    /// degenerate covariance, hyperbolic overflow).
    pub fn extended(&self, t: f64) -> Result<SpacePoint> {
        match (&self.kind, &self.start, &self.end) {
            (SegmentKind::Linear, SpacePoint::Euclidean(a), SpacePoint::Euclidean(b)) => {
                Ok(SpacePoint::Euclidean(affine(a, b, t)))
            }
            (SegmentKind::Linear, SpacePoint::Quantile(a), SpacePoint::Quantile(b)) => {
                let v = affine(a, b, t);
                if v.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::OutOfDomain(format!("extended quantile curve not monotone at t = {t}")));
                }
                Ok(SpacePoint::Quantile(v))
            }
            (SegmentKind::Exponential(v), p, _) => {
                let dir = v.scaled(t);
                if let SpacePoint::Sphere(_) = p {
                    // Past +-pi the path wraps around; evaluate the great circle directly.
                    return sphere_great_circle(p, v, t);
                }
                exp_map(p, &dir)
            }
            (SegmentKind::Bures(map), SpacePoint::Gaussian(a), SpacePoint::Gaussian(b)) => {
                let d = a.dim();
                let m = DMatrix::identity(d, d) * (1.0 - t) + map * t;
                let lo = linalg::min_eigenvalue(&m);
                if !(lo > 0.0) {
                    return Err(Error::OutOfDomain(format!("interpolated map not positive definite at t = {t}")));
                }
                let mean: DVector<f64> = a.mean() * (1.0 - t) + b.mean() * t;
                let cov = linalg::symmetrize(&(&m * a.cov() * &m));
                Gaussian::new(mean, cov).map(SpacePoint::Gaussian)
            }
            _ => unreachable!("segment kind matches endpoints"),
        }
    }
}

fn affine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // (1-t) a + t b keeps sorted inputs sorted under rounding for t in [0, 1].
    a.iter().zip(b).map(|(x, y)| (1.0 - t) * x + t * y).collect()
}

fn sphere_great_circle(p: &SpacePoint, v: &TangentVector, t: f64) -> Result<SpacePoint> {
    let (a, dir) = match (p, v.repr()) {
        (SpacePoint::Sphere(a), TangentRepr::Ambient(d)) => (a, d),
        _ => unreachable!(),
    };
    let theta = v.magnitude();
    if theta == 0.0 {
        return Ok(p.clone());
    }
    let angle = t * theta;
    let (c, s) = (angle.cos(), angle.sin() / theta);
    SpacePoint::sphere_normalized(a.iter().zip(dir).map(|(x, y)| c * x + s * y).collect())
}

/// The unique constant-speed geodesic from `x` to `y`.
pub fn geodesic(x: &SpacePoint, y: &SpacePoint) -> Result<GeodesicSegment> {
    x.ensure_same_space(y)?;
    let kind = match x {
        SpacePoint::Euclidean(_) | SpacePoint::Quantile(_) => SegmentKind::Linear,
        SpacePoint::Sphere(_) => {
            let v = log_map(x, y).map_err(|e| match e {
                Error::CutLocus => Error::AntipodalPoints,
                other => other,
            })?;
            SegmentKind::Exponential(v)
        }
        SpacePoint::Hyperbolic(_) => SegmentKind::Exponential(log_map(x, y)?),
        SpacePoint::Gaussian(a) => SegmentKind::Bures(a.transport_map_to(y.as_gaussian().unwrap())?),
    };
    Ok(GeodesicSegment { start: x.clone(), end: y.clone(), kind })
}

/// Largest extension factors of a geodesic, as suprema.
///
/// `in_open`/`out_open` mark suprema that are not attained (Gaussian maps
/// that become singular exactly at the supremum).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Extendibility {
    pub lambda_in: f64,
    pub lambda_out: f64,
    pub in_open: bool,
    pub out_open: bool,
}

impl Extendibility {
    pub const UNBOUNDED: Extendibility =
        Extendibility { lambda_in: f64::INFINITY, lambda_out: f64::INFINITY, in_open: false, out_open: false };

    pub fn new(lambda_in: f64, lambda_out: f64) -> Self {
        Self { lambda_in, lambda_out, in_open: false, out_open: false }
    }

    /// Componentwise minimum, keeping the open flag of the smaller side.
    pub fn meet(self, other: Extendibility) -> Extendibility {
        let (lambda_in, in_open) = pick_min(self.lambda_in, self.in_open, other.lambda_in, other.in_open);
        let (lambda_out, out_open) = pick_min(self.lambda_out, self.out_open, other.lambda_out, other.out_open);
        Extendibility { lambda_in, lambda_out, in_open, out_open }
    }
}

fn pick_min(a: f64, a_open: bool, b: f64, b_open: bool) -> (f64, bool) {
    if a < b {
        (a, a_open)
    } else if b < a {
        (b, b_open)
    } else {
        (a, a_open || b_open)
    }
}

/// Maximal `(lambda_in, lambda_out)` such that the geodesic from `x` to `y`
/// extended to `[-lambda_in, 1 + lambda_out]` is still a minimizing geodesic.
///
/// On the sphere the constraint is one-dimensional (total arc at most `pi`),
/// and the symmetric split `lambda_in = lambda_out = (pi / d - 1) / 2` is
/// returned.
pub fn max_extendibility(x: &SpacePoint, y: &SpacePoint) -> Result<Extendibility> {
    x.ensure_same_space(y)?;
    match (x, y) {
        (SpacePoint::Euclidean(_), _) | (SpacePoint::Hyperbolic(_), _) => Ok(Extendibility::UNBOUNDED),
        (SpacePoint::Sphere(_), _) => {
            geodesic(x, y)?;
            let d = distance(x, y)?;
            if d == 0.0 {
                return Ok(Extendibility::UNBOUNDED);
            }
            let half = 0.5 * (PI / d - 1.0).max(0.0);
            Ok(Extendibility::new(half, half))
        }
        (SpacePoint::Quantile(a), SpacePoint::Quantile(b)) => {
            let (mut lin, mut lout) = (f64::INFINITY, f64::INFINITY);
            for i in 1..a.len() {
                let ga = a[i] - a[i - 1];
                let gb = b[i] - b[i - 1];
                // gap(t) = ga + t (gb - ga) must stay >= 0.
                if gb < ga {
                    lout = lout.min(gb / (ga - gb));
                } else if gb > ga {
                    lin = lin.min(ga / (gb - ga));
                }
            }
            Ok(Extendibility::new(lin, lout))
        }
        (SpacePoint::Gaussian(a), SpacePoint::Gaussian(b)) => {
            let map = a.transport_map_to(b)?;
            Ok(gaussian_extendibility(&linalg::sym_eigen(&map).0))
        }
        _ => unreachable!("same_space checked"),
    }
}

/// Extension factors allowed by transport-map eigenvalues: `(1 - t) + t a > 0`
/// for every eigenvalue `a` and every `t in [-lambda_in, 1 + lambda_out]`.
pub(crate) fn gaussian_extendibility(eigs: &DVector<f64>) -> Extendibility {
    let mut ext = Extendibility::UNBOUNDED;
    for &a in eigs.iter() {
        if a < 1.0 {
            let lo = a / (1.0 - a);
            if lo < ext.lambda_out {
                ext.lambda_out = lo;
                ext.out_open = true;
            }
        } else if a > 1.0 {
            let li = 1.0 / (a - 1.0);
            if li < ext.lambda_in {
                ext.lambda_in = li;
                ext.in_open = true;
            }
        }
    }
    ext
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g1(var: f64) -> SpacePoint {
        SpacePoint::gaussian(DVector::from_element(1, 0.0), DMatrix::from_element(1, 1, var)).unwrap()
    }

    #[test]
    fn distance_examples() {
        let e = |v: &[f64]| SpacePoint::euclidean(v.to_vec()).unwrap();
        assert_eq!(distance(&e(&[0.0, 0.0]), &e(&[3.0, 4.0])).unwrap(), 5.0);
        assert!((distance(&g1(1.0), &g1(4.0)).unwrap() - 1.0).abs() < 1e-14);
        let q = |v: Vec<f64>| SpacePoint::quantile(v).unwrap();
        assert!((distance(&q(vec![0.0, 0.0]), &q(vec![2.0, 2.0])).unwrap() - 2.0).abs() < 1e-15);
        assert!(matches!(distance(&e(&[0.0]), &q(vec![0.0])), Err(Error::SpaceMismatch(_, _))));
    }

    #[test]
    fn geodesic_examples() {
        let e = |v: &[f64]| SpacePoint::euclidean(v.to_vec()).unwrap();
        let seg = geodesic(&e(&[0.0, 0.0]), &e(&[2.0, 0.0])).unwrap();
        assert_eq!(seg.at(0.25), e(&[0.5, 0.0]));
        assert_eq!(seg.at(0.0), e(&[0.0, 0.0]));
        assert_eq!(seg.at(1.0), e(&[2.0, 0.0]));
        let mid = geodesic(&g1(1.0), &g1(9.0)).unwrap().at(0.5);
        assert!((mid.as_gaussian().unwrap().cov()[(0, 0)] - 4.0).abs() < 1e-13);
        let n = SpacePoint::sphere(vec![0.0, 0.0, 1.0]).unwrap();
        let s = SpacePoint::sphere(vec![0.0, 0.0, -1.0]).unwrap();
        assert!(matches!(geodesic(&n, &s), Err(Error::AntipodalPoints)));
    }

    #[test]
    fn log_and_exp_examples() {
        let p = SpacePoint::sphere(vec![0.0, 0.0, 1.0]).unwrap();
        let x = SpacePoint::sphere(vec![1.0, 0.0, 0.0]).unwrap();
        let v = log_map(&p, &x).unwrap();
        assert!((v.magnitude() - PI / 2.0).abs() < 1e-15);
        match v.repr() {
            TangentRepr::Ambient(c) => assert!((c[0] - PI / 2.0).abs() < 1e-15 && c[1].abs() < 1e-15 && c[2].abs() < 1e-15),
            _ => unreachable!(),
        }
        let back = exp_map(&p, &v).unwrap();
        assert!(distance(&back, &x).unwrap() < 1e-12);
        assert!(log_map(&p, &p).unwrap().is_tip());

        let e = SpacePoint::euclidean(vec![1.0, 1.0]).unwrap();
        let v = TangentVector::from_repr(e.clone(), TangentRepr::Ambient(vec![2.0, 0.0])).unwrap();
        assert_eq!(exp_map(&e, &v).unwrap(), SpacePoint::euclidean(vec![3.0, 1.0]).unwrap());
        assert_eq!(exp_map(&e, &TangentVector::tip(&e)).unwrap(), e);

        let big = TangentVector::from_repr(p.clone(), TangentRepr::Ambient(vec![4.0, 0.0, 0.0])).unwrap();
        assert!(matches!(exp_map(&p, &big), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn extendibility_examples() {
        let e = |v: f64| SpacePoint::euclidean(vec![v]).unwrap();
        assert_eq!(max_extendibility(&e(0.0), &e(1.0)).unwrap(), Extendibility::UNBOUNDED);
        let p = SpacePoint::sphere(vec![0.0, 0.0, 1.0]).unwrap();
        let a = PI / 8.0;
        let x = SpacePoint::sphere(vec![a.sin(), 0.0, a.cos()]).unwrap();
        let ext = max_extendibility(&p, &x).unwrap();
        assert!((ext.lambda_in - 3.5).abs() < 1e-12 && (ext.lambda_out - 3.5).abs() < 1e-12);
        let ext = max_extendibility(&g1(1.0), &g1(4.0)).unwrap();
        assert!((ext.lambda_in - 1.0).abs() < 1e-12 && ext.in_open);
        assert!(ext.lambda_out.is_infinite());
    }
}
