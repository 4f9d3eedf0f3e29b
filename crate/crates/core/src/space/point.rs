use std::fmt;

use nalgebra::{DMatrix, DVector};

use super::gaussian::Gaussian;
use crate::error::{Error, Result};
use crate::linalg;

/// Which model space a point lives in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpaceKind {
    Euclidean,
    Sphere,
    Hyperbolic,
    Quantile,
    Gaussian,
}

impl SpaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SpaceKind::Euclidean => "euclidean",
            SpaceKind::Sphere => "sphere",
            SpaceKind::Hyperbolic => "hyperbolic",
            SpaceKind::Quantile => "quantile",
            SpaceKind::Gaussian => "gaussian",
        }
    }

    /// Sharp lower curvature bound of the space.
    pub fn curvature_lower_bound(self) -> f64 {
        match self {
            SpaceKind::Sphere => 1.0,
            SpaceKind::Hyperbolic => -1.0,
            _ => 0.0,
        }
    }

    /// Upper curvature bound, `None` for the Gaussian family (unbounded above).
    pub fn curvature_upper_bound(self) -> Option<f64> {
        match self {
            SpaceKind::Sphere => Some(1.0),
            SpaceKind::Hyperbolic => Some(-1.0),
            SpaceKind::Gaussian => None,
            _ => Some(0.0),
        }
    }

    pub fn is_nonnegatively_curved(self) -> bool {
        self.curvature_lower_bound() >= 0.0
    }

    pub fn is_nonpositively_curved(self) -> bool {
        matches!(self.curvature_upper_bound(), Some(k) if k <= 0.0)
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A point in one of the model spaces.
#[derive(Debug, Clone, PartialEq)]
pub enum SpacePoint {
    Euclidean(Vec<f64>),
    /// Unit vector in `R^{d+1}`.
    Sphere(Vec<f64>),
    /// `(x0, x1, ..., xd)` with `-x0^2 + sum xi^2 = -1`, `x0 >= 1`.
    Hyperbolic(Vec<f64>),
    /// Nondecreasing quantile values.
    Quantile(Vec<f64>),
    Gaussian(Gaussian),
}

impl SpacePoint {
    pub fn euclidean(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords)?;
        if coords.is_empty() {
            return Err(Error::InvalidPoint("euclidean point needs at least one coordinate".into()));
        }
        Ok(SpacePoint::Euclidean(coords))
    }

    /// Validated unit vector (norm within 1e-12 of one).
    pub fn sphere(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords)?;
        if coords.len() < 2 {
            return Err(Error::InvalidPoint("sphere points live in R^{d+1}, d >= 1".into()));
        }
        let n = norm(&coords);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPoint(format!("sphere point has norm {n}")));
        }
        Ok(SpacePoint::Sphere(coords))
    }

    /// Projects a nonzero vector onto the unit sphere.
    pub fn sphere_normalized(mut coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords)?;
        let n = norm(&coords);
        if coords.len() < 2 || n == 0.0 {
            return Err(Error::InvalidPoint("cannot normalize a zero vector".into()));
        }
        coords.iter_mut().for_each(|c| *c /= n);
        Ok(SpacePoint::Sphere(coords))
    }

    pub fn hyperbolic(coords: Vec<f64>) -> Result<Self> {
        check_finite(&coords)?;
        if coords.len() < 2 {
            return Err(Error::InvalidPoint("hyperboloid points live in R^{1,d}, d >= 1".into()));
        }
        let q = minkowski_dot(&coords, &coords);
        let scale = coords[0] * coords[0];
        if coords[0] < 1.0 - 1e-12 || (q + 1.0).abs() > 1e-12 * scale.max(1.0) {
            return Err(Error::InvalidPoint(format!(
                "not on the upper hyperboloid sheet (<x,x> = {q}, x0 = {})",
                coords[0]
            )));
        }
        Ok(SpacePoint::Hyperbolic(coords))
    }

    /// Lifts spatial coordinates `(x1..xd)` onto the hyperboloid.
    pub fn hyperbolic_from_spatial(spatial: &[f64]) -> Result<Self> {
        check_finite(spatial)?;
        if spatial.is_empty() {
            return Err(Error::InvalidPoint("hyperbolic dimension must be >= 1".into()));
        }
        Ok(SpacePoint::Hyperbolic(lift_hyperboloid(spatial)))
    }

    pub fn quantile(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        if values.is_empty() {
            return Err(Error::InvalidPoint("quantile grid must be nonempty".into()));
        }
        if let Some(i) = values.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InvalidPoint(format!("quantile grid decreases at index {}", i + 1)));
        }
        Ok(SpacePoint::Quantile(values))
    }

    pub fn gaussian(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        Gaussian::new(mean, cov).map(SpacePoint::Gaussian)
    }

    pub fn kind(&self) -> SpaceKind {
        match self {
            SpacePoint::Euclidean(_) => SpaceKind::Euclidean,
            SpacePoint::Sphere(_) => SpaceKind::Sphere,
            SpacePoint::Hyperbolic(_) => SpaceKind::Hyperbolic,
            SpacePoint::Quantile(_) => SpaceKind::Quantile,
            SpacePoint::Gaussian(_) => SpaceKind::Gaussian,
        }
    }

    /// Intrinsic dimension (grid size for quantile points).
    pub fn dim(&self) -> usize {
        match self {
            SpacePoint::Euclidean(v) | SpacePoint::Quantile(v) => v.len(),
            SpacePoint::Sphere(v) | SpacePoint::Hyperbolic(v) => v.len() - 1,
            SpacePoint::Gaussian(g) => g.dim(),
        }
    }

    /// Short description such as `sphere(2)`.
    pub fn signature(&self) -> String {
        format!("{}({})", self.kind(), self.dim())
    }

    pub fn same_space(&self, other: &SpacePoint) -> bool {
        self.kind() == other.kind() && self.dim() == other.dim()
    }

    pub fn ensure_same_space(&self, other: &SpacePoint) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::SpaceMismatch(self.signature(), other.signature()))
        }
    }

    /// Ambient coordinates for the vector-valued spaces.
    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            SpacePoint::Euclidean(v)
            | SpacePoint::Sphere(v)
            | SpacePoint::Hyperbolic(v)
            | SpacePoint::Quantile(v) => Some(v),
            SpacePoint::Gaussian(_) => None,
        }
    }

    pub fn as_gaussian(&self) -> Option<&Gaussian> {
        match self {
            SpacePoint::Gaussian(g) => Some(g),
            _ => None,
        }
    }
}

pub(crate) fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidPoint("non-finite coordinate".into()))
    }
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    linalg::dot(v, v).sqrt()
}

pub(crate) fn minkowski_dot(a: &[f64], b: &[f64]) -> f64 {
    linalg::compensated_sum(
        std::iter::once(-a[0] * b[0]).chain(a[1..].iter().zip(&b[1..]).map(|(x, y)| x * y)),
    )
}

/// Minkowski product of two vectors tangent at `p`, from their spatial parts:
/// `u_perp . v_perp + (n . u)(n . v) / p0^2` with `n = p_s / |p_s|`. Avoids the
/// cancellation of `|u_s|^2 - u0^2` far from the origin.
pub(crate) fn hyperbolic_tangent_dot(p: &[f64], u: &[f64], v: &[f64]) -> f64 {
    let (ps, us, vs) = (&p[1..], &u[1..], &v[1..]);
    let r = norm(ps);
    if r == 0.0 {
        return linalg::dot(us, vs);
    }
    let n: Vec<f64> = ps.iter().map(|x| x / r).collect();
    let (a, b) = (linalg::dot(&n, us), linalg::dot(&n, vs));
    let up: Vec<f64> = us.iter().zip(&n).map(|(x, m)| x - a * m).collect();
    let vp: Vec<f64> = vs.iter().zip(&n).map(|(x, m)| x - b * m).collect();
    linalg::dot(&up, &vp) + a * b / (p[0] * p[0])
}

pub(crate) fn lift_hyperboloid(spatial: &[f64]) -> Vec<f64> {
    let r2 = linalg::dot(spatial, spatial);
    let mut out = Vec::with_capacity(spatial.len() + 1);
    out.push((1.0 + r2).sqrt());
    out.extend_from_slice(spatial);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_enforce_invariants() {
        assert!(SpacePoint::sphere(vec![1.0, 0.0, 0.0]).is_ok());
        assert!(SpacePoint::sphere(vec![1.0, 0.1, 0.0]).is_err());
        assert!(SpacePoint::hyperbolic(vec![1.0, 0.0]).is_ok());
        assert!(SpacePoint::hyperbolic(vec![-1.0, 0.0]).is_err());
        assert!(SpacePoint::quantile(vec![0.0, 1.0, 1.0, 2.0]).is_ok());
        assert!(SpacePoint::quantile(vec![0.0, 2.0, 1.0]).is_err());
        assert!(SpacePoint::euclidean(vec![f64::NAN]).is_err());
    }

    #[test]
    fn lift_lands_on_sheet() {
        let p = SpacePoint::hyperbolic_from_spatial(&[3.0, -4.0]).unwrap();
        let c = p.coords().unwrap();
        assert!((minkowski_dot(c, c) + 1.0).abs() < 1e-12);
        assert_eq!(p.dim(), 2);
    }

    #[test]
    fn mismatch_is_reported() {
        let a = SpacePoint::euclidean(vec![0.0, 0.0]).unwrap();
        let b = SpacePoint::euclidean(vec![0.0, 0.0, 0.0]).unwrap();
        assert_eq!(
            a.ensure_same_space(&b),
            Err(Error::SpaceMismatch("euclidean(2)".into(), "euclidean(3)".into()))
        );
    }
}
