use nalgebra::{DMatrix, DVector};

use super::point::{hyperbolic_tangent_dot, minkowski_dot, SpacePoint};
use crate::error::{Error, Result};
use crate::linalg::{self, KahanSum, VecAccumulator};

/// Concrete coordinates of a tangent vector.
///
/// For the vector spaces the tangent cone is a linear space: ambient
/// coordinates, orthogonal to the base on the sphere and Minkowski-orthogonal
/// on the hyperboloid. At a Gaussian `N(m, S)` a tangent vector is the
/// displacement field `z -> shift + linear (z - m)` with `linear` symmetric,
/// measured in `L^2(N(m, S))`.
#[derive(Debug, Clone, PartialEq)]
pub enum TangentRepr {
    Ambient(Vec<f64>),
    Gaussian { shift: DVector<f64>, linear: DMatrix<f64> },
}

/// Element of the tangent cone at `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: SpacePoint,
    repr: TangentRepr,
}

impl TangentVector {
    pub(crate) fn new(base: SpacePoint, repr: TangentRepr) -> Self {
        Self { base, repr }
    }

    /// Builds a tangent vector after checking it fits the base point.
    pub fn from_repr(base: SpacePoint, repr: TangentRepr) -> Result<Self> {
        match (&base, &repr) {
            (SpacePoint::Gaussian(g), TangentRepr::Gaussian { shift, linear }) => {
                let d = g.dim();
                if shift.len() != d || linear.nrows() != d || linear.ncols() != d {
                    return Err(Error::OutOfDomain("tangent shape does not match base".into()));
                }
                if (linear - linear.transpose()).amax() > 1e-9 * linear.amax().max(1.0) {
                    return Err(Error::OutOfDomain("gaussian tangent map must be symmetric".into()));
                }
            }
            (SpacePoint::Gaussian(_), _) | (_, TangentRepr::Gaussian { .. }) => {
                return Err(Error::OutOfDomain("tangent representation does not match base".into()))
            }
            (p, TangentRepr::Ambient(v)) => {
                let c = p.coords().expect("vector space point");
                if v.len() != c.len() {
                    return Err(Error::OutOfDomain("tangent length does not match base".into()));
                }
                let scale = linalg::dot(v, v).sqrt().max(1.0) * c.iter().map(|x| x.abs()).fold(1.0, f64::max);
                let off = match p {
                    SpacePoint::Sphere(_) => linalg::dot(c, v),
                    SpacePoint::Hyperbolic(_) => minkowski_dot(c, v),
                    _ => 0.0,
                };
                if off.abs() > 1e-9 * scale {
                    return Err(Error::OutOfDomain(format!("vector not tangent at base (offset {off:e})")));
                }
            }
        }
        Ok(Self { base, repr })
    }

    /// The cone tip `o_p`.
    pub fn tip(base: &SpacePoint) -> Self {
        let repr = match base {
            SpacePoint::Gaussian(g) => TangentRepr::Gaussian {
                shift: DVector::zeros(g.dim()),
                linear: DMatrix::zeros(g.dim(), g.dim()),
            },
            p => TangentRepr::Ambient(vec![0.0; p.coords().unwrap().len()]),
        };
        Self { base: base.clone(), repr }
    }

    pub fn base(&self) -> &SpacePoint {
        &self.base
    }

    pub fn repr(&self) -> &TangentRepr {
        &self.repr
    }

    fn check_compatible(&self, other: &TangentVector) -> Result<()> {
        self.base.ensure_same_space(&other.base)
    }

    /// Cone inner product `<u, v>_p`. Both vectors must share the base point.
    pub fn inner(&self, other: &TangentVector) -> Result<f64> {
        self.check_compatible(other)?;
        Ok(match (&self.base, &self.repr, &other.repr) {
            (SpacePoint::Hyperbolic(p), TangentRepr::Ambient(a), TangentRepr::Ambient(b)) => hyperbolic_tangent_dot(p, a, b),
            (SpacePoint::Quantile(q), TangentRepr::Ambient(a), TangentRepr::Ambient(b)) => {
                linalg::dot(a, b) / q.len() as f64
            }
            (_, TangentRepr::Ambient(a), TangentRepr::Ambient(b)) => linalg::dot(a, b),
            (
                SpacePoint::Gaussian(g),
                TangentRepr::Gaussian { shift: a, linear: u },
                TangentRepr::Gaussian { shift: b, linear: v },
            ) => {
                let us = u * g.cov();
                let mut acc = KahanSum::new();
                acc.add(a.dot(b));
                for i in 0..us.nrows() {
                    for j in 0..us.ncols() {
                        acc.add(us[(i, j)] * v[(j, i)]);
                    }
                }
                acc.value()
            }
            _ => unreachable!("representation checked at construction"),
        })
    }

    /// `||u||_p`, the distance from the tip.
    pub fn magnitude(&self) -> f64 {
        self.inner(self).map(|s| s.max(0.0).sqrt()).unwrap_or(0.0)
    }

    pub fn is_tip(&self) -> bool {
        self.magnitude() == 0.0
    }

    /// Unit direction `u / ||u||_p`, or `None` at the tip.
    pub fn direction(&self) -> Option<TangentVector> {
        let m = self.magnitude();
        (m > 0.0).then(|| self.scaled(1.0 / m))
    }

    /// Cone scaling `lambda . u`; negative factors flip the direction, which is
    /// valid in every model space here because their tangent cones are linear.
    pub fn scaled(&self, c: f64) -> TangentVector {
        let repr = match &self.repr {
            TangentRepr::Ambient(v) => TangentRepr::Ambient(v.iter().map(|x| c * x).collect()),
            TangentRepr::Gaussian { shift, linear } => {
                TangentRepr::Gaussian { shift: shift * c, linear: linear * c }
            }
        };
        Self { base: self.base.clone(), repr }
    }

    /// `u - v` in the (linear) tangent space.
    pub fn sub(&self, other: &TangentVector) -> Result<TangentVector> {
        Self::weighted_sum(&self.base, [(1.0, self), (-1.0, other)])
    }

    /// `sum_i w_i u_i` with compensated, index-ordered accumulation.
    pub fn weighted_sum<'a>(
        base: &SpacePoint,
        terms: impl IntoIterator<Item = (f64, &'a TangentVector)>,
    ) -> Result<TangentVector> {
        match base {
            SpacePoint::Gaussian(g) => {
                let d = g.dim();
                let mut shift = VecAccumulator::new(d);
                let mut lin = VecAccumulator::new(d * d);
                for (w, t) in terms {
                    base.ensure_same_space(&t.base)?;
                    if let TangentRepr::Gaussian { shift: s, linear: l } = &t.repr {
                        shift.add_scaled(w, s.as_slice());
                        lin.add_scaled(w, l.as_slice());
                    }
                }
                let linear = DMatrix::from_vec(d, d, lin.finish());
                Ok(Self {
                    base: base.clone(),
                    repr: TangentRepr::Gaussian {
                        shift: DVector::from_vec(shift.finish()),
                        linear: linalg::symmetrize(&linear),
                    },
                })
            }
            p => {
                let len = p.coords().unwrap().len();
                let mut acc = VecAccumulator::new(len);
                for (w, t) in terms {
                    base.ensure_same_space(&t.base)?;
                    if let TangentRepr::Ambient(v) = &t.repr {
                        acc.add_scaled(w, v);
                    }
                }
                Ok(Self { base: base.clone(), repr: TangentRepr::Ambient(acc.finish()) })
            }
        }
    }
}
