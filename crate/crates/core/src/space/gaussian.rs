use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

/// A nondegenerate Gaussian measure `N(mean, cov)` on `R^D`.
#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: DVector<f64>,
    cov: DMatrix<f64>,
}

impl Gaussian {
    /// Validates shape, symmetry (to 1e-12) and positive definiteness.
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let d = mean.len();
        if d == 0 {
            return Err(Error::InvalidPoint("gaussian dimension must be >= 1".into()));
        }
        if cov.nrows() != d || cov.ncols() != d {
            return Err(Error::InvalidPoint(format!(
                "covariance is {}x{}, expected {d}x{d}",
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidPoint("non-finite gaussian parameter".into()));
        }
        let asym = (&cov - cov.transpose()).amax();
        if asym > 1e-12 * cov.amax().max(1.0) {
            return Err(Error::InvalidPoint(format!("covariance asymmetric by {asym:e}")));
        }
        let cov = linalg::symmetrize(&cov);
        let lo = linalg::min_eigenvalue(&cov);
        if !(lo > linalg::SPD_EIGEN_FLOOR) {
            return Err(Error::NotPositiveDefinite(lo));
        }
        Ok(Self { mean, cov })
    }

    /// Builds without re-validating; callers guarantee SPD.
    pub(crate) fn from_parts_unchecked(mean: DVector<f64>, cov: DMatrix<f64>) -> Self {
        Self { mean, cov: linalg::symmetrize(&cov) }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    /// Linear part `A` of the optimal map `z -> m' + A (z - m)` onto `other`.
    pub fn transport_map_to(&self, other: &Gaussian) -> Result<DMatrix<f64>> {
        linalg::transport_map(&self.cov, &other.cov)
    }

    /// Squared 2-Wasserstein distance by the trace formula
    /// `|m1 - m2|^2 + tr(S1 + S2 - 2 (S1^{1/2} S2 S1^{1/2})^{1/2})`.
    pub fn w2_squared_trace_formula(&self, other: &Gaussian) -> Result<f64> {
        let root = linalg::spd_sqrt(&self.cov)?;
        let mid = linalg::spd_sqrt(&linalg::symmetrize(&(&root * &other.cov * &root)))?;
        let dm = (&self.mean - &other.mean).norm_squared();
        Ok((dm + self.cov.trace() + other.cov.trace() - 2.0 * mid.trace()).max(0.0))
    }
}
