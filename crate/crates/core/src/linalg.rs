//! Small dense helpers: symmetric eigendecompositions, SPD square roots and
//! compensated sums.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Eigenvalues below this are rejected rather than floored.
pub const SPD_EIGEN_FLOOR: f64 = 1e-12;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigen-decomposition of the symmetric part of `m`.
pub fn sym_eigen(m: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let eig = symmetrize(m).symmetric_eigen();
    (eig.eigenvalues, eig.eigenvectors)
}

fn spectral_apply(vals: &DVector<f64>, vecs: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let scaled = DMatrix::from_fn(vecs.nrows(), vecs.ncols(), |i, j| vecs[(i, j)] * f(vals[j]));
    symmetrize(&(scaled * vecs.transpose()))
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    sym_eigen(m).0.min()
}

/// Returns `(sqrt(m), inverse sqrt(m))`, failing when `m` is not SPD.
pub fn spd_sqrt_pair(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (vals, vecs) = sym_eigen(m);
    let lo = vals.min();
    if !(lo > SPD_EIGEN_FLOOR) {
        return Err(Error::NotPositiveDefinite(lo));
    }
    Ok((
        spectral_apply(&vals, &vecs, f64::sqrt),
        spectral_apply(&vals, &vecs, |v| 1.0 / v.sqrt()),
    ))
}

pub fn spd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (vals, vecs) = sym_eigen(m);
    let lo = vals.min();
    if !(lo > SPD_EIGEN_FLOOR) {
        return Err(Error::NotPositiveDefinite(lo));
    }
    Ok(spectral_apply(&vals, &vecs, f64::sqrt))
}

/// Symmetric positive-definite map `A` with `A s1 A = s2`, the linear part of
/// the optimal transport map between centred Gaussians with these covariances.
pub fn transport_map(s1: &DMatrix<f64>, s2: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (r, r_inv) = spd_sqrt_pair(s1)?;
    let mid = spd_sqrt(&symmetrize(&(&r * s2 * &r)))?;
    Ok(symmetrize(&(&r_inv * mid * &r_inv)))
}

pub fn transport_map_with_roots(
    root: &DMatrix<f64>,
    root_inv: &DMatrix<f64>,
    target: &DMatrix<f64>,
) -> Result<DMatrix<f64>> {
    let mid = spd_sqrt(&symmetrize(&(root * target * root)))?;
    Ok(symmetrize(&(root_inv * mid * root_inv)))
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = KahanSum::new();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

/// Componentwise compensated accumulation of equally sized vectors.
#[derive(Debug, Clone)]
pub struct VecAccumulator {
    parts: Vec<KahanSum>,
}

impl VecAccumulator {
    pub fn new(len: usize) -> Self {
        Self { parts: vec![KahanSum::new(); len] }
    }

    pub fn add_scaled(&mut self, w: f64, xs: &[f64]) {
        debug_assert_eq!(xs.len(), self.parts.len());
        for (acc, x) in self.parts.iter_mut().zip(xs) {
            acc.add(w * x);
        }
    }

    pub fn finish(&self) -> Vec<f64> {
        self.parts.iter().map(KahanSum::value).collect()
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    compensated_sum(a.iter().zip(b).map(|(x, y)| x * y))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_squares_back() {
        let m = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0]);
        let (r, ri) = spd_sqrt_pair(&m).unwrap();
        assert!((&r * &r - &m).norm() < 1e-12);
        assert!((&r * &ri - DMatrix::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn rejects_singular() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(spd_sqrt(&m), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn transport_map_pushes_forward() {
        let s1 = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let s2 = DMatrix::from_row_slice(2, 2, &[0.5, -0.1, -0.1, 3.0]);
        let a = transport_map(&s1, &s2).unwrap();
        assert!((&a * &s1 * &a - &s2).norm() < 1e-12);
        assert!(min_eigenvalue(&a) > 0.0);
    }

    #[test]
    fn kahan_recovers_small_terms() {
        let xs = [1.0, 1e-16, 1e-16, 1e-16, 1e-16, -1.0];
        assert!((compensated_sum(xs) - 4e-16).abs() < 1e-30);
    }
}
