//! Barycenter (Fréchet mean) solvers.
//!
//! Euclidean and quantile barycenters are weighted averages. Gaussian
//! barycenters split into the weighted mean of the means and the Bures
//! fixed point for the covariances. Sphere and hyperboloid use Riemannian
//! gradient descent `b <- exp_b(step * sum_i w_i log_b(x_i))` with
//! backtracking.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, compensated_sum, VecAccumulator};
use crate::space::{distance, exp_map, log_map, Gaussian, SpaceKind, SpacePoint, TangentVector};

/// Per-point work is fanned out to rayon above this support size.
const PAR_THRESHOLD: usize = 512;
const MAX_HALVINGS: usize = 30;
/// Relative objective decrease below which descent steps are judged by the gradient norm.
const RESOLVABLE: f64 = 1e-10;
/// Number of sample points tried as the descent starting point.
pub const INIT_CANDIDATES: usize = 32;

/// A finitely supported probability measure on one space.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    points: Vec<SpacePoint>,
    weights: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(points: Vec<SpacePoint>, weights: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidDistribution("at least one support point required".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidDistribution(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidDistribution("weights must be positive".into()));
        }
        let total = compensated_sum(weights.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}, not 1")));
        }
        for p in &points[1..] {
            points[0].ensure_same_space(p)?;
        }
        Ok(Self { points, weights })
    }

    /// Empirical measure `(1/n) sum delta_{x_i}`.
    pub fn uniform(points: Vec<SpacePoint>) -> Result<Self> {
        let n = points.len();
        if n == 0 {
            return Err(Error::InvalidDistribution("at least one support point required".into()));
        }
        let weights = vec![1.0 / n as f64; n];
        // 1/n rounding can put the sum off by a few ulps; skip the strict sum check.
        for p in &points[1..] {
            points[0].ensure_same_space(p)?;
        }
        Ok(Self { points, weights })
    }

    pub fn points(&self) -> &[SpacePoint] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn kind(&self) -> SpaceKind {
        self.points[0].kind()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &SpacePoint)> {
        self.weights.iter().copied().zip(&self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Gradient-norm stopping threshold, in distance units.
    pub tol: f64,
    pub step: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { max_iters: 10_000, tol: 1e-10, step: 1.0 }
    }
}

impl SolverOptions {
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.max_iters < 1 {
            v.push("solver.max_iters must be >= 1".to_string());
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            v.push("solver.tol must be positive".to_string());
        }
        if !(self.step.is_finite() && self.step > 0.0) {
            v.push("solver.step must be positive".to_string());
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidConfig(v.join("; ")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BarycenterResult {
    pub point: SpacePoint,
    /// `sum_i w_i d^2(point, x_i)`.
    pub objective: f64,
    /// `|| sum_i w_i log_point(x_i) ||`.
    pub grad_norm: f64,
    pub iters: usize,
    pub converged: bool,
}

fn map_points<T: Send>(p: &DiscreteDistribution, f: impl Fn(&SpacePoint) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    if p.len() >= PAR_THRESHOLD {
        p.points.par_iter().map(&f).collect()
    } else {
        p.points.iter().map(f).collect()
    }
}

/// `sum_i w_i d^2(b, x_i)`.
pub fn variance(p: &DiscreteDistribution, b: &SpacePoint) -> Result<f64> {
    p.points[0].ensure_same_space(b)?;
    let d2 = map_points(p, |x| distance(b, x).map(|d| d * d))?;
    Ok(compensated_sum(p.weights.iter().zip(&d2).map(|(w, d)| w * d)))
}

/// Tangent mean `sum_i w_i log_b(x_i)` (the negative half-gradient of the
/// objective), accumulated in index order.
pub fn tangent_mean(p: &DiscreteDistribution, b: &SpacePoint) -> Result<TangentVector> {
    p.points[0].ensure_same_space(b)?;
    let logs = map_points(p, |x| log_map(b, x))?;
    TangentVector::weighted_sum(b, p.weights.iter().copied().zip(&logs))
}

/// Riemannian gradient descent from `init`.
///
/// A trial step `t` is accepted when it lowers the objective by at least
/// `t |g|^2 / 2`, a quarter of the first-order prediction. Once the
/// predicted decrease `2 t |g|^2` falls below `1e-10` of the objective, where
/// objective differences are mostly rounding noise, it must lower the
/// gradient norm instead. Rejected steps are halved, at most 30 times.
/// Non-convergence is reported through `converged = false` with the last
/// iterate, not as an error.
pub fn frechet_mean_descent(
    p: &DiscreteDistribution,
    init: &SpacePoint,
    opts: &SolverOptions,
) -> Result<BarycenterResult> {
    opts.validate()?;
    let cut = |iters: usize| move |e| match e {
        Error::CutLocus => Error::CutLocusDuringIteration(iters),
        other => other,
    };
    let mut b = init.clone();
    let mut f = variance(p, &b)?;
    let mut g = tangent_mean(p, &b).map_err(cut(0))?;
    let mut gn = g.magnitude();
    let mut iters = 0;
    while gn > opts.tol && iters < opts.max_iters {
        let mut step = opts.step;
        let mut next = None;
        for _ in 0..=MAX_HALVINGS {
            if let Ok(cand) = exp_map(&b, &g.scaled(step)) {
                let fc = variance(p, &cand)?;
                let resolved = 2.0 * step * gn * gn > RESOLVABLE * f;
                if !resolved || fc <= f - 0.5 * step * gn * gn {
                    let gc = tangent_mean(p, &cand).map_err(cut(iters + 1))?;
                    let gcn = gc.magnitude();
                    if resolved || gcn < gn {
                        next = Some((cand, fc, gc, gcn));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((cand, fc, gc, gcn)) = next else { break };
        b = cand;
        f = fc;
        g = gc;
        gn = gcn;
        iters += 1;
    }
    Ok(BarycenterResult { point: b, objective: f, grad_norm: gn, iters, converged: gn <= opts.tol })
}

/// Weighted average of quantile grids (the exact 1-D Wasserstein barycenter).
pub fn quantile_mean(p: &DiscreteDistribution) -> Result<SpacePoint> {
    let m = match &p.points[0] {
        SpacePoint::Quantile(q) => q.len(),
        other => return Err(Error::SpaceMismatch("quantile".into(), other.signature())),
    };
    let mut out = vec![0.0; m];
    for (w, x) in p.iter() {
        match x {
            SpacePoint::Quantile(q) if q.len() == m => {
                // plain ordered sums: monotone rounding keeps the grid sorted
                out.iter_mut().zip(q).for_each(|(o, v)| *o += w * v);
            }
            SpacePoint::Quantile(q) => return Err(Error::GridMismatch(m, q.len())),
            other => return Err(Error::SpaceMismatch("quantile".into(), other.signature())),
        }
    }
    SpacePoint::quantile(out)
}

fn euclidean_mean(p: &DiscreteDistribution) -> SpacePoint {
    let d = p.points[0].dim();
    let mut acc = VecAccumulator::new(d);
    for (w, x) in p.iter() {
        acc.add_scaled(w, x.coords().unwrap());
    }
    SpacePoint::Euclidean(acc.finish())
}

/// Gaussian barycenter: weighted mean of means, and the fixed point
/// `S <- S^{-1/2} (sum_i w_i (S^{1/2} S_i S^{1/2})^{1/2})^2 S^{-1/2}` for the
/// covariance. Stops once both the tangent-mean norm and the Frobenius
/// fixed-point residual are below `tol`.
pub fn bures_fixed_point(p: &DiscreteDistribution, opts: &SolverOptions) -> Result<BarycenterResult> {
    opts.validate()?;
    let gs: Vec<&Gaussian> = p
        .points
        .iter()
        .map(|x| x.as_gaussian().ok_or_else(|| Error::SpaceMismatch("gaussian".into(), x.signature())))
        .collect::<Result<_>>()?;
    let dim = gs[0].dim();
    let mut mean_acc = VecAccumulator::new(dim);
    let mut cov_acc = VecAccumulator::new(dim * dim);
    for (w, g) in p.weights.iter().zip(&gs) {
        mean_acc.add_scaled(*w, g.mean().as_slice());
        cov_acc.add_scaled(*w, g.cov().as_slice());
    }
    let mean = DVector::from_vec(mean_acc.finish());
    let mut cov = linalg::symmetrize(&DMatrix::from_vec(dim, dim, cov_acc.finish()));
    let eye = DMatrix::<f64>::identity(dim, dim);

    let mut iters = 0;
    loop {
        let (root, root_inv) = linalg::spd_sqrt_pair(&cov)?;
        let mids = map_points(p, |x| {
            let s = x.as_gaussian().unwrap().cov();
            linalg::spd_sqrt(&linalg::symmetrize(&(&root * s * &root)))
        })?;
        let mut acc = VecAccumulator::new(dim * dim);
        for (w, m) in p.weights.iter().zip(&mids) {
            acc.add_scaled(*w, m.as_slice());
        }
        let mid = linalg::symmetrize(&DMatrix::from_vec(dim, dim, acc.finish()));
        let mean_map = linalg::symmetrize(&(&root_inv * &mid * &root_inv));
        let lin = &mean_map - &eye;
        let grad_norm = (&lin * &cov).component_mul(&lin).sum().max(0.0).sqrt();
        let next = linalg::symmetrize(&(&root_inv * &mid * &mid * &root_inv));
        let residual = (&next - &cov).norm();
        let done = grad_norm <= opts.tol && residual <= opts.tol;
        if done || iters >= opts.max_iters {
            let point = SpacePoint::Gaussian(Gaussian::new(mean, cov)?);
            let objective = variance(p, &point)?;
            // count fixed-point map evaluations
            return Ok(BarycenterResult { point, objective, grad_norm, iters: iters + 1, converged: done });
        }
        cov = next;
        iters += 1;
    }
}

/// Barycenter of `p` with the space-appropriate solver.
pub fn barycenter(p: &DiscreteDistribution, opts: &SolverOptions) -> Result<BarycenterResult> {
    opts.validate()?;
    if p.len() == 1 {
        return Ok(BarycenterResult { point: p.points[0].clone(), objective: 0.0, grad_norm: 0.0, iters: 0, converged: true });
    }
    match p.kind() {
        SpaceKind::Euclidean | SpaceKind::Quantile => {
            let point = if p.kind() == SpaceKind::Euclidean { euclidean_mean(p) } else { quantile_mean(p)? };
            let grad_norm = tangent_mean(p, &point)?.magnitude();
            let objective = variance(p, &point)?;
            Ok(BarycenterResult { point, objective, grad_norm, iters: 1, converged: grad_norm <= opts.tol })
        }
        SpaceKind::Gaussian => bures_fixed_point(p, opts),
        SpaceKind::Sphere | SpaceKind::Hyperbolic => {
            let init = best_support_point(p)?;
            frechet_mean_descent(p, &init, opts)
        }
    }
}

/// Support point with the smallest objective among the first
/// [`INIT_CANDIDATES`] support points.
pub fn best_support_point(p: &DiscreteDistribution) -> Result<SpacePoint> {
    let mut best: Option<(f64, &SpacePoint)> = None;
    for x in p.points.iter().take(INIT_CANDIDATES) {
        let f = variance(p, x)?;
        if best.is_none_or(|(bf, _)| f < bf) {
            best = Some((f, x));
        }
    }
    Ok(best.expect("nonempty").1.clone())
}

/// Barycenter of the empirical measure of `sample`.
pub fn empirical_barycenter(sample: &[SpacePoint], opts: &SolverOptions) -> Result<BarycenterResult> {
    barycenter(&DiscreteDistribution::uniform(sample.to_vec())?, opts)
}
