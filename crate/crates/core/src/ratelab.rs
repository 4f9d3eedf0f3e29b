//! Monte Carlo checks of the convergence-rate bounds and the tail bound.
//!
//! Every random quantity is drawn from a stream derived from the master
//! seed and a fixed index path, so results do not depend on thread count or
//! scheduling. Trials run on rayon and are reduced in index order.

use std::collections::HashMap;
use std::f64::consts::LN_2;
use std::sync::{Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::barycenter::{empirical_barycenter, DiscreteDistribution, SolverOptions};
use crate::error::{Error, Result};
use crate::hugging::{bures_potential_bounds, extendibility_kmin, min_hugging_over, support_extendibility, wasserstein_kmin};
use crate::linalg::{compensated_sum, KahanSum};
use crate::rng;
use crate::space::{distance, log_map, Family, SpaceKind, SpacePoint, TangentVector};

/// Seed of the population-level Monte Carlo passes (variance, anchor check,
/// subgaussian moment). Fixed so cached values do not depend on the run seed.
pub const POPULATION_SEED: u64 = 0x005e_ed0f_ba5e;
const CHUNK: usize = 10_000;
/// Largest tolerated fraction of re-drawn (non-converged) trials.
pub const MAX_DISCARD_RATE: f64 = 0.01;
/// Constant `c` in the tail-bound recipe.
pub const TAIL_C: f64 = 0.5;
/// `Pk` used in the tail threshold is the sampled estimate times this margin.
pub const PK_MARGIN: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// `E d^2 <= sigma^2 / n` on nonpositively curved spaces.
    Negcurv,
    /// `E d^2 <= 4 sigma^2 / (n k_min^2)` with `k_min` from extendibility.
    MasterExtendible,
    /// `E W_2^2 <= 4 sigma^2 / ((1 - beta + alpha) n)`.
    Wasserstein,
    /// High-probability bound with subgaussian tails.
    Tail,
}

impl Theorem {
    pub fn name(self) -> &'static str {
        match self {
            Theorem::Negcurv => "negcurv",
            Theorem::MasterExtendible => "master_extendible",
            Theorem::Wasserstein => "wasserstein",
            Theorem::Tail => "tail",
        }
    }

    /// Families the theorem can be applied to.
    pub fn supports(self, kind: SpaceKind) -> bool {
        match self {
            Theorem::Negcurv => kind.is_nonpositively_curved(),
            Theorem::Wasserstein => matches!(kind, SpaceKind::Gaussian | SpaceKind::Quantile),
            Theorem::MasterExtendible | Theorem::Tail => true,
        }
    }
}

fn default_trials() -> usize {
    1000
}

fn default_sigma2_draws() -> usize {
    1_000_000
}

fn default_verify_draws() -> usize {
    100_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateExperimentConfig {
    pub family: Family,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
    pub theorem: Theorem,
    #[serde(default = "default_sigma2_draws")]
    pub sigma2_draws: usize,
    #[serde(default = "default_verify_draws")]
    pub verify_draws: usize,
}

impl RateExperimentConfig {
    pub fn new(family: Family, n_grid: Vec<usize>, trials: usize, theorem: Theorem) -> Self {
        Self {
            family,
            n_grid,
            trials,
            master_seed: 0,
            solver: SolverOptions::default(),
            theorem,
            sigma2_draws: default_sigma2_draws(),
            verify_draws: default_verify_draws(),
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v: Vec<String> = self.family.violations().into_iter().map(|m| format!("family: {m}")).collect();
        if self.n_grid.is_empty() {
            v.push("n_grid must not be empty".into());
        }
        if self.n_grid.iter().any(|&n| n < 2) {
            v.push("n_grid entries must be >= 2".into());
        }
        if self.n_grid.windows(2).any(|w| w[0] >= w[1]) {
            v.push("n_grid must be strictly ascending".into());
        }
        if self.trials < 1 {
            v.push("trials must be >= 1".into());
        }
        if self.sigma2_draws < 2 {
            v.push("sigma2_draws must be >= 2".into());
        }
        if self.verify_draws < 2 {
            v.push("verify_draws must be >= 2".into());
        }
        v.extend(self.solver.violations());
        if !self.theorem.supports(self.family.kind()) {
            v.push(format!(
                "theorem {} does not apply to the {} family",
                self.theorem.name(),
                self.family.kind().name()
            ));
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
pub struct RateRecord {
    pub n: usize,
    pub trials: usize,
    pub mean_sq_dist: f64,
    pub stderr: f64,
    pub sigma2: f64,
    pub bound: f64,
    pub ratio: f64,
    /// `ratio <= 1 + 3 stderr / bound`.
    pub within_bound: bool,
    pub discarded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateCurve {
    pub space: String,
    pub theorem: Theorem,
    pub master_seed: u64,
    pub k_used: f64,
    pub sigma2: f64,
    pub sigma2_stderr: f64,
    pub records: Vec<RateRecord>,
    /// Least-squares log-log slope; `None` with fewer than three grid points.
    pub slope: Option<f64>,
}

impl RateCurve {
    pub fn all_within_bound(&self) -> bool {
        self.records.iter().all(|r| r.within_bound)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailExperimentResult {
    pub n: usize,
    pub trials: usize,
    pub delta: f64,
    /// Squared-distance threshold `c1 log(2/delta) / n`.
    pub threshold: f64,
    pub empirical_exceedance: f64,
    pub exceedance_stderr: f64,
    /// `delta + exp(-c2 n)`.
    pub bound_probability: f64,
    pub within_bound: bool,
    pub c1_used: f64,
    pub c2_used: f64,
    pub varsigma2: f64,
    pub k_min: f64,
    pub pk_estimate: f64,
    pub pk_stderr: f64,
    pub pk_used: f64,
    pub pk2_estimate: f64,
    /// Exact exceedance probability where available (Euclidean Gaussian family).
    pub exact_exceedance: Option<f64>,
    pub discarded: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubgaussianCheck {
    pub passed: bool,
    pub estimate: f64,
    pub stderr: f64,
}

type CacheKey = (String, usize, u8);

fn cache() -> &'static Mutex<HashMap<CacheKey, MomentEstimate>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, MomentEstimate>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

fn family_key(f: &Family) -> String {
    serde_json::to_string(f).expect("family serializes")
}

/// Mean and standard error of `g(x)` over `draws` population draws, split in
/// fixed chunks with their own streams.
fn population_moment(family: &Family, draws: usize, salt: u64, g: impl Fn(&SpacePoint) -> f64 + Sync) -> MomentEstimate {
    let chunks = draws.div_ceil(CHUNK);
    let parts: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(draws - c * CHUNK);
            let mut rng = rng::stream(POPULATION_SEED, &[salt, c as u64]);
            let (mut s, mut s2) = (KahanSum::new(), KahanSum::new());
            for _ in 0..len {
                let v = g(&family.draw(&mut rng));
                s.add(v);
                s2.add(v * v);
            }
            (s.value(), s2.value())
        })
        .collect();
    let n = draws as f64;
    let mean = compensated_sum(parts.iter().map(|p| p.0)) / n;
    let second = compensated_sum(parts.iter().map(|p| p.1)) / n;
    let var = (second - mean * mean).max(0.0) * n / (n - 1.0);
    MomentEstimate { mean, stderr: (var / n).sqrt() }
}

fn cached(family: &Family, draws: usize, tag: u8, f: impl FnOnce() -> Result<MomentEstimate>) -> Result<MomentEstimate> {
    let key = (family_key(family), draws, tag);
    if let Some(v) = cache().lock().unwrap().get(&key) {
        return Ok(*v);
    }
    let v = f()?;
    cache().lock().unwrap().insert(key, v);
    Ok(v)
}

/// `sigma^2 = E d^2(b*, X)` for the family, estimated from `draws` draws and
/// cached per family.
pub fn population_variance(family: &Family, draws: usize) -> Result<MomentEstimate> {
    family.validate()?;
    if draws < 2 {
        return Err(Error::InvalidConfig("sigma2_draws must be >= 2".into()));
    }
    let anchor = family.anchor()?;
    cached(family, draws, 0, || {
        Ok(population_moment(family, draws, 1, |x| distance(&anchor, x).map(|d| d * d).unwrap_or(f64::NAN)))
    })
}

/// The family's anchor, after checking that the tangent mean of
/// `verify_draws` draws at the anchor has norm at most `3 sqrt(sigma^2 / N)`.
pub fn population_barycenter(config: &RateExperimentConfig) -> Result<SpacePoint> {
    verified_anchor(&config.family, config.verify_draws)
}

pub fn verified_anchor(family: &Family, draws: usize) -> Result<SpacePoint> {
    family.validate()?;
    let anchor = family.anchor()?;
    let key = (family_key(family), draws, 1);
    if cache().lock().unwrap().contains_key(&key) {
        return Ok(anchor);
    }
    let chunks = draws.div_ceil(CHUNK);
    let w = 1.0 / draws as f64;
    let parts: Vec<(TangentVector, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = CHUNK.min(draws - c * CHUNK);
            let mut rng = rng::stream(POPULATION_SEED, &[2, c as u64]);
            let logs: Vec<TangentVector> =
                (0..len).map(|_| log_map(&anchor, &family.draw(&mut rng))).collect::<Result<_>>()?;
            let sq = compensated_sum(logs.iter().map(|l| l.magnitude().powi(2)));
            Ok((TangentVector::weighted_sum(&anchor, logs.iter().map(|l| (w, l)))?, sq))
        })
        .collect::<Result<_>>()?;
    let mean = TangentVector::weighted_sum(&anchor, parts.iter().map(|p| (1.0, &p.0)))?;
    let sigma2 = compensated_sum(parts.iter().map(|p| p.1)) * w;
    let grad_norm = mean.magnitude();
    let tolerance = 3.0 * (sigma2 * w).sqrt();
    if !(grad_norm <= tolerance) {
        return Err(Error::AnchorNotBarycenter { grad_norm, tolerance });
    }
    cache().lock().unwrap().insert(key, MomentEstimate { mean: grad_norm, stderr: tolerance });
    Ok(anchor)
}

/// Uniform lower bound on the hugging function from the extendibility of
/// geodesics from the anchor to the family's extremal support points.
pub fn family_kmin(family: &Family) -> Result<f64> {
    let anchor = family.anchor()?;
    let support = DiscreteDistribution::uniform(family.extremal_support()?)?;
    let ext = support_extendibility(&support, &anchor)?;
    extendibility_kmin(ext.lambda_in, ext.lambda_out)
}

/// `(alpha, beta)` of the potentials from the anchor to the support.
pub fn family_potential_bounds(family: &Family) -> Result<(f64, f64)> {
    match family {
        Family::GaussianMaps(_) => {
            let anchor = family.anchor()?;
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for mu in family.extremal_support()? {
                let (a, b) = bures_potential_bounds(&anchor, &mu)?;
                lo = lo.min(a);
                hi = hi.max(b);
            }
            Ok((lo, hi))
        }
        Family::QuantileGaussian { min_std, max_std, .. } => {
            let mid = 0.5 * (min_std + max_std);
            Ok((min_std / mid, max_std / mid))
        }
        _ => Err(Error::HypothesisViolated(format!(
            "the {} family has no Wasserstein potential bounds",
            family.kind().name()
        ))),
    }
}

/// The `k` entering the theorem's bound, after checking its hypotheses.
pub fn theorem_k(config: &RateExperimentConfig) -> Result<f64> {
    match config.theorem {
        Theorem::Negcurv => {
            if !config.family.kind().is_nonpositively_curved() {
                return Err(Error::HypothesisViolated("negcurv requires curvature <= 0".into()));
            }
            Ok(1.0)
        }
        Theorem::MasterExtendible | Theorem::Tail => {
            let k = family_kmin(&config.family)?;
            if config.theorem == Theorem::MasterExtendible && !(k > 0.0) {
                return Err(Error::HypothesisViolated(format!("k_min = {k} is not positive")));
            }
            Ok(k)
        }
        Theorem::Wasserstein => {
            let (a, b) = family_potential_bounds(&config.family)?;
            let k = wasserstein_kmin(a, b)?;
            if !(k > 0.0) {
                return Err(Error::HypothesisViolated(format!("beta - alpha = {} is not below 1", b - a)));
            }
            Ok(k)
        }
    }
}

fn bound(theorem: Theorem, sigma2: f64, n: usize, k: f64) -> f64 {
    let n = n as f64;
    match theorem {
        Theorem::Negcurv => sigma2 / n,
        Theorem::MasterExtendible | Theorem::Tail => 4.0 * sigma2 / (n * k * k),
        Theorem::Wasserstein => 4.0 * sigma2 / (k * n),
    }
}

/// Squared distances to `b*` for `trials` replications at sample size `n`,
/// re-drawing non-converged trials. Returns the values and the discard count.
fn replicate(config: &RateExperimentConfig, b_star: &SpacePoint, n_index: usize, n: usize, trials: usize) -> Result<(Vec<f64>, usize)> {
    let max_attempts = 1 + (MAX_DISCARD_RATE * trials as f64).floor() as usize;
    let out: Vec<(f64, usize)> = (0..trials)
        .into_par_iter()
        .map(|t| {
            for attempt in 0..=max_attempts {
                let mut rng = rng::stream(config.master_seed, &[n_index as u64, t as u64, attempt as u64]);
                let sample: Vec<SpacePoint> = (0..n).map(|_| config.family.draw(&mut rng)).collect();
                let r = empirical_barycenter(&sample, &config.solver)?;
                if r.converged {
                    let d = distance(&r.point, b_star)?;
                    return Ok((d * d, attempt));
                }
            }
            Err(Error::RunFailed(format!("trial {t} at n = {n} did not converge after {} draws", max_attempts + 1)))
        })
        .collect::<Result<_>>()?;
    let discarded: usize = out.iter().map(|o| o.1).sum();
    if discarded as f64 > MAX_DISCARD_RATE * trials as f64 {
        return Err(Error::RunFailed(format!(
            "{discarded} of {trials} trials at n = {n} were re-drawn after failing to converge"
        )));
    }
    Ok((out.into_iter().map(|o| o.0).collect(), discarded))
}

fn mean_stderr(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = compensated_sum(v.iter().copied()) / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = compensated_sum(v.iter().map(|x| (x - mean).powi(2))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs the rate experiment and returns one record per grid point.
pub fn run_rate_experiment(config: &RateExperimentConfig) -> Result<RateCurve> {
    config.validate()?;
    if config.theorem == Theorem::Tail {
        return Err(Error::InvalidConfig("use run_tail_experiment for the tail theorem".into()));
    }
    let k = theorem_k(config)?;
    let b_star = population_barycenter(config)?;
    let sigma = population_variance(&config.family, config.sigma2_draws)?;
    let mut records = Vec::with_capacity(config.n_grid.len());
    for (ni, &n) in config.n_grid.iter().enumerate() {
        let (d2, discarded) = replicate(config, &b_star, ni, n, config.trials)?;
        let (mean, stderr) = mean_stderr(&d2);
        let bound = bound(config.theorem, sigma.mean, n, k);
        let ratio = mean / bound;
        records.push(RateRecord {
            n,
            trials: config.trials,
            mean_sq_dist: mean,
            stderr,
            sigma2: sigma.mean,
            bound,
            ratio,
            within_bound: ratio <= 1.0 + 3.0 * stderr / bound,
            discarded,
        });
    }
    let pts: Vec<(f64, f64)> = records.iter().map(|r| (r.n as f64, r.mean_sq_dist)).collect();
    Ok(RateCurve {
        space: config.family.kind().name().to_string(),
        theorem: config.theorem,
        master_seed: config.master_seed,
        k_used: k,
        sigma2: sigma.mean,
        sigma2_stderr: sigma.stderr,
        slope: fit_loglog_points(&pts).ok(),
        records,
    })
}

/// Least-squares slope of `log y` against `log x`.
pub fn fit_loglog_points(points: &[(f64, f64)]) -> Result<f64> {
    let usable: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if usable.len() < 3 || usable.len() != points.len() {
        return Err(Error::InsufficientGrid(usable.len()));
    }
    let m = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / m;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = usable.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = usable.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientGrid(1));
    }
    Ok(sxy / sxx)
}

pub fn fit_loglog_slope(curve: &RateCurve) -> Result<f64> {
    fit_loglog_points(&curve.records.iter().map(|r| (r.n as f64, r.mean_sq_dist)).collect::<Vec<_>>())
}

/// Monte Carlo estimate of `E exp(d^2(b*, X) / (2 varsigma^2))`; passes when
/// the estimate plus three standard errors is at most 2.
pub fn subgaussian_proxy_check(family: &Family, varsigma2: f64, draws: usize) -> Result<SubgaussianCheck> {
    if !(varsigma2.is_finite() && varsigma2 > 0.0) {
        return Err(Error::InvalidConfig("varsigma2 must be positive".into()));
    }
    family.validate()?;
    let anchor = family.anchor()?;
    let m = population_moment(family, draws.max(2), 3, |x| {
        let d = distance(&anchor, x).unwrap_or(f64::INFINITY);
        (d * d / (2.0 * varsigma2)).exp()
    });
    Ok(SubgaussianCheck { passed: m.mean + 3.0 * m.stderr <= 2.0, estimate: m.mean, stderr: m.stderr })
}

/// Sampling effort of the `Pk` estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PkOptions {
    /// Points `x` averaged over.
    pub points: usize,
    /// Targets `b` per point in the inner minimum.
    pub targets: usize,
}

impl Default for PkOptions {
    fn default() -> Self {
        Self { points: 200, targets: 200 }
    }
}

/// Estimates of `P k_{b*}` and `P k_{b*}^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PkEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub second_moment: f64,
}

pub fn estimate_pk(family: &Family, b_star: &SpacePoint, opts: &PkOptions, seed: u64) -> Result<PkEstimate> {
    if opts.points < 2 || opts.targets < 1 {
        return Err(Error::InvalidConfig("Pk estimate needs >= 2 points and >= 1 target".into()));
    }
    let mut rng = rng::stream(seed, &[u64::MAX, 0]);
    let xs = family.sample_n(opts.points, &mut rng)?;
    let targets = family.sample_n(opts.targets, &mut rng)?;
    let ks: Vec<f64> = xs
        .par_iter()
        .map(|x| {
            min_hugging_over(b_star, x, &targets)?.ok_or(Error::CoincidentPoints(0.0))
        })
        .collect::<Result<_>>()?;
    let (mean, stderr) = mean_stderr(&ks);
    let second_moment = compensated_sum(ks.iter().map(|k| k * k)) / ks.len() as f64;
    Ok(PkEstimate { mean, stderr, second_moment })
}

/// Tail constants from the proof recipe with `c = TAIL_C`: returns
/// `(c1, c2)` with threshold `d^2 > c1 log(2/delta) / n` holding with
/// probability at most `delta + exp(-c2 n)`.
pub fn tail_constants(varsigma2: f64, pk: f64, pk2: f64, k_min: f64) -> (f64, f64) {
    let c = TAIL_C;
    let c1 = 8.0 * varsigma2 / (c * c * pk * pk);
    let km = k_min.abs();
    let c2 = (1.0 - c) * pk / (2.0 * km) * ((1.0 - c) * km * pk / pk2).min(1.5);
    (c1, c2)
}

pub fn run_tail_experiment(config: &RateExperimentConfig, delta: f64, varsigma2: f64) -> Result<Vec<TailExperimentResult>> {
    run_tail_experiments(config, &[delta], varsigma2, &PkOptions::default())
}

/// Tail experiment for several `delta` at once; the squared distances of each
/// grid point are shared across `deltas`. Results are ordered by `n`, then
/// by `delta`.
pub fn run_tail_experiments(
    config: &RateExperimentConfig,
    deltas: &[f64],
    varsigma2: f64,
    pk_opts: &PkOptions,
) -> Result<Vec<TailExperimentResult>> {
    config.validate()?;
    if deltas.is_empty() || deltas.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
        return Err(Error::InvalidConfig("delta must lie in (0, 1]".into()));
    }
    let sub = subgaussian_proxy_check(&config.family, varsigma2, config.sigma2_draws)?;
    if !sub.passed {
        return Err(Error::HypothesisViolated(format!(
            "not subgaussian with proxy {varsigma2}: moment estimate {} (stderr {})",
            sub.estimate, sub.stderr
        )));
    }
    let k_min = family_kmin(&config.family)?;
    if k_min == 0.0 {
        return Err(Error::HypothesisViolated("k_min = 0 leaves c2 undefined".into()));
    }
    let b_star = population_barycenter(config)?;
    let pk = estimate_pk(&config.family, &b_star, pk_opts, config.master_seed)?;
    let pk_used = PK_MARGIN * pk.mean;
    if !(pk_used > 0.0) {
        return Err(Error::HypothesisViolated(format!("Pk estimate {} is not positive", pk.mean)));
    }
    let (c1, c2) = tail_constants(varsigma2, pk_used, pk.second_moment, k_min);
    let mut out = Vec::new();
    for (ni, &n) in config.n_grid.iter().enumerate() {
        let (d2, discarded) = replicate(config, &b_star, ni, n, config.trials)?;
        for &delta in deltas {
            let threshold = c1 * (2.0 / delta).ln() / n as f64;
            let hits = d2.iter().filter(|&&v| v > threshold).count();
            let p = hits as f64 / d2.len() as f64;
            let bound_probability = delta + (-c2 * n as f64).exp();
            let pb = bound_probability.min(1.0);
            let slack = 3.0 * (pb * (1.0 - pb) / d2.len() as f64).sqrt();
            out.push(TailExperimentResult {
                n,
                trials: config.trials,
                delta,
                threshold,
                empirical_exceedance: p,
                exceedance_stderr: (p * (1.0 - p) / d2.len() as f64).sqrt(),
                bound_probability,
                within_bound: p <= bound_probability + slack,
                c1_used: c1,
                c2_used: c2,
                varsigma2,
                k_min,
                pk_estimate: pk.mean,
                pk_stderr: pk.stderr,
                pk_used,
                pk2_estimate: pk.second_moment,
                exact_exceedance: exact_exceedance(&config.family, n, threshold),
                discarded,
            });
        }
    }
    Ok(out)
}

/// `P(d^2(b_n, b*) > t)` for the Euclidean Gaussian family, where
/// `n d^2 / scale^2` is chi-square with `dim` degrees of freedom.
pub fn exact_exceedance(family: &Family, n: usize, t: f64) -> Option<f64> {
    match family {
        Family::EuclideanGaussian { dim, scale, .. } => {
            let chi = ChiSquared::new(*dim as f64).ok()?;
            Some(chi.sf(n as f64 * t / (scale * scale)))
        }
        _ => None,
    }
}

/// Proxy for a family supported in a ball of radius `r`: the integrand is
/// bounded by 2 when `varsigma^2 = r^2 / (2 ln 2)`.
pub fn bounded_support_proxy(radius: f64) -> f64 {
    radius * radius / (2.0 * LN_2)
}

/// Number format of every CSV cell: 17 significant digits.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

pub const RATES_CSV_HEADER: &str = "space,n,trials,mean_sq_dist,stderr,sigma2,bound,ratio,seed";
pub const TAIL_CSV_HEADER: &str = "space,n,trials,delta,threshold,empirical_exceedance,exceedance_stderr,bound_probability,c1,c2,varsigma2,pk_used,exact_exceedance,seed";

pub fn rates_csv(curve: &RateCurve) -> String {
    let mut out = String::from(RATES_CSV_HEADER);
    out.push('\n');
    for r in &curve.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            curve.space,
            r.n,
            r.trials,
            fmt_num(r.mean_sq_dist),
            fmt_num(r.stderr),
            fmt_num(r.sigma2),
            fmt_num(r.bound),
            fmt_num(r.ratio),
            curve.master_seed
        ));
    }
    out
}

pub fn tail_csv(space: &str, seed: u64, results: &[TailExperimentResult]) -> String {
    let mut out = String::from(TAIL_CSV_HEADER);
    out.push('\n');
    for r in results {
        out.push_str(&format!(
            "{space},{},{},{},{},{},{},{},{},{},{},{},{},{seed}\n",
            r.n,
            r.trials,
            fmt_num(r.delta),
            fmt_num(r.threshold),
            fmt_num(r.empirical_exceedance),
            fmt_num(r.exceedance_stderr),
            fmt_num(r.bound_probability),
            fmt_num(r.c1_used),
            fmt_num(r.c2_used),
            fmt_num(r.varsigma2),
            fmt_num(r.pk_used),
            r.exact_exceedance.map(fmt_num).unwrap_or_default(),
        ));
    }
    out
}

/// Drops cached population estimates, forcing the next run to recompute them.
pub fn clear_population_cache() {
    cache().lock().unwrap().clear();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid(dim: usize) -> Family {
        Family::EuclideanGaussian { dim, scale: 1.0, center: None }
    }

    #[test]
    fn config_validation() {
        let mut c = RateExperimentConfig::new(euclid(3), vec![10, 5, 1], 0, Theorem::Negcurv);
        let v = c.violations();
        assert!(v.iter().any(|m| m.contains("trials")), "{v:?}");
        assert!(v.iter().any(|m| m.contains("ascending")));
        assert!(v.iter().any(|m| m.contains(">= 2")));
        c = RateExperimentConfig::new(Family::SphereCap { dim: 2, radius: 0.3, center: None }, vec![4], 1, Theorem::Wasserstein);
        assert!(c.violations().iter().any(|m| m.contains("does not apply")));
        c.theorem = Theorem::Negcurv;
        assert!(c.validate().is_err());
    }

    #[test]
    fn json_defaults() {
        let c: RateExperimentConfig = serde_json::from_str(
            r#"{"family":{"type":"euclidean_gaussian","dim":2,"scale":1.0},"n_grid":[4,8],"theorem":"negcurv"}"#,
        )
        .unwrap();
        assert_eq!(c.trials, 1000);
        assert_eq!(c.solver.tol, 1e-10);
        assert!(serde_json::from_str::<RateExperimentConfig>(r#"{"family":{"type":"euclidean_gaussian","dim":2,"scale":1.0},"n_grid":[4],"theorem":"negcurv","trails":3}"#).is_err());
    }

    #[test]
    fn slope_fits() {
        let exact: Vec<_> = [10.0, 100.0, 1000.0].iter().map(|n| (*n, 3.0 / n)).collect();
        assert!((fit_loglog_points(&exact).unwrap() + 1.0).abs() < 1e-12);
        let half: Vec<_> = [10.0, 100.0, 1000.0].iter().map(|n: &f64| (*n, 3.0 / n.sqrt())).collect();
        assert!((fit_loglog_points(&half).unwrap() + 0.5).abs() < 1e-12);
        assert!(matches!(fit_loglog_points(&exact[..2]), Err(Error::InsufficientGrid(2))));
    }

    #[test]
    fn kmin_per_family() {
        assert_eq!(family_kmin(&euclid(2)).unwrap(), 1.0);
        let r = 0.3;
        let lam = 0.5 * (std::f64::consts::PI / r - 1.0);
        let k = family_kmin(&Family::SphereCap { dim: 2, radius: r, center: None }).unwrap();
        assert!((k - (lam / (1.0 + lam) - 1.0 / lam)).abs() < 1e-9);
        let g = Family::GaussianMaps(crate::space::GaussianMapsParams {
            dim: 3,
            alpha: 0.8,
            beta: 1.6,
            mean_scale: 0.0,
            anchor_mean: None,
            anchor_cov: None,
        });
        let (a, b) = family_potential_bounds(&g).unwrap();
        assert!((a - 0.8).abs() < 1e-12 && (b - 1.6).abs() < 1e-12);
        assert!((family_kmin(&g).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn tail_constants_euclidean() {
        let (c1, c2) = tail_constants(3.0, 1.0, 1.0, 1.0);
        assert_eq!(c1, 96.0);
        assert_eq!(c2, 0.125);
    }

    #[test]
    fn subgaussian_examples() {
        let fam = Family::SphereCap { dim: 2, radius: 0.3, center: None };
        let c = subgaussian_proxy_check(&fam, bounded_support_proxy(0.3), 20_000).unwrap();
        assert!(c.passed && c.estimate <= 2.0);
        let c = subgaussian_proxy_check(&euclid(3), 3.0, 200_000).unwrap();
        let exact = (1.0f64 - 1.0 / 3.0).powf(-1.5);
        assert!((c.estimate - exact).abs() < 4.0 * c.stderr, "{c:?} vs {exact}");
        assert!(!subgaussian_proxy_check(&euclid(3), 1.0, 20_000).unwrap().passed);
    }

    #[test]
    fn small_rate_run_is_deterministic() {
        let mut c = RateExperimentConfig::new(euclid(2), vec![4, 16, 64], 50, Theorem::Negcurv);
        c.sigma2_draws = 20_000;
        c.verify_draws = 20_000;
        c.master_seed = 9;
        let a = run_rate_experiment(&c).unwrap();
        let b = run_rate_experiment(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.records.len(), 3);
        assert!(a.slope.is_some());
    }
}
