//! Strict JSON configuration files, one schema per subcommand. Unknown keys are
//! rejected; omitted keys take the documented defaults.

use std::path::Path;

use barylab::barycenter::{DiscreteDistribution, SolverOptions};
use barylab::ratelab::{PkOptions, RateExperimentConfig, Theorem};
use barylab::space::Family;
use barylab::SpacePoint;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Configs that report every violated invariant at once.
pub trait Validate {
    fn violations(&self) -> Vec<String>;

    fn validate(&self) -> Result<(), CliError> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(v))
        }
    }
}

/// Reads and validates a config file.
pub fn parse_config<T: DeserializeOwned + Validate>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let config: T = parse_str(&text, &path.display().to_string())?;
    config.validate()?;
    Ok(config)
}

/// Deserializes `text`, reporting the line, column and key path of the first error.
pub fn parse_str<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let parse_err = |key: String, e: serde_json::Error| CliError::Parse {
        path: origin.to_string(),
        line: e.line(),
        column: e.column(),
        key,
        message: strip_position(&e.to_string()),
    };
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let key = e.path().to_string();
        parse_err(key, e.into_inner())
    })?;
    de.end().map_err(|e| parse_err(".".into(), e))?;
    Ok(value)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

impl Validate for RateExperimentConfig {
    fn violations(&self) -> Vec<String> {
        RateExperimentConfig::violations(self)
    }
}

/// `tail`: exceedance of the high-probability threshold for each `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TailConfig {
    pub family: Family,
    pub n_grid: Vec<usize>,
    #[serde(default = "default_tail_trials")]
    pub trials: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
    pub deltas: Vec<f64>,
    /// Subgaussian proxy of the family.
    pub varsigma2: f64,
    #[serde(default)]
    pub pk: PkOptions,
    #[serde(default = "default_sigma2_draws")]
    pub sigma2_draws: usize,
    #[serde(default = "default_verify_draws")]
    pub verify_draws: usize,
}

fn default_tail_trials() -> usize {
    10_000
}

fn default_sigma2_draws() -> usize {
    1_000_000
}

fn default_verify_draws() -> usize {
    100_000
}

impl TailConfig {
    pub fn experiment(&self) -> RateExperimentConfig {
        RateExperimentConfig {
            family: self.family.clone(),
            n_grid: self.n_grid.clone(),
            trials: self.trials,
            master_seed: self.master_seed,
            solver: self.solver,
            theorem: Theorem::Tail,
            sigma2_draws: self.sigma2_draws,
            verify_draws: self.verify_draws,
        }
    }
}

impl Validate for TailConfig {
    fn violations(&self) -> Vec<String> {
        let mut v = self.experiment().violations();
        if self.deltas.is_empty() {
            v.push("deltas must not be empty".into());
        }
        if self.deltas.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
            v.push("deltas must lie in (0, 1]".into());
        }
        if !(self.varsigma2 > 0.0 && self.varsigma2.is_finite()) {
            v.push("varsigma2 must be positive and finite".into());
        }
        if self.pk.points < 1 || self.pk.targets < 1 {
            v.push("pk.points and pk.targets must be >= 1".into());
        }
        v
    }
}

/// `hugging`: the hugging function at random `(b, x)` pairs, with `b*` the
/// barycenter of a finite sample and `x` drawn from that sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HuggingConfig {
    pub family: Family,
    #[serde(default = "default_support_size")]
    pub support_size: usize,
    #[serde(default = "default_samples")]
    pub triples: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub solver: SolverOptions,
}

fn default_support_size() -> usize {
    64
}

fn default_samples() -> usize {
    1000
}

impl Validate for HuggingConfig {
    fn violations(&self) -> Vec<String> {
        let mut v: Vec<String> = self.family.violations().into_iter().map(|m| format!("family: {m}")).collect();
        if self.support_size < 1 {
            v.push("support_size must be >= 1".into());
        }
        if self.triples < 1 {
            v.push("triples must be >= 1".into());
        }
        v.extend(self.solver.violations());
        v
    }
}

/// `curvature`: quadruple defects, angle monotonicity and cone distances on
/// random quadruples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurvatureConfig {
    pub family: Family,
    /// Comparison curvature; defaults to the sharp lower bound of the space.
    #[serde(default)]
    pub kappa: Option<f64>,
    #[serde(default = "default_samples")]
    pub quadruples: usize,
    #[serde(default = "default_grid")]
    pub grid: Vec<f64>,
    #[serde(default)]
    pub master_seed: u64,
}

fn default_grid() -> Vec<f64> {
    vec![0.25, 0.5, 0.75, 1.0]
}

impl CurvatureConfig {
    pub fn kappa_value(&self) -> f64 {
        self.kappa.unwrap_or_else(|| self.family.kind().curvature_lower_bound())
    }
}

impl Validate for CurvatureConfig {
    fn violations(&self) -> Vec<String> {
        let mut v: Vec<String> = self.family.violations().into_iter().map(|m| format!("family: {m}")).collect();
        if self.kappa.is_some_and(|k| !k.is_finite()) {
            v.push("kappa must be finite".into());
        }
        if self.quadruples < 1 {
            v.push("quadruples must be >= 1".into());
        }
        if self.grid.is_empty()
            || self.grid.iter().any(|g| !(*g > 0.0 && *g <= 1.0))
            || self.grid.windows(2).any(|w| w[1] < w[0])
        {
            v.push("grid must be a nonempty ascending list within (0, 1]".into());
        }
        v
    }
}

/// `barycenter`: one solve for an explicit weighted point set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BarycenterConfig {
    pub points: Vec<SpacePoint>,
    /// Uniform when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default)]
    pub solver: SolverOptions,
}

impl BarycenterConfig {
    pub fn distribution(&self) -> barylab::Result<DiscreteDistribution> {
        match &self.weights {
            Some(w) => DiscreteDistribution::new(self.points.clone(), w.clone()),
            None => DiscreteDistribution::uniform(self.points.clone()),
        }
    }
}

impl Validate for BarycenterConfig {
    fn violations(&self) -> Vec<String> {
        let mut v = self.solver.violations();
        if let Err(e) = self.distribution() {
            v.push(e.to_string());
        }
        v
    }
}
