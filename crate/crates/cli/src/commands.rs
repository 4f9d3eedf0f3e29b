//! Subcommand bodies. Each returns its artifacts in memory; writing them is
//! left to the caller so that the run can be recorded in one manifest.

use std::path::PathBuf;

use barylab::barycenter::{barycenter, BarycenterResult, DiscreteDistribution};
use barylab::comparison::{angle_monotonicity_probe, cone_distance, quadruple_defect, Kappa};
use barylab::hugging::{extendibility_kmin, hugging_value, support_extendibility, variance_equality_residual};
use barylab::ratelab::{self, fmt_num, RateExperimentConfig};
use barylab::space::distance;
use barylab::{rng, SpaceKind, SpacePoint};
use rand::Rng;
use serde::Serialize;
use serde_json::Value;

use crate::config::{BarycenterConfig, CurvatureConfig, HuggingConfig, TailConfig};
use crate::error::CliError;
use crate::plot;

/// Slack of the hugging lower bound.
pub const HUGGING_TOL: f64 = 1e-7;
/// Slack of the comparison-geometry checks.
pub const CURVATURE_TOL: f64 = 1e-9;

pub const HUGGING_CSV_HEADER: &str = "space,index,k_value,k_min_bound,lambda_in,lambda_out,variance_eq_residual,seed";
pub const CURVATURE_CSV_HEADER: &str =
    "space,index,kappa,quadruple_defect,monotonicity_violation,cone_distance,distance,seed";

/// Artifacts and checks of one subcommand.
#[derive(Debug, Default)]
pub struct Outcome {
    /// File name and contents.
    pub files: Vec<(String, String)>,
    pub config: Value,
    pub master_seed: Option<u64>,
    /// Failed bound checks; fatal only under `--strict-bounds`.
    pub violations: Vec<String>,
    /// Failure that still leaves the artifacts worth writing.
    pub failure: Option<CliError>,
    pub summary: String,
}

fn echo<T: Serialize>(config: &T) -> Value {
    serde_json::to_value(config).unwrap_or(Value::Null)
}

pub fn rates(mut config: RateExperimentConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    if let Some(s) = seed {
        config.master_seed = s;
    }
    let curve = ratelab::run_rate_experiment(&config)?;
    let violations = curve
        .records
        .iter()
        .filter(|r| !r.within_bound)
        .map(|r| format!("n={}: mean_sq_dist {} exceeds bound {} (stderr {})", r.n, r.mean_sq_dist, r.bound, r.stderr))
        .collect();
    let slope = ratelab::fit_loglog_slope(&curve).map(|s| format!(", slope {s:.4}")).unwrap_or_default();
    let ratios: Vec<String> = curve.records.iter().map(|r| format!("{}:{:.3}", r.n, r.ratio)).collect();
    Ok(Outcome {
        files: vec![("rates.csv".into(), ratelab::rates_csv(&curve))],
        config: echo(&config),
        master_seed: Some(config.master_seed),
        violations,
        failure: None,
        summary: format!("{} {}: k={:.4} ratios [{}]{slope}", curve.space, curve.theorem.name(), curve.k_used, ratios.join(" ")),
    })
}

pub fn tail(mut config: TailConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    if let Some(s) = seed {
        config.master_seed = s;
    }
    let results = ratelab::run_tail_experiments(&config.experiment(), &config.deltas, config.varsigma2, &config.pk)?;
    let violations = results
        .iter()
        .filter(|r| !r.within_bound)
        .map(|r| {
            format!(
                "n={} delta={}: exceedance {} above {} (stderr {})",
                r.n, r.delta, r.empirical_exceedance, r.bound_probability, r.exceedance_stderr
            )
        })
        .collect();
    let space = config.family.kind().name();
    let summary = match results.first() {
        Some(r) => format!("{space} tail: c1={:.4} c2={:.4} pk_used={:.4}, {} rows", r.c1_used, r.c2_used, r.pk_used, results.len()),
        None => format!("{space} tail: no rows"),
    };
    Ok(Outcome {
        files: vec![("tail.csv".into(), ratelab::tail_csv(space, config.master_seed, &results))],
        config: echo(&config),
        master_seed: Some(config.master_seed),
        violations,
        failure: None,
        summary,
    })
}

pub fn hugging(mut config: HuggingConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    if let Some(s) = seed {
        config.master_seed = s;
    }
    let seed = config.master_seed;
    let support = config.family.sample_n(config.support_size, &mut rng::stream(seed, &[0]))?;
    let p = DiscreteDistribution::uniform(support)?;
    let bs = converged(barycenter(&p, &config.solver)?)?;
    let ext = support_extendibility(&p, &bs)?;
    let k_min = extendibility_kmin(ext.lambda_in, ext.lambda_out)?;
    let space = config.family.kind().name();
    let mut csv = format!("{HUGGING_CSV_HEADER}\n");
    let mut violations = Vec::new();
    let mut lo = f64::INFINITY;
    for i in 0..config.triples {
        let mut r = rng::stream(seed, &[1, i as u64]);
        let b = config.family.draw(&mut r);
        let x = &p.points()[r.random_range(0..p.len())];
        let k = hugging_value(&bs, &b, x)?;
        let residual = variance_equality_residual(&p, &bs, &b)?;
        let residual_limit = (10.0 * config.solver.tol * distance(&b, &bs)?).max(1e-8);
        if k < k_min - HUGGING_TOL {
            violations.push(format!("triple {i}: k {k} below bound {k_min}"));
        }
        if residual.abs() > residual_limit {
            violations.push(format!("triple {i}: variance-equality residual {residual:e} above {residual_limit:e}"));
        }
        lo = lo.min(k);
        csv.push_str(&format!(
            "{space},{i},{},{},{},{},{},{seed}\n",
            fmt_num(k),
            fmt_num(k_min),
            fmt_num(ext.lambda_in),
            fmt_num(ext.lambda_out),
            fmt_num(residual)
        ));
    }
    Ok(Outcome {
        files: vec![("hugging.csv".into(), csv)],
        config: echo(&config),
        master_seed: Some(seed),
        violations,
        failure: None,
        summary: format!("{space} hugging: min k {lo:.6}, bound {k_min:.6}"),
    })
}

fn converged(r: BarycenterResult) -> Result<SpacePoint, CliError> {
    if r.converged {
        Ok(r.point)
    } else {
        Err(barylab::Error::NotConverged { iters: r.iters, grad_norm: r.grad_norm }.into())
    }
}

pub fn curvature(mut config: CurvatureConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    if let Some(s) = seed {
        config.master_seed = s;
    }
    let seed = config.master_seed;
    let kappa = Kappa::new(config.kappa_value())?;
    let kind = config.family.kind();
    let space = kind.name();
    let mut csv = format!("{CURVATURE_CSV_HEADER}\n");
    let mut violations = Vec::new();
    let (mut min_defect, mut max_viol) = (f64::INFINITY, 0.0_f64);
    for i in 0..config.quadruples {
        let mut r = rng::stream(seed, &[i as u64]);
        let q: Vec<SpacePoint> = (0..4).map(|_| config.family.draw(&mut r)).collect();
        let defect = quadruple_defect(&q[0], &q[1], &q[2], &q[3], kappa)?;
        let viol = angle_monotonicity_probe(&q[0], &q[1], &q[2], kappa, &config.grid)?.max_violation;
        let cone = cone_distance(&q[0], &q[1], &q[2])?;
        let d = distance(&q[1], &q[2])?;
        if defect < -CURVATURE_TOL {
            violations.push(format!("quadruple {i}: defect {defect:e}"));
        }
        if viol > CURVATURE_TOL {
            violations.push(format!("quadruple {i}: monotonicity violation {viol:e}"));
        }
        if !cone_ok(kind, cone, d) {
            violations.push(format!("quadruple {i}: cone distance {cone} against distance {d}"));
        }
        min_defect = min_defect.min(defect);
        max_viol = max_viol.max(viol);
        csv.push_str(&format!(
            "{space},{i},{},{},{},{},{},{seed}\n",
            fmt_num(kappa.value()),
            fmt_num(defect),
            fmt_num(viol),
            fmt_num(cone),
            fmt_num(d)
        ));
    }
    Ok(Outcome {
        files: vec![("curvature.csv".into(), csv)],
        config: echo(&config),
        master_seed: Some(seed),
        violations,
        failure: None,
        summary: format!("{space} curvature (kappa {}): min defect {min_defect:.3e}, max violation {max_viol:.3e}", kappa.value()),
    })
}

/// Cone distances dominate distances under nonnegative curvature and are
/// dominated by them under nonpositive curvature.
fn cone_ok(kind: SpaceKind, cone: f64, d: f64) -> bool {
    (!kind.is_nonnegatively_curved() || cone >= d - CURVATURE_TOL)
        && (!kind.is_nonpositively_curved() || cone <= d + CURVATURE_TOL)
}

pub fn barycenter_solve(config: BarycenterConfig) -> Result<Outcome, CliError> {
    let p = config.distribution()?;
    let r = barycenter(&p, &config.solver)?;
    let json = serde_json::to_string_pretty(&r).map_err(|e| CliError::io("barycenter.json", e))? + "\n";
    let failure = (!r.converged)
        .then(|| barylab::Error::NotConverged { iters: r.iters, grad_norm: r.grad_norm }.into());
    Ok(Outcome {
        files: vec![("barycenter.json".into(), json)],
        config: echo(&config),
        master_seed: None,
        violations: Vec::new(),
        failure,
        summary: format!("{} barycenter: objective {:.10}, grad norm {:.3e}, {} iterations", p.kind(), r.objective, r.grad_norm, r.iters),
    })
}

pub fn plot(inputs: &[PathBuf]) -> Result<Outcome, CliError> {
    let mut series = Vec::new();
    for path in inputs {
        series.extend(plot::read_rates_csv(path)?);
    }
    let svg = plot::render_svg(&series)?;
    Ok(Outcome {
        files: vec![("plot.svg".into(), svg)],
        config: serde_json::json!({ "inputs": inputs }),
        master_seed: None,
        violations: Vec::new(),
        failure: None,
        summary: format!("{} series", series.len()),
    })
}
