//! Python bindings: points, distances, barycenters, hugging values,
//! comparison angles and rate experiments.

use barylab::barycenter::{self as bary, DiscreteDistribution, SolverOptions};
use barylab::comparison::{self, Kappa, TriangleSides};
use barylab::hugging;
use barylab::ratelab::{self, RateExperimentConfig};
use barylab::space;
use barylab::SpacePoint;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A point of one of the model spaces.
#[pyclass(name = "Point", module = "pybarylab", frozen, from_py_object)]
#[derive(Clone)]
struct Point(SpacePoint);

#[pymethods]
impl Point {
    /// Parses the JSON point schema, e.g. `{"space": "sphere", "coords": [0, 0, 1]}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Point).map_err(err)
    }

    #[staticmethod]
    fn euclidean(coords: Vec<f64>) -> PyResult<Self> {
        SpacePoint::euclidean(coords).map(Point).map_err(err)
    }

    #[staticmethod]
    fn sphere(coords: Vec<f64>) -> PyResult<Self> {
        SpacePoint::sphere(coords).map(Point).map_err(err)
    }

    /// Hyperboloid point from its spatial coordinates.
    #[staticmethod]
    fn hyperbolic(spatial: Vec<f64>) -> PyResult<Self> {
        SpacePoint::hyperbolic_from_spatial(&spatial).map(Point).map_err(err)
    }

    #[staticmethod]
    fn quantile(values: Vec<f64>) -> PyResult<Self> {
        SpacePoint::quantile(values).map(Point).map_err(err)
    }

    #[staticmethod]
    fn gaussian(mean: Vec<f64>, cov: Vec<Vec<f64>>) -> PyResult<Self> {
        let text = serde_json::json!({ "space": "gaussian", "mean": mean, "cov": cov }).to_string();
        Self::from_json(&text)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(err)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind().name()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    /// Ambient coordinates; `None` for Gaussian points.
    #[getter]
    fn coords(&self) -> Option<Vec<f64>> {
        self.0.coords().map(<[f64]>::to_vec)
    }

    fn __repr__(&self) -> String {
        format!("Point({})", serde_json::to_string(&self.0).unwrap_or_default())
    }

    fn __eq__(&self, other: &Point) -> bool {
        self.0 == other.0
    }
}

fn inner(points: Vec<Point>) -> Vec<SpacePoint> {
    points.into_iter().map(|p| p.0).collect()
}

#[pyfunction]
fn distance(x: &Point, y: &Point) -> PyResult<f64> {
    space::distance(&x.0, &y.0).map_err(err)
}

/// `|log_p(x)|`, which equals `distance(p, x)` off the cut locus.
#[pyfunction]
fn log_norm(p: &Point, x: &Point) -> PyResult<f64> {
    space::log_map(&p.0, &x.0).map(|v| v.magnitude()).map_err(err)
}

/// Point at fraction `t` of the geodesic from `x` to `y`.
#[pyfunction]
fn geodesic_point(x: &Point, y: &Point, t: f64) -> PyResult<Point> {
    space::geodesic(&x.0, &y.0).map(|g| Point(g.at(t))).map_err(err)
}

/// Weighted barycenter; weights default to uniform.
#[pyfunction]
#[pyo3(signature = (points, weights=None, tol=1e-10, max_iters=10_000, step=1.0))]
fn barycenter<'py>(
    py: Python<'py>,
    points: Vec<Point>,
    weights: Option<Vec<f64>>,
    tol: f64,
    max_iters: usize,
    step: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let pts = inner(points);
    let p = match weights {
        Some(w) => DiscreteDistribution::new(pts, w),
        None => DiscreteDistribution::uniform(pts),
    }
    .map_err(err)?;
    let opts = SolverOptions { max_iters, tol, step };
    let r = py.detach(|| bary::barycenter(&p, &opts)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("point", Point(r.point))?;
    d.set_item("objective", r.objective)?;
    d.set_item("grad_norm", r.grad_norm)?;
    d.set_item("iters", r.iters)?;
    d.set_item("converged", r.converged)?;
    Ok(d)
}

/// Uniform-weight variance `sum_i w_i d^2(b, x_i)`.
#[pyfunction]
fn variance(points: Vec<Point>, b: &Point) -> PyResult<f64> {
    let p = DiscreteDistribution::uniform(inner(points)).map_err(err)?;
    bary::variance(&p, &b.0).map_err(err)
}

/// Hugging function `k^b_{b_star}(x)`.
#[pyfunction]
fn hugging_value(b_star: &Point, b: &Point, x: &Point) -> PyResult<f64> {
    hugging::hugging_value(&b_star.0, &b.0, &x.0).map_err(err)
}

/// Lower bound on the hugging function from extension parameters.
#[pyfunction]
fn extendibility_kmin(lambda_in: f64, lambda_out: f64) -> PyResult<f64> {
    hugging::extendibility_kmin(lambda_in, lambda_out).map_err(err)
}

/// `1 - beta + alpha` for transport potentials with curvature in `[alpha, beta]`.
#[pyfunction]
fn wasserstein_kmin(alpha: f64, beta: f64) -> PyResult<f64> {
    hugging::wasserstein_kmin(alpha, beta).map_err(err)
}

/// Comparison angle at `p` in the model plane of curvature `kappa`.
#[pyfunction]
fn comparison_angle(kappa: f64, d_px: f64, d_py: f64, d_xy: f64) -> PyResult<f64> {
    let sides = TriangleSides::new(d_px, d_py, d_xy).map_err(err)?;
    comparison::comparison_angle(Kappa::new(kappa).map_err(err)?, sides).map_err(err)
}

#[pyfunction]
fn quadruple_defect(p: &Point, x: &Point, y: &Point, z: &Point, kappa: f64) -> PyResult<f64> {
    comparison::quadruple_defect(&p.0, &x.0, &y.0, &z.0, Kappa::new(kappa).map_err(err)?).map_err(err)
}

/// Runs a rate experiment from its JSON config; returns the curve as a dict
/// with an extra `csv` entry.
#[pyfunction]
fn run_rate_experiment<'py>(py: Python<'py>, config_json: &str) -> PyResult<Bound<'py, PyAny>> {
    let config: RateExperimentConfig = serde_json::from_str(config_json).map_err(err)?;
    let curve = py.detach(|| ratelab::run_rate_experiment(&config)).map_err(err)?;
    let mut value = serde_json::to_value(&curve).map_err(err)?;
    value["csv"] = serde_json::Value::String(ratelab::rates_csv(&curve));
    py.import("json")?.call_method1("loads", (value.to_string(),))
}

#[pymodule]
fn pybarylab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", barylab::VERSION)?;
    m.add_class::<Point>()?;
    m.add_function(wrap_pyfunction!(distance, m)?)?;
    m.add_function(wrap_pyfunction!(log_norm, m)?)?;
    m.add_function(wrap_pyfunction!(geodesic_point, m)?)?;
    m.add_function(wrap_pyfunction!(barycenter, m)?)?;
    m.add_function(wrap_pyfunction!(variance, m)?)?;
    m.add_function(wrap_pyfunction!(hugging_value, m)?)?;
    m.add_function(wrap_pyfunction!(extendibility_kmin, m)?)?;
    m.add_function(wrap_pyfunction!(wasserstein_kmin, m)?)?;
    m.add_function(wrap_pyfunction!(comparison_angle, m)?)?;
    m.add_function(wrap_pyfunction!(quadruple_defect, m)?)?;
    m.add_function(wrap_pyfunction!(run_rate_experiment, m)?)?;
    Ok(())
}
