//! Python bindings: grid loading and PTDF flows, quantile-based reserve
//! requirements, the uncertainty set, day-ahead scheduling and the
//! out-of-sample evaluation.

use std::fmt::Display;
use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use resdeploy::evalsim::{evaluate as eval_hour, EvalConfig, GaussianSampler, HourInput, Method, SamplerSpec};
use resdeploy::forecast::{self, QuantileMethod, ReserveRequirement, ScenarioSet};
use resdeploy::grid::{read_grid_csv, read_grid_json, GridModel};
use resdeploy::robust::{enumerate_vertices, DEFAULT_VERTEX_CAP};
use resdeploy::scheduling::{solve_da, solve_master, ScheduleOptions};

fn value_err(e: impl Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn solver_err(e: impl Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn parse_quantile(s: &str) -> Result<QuantileMethod, String> {
    match s {
        "linear" => Ok(QuantileMethod::Linear),
        "nearest-rank" => Ok(QuantileMethod::NearestRank),
        _ => Err(format!("unknown quantile method {s:?} (expected linear or nearest-rank)")),
    }
}

fn parse_methods(names: &[String]) -> Result<Vec<Method>, String> {
    names.iter().map(|n| n.parse()).collect()
}

fn check_dim(what: &str, got: usize, want: usize) -> PyResult<()> {
    if got == want {
        Ok(())
    } else {
        Err(value_err(format!("{what} has length {got}, expected {want}")))
    }
}

fn scenario_set(errors: Vec<Vec<f64>>) -> Result<ScenarioSet, forecast::ForecastError> {
    let n = errors.first().map_or(0, Vec::len);
    ScenarioSet::new(errors, vec![0.0; n], None)
}

/// DC network with its PTDF matrix.
#[pyclass(name = "Grid", frozen)]
struct PyGrid {
    inner: GridModel,
}

#[pymethods]
impl PyGrid {
    /// Reads `nodes.csv`, `lines.csv` and `generators.csv` from a directory.
    #[staticmethod]
    fn from_csv(dir: PathBuf) -> PyResult<Self> {
        read_grid_csv(&dir).map(|inner| PyGrid { inner }).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(path: PathBuf) -> PyResult<Self> {
        read_grid_json(&path).map(|inner| PyGrid { inner }).map_err(value_err)
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.inner.num_nodes()
    }

    #[getter]
    fn num_lines(&self) -> usize {
        self.inner.num_lines()
    }

    #[getter]
    fn node_ids(&self) -> Vec<u32> {
        self.inner.nodes().iter().map(|n| n.id).collect()
    }

    #[getter]
    fn line_ids(&self) -> Vec<String> {
        self.inner.lines().iter().map(|l| l.id.clone()).collect()
    }

    #[getter]
    fn slack(&self) -> u32 {
        self.inner.slack()
    }

    /// Rows are lines, columns nodes.
    fn ptdf(&self) -> Vec<Vec<f64>> {
        let m = self.inner.ptdf();
        (0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect()
    }

    /// Line flows, MW, for balanced nodal injections.
    fn flows(&self, injection: Vec<f64>) -> PyResult<Vec<f64>> {
        check_dim("injection", injection.len(), self.inner.num_nodes())?;
        Ok(self.inner.flows(&injection))
    }

    fn __repr__(&self) -> String {
        format!(
            "Grid(nodes={}, lines={}, generators={})",
            self.inner.num_nodes(),
            self.inner.num_lines(),
            self.inner.num_generators()
        )
    }
}

/// Box of per-node quantile bounds cut by two aggregate limits.
#[pyclass(name = "UncertaintySet", frozen)]
struct PySet {
    inner: forecast::UncertaintySet,
}

#[pymethods]
impl PySet {
    #[new]
    fn new(lower: Vec<f64>, upper: Vec<f64>, rho_minus: f64, rho_plus: f64) -> PyResult<Self> {
        forecast::UncertaintySet::new(lower, upper, rho_minus, rho_plus)
            .map(|inner| PySet { inner })
            .map_err(value_err)
    }

    /// Set built from error scenarios (one row per scenario) at level `alpha`.
    #[staticmethod]
    #[pyo3(signature = (errors, alpha, quantile = "linear"))]
    fn from_scenarios(errors: Vec<Vec<f64>>, alpha: f64, quantile: &str) -> PyResult<Self> {
        let q = parse_quantile(quantile).map_err(value_err)?;
        let s = scenario_set(errors).map_err(value_err)?;
        let req = forecast::reserve_requirements(&s, alpha, q).map_err(value_err)?;
        forecast::UncertaintySet::from_scenarios(&s, &req)
            .map(|inner| PySet { inner })
            .map_err(value_err)
    }

    #[getter]
    fn lower(&self) -> Vec<f64> {
        self.inner.lower().to_vec()
    }

    #[getter]
    fn upper(&self) -> Vec<f64> {
        self.inner.upper().to_vec()
    }

    #[getter]
    fn rho_minus(&self) -> f64 {
        self.inner.rho_minus()
    }

    #[getter]
    fn rho_plus(&self) -> f64 {
        self.inner.rho_plus()
    }

    #[pyo3(signature = (xi, tol = 1e-8))]
    fn contains(&self, xi: Vec<f64>, tol: f64) -> PyResult<bool> {
        check_dim("xi", xi.len(), self.inner.dim())?;
        Ok(self.inner.contains(&xi, tol))
    }

    /// Nearest point of the set.
    fn project(&self, xi: Vec<f64>) -> PyResult<Vec<f64>> {
        check_dim("xi", xi.len(), self.inner.dim())?;
        Ok(self.inner.project(&xi))
    }

    /// `(argmax, max)` of `w . xi` over the set.
    fn maximize_linear(&self, w: Vec<f64>) -> PyResult<(Vec<f64>, f64)> {
        check_dim("w", w.len(), self.inner.dim())?;
        Ok(self.inner.maximize_linear(&w))
    }

    #[pyo3(signature = (cap = DEFAULT_VERTEX_CAP))]
    fn vertices(&self, cap: usize) -> PyResult<Vec<Vec<f64>>> {
        enumerate_vertices(&self.inner, &self.inner.uncertain_nodes(), cap).map_err(value_err)
    }
}

/// `(rho_plus, rho_minus)`: upper and lower `(1 -+ alpha) / 2` quantiles of
/// the aggregate error.
#[pyfunction]
#[pyo3(signature = (errors, alpha, quantile = "linear"))]
fn reserve_requirements(errors: Vec<Vec<f64>>, alpha: f64, quantile: &str) -> PyResult<(f64, f64)> {
    let q = parse_quantile(quantile).map_err(value_err)?;
    let s = scenario_set(errors).map_err(value_err)?;
    let r = forecast::reserve_requirements(&s, alpha, q).map_err(value_err)?;
    Ok((r.rho_plus, r.rho_minus))
}

#[pyfunction]
#[pyo3(signature = (samples, u, quantile = "linear"))]
fn empirical_quantile(samples: Vec<f64>, u: f64, quantile: &str) -> PyResult<f64> {
    let q = parse_quantile(quantile).map_err(value_err)?;
    forecast::empirical_quantile(&samples, u, q).map_err(value_err)
}

/// `k` Gaussian error vectors of length `num_nodes` (MW); `covariance` is
/// per unit of `base_mva` over the node positions `nodes`.
#[pyfunction]
#[pyo3(signature = (covariance, nodes, num_nodes, k, seed, base_mva = 100.0))]
fn sample_errors(
    covariance: Vec<Vec<f64>>,
    nodes: Vec<usize>,
    num_nodes: usize,
    k: usize,
    seed: u64,
    base_mva: f64,
) -> PyResult<Vec<Vec<f64>>> {
    let spec = SamplerSpec {
        covariance,
        nodes,
        num_nodes,
        base_mva,
        seed,
    };
    Ok(GaussianSampler::from_spec(&spec).map_err(value_err)?.draw(k))
}

/// Day-ahead energy and reserves. With `scenarios`, the redispatch of each
/// is priced in the same problem; its residual violation cost is `eta`.
#[pyfunction]
#[pyo3(signature = (grid, d_hat, rho_plus, rho_minus, scenarios = None, c_viol = 1000.0))]
fn solve_day_ahead<'py>(
    py: Python<'py>,
    grid: &PyGrid,
    d_hat: Vec<f64>,
    rho_plus: f64,
    rho_minus: f64,
    scenarios: Option<Vec<Vec<f64>>>,
    c_viol: f64,
) -> PyResult<Bound<'py, PyDict>> {
    check_dim("d_hat", d_hat.len(), grid.inner.num_nodes())?;
    let req = ReserveRequirement {
        rho_plus,
        rho_minus,
        // Only the two limits enter the schedule.
        alpha: f64::NAN,
    };
    let opts = ScheduleOptions {
        c_viol,
        ..ScheduleOptions::default()
    };
    let da = py
        .detach(|| match &scenarios {
            Some(s) => solve_master(&grid.inner, &d_hat, &req, s, &opts),
            None => solve_da(&grid.inner, &d_hat, &req, &opts),
        })
        .map_err(solver_err)?;
    let d = PyDict::new(py);
    d.set_item("p", &da.p)?;
    d.set_item("r_plus", &da.r_plus)?;
    d.set_item("r_minus", &da.r_minus)?;
    d.set_item("flows", &da.flows)?;
    d.set_item("da_cost", da.da_cost)?;
    d.set_item("eta", da.eta)?;
    d.set_item("objective", da.objective)?;
    d.set_item("scenario_costs", &da.scenario_costs)?;
    Ok(d)
}

/// Runs the method comparison on one hour and returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (grid, d_hat, train, test, alpha = 0.95, methods = None))]
fn evaluate(
    py: Python<'_>,
    grid: &PyGrid,
    d_hat: Vec<f64>,
    train: Vec<Vec<f64>>,
    test: Vec<Vec<f64>>,
    alpha: f64,
    methods: Option<Vec<String>>,
) -> PyResult<String> {
    let n = grid.inner.num_nodes();
    check_dim("d_hat", d_hat.len(), n)?;
    for xi in &test {
        check_dim("test scenario", xi.len(), n)?;
    }
    let methods = match methods {
        Some(m) => parse_methods(&m).map_err(value_err)?,
        None => Method::ALL.to_vec(),
    };
    let train = ScenarioSet::new(train, d_hat, None).map_err(value_err)?;
    let input = HourInput { hour: 0, train, test };
    let cfg = EvalConfig {
        alpha,
        ..EvalConfig::default()
    };
    let report = py.detach(|| eval_hour(&grid.inner, &methods, &input, &cfg));
    serde_json::to_string(&report).map_err(solver_err)
}

#[pymodule]
fn pyresdeploy(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrid>()?;
    m.add_class::<PySet>()?;
    m.add_function(wrap_pyfunction!(reserve_requirements, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(sample_errors, m)?)?;
    m.add_function(wrap_pyfunction!(solve_day_ahead, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_parse() {
        assert_eq!(parse_quantile("nearest-rank"), Ok(QuantileMethod::NearestRank));
        assert!(parse_quantile("median").is_err());
        let m = parse_methods(&["DSW".into(), "ccg".into()]).unwrap();
        assert_eq!(m, [Method::Dsw, Method::Ccg]);
        assert!(parse_methods(&["x".into()]).unwrap_err().contains("\"x\""));
    }

    #[test]
    fn scenario_rows_set_the_width() {
        let s = scenario_set(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(s.d_hat(), [0.0, 0.0]);
        assert!(scenario_set(vec![]).is_err());
    }
}
