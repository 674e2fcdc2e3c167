//! Python bindings: `import olps`.
//!
//! Matrices cross the boundary as small wrapper classes; vectors as lists of
//! floats. Invalid parameters raise `ValueError`, unreadable files `OSError`.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use olps_core as core;
use olps_core::{CostModel, MarketScenario, StrategyKind, StrategySpec};

fn to_py(err: core::Error) -> PyErr {
    match err {
        core::Error::Io { .. } => PyIOError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

fn rows_of(values: &[f64], m: usize) -> Vec<Vec<f64>> {
    values.chunks(m).map(<[f64]>::to_vec).collect()
}

/// Closing prices, one row per trading day.
#[pyclass(frozen, skip_from_py_object, name = "PriceMatrix", module = "olps")]
#[derive(Clone)]
pub struct PyPriceMatrix(core::PriceMatrix);

#[pymethods]
impl PyPriceMatrix {
    #[new]
    #[pyo3(signature = (rows, names, dates))]
    fn new(rows: Vec<Vec<f64>>, names: Vec<String>, dates: Vec<String>) -> PyResult<Self> {
        core::PriceMatrix::from_rows(names, dates, &rows)
            .map(PyPriceMatrix)
            .map_err(to_py)
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.0.names().to_vec()
    }

    #[getter]
    fn dates(&self) -> Vec<String> {
        self.0.dates().to_vec()
    }

    /// `(days, assets)`.
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.n_days(), self.0.n_assets())
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        self.0.rows().map(<[f64]>::to_vec).collect()
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.0.save(path).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "PriceMatrix({} days x {} assets)",
            self.0.n_days(),
            self.0.n_assets()
        )
    }
}

/// Daily price relatives `p_t / p_{t-1}`.
#[pyclass(frozen, skip_from_py_object, name = "RelativeMatrix", module = "olps")]
#[derive(Clone)]
pub struct PyRelativeMatrix(core::RelativeMatrix);

#[pymethods]
impl PyRelativeMatrix {
    #[new]
    #[pyo3(signature = (rows, names=None, dates=None))]
    fn new(
        rows: Vec<Vec<f64>>,
        names: Option<Vec<String>>,
        dates: Option<Vec<String>>,
    ) -> PyResult<Self> {
        let matrix = match (names, dates) {
            (None, None) => core::RelativeMatrix::from_unlabelled_rows(&rows),
            (names, dates) => {
                let m = rows.first().map_or(0, Vec::len);
                let names = names.unwrap_or_else(|| (0..m).map(|j| format!("A{j}")).collect());
                let dates =
                    dates.unwrap_or_else(|| (1..=rows.len()).map(|t| format!("d{t:06}")).collect());
                core::RelativeMatrix::from_rows(names, dates, &rows)
            }
        };
        matrix.map(PyRelativeMatrix).map_err(to_py)
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.0.names().to_vec()
    }

    #[getter]
    fn dates(&self) -> Vec<String> {
        self.0.dates().to_vec()
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.0.n_days(), self.0.n_assets())
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        rows_of(self.0.values(), self.0.n_assets())
    }

    /// The single-asset matrix for the named column.
    fn column(&self, name: &str) -> PyResult<Self> {
        self.0
            .select_by_name(name)
            .map(PyRelativeMatrix)
            .map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.0.save(path).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "RelativeMatrix({} days x {} assets)",
            self.0.n_days(),
            self.0.n_assets()
        )
    }
}

/// A strategy with its parameters.
///
/// `Strategy("olmar", epsilon=10, window=5)`. Unset parameters take the
/// library defaults.
#[pyclass(frozen, skip_from_py_object, name = "Strategy", module = "olps")]
#[derive(Clone)]
pub struct PyStrategy(StrategySpec);

#[pymethods]
impl PyStrategy {
    #[new]
    #[pyo3(signature = (name, *, epsilon=None, window=None, eta=None, lam=None, tco2_literal=false))]
    fn new(
        name: &str,
        epsilon: Option<f64>,
        window: Option<usize>,
        eta: Option<f64>,
        lam: Option<f64>,
        tco2_literal: bool,
    ) -> PyResult<Self> {
        let mut spec = StrategySpec::new(name.parse::<StrategyKind>().map_err(to_py)?);
        if let Some(e) = epsilon {
            spec.epsilon = e;
        }
        if let Some(w) = window {
            spec.window = w;
        }
        if let Some(e) = eta {
            spec.eta = e;
        }
        spec.lambda = lam;
        spec.tco2_divide_by_relatives = tco2_literal;
        spec.validate().map_err(to_py)?;
        Ok(PyStrategy(spec))
    }

    /// Every strategy at its defaults.
    #[staticmethod]
    fn all() -> Vec<PyStrategy> {
        StrategyKind::ALL
            .into_iter()
            .map(|k| PyStrategy(StrategySpec::new(k)))
            .collect()
    }

    #[getter]
    fn name(&self) -> &'static str {
        self.0.kind.name()
    }

    #[getter]
    fn epsilon(&self) -> f64 {
        self.0.epsilon
    }

    #[getter]
    fn window(&self) -> usize {
        self.0.window
    }

    #[getter]
    fn eta(&self) -> f64 {
        self.0.eta
    }

    #[pyo3(signature = (data, gamma=0.0))]
    fn run(&self, data: &PyRelativeMatrix, gamma: f64) -> PyResult<PyBacktestResult> {
        run_backtest(data, self, gamma)
    }

    fn __repr__(&self) -> String {
        format!("Strategy({:?})", self.0.kind.name())
    }
}

/// Outcome of one backtest: per-day records and the final wealth.
#[pyclass(frozen, name = "BacktestResult", module = "olps")]
pub struct PyBacktestResult(core::BacktestResult);

#[pymethods]
impl PyBacktestResult {
    #[getter]
    fn strategy(&self) -> &'static str {
        self.0.strategy.kind.name()
    }

    #[getter]
    fn gamma(&self) -> f64 {
        self.0.gamma
    }

    #[getter]
    fn final_wealth(&self) -> f64 {
        self.0.final_wealth
    }

    #[getter]
    fn ruined(&self) -> bool {
        self.0.ruined
    }

    #[getter]
    fn wealth(&self) -> Vec<f64> {
        self.0.wealth_path()
    }

    #[getter]
    fn turnover(&self) -> Vec<f64> {
        self.0.records.iter().map(|r| r.turnover).collect()
    }

    #[getter]
    fn net_returns(&self) -> Vec<f64> {
        self.0.records.iter().map(|r| r.net_return).collect()
    }

    /// Portfolio held on each day.
    #[getter]
    fn portfolios(&self) -> Vec<Vec<f64>> {
        self.0.records.iter().map(|r| r.target.to_vec()).collect()
    }

    fn __repr__(&self) -> String {
        format!(
            "BacktestResult({}, gamma={}, final_wealth={})",
            self.0.strategy.kind.name(),
            self.0.gamma,
            core::format_wealth(self.0.final_wealth)
        )
    }
}

#[pyfunction]
fn load_prices(path: &str) -> PyResult<PyPriceMatrix> {
    core::load_prices(path).map(PyPriceMatrix).map_err(to_py)
}

#[pyfunction]
fn load_relatives(path: &str) -> PyResult<PyRelativeMatrix> {
    core::load_relatives(path)
        .map(PyRelativeMatrix)
        .map_err(to_py)
}

#[pyfunction]
fn to_relatives(prices: &PyPriceMatrix) -> PyResult<PyRelativeMatrix> {
    core::to_relatives(&prices.0)
        .map(PyRelativeMatrix)
        .map_err(to_py)
}

/// Euclidean projection onto the probability simplex.
#[pyfunction]
fn project_simplex(v: Vec<f64>) -> PyResult<Vec<f64>> {
    core::numerics::project_simplex(&v)
        .map(core::Portfolio::into_inner)
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (data, strategy, gamma=0.0))]
fn run_backtest(
    data: &PyRelativeMatrix,
    strategy: &PyStrategy,
    gamma: f64,
) -> PyResult<PyBacktestResult> {
    let cost = CostModel::new(gamma).map_err(to_py)?;
    core::run(&data.0, &strategy.0, cost)
        .map(PyBacktestResult)
        .map_err(to_py)
}

/// Period, size and extreme relatives as a dict.
#[pyfunction]
#[pyo3(signature = (data, name="data"))]
fn describe<'py>(
    py: Python<'py>,
    data: &PyRelativeMatrix,
    name: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let s = core::describe(&data.0, name);
    let d = PyDict::new(py);
    d.set_item("name", s.name)?;
    d.set_item("period", s.period)?;
    d.set_item("days", s.days)?;
    d.set_item("assets", s.assets)?;
    d.set_item("max", s.max_relative)?;
    d.set_item("min", s.min_relative)?;
    Ok(d)
}

#[pyfunction]
fn split_universe(prices: &PyPriceMatrix, k: usize) -> PyResult<Vec<PyPriceMatrix>> {
    core::split_universe(&prices.0, k)
        .map(|groups| groups.into_iter().map(PyPriceMatrix).collect())
        .map_err(to_py)
}

/// Synthetic prices. `process` is `alternating` (params `up`, `down`),
/// `random-walk` (`drift`, `volatility`) or `mean-reverting`
/// (`speed`, `volatility`).
#[pyfunction]
#[pyo3(signature = (process, days, assets, seed=0, **params))]
fn synth_market(
    process: &str,
    days: usize,
    assets: usize,
    seed: u64,
    params: Option<&Bound<'_, PyDict>>,
) -> PyResult<PyPriceMatrix> {
    let get = |key: &str, default: f64| -> PyResult<f64> {
        match params.map(|p| p.get_item(key)).transpose()?.flatten() {
            Some(v) => v.extract(),
            None => Ok(default),
        }
    };
    let scenario = match process {
        "alternating" => MarketScenario {
            days,
            assets,
            process: core::PriceProcess::Alternating {
                up: get("up", 2.0)?,
                down: get("down", 0.5)?,
            },
        },
        "random-walk" => {
            MarketScenario::random_walk(days, assets, get("drift", 0.0)?, get("volatility", 0.02)?)
        }
        "mean-reverting" => MarketScenario::mean_reverting(
            days,
            assets,
            get("speed", 0.1)?,
            get("volatility", 0.02)?,
        ),
        other => {
            return Err(PyValueError::new_err(format!("unknown process {other:?}")));
        }
    };
    core::synth_market(&scenario, seed)
        .map(PyPriceMatrix)
        .map_err(to_py)
}

/// Wealth of holding one asset only on days after it fell.
#[pyfunction]
fn down_day_probe(data: &PyRelativeMatrix) -> PyResult<f64> {
    core::down_day_probe(&data.0).map_err(to_py)
}

/// Table formatting: two decimals, or `d.dde+dd` outside [0.005, 1000).
#[pyfunction]
fn format_wealth(value: f64) -> String {
    core::format_wealth(value)
}

#[pymodule]
pub fn olps(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyPriceMatrix>()?;
    m.add_class::<PyRelativeMatrix>()?;
    m.add_class::<PyStrategy>()?;
    m.add_class::<PyBacktestResult>()?;
    m.add_function(wrap_pyfunction!(load_prices, m)?)?;
    m.add_function(wrap_pyfunction!(load_relatives, m)?)?;
    m.add_function(wrap_pyfunction!(to_relatives, m)?)?;
    m.add_function(wrap_pyfunction!(project_simplex, m)?)?;
    m.add_function(wrap_pyfunction!(run_backtest, m)?)?;
    m.add_function(wrap_pyfunction!(describe, m)?)?;
    m.add_function(wrap_pyfunction!(split_universe, m)?)?;
    m.add_function(wrap_pyfunction!(synth_market, m)?)?;
    m.add_function(wrap_pyfunction!(down_day_probe, m)?)?;
    m.add_function(wrap_pyfunction!(format_wealth, m)?)?;
    Ok(())
}
