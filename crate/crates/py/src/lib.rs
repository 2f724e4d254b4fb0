//! Python module `bga`.
//!
//! Rates are fractions throughout. Domain failures raise `bga.BgaError`
//! (a `ValueError`) whose args are `(code, message)`.

use bga_core::io::{plan_csv, plan_json, read_dataset, read_plan_json, write_dataset};
use bga_core::{
    self as core, BgaError as CoreError, CatchupProblem, Elasticities, GrowthRates, ObservationRow,
    StrategyMix, TimeSeriesDataset,
};
use indexmap::IndexMap;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList};
use serde_json::Value;

create_exception!(bga, BgaError, PyValueError, "Backward growth accounting error.");

fn err(e: CoreError) -> PyErr {
    BgaError::new_err((e.code(), e.to_string()))
}

trait OrPy<T> {
    fn py_err(self) -> PyResult<T>;
}

impl<T> OrPy<T> for core::Result<T> {
    fn py_err(self) -> PyResult<T> {
        self.map_err(err)
    }
}

/// Converts a JSON value into plain Python objects.
fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => s.into_pyobject(py)?.into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for item in items {
                list.append(to_py(py, item)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, item) in map {
                dict.set_item(k, to_py(py, item)?)?;
            }
            dict.into_any()
        }
    })
}

fn serde_to_py<'py, T: serde::Serialize>(py: Python<'py>, v: &T) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &serde_json::to_value(v).map_err(|e| err(e.into()))?)
}

#[pyclass(name = "ProductionModel", module = "bga", skip_from_py_object)]
#[derive(Clone)]
pub struct PyModel {
    inner: core::ProductionModel,
}

#[pymethods]
impl PyModel {
    #[new]
    fn new(tfp: f64, elasticities: IndexMap<String, f64>) -> PyResult<Self> {
        Ok(PyModel {
            inner: core::ProductionModel::new(tfp, elasticities).py_err()?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let mut inner: core::ProductionModel =
            serde_json::from_str(text).map_err(|e| err(e.into()))?;
        inner.validate().py_err()?;
        Ok(PyModel { inner })
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("model serializes")
    }

    #[getter]
    fn tfp(&self) -> f64 {
        self.inner.tfp
    }

    #[getter]
    fn elasticities(&self) -> IndexMap<String, f64> {
        self.inner.elasticities.clone()
    }

    #[getter]
    fn crts_imposed(&self) -> bool {
        self.inner.crts_imposed
    }

    #[getter]
    fn residual_variance(&self) -> f64 {
        self.inner.residual_variance
    }

    fn elasticity_sum(&self) -> f64 {
        self.inner.elasticity_sum()
    }

    /// `"CRTS"`, `"DRTS"` or `"IRTS"`.
    fn returns_to_scale(&self) -> String {
        core::classify_rts(&self.inner).label.to_string()
    }

    fn predict(&self, input_levels: IndexMap<String, f64>) -> PyResult<f64> {
        core::predict(&self.inner, &input_levels).py_err()
    }

    fn __repr__(&self) -> String {
        format!("ProductionModel(tfp={}, elasticities={:?})", self.inner.tfp, self.inner.elasticities)
    }
}

#[pyclass(name = "Dataset", module = "bga")]
pub struct PyDataset {
    inner: TimeSeriesDataset,
}

#[pymethods]
impl PyDataset {
    /// Parses `period,<inputs...>,output` CSV text.
    #[staticmethod]
    fn from_csv(text: &str) -> PyResult<Self> {
        Ok(PyDataset {
            inner: read_dataset(text).py_err()?,
        })
    }

    fn to_csv(&self) -> String {
        write_dataset(&self.inner)
    }

    #[getter]
    fn input_ids(&self) -> Vec<String> {
        self.inner.input_ids().map(str::to_string).collect()
    }

    #[getter]
    fn periods(&self) -> Vec<String> {
        self.inner.observations.iter().map(|r| r.period.clone()).collect()
    }

    #[getter]
    fn outputs(&self) -> Vec<f64> {
        self.inner.observations.iter().map(|r| r.output_level).collect()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyclass(name = "GrowthPlan", module = "bga")]
pub struct PyPlan {
    inner: core::GrowthPlan,
}

#[pymethods]
impl PyPlan {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyPlan {
            inner: read_plan_json(text).py_err()?,
        })
    }

    fn to_json(&self) -> String {
        plan_json(&self.inner)
    }

    fn to_csv(&self) -> String {
        plan_csv(&self.inner)
    }

    #[getter]
    fn annual_output_growth(&self) -> f64 {
        self.inner.annual_output_growth
    }

    #[getter]
    fn tfp_growth(&self) -> f64 {
        self.inner.tfp_growth
    }

    #[getter]
    fn common_input_growth(&self) -> f64 {
        self.inner.common_input_growth
    }

    #[getter]
    fn input_growth(&self) -> IndexMap<String, f64> {
        self.inner.input_growth.clone()
    }

    #[getter]
    fn model(&self) -> PyModel {
        PyModel {
            inner: self.inner.model.clone(),
        }
    }

    /// Rows as dicts: year, period, output, tfp, input_levels,
    /// input_levels_display, growth_applied.
    #[getter]
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serde_to_py(py, &self.inner.rows)
    }

    fn set_discrete(&mut self, ids: Vec<String>) -> PyResult<()> {
        self.inner.set_discrete(&ids).py_err()
    }

    fn decompose<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serde_to_py(py, &core::decompose_plan(&self.inner))
    }

    fn on_expansion_path(&self) -> bool {
        core::expansion_path_check(&self.inner)
    }

    #[pyo3(signature = (year, input_levels, output, period=None))]
    fn evaluate<'py>(
        &self,
        py: Python<'py>,
        year: u32,
        input_levels: IndexMap<String, f64>,
        output: f64,
        period: Option<String>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let row = self.realized_row(year, input_levels, output, period);
        serde_to_py(py, &core::evaluate_year(&self.inner, year, &row).py_err()?)
    }

    /// A new plan from a realized row at `from_year` to the same terminal
    /// output.
    #[pyo3(signature = (from_year, input_levels, output, period=None))]
    fn replan(
        &self,
        from_year: u32,
        input_levels: IndexMap<String, f64>,
        output: f64,
        period: Option<String>,
    ) -> PyResult<PyPlan> {
        let row = self.realized_row(from_year, input_levels, output, period);
        Ok(PyPlan {
            inner: core::replan(&self.inner, from_year, &row).py_err()?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.rows.len()
    }
}

impl PyPlan {
    fn realized_row(
        &self,
        year: u32,
        input_levels: IndexMap<String, f64>,
        output: f64,
        period: Option<String>,
    ) -> ObservationRow {
        let period = period
            .or_else(|| self.inner.row_for_year(year).map(|r| r.period.clone()))
            .unwrap_or_else(|| year.to_string());
        ObservationRow {
            period,
            input_levels,
            output_level: output,
        }
    }
}

fn strategy_from(mode: &str, tfp_growth: f64, allow_negative_inputs: bool) -> PyResult<StrategyMix> {
    let mut s = match mode {
        "inputs_only" => StrategyMix::inputs_only(),
        "tfp_only" => StrategyMix::tfp_only(),
        "mixed" => StrategyMix::mixed(tfp_growth),
        other => {
            return Err(PyValueError::new_err(format!(
                "strategy must be inputs_only, tfp_only or mixed, got {other:?}"
            )))
        }
    };
    s.allow_negative_inputs = allow_negative_inputs;
    Ok(s)
}

#[pyfunction]
#[pyo3(signature = (dataset, impose_crts=false))]
fn fit_cobb_douglas(dataset: &PyDataset, impose_crts: bool) -> PyResult<PyModel> {
    Ok(PyModel {
        inner: core::fit_cobb_douglas(&dataset.inner, impose_crts).py_err()?,
    })
}

#[pyfunction]
fn back_out_tfp(input_levels: IndexMap<String, f64>, output: f64, elasticities: Elasticities) -> PyResult<f64> {
    core::back_out_tfp(&ObservationRow::new("", input_levels, output), &elasticities).py_err()
}

/// Splits output growth into `elasticity * input growth` terms and the TFP
/// residual.
#[pyfunction]
#[pyo3(signature = (output_growth, input_growth, elasticities, tfp_growth=None))]
fn decompose<'py>(
    py: Python<'py>,
    output_growth: f64,
    input_growth: IndexMap<String, f64>,
    elasticities: Elasticities,
    tfp_growth: Option<f64>,
) -> PyResult<Bound<'py, PyAny>> {
    let rates = GrowthRates {
        output_growth,
        input_growth,
        tfp_growth,
    };
    serde_to_py(py, &core::decompose(&rates, &elasticities).py_err()?)
}

#[pyfunction]
#[pyo3(signature = (tfp_growth, common_input_growth, elasticity_sum=1.0))]
fn exact_compose(tfp_growth: f64, common_input_growth: f64, elasticity_sum: f64) -> f64 {
    core::exact_compose(tfp_growth, common_input_growth, elasticity_sum)
}

#[pyfunction]
fn approximation_gap(tfp_growth: f64, common_input_growth: f64) -> f64 {
    core::approximation_gap(tfp_growth, common_input_growth)
}

#[pyfunction]
fn future_value(present: f64, rate: f64, years: f64) -> f64 {
    core::future_value(present, rate, years)
}

#[pyfunction]
fn years_to_multiple_rule70(rate_percent: f64) -> PyResult<f64> {
    core::years_to_multiple_rule70(rate_percent).py_err()
}

#[pyfunction]
fn years_to_multiple_exact(multiple: f64, rate: f64) -> PyResult<f64> {
    core::years_to_multiple_exact(multiple, rate).py_err()
}

#[pyfunction]
#[pyo3(signature = (follower, leader, leader_rate, horizon_years, numeric=false))]
fn required_rate(follower: f64, leader: f64, leader_rate: f64, horizon_years: f64, numeric: bool) -> PyResult<f64> {
    let p = CatchupProblem::new(follower, leader, leader_rate);
    if numeric {
        core::required_rate_numeric(&p, horizon_years).py_err()
    } else {
        core::required_rate(&p, horizon_years).py_err()
    }
}

#[pyfunction]
fn catchup_horizon(follower: f64, leader: f64, leader_rate: f64, follower_rate: f64) -> PyResult<f64> {
    core::catchup_horizon(&CatchupProblem::new(follower, leader, leader_rate).with_follower_rate(follower_rate))
        .py_err()
}

#[pyfunction]
#[pyo3(signature = (target_growth, strategy="mixed", tfp_growth=0.0, elasticity_sum=1.0, allow_negative_inputs=false))]
fn split_growth(
    target_growth: f64,
    strategy: &str,
    tfp_growth: f64,
    elasticity_sum: f64,
    allow_negative_inputs: bool,
) -> PyResult<f64> {
    let s = strategy_from(strategy, tfp_growth, allow_negative_inputs)?;
    core::split_growth(target_growth, &s, elasticity_sum).py_err()
}

/// Plans `years` years of `annual_growth` output growth from a base row.
#[pyfunction]
#[pyo3(signature = (
    model, base_levels, base_output, annual_growth, years,
    strategy="inputs_only", tfp_growth=0.0, discrete_inputs=Vec::new(),
    base_period="0", allow_negative_inputs=false,
))]
#[allow(clippy::too_many_arguments)]
fn generate_schedule(
    model: &PyModel,
    base_levels: IndexMap<String, f64>,
    base_output: f64,
    annual_growth: f64,
    years: u32,
    strategy: &str,
    tfp_growth: f64,
    discrete_inputs: Vec<String>,
    base_period: &str,
    allow_negative_inputs: bool,
) -> PyResult<PyPlan> {
    let s = strategy_from(strategy, tfp_growth, allow_negative_inputs)?;
    let base = ObservationRow::new(base_period, base_levels, base_output);
    let mut plan = core::generate_schedule(&model.inner, &base, annual_growth, &s, years).py_err()?;
    plan.set_discrete(&discrete_inputs).py_err()?;
    Ok(PyPlan { inner: plan })
}

#[pymodule]
fn bga(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BgaError", m.py().get_type::<BgaError>())?;
    m.add_class::<PyModel>()?;
    m.add_class::<PyDataset>()?;
    m.add_class::<PyPlan>()?;
    m.add_function(wrap_pyfunction!(fit_cobb_douglas, m)?)?;
    m.add_function(wrap_pyfunction!(back_out_tfp, m)?)?;
    m.add_function(wrap_pyfunction!(decompose, m)?)?;
    m.add_function(wrap_pyfunction!(exact_compose, m)?)?;
    m.add_function(wrap_pyfunction!(approximation_gap, m)?)?;
    m.add_function(wrap_pyfunction!(future_value, m)?)?;
    m.add_function(wrap_pyfunction!(years_to_multiple_rule70, m)?)?;
    m.add_function(wrap_pyfunction!(years_to_multiple_exact, m)?)?;
    m.add_function(wrap_pyfunction!(required_rate, m)?)?;
    m.add_function(wrap_pyfunction!(catchup_horizon, m)?)?;
    m.add_function(wrap_pyfunction!(split_growth, m)?)?;
    m.add_function(wrap_pyfunction!(generate_schedule, m)?)?;
    Ok(())
}
