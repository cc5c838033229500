use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use commonness::counting::{self, ExactFunction, Property};
use commonness::optimize::{self, SearchConfig};
use commonness::{certify, Error, GroupFunction, LinearSystem};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::VerificationFailed(_) | Error::DepthExhausted(_) | Error::NoSuchL(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

#[pyclass(name = "System", frozen)]
struct PySystem {
    inner: LinearSystem,
}

#[pymethods]
impl PySystem {
    #[staticmethod]
    #[pyo3(signature = (name, p = 3))]
    fn preset(name: &str, p: u64) -> PyResult<Self> {
        LinearSystem::preset(name, p).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        LinearSystem::parse(text).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn p(&self) -> u32 {
        self.inner.p()
    }

    #[getter]
    fn vars(&self) -> usize {
        self.inner.vars()
    }

    /// Solution density of the function given by its values, via the Fourier route.
    fn t(&self, n: u32, values: Vec<f64>) -> PyResult<f64> {
        let f = GroupFunction::new(self.inner.p(), n, values).map_err(to_py)?;
        counting::t_fourier(&self.inner, &f).map_err(to_py)
    }

    /// Exact solution density by enumeration, as a rational string.
    fn t_exact(&self, n: u32, values: Vec<String>) -> PyResult<String> {
        let vals = values
            .iter()
            .map(|s| counting::parse_rational(s).ok_or_else(|| PyValueError::new_err(format!("bad rational `{s}`"))))
            .collect::<PyResult<Vec<_>>>()?;
        let f = ExactFunction::new(self.inner.p(), n, vals).map_err(to_py)?;
        counting::t_brute(&self.inner, &f).map(|t| t.to_string()).map_err(to_py)
    }

    #[pyo3(signature = (n, values, property, l = None, alpha = None))]
    fn defect(&self, n: u32, values: Vec<f64>, property: &str, l: Option<u64>, alpha: Option<f64>) -> PyResult<f64> {
        let prop = Property::from_name(property, l, alpha).map_err(to_py)?;
        let f = GroupFunction::new(self.inner.p(), n, values).map_err(to_py)?;
        counting::defect(&self.inner, &f, prop).map(|r| r.value).map_err(to_py)
    }

    /// Best defect found and the minimizing values.
    #[pyo3(signature = (property, n = 1, restarts = 8, seed = 0, mean = None, l = None))]
    fn search(
        &self,
        property: &str,
        n: u32,
        restarts: usize,
        seed: u64,
        mean: Option<f64>,
        l: Option<u64>,
    ) -> PyResult<(f64, Vec<f64>)> {
        let prop = Property::from_name(property, l, mean).map_err(to_py)?;
        let mut cfg = SearchConfig::new(prop, self.inner.p(), n)
            .with_restarts(restarts)
            .with_seed(seed);
        if let Some(m) = mean {
            cfg = cfg.with_mean(m);
        }
        let r = optimize::minimize_defect(&self.inner, &cfg).map_err(to_py)?;
        Ok((r.best_defect, r.best.into_values()))
    }
}

/// Claims of the lemma-level certificates and whether each replays.
#[pyfunction]
fn verify_lemmas() -> PyResult<Vec<(String, bool)>> {
    let suite = certify::verify_lemma_suite().map_err(to_py)?;
    Ok(suite.into_iter().map(|c| (c.claim, c.verified)).collect())
}

/// The constant ledger as JSON.
#[pyfunction]
fn derive_constants() -> PyResult<String> {
    let ledger = certify::derive_constants().map_err(to_py)?;
    serde_json::to_string(&ledger).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn commonness_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", commonness::VERSION)?;
    m.add_class::<PySystem>()?;
    m.add_function(wrap_pyfunction!(verify_lemmas, m)?)?;
    m.add_function(wrap_pyfunction!(derive_constants, m)?)?;
    Ok(())
}
