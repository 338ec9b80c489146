//! Python bindings for `sparse01`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sparse01::compsys::{self, CensusTarget};
use sparse01::expansion::{irrationality_screen, parse_context_file, ExpansionContext};
use sparse01::sampler::{bracket_experiment, SampleConfig};
use sparse01::structures::{parse_structure, write_structure, RelStructure, SubPair};
use sparse01::weights::{self, BaseContext};
use sparse01::{catalog, cli, Error};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Parse { .. } | Error::InvalidArgument(_) => PyValueError::new_err(e.to_string()),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// A finite relational structure.
#[pyclass(name = "Structure", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyStructure(RelStructure);

#[pymethods]
impl PyStructure {
    /// A graph on `size` vertices.
    #[staticmethod]
    fn graph(size: usize, edges: Vec<(u32, u32)>) -> PyResult<Self> {
        RelStructure::graph(size, &edges).map(PyStructure).map_err(py_err)
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_structure(text).map(PyStructure).map_err(py_err)
    }

    fn to_text(&self) -> String {
        write_structure(&self.0)
    }

    #[getter]
    fn size(&self) -> usize {
        self.0.size()
    }

    /// `cl^k(a)` in a graph context with edge exponent `alpha`.
    fn closure(&self, a: Vec<u32>, k: usize, alpha: f64) -> PyResult<Vec<u32>> {
        let ctx = BaseContext::graph(alpha).map_err(py_err)?;
        weights::closure(&a, &self.0, k, &ctx).map(|c| c.result).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("Structure(size={})", self.0.size())
    }
}

/// A structure together with a subset of its elements (the small side).
#[pyclass(name = "Pair", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyPair(SubPair);

#[pymethods]
impl PyPair {
    #[new]
    fn new(big: &PyStructure, small: Vec<u32>) -> PyResult<Self> {
        SubPair::new(big.0.clone(), &small).map(PyPair).map_err(py_err)
    }

    #[staticmethod]
    fn catalog(name: &str) -> PyResult<Self> {
        catalog::pair(name).map(|p| PyPair(p.pair)).map_err(py_err)
    }

    #[getter]
    fn small(&self) -> Vec<u32> {
        self.0.small().to_vec()
    }

    #[getter]
    fn big(&self) -> PyStructure {
        PyStructure(self.0.big.clone())
    }

    /// Extension weight in a graph context.
    fn weight(&self, alpha: f64) -> PyResult<f64> {
        let ctx = BaseContext::graph(alpha).map_err(py_err)?;
        weights::weight(&self.0, &ctx).map_err(py_err)
    }

    /// Kind of the pair in a graph context: algebraic, strong, primitive, ...
    fn classify(&self, alpha: f64) -> PyResult<String> {
        let ctx = BaseContext::graph(alpha).map_err(py_err)?;
        weights::classify(&self.0, &ctx).map(|k| k.as_str().to_string()).map_err(py_err)
    }

    /// Bracket experiment in a named catalog context; returns the report as
    /// JSON.
    #[pyo3(signature = (context, n, seed, trials, eps=None, embed_cap=None))]
    fn bracket(
        &self,
        context: &str,
        n: usize,
        seed: u64,
        trials: usize,
        eps: Option<f64>,
        embed_cap: Option<usize>,
    ) -> PyResult<String> {
        let c = catalog::context(context).map_err(py_err)?;
        let mut cfg = SampleConfig::new(n, seed, trials, c.base).map_err(py_err)?;
        if let Some(p) = c.plus {
            cfg = cfg.with_expansion(p).map_err(py_err)?;
        }
        if let Some(e) = eps {
            cfg = cfg.with_eps(e).map_err(py_err)?;
        }
        if let Some(cap) = embed_cap {
            cfg = cfg.with_embed_cap(cap).map_err(py_err)?;
        }
        json(&bracket_experiment(&self.0, &cfg).map_err(py_err)?)
    }
}

/// A family of injections with relation classes.
#[pyclass(name = "System", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySystem(compsys::System);

#[pymethods]
impl PySystem {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        compsys::System::parse(text).map(PySystem).map_err(py_err)
    }

    #[staticmethod]
    fn catalog(name: &str) -> PyResult<Self> {
        catalog::system(name).map(|s| PySystem(s.system)).map_err(py_err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    fn separativity(&self) -> String {
        compsys::separativity_level(&self.0).as_str().to_string()
    }

    fn q_weight(&self, x: Vec<usize>) -> PyResult<f64> {
        self.0.q_weight(&x).map_err(py_err)
    }

    /// Mean singleton count and the conservation flag over `trials` draws.
    fn census(&self, seed: u64, trials: usize) -> PyResult<(f64, bool)> {
        let run = compsys::run_census(&self.0, seed, trials, compsys::DEFAULT_COMPONENT_CAP).map_err(py_err)?;
        Ok((run.mean_singletons(), run.all_conserved()))
    }

    /// The one-step singleton inequality at `l1`; returns the report as JSON.
    fn step_inequality(&self, l1: usize, seed: u64, trials: usize) -> PyResult<String> {
        let run = compsys::run_census(&self.0, seed, trials, compsys::DEFAULT_COMPONENT_CAP).map_err(py_err)?;
        let r = compsys::step_inequality(&run, &CensusTarget::Singletons { singletons: l1 }).map_err(py_err)?;
        json(&r)
    }
}

/// Irrationality screen of a context file; returns the report as JSON.
#[pyfunction]
#[pyo3(signature = (context_text, size_bound=6, budget=2000))]
fn screen(context_text: &str, size_bound: usize, budget: usize) -> PyResult<String> {
    let (base, plus) = parse_context_file(context_text).map_err(py_err)?;
    let plus = plus.unwrap_or_else(|| ExpansionContext::trivial(base));
    json(&irrationality_screen(&plus, size_bound, budget).map_err(py_err)?)
}

/// Run a TOML experiment spec in memory; returns `(jsonl, report, failed)`.
#[pyfunction]
fn run_spec(spec_text: &str) -> PyResult<(String, String, bool)> {
    let spec = cli::ExperimentSpec::parse(spec_text).map_err(py_err)?;
    let loaded = cli::load(spec, std::path::Path::new(".")).map_err(py_err)?;
    let outcome = cli::execute(&loaded).map_err(py_err)?;
    Ok((outcome.jsonl().map_err(py_err)?, outcome.report(), outcome.failed()))
}

#[pymodule]
fn sparse01_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyStructure>()?;
    m.add_class::<PyPair>()?;
    m.add_class::<PySystem>()?;
    m.add_function(wrap_pyfunction!(screen, m)?)?;
    m.add_function(wrap_pyfunction!(run_spec, m)?)?;
    Ok(())
}
