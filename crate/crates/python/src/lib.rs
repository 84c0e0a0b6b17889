//! Python bindings. Configs go in as dicts (or JSON strings) using the same
//! field names as the JSON config files; results come back as plain dicts
//! and lists.

use devine_core::baselines::{run_baseline, BaselineKind, GrcParams};
use devine_core::embedding::{release, verify_solution, AllocationLedger, EmbeddingSolution};
use devine_core::generate::{generate_physical_network, generate_vnr, GeneratorConfig};
use devine_core::local::{embed, LocalEmbedParams};
use devine_core::network::{PhysicalNetwork, RequestId, Vnr};
use devine_core::protocol::{run_election, ElectionParams, FifoTransport};
use devine_core::rng::{stream, Stream};
use devine_core::sim::{compare_algorithms, run_simulation as simulate, Algorithm, SimConfig};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use rand::SeedableRng;
use serde::de::DeserializeOwned;
use serde::Serialize;

fn value_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err<E: std::fmt::Display>(e: E) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// Reads a dict, a JSON string or `None` (all defaults) into `T`.
fn from_py<T: DeserializeOwned + Default>(obj: Option<&Bound<'_, PyAny>>) -> PyResult<T> {
    let Some(obj) = obj else {
        return Ok(T::default());
    };
    if obj.is_none() {
        return Ok(T::default());
    }
    let text: String = if obj.is_instance_of::<PyString>() {
        obj.extract()?
    } else {
        let json = obj.py().import("json")?;
        json.call_method1("dumps", (obj,))?.extract()?
    };
    serde_json::from_str(&text).map_err(value_err)
}

fn to_py<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(runtime_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

/// Physical network plus the requests currently allocated on it.
#[pyclass(name = "Network", module = "devine")]
pub struct PyNetwork {
    inner: PhysicalNetwork,
    ledger: AllocationLedger,
}

#[pymethods]
impl PyNetwork {
    /// Draws a network from a generator config (dict or JSON); `seed`
    /// overrides the config's seed.
    #[staticmethod]
    #[pyo3(signature = (config=None, seed=None))]
    fn generate(config: Option<&Bound<'_, PyAny>>, seed: Option<u64>) -> PyResult<Self> {
        let mut cfg: GeneratorConfig = from_py(config)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.validate().map_err(value_err)?;
        let inner = generate_physical_network(&cfg, &mut stream(cfg.seed, Stream::Topology)).map_err(runtime_err)?;
        Ok(PyNetwork { inner, ledger: AllocationLedger::new() })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(value_err)?;
        Ok(PyNetwork { inner, ledger: AllocationLedger::new() })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(runtime_err)
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn link_count(&self) -> usize {
        self.inner.link_count()
    }

    fn neighbors(&self, node: usize) -> PyResult<Vec<usize>> {
        if !self.inner.contains(node) {
            return Err(value_err(format!("no node {node}")));
        }
        Ok(self.inner.neighbors(node).iter().map(|&(n, _)| n).collect())
    }

    /// `{"id", "capacity", "residual"}` for one node.
    fn node<'py>(&self, py: Python<'py>, node: usize) -> PyResult<Bound<'py, PyAny>> {
        if !self.inner.contains(node) {
            return Err(value_err(format!("no node {node}")));
        }
        to_py(py, self.inner.node(node))
    }

    fn cpu_utilization(&self) -> f64 {
        self.inner.mean_cpu_utilization()
    }

    fn link_utilization(&self) -> f64 {
        self.inner.mean_link_utilization()
    }

    fn is_pristine(&self) -> bool {
        self.inner.is_pristine()
    }

    fn live_requests(&self) -> Vec<RequestId> {
        self.ledger.request_ids().collect()
    }

    /// Bounded BFS embedding rooted at `root`; nothing is allocated.
    #[pyo3(signature = (request, root, params=None))]
    fn embed<'py>(
        &self,
        py: Python<'py>,
        request: &PyRequest,
        root: usize,
        params: Option<&Bound<'py, PyAny>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        if !self.inner.contains(root) {
            return Err(value_err(format!("no node {root}")));
        }
        let params: LocalEmbedParams = from_py(params)?;
        params.validate().map_err(value_err)?;
        to_py(py, &embed(root, &self.inner, &request.inner, &params))
    }

    /// One of "firstfit", "bestfit", "grc"; nothing is allocated.
    #[pyo3(signature = (kind, request, params=None))]
    fn baseline<'py>(
        &self,
        py: Python<'py>,
        kind: &str,
        request: &PyRequest,
        params: Option<&Bound<'py, PyAny>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let kind: BaselineKind = kind.parse().map_err(value_err)?;
        let params: LocalEmbedParams = from_py(params)?;
        params.validate().map_err(value_err)?;
        let out =
            run_baseline(kind, &self.inner, &request.inner, &params, &GrcParams::default()).map_err(runtime_err)?;
        to_py(py, &out)
    }

    /// Runs a leader election for `request` and allocates the winner's
    /// embedding when there is one. Returns the result with its trace.
    #[pyo3(signature = (request, primary, leaders=5, seed=0, params=None))]
    fn elect<'py>(
        &mut self,
        py: Python<'py>,
        request: &PyRequest,
        primary: usize,
        leaders: usize,
        seed: u64,
        params: Option<&Bound<'py, PyAny>>,
    ) -> PyResult<Bound<'py, PyAny>> {
        let local: LocalEmbedParams = from_py(params)?;
        local.validate().map_err(value_err)?;
        let ep = ElectionParams { leaders, local };
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let result = run_election(
            &mut self.inner,
            &mut self.ledger,
            &request.inner,
            primary,
            &ep,
            &mut FifoTransport::new(),
            &mut rng,
        )
        .map_err(value_err)?;
        to_py(py, &result)
    }

    /// Checks a solution dict against current residuals; raises ValueError
    /// naming the first violation.
    #[pyo3(signature = (request, solution, injective=false))]
    fn verify(&self, request: &PyRequest, solution: &Bound<'_, PyAny>, injective: bool) -> PyResult<()> {
        let sol: EmbeddingSolution = {
            let text: String = solution.py().import("json")?.call_method1("dumps", (solution,))?.extract()?;
            serde_json::from_str(&text).map_err(value_err)?
        };
        verify_solution(&self.inner, &request.inner, &sol, injective).map_err(value_err)
    }

    fn release(&mut self, request_id: RequestId) -> PyResult<()> {
        release(&mut self.inner, request_id, &mut self.ledger).map_err(value_err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(nodes={}, links={}, live={})",
            self.inner.node_count(),
            self.inner.link_count(),
            self.ledger.len()
        )
    }
}

/// One virtual network request.
#[pyclass(name = "Request", module = "devine")]
pub struct PyRequest {
    inner: Vnr,
}

#[pymethods]
impl PyRequest {
    #[staticmethod]
    #[pyo3(signature = (config=None, request_id=0, seed=None, arrival_time=0.0))]
    fn generate(
        config: Option<&Bound<'_, PyAny>>,
        request_id: RequestId,
        seed: Option<u64>,
        arrival_time: f64,
    ) -> PyResult<Self> {
        let mut cfg: GeneratorConfig = from_py(config)?;
        if let Some(s) = seed {
            cfg.seed = s;
        }
        cfg.validate().map_err(value_err)?;
        let mut rng = stream(cfg.seed, Stream::Vnr);
        let inner = generate_vnr(&cfg, request_id, arrival_time, &mut rng).map_err(runtime_err)?;
        Ok(PyRequest { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyRequest { inner: serde_json::from_str(text).map_err(value_err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(runtime_err)
    }

    #[getter]
    fn request_id(&self) -> RequestId {
        self.inner.request_id
    }

    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    fn link_count(&self) -> usize {
        self.inner.links.len()
    }

    fn revenue(&self) -> f64 {
        devine_core::revenue_of(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Request(id={}, nodes={}, links={})",
            self.inner.request_id,
            self.inner.node_count(),
            self.inner.links.len()
        )
    }
}

/// Default simulation config as a dict.
#[pyfunction]
fn default_config<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
    to_py(py, &SimConfig::default())
}

/// Runs one simulation; returns {"summary", "series", "arrivals", "traces"}.
#[pyfunction]
#[pyo3(signature = (config=None))]
fn run_simulation<'py>(py: Python<'py>, config: Option<&Bound<'py, PyAny>>) -> PyResult<Bound<'py, PyAny>> {
    let cfg: SimConfig = from_py(config)?;
    cfg.validate().map_err(value_err)?;
    let report = py.detach(|| simulate(&cfg)).map_err(runtime_err)?;
    to_py(py, &report)
}

/// Runs every (algorithm, seed) pair over shared workloads; returns the
/// list of summaries.
#[pyfunction]
#[pyo3(signature = (config=None, algorithms=None, seeds=None))]
fn compare<'py>(
    py: Python<'py>,
    config: Option<&Bound<'py, PyAny>>,
    algorithms: Option<Vec<String>>,
    seeds: Option<Vec<u64>>,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg: SimConfig = from_py(config)?;
    cfg.validate().map_err(value_err)?;
    let algorithms: Vec<Algorithm> = match algorithms {
        Some(names) => names.iter().map(|n| n.parse()).collect::<Result<_, _>>().map_err(value_err)?,
        None => Algorithm::ALL.to_vec(),
    };
    let seeds = seeds.unwrap_or_else(|| vec![cfg.seed()]);
    let mut cfgs = Vec::new();
    for &algorithm in &algorithms {
        for &seed in &seeds {
            let mut c = cfg.clone();
            c.algorithm = algorithm;
            c.generator.seed = seed;
            cfgs.push(c);
        }
    }
    let reports = py.detach(|| compare_algorithms(&cfgs)).map_err(runtime_err)?;
    let summaries: Vec<_> = reports.iter().map(|r| &r.summary).collect();
    to_py(py, &summaries)
}

#[pymodule]
fn devine(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyRequest>()?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    m.add_function(wrap_pyfunction!(run_simulation, m)?)?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
