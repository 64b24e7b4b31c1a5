//! Python bindings. Strategies cross the boundary as codes I=1, T=2, U=3.

use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList, PyTuple};
use serde_json::{Map, Value};

use trustnet_core::analysis::{self, BoxAnchoring, MassScalingCurve};
use trustnet_core::config::Config;
use trustnet_core::{engine, game, rules, seed, topology, Error, Strategy};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::InsufficientData(_) | Error::Cell { .. } => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn strategies(codes: &[u8]) -> PyResult<Vec<Strategy>> {
    codes
        .iter()
        .map(|&c| Strategy::from_code(c).ok_or_else(|| PyValueError::new_err(format!("strategy code {c} not in 1..=3"))))
        .collect()
}

fn codes(s: &[Strategy]) -> Vec<u8> {
    s.iter().map(|x| x.code()).collect()
}

#[pyclass(name = "GameParams", frozen, from_py_object)]
#[derive(Clone)]
struct PyGameParams(game::GameParams);

#[pymethods]
impl PyGameParams {
    #[new]
    #[pyo3(signature = (r_ut, r_t = game::GameParams::DEFAULT_R_T))]
    fn new(r_ut: f64, r_t: f64) -> PyResult<Self> {
        game::GameParams::new(r_t, r_ut).map(Self).map_err(to_py)
    }

    #[getter]
    fn r_t(&self) -> f64 {
        self.0.r_t()
    }

    #[getter]
    fn r_ut(&self) -> f64 {
        self.0.r_ut()
    }

    #[getter]
    fn r_u(&self) -> f64 {
        self.0.r_u()
    }

    fn __repr__(&self) -> String {
        format!("GameParams(r_ut={}, r_t={})", self.0.r_ut(), self.0.r_t())
    }
}

#[pyclass(name = "Network", frozen, from_py_object)]
#[derive(Clone)]
struct PyNetwork(topology::Network);

#[pymethods]
impl PyNetwork {
    /// `side × side` torus with von Neumann neighbourhoods.
    #[staticmethod]
    fn lattice(side: usize) -> PyResult<Self> {
        topology::build_lattice(side).map(Self).map_err(to_py)
    }

    /// Barabási–Albert graph; the same seed gives the same graph.
    #[staticmethod]
    #[pyo3(signature = (nodes, m = 2, seed = 0))]
    fn scale_free(nodes: usize, m: usize, seed: u64) -> PyResult<Self> {
        let mut rng = seed::run_stream(seed, seed::Domain::Graph);
        topology::build_scale_free(nodes, m, &mut rng).map(Self).map_err(to_py)
    }

    #[staticmethod]
    fn from_edges(nodes: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        topology::Network::from_edges(nodes, &edges).map(Self).map_err(to_py)
    }

    fn node_count(&self) -> usize {
        self.0.node_count()
    }

    fn edge_count(&self) -> usize {
        self.0.edge_count()
    }

    fn neighbors(&self, i: usize) -> PyResult<Vec<usize>> {
        self.check(i)?;
        Ok(self.0.neighbors(i).to_vec())
    }

    fn degree(&self, i: usize) -> PyResult<usize> {
        self.check(i)?;
        Ok(self.0.degree(i))
    }

    fn edges(&self) -> Vec<(usize, usize)> {
        self.0.edges().collect()
    }

    fn is_connected(&self) -> bool {
        self.0.is_connected()
    }

    fn __len__(&self) -> usize {
        self.0.node_count()
    }
}

impl PyNetwork {
    fn check(&self, i: usize) -> PyResult<()> {
        if i >= self.0.node_count() {
            return Err(PyValueError::new_err(format!("node {i} out of range")));
        }
        Ok(())
    }

    fn population(&self, state: &[u8]) -> PyResult<game::Population> {
        if state.len() != self.0.node_count() {
            return Err(PyValueError::new_err(format!(
                "state has {} entries, network has {} nodes",
                state.len(),
                self.0.node_count()
            )));
        }
        Ok(game::Population::new(strategies(state)?))
    }
}

/// Net wealth of every node for the given strategy codes.
#[pyfunction]
fn payoffs(network: &PyNetwork, state: Vec<u8>, params: &PyGameParams) -> PyResult<Vec<f64>> {
    let pop = network.population(&state)?;
    Ok(game::all_payoffs(&network.0, &pop, &params.0).into_vec())
}

/// One synchronous update of every node.
#[pyfunction]
#[pyo3(signature = (network, state, params, rule, q = rules::UpdateRule::DEFAULT_Q, run_seed = 0, t = 0))]
fn step(
    network: &PyNetwork,
    state: Vec<u8>,
    params: &PyGameParams,
    rule: &str,
    q: f64,
    run_seed: u64,
    t: usize,
) -> PyResult<Vec<u8>> {
    let pop = network.population(&state)?;
    let kind: rules::RuleKind = rule.parse().map_err(to_py)?;
    let rule = rules::UpdateRule::new(kind, q).map_err(to_py)?;
    Ok(engine::step(&network.0, &pop, &params.0, &rule, run_seed, t).codes())
}

#[pyclass(name = "RunRecord", frozen, skip_from_py_object)]
struct PyRunRecord(engine::RunRecord);

#[pymethods]
impl PyRunRecord {
    #[getter]
    fn run_index(&self) -> usize {
        self.0.run_index
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[getter]
    fn steps(&self) -> usize {
        self.0.steps()
    }

    /// `(k_I, k_T, k_U)` per step, step 0 first.
    #[getter]
    fn counts(&self) -> Vec<(usize, usize, usize)> {
        self.0.counts.iter().map(|c| (c[0], c[1], c[2])).collect()
    }

    #[getter]
    fn wealth(&self) -> Vec<f64> {
        self.0.wealth.clone()
    }

    #[getter]
    fn final_state(&self) -> Vec<u8> {
        codes(&self.0.final_state)
    }

    /// `(step, codes)` pairs at the configured cadence.
    #[getter]
    fn snapshots(&self) -> Vec<(usize, Vec<u8>)> {
        self.0.snapshots.iter().map(|s| (s.step, codes(&s.state))).collect()
    }

    /// `{node: codes}` for recorded and probe nodes.
    #[getter]
    fn node_series<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for s in &self.0.node_series {
            d.set_item(s.node, s.codes.clone())?;
        }
        Ok(d)
    }

    /// `(focal, [(distance, node), ...])`, or `None` without probes.
    #[getter]
    fn probes(&self) -> Option<(usize, Vec<(usize, usize)>)> {
        self.0.probes.as_ref().map(|p| (p.focal, p.probes.clone()))
    }

    #[pyo3(signature = (window = 0.25))]
    fn steady_state_wealth(&self, window: f64) -> PyResult<f64> {
        analysis::steady_state_wealth(&self.0, window).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "RunRecord(run_index={}, steps={}, final_counts={:?})",
            self.0.run_index,
            self.0.steps(),
            self.0.counts.last()
        )
    }
}

fn json_of(v: &Bound<'_, PyAny>) -> PyResult<Value> {
    if v.is_none() {
        return Ok(Value::Null);
    }
    if let Ok(b) = v.cast::<pyo3::types::PyBool>() {
        return Ok(Value::Bool(b.is_true()));
    }
    if let Ok(i) = v.extract::<u64>() {
        return Ok(i.into());
    }
    if let Ok(i) = v.extract::<i64>() {
        return Ok(i.into());
    }
    if let Ok(f) = v.extract::<f64>() {
        return Ok(f.into());
    }
    if let Ok(s) = v.extract::<String>() {
        return Ok(s.into());
    }
    if v.is_instance_of::<PyList>() || v.is_instance_of::<PyTuple>() {
        return v.try_iter()?.map(|x| json_of(&x?)).collect::<PyResult<Vec<_>>>().map(Value::Array);
    }
    Err(PyValueError::new_err(format!("unsupported config value {v}")))
}

/// Runs an ensemble. Keyword arguments use the CLI's config keys
/// (`r_UT`, `rule`, `steps`, `runs`, `side`, `seed`, ...).
#[pyfunction]
#[pyo3(signature = (**settings))]
fn simulate(py: Python<'_>, settings: Option<&Bound<'_, PyDict>>) -> PyResult<Vec<PyRunRecord>> {
    let mut map = Map::new();
    if let Some(d) = settings {
        for (k, v) in d.iter() {
            map.insert(k.extract::<String>()?, json_of(&v)?);
        }
    }
    let cfg = Config::from_map(&map).map_err(to_py)?;
    let sim = cfg.sim_config().map_err(to_py)?;
    let records = py.detach(|| engine::run_ensemble(&sim)).map_err(to_py)?;
    Ok(records.into_iter().map(PyRunRecord).collect())
}

/// `(frequencies, power)` of the mean-removed series.
#[pyfunction]
fn periodogram(series: Vec<f64>) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let s = analysis::periodogram(&series).map_err(to_py)?;
    Ok((s.frequencies, s.power))
}

/// `(slope, r_squared)` of the log-log spectrum over `f_min ≤ f < 0.5`.
#[pyfunction]
#[pyo3(signature = (frequencies, power, f_min = 0.004))]
fn spectrum_loglog_slope(frequencies: Vec<f64>, power: Vec<f64>, f_min: f64) -> PyResult<(f64, f64)> {
    if frequencies.len() != power.len() {
        return Err(PyValueError::new_err("frequencies and power differ in length"));
    }
    let n = 2 * frequencies.len().saturating_sub(1);
    let spec = analysis::Spectrum {
        frequencies,
        power,
        series_len: n,
    };
    let fit = analysis::spectrum_loglog_slope(&spec, f_min).map_err(to_py)?;
    Ok((fit.slope, fit.r_squared))
}

/// Correlation per lag `0..=max_lag`; `None` where a window is constant.
#[pyfunction]
fn lagged_pearson(a: Vec<f64>, b: Vec<f64>, max_lag: usize) -> PyResult<Vec<Option<f64>>> {
    analysis::lagged_pearson(&a, &b, max_lag).map(|c| c.rho).map_err(to_py)
}

/// `[(L, M(L)), ...]` for one strategy code on a `side × side` snapshot.
#[pyfunction]
#[pyo3(signature = (snapshot, side, target, box_sides, anchoring = "target_centered"))]
fn mass_scaling(
    snapshot: Vec<u8>,
    side: usize,
    target: u8,
    box_sides: Vec<usize>,
    anchoring: &str,
) -> PyResult<Vec<(usize, f64)>> {
    let anchoring = match anchoring {
        "target_centered" => BoxAnchoring::TargetCentered,
        "all_sites" => BoxAnchoring::AllSites,
        other => return Err(PyValueError::new_err(format!("unknown anchoring `{other}`"))),
    };
    let target = strategies(&[target])?[0];
    analysis::mass_scaling(&strategies(&snapshot)?, side, target, &box_sides, anchoring)
        .map(|c| c.points)
        .map_err(to_py)
}

/// Exponent `a` of `y ∝ x^a` by log-log least squares.
#[pyfunction]
fn fit_power_exponent(points: Vec<(f64, f64)>) -> PyResult<f64> {
    analysis::fit_power_exponent(points).map_err(to_py)
}

/// Exponent of the point-wise mean of several `(L, M)` curves.
#[pyfunction]
fn ensemble_exponent(curves: Vec<Vec<(usize, f64)>>) -> PyResult<f64> {
    let curves: Vec<MassScalingCurve> = curves.into_iter().map(|points| MassScalingCurve { points }).collect();
    MassScalingCurve::mean(&curves).and_then(|c| c.exponent()).map_err(to_py)
}

/// Mean squared code difference over lattice pairs at distance `l`.
#[pyfunction]
fn spatial_correlation(snapshot: Vec<u8>, l: usize, network: &PyNetwork) -> PyResult<f64> {
    analysis::spatial_correlation(&strategies(&snapshot)?, l, &network.0).map_err(to_py)
}

/// Initial-share triples on the simplex at resolution `step`.
#[pyfunction]
fn initial_condition_grid(step: f64) -> PyResult<Vec<(f64, f64, f64)>> {
    trustnet_core::sweep::initial_condition_grid(step)
        .map(|g| g.into_iter().map(|f| (f.0[0], f.0[1], f.0[2])).collect())
        .map_err(to_py)
}

#[pymodule]
fn trustnet(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGameParams>()?;
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyRunRecord>()?;
    m.add_function(wrap_pyfunction!(payoffs, m)?)?;
    m.add_function(wrap_pyfunction!(step, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(periodogram, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum_loglog_slope, m)?)?;
    m.add_function(wrap_pyfunction!(lagged_pearson, m)?)?;
    m.add_function(wrap_pyfunction!(mass_scaling, m)?)?;
    m.add_function(wrap_pyfunction!(fit_power_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_exponent, m)?)?;
    m.add_function(wrap_pyfunction!(spatial_correlation, m)?)?;
    m.add_function(wrap_pyfunction!(initial_condition_grid, m)?)?;
    Ok(())
}
