use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use aicsim::circuit::{parse_config, parse_program, parse_raw_circuit, serialize_circuit, serialize_program, MAX_QUBITS};
use aicsim::engine::Engine;
use aicsim::{distributed, optimizer, tools, Error, SwapKind};

fn py_err(err: Error) -> PyErr {
    match err {
        Error::Contract(_) | Error::StateSize(_) | Error::LengthMismatch(..) => PyRuntimeError::new_err(err.to_string()),
        _ => PyValueError::new_err(err.to_string()),
    }
}

#[pyclass(name = "Config", module = "aicsim_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyConfig {
    inner: aicsim::Config,
}

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (n_qubits, rank_qubits = 0, chunk_qubits = None, buffer_qubits = None, fusion_qubits = None, cache_line_qubits = None, ims = true, xrs = true, fusion = true, diagonal_fusion = true))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        n_qubits: usize,
        rank_qubits: usize,
        chunk_qubits: Option<usize>,
        buffer_qubits: Option<usize>,
        fusion_qubits: Option<usize>,
        cache_line_qubits: Option<usize>,
        ims: bool,
        xrs: bool,
        fusion: bool,
        diagonal_fusion: bool,
    ) -> PyResult<Self> {
        let mut config = aicsim::Config::with_ranks(n_qubits, rank_qubits)
            .with_swaps(ims, xrs)
            .with_fusion(fusion, diagonal_fusion);
        if let Some(c) = chunk_qubits {
            config = config.with_chunk_qubits(c);
        }
        if let Some(b) = buffer_qubits {
            config = config.with_buffer_qubits(b);
        }
        if let Some(f) = fusion_qubits {
            config.fusion_qubits = f;
        }
        if let Some(cl) = cache_line_qubits {
            config.cache_line_qubits = cl;
        }
        config.validate().map_err(py_err)?;
        Ok(PyConfig { inner: config })
    }

    #[staticmethod]
    fn from_ini(text: &str) -> PyResult<Self> {
        let config = parse_config(text).map_err(py_err)?;
        Ok(PyConfig { inner: config })
    }

    fn to_ini(&self) -> String {
        self.inner.to_ini()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits
    }

    #[getter]
    fn rank_qubits(&self) -> usize {
        self.inner.rank_qubits
    }

    #[getter]
    fn chunk_qubits(&self) -> usize {
        self.inner.chunk_qubits
    }

    #[getter]
    fn buffer_qubits(&self) -> usize {
        self.inner.buffer_qubits
    }

    #[getter]
    fn fusion_qubits(&self) -> usize {
        self.inner.fusion_qubits
    }

    #[getter]
    fn num_ranks(&self) -> usize {
        self.inner.num_ranks()
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "Config(n_qubits={}, rank_qubits={}, chunk_qubits={}, buffer_qubits={}, fusion_qubits={})",
            c.n_qubits, c.rank_qubits, c.chunk_qubits, c.buffer_qubits, c.fusion_qubits
        )
    }
}

#[pyclass(name = "Circuit", module = "aicsim_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyCircuit {
    inner: aicsim::Circuit,
}

#[pymethods]
impl PyCircuit {
    #[staticmethod]
    #[pyo3(signature = (text, n_qubits = None))]
    fn parse(text: &str, n_qubits: Option<usize>) -> PyResult<Self> {
        let mut circuit = parse_raw_circuit(text, n_qubits.unwrap_or(MAX_QUBITS)).map_err(py_err)?;
        if n_qubits.is_none() {
            circuit.n_qubits = circuit
                .gates
                .iter()
                .flat_map(|g| g.targets.iter().chain(&g.controls))
                .map(|q| q + 1)
                .max()
                .unwrap_or(0);
        }
        Ok(PyCircuit { inner: circuit })
    }

    fn to_text(&self) -> String {
        serialize_circuit(&self.inner)
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Circuit(n_qubits={}, gates={})", self.inner.n_qubits, self.inner.len())
    }
}

#[pyclass(name = "Program", module = "aicsim_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyProgram {
    inner: aicsim::Program,
}

#[pymethods]
impl PyProgram {
    #[staticmethod]
    fn parse(text: &str, config: &PyConfig) -> PyResult<Self> {
        let program = parse_program(text, &config.inner).map_err(py_err)?;
        Ok(PyProgram { inner: program })
    }

    fn to_text(&self) -> String {
        serialize_program(&self.inner)
    }

    #[getter]
    fn block_count(&self) -> usize {
        self.inner.block_count()
    }

    #[getter]
    fn gate_count(&self) -> usize {
        self.inner.gate_count()
    }

    #[getter]
    fn ims_count(&self) -> usize {
        self.inner.swap_count(SwapKind::InMemory)
    }

    #[getter]
    fn xrs_count(&self) -> usize {
        self.inner.swap_count(SwapKind::CrossRank)
    }

    fn __repr__(&self) -> String {
        format!(
            "Program(blocks={}, gates={}, ims={}, xrs={})",
            self.block_count(),
            self.gate_count(),
            self.ims_count(),
            self.xrs_count()
        )
    }
}

#[pyclass(name = "StateVector", module = "aicsim_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyStateVector {
    inner: aicsim::StateVector,
}

#[pymethods]
impl PyStateVector {
    #[new]
    fn new(amplitudes: Vec<Complex64>) -> PyResult<Self> {
        let state = aicsim::StateVector::from_amplitudes(amplitudes).map_err(py_err)?;
        Ok(PyStateVector { inner: state })
    }

    #[staticmethod]
    #[pyo3(signature = (n_qubits, index = 0))]
    fn basis(n_qubits: usize, index: usize) -> PyResult<Self> {
        let state = aicsim::StateVector::basis(n_qubits, index).map_err(py_err)?;
        Ok(PyStateVector { inner: state })
    }

    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amps.clone()
    }

    fn probabilities(&self) -> Vec<f64> {
        self.inner.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("StateVector(n_qubits={})", self.inner.n)
    }
}

#[pyfunction]
fn gen_qft(n: usize) -> PyCircuit {
    PyCircuit { inner: tools::gen_qft(n) }
}

#[pyfunction]
#[pyo3(signature = (n, layers = 1, seed = 0))]
fn gen_qaoa(n: usize, layers: usize, seed: u64) -> PyCircuit {
    PyCircuit { inner: tools::gen_qaoa(n, layers, seed) }
}

#[pyfunction]
fn gen_bv(n: usize, secret: &str) -> PyResult<PyCircuit> {
    let secret = tools::parse_secret(secret).map_err(py_err)?;
    let circuit = tools::gen_bv(n, &secret).map_err(py_err)?;
    Ok(PyCircuit { inner: circuit })
}

#[pyfunction]
#[pyo3(signature = (n, count = 200, seed = 0))]
fn gen_random(n: usize, count: usize, seed: u64) -> PyResult<PyCircuit> {
    let circuit = tools::gen_random(n, count, seed).map_err(py_err)?;
    Ok(PyCircuit { inner: circuit })
}

#[pyfunction]
fn aio_optimize(py: Python<'_>, circuit: &PyCircuit, config: &PyConfig) -> PyResult<PyProgram> {
    let program = py
        .detach(|| optimizer::aio_optimize(&circuit.inner, &config.inner))
        .map_err(py_err)?;
    Ok(PyProgram { inner: program })
}

/// Runs a program on `2^R` ranks and returns the state in logical qubit order.
#[pyfunction]
#[pyo3(signature = (program, config, initial = 0, threads = None))]
fn simulate(
    py: Python<'_>,
    program: &PyProgram,
    config: &PyConfig,
    initial: usize,
    threads: Option<usize>,
) -> PyResult<PyStateVector> {
    let state = py
        .detach(|| {
            let engine = match threads {
                Some(t) => Engine::with_threads(t)?,
                None => Engine::new(),
            };
            let (state, layout) = distributed::simulate(&engine, &config.inner, &program.inner, initial)?;
            Ok(tools::layout_apply(&state, &layout))
        })
        .map_err(py_err)?;
    Ok(PyStateVector { inner: state })
}

#[pyfunction]
#[pyo3(signature = (circuit, initial = 0))]
fn simulate_gate_by_gate(py: Python<'_>, circuit: &PyCircuit, initial: usize) -> PyResult<PyStateVector> {
    let state = py
        .detach(|| aicsim::engine::simulate_gate_by_gate(&circuit.inner, initial))
        .map_err(py_err)?;
    Ok(PyStateVector { inner: state })
}

#[pyfunction]
#[pyo3(signature = (circuit, initial = 0))]
fn oracle_simulate(circuit: &PyCircuit, initial: usize) -> PyResult<PyStateVector> {
    let state = tools::oracle_simulate(&circuit.inner, initial).map_err(py_err)?;
    Ok(PyStateVector { inner: state })
}

/// Returns `(passed, message)` for the gate order of `program` against `circuit`.
#[pyfunction]
fn validate_order(circuit: &PyCircuit, program: &PyProgram) -> (bool, String) {
    let report = tools::validate_order(&circuit.inner, &program.inner);
    (report.pass, report.message)
}

#[pyfunction]
fn fidelity(u: &PyStateVector, v: &PyStateVector) -> PyResult<f64> {
    tools::fidelity(&u.inner, &v.inner).map_err(py_err)
}

#[pymodule]
fn aicsim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyCircuit>()?;
    m.add_class::<PyProgram>()?;
    m.add_class::<PyStateVector>()?;
    m.add_function(wrap_pyfunction!(gen_qft, m)?)?;
    m.add_function(wrap_pyfunction!(gen_qaoa, m)?)?;
    m.add_function(wrap_pyfunction!(gen_bv, m)?)?;
    m.add_function(wrap_pyfunction!(gen_random, m)?)?;
    m.add_function(wrap_pyfunction!(aio_optimize, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_gate_by_gate, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_simulate, m)?)?;
    m.add_function(wrap_pyfunction!(validate_order, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    Ok(())
}
