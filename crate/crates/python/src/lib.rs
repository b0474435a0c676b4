use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use metaspike::arch::{self, ArchConfig, CycleLedger, Layout, PhaseCounters};
use metaspike::config::{Precision, RunConfig};
use metaspike::dataflow::{self, ArrayGeometry, Style, WorkloadShape};
use metaspike::experiment::{self, Dataset};
use metaspike::fxp::{DyadicExp, Scalar, Q7_8};
use metaspike::learning::{self, Synapse};
use metaspike::network::{Learner, ModelConfig};
use metaspike::report::MemoryReport;

fn err(e: metaspike::Error) -> PyErr {
    match e {
        metaspike::Error::Config(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| PyValueError::new_err(e.to_string()))
}

fn phase<'py>(py: Python<'py>, c: &PhaseCounters) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("cycles", c.cycles)?;
    d.set_item("reads", c.reads)?;
    d.set_item("writes", c.writes)?;
    d.set_item("bank_conflicts", c.bank_conflicts)?;
    d.set_item("fifo_peak", c.fifo_peak)?;
    d.set_item("saturations", c.saturations)?;
    Ok(d)
}

fn ledger<'py>(py: Python<'py>, l: &CycleLedger) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("forward", phase(py, &l.forward)?)?;
    d.set_item("backward", phase(py, &l.backward)?)?;
    d.set_item("update", phase(py, &l.update)?)?;
    d.set_item("meta", phase(py, &l.meta)?)?;
    d.set_item("total", phase(py, &l.total())?)?;
    Ok(d)
}

/// 16-bit fixed-point accelerator model with its cycle ledger.
#[pyclass(unsendable)]
struct Accelerator {
    inner: arch::Accelerator<Q7_8>,
}

#[pymethods]
impl Accelerator {
    #[new]
    #[pyo3(signature = (seed=1, layout="co-located", metaplasticity=true, n_input=256, n_hidden=200, n_output=2))]
    fn new(
        seed: u64,
        layout: &str,
        metaplasticity: bool,
        n_input: usize,
        n_hidden: usize,
        n_output: usize,
    ) -> PyResult<Self> {
        let model = ModelConfig { n_input, n_hidden, n_output, metaplasticity, ..ModelConfig::default() };
        let arch = ArchConfig { layout: parse::<Layout>(layout)?, ..ArchConfig::default() };
        Ok(Self { inner: arch::Accelerator::new(&model, &arch, seed).map_err(err)? })
    }

    /// Present one sample (`frames[t][i]` is input spike i at step t).
    /// Returns the predicted class and the output spike counts.
    #[pyo3(signature = (frames, label, learn=true))]
    fn run_sample(&mut self, frames: Vec<Vec<bool>>, label: usize, learn: bool) -> PyResult<(usize, Vec<u32>)> {
        let out = self.inner.run_sample(&frames, label, learn).map_err(err)?;
        Ok((out.prediction, out.output_counts))
    }

    /// Cycle and memory counters per phase since construction or the last
    /// `take_ledger`.
    fn ledger<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        ledger(py, &self.inner.ledger)
    }

    fn take_ledger<'py>(&mut self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let l = self.inner.take_ledger();
        ledger(py, &l)
    }

    /// Hidden weights, output weights, hidden m, output m and feedback
    /// weights as floats.
    fn parameters<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let p = self.inner.parameters();
        let w = |s: &[Synapse<Q7_8>]| s.iter().map(|x| x.w.to_f64()).collect::<Vec<_>>();
        let m = |s: &[Synapse<Q7_8>]| s.iter().map(|x| x.m.to_f64()).collect::<Vec<_>>();
        let d = PyDict::new(py);
        d.set_item("hidden_w", w(&p.hidden))?;
        d.set_item("hidden_m", m(&p.hidden))?;
        d.set_item("output_w", w(&p.output))?;
        d.set_item("output_m", m(&p.output))?;
        d.set_item("feedback", p.feedback.iter().map(|x| x.to_f64()).collect::<Vec<_>>())?;
        Ok(d)
    }
}

/// Latency in cycles of one layer under a dataflow style (os, ws, is, aer).
#[pyfunction]
#[pyo3(signature = (style, n_in, n_out, sparsity=0.0, timesteps=1, rows=8, cols=8))]
fn dataflow_latency(
    style: &str,
    n_in: usize,
    n_out: usize,
    sparsity: f64,
    timesteps: usize,
    rows: usize,
    cols: usize,
) -> PyResult<u64> {
    let shape = WorkloadShape { n_in, n_out, sparsity, timesteps };
    shape.validate().map_err(err)?;
    let g = ArrayGeometry::new(rows, cols).map_err(err)?;
    dataflow::latency(parse::<Style>(style)?, &g, &shape).map_err(err)
}

/// Default dataflow comparison sweep as a CSV string.
#[pyfunction]
fn dataflow_sweep() -> PyResult<String> {
    let rows = experiment::bench_dataflow().map_err(err)?;
    let mut buf = Vec::new();
    dataflow::write_csv(&rows, &mut buf).map_err(err)?;
    Ok(String::from_utf8_lossy(&buf).into_owned())
}

/// Parameter memory of the default network at a precision.
#[pyfunction]
#[pyo3(signature = (precision="fxp16"))]
fn memory_report<'py>(py: Python<'py>, precision: &str) -> PyResult<Bound<'py, PyDict>> {
    let r = MemoryReport::new(&ModelConfig::default(), parse::<Precision>(precision)?);
    let d = PyDict::new(py);
    d.set_item("precision", r.precision.name())?;
    d.set_item("synapses", r.synapses)?;
    d.set_item("bits_per_synapse", r.bits_per_synapse)?;
    d.set_item("synapse_bytes", r.synapse_bytes)?;
    d.set_item("feedback_bytes", r.feedback_bytes)?;
    d.set_item("neuron_state_bytes", r.neuron_state_bytes)?;
    d.set_item("total_bytes", r.total_bytes)?;
    Ok(d)
}

/// Bilinear plasticity factor of a 16-bit synapse.
#[pyfunction]
#[pyo3(signature = (w, m, auc_exp=1))]
fn plasticity_factor(w: f64, m: f64, auc_exp: i8) -> PyResult<f64> {
    let s = Synapse { w: Q7_8::quantize(w), m: Q7_8::quantize(m) };
    let d = DyadicExp::new(auc_exp).map_err(err)?;
    Ok(learning::plasticity_factor(s, d).to_f64())
}

/// Round to the nearest 16-bit fixed-point value, saturating.
#[pyfunction]
fn quantize(x: f64) -> f64 {
    Q7_8::quantize(x).to_f64()
}

/// Address-encode a spike vector: active indices and encoder cycles.
#[pyfunction]
#[pyo3(signature = (spikes, capacity=1024))]
fn encode_aer(spikes: Vec<bool>, capacity: usize) -> PyResult<(Vec<u16>, u64)> {
    let (fifo, cycles) = arch::encode_aer(&spikes, capacity).map_err(err)?;
    Ok((fifo.iter().collect(), cycles))
}

/// Train from a TOML configuration (empty for defaults) and return the
/// run report as JSON.
#[pyfunction]
#[pyo3(signature = (config="", data_path=None))]
fn train(py: Python<'_>, config: &str, data_path: Option<&str>) -> PyResult<String> {
    let mut cfg = RunConfig::from_toml(config).map_err(err)?;
    if let Some(p) = data_path {
        cfg.data.path = p.into();
    }
    cfg.validate().map_err(err)?;
    py.detach(|| {
        let data = Dataset::load(&cfg.data.path)?;
        let (report, _, _) = experiment::train(&cfg, &data)?;
        report.to_json()
    })
    .map_err(err)
}

#[pymodule(name = "metaspike")]
fn metaspike_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Accelerator>()?;
    m.add_function(wrap_pyfunction!(dataflow_latency, m)?)?;
    m.add_function(wrap_pyfunction!(dataflow_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(memory_report, m)?)?;
    m.add_function(wrap_pyfunction!(plasticity_factor, m)?)?;
    m.add_function(wrap_pyfunction!(quantize, m)?)?;
    m.add_function(wrap_pyfunction!(encode_aer, m)?)?;
    m.add_function(wrap_pyfunction!(train, m)?)?;
    Ok(())
}
