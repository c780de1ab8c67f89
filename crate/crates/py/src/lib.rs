//! Python bindings. Structured results (reports, budgets, classifications)
//! cross the boundary as plain dicts and lists through their JSON form.

use std::path::PathBuf;

use cqad_core::acoustics::AcousticMode;
use cqad_core::config::LoadedConfig;
use cqad_core::emmodes::JunctionSpec;
use cqad_core::hamiltonian;
use cqad_core::hybrid::BlockTemplate;
use cqad_core::materials::{MaterialLibrary, MaterialTensors};
use cqad_core::pipeline;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: cqad_core::Error) -> PyErr {
    use cqad_core::Error as E;
    match e {
        E::Config { .. } | E::InvalidInput(_) | E::DimensionMismatch(_) | E::UnderResolvedMesh(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Row lists from a column-major buffer.
fn rows(nrows: usize, ncols: usize, data: &[f64]) -> Vec<Vec<f64>> {
    (0..nrows).map(|i| (0..ncols).map(|j| data[j * nrows + i]).collect()).collect()
}

macro_rules! rows {
    ($m:expr) => {{
        let m = &$m;
        rows(m.nrows(), m.ncols(), m.as_slice())
    }};
}

#[pyclass(name = "Material", frozen)]
struct PyMaterial(MaterialTensors);

#[pymethods]
impl PyMaterial {
    #[getter]
    fn name(&self) -> &str {
        &self.0.name
    }
    /// kg/m³
    #[getter]
    fn density(&self) -> f64 {
        self.0.density
    }
    /// 6×6 stiffness at constant field (Pa).
    #[getter]
    fn stiffness(&self) -> Vec<Vec<f64>> {
        rows!(self.0.stiffness_e)
    }
    /// 3×6 stress-charge piezoelectric tensor (C/m²).
    #[getter]
    fn piezo_e(&self) -> Vec<Vec<f64>> {
        rows!(self.0.piezo_e)
    }
    /// 3×3 permittivity at constant strain (F/m).
    #[getter]
    fn permittivity(&self) -> Vec<Vec<f64>> {
        rows!(self.0.permittivity_s)
    }
    fn stiffened_stiffness(&self) -> PyResult<Vec<Vec<f64>>> {
        Ok(rows!(self.0.stiffened_stiffness().map_err(err)?))
    }
    fn coupling_coefficient_k2(&self, axis: usize) -> PyResult<f64> {
        self.0.coupling_coefficient_k2(axis).map_err(err)
    }
    fn longitudinal_velocity(&self) -> f64 {
        self.0.longitudinal_velocity()
    }
    fn __repr__(&self) -> String {
        format!("Material({:?}, density={})", self.0.name, self.0.density)
    }
}

#[pyclass(name = "MaterialLibrary", frozen)]
struct PyMaterialLibrary(MaterialLibrary);

#[pymethods]
impl PyMaterialLibrary {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        MaterialLibrary::load(path).map(Self).map_err(err)
    }
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        MaterialLibrary::from_toml_str(text).map(Self).map_err(err)
    }
    fn names(&self) -> Vec<String> {
        self.0.names().map(str::to_string).collect()
    }
    fn get(&self, name: &str) -> PyResult<PyMaterial> {
        self.0.get(name).map(|m| PyMaterial(m.clone())).map_err(err)
    }
}

#[pyclass(name = "AcousticMode", frozen)]
struct PyAcousticMode(AcousticMode);

#[pymethods]
impl PyAcousticMode {
    #[getter]
    fn label(&self) -> &str {
        &self.0.label
    }
    #[getter]
    fn family(&self) -> String {
        self.0.family().to_string()
    }
    #[getter]
    fn order(&self) -> usize {
        self.0.order
    }
    /// Hz
    #[getter]
    fn frequency(&self) -> f64 {
        self.0.frequency
    }
    /// m
    #[getter]
    fn zpf_amplitude(&self) -> f64 {
        self.0.zpf_amplitude
    }
    fn __repr__(&self) -> String {
        format!("AcousticMode({:?}, {:.6e} Hz)", self.0.label, self.0.frequency)
    }
}

#[pyclass(name = "KerrReport", frozen)]
struct PyKerrReport(hamiltonian::KerrReport);

#[pymethods]
impl PyKerrReport {
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.0.labels.clone()
    }
    /// Hz
    #[getter]
    fn frequencies(&self) -> Vec<f64> {
        self.0.frequencies.clone()
    }
    /// χ/2π in Hz, symmetric.
    #[getter]
    fn chi(&self) -> Vec<Vec<f64>> {
        self.0.chi.clone()
    }
    #[getter]
    fn anharmonicity(&self) -> Vec<f64> {
        self.0.anharmonicity.clone()
    }
    #[getter]
    fn lamb_shift(&self) -> Vec<f64> {
        self.0.lamb_shift.clone()
    }
    #[getter]
    fn corrected(&self) -> Vec<Vec<bool>> {
        self.0.corrected.clone()
    }
    #[getter]
    fn josephson_frequency(&self) -> Vec<f64> {
        self.0.josephson_frequency.clone()
    }
    /// Applies the beyond-dispersive correction around mode `qubit`.
    fn corrected_for(&self, qubit: usize, detunings: Vec<f64>) -> PyResult<Self> {
        hamiltonian::sw_correction(&self.0, qubit, &detunings).map(Self).map_err(err)
    }
    fn to_dict(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.0)
    }
    fn __len__(&self) -> usize {
        self.0.len()
    }
    fn __str__(&self) -> String {
        self.0.to_string()
    }
}

#[pyclass(name = "Device", frozen)]
struct PyDevice {
    device: pipeline::Device,
    hash: String,
}

#[pymethods]
impl PyDevice {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let loaded = LoadedConfig::load(path).map_err(err)?;
        let device = pipeline::Device::from_loaded(&loaded).map_err(err)?;
        Ok(Self { device, hash: loaded.hash })
    }
    #[getter]
    fn config_hash(&self) -> &str {
        &self.hash
    }
    /// Bare qubit frequency (Hz) at `inductance`, or at the configured one.
    #[pyo3(signature = (inductance=None))]
    fn qubit_frequency(&self, inductance: Option<f64>) -> PyResult<f64> {
        match inductance {
            Some(l) => self.device.qubit_at(l),
            None => self.device.qubit(),
        }
        .map(|m| m.frequency)
        .map_err(err)
    }
    fn acoustic_modes(&self, py: Python<'_>) -> PyResult<Vec<PyAcousticMode>> {
        let modes = py.detach(|| self.device.acoustic_modes()).map_err(err)?;
        Ok(modes.into_iter().map(PyAcousticMode).collect())
    }
    fn unhybridized(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let r = py.detach(|| self.device.unhybridized()).map_err(err)?;
        to_py(py, &r)
    }
    #[pyo3(signature = (cross_check=false))]
    fn hybridized(&self, py: Python<'_>, cross_check: bool) -> PyResult<Py<PyAny>> {
        let r = py.detach(|| self.device.hybridized(cross_check)).map_err(err)?;
        to_py(py, &r)
    }
    fn classify(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let r = py.detach(|| self.device.classify()).map_err(err)?;
        to_py(py, &r)
    }
    /// Corrected Kerr report at the dispersive operating point.
    fn kerr(&self, py: Python<'_>) -> PyResult<PyKerrReport> {
        py.detach(|| {
            let unhyb = self.device.unhybridized()?;
            let template = BlockTemplate::new(self.device.block_problem(&unhyb)?, 0)?;
            self.device.kerr_point(&unhyb, &template)
        })
        .map(|p| PyKerrReport(p.corrected))
        .map_err(err)
    }
    /// Loss budget of every mode at the dispersive operating point.
    fn loss_budgets(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        let budgets = py
            .detach(|| {
                let unhyb = self.device.unhybridized()?;
                let template = BlockTemplate::new(self.device.block_problem(&unhyb)?, 0)?;
                let point = self.device.kerr_point(&unhyb, &template)?;
                point.modes.iter().map(|m| self.device.loss_budget(m, &point.problem)).collect::<cqad_core::Result<Vec<_>>>()
            })
            .map_err(err)?;
        to_py(py, &budgets)
    }
}

/// Every violated invariant of a config file as `(key, message)` pairs.
#[pyfunction]
fn validate(path: PathBuf) -> PyResult<Vec<(String, String)>> {
    let loaded = LoadedConfig::load(path).map_err(err)?;
    let lib = loaded.library();
    let mut out: Vec<(String, String)> =
        loaded.config.validate(lib.as_ref().ok()).into_iter().map(|v| (v.key, v.message)).collect();
    if let Err(e) = lib {
        out.insert(0, ("materials.path".into(), e.to_string()));
    }
    Ok(out)
}

/// Kerr matrix from energy participations; one junction per
/// `(inductance, width)` pair.
#[pyfunction]
fn kerr_from_participations(
    labels: Vec<String>,
    frequencies: Vec<f64>,
    participation: Vec<Vec<f64>>,
    junctions: Vec<(f64, f64)>,
) -> PyResult<PyKerrReport> {
    let js = junctions.into_iter().map(|(l, w)| JunctionSpec::new(l, w)).collect::<cqad_core::Result<Vec<_>>>().map_err(err)?;
    hamiltonian::kerr_from_participations(&labels, &frequencies, &participation, &js).map(PyKerrReport).map_err(err)
}

/// Surface-roughness Q for longitudinal order `order`; `inf` when σ = 0.
#[pyfunction]
fn roughness_q(order: usize, sigma: f64, height: f64) -> PyResult<f64> {
    cqad_core::loss::roughness_q(order, sigma, height).map(|q| q.value()).map_err(err)
}

#[pymodule]
fn cqad(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMaterial>()?;
    m.add_class::<PyMaterialLibrary>()?;
    m.add_class::<PyAcousticMode>()?;
    m.add_class::<PyKerrReport>()?;
    m.add_class::<PyDevice>()?;
    m.add_function(wrap_pyfunction!(validate, m)?)?;
    m.add_function(wrap_pyfunction!(kerr_from_participations, m)?)?;
    m.add_function(wrap_pyfunction!(roughness_q, m)?)?;
    Ok(())
}
