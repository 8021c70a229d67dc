//! Python bindings for the `irs_thz` simulation library.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use irs_thz::array::{self, ArraySpec};
use irs_thz::codebook::{self, Candidate, HierarchicalCodebook};
use irs_thz::harness::csv;
use irs_thz::harness::{self, ScenarioConfig};
use irs_thz::{quantization, training, transmission, CVector};

fn err(e: irs_thz::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Experiment configuration; defaults match the command line tool.
#[pyclass(name = "Config", from_py_object)]
#[derive(Clone)]
pub struct PyConfig(pub ScenarioConfig);

#[pymethods]
impl PyConfig {
    #[new]
    #[pyo3(signature = (text = ""))]
    fn new(text: &str) -> PyResult<Self> {
        ScenarioConfig::parse(text).map(Self).map_err(err)
    }

    #[staticmethod]
    fn from_file(path: std::path::PathBuf) -> PyResult<Self> {
        ScenarioConfig::from_file(&path).map(Self).map_err(err)
    }

    /// Sets one key from its textual value and revalidates.
    fn set(&mut self, key: &str, value: &str) -> PyResult<()> {
        let mut next = self.0.clone();
        next.set(key, value).map_err(err)?;
        next.validate().map_err(err)?;
        self.0 = next;
        Ok(())
    }

    #[getter]
    fn trials(&self) -> usize {
        self.0.trials
    }

    #[setter]
    fn set_trials(&mut self, trials: usize) -> PyResult<()> {
        self.set("trials", &trials.to_string())
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.0.seed = seed;
    }

    fn __repr__(&self) -> String {
        format!("Config(n_t={}, n_r={}, n_u={}, trials={}, seed={})", self.0.n_t, self.0.n_r, self.0.n_u, self.0.trials, self.0.seed)
    }
}

/// Hierarchical beam-training codebook for a half-wavelength ULA.
#[pyclass(name = "Codebook", frozen)]
pub struct PyCodebook(HierarchicalCodebook);

#[pymethods]
impl PyCodebook {
    #[new]
    #[pyo3(signature = (num_elements, k, branching = 2))]
    fn new(num_elements: usize, k: usize, branching: usize) -> PyResult<Self> {
        HierarchicalCodebook::new(ArraySpec::half_wavelength(num_elements), k, branching).map(Self).map_err(err)
    }

    #[getter]
    fn num_stages(&self) -> usize {
        self.0.num_stages()
    }

    #[getter]
    fn k(&self) -> usize {
        self.0.k()
    }

    /// Beam of candidate `index` at 1-based `stage`; `None` for padding.
    fn beam(&self, stage: usize, index: usize) -> PyResult<Option<Vec<Complex64>>> {
        let c = self.0.candidate(stage, index).map_err(err)?;
        Ok(c.map(|c| c.beam.coefficients().iter().copied().collect()))
    }

    /// Leaf directions (radians) in index order.
    fn leaf_directions(&self) -> Vec<f64> {
        self.0.grid().directions().to_vec()
    }

    fn discrimination_margin(&self) -> f64 {
        self.0.discrimination_margin()
    }

    /// Noiseless tree search for a single path at `angle`; returns
    /// `(leaf, measurements)`.
    fn search(&self, angle: f64) -> PyResult<(usize, usize)> {
        let path = array::steering_vector(self.0.spec(), angle);
        let out = training::hierarchical_search(&self.0, |c: &Candidate| Ok(c.beam.coefficients().dotc(&path).norm_sqr()))
            .map_err(err)?;
        Ok((out.leaf, out.measurements))
    }
}

#[pyfunction]
fn steering_vector(num_elements: usize, angle: f64) -> Vec<Complex64> {
    array::steering_vector(&ArraySpec::half_wavelength(num_elements), angle).iter().copied().collect()
}

#[pyfunction]
fn edge_energy(num_elements: usize, k: usize) -> PyResult<f64> {
    array::edge_energy(num_elements, k).map_err(err)
}

#[pyfunction]
fn worst_error(num_elements: usize, k: usize) -> PyResult<f64> {
    quantization::worst_error(num_elements, k).map_err(err)
}

#[pyfunction]
fn average_error(num_elements: usize, k: usize) -> PyResult<f64> {
    quantization::average_error(num_elements, k).map_err(err)
}

/// Returns `(factors, mu)`.
#[pyfunction]
fn water_filling(gains: Vec<f64>, transmit_power: f64, noise_power: f64) -> PyResult<(Vec<f64>, f64)> {
    let a = transmission::water_filling(&gains, transmit_power, noise_power).map_err(err)?;
    Ok((a.factors, a.mu))
}

/// Returns `(analog rows, digital)` with `analog @ digital == w`.
#[pyfunction]
fn two_rf_factorization(w: Vec<Complex64>) -> PyResult<(Vec<[Complex64; 2]>, [Complex64; 2])> {
    let r = codebook::two_rf_factorization(&CVector::from_vec(w)).map_err(err)?;
    let rows = r.analog.row_iter().map(|row| [row[0], row[1]]).collect();
    Ok((rows, [r.digital[0], r.digital[1]]))
}

/// `[(snr_db, mp)]` for one array size and grid.
#[pyfunction]
#[pyo3(signature = (num_elements, k, snr_db, trials, seed = 1))]
fn misalignment_curve(num_elements: usize, k: usize, snr_db: Vec<f64>, trials: usize, seed: u64) -> PyResult<Vec<(f64, f64)>> {
    let pts = training::misalignment_curve(num_elements, k, &snr_db, trials, seed).map_err(err)?;
    Ok(pts.iter().map(|p| (p.snr_db, p.probability())).collect())
}

/// CSV text for one of `codebook`, `mp-curve`, `rate-curve`, `estimate`,
/// `quant-table`.
#[pyfunction]
fn run_experiment(py: Python<'_>, name: &str, config: PyConfig) -> PyResult<String> {
    let c = config.0;
    let name = name.to_string();
    py.detach(move || match name.as_str() {
        "codebook" => harness::codebook_patterns(&c).map(|r| csv::codebook_csv(&r)),
        "mp-curve" => harness::run_mp_experiment(&c).map(|r| csv::mp_csv(&r)),
        "rate-curve" => harness::run_rate_experiment(&c).map(|r| csv::rate_csv(&r)),
        "estimate" => harness::trace_estimates(&c).map(|r| csv::estimate_csv(&r)),
        "quant-table" => harness::quant_table(&c).map(|r| csv::quant_csv(&r)),
        other => Err(irs_thz::Error::Config(format!("unknown experiment `{other}`"))),
    })
    .map_err(err)
}

#[pymodule]
pub fn irs_thz_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyConfig>()?;
    m.add_class::<PyCodebook>()?;
    m.add_function(wrap_pyfunction!(steering_vector, m)?)?;
    m.add_function(wrap_pyfunction!(edge_energy, m)?)?;
    m.add_function(wrap_pyfunction!(worst_error, m)?)?;
    m.add_function(wrap_pyfunction!(average_error, m)?)?;
    m.add_function(wrap_pyfunction!(water_filling, m)?)?;
    m.add_function(wrap_pyfunction!(two_rf_factorization, m)?)?;
    m.add_function(wrap_pyfunction!(misalignment_curve, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
