//! Python bindings for the teleportation simulator. The module mirrors the
//! command-line drivers (same configuration, same substream seeding), so a
//! Python sweep reproduces the CLI's CSV numbers bit for bit.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;
use std::f64::consts::PI;

use sfg_teleport::harness::{
    self, BatchStats, CoincidenceRecord, FringeFit, Mode, OverlapFit, RunConfig, SweepRange,
};
use sfg_teleport::{BellState, DetectorId};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_bell(name: &str) -> PyResult<BellState> {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    match key.as_str() {
        "phiplus" => Ok(BellState::PhiPlus),
        "phiminus" => Ok(BellState::PhiMinus),
        "psiplus" => Ok(BellState::PsiPlus),
        "psiminus" => Ok(BellState::PsiMinus),
        _ => Err(value_err(format!(
            "unknown Bell state {name:?}; use PhiPlus, PhiMinus, PsiPlus, or PsiMinus"
        ))),
    }
}

fn parse_detector(name: &str) -> PyResult<DetectorId> {
    DetectorId::FIRING
        .into_iter()
        .find(|d| d.name() == name || d.pair_label() == Some(name))
        .ok_or_else(|| {
            value_err(format!(
                "unknown detector {name:?}; use D4I, D4II, D4III, or D4IV"
            ))
        })
}

/// One polarization qubit alpha|H> + beta|V>.
#[pyclass(name = "InputState", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInputState {
    inner: sfg_teleport::InputState,
}

#[pymethods]
impl PyInputState {
    #[new]
    fn new(alpha: Complex64, beta: Complex64) -> PyResult<Self> {
        Ok(PyInputState {
            inner: sfg_teleport::InputState::new(alpha, beta).map_err(value_err)?,
        })
    }

    /// Linear polarization at `angle_deg` from horizontal.
    #[staticmethod]
    fn linear(angle_deg: f64) -> PyResult<Self> {
        if !angle_deg.is_finite() {
            return Err(value_err("polarization angle must be finite"));
        }
        Ok(PyInputState {
            inner: sfg_teleport::InputState::linear(angle_deg),
        })
    }

    #[getter]
    fn alpha(&self) -> Complex64 {
        self.inner.alpha()
    }

    #[getter]
    fn beta(&self) -> Complex64 {
        self.inner.beta()
    }

    fn __repr__(&self) -> String {
        format!(
            "InputState(alpha={}, beta={})",
            self.inner.alpha(),
            self.inner.beta()
        )
    }
}

/// Photon-pair source settings: relative phase and coherence.
#[pyclass(name = "EprParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEprParams {
    inner: sfg_teleport::EprParams,
}

#[pymethods]
impl PyEprParams {
    #[new]
    #[pyo3(signature = (relative_phase=PI, visibility=1.0))]
    fn new(relative_phase: f64, visibility: f64) -> PyResult<Self> {
        Ok(PyEprParams {
            inner: sfg_teleport::EprParams::new(relative_phase, visibility).map_err(value_err)?,
        })
    }

    #[getter]
    fn relative_phase(&self) -> f64 {
        self.inner.relative_phase
    }

    #[getter]
    fn visibility(&self) -> f64 {
        self.inner.visibility
    }

    fn __repr__(&self) -> String {
        format!(
            "EprParams(relative_phase={}, visibility={})",
            self.inner.relative_phase, self.inner.visibility
        )
    }
}

/// Bell-measurement apparatus settings.
#[pyclass(name = "BsmParams", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBsmParams {
    inner: sfg_teleport::BsmParams,
}

#[pymethods]
impl PyBsmParams {
    #[new]
    #[pyo3(signature = (sfg_efficiency=1.0, prism_offset_um=0.0, overlap_sigma_um=50.0))]
    fn new(sfg_efficiency: f64, prism_offset_um: f64, overlap_sigma_um: f64) -> PyResult<Self> {
        let inner = sfg_teleport::BsmParams {
            sfg_efficiency,
            prism_offset_um,
            overlap_sigma_um,
            ..sfg_teleport::BsmParams::default()
        };
        inner.validate().map_err(value_err)?;
        Ok(PyBsmParams { inner })
    }

    #[getter]
    fn sfg_efficiency(&self) -> f64 {
        self.inner.sfg_efficiency
    }

    #[getter]
    fn prism_offset_um(&self) -> f64 {
        self.inner.prism_offset_um
    }

    #[getter]
    fn overlap_sigma_um(&self) -> f64 {
        self.inner.overlap_sigma_um
    }

    fn __repr__(&self) -> String {
        format!(
            "BsmParams(sfg_efficiency={}, prism_offset_um={}, overlap_sigma_um={})",
            self.inner.sfg_efficiency, self.inner.prism_offset_um, self.inner.overlap_sigma_um
        )
    }
}

/// Amplitudes of a Bell state in the HV product basis.
#[pyfunction]
fn bell_vector(name: &str) -> PyResult<Vec<Complex64>> {
    Ok(sfg_teleport::bell_vector(parse_bell(name)?)
        .amps()
        .to_vec())
}

/// Eight amplitudes of input x pair with the given pair phase.
#[pyfunction]
#[pyo3(signature = (input, epr_phase=PI))]
fn compose_three_pure(input: &PyInputState, epr_phase: f64) -> Vec<Complex64> {
    sfg_teleport::compose_three_pure(&input.inner, epr_phase)
        .amps()
        .to_vec()
}

/// Splits an eight-amplitude state over the Bell basis of the first two
/// photons. Returns (bell_state, (amp0, amp1), weight) per branch.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn bell_decompose(
    amps: Vec<Complex64>,
) -> PyResult<Vec<(String, (Complex64, Complex64), f64)>> {
    let s = sfg_teleport::PureState::new(amps).map_err(value_err)?;
    let branches = sfg_teleport::bell_decompose(&s).map_err(value_err)?;
    Ok(branches
        .iter()
        .map(|b| {
            (
                b.bell.to_string(),
                (b.amps[0], b.amps[1]),
                b.norm_sqr(),
            )
        })
        .collect())
}

/// |<a|b>|^2 for two pure states of equal dimension.
#[pyfunction]
fn fidelity(a: Vec<Complex64>, b: Vec<Complex64>) -> PyResult<f64> {
    let a = sfg_teleport::PureState::new(a).map_err(value_err)?;
    let b = sfg_teleport::PureState::new(b).map_err(value_err)?;
    sfg_teleport::fidelity(&a, &b).map_err(value_err)
}

/// Gaussian beam-overlap factor g(delta_x) = exp(-delta_x^2 / (2 sigma^2)).
#[pyfunction]
fn overlap_factor(delta_x_um: f64, sigma_um: f64) -> PyResult<f64> {
    sfg_teleport::overlap_factor(delta_x_um, sigma_um).map_err(value_err)
}

/// Detection probabilities for one arrangement, keyed by detector name,
/// plus the no-detection share.
#[pyfunction]
fn bsm_probabilities<'py>(
    py: Python<'py>,
    input: &PyInputState,
    epr: &PyEprParams,
    params: &PyBsmParams,
) -> PyResult<Bound<'py, PyDict>> {
    let dist = sfg_teleport::bsm::bsm_for_setup(&input.inner, &epr.inner, &params.inner)
        .map_err(value_err)?;
    let out = PyDict::new(py);
    for d in DetectorId::FIRING {
        out.set_item(d.name(), dist.probability(d))?;
    }
    out.set_item("no_detection", dist.no_detection_probability())?;
    Ok(out)
}

/// The recovery unitary Bob applies for a detector, as a 2x2 row tuple.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn correction_for(
    detector: &str,
) -> PyResult<((Complex64, Complex64), (Complex64, Complex64))> {
    let correction =
        sfg_teleport::correction_for(parse_detector(detector)?).map_err(value_err)?;
    let m = correction.matrix().matrix();
    Ok(((m[0][0], m[0][1]), (m[1][0], m[1][1])))
}

fn outcome_dict<'py>(
    py: Python<'py>,
    outcome: &sfg_teleport::TeleportOutcome,
) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("detector", outcome.detector.name())?;
    out.set_item("message_code", outcome.message.map(|m| m.code()))?;
    out.set_item("succeeded", outcome.succeeded())?;
    out.set_item("fidelity", outcome.fidelity_to_input)?;
    out.set_item(
        "bob_state",
        outcome
            .corrected_bob_state
            .as_ref()
            .map(|rho| rho.entries().to_vec()),
    )?;
    Ok(out)
}

/// One sampled round; the seed fixes the outcome.
#[pyfunction]
#[pyo3(signature = (input, epr, params, seed=0))]
fn teleport_once<'py>(
    py: Python<'py>,
    input: &PyInputState,
    epr: &PyEprParams,
    params: &PyBsmParams,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let mut rng = sfg_teleport::rng::substream(seed, 0);
    let outcome = sfg_teleport::teleport_once(&input.inner, &epr.inner, &params.inner, &mut rng)
        .map_err(value_err)?;
    outcome_dict(py, &outcome)
}

fn stats_dict<'py>(py: Python<'py>, stats: &BatchStats) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("shots", stats.shots)?;
    out.set_item("counts", stats.counts.to_vec())?;
    let frequencies = PyDict::new(py);
    for (k, d) in DetectorId::FIRING.into_iter().enumerate() {
        frequencies.set_item(d.name(), stats.counts[k] as f64 / stats.shots as f64)?;
    }
    frequencies.set_item(
        "no_detection",
        stats.no_detection as f64 / stats.shots as f64,
    )?;
    out.set_item("frequencies", frequencies)?;
    out.set_item("no_detection", stats.no_detection)?;
    out.set_item("teleported", stats.teleported)?;
    out.set_item("success_rate", stats.success_rate())?;
    out.set_item("mean_fidelity", stats.mean_fidelity)?;
    out.set_item("min_fidelity", stats.min_fidelity)?;
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn batch_config(
    mode: Mode,
    seed: u64,
    shots: u64,
    input_angle: f64,
    visibility: f64,
    epr_phase: f64,
    sfg_efficiency: f64,
    overlap_sigma_um: f64,
    prism_offset_um: f64,
) -> RunConfig {
    let mut cfg = RunConfig::for_mode(mode);
    cfg.seed = seed;
    cfg.shots_per_point = shots;
    cfg.input = harness::InputSpec::Angle(input_angle);
    cfg.visibility = visibility;
    cfg.epr_phase_rad = epr_phase;
    cfg.sfg_efficiency = sfg_efficiency;
    cfg.overlap_sigma_um = overlap_sigma_um;
    cfg.prism_offset_um = prism_offset_um;
    cfg
}

/// Samples `shots` full rounds; same numbers as the CLI `teleport` command.
#[pyfunction]
#[pyo3(signature = (seed=0, shots=10_000, input_angle=45.0, visibility=1.0, epr_phase=PI,
                    sfg_efficiency=1.0, overlap_sigma_um=50.0, prism_offset_um=0.0))]
#[allow(clippy::too_many_arguments)]
fn teleport_batch<'py>(
    py: Python<'py>,
    seed: u64,
    shots: u64,
    input_angle: f64,
    visibility: f64,
    epr_phase: f64,
    sfg_efficiency: f64,
    overlap_sigma_um: f64,
    prism_offset_um: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = batch_config(
        Mode::Teleport,
        seed,
        shots,
        input_angle,
        visibility,
        epr_phase,
        sfg_efficiency,
        overlap_sigma_um,
        prism_offset_um,
    );
    let stats = harness::run_teleport_batch(&cfg).map_err(value_err)?;
    stats_dict(py, &stats)
}

/// Samples `shots` rounds against the two-outcome linear-optics reference.
#[pyfunction]
#[pyo3(signature = (seed=0, shots=10_000, input_angle=45.0, visibility=1.0, epr_phase=PI))]
fn baseline_batch<'py>(
    py: Python<'py>,
    seed: u64,
    shots: u64,
    input_angle: f64,
    visibility: f64,
    epr_phase: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = batch_config(
        Mode::Baseline,
        seed,
        shots,
        input_angle,
        visibility,
        epr_phase,
        1.0,
        50.0,
        0.0,
    );
    let stats = harness::run_baseline_batch(&cfg).map_err(value_err)?;
    stats_dict(py, &stats)
}

type RecordRow = (f64, String, u64, u64);

fn rows_of(records: Vec<CoincidenceRecord>) -> Vec<RecordRow> {
    records
        .into_iter()
        .map(|r| (r.sweep_value, r.detector_pair, r.coincidences, r.shots))
        .collect()
}

fn records_of(rows: Vec<RecordRow>) -> Vec<CoincidenceRecord> {
    rows.into_iter()
        .map(|(sweep_value, detector_pair, coincidences, shots)| CoincidenceRecord {
            sweep_value,
            detector_pair,
            coincidences,
            shots,
        })
        .collect()
}

/// Analyzer-angle scan. Rows are (angle_deg, detector_pair, coincidences,
/// shots), identical to the CLI CSV at the same seed.
#[pyfunction]
#[pyo3(signature = (seed=0, shots_per_point=10_000, input_angle=45.0, visibility=1.0,
                    epr_phase=PI, sfg_efficiency=1.0, overlap_sigma_um=50.0,
                    prism_offset_um=0.0, start=0.0, stop=360.0, step=10.0))]
#[allow(clippy::too_many_arguments)]
fn sweep_analyzer(
    seed: u64,
    shots_per_point: u64,
    input_angle: f64,
    visibility: f64,
    epr_phase: f64,
    sfg_efficiency: f64,
    overlap_sigma_um: f64,
    prism_offset_um: f64,
    start: f64,
    stop: f64,
    step: f64,
) -> PyResult<Vec<RecordRow>> {
    let mut cfg = batch_config(
        Mode::SweepAnalyzer,
        seed,
        shots_per_point,
        input_angle,
        visibility,
        epr_phase,
        sfg_efficiency,
        overlap_sigma_um,
        prism_offset_um,
    );
    cfg.sweep = SweepRange { start, stop, step };
    Ok(rows_of(harness::sweep_analyzer(&cfg).map_err(value_err)?))
}

/// Prism-offset scan. Rows are (offset_um, detector_pair, coincidences,
/// shots), identical to the CLI CSV at the same seed.
#[pyfunction]
#[pyo3(signature = (seed=0, shots_per_point=10_000, input_angle=45.0, visibility=1.0,
                    epr_phase=PI, sfg_efficiency=1.0, overlap_sigma_um=50.0,
                    start=-200.0, stop=210.0, step=10.0))]
#[allow(clippy::too_many_arguments)]
fn sweep_overlap(
    seed: u64,
    shots_per_point: u64,
    input_angle: f64,
    visibility: f64,
    epr_phase: f64,
    sfg_efficiency: f64,
    overlap_sigma_um: f64,
    start: f64,
    stop: f64,
    step: f64,
) -> PyResult<Vec<RecordRow>> {
    let mut cfg = batch_config(
        Mode::SweepOverlap,
        seed,
        shots_per_point,
        input_angle,
        visibility,
        epr_phase,
        sfg_efficiency,
        overlap_sigma_um,
        0.0,
    );
    cfg.sweep = SweepRange { start, stop, step };
    Ok(rows_of(harness::sweep_overlap(&cfg).map_err(value_err)?))
}

fn fringe_dict<'py>(py: Python<'py>, fit: &FringeFit) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("amplitude", fit.amplitude)?;
    out.set_item("offset", fit.offset)?;
    out.set_item("phase_deg", fit.phase_deg)?;
    out.set_item("visibility", fit.visibility)?;
    out.set_item("residual", fit.residual)?;
    Ok(out)
}

/// Least-squares cos^2 fit of one detector pair's fringe records.
#[pyfunction]
fn fit_fringe<'py>(
    py: Python<'py>,
    records: Vec<RecordRow>,
    pair: &str,
) -> PyResult<Bound<'py, PyDict>> {
    let records = records_of(records);
    let selected = harness::filter_pair(&records, pair);
    let fit = harness::fit_fringe(&selected).map_err(value_err)?;
    fringe_dict(py, &fit)
}

fn overlap_dict<'py>(py: Python<'py>, fit: &OverlapFit) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("center_um", fit.center_um)?;
    out.set_item("sigma_um", fit.sigma_um)?;
    out.set_item("fwhm_um", fit.fwhm_um)?;
    out.set_item("peak_position_um", fit.peak_position_um)?;
    out.set_item("peak_counts", fit.peak_counts)?;
    Ok(out)
}

/// Moment-based width estimate of an overlap scan, all pairs combined.
#[pyfunction]
fn fit_overlap<'py>(py: Python<'py>, records: Vec<RecordRow>) -> PyResult<Bound<'py, PyDict>> {
    let fit = harness::fit_overlap(&records_of(records)).map_err(value_err)?;
    overlap_dict(py, &fit)
}

/// Fringe phase separation folded to [0, 90] degrees.
#[pyfunction]
fn phase_difference_deg(a_deg: f64, b_deg: f64) -> f64 {
    harness::phase_difference_deg(a_deg, b_deg)
}

#[pymodule]
fn sfg_teleport_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInputState>()?;
    m.add_class::<PyEprParams>()?;
    m.add_class::<PyBsmParams>()?;
    m.add_function(wrap_pyfunction!(bell_vector, m)?)?;
    m.add_function(wrap_pyfunction!(compose_three_pure, m)?)?;
    m.add_function(wrap_pyfunction!(bell_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(fidelity, m)?)?;
    m.add_function(wrap_pyfunction!(overlap_factor, m)?)?;
    m.add_function(wrap_pyfunction!(bsm_probabilities, m)?)?;
    m.add_function(wrap_pyfunction!(correction_for, m)?)?;
    m.add_function(wrap_pyfunction!(teleport_once, m)?)?;
    m.add_function(wrap_pyfunction!(teleport_batch, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_batch, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_analyzer, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(fit_fringe, m)?)?;
    m.add_function(wrap_pyfunction!(fit_overlap, m)?)?;
    m.add_function(wrap_pyfunction!(phase_difference_deg, m)?)?;
    Ok(())
}
