//! Python bindings. States are opaque `FockState` objects; everything else
//! crosses the boundary as floats, tuples and lists.

use eplsim_core::cavity::{self, CavityConfig as CoreCavityConfig};
use eplsim_core::fock::{self, PolarizationBasis, PolarizationOutcome};
use eplsim_core::interference::{self, PassConfig};
use eplsim_core::pdc;
use eplsim_core::polarization::{self, NoisyPairModel, PairInput};
use eplsim_core::{Error, ModeGroup, Occupation, PdcParams};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(eplsim, TruncationOverflowError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::TruncationOverflow { .. } => TruncationOverflowError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn group(name: &str) -> PyResult<ModeGroup> {
    match name.to_ascii_lowercase().as_str() {
        "a" => Ok(ModeGroup::A),
        "b" => Ok(ModeGroup::B),
        _ => Err(PyValueError::new_err(format!("mode group must be 'a' or 'b', got {name:?}"))),
    }
}

fn outcome(name: &str) -> PyResult<PolarizationOutcome> {
    match name.to_ascii_lowercase().as_str() {
        "h" => Ok(PolarizationOutcome::H),
        "v" => Ok(PolarizationOutcome::V),
        _ => Err(PyValueError::new_err(format!("outcome must be 'h' or 'v', got {name:?}"))),
    }
}

type Ket = (u32, u32, u32, u32);

/// Sparse state on the modes (a_h, a_v, b_h, b_v).
#[pyclass(name = "FockState", module = "eplsim", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFockState(fock::FockState);

#[pymethods]
impl PyFockState {
    #[staticmethod]
    fn vacuum(n_max: u32) -> Self {
        PyFockState(fock::FockState::vacuum(n_max))
    }

    /// Builds a state from `[((ah, av, bh, bv), amplitude), ...]`.
    #[staticmethod]
    fn from_terms(n_max: u32, terms: Vec<(Ket, Complex64)>) -> Self {
        PyFockState(fock::FockState::from_terms(
            n_max,
            terms.into_iter().map(|((a, b, c, d), amp)| (Occupation::new(a, b, c, d), amp)),
        ))
    }

    #[getter]
    fn n_max(&self) -> u32 {
        self.0.n_max()
    }

    #[getter]
    fn norm_deficit(&self) -> f64 {
        self.0.norm_deficit()
    }

    fn amplitude(&self, ket: Ket) -> Complex64 {
        self.0.amplitude(&Occupation::new(ket.0, ket.1, ket.2, ket.3))
    }

    /// Nonzero terms in canonical order.
    fn terms(&self) -> Vec<(Ket, Complex64)> {
        self.0
            .iter()
            .map(|(o, a)| {
                let [ah, av, bh, bv] = o.counts();
                ((ah, av, bh, bv), *a)
            })
            .collect()
    }

    fn norm_sqr(&self) -> f64 {
        self.0.norm_sqr()
    }

    fn normalize(&self) -> PyResult<Self> {
        self.0.normalize().map(PyFockState).map_err(to_py)
    }

    fn apply_k_dagger(&self) -> Self {
        PyFockState(self.0.apply_k_dagger())
    }

    fn apply_k(&self) -> Self {
        PyFockState(self.0.apply_k())
    }

    fn swap_polarization(&self) -> Self {
        PyFockState(self.0.swap_polarization())
    }

    fn inner_product(&self, other: &PyFockState) -> Complex64 {
        self.0.inner_product(&other.0)
    }

    fn mean_total_photons(&self) -> f64 {
        self.0.mean_total_photons()
    }

    fn max_amplitude_difference(&self, other: &PyFockState) -> f64 {
        self.0.max_amplitude_difference(&other.0)
    }

    fn schmidt_coefficients(&self) -> Vec<f64> {
        fock::schmidt_coefficients(&self.0)
    }

    #[pyo3(signature = (tol = 1e-10))]
    fn schmidt_rank(&self, tol: f64) -> usize {
        fock::schmidt_rank(&self.0, tol)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn __eq__(&self, other: &PyFockState) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("FockState(n_max={}, terms={})", self.0.n_max(), self.0.len())
    }
}

/// Down-conversion state with interaction strength `tau` and pump phase `phi`.
#[pyfunction]
#[pyo3(signature = (tau, phi = 0.0, n_max = pdc::DEFAULT_N_MAX))]
fn pdc_state(tau: f64, phi: f64, n_max: u32) -> PyResult<PyFockState> {
    let p = PdcParams::new(tau, phi, n_max).map_err(to_py)?;
    pdc::build_pdc_state(&p).map(PyFockState).map_err(to_py)
}

/// Same state by exponentiating the interaction; returns `(state, tail)`.
#[pyfunction]
#[pyo3(signature = (tau, phi = 0.0, n_max = pdc::DEFAULT_N_MAX, tail_tol = 1.0))]
fn hamiltonian_oracle(tau: f64, phi: f64, n_max: u32, tail_tol: f64) -> PyResult<(PyFockState, f64)> {
    let p = PdcParams::new(tau, phi, n_max).map_err(to_py)?;
    let o = pdc::build_hamiltonian_oracle(&p, tail_tol).map_err(to_py)?;
    Ok((PyFockState(o.state), o.tail))
}

/// `(probabilities, mean_pairs, peak_n, tail)`.
#[pyfunction]
fn pair_distribution(state: &PyFockState) -> PyResult<(Vec<f64>, f64, u32, f64)> {
    let d = pdc::pair_distribution(&state.0).map_err(to_py)?;
    Ok((d.probs, d.mean_pairs, d.peak_n, d.tail))
}

#[pyfunction]
fn analytic_tail(tau: f64, n_max: u32) -> f64 {
    pdc::analytic_tail(tau, n_max)
}

#[pyfunction]
fn ideal_mean_pairs(tau: f64) -> f64 {
    pdc::ideal_mean_pairs(tau)
}

fn pass_config(tau: f64, theta: f64, overlap: f64, pump_wavelength_nm: Option<f64>) -> PyResult<PassConfig> {
    let mut cfg = PassConfig { tau, theta, overlap_v: overlap, ..PassConfig::default() };
    if let Some(l) = pump_wavelength_nm {
        cfg.pump_wavelength_nm = l;
    }
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Pair rate after two passes with the pump mirror displaced by `displacement_nm`.
#[pyfunction]
#[pyo3(signature = (tau, theta = 0.0, overlap = 1.0, displacement_nm = 0.0, pump_wavelength_nm = None))]
fn two_pass_rate(tau: f64, theta: f64, overlap: f64, displacement_nm: f64, pump_wavelength_nm: Option<f64>) -> PyResult<f64> {
    Ok(interference::two_pass_rate(&pass_config(tau, theta, overlap, pump_wavelength_nm)?, displacement_nm))
}

/// `(displacements_nm, rates, period_nm)`; the period is `None` without two crossings.
#[pyfunction]
#[pyo3(signature = (tau, theta = 0.0, overlap = 1.0, start_nm = -1000.0, stop_nm = 1000.0, step_nm = 1.0, pump_wavelength_nm = None))]
#[allow(clippy::too_many_arguments)]
fn fringe_scan(
    tau: f64,
    theta: f64,
    overlap: f64,
    start_nm: f64,
    stop_nm: f64,
    step_nm: f64,
    pump_wavelength_nm: Option<f64>,
) -> PyResult<(Vec<f64>, Vec<f64>, Option<f64>)> {
    let cfg = pass_config(tau, theta, overlap, pump_wavelength_nm)?;
    let scan = interference::fringe_scan(&cfg, start_nm, stop_nm, step_nm).map_err(to_py)?;
    let period = interference::fringe_period(&scan, 2.0 * tau * tau);
    Ok((scan.displacements_nm, scan.rates, period))
}

#[pyfunction]
#[pyo3(signature = (n, tau, indistinguishable = true))]
fn n_pass_rate(n: u32, tau: f64, indistinguishable: bool) -> PyResult<f64> {
    interference::n_pass_rate(n, tau, indistinguishable).map(|r| r.probability).map_err(to_py)
}

/// `(betas_deg, coincidences, visibility)` for the Werner model with purity `p`.
#[pyfunction]
#[pyo3(signature = (p, alpha_deg = 45.0))]
fn werner_visibility(p: f64, alpha_deg: f64) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let input = PairInput::Werner(NoisyPairModel::new(p).map_err(to_py)?);
    let c = polarization::visibility_scan(&input, alpha_deg, &polarization::default_beta_grid()).map_err(to_py)?;
    Ok((c.betas_deg, c.coincidences, c.visibility))
}

/// Same as `werner_visibility` for an explicit state, post-selected on coincidences.
#[pyfunction]
#[pyo3(signature = (state, alpha_deg = 45.0))]
fn state_visibility(state: &PyFockState, alpha_deg: f64) -> PyResult<(Vec<f64>, Vec<f64>, f64)> {
    let input = PairInput::from_state(&state.0).map_err(to_py)?;
    let c = polarization::visibility_scan(&input, alpha_deg, &polarization::default_beta_grid()).map_err(to_py)?;
    Ok((c.betas_deg, c.coincidences, c.visibility))
}

#[pyfunction]
fn singlet() -> PyFockState {
    PyFockState(polarization::singlet())
}

/// Detects one photon of `group` behind a polarizer at `basis_deg`;
/// returns `(probability, post_state)`.
#[pyfunction]
#[pyo3(signature = (state, group_name, outcome_name, basis_deg = 0.0))]
fn measure_photon(state: &PyFockState, group_name: &str, outcome_name: &str, basis_deg: f64) -> PyResult<(f64, PyFockState)> {
    let (p, s) = fock::measure_photon(&state.0, group(group_name)?, PolarizationBasis::rotated(basis_deg), outcome(outcome_name)?)
        .map_err(to_py)?;
    Ok((p, PyFockState(s)))
}

/// Per-mode survival `eta` (a_h, a_v, b_h, b_v); returns `[(weight, state), ...]`.
#[pyfunction]
fn apply_loss(state: &PyFockState, eta: [f64; 4]) -> PyResult<Vec<(f64, PyFockState)>> {
    let e = fock::apply_loss(&state.0, eta).map_err(to_py)?;
    Ok(e.branches().iter().map(|(w, s)| (*w, PyFockState(s.clone()))).collect())
}

#[pyclass(name = "CavityConfig", module = "eplsim", get_all, set_all, skip_from_py_object)]
#[derive(Clone)]
struct PyCavityConfig {
    tau_per_pass: f64,
    rounds: u32,
    survival_eta: f64,
    phase_per_round: f64,
    halfwave_swap: bool,
    n_max: u32,
    overflow_tol: f64,
}

impl PyCavityConfig {
    fn core(&self) -> CoreCavityConfig {
        CoreCavityConfig {
            tau_per_pass: self.tau_per_pass,
            rounds: self.rounds,
            survival_eta: self.survival_eta,
            phase_per_round: self.phase_per_round,
            halfwave_swap: self.halfwave_swap,
            n_max: self.n_max,
            overflow_tol: self.overflow_tol,
        }
    }
}

impl From<CoreCavityConfig> for PyCavityConfig {
    fn from(c: CoreCavityConfig) -> Self {
        PyCavityConfig {
            tau_per_pass: c.tau_per_pass,
            rounds: c.rounds,
            survival_eta: c.survival_eta,
            phase_per_round: c.phase_per_round,
            halfwave_swap: c.halfwave_swap,
            n_max: c.n_max,
            overflow_tol: c.overflow_tol,
        }
    }
}

#[pymethods]
impl PyCavityConfig {
    #[new]
    #[pyo3(signature = (
        tau_per_pass = 0.1,
        rounds = 10,
        survival_eta = 0.975,
        phase_per_round = std::f64::consts::PI,
        halfwave_swap = true,
        n_max = 24,
        overflow_tol = 1e-6,
    ))]
    fn new(
        tau_per_pass: f64,
        rounds: u32,
        survival_eta: f64,
        phase_per_round: f64,
        halfwave_swap: bool,
        n_max: u32,
        overflow_tol: f64,
    ) -> PyResult<Self> {
        let cfg = PyCavityConfig { tau_per_pass, rounds, survival_eta, phase_per_round, halfwave_swap, n_max, overflow_tol };
        cfg.core().validate().map_err(to_py)?;
        Ok(cfg)
    }

    /// Config whose single pass on vacuum yields `gain` mean pairs.
    #[staticmethod]
    fn from_pair_gain(gain: f64) -> PyResult<Self> {
        CoreCavityConfig::from_pair_gain(gain).map(Into::into).map_err(to_py)
    }

    fn pair_gain_per_pulse(&self) -> f64 {
        self.core().pair_gain_per_pulse()
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.core())
    }
}

/// Exact cavity run from vacuum.
#[pyclass(name = "Trajectory", module = "eplsim", frozen, get_all)]
struct PyTrajectory {
    rounds: Vec<u32>,
    mean_photons: Vec<f64>,
    mean_pairs: Vec<f64>,
    norm_deficit: Vec<f64>,
    /// `P(n)` photons in mode group a, one list per round.
    sector_probs: Vec<Vec<f64>>,
    /// `(round, tail, message)` when the run stopped on truncation overflow.
    overflow: Option<(u32, f64, String)>,
}

#[pyfunction]
fn simulate_cavity(config: &PyCavityConfig) -> PyResult<PyTrajectory> {
    let t = cavity::simulate_cavity(&config.core()).map_err(to_py)?;
    Ok(PyTrajectory {
        rounds: t.records.iter().map(|r| r.round).collect(),
        mean_photons: t.records.iter().map(|r| r.mean_photons).collect(),
        mean_pairs: t.records.iter().map(|r| r.mean_pairs).collect(),
        norm_deficit: t.records.iter().map(|r| r.norm_deficit).collect(),
        sector_probs: t.records.into_iter().map(|r| r.sector_probs).collect(),
        overflow: t.overflow.map(|o| (o.round, o.tail, o.message)),
    })
}

/// Moment model: `[(round, mean_photons, mean_pairs), ...]`.
#[pyfunction]
fn rate_model(config: &PyCavityConfig) -> PyResult<Vec<(u32, f64, f64)>> {
    let points = cavity::rate_model(&config.core()).map_err(to_py)?;
    Ok(points.into_iter().map(|p| (p.round, p.mean_photons, p.mean_pairs)).collect())
}

#[pyfunction]
fn rounds_to_exceed(config: &PyCavityConfig, photons: f64) -> PyResult<Option<u32>> {
    cavity::rounds_to_exceed(&config.core(), photons).map_err(to_py)
}

#[pyfunction]
fn halfwave_swap(state: &PyFockState) -> PyFockState {
    PyFockState(cavity::halfwave_swap(&state.0))
}

#[pymodule]
fn eplsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("TruncationOverflowError", m.py().get_type::<TruncationOverflowError>())?;
    m.add_class::<PyFockState>()?;
    m.add_class::<PyCavityConfig>()?;
    m.add_class::<PyTrajectory>()?;
    m.add_function(wrap_pyfunction!(pdc_state, m)?)?;
    m.add_function(wrap_pyfunction!(hamiltonian_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(pair_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(analytic_tail, m)?)?;
    m.add_function(wrap_pyfunction!(ideal_mean_pairs, m)?)?;
    m.add_function(wrap_pyfunction!(two_pass_rate, m)?)?;
    m.add_function(wrap_pyfunction!(fringe_scan, m)?)?;
    m.add_function(wrap_pyfunction!(n_pass_rate, m)?)?;
    m.add_function(wrap_pyfunction!(werner_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(state_visibility, m)?)?;
    m.add_function(wrap_pyfunction!(singlet, m)?)?;
    m.add_function(wrap_pyfunction!(measure_photon, m)?)?;
    m.add_function(wrap_pyfunction!(apply_loss, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_cavity, m)?)?;
    m.add_function(wrap_pyfunction!(rate_model, m)?)?;
    m.add_function(wrap_pyfunction!(rounds_to_exceed, m)?)?;
    m.add_function(wrap_pyfunction!(halfwave_swap, m)?)?;
    Ok(())
}
