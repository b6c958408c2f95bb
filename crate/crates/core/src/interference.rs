//! Interference of pair amplitudes created on successive passes through the
//! crystal.
//!
//! To first order in `τ`, two passes give `(1 + τ(1 + e^{iθ})K†)|0⟩`. Rates
//! are expressed in units of the single-pass pair rate `τ²`, i.e. as the
//! squared coefficient of `K†|0⟩`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fock::FockState;
use crate::pdc::GainPropagator;

/// Pump wavelength of the frequency-doubled 780 nm source.
pub const DEFAULT_PUMP_WAVELENGTH_NM: f64 = 390.0;

/// Gaussian envelope width (standard deviation, in pump-path delay) giving a
/// 20 µm FWHM envelope.
pub const DEFAULT_COHERENCE_LENGTH_NM: f64 = 20_000.0 / 2.354_820_045_030_949_4;

/// `n τ` above which first-order scaling is flagged.
pub const FIRST_ORDER_LIMIT: f64 = 0.3;

/// `⟨0|K K†|0⟩`
const K_DAGGER_VACUUM_NORM_SQR: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassConfig {
    /// Per-pass interaction strength.
    pub tau: f64,
    /// Relative phase of the second pass at zero delay (radians).
    pub theta: f64,
    /// Indistinguishability of the two pair amplitudes, in [0, 1].
    pub overlap_v: f64,
    pub pump_wavelength_nm: f64,
    pub coherence_length_nm: f64,
}

impl Default for PassConfig {
    fn default() -> Self {
        PassConfig {
            tau: 0.1,
            theta: 0.0,
            overlap_v: 1.0,
            pump_wavelength_nm: DEFAULT_PUMP_WAVELENGTH_NM,
            coherence_length_nm: DEFAULT_COHERENCE_LENGTH_NM,
        }
    }
}

impl PassConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("tau must be finite and non-negative, got {}", self.tau)));
        }
        if !self.theta.is_finite() {
            return Err(invalid("theta must be finite"));
        }
        if !(0.0..=1.0).contains(&self.overlap_v) {
            return Err(invalid(format!("overlap must lie in [0, 1], got {}", self.overlap_v)));
        }
        if !(self.pump_wavelength_nm > 0.0 && self.pump_wavelength_nm.is_finite()) {
            return Err(invalid("pump wavelength must be positive"));
        }
        if !(self.coherence_length_nm > 0.0 && self.coherence_length_nm.is_finite()) {
            return Err(invalid("coherence length must be positive"));
        }
        Ok(())
    }

    /// Relative pass phase after displacing the pump mirror by `d` nm; the
    /// retro-reflected pump path changes by `2d`.
    pub fn phase_at(&self, displacement_nm: f64) -> f64 {
        self.theta + 2.0 * PI * 2.0 * displacement_nm / self.pump_wavelength_nm
    }

    /// Overlap reduced by the Gaussian coherence envelope at displacement `d`.
    pub fn effective_overlap(&self, displacement_nm: f64) -> f64 {
        let delay = 2.0 * displacement_nm;
        self.overlap_v * (-(delay * delay) / (2.0 * self.coherence_length_nm.powi(2))).exp()
    }
}

/// First-order two-pass state `(1 + τ(1 + e^{iθ})K†)|0⟩`, unnormalized.
/// Assumes fully indistinguishable passes.
pub fn two_pass_state(cfg: &PassConfig) -> Result<FockState> {
    cfg.validate()?;
    if cfg.overlap_v != 1.0 {
        return Err(invalid(
            "two_pass_state needs overlap_v = 1; use two_pass_rate for partial distinguishability",
        ));
    }
    let vacuum = FockState::vacuum(1);
    let coeff = Complex64::new(cfg.tau, 0.0) * (Complex64::new(1.0, 0.0) + Complex64::from_polar(1.0, cfg.theta));
    vacuum.add_scaled(&vacuum.apply_k_dagger(), coeff)
}

/// One-pair-sector weight in units of `⟨0|KK†|0⟩`, i.e. `|c|²` for a pair
/// component `c K†|0⟩`.
pub fn pair_rate(state: &FockState) -> f64 {
    state
        .iter()
        .filter(|(o, _)| o.total() == 2)
        .map(|(_, a)| a.norm_sqr())
        .sum::<f64>()
        / K_DAGGER_VACUUM_NORM_SQR
}

/// `τ² [2 + 2 v_eff(d) cos θ(d)]`: two distinguishable passes give `2τ²`.
pub fn two_pass_rate(cfg: &PassConfig, displacement_nm: f64) -> f64 {
    let t2 = cfg.tau * cfg.tau;
    t2 * (2.0 + 2.0 * cfg.effective_overlap(displacement_nm) * cfg.phase_at(displacement_nm).cos())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    pub displacements_nm: Vec<f64>,
    pub rates: Vec<f64>,
}

/// Rates on the grid `start, start + step, ..` up to `stop` inclusive.
pub fn fringe_scan(cfg: &PassConfig, start_nm: f64, stop_nm: f64, step_nm: f64) -> Result<FringeScan> {
    cfg.validate()?;
    if !(start_nm.is_finite() && stop_nm.is_finite()) || stop_nm < start_nm {
        return Err(invalid("scan range must satisfy start <= stop"));
    }
    let points = if stop_nm == start_nm {
        1
    } else {
        if !(step_nm > 0.0) {
            return Err(invalid("scan step must be positive"));
        }
        ((stop_nm - start_nm) / step_nm + 1e-9).floor() as usize + 1
    };
    let displacements_nm: Vec<f64> = (0..points).map(|i| start_nm + i as f64 * step_nm).collect();
    let rates = displacements_nm.iter().map(|&d| two_pass_rate(cfg, d)).collect();
    Ok(FringeScan { displacements_nm, rates })
}

/// Mean fringe period from zero crossings of `rate − baseline`, with linear
/// interpolation between samples. `None` with fewer than two crossings.
pub fn fringe_period(scan: &FringeScan, baseline: f64) -> Option<f64> {
    let mut crossings = Vec::new();
    let pts: Vec<(f64, f64)> = scan
        .displacements_nm
        .iter()
        .zip(&scan.rates)
        .map(|(&d, &r)| (d, r - baseline))
        .collect();
    for w in pts.windows(2) {
        let ((d0, y0), (d1, y1)) = (w[0], w[1]);
        if y0 == 0.0 {
            crossings.push(d0);
        } else if y0 * y1 < 0.0 {
            crossings.push(d0 + (d1 - d0) * y0 / (y0 - y1));
        }
    }
    if crossings.len() < 2 {
        return None;
    }
    let span = crossings[crossings.len() - 1] - crossings[0];
    // Consecutive crossings are half a period apart.
    Some(2.0 * span / (crossings.len() - 1) as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NPassRate {
    pub probability: f64,
    pub warning: Option<String>,
}

/// Pair probability after `n` passes: `n² τ²` with aligned indistinguishable
/// amplitudes, `n τ²` for distinguishable ones.
pub fn n_pass_rate(n: u32, tau: f64, indistinguishable: bool) -> Result<NPassRate> {
    if n < 1 {
        return Err(invalid("number of passes must be at least 1"));
    }
    if !(tau >= 0.0 && tau.is_finite()) {
        return Err(invalid("tau must be finite and non-negative"));
    }
    let nf = f64::from(n);
    let probability = if indistinguishable { nf * nf * tau * tau } else { nf * tau * tau };
    let warning = (nf * tau > FIRST_ORDER_LIMIT).then(|| {
        format!("n * tau = {} exceeds {FIRST_ORDER_LIMIT}; first-order scaling is unreliable", nf * tau)
    });
    Ok(NPassRate { probability, warning })
}

/// Pair rate after `n` exact gain passes with aligned phases, starting from
/// vacuum.
pub fn n_pass_exact_rate(n: u32, tau: f64, n_max: u32) -> Result<f64> {
    let mut gain = GainPropagator::new(tau, 0.0);
    let mut state = FockState::vacuum(n_max);
    for _ in 0..n {
        state = gain.apply(&state)?;
    }
    Ok(pair_rate(&state))
}
