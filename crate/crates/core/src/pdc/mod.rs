//! Parametric down-conversion into the entangled pair modes.
//!
//! The interaction `e^{iφ} κ K† + e^{−iφ} κ K` acting on vacuum gives a
//! state whose `n`-pair sector is
//! `e^{−q} r^n e^{inφ} Σ_m (−1)^m |n−m, m; m, n−m⟩`, with `r = tanh τ` and
//! `q = 2 ln cosh τ`. Every ket inside a sector has the same magnitude, the
//! signature of stimulated emission.

mod propagator;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{FockState, Occupation};

pub use propagator::{GainPropagator, PairModes};

/// Default pair-number cutoff.
pub const DEFAULT_N_MAX: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdcParams {
    /// Interaction strength `κt/ħ`.
    pub tau: f64,
    /// Pump phase (radians).
    pub phi: f64,
    /// Cutoff in pair number.
    pub n_max: u32,
}

impl PdcParams {
    pub fn new(tau: f64, phi: f64, n_max: u32) -> Result<Self> {
        let p = PdcParams { tau, phi, n_max };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0) || !self.tau.is_finite() {
            return Err(invalid(format!("tau must be finite and non-negative, got {}", self.tau)));
        }
        if !self.phi.is_finite() {
            return Err(invalid("phi must be finite"));
        }
        if self.n_max < 1 {
            return Err(invalid("n_max must be at least 1"));
        }
        Ok(())
    }

    /// `tanh τ`
    pub fn r(&self) -> f64 {
        self.tau.tanh()
    }

    /// `2 ln cosh τ`
    pub fn q(&self) -> f64 {
        2.0 * self.tau.cosh().ln()
    }

    /// Probability weight beyond the cutoff.
    pub fn analytic_tail(&self) -> f64 {
        analytic_tail(self.tau, self.n_max)
    }
}

/// `Σ_{n > n_max} (n+1) r^{2n} e^{−2q}`, summed in closed form as
/// `x^{N+1} (N + 2 − (N+1) x)` with `x = r²`.
pub fn analytic_tail(tau: f64, n_max: u32) -> f64 {
    let x = tau.tanh().powi(2);
    let n = f64::from(n_max);
    x.powi(n_max as i32 + 1) * (n + 2.0 - (n + 1.0) * x)
}

/// `P(n) = (n+1)(1−r²)² r^{2n}` for the untruncated state.
pub fn ideal_pair_probability(tau: f64, n: u32) -> f64 {
    let x = tau.tanh().powi(2);
    f64::from(n + 1) * (1.0 - x).powi(2) * x.powi(n as i32)
}

/// Untruncated mean pair number `2 sinh² τ`.
pub fn ideal_mean_pairs(tau: f64) -> f64 {
    2.0 * tau.sinh().powi(2)
}

/// `Σ_{n > n_max} n P(n)`: how far a truncated mean falls short of
/// [`ideal_mean_pairs`].
pub fn ideal_mean_tail(tau: f64, n_max: u32) -> f64 {
    let mut sum = 0.0;
    let mut n = n_max + 1;
    loop {
        let term = f64::from(n) * ideal_pair_probability(tau, n);
        sum += term;
        if term <= sum * 1e-18 || term == 0.0 || n > 1_000_000 {
            return sum;
        }
        n += 1;
    }
}

/// Closed-form PDC state; the deficit is set to [`analytic_tail`].
pub fn build_pdc_state(params: &PdcParams) -> Result<FockState> {
    params.validate()?;
    let r = params.r();
    let prefactor = params.tau.cosh().powi(2).recip();
    let mut terms = Vec::new();
    for n in 0..=params.n_max {
        let sector = prefactor * r.powi(n as i32);
        let phase = Complex64::from_polar(1.0, f64::from(n) * params.phi);
        for m in 0..=n {
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            terms.push((Occupation::new(n - m, m, m, n - m), phase * (sign * sector)));
        }
    }
    Ok(FockState::from_raw(params.n_max, terms.into_iter().collect(), params.analytic_tail()))
}

/// Result of [`build_hamiltonian_oracle`].
#[derive(Debug, Clone)]
pub struct OracleState {
    pub state: FockState,
    /// Weight pushed past the cutoff by the numerical propagation.
    pub tail: f64,
}

/// Propagates vacuum through the numerically exponentiated interaction
/// Hamiltonian. Independent of the closed form; used to verify it.
///
/// Fails when the propagated tail exceeds `tail_tol`.
pub fn build_hamiltonian_oracle(params: &PdcParams, tail_tol: f64) -> Result<OracleState> {
    params.validate()?;
    let state = GainPropagator::new(params.tau, params.phi).apply(&FockState::vacuum(params.n_max))?;
    let tail = state.norm_deficit();
    if tail > tail_tol {
        return Err(Error::TruncationOverflow {
            context: format!("oracle at tau = {}, n_max = {}", params.tau, params.n_max),
            tail,
            tol: tail_tol,
        });
    }
    Ok(OracleState { state, tail })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDistribution {
    /// `P(n)` for `n = 0..=n_max`.
    pub probs: Vec<f64>,
    pub mean_pairs: f64,
    /// Most probable pair number (smallest on ties).
    pub peak_n: u32,
    /// Weight beyond the cutoff, carried over from the state.
    pub tail: f64,
}

/// Pair-number statistics of a state whose kets all hold an even photon
/// number; `n` is half the photon count.
pub fn pair_distribution(state: &FockState) -> Result<PairDistribution> {
    let mut probs = vec![0.0; state.n_max() as usize + 1];
    for (occ, amp) in state.iter() {
        let total = occ.total();
        if total % 2 != 0 {
            return Err(Error::NotPairState(occ.to_string()));
        }
        probs[(total / 2) as usize] += amp.norm_sqr();
    }
    let mean_pairs = probs.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
    let peak_n = probs
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (n, &p)| if p > best.1 { (n, p) } else { best })
        .0 as u32;
    Ok(PairDistribution {
        probs,
        mean_pairs,
        peak_n,
        tail: state.norm_deficit(),
    })
}

/// `|amplitude|²` over `|n−m, m; m, n−m⟩`, `m = 0..=n`, normalized within
/// sector `n`.
pub fn sector_profile(state: &FockState, n: u32) -> Result<Vec<f64>> {
    let weights: Vec<f64> = (0..=n)
        .map(|m| state.amplitude(&Occupation::new(n - m, m, m, n - m)).norm_sqr())
        .collect();
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(invalid(format!("state has no weight in pair sector {n}")));
    }
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Distribution over `m` for `n` independent singlet pairs: each pair is
/// `hv` or `vh` with probability ½, so `m` counts the `vh` pairs.
pub fn product_singlet_distribution(n: u32) -> Vec<f64> {
    let mut dist = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; dist.len() + 1];
        for (m, p) in dist.iter().enumerate() {
            next[m] += 0.5 * p;
            next[m + 1] += 0.5 * p;
        }
        dist = next;
    }
    dist
}
