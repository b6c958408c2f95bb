//! Round trips through a ring cavity holding the down-conversion crystal.
//!
//! One round applies, in order: the exact gain unitary with pump phase
//! `round · phase_per_round`, per-photon survival `eta` on all four modes,
//! and optionally the half-wave plate that exchanges h and v. The swap
//! flips the sign of `K†`, so a pump phase advancing by `π` per round keeps
//! successive passes in phase.

mod factor;
mod rate;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{apply_loss, FockState, ModeGroup, StateEnsemble};
use crate::pdc::{build_pdc_state, GainPropagator, PairModes, PdcParams};

use factor::{GainCache, PairFactor};
pub use rate::{rate_model, rounds_to_exceed, uncorrelated_pair_recursion, RatePoint};

/// Eigen-weights below this are dropped when compressing ensembles.
const COMPRESS_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityConfig {
    pub tau_per_pass: f64,
    pub rounds: u32,
    /// Per-photon survival probability per round.
    pub survival_eta: f64,
    /// Pump phase advance per round (radians).
    pub phase_per_round: f64,
    pub halfwave_swap: bool,
    pub n_max: u32,
    /// Largest truncation tail any single round may add.
    pub overflow_tol: f64,
}

impl Default for CavityConfig {
    fn default() -> Self {
        CavityConfig {
            tau_per_pass: 0.1,
            rounds: 10,
            survival_eta: 0.975,
            phase_per_round: PI,
            halfwave_swap: true,
            n_max: 24,
            overflow_tol: 1e-6,
        }
    }
}

impl CavityConfig {
    /// Config whose single pass creates `gain` pairs on average from vacuum.
    pub fn from_pair_gain(gain: f64) -> Result<Self> {
        if !(gain >= 0.0 && gain.is_finite()) {
            return Err(invalid(format!("pair gain must be finite and non-negative, got {gain}")));
        }
        Ok(CavityConfig {
            tau_per_pass: (gain / 2.0).sqrt().asinh(),
            ..CavityConfig::default()
        })
    }

    /// `2 sinh² τ`: mean pairs from one pass on vacuum.
    pub fn pair_gain_per_pulse(&self) -> f64 {
        2.0 * self.tau_per_pass.sinh().powi(2)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_per_pass >= 0.0 && self.tau_per_pass.is_finite()) {
            return Err(invalid(format!("tau must be finite and non-negative, got {}", self.tau_per_pass)));
        }
        if !(0.0..=1.0).contains(&self.survival_eta) {
            return Err(invalid(format!("eta must lie in [0, 1], got {}", self.survival_eta)));
        }
        if !self.phase_per_round.is_finite() {
            return Err(invalid("phase per round must be finite"));
        }
        if self.n_max < 1 {
            return Err(invalid("n_max must be at least 1"));
        }
        if !(self.overflow_tol > 0.0) {
            return Err(invalid("overflow tolerance must be positive"));
        }
        Ok(())
    }

    /// Pump phase of 0-based round `round`.
    pub fn phase_for_round(&self, round: u32) -> f64 {
        f64::from(round) * self.phase_per_round
    }
}

/// Exchanges h and v in both spatial modes: `(i,j;k,l) → (j,i;l,k)`.
pub fn halfwave_swap(state: &FockState) -> FockState {
    state.swap_polarization()
}

/// One round on a general ensemble, `round` being 0-based.
///
/// Branches in vacuum take the closed-form column, so one round from vacuum
/// reproduces [`build_pdc_state`] exactly.
pub fn cavity_round(ensemble: &StateEnsemble, cfg: &CavityConfig, round: u32) -> Result<StateEnsemble> {
    cfg.validate()?;
    let phase = cfg.phase_for_round(round);
    let mut gain = GainPropagator::new(cfg.tau_per_pass, phase);
    let vacuum = FockState::vacuum(ensemble.n_max());

    let mut amplified = Vec::with_capacity(ensemble.len());
    let mut tail = 0.0;
    for (w, s) in ensemble.branches() {
        let out = if *s == vacuum {
            build_pdc_state(&PdcParams::new(cfg.tau_per_pass, phase, s.n_max())?)?
        } else {
            gain.apply(s)?
        };
        tail += w * (out.norm_deficit() - s.norm_deficit());
        amplified.push((*w, out));
    }
    if tail > cfg.overflow_tol {
        return Err(Error::TruncationOverflow {
            context: format!("cavity round {}", round + 1),
            tail,
            tol: cfg.overflow_tol,
        });
    }

    let mut next = if cfg.survival_eta == 1.0 {
        StateEnsemble::from_branches(amplified)?
    } else {
        let mut branches = Vec::new();
        for (w, s) in &amplified {
            for (bw, bs) in apply_loss(s, [cfg.survival_eta; 4])?.branches() {
                branches.push((w * bw, bs.clone()));
            }
        }
        StateEnsemble::from_branches(branches)?.compress(COMPRESS_TOL)
    };
    if cfg.halfwave_swap {
        next = next.map_states(halfwave_swap);
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u32,
    pub mean_photons: f64,
    /// Half the mean photon number.
    pub mean_pairs: f64,
    pub norm_deficit: f64,
    /// `P(n)` photons in spatial mode `a`, normalized over retained weight.
    pub sector_probs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Overflow {
    /// Round whose gain overflowed (1-based).
    pub round: u32,
    pub tail: f64,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// Round 0 is the initial vacuum.
    pub records: Vec<RoundRecord>,
    /// Set when the run stopped early on truncation overflow.
    pub overflow: Option<Overflow>,
}

fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn factor_record(round: u32, factors: &[PairFactor; 2]) -> RoundRecord {
    let traces = [factors[0].trace(), factors[1].trace()];
    let mean_photons = factors[0].photon_moment() / traces[0] + factors[1].photon_moment() / traces[1];
    let (px0, _) = factors[0].marginals();
    let (px1, _) = factors[1].marginals();
    let norm = traces[0] * traces[1];
    let sector_probs = convolve(&px0, &px1).into_iter().map(|p| p / norm).collect();
    RoundRecord {
        round,
        mean_photons,
        mean_pairs: mean_photons / 2.0,
        norm_deficit: (1.0 - norm).max(0.0),
        sector_probs,
    }
}

/// Trajectory from vacuum over `cfg.rounds` rounds.
///
/// The two pairs `(a_h, b_v)` and `(a_v, b_h)` evolve as independent
/// two-mode density operators, each capped at `2 n_max` photons, which the
/// swap exchanges. Stops early, keeping the records so far, if a round adds
/// more than `overflow_tol` of truncation tail.
pub fn simulate_cavity(cfg: &CavityConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut factors = [PairFactor::vacuum(cfg.n_max), PairFactor::vacuum(cfg.n_max)];
    let mut gain = GainCache::new(cfg.tau_per_pass);
    let mut records = vec![factor_record(0, &factors)];
    for round in 0..cfg.rounds {
        gain.set_phase(cfg.phase_for_round(round));
        let before = factors[0].trace() * factors[1].trace();
        factors[0].apply_gain(PairModes::Hv, &mut gain)?;
        factors[1].apply_gain(PairModes::Vh, &mut gain)?;
        let after = factors[0].trace() * factors[1].trace();
        let tail = before - after;
        if tail > cfg.overflow_tol {
            let err = Error::TruncationOverflow {
                context: format!("cavity round {}", round + 1),
                tail,
                tol: cfg.overflow_tol,
            };
            return Ok(Trajectory {
                records,
                overflow: Some(Overflow {
                    round: round + 1,
                    tail,
                    message: err.to_string(),
                }),
            });
        }
        for f in factors.iter_mut() {
            f.apply_loss(cfg.survival_eta);
        }
        if cfg.halfwave_swap {
            factors.swap(0, 1);
        }
        records.push(factor_record(round + 1, &factors));
    }
    Ok(Trajectory { records, overflow: None })
}

fn ensemble_record(round: u32, e: &StateEnsemble) -> RoundRecord {
    let mut sector_probs = e.group_photon_distribution(ModeGroup::A);
    let kept: f64 = sector_probs.iter().sum();
    for p in &mut sector_probs {
        *p /= kept;
    }
    let mean_photons = e.mean_total_photons();
    RoundRecord {
        round,
        mean_photons,
        mean_pairs: mean_photons / 2.0,
        norm_deficit: e.norm_deficit(),
        sector_probs,
    }
}

/// Trajectory from iterating [`cavity_round`] on the full four-mode
/// ensemble. Exact within the joint cutoff but far slower than
/// [`simulate_cavity`]; suited to small `n_max`.
pub fn simulate_cavity_fock(cfg: &CavityConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let mut ensemble = StateEnsemble::pure(&FockState::vacuum(cfg.n_max))?;
    let mut records = vec![ensemble_record(0, &ensemble)];
    for round in 0..cfg.rounds {
        ensemble = match cavity_round(&ensemble, cfg, round) {
            Ok(e) => e,
            Err(err @ Error::TruncationOverflow { .. }) => {
                let tail = match &err {
                    Error::TruncationOverflow { tail, .. } => *tail,
                    _ => unreachable!(),
                };
                return Ok(Trajectory {
                    records,
                    overflow: Some(Overflow {
                        round: round + 1,
                        tail,
                        message: err.to_string(),
                    }),
                });
            }
            Err(err) => return Err(err),
        };
        records.push(ensemble_record(round + 1, &ensemble));
    }
    Ok(Trajectory { records, overflow: None })
}

/// Pair amplitude `⟨0|K|ψ⟩ / ⟨0|KK†|0⟩` of a state.
pub fn pair_amplitude(state: &FockState) -> Complex64 {
    let k = FockState::vacuum(state.n_max()).apply_k_dagger();
    k.inner_product(state) / k.norm_sqr()
}
