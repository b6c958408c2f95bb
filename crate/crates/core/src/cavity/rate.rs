//! Moment model of the cavity: exact Heisenberg evolution of the
//! second-order moments `(⟨x†x⟩, ⟨y†y⟩, ⟨xy⟩)` of each pair.
//!
//! The squeezer, loss and swap are all Gaussian, so these moments close
//! under the round map and need no Fock cutoff. Photon counts of thousands
//! per pulse are reachable.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CavityConfig, PairModes};
use crate::error::Result;

/// `(N_x, N_y, M = ⟨xy⟩)` for one pair of modes.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct PairMoments {
    nx: f64,
    ny: f64,
    m: Complex64,
}

impl PairMoments {
    /// Squeezer `exp(g x†y† − g* xy)` with `g = |g| e`.
    fn squeeze(self, tau: f64, e: Complex64) -> Self {
        let (ch, sh) = (tau.cosh(), tau.sinh());
        let cross = ch * sh * (e * self.m.conj() + e.conj() * self.m).re;
        PairMoments {
            nx: ch * ch * self.nx + sh * sh * (self.ny + 1.0) + cross,
            ny: ch * ch * self.ny + sh * sh * (self.nx + 1.0) + cross,
            m: self.m * (ch * ch) + e * (ch * sh * (self.nx + self.ny + 1.0)) + e * e * self.m.conj() * (sh * sh),
        }
    }

    fn attenuate(self, eta: f64) -> Self {
        PairMoments {
            nx: eta * self.nx,
            ny: eta * self.ny,
            m: self.m * eta,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub round: u32,
    pub mean_photons: f64,
    /// Half the mean photon number.
    pub mean_pairs: f64,
}

/// Mean photon and pair numbers after each round, round 0 being vacuum.
pub fn rate_model(cfg: &CavityConfig) -> Result<Vec<RatePoint>> {
    cfg.validate()?;
    let mut pairs = [PairMoments::default(); 2];
    let mut out = vec![RatePoint {
        round: 0,
        mean_photons: 0.0,
        mean_pairs: 0.0,
    }];
    for round in 0..cfg.rounds {
        let phase = cfg.phase_for_round(round);
        for (slot, pair) in [PairModes::Hv, PairModes::Vh].into_iter().enumerate() {
            let sign = if pair == PairModes::Hv { 1.0 } else { -1.0 };
            let e = Complex64::from_polar(sign, phase);
            pairs[slot] = pairs[slot].squeeze(cfg.tau_per_pass, e).attenuate(cfg.survival_eta);
        }
        if cfg.halfwave_swap {
            pairs.swap(0, 1);
        }
        let photons: f64 = pairs.iter().map(|p| p.nx + p.ny).sum();
        out.push(RatePoint {
            round: round + 1,
            mean_photons: photons,
            mean_pairs: photons / 2.0,
        });
    }
    Ok(out)
}

/// `n' = η² [n cosh 2τ + 2 sinh² τ (n + 1)]` per round, a scalar
/// recursion that ignores the pair coherence `⟨xy⟩`. Kept for comparison
/// with [`rate_model`].
pub fn uncorrelated_pair_recursion(cfg: &CavityConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let tau = cfg.tau_per_pass;
    let eta2 = cfg.survival_eta * cfg.survival_eta;
    let mut n = 0.0;
    let mut out = vec![n];
    for _ in 0..cfg.rounds {
        n = eta2 * (n * (2.0 * tau).cosh() + 2.0 * tau.sinh().powi(2) * (n + 1.0));
        out.push(n);
    }
    Ok(out)
}

/// First round at which the moment model exceeds `photons` mean photons.
pub fn rounds_to_exceed(cfg: &CavityConfig, photons: f64) -> Result<Option<u32>> {
    Ok(rate_model(cfg)?
        .into_iter()
        .find(|p| p.mean_photons > photons)
        .map(|p| p.round))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg(tau: f64, eta: f64, rounds: u32) -> CavityConfig {
        CavityConfig {
            tau_per_pass: tau,
            rounds,
            survival_eta: eta,
            ..CavityConfig::default()
        }
    }

    #[test]
    fn zero_gain_stays_vacuum() {
        for p in rate_model(&cfg(0.0, 0.9, 5)).unwrap() {
            assert_eq!(p.mean_photons, 0.0);
        }
    }

    #[test]
    fn one_lossless_round_matches_pdc_mean() {
        let tau: f64 = 0.37;
        let r = rate_model(&cfg(tau, 1.0, 1)).unwrap();
        assert_abs_diff_eq!(r[1].mean_pairs, 2.0 * tau.sinh().powi(2), epsilon = 1e-14);
    }

    #[test]
    fn coherent_lossless_rounds_accumulate_tau() {
        let tau: f64 = 0.1;
        let r = rate_model(&cfg(tau, 1.0, 7)).unwrap();
        for p in &r {
            let expected = 2.0 * (f64::from(p.round) * tau).sinh().powi(2);
            assert_abs_diff_eq!(p.mean_pairs, expected, epsilon = 1e-12 * (1.0 + expected));
        }
    }

    #[test]
    fn uncompensated_swap_undoes_gain() {
        let c = CavityConfig {
            phase_per_round: 0.0,
            ..cfg(0.2, 1.0, 2)
        };
        let r = rate_model(&c).unwrap();
        assert_abs_diff_eq!(r[2].mean_photons, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn recursion_decays_without_gain() {
        let r = uncorrelated_pair_recursion(&cfg(0.0, 0.9, 3)).unwrap();
        assert!(r.iter().all(|&n| n == 0.0));
        let r = uncorrelated_pair_recursion(&cfg(0.2, 1.0, 1)).unwrap();
        assert_abs_diff_eq!(r[1], 2.0 * 0.2f64.sinh().powi(2), epsilon = 1e-15);
    }
}
