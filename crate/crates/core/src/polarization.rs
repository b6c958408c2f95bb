//! Polarizer coincidence analysis of post-selected photon pairs.
//!
//! Only events with exactly one photon in each spatial mode group count, as
//! in two-detector coincidence counting. Noise is a Werner admixture of the
//! maximally mixed two-photon polarization state.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fock::{FockState, ModeGroup, Occupation, StateEnsemble};
use crate::interference::{two_pass_state, PassConfig};

/// Analyzer angle held fixed in front of the first detector.
pub const DEFAULT_ALPHA_DEG: f64 = 45.0;

/// Default analyzer grid step for the second detector.
pub const DEFAULT_BETA_STEP_DEG: f64 = 5.0;

const HH: Occupation = Occupation::new(1, 0, 1, 0);
const HV: Occupation = Occupation::new(1, 0, 0, 1);
const VH: Occupation = Occupation::new(0, 1, 1, 0);
const VV: Occupation = Occupation::new(0, 1, 0, 1);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizerSetting {
    pub alpha_deg: f64,
    pub beta_deg: f64,
}

/// Werner mixture `p |Ψ⁻⟩⟨Ψ⁻| + (1 − p) I/4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisyPairModel {
    pub p: f64,
}

impl NoisyPairModel {
    pub fn new(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(invalid(format!("singlet fraction must lie in [0, 1], got {p}")));
        }
        Ok(NoisyPairModel { p })
    }

    /// Werner state as a branch ensemble.
    pub fn ensemble(&self) -> StateEnsemble {
        let signal = StateEnsemble::pure(&singlet()).expect("singlet is normalizable");
        self.apply(&signal).expect("singlet lies in the coincidence sector")
    }

    /// `p · signal + (1 − p) · I/4`, with the signal post-selected first.
    pub fn apply(&self, signal: &StateEnsemble) -> Result<StateEnsemble> {
        let signal = postselect_coincidences(signal)?;
        let mut branches: Vec<(f64, FockState)> =
            signal.branches().iter().map(|(w, s)| (w * self.p, s.clone())).collect();
        if self.p < 1.0 {
            for occ in [HH, HV, VH, VV] {
                branches.push(((1.0 - self.p) / 4.0, FockState::basis(1, occ)));
            }
        }
        branches.retain(|(w, _)| *w > 0.0);
        StateEnsemble::from_branches(branches)
    }
}

/// Normalized singlet `(|1,0;0,1⟩ − |0,1;1,0⟩)/√2`.
pub fn singlet() -> FockState {
    FockState::vacuum(1).apply_k_dagger().normalize().expect("nonzero")
}

/// Either the analytic Werner model or an explicit state/ensemble.
#[derive(Debug, Clone, PartialEq)]
pub enum PairInput {
    Werner(NoisyPairModel),
    Ensemble(StateEnsemble),
}

impl PairInput {
    pub fn from_state(state: &FockState) -> Result<Self> {
        Ok(PairInput::Ensemble(StateEnsemble::pure(state)?))
    }

    fn ensemble(&self) -> StateEnsemble {
        match self {
            PairInput::Werner(m) => m.ensemble(),
            PairInput::Ensemble(e) => e.clone(),
        }
    }
}

/// Restricts every branch to one photon per spatial group and renormalizes.
pub fn postselect_coincidences(ensemble: &StateEnsemble) -> Result<StateEnsemble> {
    let mut branches = Vec::new();
    for (w, s) in ensemble.branches() {
        let kept = FockState::from_terms(
            1,
            s.iter()
                .filter(|(o, _)| o.in_group(ModeGroup::A) == 1 && o.in_group(ModeGroup::B) == 1)
                .map(|(o, a)| (*o, *a)),
        );
        let weight = w * kept.norm_sqr();
        if weight > 0.0 {
            branches.push((weight, kept));
        }
    }
    if branches.is_empty() {
        return Err(Error::NoTwoPhotonComponent);
    }
    StateEnsemble::from_unnormalized(branches)
}

/// Analyzer direction `(c_h, c_v)`: passing at `angle`, or the orthogonal
/// (blocked) port.
fn analyzer(angle_deg: f64, pass: bool) -> (f64, f64) {
    let (s, c) = angle_deg.to_radians().sin_cos();
    if pass {
        (c, s)
    } else {
        (-s, c)
    }
}

/// Joint outcome probabilities `[a pass/block][b pass/block]` for
/// post-selected pairs; the four entries sum to one.
pub fn outcome_probabilities(input: &PairInput, setting: PolarizerSetting) -> Result<[[f64; 2]; 2]> {
    let ensemble = postselect_coincidences(&input.ensemble())?;
    let mut probs = [[0.0; 2]; 2];
    for (ia, pass_a) in [true, false].into_iter().enumerate() {
        for (ib, pass_b) in [true, false].into_iter().enumerate() {
            let (ah, av) = analyzer(setting.alpha_deg, pass_a);
            let (bh, bv) = analyzer(setting.beta_deg, pass_b);
            probs[ia][ib] = ensemble.expectation(|s| {
                let amp: Complex64 = s.amplitude(&HH) * (ah * bh)
                    + s.amplitude(&HV) * (ah * bv)
                    + s.amplitude(&VH) * (av * bh)
                    + s.amplitude(&VV) * (av * bv);
                amp.norm_sqr()
            });
        }
    }
    Ok(probs)
}

/// Probability that both photons pass their polarizers, given a
/// coincidence. `½ sin²(α − β)` for the singlet.
pub fn coincidence_probability(input: &PairInput, setting: PolarizerSetting) -> Result<f64> {
    Ok(outcome_probabilities(input, setting)?[0][0])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VisibilityMethod {
    /// Closed-form extrema of the Werner curve.
    WernerAnalytic,
    /// Exact extrema of `A + B cos 2β + C sin 2β`, the form every
    /// post-selected coincidence curve takes.
    Harmonic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityCurve {
    pub alpha_deg: f64,
    pub betas_deg: Vec<f64>,
    pub coincidences: Vec<f64>,
    pub visibility: f64,
    /// Visibility read off the sampled grid, for comparison.
    pub grid_visibility: f64,
    pub method: VisibilityMethod,
}

/// `0, step, .., 180` degrees.
pub fn default_beta_grid() -> Vec<f64> {
    let steps = (180.0 / DEFAULT_BETA_STEP_DEG).round() as usize;
    (0..=steps).map(|i| i as f64 * DEFAULT_BETA_STEP_DEG).collect()
}

fn visibility_of(max: f64, min: f64) -> f64 {
    if max + min == 0.0 {
        0.0
    } else {
        (max - min) / (max + min)
    }
}

/// Coincidence curve over `betas` with `alpha` fixed, and its visibility.
pub fn visibility_scan(input: &PairInput, alpha_deg: f64, betas_deg: &[f64]) -> Result<VisibilityCurve> {
    let (lo, hi) = betas_deg
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &b| (lo.min(b), hi.max(b)));
    if !(hi - lo >= 180.0 - 1e-9) {
        return Err(invalid("beta grid must span at least 180 degrees"));
    }
    let coincidences = betas_deg
        .iter()
        .map(|&beta_deg| coincidence_probability(input, PolarizerSetting { alpha_deg, beta_deg }))
        .collect::<Result<Vec<_>>>()?;
    let grid_max = coincidences.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let grid_min = coincidences.iter().copied().fold(f64::INFINITY, f64::min);

    let (visibility, method) = match input {
        PairInput::Werner(m) => {
            // Extrema p/2 + (1 − p)/4 and (1 − p)/4: difference p/2, sum 1/2.
            ((m.p / 2.0) / 0.5, VisibilityMethod::WernerAnalytic)
        }
        PairInput::Ensemble(_) => {
            let at = |beta_deg| coincidence_probability(input, PolarizerSetting { alpha_deg, beta_deg });
            let (f0, f45, f90) = (at(0.0)?, at(45.0)?, at(90.0)?);
            let mean = (f0 + f90) / 2.0;
            let amplitude = (((f0 - f90) / 2.0).powi(2) + (f45 - mean).powi(2)).sqrt();
            (visibility_of(mean + amplitude, mean - amplitude), VisibilityMethod::Harmonic)
        }
    };

    Ok(VisibilityCurve {
        alpha_deg,
        betas_deg: betas_deg.to_vec(),
        coincidences,
        visibility,
        grid_visibility: visibility_of(grid_max, grid_min),
        method,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverlapRegion {
    /// Both passes' pair amplitudes overlap and add coherently.
    Overlap,
    /// Pairs from the two passes are distinguishable and mix incoherently.
    NoOverlap,
}

/// Visibility of the two-pass source in one delay region, with Werner
/// noise `noise` applied to the post-selected pairs.
pub fn two_pass_visibility(
    cfg: &PassConfig,
    region: OverlapRegion,
    noise: NoisyPairModel,
    alpha_deg: f64,
    betas_deg: &[f64],
) -> Result<VisibilityCurve> {
    cfg.validate()?;
    let signal = match region {
        OverlapRegion::Overlap => {
            let coherent = PassConfig { overlap_v: 1.0, ..*cfg };
            StateEnsemble::pure(&two_pass_state(&coherent)?)?
        }
        OverlapRegion::NoOverlap => {
            let vacuum = FockState::vacuum(1);
            let pair = vacuum.apply_k_dagger();
            let first = pair.scale(Complex64::new(cfg.tau, 0.0));
            let second = pair.scale(Complex64::from_polar(cfg.tau, cfg.theta));
            StateEnsemble::from_unnormalized(vec![(0.5, first), (0.5, second)])?
        }
    };
    let noisy = noise.apply(&signal)?;
    visibility_scan(&PairInput::Ensemble(noisy), alpha_deg, betas_deg)
}
