use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FockState, Mode, ModeGroup, Occupation, StateEnsemble};
use crate::error::{invalid, Error, Result};

/// Linear polarization basis rotated by `angle_deg` from H/V.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarizationBasis {
    pub angle_deg: f64,
}

impl PolarizationBasis {
    pub const HV: PolarizationBasis = PolarizationBasis { angle_deg: 0.0 };

    pub fn rotated(angle_deg: f64) -> Self {
        PolarizationBasis { angle_deg }
    }

    /// Coefficients `(c_h, c_v)` of the analyzer direction for `outcome`.
    fn direction(&self, outcome: PolarizationOutcome) -> (f64, f64) {
        let t = self.angle_deg.to_radians();
        let (s, c) = t.sin_cos();
        match outcome {
            PolarizationOutcome::H => (c, s),
            PolarizationOutcome::V => (-s, c),
        }
    }
}

/// Outcome label: `H` is the direction at the basis angle, `V` the
/// orthogonal one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolarizationOutcome {
    H,
    V,
}

/// Removes one photon from `group` through `c_h a_h + c_v a_v`.
fn detect(state: &FockState, group: ModeGroup, coeffs: (f64, f64)) -> FockState {
    let (mh, mv) = group.modes();
    let h = state.annihilate(mh).scale(Complex64::new(coeffs.0, 0.0));
    let v = state.annihilate(mv);
    h.add_scaled(&v, Complex64::new(coeffs.1, 0.0)).expect("same cutoff")
}

/// Detects one photon of `group` in `basis` with result `outcome`.
///
/// Detection is single-photon annihilation along the analyzer direction.
/// Returns the outcome probability (normalized over the two outcomes) and
/// the renormalized post-measurement state, whose deficit fraction matches
/// the input's.
pub fn measure_photon(
    state: &FockState,
    group: ModeGroup,
    basis: PolarizationBasis,
    outcome: PolarizationOutcome,
) -> Result<(f64, FockState)> {
    if state.iter().all(|(o, _)| o.in_group(group) == 0) {
        return Err(Error::NoPhoton(group.name()));
    }
    let chosen = detect(state, group, basis.direction(outcome));
    let other_outcome = match outcome {
        PolarizationOutcome::H => PolarizationOutcome::V,
        PolarizationOutcome::V => PolarizationOutcome::H,
    };
    let other = detect(state, group, basis.direction(other_outcome));
    let (p_chosen, p_other) = (chosen.norm_sqr(), other.norm_sqr());
    let probability = p_chosen / (p_chosen + p_other);
    if chosen.is_zero() {
        return Err(Error::ImpossibleOutcome);
    }
    let deficit = state.norm_deficit() / (state.norm_sqr() + state.norm_deficit());
    Ok((probability, chosen.normalized_with_deficit(deficit)?))
}

fn check_transmissions(eta: &[f64; 4]) -> Result<()> {
    for (mode, &e) in Mode::ALL.iter().zip(eta) {
        if !(0.0..=1.0).contains(&e) {
            return Err(invalid(format!("transmission for {mode} must lie in [0, 1], got {e}")));
        }
    }
    Ok(())
}

/// `√(C(n,k) η^(n-k) (1-η)^k)`: amplitude for losing `k` of `n` photons.
pub(crate) fn loss_amplitude(n: u32, k: u32, eta: f64) -> f64 {
    let mut binom = 1.0;
    for t in 0..k {
        binom *= f64::from(n - t) / f64::from(t + 1);
    }
    (binom * eta.powi((n - k) as i32) * (1.0 - eta).powi(k as i32)).sqrt()
}

/// Beam-splitter loss with per-mode transmissions `eta` (ordered a_h, a_v,
/// b_h, b_v), expanded into Kraus branches labelled by photons lost per mode.
///
/// Branch weights are the Kraus probabilities; each branch is normalized and
/// keeps the input's deficit fraction.
pub fn apply_loss(state: &FockState, eta: [f64; 4]) -> Result<StateEnsemble> {
    check_transmissions(&eta)?;
    if state.is_zero() {
        return Err(Error::ZeroState);
    }
    if eta.iter().all(|&e| e == 1.0) {
        return StateEnsemble::pure(state);
    }

    let mut branches: BTreeMap<[u32; 4], BTreeMap<Occupation, Complex64>> = BTreeMap::new();
    for (occ, amp) in state.iter() {
        let counts = occ.counts();
        // Per-mode lists of (lost, amplitude factor), skipping exact zeros.
        let per_mode: Vec<Vec<(u32, f64)>> = counts
            .iter()
            .zip(eta)
            .map(|(&n, e)| {
                (0..=n)
                    .map(|k| (k, loss_amplitude(n, k, e)))
                    .filter(|&(_, f)| f != 0.0)
                    .collect()
            })
            .collect();
        for &(k0, f0) in &per_mode[0] {
            for &(k1, f1) in &per_mode[1] {
                for &(k2, f2) in &per_mode[2] {
                    for &(k3, f3) in &per_mode[3] {
                        let lost = [k0, k1, k2, k3];
                        let target = Occupation::new(counts[0] - k0, counts[1] - k1, counts[2] - k2, counts[3] - k3);
                        *branches.entry(lost).or_default().entry(target).or_default() += amp * (f0 * f1 * f2 * f3);
                    }
                }
            }
        }
    }

    let kept = state.norm_sqr();
    let deficit = state.norm_deficit() / (kept + state.norm_deficit());
    let mut out = Vec::with_capacity(branches.len());
    for raw in branches.into_values() {
        let unnormalized = FockState::from_raw(state.n_max(), raw, 0.0);
        let weight = unnormalized.norm_sqr() / kept;
        if weight > 0.0 && !unnormalized.is_zero() {
            out.push((weight, unnormalized.normalized_with_deficit(deficit)?));
        }
    }
    // Renormalize to absorb pruned amplitudes.
    let total: f64 = out.iter().map(|(w, _)| w).sum();
    for (w, _) in &mut out {
        *w /= total;
    }
    StateEnsemble::from_branches(out)
}

/// Loss applied to every branch of an ensemble.
pub fn apply_loss_ensemble(ensemble: &StateEnsemble, eta: [f64; 4]) -> Result<StateEnsemble> {
    check_transmissions(&eta)?;
    let mut out = Vec::new();
    for (w, s) in ensemble.branches() {
        for (bw, bs) in apply_loss(s, eta)?.branches() {
            out.push((w * bw, bs.clone()));
        }
    }
    StateEnsemble::from_branches(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::schmidt_rank;
    use approx::assert_abs_diff_eq;

    fn ket(i: u32, j: u32, k: u32, l: u32) -> Occupation {
        Occupation::new(i, j, k, l)
    }

    fn four_photon_terms() -> FockState {
        FockState::from_terms(
            2,
            [
                (ket(2, 0, 0, 2), Complex64::new(1.0, 0.0)),
                (ket(1, 1, 1, 1), Complex64::new(-1.0, 0.0)),
                (ket(0, 2, 2, 0), Complex64::new(1.0, 0.0)),
            ],
        )
        .normalize()
        .unwrap()
    }

    fn singlet() -> FockState {
        FockState::vacuum(1).apply_k_dagger().normalize().unwrap()
    }

    #[test]
    fn four_photon_h_detection_leaves_three_photon_state() {
        let (p, cond) = measure_photon(&four_photon_terms(), ModeGroup::A, PolarizationBasis::HV, PolarizationOutcome::H).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(cond.amplitude(&ket(1, 0, 0, 2)).re, (2.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(cond.amplitude(&ket(0, 1, 1, 1)).re, -(1.0f64 / 3.0).sqrt(), epsilon = 1e-12);
        assert_eq!(cond.len(), 2);
    }

    #[test]
    fn outcome_probabilities_sum_to_one() {
        for angle in [0.0, 22.5, 45.0, 71.0] {
            let basis = PolarizationBasis::rotated(angle);
            let s = four_photon_terms();
            let (ph, _) = measure_photon(&s, ModeGroup::B, basis, PolarizationOutcome::H).unwrap();
            let (pv, _) = measure_photon(&s, ModeGroup::B, basis, PolarizationOutcome::V).unwrap();
            assert_abs_diff_eq!(ph + pv, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn singlet_h_detection() {
        let (p, cond) = measure_photon(&singlet(), ModeGroup::A, PolarizationBasis::HV, PolarizationOutcome::H).unwrap();
        assert_abs_diff_eq!(p, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(cond.amplitude(&ket(0, 0, 0, 1)).norm(), 1.0, epsilon = 1e-15);
        assert_eq!(cond.len(), 1);
    }

    #[test]
    fn measuring_vacuum_is_an_error() {
        let err = measure_photon(&FockState::vacuum(1), ModeGroup::A, PolarizationBasis::HV, PolarizationOutcome::H);
        assert_eq!(err, Err(Error::NoPhoton("a")));
    }

    #[test]
    fn impossible_outcome_is_reported() {
        let h = FockState::basis(1, ket(1, 0, 0, 0));
        let err = measure_photon(&h, ModeGroup::A, PolarizationBasis::HV, PolarizationOutcome::V);
        assert_eq!(err, Err(Error::ImpossibleOutcome));
    }

    #[test]
    fn identity_loss_is_single_branch() {
        let s = four_photon_terms();
        let e = apply_loss(&s, [1.0; 4]).unwrap();
        assert_eq!(e.len(), 1);
        assert_eq!(e.branches()[0], (1.0, s));
    }

    #[test]
    fn single_photon_transmission() {
        let e = apply_loss(&FockState::basis(1, ket(1, 0, 0, 0)), [0.9, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(e.len(), 2);
        let find = |occ: Occupation| {
            e.branches()
                .iter()
                .find(|(_, s)| s.amplitude(&occ).norm() > 0.5)
                .map(|(w, _)| *w)
                .unwrap()
        };
        assert_abs_diff_eq!(find(ket(1, 0, 0, 0)), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(find(ket(0, 0, 0, 0)), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn rejects_transmission_outside_unit_interval() {
        assert!(apply_loss(&singlet(), [1.1, 1.0, 1.0, 1.0]).is_err());
        assert!(apply_loss(&singlet(), [1.0, -0.1, 1.0, 1.0]).is_err());
    }

    #[test]
    fn single_photon_loss_keeps_entanglement() {
        let eta = 0.8;
        let e = apply_loss(&four_photon_terms(), [eta; 4]).unwrap();
        let mut single_loss_branches = 0;
        for (_, s) in e.branches() {
            let photons = s.iter().next().unwrap().0.total();
            if photons == 3 {
                single_loss_branches += 1;
                assert_eq!(schmidt_rank(s, 1e-10), 2);
            }
        }
        assert_eq!(single_loss_branches, 4);
    }

    #[test]
    fn total_loss_leaves_vacuum() {
        // One branch per distinct lost-photon pattern, each left in vacuum.
        let e = apply_loss(&four_photon_terms(), [0.0; 4]).unwrap();
        assert_eq!(e.len(), 3);
        for (w, s) in e.branches() {
            assert_abs_diff_eq!(*w, 1.0 / 3.0, epsilon = 1e-15);
            assert_abs_diff_eq!(s.amplitude(&Occupation::VACUUM).norm(), 1.0, epsilon = 1e-15);
        }
    }
}
