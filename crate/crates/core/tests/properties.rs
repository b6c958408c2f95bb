use approx::assert_abs_diff_eq;
use eplsim_core::fock::{apply_loss, schmidt_coefficients};
use eplsim_core::pdc::{analytic_tail, build_hamiltonian_oracle, pair_distribution};
use eplsim_core::polarization::{default_beta_grid, visibility_scan, NoisyPairModel, PairInput};
use eplsim_core::{build_pdc_state, FockState, Occupation, PdcParams};
use num_complex::Complex64;
use proptest::prelude::*;

const N_MAX: u32 = 3;

/// Random state on kets with at most `2 N_MAX - 2` photons, leaving room
/// for one `K†` without truncation.
fn small_state() -> impl Strategy<Value = FockState> {
    prop::collection::vec(((0u32..3, 0u32..3, 0u32..3, 0u32..3), -1.0f64..1.0, -1.0f64..1.0), 1..8).prop_map(|terms| {
        FockState::from_terms(
            N_MAX,
            terms
                .into_iter()
                .filter(|((i, j, k, l), _, _)| i + j + k + l <= 2 * N_MAX - 2)
                .map(|((i, j, k, l), re, im)| (Occupation::new(i, j, k, l), Complex64::new(re, im))),
        )
    })
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #[test]
    fn k_dagger_is_linear(a in small_state(), b in small_state(), x in complex(), y in complex()) {
        let lhs = a.scale(x).add_scaled(&b, y).unwrap().apply_k_dagger();
        let rhs = a.apply_k_dagger().scale(x).add_scaled(&b.apply_k_dagger(), y).unwrap();
        prop_assert!(lhs.max_amplitude_difference(&rhs) < 1e-12);
    }

    #[test]
    fn commutator_is_two_plus_photon_number(s in small_state()) {
        let kkd = s.apply_k_dagger().apply_k();
        let kdk = s.apply_k().apply_k_dagger();
        let comm = kkd.add_scaled(&kdk, Complex64::new(-1.0, 0.0)).unwrap();
        let expected = FockState::from_terms(
            N_MAX,
            s.iter().map(|(o, a)| (*o, a * (2.0 + f64::from(o.total())))),
        );
        prop_assert!(comm.max_amplitude_difference(&expected) < 1e-12);
    }

    #[test]
    fn loss_branch_weights_sum_to_one(s in small_state(), eta in 0.0f64..=1.0) {
        prop_assume!(!s.is_zero());
        let e = apply_loss(&s, [eta; 4]).unwrap();
        let total: f64 = e.branches().iter().map(|(w, _)| w).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        let before = s.normalize().unwrap().mean_total_photons();
        prop_assert!((e.mean_total_photons() - eta * before).abs() < 1e-10);
    }

    #[test]
    fn schmidt_values_ignore_phase_and_polarization_swap(s in small_state(), theta in 0.0f64..6.3) {
        prop_assume!(!s.is_zero());
        let base = schmidt_coefficients(&s);
        for other in [s.scale(Complex64::from_polar(1.0, theta)), s.swap_polarization()] {
            let c = schmidt_coefficients(&other);
            prop_assert_eq!(c.len(), base.len());
            for (x, y) in c.iter().zip(&base) {
                prop_assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn werner_visibility_equals_singlet_fraction(p in 0.0f64..=1.0) {
        let c = visibility_scan(&PairInput::Werner(NoisyPairModel::new(p).unwrap()), 45.0, &default_beta_grid()).unwrap();
        prop_assert!((c.visibility - p).abs() < 1e-12);
        prop_assert!((c.grid_visibility - p).abs() < 1e-12);
    }

    #[test]
    fn pdc_probabilities_and_tail_sum_to_one(tau in 0.0f64..1.5, n_max in 1u32..14) {
        let s = build_pdc_state(&PdcParams::new(tau, 0.3, n_max).unwrap()).unwrap();
        let d = pair_distribution(&s).unwrap();
        prop_assert!((d.probs.iter().sum::<f64>() + analytic_tail(tau, n_max) - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn closed_form_matches_oracle(tau in 0.0f64..0.8, phi in -3.2f64..3.2) {
        let params = PdcParams::new(tau, phi, 6).unwrap();
        let oracle = build_hamiltonian_oracle(&params, 1.0).unwrap();
        let closed = build_pdc_state(&params).unwrap();
        prop_assert!(oracle.state.max_amplitude_difference(&closed) < 1e-10);
        assert_abs_diff_eq!(oracle.tail, closed.norm_deficit(), epsilon = 1e-10);
    }
}
