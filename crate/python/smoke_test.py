"""Smoke test for the eplsim extension. Run after `maturin develop` or `pip install crates/python`."""

import math

import eplsim


def close(a, b, tol):
    return abs(a - b) <= tol


def main():
    tau = 0.5
    state = eplsim.pdc_state(tau, n_max=12)
    probs, mean, peak, tail = eplsim.pair_distribution(state)
    assert close(sum(probs) + tail, 1.0, 1e-12)
    assert close(mean, 2 * math.sinh(tau) ** 2, 1e-6 * mean)
    assert peak == 0

    oracle, _ = eplsim.hamiltonian_oracle(tau, n_max=8)
    assert oracle.max_amplitude_difference(eplsim.pdc_state(tau, n_max=8)) < 1e-9

    s = eplsim.singlet()
    assert s.amplitude((1, 0, 0, 1)).real > 0
    assert eplsim.halfwave_swap(s) == eplsim.FockState.from_terms(1, [((a, b, c, d), -amp) for (a, b, c, d), amp in s.terms()])

    four = eplsim.FockState.from_terms(2, [((2, 0, 0, 2), 1), ((1, 1, 1, 1), -1), ((0, 2, 2, 0), 1)])
    p, post = eplsim.measure_photon(four, "a", "h")
    assert close(p, 0.5, 1e-12)
    assert post.schmidt_rank() == 2
    assert close(post.amplitude((1, 0, 0, 2)).real, math.sqrt(2 / 3), 1e-12)

    _, _, v = eplsim.werner_visibility(0.92)
    assert v == 0.92
    _, _, v = eplsim.state_visibility(s)
    assert close(v, 1.0, 1e-12)

    _, _, period = eplsim.fringe_scan(0.01, theta=0.4)
    assert close(period, 195.0, 0.5)
    assert eplsim.two_pass_rate(0.01) == 2 * eplsim.two_pass_rate(0.01, overlap=0.0)

    branches = eplsim.apply_loss(state, [0.9] * 4)
    assert close(sum(w for w, _ in branches), 1.0, 1e-12)

    cfg = eplsim.CavityConfig(tau_per_pass=0.1, survival_eta=0.95, rounds=10)
    traj = eplsim.simulate_cavity(cfg)
    rates = eplsim.rate_model(cfg)
    assert traj.overflow is None
    assert close(traj.mean_pairs[-1], rates[-1][2], 1e-4 * rates[-1][2])

    try:
        eplsim.simulate_cavity(eplsim.CavityConfig(tau_per_pass=-1.0))
    except ValueError:
        pass
    else:
        raise AssertionError("negative tau accepted")

    print("python smoke test passed")


if __name__ == "__main__":
    main()
