import math

import numpy as np
import pytest

from thermoforge.bath import (BathWindowError, append_gibbs_system, block_spectrum, build_toy_bath,
                              check_bath_assumptions, effective_beta, exact_block,
                              finite_bath_majorization, oracle_report, ratio_residual,
                              theorem_window, verify_oplus_theorem, window_mass)
from thermoforge.core import ClassicalState, Hamiltonian, gibbs_state
from thermoforge.curves import feasible_transition, transition_verdict

LN2 = math.log(2)


def integer_system(d):
    return Hamiltonian.from_energies(range(d))


def test_power_of_two_bath_is_exact():
    b = build_toy_bath(LN2, 12)
    assert b.exact and b.degeneracies == tuple(2 ** E for E in range(13))
    assert b.beta_target == LN2
    assert effective_beta(b) == pytest.approx(LN2, rel=1e-14)


def test_bath_size_limits():
    with pytest.raises(ValueError):
        build_toy_bath(LN2, 31)
    with pytest.raises(ValueError):
        build_toy_bath(-1.0, 5)


def test_assumptions_hold_on_exact_bath():
    rep = check_bath_assumptions(build_toy_bath(LN2, 14), delta=0.0, system_max_energy=2)
    assert rep.all_pass
    assert rep.residual == 0.0 and rep.worst is None
    assert rep.window == (2, 12)
    assert 0 < rep.window_mass < 1


def test_corrupted_degeneracy_is_localized():
    b = build_toy_bath(LN2, 14).with_degeneracy(7, 2 ** 7 + 1)
    rep = check_bath_assumptions(b, delta=1e-6, system_max_energy=2)
    assert not rep.ratio_property
    E, e_s = rep.worst
    assert 7 in (E, E - e_s)
    # the other checks are unaffected
    assert rep.peaked and rep.matching and rep.exponential


def test_rounded_exponential_bath_residual_shrinks_with_energy():
    b = build_toy_bath(1.0, 20)
    assert not b.exact
    rep = check_bath_assumptions(b, delta=1e-3, system_max_energy=2)
    assert not rep.ratio_property
    # rounding exp(E) hurts most at the bottom of the window
    assert rep.worst[0] == rep.window[0]
    assert max(ratio_residual(b, E, 2) for E in range(12, 19)) < 1e-4


def test_oplus_distance_vanishes_for_exact_bath():
    b = build_toy_bath(LN2, 14)
    p = ClassicalState(integer_system(3), [0.2, 0.5, 0.3])
    assert verify_oplus_theorem(b, p, theorem_window(b, p)) <= 1e-15


def test_oplus_distance_within_twice_delta():
    b = build_toy_bath(1.0, 18)
    p = ClassicalState(integer_system(3), [0.6, 0.1, 0.3])
    delta = check_bath_assumptions(b, 1.0, 2).residual
    dist = verify_oplus_theorem(b, p, theorem_window(b, p))
    assert 0 < dist <= 2 * delta


def test_block_spectrum_mass_and_window():
    b = build_toy_bath(LN2, 10)
    p = ClassicalState(integer_system(3), [0.2, 0.5, 0.3])
    blk = block_spectrum(b, p, 6)
    assert blk.multiplicities.tolist() == [64, 32, 16]
    assert blk.total == pytest.approx(1.0)
    vals, mult, mass = exact_block(b, p, 6)
    assert np.allclose(vals, blk.values, rtol=1e-15)
    with pytest.raises(BathWindowError):
        block_spectrum(b, p, 11)


def test_window_mass_adds_up():
    b = build_toy_bath(LN2, 10)
    p = ClassicalState(integer_system(2), [0.3, 0.7])
    # every bath level has Boltzmann weight 1 in total, so a full block holds 1/11
    window = theorem_window(b, p)
    assert window_mass(b, p, window) == pytest.approx(len(window) / 11, rel=1e-14)


def test_non_integer_energies_rejected():
    b = build_toy_bath(LN2, 8)
    p = ClassicalState(Hamiltonian.from_energies([0.0, 0.5]), [0.5, 0.5])
    with pytest.raises(ValueError):
        block_spectrum(b, p, 4)


def test_finite_bath_agrees_with_curves():
    b = build_toy_bath(LN2, 14)
    rng = np.random.default_rng(12)
    for _ in range(30):
        H = integer_system(int(rng.integers(2, 4)))
        p = ClassicalState(H, rng.dirichlet(np.ones(H.dim)))
        q = ClassicalState(H, rng.dirichlet(np.ones(H.dim)))
        v = transition_verdict(p, q, LN2)
        if abs(v.margin) <= 1e-9:
            continue
        for E in theorem_window(b, p)[::3]:
            assert finite_bath_majorization(p, q, b, E) == v.feasible


def test_gibbs_target_always_reachable_in_bath():
    b = build_toy_bath(LN2, 12)
    H = integer_system(3)
    tau = gibbs_state(H, LN2)
    p = ClassicalState(H, [0.1, 0.1, 0.8])
    assert finite_bath_majorization(p, tau, b, 8)


def test_appending_gibbs_system_changes_nothing():
    b = build_toy_bath(LN2, 14)
    big = append_gibbs_system(b, Hamiltonian.from_energies([0, 1, 1, 3]))
    assert check_bath_assumptions(big, 0.0, 2).residual == 0.0
    rng = np.random.default_rng(13)
    H = integer_system(3)
    for _ in range(10):
        p = ClassicalState(H, rng.dirichlet(np.ones(3)))
        q = ClassicalState(H, rng.dirichlet(np.ones(3)))
        assert finite_bath_majorization(p, q, b, 10) == finite_bath_majorization(p, q, big, 10)


def test_block_expansion_guard():
    b = build_toy_bath(LN2, 25)
    p = ClassicalState(integer_system(2), [0.5, 0.5])
    with pytest.raises(OverflowError):
        finite_bath_majorization(p, p, b, 24)


def test_oracle_report_serial_and_parallel_match():
    b = build_toy_bath(LN2, 10)
    H = integer_system(3)
    p = ClassicalState(H, [0.2, 0.5, 0.3])
    q = ClassicalState(H, [0.6, 0.3, 0.1])
    a = oracle_report(b, p, q).to_json()
    c = oracle_report(b, p, q, jobs=3).to_json()
    assert a == c
    assert all(row["agree"] for row in a["agreement"])
    assert a["agreement"][0]["curve"] == feasible_transition(p, q, LN2)
