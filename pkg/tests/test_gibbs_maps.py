import json
import math
from fractions import Fraction

import numpy as np
import pytest

from thermoforge.core import ClassicalState, Hamiltonian, gibbs_state
from thermoforge.curves import transition_verdict
from thermoforge.gibbs_maps import (GibbsMap, TransitionCurrents, apply_map, currents_to_map,
                                    detailed_balance_feasible, is_gibbs_preserving,
                                    lp_transition_feasible, quasi_cycle, quasi_cycle_currents,
                                    satisfies_detailed_balance, solve_transition_lp)
from thermoforge.lp import exact_feasible_point, float_feasible_point

E3 = Hamiltonian.from_energies([0.0, 1.0, 2.0])


def test_exact_simplex_small_systems():
    # x + y = 1, x - y = 0 -> (1/2, 1/2)
    x, r = exact_feasible_point([[1, 1], [1, -1]], [1, 0])
    assert x == [Fraction(1, 2), Fraction(1, 2)] and r == 0
    # x + y = 1 and x + y = 2 cannot both hold
    x, r = exact_feasible_point([[1, 1], [1, 1]], [1, 2])
    assert x is None and r > 0
    # negative right-hand side is flipped, x = -(-3)
    x, _ = exact_feasible_point([[-1]], [-3])
    assert x == [3]


def test_float_solver_agrees():
    x, r = float_feasible_point([[1, 1], [1, -1]], [1, 0])
    assert np.allclose(x, [0.5, 0.5]) and r < 1e-12
    x, r = float_feasible_point([[1, 1], [1, 1]], [1, 2])
    assert x is None and math.isinf(r)


def test_gibbs_preservation_check():
    tau = np.array([0.75, 0.25])
    ok = np.array([[2 / 3, 1.0], [1 / 3, 0.0]])
    assert is_gibbs_preserving(ok, tau)
    assert not is_gibbs_preserving(np.array([[0.0, 1.0], [1.0, 0.0]]), tau)
    with pytest.raises(ValueError):
        GibbsMap(np.array([[0.0, 1.0], [1.0, 0.0]]), tau)


def test_exact_gibbs_preservation_with_fractions():
    M = np.array([[Fraction(2, 3), Fraction(1)], [Fraction(1, 3), Fraction(0)]], dtype=object)
    tau = np.array([Fraction(3, 4), Fraction(1, 4)], dtype=object)
    assert is_gibbs_preserving(M, tau, 0)
    G = GibbsMap(M, tau)
    assert G.exact and not G.as_float().exact


def test_quasi_cycles_preserve_gibbs_for_any_order():
    H = Hamiltonian.from_energies([0.0, 0.4, 1.3, 2.2])
    tau = gibbs_state(H, 1.1)
    for order in ([0, 1, 2, 3], [3, 1, 0, 2], [2, 0], [1, 3, 2]):
        G = quasi_cycle(H, 1.1, order)
        assert is_gibbs_preserving(G, tau.probs, 1e-12)
        # the top microstate on the cycle always moves on
        top = max(order, key=lambda i: H.energies[i])
        assert G.matrix[top, top] == pytest.approx(0.0, abs=1e-15)


def test_quasi_cycle_rejects_bad_orders():
    with pytest.raises(ValueError):
        quasi_cycle(E3, 1.0, [0])
    with pytest.raises(ValueError):
        quasi_cycle(E3, 1.0, [0, 0, 1])


def test_currents_give_exact_gibbs_maps():
    d = [3, 2, 1]
    cur = quasi_cycle_currents(d, [0, 1, 2])
    G = currents_to_map(cur)
    assert G.exact
    assert G.tau.tolist() == [Fraction(1, 2), Fraction(1, 3), Fraction(1, 6)]
    assert is_gibbs_preserving(G.matrix, G.tau, 0)
    with pytest.raises(ValueError):
        TransitionCurrents(np.array([[1, 1], [0, 1]]), np.array([2, 2]))


def test_lp_agrees_with_curves_on_random_pairs():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(60):
        d = int(rng.integers(2, 5))
        H = Hamiltonian.from_energies(np.sort(rng.uniform(0, 3, d)))
        beta = float(rng.uniform(0.2, 3))
        p = ClassicalState(H, rng.dirichlet(np.ones(d)))
        q = ClassicalState(H, rng.dirichlet(np.ones(d)))
        v = transition_verdict(p, q, beta)
        if abs(v.margin) <= 1e-7:
            continue
        ok, M = lp_transition_feasible(p, q, gibbs_state(H, beta).probs)
        assert ok == v.feasible
        checked += 1
    assert checked > 50


def test_lp_witness_reproduces_target():
    tau = gibbs_state(E3, 1.0)
    p = np.array([0.5, 0.5, 0.0])
    G = quasi_cycle(E3, 1.0, [2, 1, 0])
    q = apply_map(G, p)
    res = solve_transition_lp(p, q, tau, method="exact")
    assert res.feasible and res.method == "exact"
    assert np.allclose(apply_map(res.witness, p), q, atol=1e-12)
    # the rational witness satisfies the constraints exactly
    M = res.exact_matrix
    for i in range(3):
        assert sum(M[j, i] for j in range(3)) == 1


def test_exact_and_float_lp_agree():
    rng = np.random.default_rng(9)
    tau = gibbs_state(E3, 0.7).probs
    for _ in range(15):
        p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
        a = solve_transition_lp(p, q, tau, method="exact")
        b = solve_transition_lp(p, q, tau, method="float")
        if abs(transition_verdict(ClassicalState(E3, p), ClassicalState(E3, q), 0.7).margin) > 1e-7:
            assert a.feasible == b.feasible


def test_lp_rejects_mismatched_dimensions():
    with pytest.raises(ValueError):
        solve_transition_lp([0.5, 0.5], [1.0, 0.0, 0.0], [0.4, 0.3, 0.3])
    with pytest.raises(ValueError):
        solve_transition_lp([0.5, 0.5], [0.5, 0.5], [0.4, 0.3], method="simplex")


def test_detailed_balance_checker():
    tau = gibbs_state(E3, 1.0)
    # thermalizing map: every column is tau, which obeys detailed balance
    M = np.tile(tau.probs[:, None], (1, 3))
    assert satisfies_detailed_balance(M, E3, 1.0)
    assert not satisfies_detailed_balance(quasi_cycle(E3, 1.0, [0, 1, 2]), E3, 1.0)


def test_detailed_balance_is_strictly_smaller():
    # a three-step cycle reaches a state no detailed-balance map reaches
    p = ClassicalState(E3, [0.5, 0.5, 0.0])
    q = apply_map(quasi_cycle(E3, 1.0, [0, 1, 2]), p)
    tau = gibbs_state(E3, 1.0).probs
    assert lp_transition_feasible(p, q, tau)[0]
    res = solve_transition_lp(p, q, tau, detailed_balance=True, method="exact")
    assert not res.feasible
    assert res.residual > 0.1
    assert not detailed_balance_feasible(p, q, E3, 1.0)


def test_reversed_listing_three_level_example():
    # (1/2, 1/2, 0) on E = (0, 1, 2) against the target listed from the top level down
    e = math.exp
    p = np.array([0.5, 0.5, 0.0])
    q = np.array([0.5 * (e(-1) - e(-2) + 1), 0.5 * (1 - e(-1)), 0.5 * e(-2)])
    assert np.allclose(apply_map(quasi_cycle(E3, 1.0, [2, 1, 0]), p), q, atol=1e-15)
    # a detailed-balance map reaches it as well
    a = e(-1)
    stay = (1 - 2 * a) / (1 - a)
    M = np.array([[1 - a * (1 - stay) - a * a, 1 - stay, 1.0],
                  [a * (1 - stay), stay, 0.0],
                  [a * a, 0.0, 0.0]])
    assert is_gibbs_preserving(M, gibbs_state(E3, 1.0).probs, 1e-14)
    assert satisfies_detailed_balance(M, E3, 1.0, 1e-12)
    assert np.allclose(M @ p, q, atol=1e-15)
    assert detailed_balance_feasible(ClassicalState(E3, p), ClassicalState(E3, q), E3, 1.0)


def test_map_json_round_trip():
    G = quasi_cycle(E3, 0.9, [0, 2, 1])
    text = json.dumps(G.to_json())
    assert GibbsMap.from_json(json.loads(text)) == G
    assert currents_to_map(quasi_cycle_currents([2, 1], [0, 1])).to_json()["tau"] == [2 / 3, 1 / 3]


def test_two_level_maps_are_one_parameter_family():
    H = Hamiltonian.from_energies([0.0, 0.8])
    beta = 1.3
    tau = gibbs_state(H, beta).probs
    qc = quasi_cycle(H, beta, [0, 1]).matrix
    rng = np.random.default_rng(21)
    for r in rng.uniform(0, 1, 10):
        # Gibbs preservation fixes the upward jump once the downward one is chosen
        down = r
        up = down * tau[1] / tau[0]
        M = np.array([[1 - up, down], [up, 1 - down]])
        assert is_gibbs_preserving(M, tau, 1e-14)
        assert np.allclose(M, r * qc + (1 - r) * np.eye(2), atol=1e-15)
