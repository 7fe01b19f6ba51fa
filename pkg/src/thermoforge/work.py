"""
Single-shot free energies, distillable work and work of formation.

Work is stored in a two-level "wit" with Hamiltonian ``W |1><1|``; a
positive ``value`` is work gained by the wit. Everything is in energy
units with ``kT = 1 / beta``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np

from .core import (ClassicalState, Hamiltonian, Level, as_classical, gibbs_state,
                   partition_function, require_diagonal, tensor)
from .curves import build_curve, majorization_margin
from .divergences import (d_max, d_max_smooth, d_min, relative_entropy, smooth_max_state,
                          smooth_min_support)


class InfeasibleScenarioError(RuntimeError):
    """No amount of work makes the requested transition possible."""


@dataclass(frozen=True)
class WorkQuote:
    value: float
    epsilon: float
    mode: str
    exact: bool = True
    certificate_margin: float | None = None

    def to_json(self) -> dict:
        return asdict(self)


def helmholtz_free_energy(p: ClassicalState, beta: float) -> float:
    """``<E> - T S`` with the Shannon entropy of ``p``."""
    probs = p.probs[p.probs > 0]
    entropy = -float(np.sum(probs * np.log(probs)))
    return p.mean_energy() - entropy / beta


def f_min(state, beta: float, eps: float = 0.0) -> float:
    """Min free energy: the Gibbs free energy plus ``kT`` times smoothed D_min.

    Quantum input is dephased in the energy basis first.
    """
    p = as_classical(state)
    tau = gibbs_state(p.system, beta)
    sup = smooth_min_support(p, tau, eps)
    return (sup.value - math.log(partition_function(p.system, beta))) / beta


def f_max(state, beta: float, eps: float = 0.0) -> float:
    """Max free energy; the state must be diagonal in the energy basis."""
    p = require_diagonal(state)
    tau = gibbs_state(p.system, beta)
    return (d_max_smooth(p, tau, eps) - math.log(partition_function(p.system, beta))) / beta


def wit(W: float) -> Hamiltonian:
    """Work qubit with ground energy 0 and excited energy ``W``."""
    return Hamiltonian((Level(0.0, 1), Level(float(W), 1)), label="wit")


def _wit_state(W: float, excited: bool) -> ClassicalState:
    H = wit(W)
    # levels are stored sorted, so a negative gap puts |1> first
    idx = int(excited) if W >= 0 else int(not excited)
    p = np.zeros(2)
    p[idx] = 1.0
    return ClassicalState(H, p)


def distill_margin(p: ClassicalState, beta: float, W: float) -> float:
    """Curve margin of ``p (x) |0> -> tau (x) |1>`` on system plus a wit of gap ``W``.

    The Gibbs state is the easiest final system state to reach, so the
    transition to *some* ``sigma (x) |1>`` is possible iff this margin is
    non-negative.
    """
    tau = gibbs_state(p.system, beta)
    start = tensor(p, _wit_state(W, excited=False))
    end = tensor(tau, _wit_state(W, excited=True))
    return majorization_margin(build_curve(start, beta), build_curve(end, beta))


def form_margin(p: ClassicalState, beta: float, W: float) -> float:
    """Curve margin of ``tau (x) |1> -> p (x) |0>``: spending ``W`` to make ``p``."""
    tau = gibbs_state(p.system, beta)
    start = tensor(tau, _wit_state(W, excited=True))
    end = tensor(p, _wit_state(W, excited=False))
    return majorization_margin(build_curve(start, beta), build_curve(end, beta))


def w_distill(state, beta: float, eps: float = 0.0) -> WorkQuote:
    """Largest work extractable into a wit while relaxing the state.

    With smoothing the certificate is checked on the smoothed state (the
    kept support, renormalized, which has the same support weight).
    """
    p = as_classical(state)
    tau = gibbs_state(p.system, beta)
    sup = smooth_min_support(p, tau, eps)
    value = sup.value / beta + 0.0
    smoothed = ClassicalState(p.system, np.where(sup.keep, p.probs, 0.0))
    margin = distill_margin(smoothed.renormalized(), beta, value)
    return WorkQuote(value, eps, "distill", sup.exact, margin)


def w_form(state, beta: float, eps: float = 0.0) -> WorkQuote:
    """Smallest work a wit must release to create the state from the Gibbs state.

    Coherent (non-diagonal) targets are rejected. With smoothing the
    certificate uses the capped, subnormalized target ``min(p, lambda tau)``.
    """
    p = require_diagonal(state)
    tau = gibbs_state(p.system, beta)
    value = d_max_smooth(p, tau, eps) / beta + 0.0
    target = p if eps == 0 else ClassicalState(p.system, smooth_max_state(p, tau, eps))
    margin = form_margin(target, beta, value)
    return WorkQuote(value, eps, "form", True, margin)


def minimal_rank(p: ClassicalState, eps: float) -> int:
    """Fewest populated microstates left after discarding at most ``eps`` of mass."""
    probs = np.sort(p.probs[p.probs > 1e-12])
    dropped = np.cumsum(probs) <= eps + 1e-14
    return int(max(probs.size - int(dropped.sum()), 1))


def f_min_zeroth_order(state, beta: float, eps: float = 0.0) -> float:
    """``<E> - kT ln rank`` with the smallest rank reachable within ``eps``."""
    p = as_classical(state)
    return p.mean_energy() - math.log(minimal_rank(p, eps)) / beta


# --- changing Hamiltonians -----------------------------------------------------

@dataclass(frozen=True)
class SwitchScenario:
    initial: ClassicalState
    final: ClassicalState
    beta: float

    @property
    def Z(self) -> float:
        return partition_function(self.initial.system, self.beta)

    @property
    def Z_final(self) -> float:
        return partition_function(self.final.system, self.beta)


def build_switch_system(s: SwitchScenario, W: float) -> tuple[ClassicalState, ClassicalState, Hamiltonian]:
    """Embed a Hamiltonian change in one fixed Hamiltonian.

    The switch qubit and the wit are both ``|0>`` while ``H`` acts and both
    ``|1>`` while ``H' + W`` acts; only these two sectors carry population,
    the other two would add flat tails to every curve.
    """
    H, Hf = s.initial.system, s.final.system
    energies = np.concatenate([H.energies, Hf.energies + W])
    order = np.argsort(energies, kind="stable")
    joint = Hamiltonian(tuple(Level(float(e), 1) for e in energies[order]), label="switch")
    start = np.concatenate([s.initial.probs, np.zeros(Hf.dim)])[order]
    end = np.concatenate([np.zeros(H.dim), s.final.probs])[order]
    return ClassicalState(joint, start), ClassicalState(joint, end), joint


def switch_margin(s: SwitchScenario, W: float) -> float:
    start, end, _ = build_switch_system(s, W)
    return majorization_margin(build_curve(start, s.beta), build_curve(end, s.beta))


def switch_closed_form(s: SwitchScenario, eps: float, mode: str) -> float:
    """Work gained by the wit at the feasibility boundary, from free energies.

    ``distill``: ``F_min(rho) - F_min(tau')`` for ``rho -> tau'``.
    ``form``: minus ``F_max(sigma) - F_max(tau)`` for ``tau -> sigma``, the
    negative of the work that has to be spent.
    """
    beta = s.beta
    if mode == "distill":
        return f_min(s.initial, beta, eps) + math.log(s.Z_final) / beta
    if mode == "form":
        return -(f_max(s.final, beta, eps) + math.log(s.Z) / beta)
    raise ValueError(f"mode must be 'distill' or 'form', got {mode!r}")


def _check_scenario(s: SwitchScenario, mode: str, tol: float = 1e-9):
    if mode == "distill":
        ref = gibbs_state(s.final.system, s.beta)
        if not np.allclose(s.final.probs, ref.probs, atol=tol):
            raise ValueError("distillation needs the Gibbs state of the final Hamiltonian as target")
    elif mode == "form":
        ref = gibbs_state(s.initial.system, s.beta)
        if not np.allclose(s.initial.probs, ref.probs, atol=tol):
            raise ValueError("formation needs the Gibbs state of the initial Hamiltonian as input")
    else:
        raise ValueError(f"mode must be 'distill' or 'form', got {mode!r}")


def switch_boundary(s: SwitchScenario, iterations: int = 60, tol: float = 1e-12) -> float:
    """Largest wit gap ``W`` for which the switched transition is feasible.

    Feasibility is monotone in ``W``, so bisection applies. The bracket
    covers every single-shot value, ``kT (ln Z' + beta E_max)`` above and
    ``-kT (ln Z + beta E'_max)`` below, widened by ``kT``.
    """
    beta = s.beta
    kT = 1.0 / beta
    Z, Zf = s.Z, s.Z_final
    Hi, Hf = s.initial.system, s.final.system
    hi = kT * (abs(math.log(Zf)) + beta * abs(Hi.max_energy) + abs(math.log(Z))) + kT
    lo = -kT * (abs(math.log(Z)) + beta * abs(Hf.max_energy) + abs(math.log(Zf))) - kT
    if switch_margin(s, lo) < -tol:
        raise InfeasibleScenarioError("transition is impossible for every amount of work")
    if switch_margin(s, hi) >= -tol:
        raise InfeasibleScenarioError("bisection bracket does not contain the boundary")
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if switch_margin(s, mid) >= -tol:
            lo = mid
        else:
            hi = mid
    return lo


def switch_work(s: SwitchScenario, eps: float = 0.0, mode: str = "distill") -> WorkQuote:
    """Boundary work for a Hamiltonian change, found by curve bisection.

    Smoothing is applied to the non-thermal end before the curves are
    drawn, matching the closed forms in :func:`switch_closed_form`.
    """
    _check_scenario(s, mode)
    beta = s.beta
    exact = True
    if eps > 0:
        if mode == "distill":
            tau = gibbs_state(s.initial.system, beta)
            sup = smooth_min_support(s.initial, tau, eps)
            exact = sup.exact
            kept = np.where(sup.keep, s.initial.probs, 0.0)
            s = SwitchScenario(ClassicalState(s.initial.system, kept / kept.sum()), s.final, beta)
        else:
            tau_f = gibbs_state(s.final.system, beta)
            s = SwitchScenario(s.initial, ClassicalState(s.final.system,
                                                         smooth_max_state(s.final, tau_f, eps)), beta)
    W = switch_boundary(s)
    return WorkQuote(W, eps, mode, exact, switch_margin(s, W))


def thermal_switch_work(H: Hamiltonian, H_final: Hamiltonian, beta: float) -> float:
    """Work gained when a Gibbs state of ``H`` becomes the Gibbs state of ``H_final``."""
    return -math.log(partition_function(H, beta) / partition_function(H_final, beta)) / beta


def irreversibility_gap(p: ClassicalState, beta: float) -> dict:
    """D_min, relative entropy and D_max of ``p`` against its Gibbs state."""
    tau = gibbs_state(p.system, beta)
    return {"d_min": d_min(p, tau), "relative_entropy": relative_entropy(p, tau),
            "d_max": d_max(p, tau)}
