"""
Relative entropy, min- and max-relative entropies and their smoothed forms.

All logarithms are natural. Smoothing uses the L1 ball with subnormalized
states allowed: mass may be removed but is never added back elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import TOL, ClassicalState

#: A microstate counts as populated when its probability exceeds this.
SUPPORT_TOL = 1e-12
#: Largest support solved exactly by the knapsack in :func:`smooth_min_support`.
KNAPSACK_EXACT_LIMIT = 25
#: Slack on the dropped-mass budget, shared with the brute-force tests.
BUDGET_SLACK = 1e-14

#: Pareto frontier size beyond which the exact knapsack gives up.
FRONTIER_CAP = 200_000


def _vec(x) -> np.ndarray:
    if isinstance(x, ClassicalState):
        return np.asarray(x.probs, dtype=float)
    return np.asarray(x, dtype=float)


def _pair(p, tau):
    p, tau = _vec(p), _vec(tau)
    if p.shape != tau.shape:
        raise ValueError(f"dimension mismatch: {p.size} vs {tau.size}")
    return p, tau


@dataclass(frozen=True)
class SmoothingBall:
    """L1 ball of (possibly subnormalized) states around a reference."""

    epsilon: float
    allow_subnormalized: bool = True

    def __post_init__(self):
        if not 0 <= self.epsilon <= 1:
            raise ValueError(f"epsilon must lie in [0, 1], got {self.epsilon}")

    def contains(self, center, candidate, tol: float = TOL) -> bool:
        p, r = _pair(center, candidate)
        if np.any(r < -tol):
            return False
        total = r.sum()
        if total > 1 + tol:
            return False
        if not self.allow_subnormalized and abs(total - 1) > tol:
            return False
        return float(np.abs(r - p).sum()) <= self.epsilon + tol


def relative_entropy(p, tau) -> float:
    """Kullback-Leibler divergence ``sum p ln(p / tau)`` with ``0 ln 0 = 0``."""
    p, tau = _pair(p, tau)
    on = p > 0
    if np.any(tau[on] <= 0):
        raise ValueError("p has mass outside the support of tau")
    return float(np.sum(p[on] * np.log(p[on] / tau[on])))


def d_min(p, tau) -> float:
    """Minus the log of the tau-weight on the support of ``p``."""
    p, tau = _pair(p, tau)
    return -math.log(float(tau[p > SUPPORT_TOL].sum()))


def d_max(p, tau) -> float:
    """Log of the largest likelihood ratio ``p_i / tau_i``."""
    p, tau = _pair(p, tau)
    outside = (tau <= 0) & (p > 0)
    if outside.any():
        raise ValueError("p has mass outside the support of tau")
    on = tau > 0
    return math.log(float(np.max(p[on] / tau[on])))


@dataclass(frozen=True)
class SmoothedSupport:
    """Solution of the support-dropping knapsack behind smoothed D_min."""

    keep: np.ndarray
    dropped_mass: float
    kept_weight: float
    exact: bool

    @property
    def value(self) -> float:
        return -math.log(self.kept_weight)


def _frontier_knapsack(mass: np.ndarray, weight: np.ndarray, budget: float,
                       counts: np.ndarray | None = None) -> np.ndarray | None:
    """Exact bounded knapsack with real masses by Pareto-frontier dynamic programming.

    Item ``k`` may be dropped up to ``counts[k]`` times (default once).
    Returns how many copies of each item to drop so that the dropped weight
    is maximal with dropped mass at most ``budget``, or None when the
    frontier grows past ``FRONTIER_CAP``. The frontier holds
    (mass, weight, choices) triples, none dominated by another.
    """
    if counts is None:
        counts = np.ones(mass.size, dtype=int)
    frontier = [(0.0, 0.0, ())]
    for k in range(mass.size):
        m_k, w_k = float(mass[k]), float(weight[k])
        top = int(min(counts[k], budget // m_k if m_k > 0 else counts[k]))
        merged = []
        for m, w, ch in frontier:
            for c in range(top + 1):
                if m + c * m_k > budget:
                    break
                merged.append((m + c * m_k, w + c * w_k, ch + (c,)))
        merged.sort(key=lambda t: (t[0], -t[1]))
        frontier, best = [], -1.0
        for t in merged:
            if t[1] > best:
                frontier.append(t)
                best = t[1]
        if len(frontier) > FRONTIER_CAP:
            return None
    m, w, ch = max(frontier, key=lambda t: (t[1], -t[0]))
    return np.array(ch, dtype=int)


def _grouped_knapsack(mass: np.ndarray, weight: np.ndarray, budget: float,
                      exact_limit: int) -> np.ndarray | None:
    """Exact drop mask, merging microstates with equal (mass, weight) first.

    Products of identical factors (tensor powers) collapse to a handful of
    groups. Values are matched to 13 significant digits.
    """
    keys = [(float(f"{m:.13g}"), float(f"{w:.13g}")) for m, w in zip(mass, weight)]
    groups: dict = {}
    for k, key in enumerate(keys):
        groups.setdefault(key, []).append(k)
    if len(groups) > exact_limit:
        return None
    members = list(groups.values())
    # the largest mass and smallest weight of a group make the plan conservative
    g_mass = np.array([mass[idx].max() for idx in members])
    g_weight = np.array([weight[idx].min() for idx in members])
    g_counts = np.array([len(idx) for idx in members])
    chosen = _frontier_knapsack(g_mass, g_weight, budget, g_counts)
    if chosen is None:
        return None
    drop = np.zeros(mass.size, dtype=bool)
    for idx, c in zip(members, chosen):
        drop[idx[:c]] = True
    return drop


def _greedy_knapsack(mass: np.ndarray, weight: np.ndarray, budget: float) -> np.ndarray:
    order = np.argsort(-(weight / mass), kind="stable")
    drop = np.zeros(mass.size, dtype=bool)
    used = 0.0
    for k in order:
        if used + mass[k] <= budget:
            drop[k] = True
            used += mass[k]
    return drop


def smooth_min_support(p, tau, eps: float, exact_limit: int = KNAPSACK_EXACT_LIMIT) -> SmoothedSupport:
    """Best support to keep after discarding at most ``eps`` of probability.

    Dropping a set ``D`` of populated microstates costs ``sum_D p`` and
    removes ``sum_D tau`` from the Gibbs weight of the support, so the
    optimum is a 0/1 knapsack. It is solved exactly when the support has
    at most ``exact_limit`` distinct (p, tau) pairs and the frontier stays
    small; otherwise the greedy ratio rule is used and flagged inexact
    (the greedy value is a lower bound on the optimum).
    """
    p, tau = _pair(p, tau)
    if not 0 <= eps < 1:
        raise ValueError(f"epsilon must lie in [0, 1), got {eps}")
    support = np.flatnonzero(p > SUPPORT_TOL)
    keep = np.zeros(p.size, dtype=bool)
    keep[support] = True
    exact = True
    if eps > 0 and support.size > 1:
        mass, weight = p[support], tau[support]
        budget = eps + BUDGET_SLACK
        drop = _grouped_knapsack(mass, weight, budget, exact_limit)
        if drop is None:
            drop = _greedy_knapsack(mass, weight, budget)
            exact = False
        if drop.all():
            # the whole support cannot be dropped when eps < 1; guard rounding
            drop[np.argmax(mass)] = False
        keep[support[drop]] = False
    dropped = float(p[support].sum() - p[keep].sum())
    return SmoothedSupport(keep, max(dropped, 0.0), float(tau[keep].sum()), exact)


def d_min_smooth(p, tau, eps: float) -> float:
    """Smoothed min-relative entropy over the L1 ball of radius ``eps``."""
    return smooth_min_support(p, tau, eps).value


def _trimmed_mass(p: np.ndarray, tau: np.ndarray, lam: float) -> float:
    return float(np.maximum(p - lam * tau, 0.0).sum())


def smooth_max_ratio(p, tau, eps: float, tol: float = 1e-12) -> float:
    """Smallest ``lambda`` with ``sum max(p - lambda tau, 0) <= eps``.

    The trimmed mass is non-increasing in ``lambda``, so bisection on
    ``[0, max p/tau]`` converges; the loop stops once the bracket is
    narrower than ``tol`` relative to its upper end (well below 1e-10).
    """
    p, tau = _pair(p, tau)
    if not 0 <= eps < 1:
        raise ValueError(f"epsilon must lie in [0, 1), got {eps}")
    if np.any((tau <= 0) & (p > 0)):
        raise ValueError("p has mass outside the support of tau")
    on = tau > 0
    p, tau = p[on], tau[on]
    hi = float(np.max(p / tau))
    if eps == 0:
        return hi
    lo = 0.0
    for _ in range(200):
        if hi - lo <= tol * hi:
            break
        mid = 0.5 * (lo + hi)
        if _trimmed_mass(p, tau, mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


def d_max_smooth(p, tau, eps: float) -> float:
    """Smoothed max-relative entropy over the L1 ball of radius ``eps``."""
    if eps == 0:
        return d_max(p, tau)
    return math.log(smooth_max_ratio(p, tau, eps))


def smooth_max_state(p, tau, eps: float) -> np.ndarray:
    """The capped vector ``min(p, lambda* tau)`` attaining smoothed D_max."""
    p, tau = _pair(p, tau)
    lam = smooth_max_ratio(p, tau, eps)
    return np.minimum(p, lam * tau)
