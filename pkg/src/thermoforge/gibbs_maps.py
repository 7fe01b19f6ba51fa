"""
Gibbs-preserving stochastic maps.

Matrices are column-stochastic with entry ``[j, i]`` the probability of
jumping from microstate ``i`` to microstate ``j``, so a map acts as
``q = M @ p``. Entries may be floats or ``Fraction`` objects; the latter
make Gibbs preservation checkable exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from .core import TOL, ClassicalState, Hamiltonian, gibbs_state
from .lp import exact_feasible_point, float_feasible_point

#: Largest dimension for which ``method="auto"`` uses the rational simplex.
EXACT_LP_MAX_DIM = 8


def _is_exact(a: np.ndarray) -> bool:
    return a.dtype == object


def _as_array(x) -> np.ndarray:
    if isinstance(x, ClassicalState):
        return np.asarray(x.probs, dtype=float)
    a = np.asarray(x)
    if a.dtype == object:
        return a
    return a.astype(float)


@dataclass(frozen=True, eq=False)
class GibbsMap:
    matrix: np.ndarray
    tau: np.ndarray

    def __post_init__(self):
        M, tau = _as_array(self.matrix), _as_array(self.tau)
        d = tau.size
        if M.shape != (d, d):
            raise ValueError(f"map of shape {M.shape} does not match a {d}-dimensional Gibbs state")
        tol = 0 if _is_exact(M) and _is_exact(tau) else 1e-8
        if not is_gibbs_preserving(M, tau, tol):
            raise ValueError("matrix is not a Gibbs-preserving stochastic map")
        object.__setattr__(self, "matrix", M)
        object.__setattr__(self, "tau", tau)

    @property
    def dim(self) -> int:
        return self.tau.size

    @property
    def exact(self) -> bool:
        return _is_exact(self.matrix)

    def as_float(self) -> "GibbsMap":
        if not self.exact:
            return self
        return GibbsMap(self.matrix.astype(float), self.tau.astype(float))

    def to_json(self) -> dict:
        f = self.as_float()
        return {"tau": f.tau.tolist(), "matrix": f.matrix.tolist()}

    @classmethod
    def from_json(cls, data: dict) -> "GibbsMap":
        return cls(np.array(data["matrix"], dtype=float), np.array(data["tau"], dtype=float))

    def __eq__(self, other):
        if not isinstance(other, GibbsMap):
            return NotImplemented
        return np.array_equal(self.matrix, other.matrix) and np.array_equal(self.tau, other.tau)

    __hash__ = None


def is_gibbs_preserving(M, tau, tol: float = TOL) -> bool:
    """Column-stochastic with ``tau`` as a fixed point, up to ``tol``.

    With ``Fraction`` entries and ``tol=0`` the check is exact.
    """
    if isinstance(M, GibbsMap):
        M = M.matrix
    M, tau = _as_array(M), _as_array(tau)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] != tau.size:
        return False
    d = tau.size
    for j in range(d):
        for i in range(d):
            if M[j, i] < -tol:
                return False
    for i in range(d):
        col = sum(M[j, i] for j in range(d))
        if abs(col - 1) > tol:
            return False
    for j in range(d):
        image = sum(M[j, i] * tau[i] for i in range(d))
        if abs(image - tau[j]) > tol:
            return False
    return True


def apply_map(M, p):
    """Push a state through the map; returns the same kind of object as ``p``."""
    mat = M.matrix if isinstance(M, GibbsMap) else np.asarray(M)
    if isinstance(p, ClassicalState):
        if mat.shape[1] != p.dim:
            raise ValueError(f"map of dimension {mat.shape[1]} applied to a {p.dim}-state")
        q = mat.astype(float) @ p.probs
        return ClassicalState(p.system, np.clip(q, 0.0, None))
    vec = np.asarray(p)
    if mat.shape[1] != vec.size:
        raise ValueError(f"map of dimension {mat.shape[1]} applied to a vector of length {vec.size}")
    return mat.dot(vec)


# --- linear-programming oracle -------------------------------------------------

@dataclass(frozen=True)
class LPResult:
    feasible: bool
    witness: GibbsMap | None
    residual: float
    method: str
    exact_matrix: np.ndarray | None = None


def _exact_normalized(v: np.ndarray) -> list[Fraction]:
    fr = [Fraction(float(x)) for x in v]
    total = sum(fr, Fraction(0))
    return [x / total for x in fr]


def _constraints(p, q, tau, detailed_balance: bool):
    """Rows of ``A x = b`` over ``x = vec(M)`` (row-major, ``M[j, i]``)."""
    d = len(tau)
    zero, one = 0, 1
    A, b = [], []

    def var(j, i):
        return j * d + i

    for i in range(d):  # column sums
        row = [zero] * (d * d)
        for j in range(d):
            row[var(j, i)] = one
        A.append(row)
        b.append(one)
    for j in range(d):  # Gibbs fixed point
        row = [zero] * (d * d)
        for i in range(d):
            row[var(j, i)] = tau[i]
        A.append(row)
        b.append(tau[j])
    for j in range(d):  # image of p
        row = [zero] * (d * d)
        for i in range(d):
            row[var(j, i)] = p[i]
        A.append(row)
        b.append(q[j])
    if detailed_balance:
        for i in range(d):
            for j in range(i + 1, d):
                row = [zero] * (d * d)
                row[var(j, i)] = tau[i]
                row[var(i, j)] = -tau[j]
                A.append(row)
                b.append(zero)
    return A, b


def solve_transition_lp(p, q, tau, *, detailed_balance: bool = False,
                        method: str = "auto") -> LPResult:
    """Search for a Gibbs-preserving map ``M`` with ``M p = q``.

    ``method`` is ``"exact"`` (rational simplex on the floats as given, each
    vector renormalized to sum exactly one), ``"float"`` (HiGHS) or
    ``"auto"`` (exact up to ``EXACT_LP_MAX_DIM``). With
    ``detailed_balance=True`` the map must also satisfy
    ``M[j, i] tau_i = M[i, j] tau_j``.
    """
    p, q, tau = _as_array(p).astype(float), _as_array(q).astype(float), _as_array(tau).astype(float)
    d = tau.size
    if p.size != d or q.size != d:
        raise ValueError(f"dimension mismatch: p={p.size}, q={q.size}, tau={d}")
    if np.any(tau <= 0):
        raise ValueError("the Gibbs state must have full support")
    if method == "auto":
        method = "exact" if d <= EXACT_LP_MAX_DIM else "float"
    if method == "exact":
        pf, qf, tf = _exact_normalized(p), _exact_normalized(q), _exact_normalized(tau)
        A, b = _constraints(pf, qf, tf, detailed_balance)
        x, residual = exact_feasible_point(A, b)
        if x is None:
            return LPResult(False, None, float(residual), method)
        exact_M = np.array(x, dtype=object).reshape(d, d)
        M = np.array([[float(v) for v in row] for row in exact_M])
        return LPResult(True, GibbsMap(M, tau), 0.0, method, exact_M)
    if method == "float":
        A, b = _constraints(p / p.sum(), q / q.sum(), tau / tau.sum(), detailed_balance)
        x, residual = float_feasible_point(A, b)
        if x is None or residual > 1e-8:
            return LPResult(False, None, residual, method)
        M = x.reshape(d, d)
        M = M / M.sum(axis=0, keepdims=True)
        return LPResult(True, GibbsMap(M, tau), residual, method)
    raise ValueError(f"unknown LP method {method!r}")


def lp_transition_feasible(p, q, tau, method: str = "auto") -> tuple[bool, GibbsMap | None]:
    """Whether some Gibbs-preserving map sends ``p`` to ``q``, with a witness."""
    res = solve_transition_lp(p, q, tau, method=method)
    return res.feasible, res.witness


def detailed_balance_feasible(p: ClassicalState, q: ClassicalState, H: Hamiltonian, beta: float,
                              method: str = "auto") -> bool:
    """Feasibility restricted to maps obeying detailed balance at inverse temperature ``beta``."""
    tau = gibbs_state(H, beta)
    return solve_transition_lp(p, q, tau, detailed_balance=True, method=method).feasible


def satisfies_detailed_balance(M, H: Hamiltonian, beta: float, tol: float = TOL) -> bool:
    """Check ``M[j, i] / M[i, j] == exp(-beta (E_j - E_i))`` on every populated pair.

    Pairs where both directions are below ``tol`` pass; a pair with only one
    direction above ``tol`` fails, since its ratio cannot be finite and equal.
    """
    mat = (M.matrix if isinstance(M, GibbsMap) else np.asarray(M)).astype(float)
    E = H.energies
    d = E.size
    for i in range(d):
        for j in range(i + 1, d):
            fwd, back = mat[j, i], mat[i, j]
            if fwd <= tol and back <= tol:
                continue
            if fwd <= tol or back <= tol:
                return False
            target = math.exp(-beta * (E[j] - E[i]))
            if abs(fwd / back - target) > tol * max(1.0, target):
                return False
    return True


# --- explicit constructions ----------------------------------------------------

def quasi_cycle(H: Hamiltonian, beta: float, order: Sequence[int]) -> GibbsMap:
    """Quasi-cycle along the microstates listed in ``order`` (cyclically).

    Each visited microstate ``i`` jumps to its successor with probability
    ``exp(-beta (E_max - E_i))``, ``E_max`` the largest energy on the cycle,
    and otherwise stays; so the top microstate always moves on. The flux
    ``exp(-beta E_max) / Z`` is then equal on every edge, which is what
    keeps the Gibbs state fixed.
    """
    order = [int(i) for i in order]
    d = H.dim
    if len(order) < 2 or len(set(order)) != len(order) or not all(0 <= i < d for i in order):
        raise ValueError(f"cycle order must list at least two distinct microstates of 0..{d - 1}")
    E = H.energies
    e_max = max(E[i] for i in order)
    M = np.eye(d)
    for pos, i in enumerate(order):
        j = order[(pos + 1) % len(order)]
        hop = math.exp(-beta * (e_max - E[i]))
        M[i, i] = 1.0 - hop
        M[j, i] = hop
    tau = gibbs_state(H, beta)
    if not is_gibbs_preserving(M, tau.probs, 1e-12):
        raise ArithmeticError("quasi-cycle construction failed to preserve the Gibbs state")
    return GibbsMap(M, tau.probs)


@dataclass(frozen=True, eq=False)
class TransitionCurrents:
    """Integer counts ``k[i, j]`` of bath-degenerate microstates moved from group i to j."""

    k: np.ndarray
    d: np.ndarray

    def __post_init__(self):
        k = np.asarray(self.k, dtype=np.int64)
        d = np.asarray(self.d, dtype=np.int64)
        if k.shape != (d.size, d.size):
            raise ValueError("current matrix must be square and match the group sizes")
        if np.any(k < 0) or np.any(d <= 0):
            raise ValueError("currents must be non-negative and group sizes positive")
        if not np.array_equal(k.sum(axis=1), d):
            raise ValueError("outgoing currents must add up to each group size")
        if not np.array_equal(k.sum(axis=0), d):
            raise ValueError("incoming currents must add up to each group size")
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "d", d)


def currents_to_map(currents: TransitionCurrents) -> GibbsMap:
    """Divide currents by group sizes, ``p_{i->j} = k_{i->j} / d_i``, in exact arithmetic."""
    k, d = currents.k, currents.d
    n = d.size
    M = np.empty((n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            M[j, i] = Fraction(int(k[i, j]), int(d[i]))
    total = int(d.sum())
    tau = np.array([Fraction(int(x), total) for x in d], dtype=object)
    return GibbsMap(M, tau)


def quasi_cycle_currents(d: Sequence[int], order: Sequence[int]) -> TransitionCurrents:
    """Currents of a quasi-cycle: the smallest group on the cycle moves in full
    and every other group on the cycle sends that many microstates onward."""
    d = np.asarray(d, dtype=np.int64)
    order = [int(i) for i in order]
    shift = int(min(d[i] for i in order))
    k = np.diag(d).copy()
    for pos, i in enumerate(order):
        j = order[(pos + 1) % len(order)]
        k[i, i] -= shift
        k[i, j] += shift
    return TransitionCurrents(k, d)
