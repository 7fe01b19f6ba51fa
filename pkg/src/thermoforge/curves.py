"""
Thermo-majorization curves.

A state is beta-ordered by ``p_i exp(beta E_i)`` (descending), then drawn
as the polyline through ``(sum exp(-beta E_j), sum p_j)``. One state can be
turned into another by thermal operations exactly when its curve lies on
or above the other's. The x-axis runs over ``[0, Z]``; divide by ``Z`` for
the normalized picture.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .core import TOL, ClassicalState

#: Relative gap under which two beta-order weights count as tied.
TIE_RTOL = 1e-12


def _weights(p: ClassicalState, beta: float) -> np.ndarray:
    if beta < 0:
        raise ValueError(f"beta must be non-negative, got {beta}")
    return p.probs * np.exp(beta * p.energies)


def beta_order(p: ClassicalState, beta: float) -> np.ndarray:
    """Permutation sorting microstates by ``p_i exp(beta E_i)``, largest first.

    Weights equal up to a relative ``TIE_RTOL`` are tied and keep canonical
    index order; unpopulated microstates come last.
    """
    w = _weights(p, beta)
    order = np.lexsort((np.arange(w.size), -w))
    out, i = [], 0
    while i < order.size:
        j = i + 1
        head = w[order[i]]
        while j < order.size and abs(w[order[j]] - head) <= TIE_RTOL * max(abs(head), 1e-300):
            j += 1
        out.extend(sorted(order[i:j]))
        i = j
    return np.array(out, dtype=int)


@dataclass(frozen=True, eq=False)
class ThermoCurve:
    x: np.ndarray
    y: np.ndarray
    beta: float
    order: np.ndarray

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.x.tolist(), self.y.tolist()))

    @property
    def Z(self) -> float:
        return float(self.x[-1])

    @property
    def total(self) -> float:
        return float(self.y[-1])

    @property
    def slopes(self) -> np.ndarray:
        return np.diff(self.y) / np.diff(self.x)

    def normalized(self) -> "ThermoCurve":
        """Same curve with the x-axis rescaled to ``[0, 1]``."""
        return ThermoCurve(self.x / self.Z, self.y, self.beta, self.order)

    def simplified(self, tol: float = 1e-12) -> "ThermoCurve":
        """Drop breakpoints where the slope does not change (e.g. tied blocks).

        ``order`` is kept as is; only the drawn polyline shrinks.
        """
        s = self.slopes
        keep = [0]
        for k in range(1, s.size):
            if abs(s[k] - s[k - 1]) > tol * max(1.0, abs(s[k - 1])):
                keep.append(k)
        keep.append(s.size)
        idx = np.array(keep)
        return ThermoCurve(self.x[idx], self.y[idx], self.beta, self.order)

    def is_concave(self, tol: float = 1e-12) -> bool:
        s = self.slopes
        return bool(np.all(np.diff(s) <= tol * max(1.0, float(np.abs(s).max()))))

    def __call__(self, x):
        return curve_value_at(self, x)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["x", "y", "x_normalized"])
        Z = self.Z
        for xv, yv in zip(self.x.tolist(), self.y.tolist()):
            writer.writerow([repr(xv), repr(yv), repr(xv / Z)])
        return buf.getvalue()

    def to_json(self) -> list[dict]:
        Z = self.Z
        return [{"x": xv, "y": yv, "x_normalized": xv / Z}
                for xv, yv in zip(self.x.tolist(), self.y.tolist())]


def build_curve(p: ClassicalState, beta: float) -> ThermoCurve:
    order = beta_order(p, beta)
    gibbs = np.exp(-beta * p.energies)
    x = np.concatenate([[0.0], np.cumsum(gibbs[order])])
    y = np.concatenate([[0.0], np.cumsum(p.probs[order])])
    return ThermoCurve(x, y, float(beta), order)


def curve_value_at(c: ThermoCurve, x, tol: float = TOL):
    xs = np.asarray(x, dtype=float)
    if np.any(xs < -tol) or np.any(xs > c.Z * (1 + tol) + tol):
        raise ValueError(f"x outside the curve domain [0, {c.Z}]")
    out = np.interp(xs, c.x, c.y)
    return float(out) if out.ndim == 0 else out


def majorization_margin(a: ThermoCurve, b: ThermoCurve) -> float:
    """Smallest ``a(x) - b(x)`` over the union of both curves' breakpoints.

    Piecewise-linear functions differ extremally at a breakpoint, so a
    non-negative margin means ``a`` lies on or above ``b`` everywhere.
    Equal-mass curves always meet at both ends and on the plateau where
    both are saturated; those points are skipped so that a positive margin
    means the curves do not touch.
    """
    if abs(a.Z - b.Z) > TOL * max(1.0, a.Z):
        raise ValueError(f"curves live on different domains (Z={a.Z} vs Z={b.Z})")
    xs = np.union1d(a.x, np.minimum(b.x, a.Z))
    ya, yb = np.interp(xs, a.x, a.y), np.interp(xs, b.x, b.y)
    diff = ya - yb
    if abs(a.total - b.total) > TOL:
        return float(np.min(diff))
    skip = (ya >= a.total - TOL) & (yb >= b.total - TOL)
    # the first jointly saturated point is a real contact, the plateau after it is not
    skip[np.argmax(skip)] = False
    skip[0] = skip[-1] = True
    if skip.all():
        return float(np.min(diff))
    return float(np.min(diff[~skip]))


def thermo_majorizes(a: ThermoCurve, b: ThermoCurve, tol: float = TOL) -> bool:
    return majorization_margin(a, b) >= -tol


@dataclass(frozen=True)
class Verdict:
    """Feasibility with the curve margin; ``marginal`` flags near-touching curves."""

    feasible: bool
    margin: float
    marginal: bool

    def __bool__(self):
        return self.feasible

    @property
    def label(self) -> str:
        text = "feasible" if self.feasible else "infeasible"
        return f"{text} (marginal)" if self.marginal else text


def _check_same_system(p: ClassicalState, q: ClassicalState):
    if p.system.dim != q.system.dim or not np.allclose(p.energies, q.energies, atol=1e-12):
        raise ValueError("initial and final states must share one Hamiltonian")


def transition_verdict(p: ClassicalState, q: ClassicalState, beta: float, tol: float = TOL) -> Verdict:
    _check_same_system(p, q)
    margin = majorization_margin(build_curve(p, beta), build_curve(q, beta))
    return Verdict(margin >= -tol, margin, abs(margin) <= tol)


def feasible_transition(p: ClassicalState, q: ClassicalState, beta: float, tol: float = TOL) -> bool:
    """Whether thermal operations can take ``p`` to ``q`` (both energy-diagonal)."""
    return transition_verdict(p, q, beta, tol).feasible


def standard_majorizes(p, q, tol: float = TOL) -> bool:
    """Ordinary majorization: sorted prefix sums of ``p`` dominate those of ``q``."""
    p = np.sort(np.asarray(p, dtype=float))[::-1]
    q = np.sort(np.asarray(q, dtype=float))[::-1]
    if p.shape != q.shape:
        raise ValueError("majorization needs vectors of equal length")
    return bool(np.all(np.cumsum(p) >= np.cumsum(q) - tol))
