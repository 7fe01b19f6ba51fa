"""
Linear feasibility ``A x = b, x >= 0``.

``exact_feasible_point`` runs a phase-one simplex in rational arithmetic
(Bland's rule, so it terminates); ``float_feasible_point`` hands the same
problem to HiGHS through scipy.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

import numpy as np


def _to_fraction(v) -> Fraction:
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    return Fraction(float(v))


def exact_feasible_point(A: Sequence[Sequence], b: Sequence) -> tuple[list[Fraction] | None, Fraction]:
    """Find ``x >= 0`` with ``A x = b`` exactly.

    Returns ``(x, 0)`` when feasible, otherwise ``(None, w)`` where ``w > 0``
    is the minimal total violation left in the artificial variables.
    Floats are converted to the rationals they represent exactly.
    """
    rows = [[_to_fraction(v) for v in row] for row in A]
    rhs = [_to_fraction(v) for v in b]
    m = len(rows)
    n = len(rows[0]) if m else 0
    for i in range(m):
        if rhs[i] < 0:
            rows[i] = [-v for v in rows[i]]
            rhs[i] = -rhs[i]

    width = n + m
    zero, one = Fraction(0), Fraction(1)
    tab = []
    for i in range(m):
        art = [zero] * m
        art[i] = one
        tab.append(rows[i] + art + [rhs[i]])
    basis = list(range(n, n + m))
    # reduced costs of the phase-one objective (sum of artificials)
    cost = [-sum((tab[i][j] for i in range(m)), zero) for j in range(n)] + [zero] * m
    cost.append(-sum(rhs, zero))

    while True:
        enter = next((j for j in range(width) if cost[j] < 0), None)
        if enter is None:
            break
        leave, best = None, None
        for i in range(m):
            a = tab[i][enter]
            if a > 0:
                ratio = tab[i][-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    leave, best = i, ratio
        if leave is None:  # cannot happen for a bounded phase-one problem
            raise ArithmeticError("phase-one simplex reported an unbounded direction")
        piv_row = tab[leave]
        piv = piv_row[enter]
        if piv != 1:
            piv_row = [v / piv for v in piv_row]
            tab[leave] = piv_row
        nz = [j for j, v in enumerate(piv_row) if v != 0]
        for i in range(m):
            if i != leave:
                f = tab[i][enter]
                if f != 0:
                    r = tab[i]
                    for j in nz:
                        r[j] -= f * piv_row[j]
        f = cost[enter]
        for j in nz:
            cost[j] -= f * piv_row[j]
        basis[leave] = enter

    residual = -cost[-1]
    if residual > 0:
        return None, residual
    x = [zero] * n
    for i, j in enumerate(basis):
        if j < n:
            x[j] = tab[i][-1]
    return x, zero


def float_feasible_point(A, b) -> tuple[np.ndarray | None, float]:
    """Floating-point feasibility via scipy's HiGHS solver.

    The second item is the equality residual ``max |A x - b|`` of the point
    returned, or ``inf`` when the solver declares infeasibility.
    """
    from scipy.optimize import linprog

    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    res = linprog(np.zeros(A.shape[1]), A_eq=A, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        return None, float("inf")
    x = np.clip(res.x, 0.0, None)
    return x, float(np.max(np.abs(A @ x - b))) if b.size else 0.0
