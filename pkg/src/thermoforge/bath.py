"""
A toy heat bath with explicit integer degeneracies.

The bath has integer energies ``0..E_max`` with degeneracy ``g(E)``; with
``g(E) = b**E`` and ``beta = ln b`` the ratio property
``g(E - E_S) = g(E) exp(-beta E_S)`` holds exactly, which turns the
asymptotic block-structure and majorization statements into finite
checks. Bath Boltzmann factors are exact rationals in that case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from .core import TOL, ClassicalState, Hamiltonian

MAX_BATH_ENERGY = 30
MAX_BLOCK_MICROSTATES = 1_000_000


class BathWindowError(ValueError):
    """Requested total energy needs bath levels outside the modelled range."""


@dataclass(frozen=True)
class BathSpec:
    """Integer bath spectrum ``E -> g(E)`` for ``E = 0..len(degeneracies)-1``.

    ``reliable`` bounds the energies whose degeneracies are trusted (a bath
    built by convolution is incomplete near its lower edge). ``base`` is set
    when ``g(E) = base**E`` exactly and ``beta_target = ln base``.
    """

    degeneracies: tuple[int, ...]
    beta_target: float
    c: float
    base: int | None = None
    reliable: tuple[int, int] | None = None

    def __post_init__(self):
        g = tuple(int(x) for x in self.degeneracies)
        if not g or any(x < 1 for x in g):
            raise ValueError("bath degeneracies must be positive integers")
        object.__setattr__(self, "degeneracies", g)
        if self.reliable is None:
            object.__setattr__(self, "reliable", (0, len(g) - 1))

    @property
    def e_max(self) -> int:
        return len(self.degeneracies) - 1

    @property
    def levels(self) -> list[tuple[int, int]]:
        return list(enumerate(self.degeneracies))

    def g(self, E: int) -> int:
        if not 0 <= E <= self.e_max:
            raise BathWindowError(f"bath has no level at energy {E} (range 0..{self.e_max})")
        return self.degeneracies[E]

    @property
    def exact(self) -> bool:
        return self.base is not None and self.beta_target == math.log(self.base)

    def boltzmann(self, E: int):
        """``exp(-beta E)`` for a bath energy, as a Fraction when exact."""
        if self.exact:
            return Fraction(1, self.base ** E)
        return math.exp(-self.beta_target * E)

    def with_degeneracy(self, E: int, g: int) -> "BathSpec":
        """Copy with one degeneracy replaced (breaks exactness)."""
        degs = list(self.degeneracies)
        degs[E] = g
        return BathSpec(tuple(degs), self.beta_target, self.c, None, self.reliable)


def build_toy_bath(c: float, e_max: int) -> BathSpec:
    """Bath with ``g(E) = round(exp(c E))``; its effective inverse temperature is ``c``."""
    if not c > 0:
        raise ValueError("growth rate c must be positive")
    if not 0 < e_max <= MAX_BATH_ENERGY:
        raise ValueError(f"e_max must lie in 1..{MAX_BATH_ENERGY}")
    degs = tuple(int(round(math.exp(c * E))) for E in range(e_max + 1))
    base = int(round(math.exp(c)))
    exact = abs(math.exp(c) - base) < 1e-9 and all(g == base ** E for E, g in enumerate(degs))
    beta = math.log(base) if exact else c
    return BathSpec(degs, beta, c, base if exact else None)


def effective_beta(b: BathSpec) -> float:
    """Mean of ``ln g(E+1) - ln g(E)`` over the reliable range."""
    lo, hi = b.reliable
    steps = [math.log(b.degeneracies[E + 1]) - math.log(b.degeneracies[E]) for E in range(lo, hi)]
    return float(np.mean(steps))


def append_gibbs_system(b: BathSpec, H: Hamiltonian) -> BathSpec:
    """Bath enlarged by a small system in its Gibbs state.

    Degeneracies are convolved, ``g'(E) = sum g(E - e) g_S(e)``; energies
    below the system's top energy miss terms and are excluded from the
    reliable range.
    """
    sys_levels = _integer_levels(H)
    top = max(e for e, _ in sys_levels)
    degs = []
    for E in range(b.e_max + 1):
        degs.append(sum(b.degeneracies[E - e] * gs for e, gs in sys_levels if 0 <= E - e <= b.e_max))
    lo, hi = b.reliable
    return BathSpec(tuple(degs), b.beta_target, b.c, None, (lo + top, hi))


def _integer_levels(H: Hamiltonian) -> list[tuple[int, int]]:
    out = []
    for lv in H.levels:
        if not float(lv.energy).is_integer() or lv.energy < 0:
            raise ValueError(f"toy bath needs non-negative integer system energies, got {lv.energy}")
        out.append((int(lv.energy), lv.degeneracy))
    return out


def _integer_energies(p: ClassicalState) -> np.ndarray:
    _integer_levels(p.system)
    return p.energies.astype(int)


# --- assumptions ---------------------------------------------------------------

@dataclass
class BathReport:
    window: tuple[int, int]
    peaked: bool
    exponential: bool
    matching: bool
    ratio_property: bool
    residual: float
    worst: tuple[int, int] | None
    window_mass: float
    delta: float

    @property
    def all_pass(self) -> bool:
        return self.peaked and self.exponential and self.matching and self.ratio_property

    def to_json(self) -> dict:
        return {"window": list(self.window), "peaked": self.peaked,
                "exponential": self.exponential, "matching": self.matching,
                "ratio_property": self.ratio_property, "residual": self.residual,
                "worst": list(self.worst) if self.worst else None,
                "window_mass": self.window_mass, "delta": self.delta}


def bath_window(b: BathSpec, system_max_energy: int) -> tuple[int, int]:
    """Bath energies far enough from both edges to absorb any system jump."""
    lo, hi = b.reliable
    return lo + system_max_energy, hi - system_max_energy


def ratio_residual(b: BathSpec, E: int, e_s: int) -> float:
    """``|g(E) exp(-beta e_s) / g(E - e_s) - 1|``."""
    value = b.g(E) * b.boltzmann(e_s) / b.g(E - e_s) - 1
    return abs(float(value))


def check_bath_assumptions(b: BathSpec, delta: float, system_max_energy: int = 1) -> BathReport:
    """Check the four bath assumptions on the bath window.

    (i) is read as "the window is a non-empty band"; the Gibbs mass inside
    it is reported but a truncated toy bath cannot concentrate it.
    (ii) ``g(E) >= round(exp(c E))``. (iii) every jump ``E_R + e - e'`` with
    system energies in ``0..system_max_energy`` lands on a bath level.
    (iv) the worst ratio residual over the window is at most ``delta``.
    """
    lo, hi = bath_window(b, system_max_energy)
    peaked = lo <= hi
    window = range(lo, hi + 1) if peaked else range(0)
    exponential = all(b.g(E) >= round(math.exp(b.c * E)) for E in window)
    shifts = range(-system_max_energy, system_max_energy + 1)
    matching = peaked and all(0 <= E + s <= b.e_max for E in window for s in shifts)
    residual, worst = 0.0, None
    for E in window:
        for e_s in range(system_max_energy + 1):
            r = ratio_residual(b, E, e_s)
            if r > residual:
                residual, worst = r, (E, e_s)
    weights = [float(b.g(E) * b.boltzmann(E)) for E in range(b.e_max + 1)]
    mass = sum(weights[E] for E in window) / sum(weights)
    return BathReport((lo, hi), peaked, exponential, matching, residual <= delta,
                      residual, worst, mass, delta)


# --- energy blocks -------------------------------------------------------------

@dataclass(frozen=True)
class EnergyBlockSpectrum:
    """Eigenvalues of one total-energy block, grouped by system microstate."""

    E_total: int
    values: np.ndarray
    multiplicities: np.ndarray
    system_energies: np.ndarray

    @property
    def total(self) -> float:
        return float(np.dot(self.values, self.multiplicities))

    def expanded(self) -> np.ndarray:
        n = int(self.multiplicities.sum())
        if n > MAX_BLOCK_MICROSTATES:
            raise OverflowError(f"block has {n} microstates, cap is {MAX_BLOCK_MICROSTATES}")
        return np.repeat(self.values, self.multiplicities)


def _bath_degs(b: BathSpec, E_total: int, energies: np.ndarray) -> np.ndarray:
    try:
        return np.array([b.g(int(E_total - e)) for e in energies], dtype=np.int64)
    except BathWindowError as exc:
        raise BathWindowError(f"total energy {E_total} is outside the bath window: {exc}") from None


def block_spectrum(b: BathSpec, p: ClassicalState, E_total: int) -> EnergyBlockSpectrum:
    """Ideal block ``(+)_E_S eta_{E-E_S} (x) p_{E_S}``: value ``p_i / g(E - E_i)``
    repeated ``g(E - E_i)`` times, normalized to the mass of ``p``."""
    energies = _integer_energies(p)
    mult = _bath_degs(b, E_total, energies)
    values = p.probs / mult / p.total
    return EnergyBlockSpectrum(int(E_total), values, mult, energies)


def exact_block(b: BathSpec, p: ClassicalState, E_total: int) -> tuple[np.ndarray, np.ndarray, float]:
    """Normalized eigenvalues of ``P_E (tau_R (x) p) P_E`` per system microstate.

    Returns ``(values, multiplicities, block_mass)``; the block mass is
    relative to the bath partition function over all modelled levels.
    """
    energies = _integer_energies(p)
    mult = _bath_degs(b, E_total, energies)
    raw = [b.boltzmann(int(E_total - e)) * float(pi) for e, pi in zip(energies, p.probs)]
    mass = sum(m * r for m, r in zip(mult.tolist(), raw))
    Z_R = sum(g * b.boltzmann(E) for E, g in b.levels)
    values = np.array([float(r / mass) if mass else 0.0 for r in raw])
    return values, mult, float(mass / Z_R)


def verify_oplus_theorem(b: BathSpec, p: ClassicalState, window: Iterable[int]) -> float:
    """Largest trace distance between the exact normalized energy blocks of
    ``tau_R (x) p`` and the ideal direct-sum form, over ``window``.

    Both blocks are diagonal in the same product basis, so the trace
    distance is half the multiplicity-weighted L1 gap of the eigenvalues.
    """
    worst = 0.0
    for E in window:
        exact_vals, mult, _ = exact_block(b, p, E)
        ideal = block_spectrum(b, p, E)
        dist = 0.5 * float(np.dot(mult, np.abs(exact_vals - ideal.values)))
        worst = max(worst, dist)
    return worst


def window_mass(b: BathSpec, p: ClassicalState, window: Iterable[int]) -> float:
    """Probability that ``tau_R (x) p`` has total energy in ``window``."""
    return sum(exact_block(b, p, E)[2] for E in window)


def theorem_window(b: BathSpec, p: ClassicalState) -> range:
    """Total energies whose every bath partner lies in the bath window."""
    s_max = int(p.energies.max())
    lo, hi = bath_window(b, s_max)
    return range(lo + s_max, hi + 1)


def finite_bath_majorization(p: ClassicalState, q: ClassicalState, b: BathSpec, E_total: int,
                             tol: float = TOL) -> bool:
    """Plain majorization between the explicit block spectra of ``p`` and ``q``."""
    if p.dim != q.dim or not np.array_equal(p.energies, q.energies):
        raise ValueError("both states must live on the same system")
    a = np.sort(block_spectrum(b, p, E_total).expanded())[::-1]
    c = np.sort(block_spectrum(b, q, E_total).expanded())[::-1]
    return bool(np.all(np.cumsum(a) >= np.cumsum(c) - tol))


@dataclass
class OracleReport:
    assumptions: BathReport
    oplus_distance: float
    window_mass: float
    agreement: list[dict] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"assumptions": self.assumptions.to_json(),
                "oplus_distance": self.oplus_distance,
                "window_mass": self.window_mass,
                "agreement": self.agreement}


def oracle_report(b: BathSpec, p: ClassicalState, q: ClassicalState, delta: float = 0.0,
                  totals: Sequence[int] | None = None, jobs: int = 1) -> OracleReport:
    """Bath checks, block-structure distance and an agreement table between
    finite-bath majorization and curve feasibility for ``p -> q``."""
    from .curves import feasible_transition

    s_max = int(max(p.energies.max(), q.energies.max()))
    report = check_bath_assumptions(b, delta, s_max)
    window = theorem_window(b, p)
    dist = verify_oplus_theorem(b, p, window)
    mass = window_mass(b, p, window)
    curve = feasible_transition(p, q, b.beta_target)
    totals = list(window) if totals is None else list(totals)

    def row(E):
        verdict = finite_bath_majorization(p, q, b, E)
        return {"E_total": E, "finite_bath": verdict, "curve": curve, "agree": verdict == curve}

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(jobs) as pool:
            rows = list(pool.map(row, totals))
    else:
        rows = [row(E) for E in totals]
    return OracleReport(report, dist, mass, rows)
