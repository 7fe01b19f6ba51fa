"""
Finite systems, classical and quantum states, Gibbs states and composition.

Every module shares one microstate order: levels sorted by energy (stable
in the order given), and within a level the degeneracy index ascending.
Energies are in units where Boltzmann's constant is 1, so ``kT = 1/beta``.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

#: Global comparison tolerance for probabilities and curve values.
TOL = 1e-9
#: Energies closer than this are treated as the same energy block.
ENERGY_TOL = 1e-12
#: Default cap on microstates produced by :func:`tensor`.
DEFAULT_MAX_MICROSTATES = 1_000_000


class CoherenceError(ValueError):
    """Raised when a state carries coherence between distinct energies."""


def max_microstates() -> int:
    value = os.environ.get("THERMOFORGE_MAX_MICROSTATES")
    if value is None:
        return DEFAULT_MAX_MICROSTATES
    try:
        return int(value)
    except ValueError:
        raise ValueError(f"THERMOFORGE_MAX_MICROSTATES must be an integer, got {value!r}")


@dataclass(frozen=True)
class Level:
    energy: float
    degeneracy: int = 1

    def __post_init__(self):
        if not math.isfinite(self.energy):
            raise ValueError(f"energy must be finite, got {self.energy}")
        if int(self.degeneracy) != self.degeneracy or self.degeneracy < 1:
            raise ValueError(f"degeneracy must be a positive integer, got {self.degeneracy}")
        object.__setattr__(self, "degeneracy", int(self.degeneracy))
        object.__setattr__(self, "energy", float(self.energy))


@dataclass(frozen=True)
class Hamiltonian:
    """Finite spectrum given as energy levels with degeneracies.

    Levels are stored sorted by energy, which fixes the canonical
    microstate order used throughout the package.
    """

    levels: tuple[Level, ...]
    label: str | None = None

    def __post_init__(self):
        levels = tuple(lv if isinstance(lv, Level) else Level(*lv) for lv in self.levels)
        if not levels:
            raise ValueError("a Hamiltonian needs at least one level")
        levels = tuple(sorted(levels, key=lambda lv: lv.energy))
        object.__setattr__(self, "levels", levels)

    @classmethod
    def from_energies(cls, energies: Iterable[float], label: str | None = None) -> "Hamiltonian":
        """Nondegenerate spectrum, one microstate per listed energy."""
        return cls(tuple(Level(float(e), 1) for e in energies), label)

    @classmethod
    def trivial(cls) -> "Hamiltonian":
        return cls((Level(0.0, 1),))

    @property
    def energies(self) -> np.ndarray:
        """Energy of every microstate in canonical order."""
        return np.repeat([lv.energy for lv in self.levels],
                         [lv.degeneracy for lv in self.levels]).astype(float)

    @property
    def dim(self) -> int:
        return sum(lv.degeneracy for lv in self.levels)

    @property
    def min_energy(self) -> float:
        return self.levels[0].energy

    @property
    def max_energy(self) -> float:
        return self.levels[-1].energy

    def level_slices(self) -> list[slice]:
        out, start = [], 0
        for lv in self.levels:
            out.append(slice(start, start + lv.degeneracy))
            start += lv.degeneracy
        return out

    def canonical(self) -> "Hamiltonian":
        """Same spectrum shifted so the ground energy is zero."""
        e0 = self.min_energy
        return Hamiltonian(tuple(Level(lv.energy - e0, lv.degeneracy) for lv in self.levels),
                           self.label)

    def boltzmann_weights(self, beta: float) -> np.ndarray:
        return np.exp(-beta * self.energies)

    def partition_function(self, beta: float) -> float:
        return partition_function(self, beta)


def partition_function(H: Hamiltonian, beta: float) -> float:
    """Sum of ``exp(-beta * E)`` over all microstates of ``H``."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    return float(np.sum(H.boltzmann_weights(beta)))


@dataclass(frozen=True)
class GibbsParameters:
    beta: float
    kT: float | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.kT is None:
            object.__setattr__(self, "kT", 1.0 / self.beta)
        elif not math.isclose(self.beta * self.kT, 1.0, rel_tol=1e-12):
            raise ValueError(f"inconsistent beta={self.beta} and kT={self.kT}")


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ClassicalState:
    """Probability vector over the microstates of ``system``.

    Subnormalized vectors (total mass below one) are allowed; smoothing
    produces them.
    """

    system: Hamiltonian
    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 1 or p.size != self.system.dim:
            raise ValueError(f"expected {self.system.dim} probabilities, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("probabilities must be finite")
        if np.any(p < -TOL):
            raise ValueError(f"negative probability {p.min()}")
        if p.sum() > 1 + TOL:
            raise ValueError(f"probabilities sum to {p.sum()} > 1")
        object.__setattr__(self, "probs", p)

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    @property
    def normalized(self) -> bool:
        return abs(self.total - 1.0) <= TOL

    @property
    def energies(self) -> np.ndarray:
        return self.system.energies

    @property
    def dim(self) -> int:
        return self.system.dim

    def mean_energy(self) -> float:
        return float(np.dot(self.probs, self.energies))

    def renormalized(self) -> "ClassicalState":
        return ClassicalState(self.system, self.probs / self.total)

    def __eq__(self, other):
        if not isinstance(other, ClassicalState):
            return NotImplemented
        return self.system == other.system and np.array_equal(self.probs, other.probs)

    def __hash__(self):
        return hash((self.system, self.probs.tobytes()))

    def __repr__(self):
        return f"ClassicalState(dim={self.dim}, probs={np.array2string(self.probs, precision=6)})"


def gibbs_state(H: Hamiltonian, beta: float) -> ClassicalState:
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    w = H.boltzmann_weights(beta)
    return ClassicalState(H, w / w.sum())


def pure_state(H: Hamiltonian, index: int) -> ClassicalState:
    """Classical state concentrated on microstate ``index``."""
    p = np.zeros(H.dim)
    p[index] = 1.0
    return ClassicalState(H, p)


def energy_blocks(H: Hamiltonian) -> list[np.ndarray]:
    """Microstate indices grouped by energy (within ``ENERGY_TOL``)."""
    E = H.energies
    blocks, current = [], [0]
    for i in range(1, E.size):
        if abs(E[i] - E[current[0]]) <= ENERGY_TOL:
            current.append(i)
        else:
            blocks.append(np.array(current))
            current = [i]
    blocks.append(np.array(current))
    return blocks


@dataclass(frozen=True, eq=False)
class QuantumState:
    system: Hamiltonian
    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        d = self.system.dim
        if m.shape != (d, d):
            raise ValueError(f"expected a {d}x{d} density matrix, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, atol=TOL):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TOL:
            raise ValueError(f"density matrix has trace {np.trace(m).real}")
        if np.linalg.eigvalsh((m + m.conj().T) / 2).min() < -TOL:
            raise ValueError("density matrix has a negative eigenvalue")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_pure(cls, system: Hamiltonian, amplitudes: Sequence[complex]) -> "QuantumState":
        psi = np.asarray(amplitudes, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(system, np.outer(psi, psi.conj()))

    @classmethod
    def from_classical(cls, p: ClassicalState) -> "QuantumState":
        return cls(p.system, np.diag(p.probs).astype(complex))

    def cross_energy_coherence(self) -> float:
        """Largest modulus of an entry coupling two distinct energies."""
        E = self.system.energies
        mask = np.abs(E[:, None] - E[None, :]) > ENERGY_TOL
        return float(np.abs(self.matrix[mask]).max()) if mask.any() else 0.0

    def __eq__(self, other):
        if not isinstance(other, QuantumState):
            return NotImplemented
        return self.system == other.system and np.array_equal(self.matrix, other.matrix)

    __hash__ = None


def dephase(rho: QuantumState) -> QuantumState:
    """Remove coherences between different energies, keep degenerate blocks."""
    E = rho.system.energies
    keep = np.abs(E[:, None] - E[None, :]) <= ENERGY_TOL
    return QuantumState(rho.system, np.where(keep, rho.matrix, 0))


def classicalize(rho: QuantumState, tol: float = TOL) -> ClassicalState:
    """Diagonalize each energy block of a block-diagonal state.

    Within a block the eigenvalues are listed in descending order. A
    rotation inside a degenerate block commutes with the Hamiltonian, so it
    is a free operation and the result is thermodynamically equivalent.
    """
    coh = rho.cross_energy_coherence()
    if coh > tol:
        raise CoherenceError(f"state has coherence {coh:.3g} between distinct energies; dephase first")
    probs = np.empty(rho.system.dim)
    for block in energy_blocks(rho.system):
        sub = rho.matrix[np.ix_(block, block)]
        vals = np.linalg.eigvalsh((sub + sub.conj().T) / 2)[::-1]
        probs[block] = np.clip(vals, 0.0, None)
    return ClassicalState(rho.system, probs)


def as_classical(state, tol: float = TOL) -> ClassicalState:
    """Classical view of a state; quantum input is dephased first."""
    if isinstance(state, ClassicalState):
        return state
    if isinstance(state, QuantumState):
        return classicalize(dephase(state), tol)
    raise TypeError(f"expected ClassicalState or QuantumState, got {type(state).__name__}")


def require_diagonal(state, tol: float = TOL) -> ClassicalState:
    """Classical view of a state that must already be energy-diagonal."""
    if isinstance(state, QuantumState):
        return classicalize(state, tol)
    return as_classical(state, tol)


def tensor_hamiltonians(a: Hamiltonian, b: Hamiltonian) -> Hamiltonian:
    return _tensor_layout(a, b)[0]


def _tensor_layout(a: Hamiltonian, b: Hamiltonian):
    pairs = [(la.energy + lb.energy, la.degeneracy * lb.degeneracy, ia, ib)
             for ia, la in enumerate(a.levels) for ib, lb in enumerate(b.levels)]
    pairs.sort(key=lambda t: t[0])
    count = sum(t[1] for t in pairs)
    cap = max_microstates()
    if count > cap:
        raise OverflowError(f"tensor product has {count} microstates, cap is {cap} "
                            "(set THERMOFORGE_MAX_MICROSTATES to raise it)")
    label = None if a.label is None and b.label is None else f"{a.label}*{b.label}"
    H = Hamiltonian(tuple(Level(e, g) for e, g, _, _ in pairs), label)
    return H, [(ia, ib) for _, _, ia, ib in pairs]


def tensor(a: ClassicalState, b: ClassicalState) -> ClassicalState:
    """Product state on the non-interacting composite system.

    Product microstates of a pair of levels are ordered with the first
    factor's degeneracy index major.
    """
    H, layout = _tensor_layout(a.system, b.system)
    sa, sb = a.system.level_slices(), b.system.level_slices()
    probs = np.concatenate([np.outer(a.probs[sa[ia]], b.probs[sb[ib]]).ravel()
                            for ia, ib in layout])
    return ClassicalState(H, probs)


def tensor_power(p: ClassicalState, n: int) -> ClassicalState:
    if n < 1:
        raise ValueError("n must be at least 1")
    out = p
    for _ in range(n - 1):
        out = tensor(out, p)
    return out
