"""
JSON input/output for systems and states.

Schema::

    {"beta": 1.0,
     "levels": [{"energy": 0.0, "degeneracy": 1}, ...],
     "probabilities": [p_0, ...]}

``probabilities`` is optional (absent means the Gibbs state) and follows
the canonical microstate order. Entries may be numbers or rational
strings such as ``"1/3"``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .core import ClassicalState, Hamiltonian, Level, gibbs_state

REPORT_DIGITS = 12


class InputError(ValueError):
    """Malformed input; the message names the location of the problem."""


@dataclass(frozen=True)
class SystemSpec:
    hamiltonian: Hamiltonian
    beta: float
    probabilities: tuple[float, ...] | None = None
    source: str = "<input>"

    @property
    def is_gibbs(self) -> bool:
        return self.probabilities is None

    def state(self, beta: float | None = None) -> ClassicalState:
        b = self.beta if beta is None else beta
        if self.probabilities is None:
            return gibbs_state(self.hamiltonian, b)
        return ClassicalState(self.hamiltonian, list(self.probabilities))


def _number(value, where: str, source: str) -> float:
    if isinstance(value, bool):
        raise InputError(f"{source}: {where}: expected a number, got a boolean")
    if isinstance(value, (int, float)):
        x = float(value)
    elif isinstance(value, str):
        try:
            x = float(Fraction(value.strip()))
        except (ValueError, ZeroDivisionError):
            raise InputError(f"{source}: {where}: cannot read {value!r} as a number") from None
    else:
        raise InputError(f"{source}: {where}: expected a number, got {type(value).__name__}")
    if not math.isfinite(x):
        raise InputError(f"{source}: {where}: value must be finite")
    return x


def parse_system(text: str, source: str = "<input>") -> SystemSpec:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{source}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return system_from_dict(data, source)


def system_from_dict(data, source: str = "<input>") -> SystemSpec:
    if not isinstance(data, dict):
        raise InputError(f"{source}: top level must be an object")
    unknown = set(data) - {"beta", "levels", "probabilities"}
    if unknown:
        raise InputError(f"{source}: unknown field(s): {', '.join(sorted(unknown))}")
    if "beta" not in data:
        raise InputError(f"{source}: missing field 'beta'")
    beta = _number(data["beta"], "beta", source)
    if beta <= 0:
        raise InputError(f"{source}: beta: must be positive, got {beta}")
    levels = data.get("levels")
    if not isinstance(levels, list) or not levels:
        raise InputError(f"{source}: levels: expected a non-empty list")
    parsed = []
    for k, lv in enumerate(levels):
        where = f"levels[{k}]"
        if not isinstance(lv, dict) or "energy" not in lv:
            raise InputError(f"{source}: {where}: expected an object with 'energy'")
        energy = _number(lv["energy"], f"{where}.energy", source)
        deg = lv.get("degeneracy", 1)
        if isinstance(deg, bool) or not isinstance(deg, int) or deg < 1:
            raise InputError(f"{source}: {where}.degeneracy: expected a positive integer, got {deg!r}")
        parsed.append(Level(energy, deg))
    H = Hamiltonian(tuple(parsed))
    probs = data.get("probabilities")
    if probs is None:
        return SystemSpec(H, beta, None, source)
    if not isinstance(probs, list):
        raise InputError(f"{source}: probabilities: expected a list")
    if len(probs) != H.dim:
        raise InputError(f"{source}: probabilities: {len(probs)} entries for {H.dim} microstates")
    values = tuple(_number(v, f"probabilities[{i}]", source) for i, v in enumerate(probs))
    if any(v < 0 for v in values):
        raise InputError(f"{source}: probabilities: entries must be non-negative")
    if sum(values) > 1 + 1e-9:
        raise InputError(f"{source}: probabilities: sum {sum(values)} exceeds 1")
    if [lv.energy for lv in parsed] != sorted(lv.energy for lv in parsed):
        raise InputError(f"{source}: levels: list energies in increasing order so that "
                         "probabilities follow the canonical microstate order")
    return SystemSpec(H, beta, values, source)


def load_system(path: str) -> SystemSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from None
    return parse_system(text, path)


def system_to_dict(H: Hamiltonian, beta: float, probs=None) -> dict:
    out = {"beta": float(beta),
           "levels": [{"energy": float(lv.energy), "degeneracy": int(lv.degeneracy)} for lv in H.levels]}
    if probs is not None:
        out["probabilities"] = [float(v) for v in probs]
    return out


def state_to_json(p: ClassicalState, beta: float) -> str:
    """Full-precision state JSON; ``parse_system`` gives back an equal state."""
    return json.dumps(system_to_dict(p.system, beta, p.probs))


@dataclass(frozen=True)
class Verbatim:
    """Report payload emitted at full precision (states and maps that must round-trip)."""

    value: object


def round_report(obj, digits: int = REPORT_DIGITS):
    """Recursively round floats to ``digits`` significant digits."""
    if isinstance(obj, Verbatim):
        return obj.value
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return str(obj)
        return float(f"{obj:.{digits}g}") + 0.0
    if isinstance(obj, dict):
        return {k: round_report(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round_report(v, digits) for v in obj]
    return obj


def dump_report(obj) -> str:
    return json.dumps(round_report(obj), indent=2)
