"""Command-line front end: JSON systems in, verdicts, work values and curve data out.

Exit codes: 0 success, 2 the computation ran but the verdict is negative,
1 bad input.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass

from . import __version__
from .bath import build_toy_bath, oracle_report
from .core import gibbs_state, partition_function
from .curves import build_curve, transition_verdict
from .divergences import d_max, d_min, relative_entropy
from .gibbs_maps import solve_transition_lp
from .io import InputError, SystemSpec, Verbatim, dump_report, load_system, system_to_dict
from .work import (InfeasibleScenarioError, SwitchScenario, f_max, f_min, helmholtz_free_energy,
                   switch_closed_form, switch_work, thermal_switch_work, w_distill, w_form)

EXIT_OK, EXIT_INPUT, EXIT_NEGATIVE = 0, 1, 2

COMMANDS = ("curve", "feasible", "work", "switch", "lp-check", "db-check", "oracle", "info")
N_INPUTS = {"curve": 1, "work": 1, "info": 1, "feasible": 2, "switch": 2,
            "lp-check": 2, "db-check": 2, "oracle": 2}


@dataclass
class RunConfig:
    command: str
    inputs: list[str]
    epsilon: float = 0.0
    beta: float | None = None
    format: str = "json"
    tolerance: float = 1e-9
    exact: bool = False
    jobs: int = 1
    mode: str = "auto"
    bath_emax: int = 16

    def validate(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if len(self.inputs) != N_INPUTS[self.command]:
            raise InputError(f"{self.command} takes {N_INPUTS[self.command]} input file(s), "
                             f"got {len(self.inputs)}")
        if not 0 <= self.epsilon < 1:
            raise InputError(f"--epsilon must lie in [0, 1), got {self.epsilon}")
        if not self.tolerance > 0:
            raise InputError(f"--tolerance must be positive, got {self.tolerance}")
        if self.beta is not None and not self.beta > 0:
            raise InputError(f"--beta must be positive, got {self.beta}")
        if self.jobs < 1:
            raise InputError("--jobs must be at least 1")
        if self.format == "csv" and self.command != "curve":
            raise InputError("--format csv is only available for the curve command")


def _beta(cfg: RunConfig, spec: SystemSpec) -> float:
    return spec.beta if cfg.beta is None else cfg.beta


def _same_system(a: SystemSpec, b: SystemSpec):
    Ha, Hb = a.hamiltonian, b.hamiltonian
    if Ha.dim != Hb.dim:
        raise InputError(f"dimension mismatch: {a.source} has {Ha.dim} microstates, "
                         f"{b.source} has {Hb.dim}")
    if Ha.canonical() != Hb.canonical():
        raise InputError(f"{a.source} and {b.source} describe different Hamiltonians")


def _pair(cfg: RunConfig, specs):
    a, b = specs
    _same_system(a, b)
    beta = _beta(cfg, a)
    if cfg.beta is None and b.beta != a.beta:
        raise InputError(f"{a.source} and {b.source} disagree on beta ({a.beta} vs {b.beta})")
    return a.state(beta), b.state(beta), beta


def cmd_curve(cfg, specs):
    spec = specs[0]
    beta = _beta(cfg, spec)
    c = build_curve(spec.state(beta), beta).simplified()
    if cfg.format == "csv":
        return EXIT_OK, c.to_csv()
    return EXIT_OK, {"beta": beta, "Z": c.Z, "points": c.to_json()}


def cmd_feasible(cfg, specs):
    p, q, beta = _pair(cfg, specs)
    v = transition_verdict(p, q, beta, cfg.tolerance)
    report = {"feasible": v.feasible, "margin": v.margin, "marginal": v.marginal, "verdict": v.label}
    return (EXIT_OK if v.feasible else EXIT_NEGATIVE), report


def cmd_work(cfg, specs):
    spec = specs[0]
    beta = _beta(cfg, spec)
    p = spec.state(beta)
    report = {
        "beta": beta,
        "epsilon": cfg.epsilon,
        "helmholtz": helmholtz_free_energy(p, beta),
        "f_min": f_min(p, beta, cfg.epsilon),
        "f_max": f_max(p, beta, cfg.epsilon),
        "distill": w_distill(p, beta, cfg.epsilon).to_json(),
        "form": w_form(p, beta, cfg.epsilon).to_json(),
    }
    return EXIT_OK, report


def cmd_switch(cfg, specs):
    a, b = specs
    beta = _beta(cfg, a)
    s = SwitchScenario(a.state(beta), b.state(beta), beta)
    mode = cfg.mode
    if mode == "auto":
        mode = "distill" if b.is_gibbs else "form" if a.is_gibbs else None
        if mode is None:
            raise InputError("switch needs a Gibbs state at one end (omit 'probabilities')")
    report = {"mode": mode, "beta": beta, "epsilon": cfg.epsilon}
    if a.is_gibbs and b.is_gibbs:
        report["thermal"] = thermal_switch_work(a.hamiltonian, b.hamiltonian, beta)
    try:
        report["closed_form"] = switch_closed_form(s, cfg.epsilon, mode)
        quote = switch_work(s, cfg.epsilon, mode)
    except InfeasibleScenarioError as exc:
        report["error"] = str(exc)
        return EXIT_NEGATIVE, report
    except ValueError as exc:
        raise InputError(str(exc)) from None
    report["W"] = quote.value
    report["certificate_margin"] = quote.certificate_margin
    report["exact"] = quote.exact
    return EXIT_OK, report


def _lp(cfg, specs, detailed_balance: bool):
    p, q, beta = _pair(cfg, specs)
    tau = gibbs_state(p.system, beta)
    method = "exact" if cfg.exact else "auto"
    res = solve_transition_lp(p, q, tau, detailed_balance=detailed_balance, method=method)
    report = {"feasible": res.feasible, "method": res.method, "residual": res.residual,
              "detailed_balance": detailed_balance,
              "map": Verbatim(res.witness.to_json()) if res.witness is not None else None}
    return (EXIT_OK if res.feasible else EXIT_NEGATIVE), report


def cmd_lp_check(cfg, specs):
    return _lp(cfg, specs, detailed_balance=False)


def cmd_db_check(cfg, specs):
    return _lp(cfg, specs, detailed_balance=True)


def cmd_oracle(cfg, specs):
    p, q, beta = _pair(cfg, specs)
    try:
        bath = build_toy_bath(beta, cfg.bath_emax)
        rep = oracle_report(bath, p, q, delta=cfg.tolerance, jobs=cfg.jobs)
    except ValueError as exc:
        raise InputError(str(exc)) from None
    out = {"bath": {"c": bath.c, "beta": bath.beta_target, "e_max": bath.e_max,
                    "exact": bath.exact}}
    out.update(rep.to_json())
    ok = rep.assumptions.all_pass and all(row["agree"] for row in rep.agreement)
    return (EXIT_OK if ok else EXIT_NEGATIVE), out


def cmd_info(cfg, specs):
    spec = specs[0]
    beta = _beta(cfg, spec)
    H = spec.hamiltonian
    p = spec.state(beta)
    tau = gibbs_state(H, beta)
    Z = partition_function(H, beta)
    report = {"dim": H.dim, "levels": len(H.levels), "beta": beta, "Z": Z,
              "free_energy_gibbs": -math.log(Z) / beta, "mean_energy": p.mean_energy(),
              "gibbs": spec.is_gibbs, "d_min": d_min(p, tau),
              "relative_entropy": relative_entropy(p, tau) if p.normalized else None,
              "d_max": d_max(p, tau), "state": Verbatim(system_to_dict(H, beta, p.probs))}
    return EXIT_OK, report


HANDLERS = {"curve": cmd_curve, "feasible": cmd_feasible, "work": cmd_work, "switch": cmd_switch,
            "lp-check": cmd_lp_check, "db-check": cmd_db_check, "oracle": cmd_oracle,
            "info": cmd_info}


def run(cfg: RunConfig, out=None, err=None) -> int:
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    try:
        cfg.validate()
        specs = [load_system(path) for path in cfg.inputs]
        code, report = HANDLERS[cfg.command](cfg, specs)
    except (ValueError, OverflowError) as exc:
        print(f"error: {exc}", file=err)
        return EXIT_INPUT
    text = report if isinstance(report, str) else dump_report(report) + "\n"
    out.write(text)
    return code


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="thermoforge",
                                 description="Thermodynamic transition feasibility and single-shot work.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("inputs", nargs="+", help="system/state JSON files")
    ap.add_argument("--epsilon", type=float, default=0.0, help="smoothing parameter in [0, 1)")
    ap.add_argument("--beta", type=float, default=None, help="override the inverse temperature")
    ap.add_argument("--format", choices=("json", "csv"), default="json")
    ap.add_argument("--tolerance", type=float, default=1e-9)
    ap.add_argument("--exact", action="store_true", help="force the rational LP solver")
    ap.add_argument("--jobs", type=int, default=1)
    ap.add_argument("--mode", choices=("auto", "distill", "form"), default="auto",
                    help="switch: which end is thermal")
    ap.add_argument("--bath-emax", type=int, default=16, help="oracle: top bath energy")
    return ap


def main(argv=None, out=None, err=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(args.command, args.inputs, args.epsilon, args.beta, args.format,
                    args.tolerance, args.exact, args.jobs, args.mode, args.bath_emax)
    return run(cfg, out, err)


if __name__ == "__main__":
    sys.exit(main())
