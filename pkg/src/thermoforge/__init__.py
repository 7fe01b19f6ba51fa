"""Thermodynamic transition feasibility and single-shot work for finite systems."""

__version__ = "0.1.0"

from .core import (ClassicalState, CoherenceError, Hamiltonian, Level, QuantumState, as_classical,
                   classicalize, dephase, gibbs_state, partition_function, pure_state, tensor,
                   tensor_power)
from .curves import (ThermoCurve, Verdict, beta_order, build_curve, feasible_transition,
                     majorization_margin, thermo_majorizes, transition_verdict)
from .divergences import (SmoothingBall, d_max, d_max_smooth, d_min, d_min_smooth,
                          relative_entropy)
from .gibbs_maps import (GibbsMap, detailed_balance_feasible, is_gibbs_preserving,
                         lp_transition_feasible, quasi_cycle, solve_transition_lp)
from .work import (SwitchScenario, WorkQuote, f_max, f_min, switch_work, thermal_switch_work,
                   w_distill, w_form)
from .bath import BathSpec, build_toy_bath, check_bath_assumptions, finite_bath_majorization

__all__ = [name for name in dir() if not name.startswith("_")]
