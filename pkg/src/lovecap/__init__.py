"""Capacitance of the circular parallel-plate capacitor from the Love equation."""

from .extrapolation import fit_truncations, power_law_fit, run_chain
from .kernel import KernelMatrix, PrecisionGuardError, assemble, k00
from .reference import geometric, ignatowsky, kirchhoff
from .solver import TruncationSolver, convergence_curve, solve_f0
from .specfun import ci, si, si_ci

__version__ = "0.1.0"

__all__ = [
    "KernelMatrix",
    "PrecisionGuardError",
    "TruncationSolver",
    "assemble",
    "ci",
    "convergence_curve",
    "fit_truncations",
    "geometric",
    "ignatowsky",
    "k00",
    "kirchhoff",
    "power_law_fit",
    "run_chain",
    "si",
    "si_ci",
    "solve_f0",
]
