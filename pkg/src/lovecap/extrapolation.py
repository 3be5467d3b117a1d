"""N -> infinity extrapolation of f_0(N).

Two schemes:

* a three-point power law f_0(N) = C - beta (N kappa)^(-alpha), collocated at
  N, N/2 and N/3;
* a transfer scheme that assumes the residual h(N kappa) = f_0(N) - C depends
  on N kappa alone, and carries a converged estimate from a larger separation
  down a ladder of decreasing kappa.
"""

import math
import warnings
from dataclasses import dataclass, field

from scipy.optimize import bisect

from .solver import TruncationSolver

__all__ = [
    "FitError",
    "DegenerateFitError",
    "ChainError",
    "SeedWarning",
    "PowerLawFit",
    "HeuristicStep",
    "HeuristicChain",
    "fit_truncations",
    "power_law_fit",
    "heuristic_step",
    "run_chain",
]

ALPHA_BRACKET = (0.05, 10.0)
ALPHA_XTOL = 1e-12


class FitError(ValueError):
    pass


class DegenerateFitError(FitError):
    pass


class ChainError(RuntimeError):
    def __init__(self, message, chain):
        super().__init__(message)
        self.chain = chain


class SeedWarning(UserWarning):
    pass


def fit_truncations(trunc):
    """(N, N/2, N/3), halves rounded up."""
    trunc = int(trunc)
    return trunc, math.floor(trunc / 2 + 0.5), math.floor(trunc / 3 + 0.5)


@dataclass(frozen=True)
class PowerLawFit:
    kappa: float
    c_hat: float
    alpha: float
    beta: float
    inputs: tuple  # ((N, f0), ...) largest N first

    def model(self, trunc):
        return self.c_hat - self.beta * (trunc * self.kappa) ** (-self.alpha)

    @property
    def trunc(self):
        return self.inputs[0][0]

    @property
    def f0(self):
        return self.inputs[0][1]

    @property
    def extrapolation(self):
        """Amount added on top of the best raw value."""
        return self.c_hat - self.f0

    def max_residual(self):
        return max(abs(f - self.model(n)) for n, f in self.inputs)


def power_law_fit(kappa, samples) -> PowerLawFit:
    """Collocate the power law through three (N, f0) samples.

    With x = N kappa, alpha solves
    (f1 - f2)/(f2 - f3) = (x2^-a - x1^-a)/(x3^-a - x2^-a) by bisection on
    [0.05, 10]; beta and C then follow.  For N divisible by 6 the right side
    is (2^a - 1)/(3^a - 2^a).
    """
    pts = sorted(((int(n), float(f)) for n, f in samples), reverse=True)
    if len(pts) != 3 or len({n for n, _ in pts}) != 3:
        raise FitError(f"need three samples at distinct truncations, got {samples!r}")
    (n1, f1), (n2, f2), (n3, f3) = pts
    if not (f1 > f2 > f3):
        raise DegenerateFitError(
            f"f0 not strictly increasing in N ({f3!r}, {f2!r}, {f1!r});"
            " already converged or dominated by noise"
        )
    x1, x2, x3 = n1 * kappa, n2 * kappa, n3 * kappa
    ratio = (f1 - f2) / (f2 - f3)

    def gap(a):
        return (x2**-a - x1**-a) / (x3**-a - x2**-a) - ratio

    lo, hi = ALPHA_BRACKET
    if gap(lo) * gap(hi) > 0:
        raise FitError(f"alpha not bracketed in [{lo}, {hi}] (difference ratio {ratio:.6g})")
    alpha = bisect(gap, lo, hi, xtol=ALPHA_XTOL, maxiter=200)
    beta = (f1 - f2) / (x2**-alpha - x1**-alpha)
    c_hat = f1 + beta * x1**-alpha
    return PowerLawFit(float(kappa), c_hat, alpha, beta, tuple(pts))


@dataclass(frozen=True)
class HeuristicStep:
    kappa: float
    trunc: int
    f0: float
    c_tilde: float
    n_prev: float | None = None  # (kappa_i / kappa_{i-1}) N_i
    f0_prev_at_n: float | None = None
    delta_c: float | None = None  # 1/10 of this step's extrapolation

    @property
    def h(self):
        return self.f0 - self.c_tilde


@dataclass
class HeuristicChain:
    steps: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def final(self):
        return self.steps[-1]


def _snap(n):
    r = round(n)
    return float(r) if abs(n - r) <= 1e-9 * max(1.0, abs(n)) else n


def heuristic_step(prev: HeuristicStep, prev_solver, kappa, trunc, f0) -> HeuristicStep:
    """Carry C~ from ``prev`` to separation ``kappa``.

    C~_i = f0_i(N_i) + C~_{i-1} - f0_{i-1}(n) with n = (kappa_i / kappa_{i-1}) N_i.
    A fractional n is handled by linear interpolation between solves at
    floor(n) and ceil(n) on ``prev_solver`` (anything with an ``f0(N)`` method).
    """
    n = _snap(kappa / prev.kappa * trunc)
    if n > prev.trunc:
        raise ValueError(
            f"transfer truncation n = {n:.6g} exceeds the previous truncation {prev.trunc};"
            f" lower N at kappa={kappa!r} or raise it at kappa={prev.kappa!r}"
        )
    lo, hi = math.floor(n), math.ceil(n)
    f_lo = prev_solver.f0(lo)
    f_n = f_lo if lo == hi else f_lo + (n - lo) * (prev_solver.f0(hi) - f_lo)
    c_tilde = prev.c_tilde + (f0 - f_n)
    return HeuristicStep(kappa, int(trunc), f0, c_tilde, n, f_n, 0.1 * (c_tilde - f0))


def run_chain(kappas, trunc_budget, seed_fit: PowerLawFit) -> HeuristicChain:
    """Apply :func:`heuristic_step` down a strictly decreasing ladder of kappa.

    ``trunc_budget`` is one truncation for every step after the seed, or a
    list with one entry per step after the seed.  The seed is the power-law
    fit at ``kappas[0]``.  A failing step raises :class:`ChainError` holding
    the completed prefix.
    """
    kappas = [float(k) for k in kappas]
    if not kappas:
        raise ValueError("empty kappa list")
    if kappas[0] != seed_fit.kappa:
        raise ValueError(f"seed fit is at kappa={seed_fit.kappa!r}, ladder starts at {kappas[0]!r}")
    if any(b >= a for a, b in zip(kappas, kappas[1:])):
        raise ValueError(f"kappa ladder must be strictly decreasing: {kappas}")
    if isinstance(trunc_budget, int):
        truncs = [trunc_budget] * (len(kappas) - 1)
    else:
        truncs = [int(n) for n in trunc_budget]
        if len(truncs) != len(kappas) - 1:
            raise ValueError("need one truncation per step after the seed")

    chain = HeuristicChain()
    seed = HeuristicStep(seed_fit.kappa, seed_fit.trunc, seed_fit.f0, seed_fit.c_hat)
    chain.steps.append(seed)
    seed_product = seed_fit.trunc * seed_fit.kappa
    if seed_product < 1:
        msg = (
            f"seed fit at N*kappa = {seed_product:.3g} < 1; power-law seeds this far from"
            " convergence overshoot by roughly a third of their extrapolation"
        )
        warnings.warn(msg, SeedWarning, stacklevel=2)
        chain.notes.append(msg)
    if len(kappas) == 1:
        return chain

    prev = seed
    try:
        prev_solver = TruncationSolver.assemble(seed.kappa, seed.trunc)
        for kappa, trunc in zip(kappas[1:], truncs):
            solver = TruncationSolver.assemble(kappa, trunc)
            step = heuristic_step(prev, prev_solver, kappa, trunc, solver.f0(trunc))
            chain.steps.append(step)
            prev, prev_solver = step, solver
    except (ValueError, RuntimeError) as err:
        raise ChainError(f"chain stopped after kappa={prev.kappa!r}: {err}", chain) from err
    return chain
