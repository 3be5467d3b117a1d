"""Solve the truncated system (I - K) f = e_0 for the normalized capacitance f_0."""

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.linalg import lapack

from .kernel import KernelMatrix, assemble

__all__ = [
    "SolverError",
    "IllConditionedWarning",
    "SolveResult",
    "ConvergenceCurve",
    "TruncationSolver",
    "solve_f0",
    "convergence_curve",
]

CONDITION_WARN = 1e12
RESIDUAL_TOL = 1e-10


class SolverError(RuntimeError):
    def __init__(self, message, trunc=None, condition=None):
        super().__init__(message)
        self.trunc = trunc
        self.condition = condition


class IllConditionedWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class SolveResult:
    kappa: float
    trunc: int
    f0: float
    coeffs: np.ndarray | None = field(default=None, repr=False)
    condition: float = float("nan")
    residual: float = float("nan")


@dataclass(frozen=True)
class ConvergenceCurve:
    kappa: float
    samples: tuple  # ((N, f0), ...) with N strictly increasing

    @property
    def truncs(self):
        return [n for n, _ in self.samples]

    @property
    def values(self):
        return [f for _, f in self.samples]

    def f0(self, trunc):
        for n, f in self.samples:
            if n == trunc:
                return f
        raise KeyError(trunc)


def solve_f0(matrix: KernelMatrix, keep_coeffs=False, trunc=None) -> SolveResult:
    """LU-factor I - K (never inverted) and solve against e_0.

    ``trunc`` selects a leading block of ``matrix``.  Raises :class:`SolverError`
    on a singular factorization or when the residual bound
    ||(I - K) f - e_0||_inf <= 1e-10 (1 + ||f||_inf) fails.
    """
    if trunc is not None:
        matrix = matrix.leading(trunc)
    a = np.eye(matrix.size) - matrix.dense()
    if not np.all(np.isfinite(a)):
        raise SolverError("matrix has non-finite entries", matrix.trunc)
    anorm = np.abs(a).sum(axis=0).max()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    condition = np.inf if rcond == 0 else 1.0 / rcond
    if rcond == 0 or np.any(np.diag(lu) == 0):
        raise SolverError(f"I - K is singular at N={matrix.trunc}", matrix.trunc, condition)
    if condition > CONDITION_WARN:
        warnings.warn(
            f"I - K badly conditioned at kappa={matrix.kappa!r}, N={matrix.trunc}: cond ~ {condition:.3g}",
            IllConditionedWarning,
            stacklevel=2,
        )
    rhs = np.zeros(matrix.size)
    rhs[0] = 1.0
    f = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    resid = np.abs(a @ f - rhs).max()
    if not resid <= RESIDUAL_TOL * (1.0 + np.abs(f).max()):
        raise SolverError(
            f"residual {resid:.3g} above tolerance at N={matrix.trunc} (cond ~ {condition:.3g})",
            matrix.trunc,
            condition,
        )
    return SolveResult(
        matrix.kappa,
        matrix.trunc,
        float(f[0]),
        f if keep_coeffs else None,
        float(condition),
        float(resid),
    )


class TruncationSolver:
    """f_0 at any truncation up to that of one assembled matrix, memoized.

    Each new truncation is a fresh factorization of the leading block.
    """

    def __init__(self, matrix: KernelMatrix):
        self.matrix = matrix
        self._cache = {}

    @classmethod
    def assemble(cls, kappa, trunc):
        return cls(assemble(kappa, trunc))

    @property
    def kappa(self):
        return self.matrix.kappa

    @property
    def trunc(self):
        return self.matrix.trunc

    def f0(self, trunc):
        trunc = int(trunc)
        if trunc not in self._cache:
            self._cache[trunc] = solve_f0(self.matrix, trunc=trunc).f0
        return self._cache[trunc]


def convergence_curve(kappa, trunc_list, matrix=None) -> ConvergenceCurve:
    """f_0(N) for every N in ``trunc_list``, from leading blocks of one assembly."""
    truncs = [int(n) for n in trunc_list]
    if not truncs:
        raise ValueError("empty truncation list")
    if any(b <= a for a, b in zip(truncs, truncs[1:])) or truncs[0] < 0:
        raise ValueError(f"truncations must be non-negative and strictly increasing: {truncs}")
    if matrix is None:
        try:
            matrix = assemble(kappa, truncs[-1])
        except ValueError as err:
            raise type(err)(f"N={truncs[-1]}: {err}") from err
    elif matrix.kappa != kappa or matrix.trunc < truncs[-1]:
        raise ValueError("supplied matrix does not cover the requested curve")
    solver = TruncationSolver(matrix)
    samples = []
    for n in truncs:
        try:
            samples.append((n, solver.f0(n)))
        except SolverError as err:
            raise SolverError(f"N={n}: {err}", n, err.condition) from err
    return ConvergenceCurve(float(kappa), tuple(samples))
