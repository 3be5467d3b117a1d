"""Oracle comparison suites: closed forms against direct quadrature.

Each suite returns a :class:`CheckResult`; a failing result lists the
offending cases (worst first) so a report can name them.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import kernel, oracle
from .extrapolation import fit_truncations, power_law_fit
from .solver import TruncationSolver

__all__ = [
    "CheckResult",
    "DrawDomain",
    "check_kernel_block",
    "check_integrals",
    "check_nystrom",
    "draw_parameters",
    "run_suites",
    "LEVELS",
]

KERNEL_TOL = 1e-8
INTEGRAL_TOL = 1e-9
NYSTROM_RTOL = 1e-5
QUAD_TOL = 1e-12

# Largest |Im| of any Si/Ci argument in a draw.  The closed forms subtract
# terms of size exp(|Im|); beyond ~6 the subtraction alone costs more than
# the 1e-9 budget.
MAX_IMAG = 6.0


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    max_error: float
    tol: float
    cases: int
    failures: tuple = field(default=())  # (label, error) worst first

    def line(self):
        head = "PASS" if self.passed else "FAIL"
        text = f"{head} {self.name}: {self.cases} cases, max error {self.max_error:.3g} (tol {self.tol:g})"
        if self.failures:
            shown = ", ".join(f"{lab} ({err:.3g})" for lab, err in self.failures[:8])
            more = len(self.failures) - 8
            text += f"; failing: {shown}" + (f" and {more} more" if more > 0 else "")
        return text


def _result(name, tol, labelled_errors):
    errs = [(lab, float(e)) for lab, e in labelled_errors]
    # worst first; NaN counts as worst
    bad = sorted(((lab, e) for lab, e in errs if not e <= tol), key=lambda p: -math.inf if math.isnan(p[1]) else -p[1])
    worst = max((e for _, e in errs), default=0.0)
    if any(math.isnan(e) for _, e in errs):
        worst = math.nan
    return CheckResult(name, not bad, worst, tol, len(errs), tuple(bad))


def check_kernel_block(kappa, max_index, tol=KERNEL_TOL) -> CheckResult:
    """Closed-form K_mn against 2-D quadrature for 0 <= m, n <= max_index.

    Entries are compared before the assembly bound check, so a broken
    formula is reported entry by entry; a failing :func:`kernel.assemble`
    on the same block is reported as an extra case.
    """
    quad = oracle.kernel_block_quadrature(kappa, range(max_index + 1), tol=QUAD_TOL)
    packed = kernel.packed_entries(kernel.SpecfunCache.build(kappa, max_index), max_index)
    labelled = []
    i = 0
    for m in range(max_index + 1):
        for n in range(m + 1):
            labelled.append((f"K[{m},{n}]", abs(packed[i] - quad[m, n])))
            i += 1
    try:
        kernel.assemble(kappa, max_index)
    except ValueError as err:
        labelled.append((f"assemble: {err}", math.inf))
    return _result(f"kernel block kappa={kappa:g}, m,n<={max_index}", tol, labelled)


@dataclass(frozen=True)
class DrawDomain:
    beta: tuple = (0.5, 30.0)
    kappa: tuple = (0.02, 1.0)
    alpha: tuple = (-1.0, 1.0)
    shift: tuple = (-2.0, 2.0)  # real parts of z1, z2 in I4


def draw_parameters(which, count, rng, domain=DrawDomain()):
    """Random parameter sets for I1..I4 inside the domain where the closed forms hold 1e-9.

    Every Si/Ci argument the closed form meets has |Im| <= ``MAX_IMAG``
    (beta kappa, gamma kappa for I3, |Im beta z| and |Im (beta - q) z| for I4).
    """
    which = which.upper()
    out = []
    for _ in range(count):
        beta = rng.uniform(*domain.beta)
        kap_hi = min(domain.kappa[1], MAX_IMAG / beta)
        if which in ("I1", "I2"):
            kappa = rng.uniform(domain.kappa[0], kap_hi)
            out.append(dict(beta=beta, kappa=kappa, alpha=rng.uniform(*domain.alpha)))
        elif which == "I3":
            gamma = rng.uniform(*domain.beta)
            kappa = rng.uniform(domain.kappa[0], min(kap_hi, MAX_IMAG / gamma))
            out.append(dict(beta=beta, kappa=kappa, gamma=gamma))
        elif which == "I4":
            q = rng.choice((-1.0, 1.0)) * rng.uniform(*domain.beta)
            y_hi = MAX_IMAG / max(beta, abs(beta - q))
            y1 = rng.choice((-1.0, 1.0)) * rng.uniform(0.0, y_hi)
            y2 = rng.choice((-1.0, 1.0)) * rng.uniform(0.01 * y_hi, y_hi)
            z1 = complex(rng.uniform(*domain.shift), y1)
            z2 = complex(rng.uniform(*domain.shift), y2)
            out.append(dict(q=q, beta=beta, z1=z1, z2=z2))
        else:
            raise ValueError(f"unknown integral {which!r}; expected I1..I4")
    return out


_CLOSED = {"I1": kernel.i1, "I2": kernel.i2, "I3": kernel.i3, "I4": kernel.i4}


def _fmt_params(p):
    return ", ".join(f"{k}={v:.6g}" for k, v in p.items())


def check_integrals(which, count, seed=0, tol=INTEGRAL_TOL) -> CheckResult:
    """Closed form of I1..I4 against its defining integral on ``count`` random draws."""
    which = which.upper()
    rng = np.random.default_rng(seed)
    labelled = []
    for p in draw_parameters(which, count, rng):
        closed = _CLOSED[which](**p)
        quad = oracle.i_integrand_quadrature(which, tol=QUAD_TOL, rtol=1e-14, **p)
        labelled.append((f"{which}({_fmt_params(p)})", abs(closed - quad)))
    return _result(f"{which} closed form vs quadrature (seed {seed})", tol, labelled)


def check_nystrom(kappa=0.1, trunc=30, panels=20, rtol=NYSTROM_RTOL) -> CheckResult:
    """Power-law extrapolated Galerkin value against a Nystrom solve."""
    solver = TruncationSolver.assemble(kappa, trunc)
    fit = power_law_fit(kappa, [(n, solver.f0(n)) for n in fit_truncations(trunc)])
    ref = oracle.nystrom_solve(kappa, oracle.composite_rule(panels, oracle.DEFAULT_ORDER))
    err = abs(fit.c_hat - ref) / abs(ref)
    return _result(
        f"Galerkin (N={trunc}, power fit) vs Nystrom ({panels}x{oracle.DEFAULT_ORDER} nodes) at kappa={kappa:g}",
        rtol,
        [(f"C={fit.c_hat:.12g} vs {ref:.12g}", err)],
    )


LEVELS = {
    "fast": dict(blocks=((0.1, 6), (0.01, 4)), draws=6),
    "full": dict(blocks=((0.1, 12), (0.01, 12)), draws=20),
}


def _guarded(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except (ValueError, RuntimeError, ArithmeticError) as err:
        return CheckResult(name, False, math.nan, math.nan, 0, ((f"{type(err).__name__}: {err}", math.nan),))


def run_suites(level="fast", seed=0):
    """Yield CheckResults for every suite at ``level`` ("fast" or "full").

    A suite that raises is reported as a failure and the rest still run.
    """
    if level not in LEVELS:
        raise ValueError(f"unknown level {level!r}; expected one of {sorted(LEVELS)}")
    cfg = LEVELS[level]
    for kappa, top in cfg["blocks"]:
        yield _guarded(f"kernel block kappa={kappa:g}", check_kernel_block, kappa, top)
    for which in ("I1", "I2", "I3", "I4"):
        yield _guarded(f"{which} draws", check_integrals, which, cfg["draws"], seed=seed)
    yield _guarded("Galerkin vs Nystrom", check_nystrom)
