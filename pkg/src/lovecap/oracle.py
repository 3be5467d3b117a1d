"""Independent numerical checks of the closed forms.

Nothing here touches the Si/Ci closed forms except the I4 integrand, whose
definition contains Si and Ci.  The integrators are plain adaptive
Gauss-Legendre; the 2-D kernel integrals split the inner integral at the
crest t = s before refining.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .specfun import si_ci

__all__ = [
    "QuadratureBudgetError",
    "QuadratureRule",
    "gauss_legendre_rule",
    "composite_rule",
    "adaptive_gauss_legendre",
    "love_kernel",
    "nystrom_solve",
    "kernel_entry_quadrature",
    "kernel_block_quadrature",
    "i_integrand_quadrature",
]

DEFAULT_ORDER = 20
MAX_PANELS = 20000
ROUNDOFF = 512 * np.finfo(float).eps


class QuadratureBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes and weights on (0, 1)."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def order(self):
        return len(self.nodes)


@lru_cache(maxsize=64)
def _leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_legendre_rule(order) -> QuadratureRule:
    x, w = _leggauss(int(order))
    return QuadratureRule(x.copy(), w.copy())


def composite_rule(panels, order) -> QuadratureRule:
    """``panels`` equal panels on [0, 1], each with an ``order``-point Gauss rule."""
    x, w = _leggauss(int(order))
    edges = np.linspace(0.0, 1.0, int(panels) + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + h[:, None] * x[None, :]).ravel()
    weights = (h[:, None] * w[None, :]).ravel()
    return QuadratureRule(nodes, weights)


def adaptive_gauss_legendre(
    f, a, b, tol=1e-10, order=DEFAULT_ORDER, breakpoints=(), max_panels=MAX_PANELS, rtol=0.0
):
    """Integrate f over [a, b] to absolute tolerance ``tol``.

    ``f`` maps an array of abscissae of shape (k,) to values of shape (k, ...)
    (real or complex).  Each panel is compared against the sum over its two
    halves; a panel is accepted once the difference is below its share of
    ``tol`` (proportional to its width).  With ``rtol`` > 0 a panel is also
    accepted when the difference is below ``rtol`` times its own magnitude,
    and always once it is down to round-off in the panel's absolute mass.
    """
    x, w = _leggauss(order)

    def panel(lo, hi):
        h = hi - lo
        vals = np.asarray(f(lo + h * x))
        return np.tensordot(h * w, vals, axes=(0, 0)), np.tensordot(h * w, np.abs(vals), axes=(0, 0))

    cuts = sorted({a, b, *[p for p in breakpoints if a < p < b]})
    total_width = b - a
    stack = []
    for lo, hi in zip(cuts, cuts[1:]):
        stack.append((lo, hi, panel(lo, hi)[0]))
    result = 0.0
    used = len(stack)
    while stack:
        lo, hi, coarse = stack.pop()
        mid = 0.5 * (lo + hi)
        left, left_abs = panel(lo, mid)
        right, right_abs = panel(mid, hi)
        used += 2
        diff = np.abs(left + right - coarse)
        err = np.max(diff)
        share = (hi - lo) / total_width
        if (
            err <= tol * share
            or err <= rtol * np.max(np.abs(left + right))
            # nothing left to gain once the difference is at round-off level
            or np.all(diff <= ROUNDOFF * (left_abs + right_abs))
            or hi - lo < 1e-13 * total_width
        ):
            result = result + left + right
            continue
        if used > max_panels:
            raise QuadratureBudgetError(
                f"adaptive quadrature exceeded {max_panels} panels (error {err:.3g} on [{lo:.6g}, {hi:.6g}])"
            )
        stack.append((lo, mid, left))
        stack.append((mid, hi, right))
    return result


def love_kernel(kappa, s, t):
    """K(s, t) = kappa/pi [1/(kappa^2 + (s-t)^2) + 1/(kappa^2 + (s+t)^2)]."""
    k2 = kappa * kappa
    return kappa / math.pi * (1.0 / (k2 + (s - t) ** 2) + 1.0 / (k2 + (s + t) ** 2))


def nystrom_solve(kappa, rule: QuadratureRule):
    """Normalized capacitance from a Nystrom discretization of the Love equation."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    if rule.order < 2:
        raise ValueError("Nystrom needs at least two nodes")
    s = rule.nodes
    a = np.eye(rule.order) - love_kernel(kappa, s[:, None], s[None, :]) * rule.weights[None, :]
    try:
        f = np.linalg.solve(a, np.ones(rule.order))
    except np.linalg.LinAlgError as err:
        raise RuntimeError(f"singular Nystrom system at kappa={kappa!r}, M={rule.order}") from err
    return float(rule.weights @ f)


def _inner(kappa, s, freqs, tol):
    """int_0^1 K(s, t) cos(b t) dt for each s (rows) and b in freqs (columns).

    [0, s] and [s, 1] are mapped onto [0, 1] so one adaptive run serves all s;
    the crest sits at the shared endpoint u = 1 resp. u = 0.
    """
    s = np.asarray(s, dtype=float)

    def left(u):
        t = s[None, :] * u[:, None]
        return (s[None, :] * love_kernel(kappa, s[None, :], t))[..., None] * np.cos(t[..., None] * freqs)

    def right(u):
        t = s[None, :] + (1.0 - s[None, :]) * u[:, None]
        return ((1.0 - s[None, :]) * love_kernel(kappa, s[None, :], t))[..., None] * np.cos(
            t[..., None] * freqs
        )

    return adaptive_gauss_legendre(left, 0.0, 1.0, tol) + adaptive_gauss_legendre(right, 0.0, 1.0, tol)


def _double_cosine_integral(kappa, inner_freqs, outer_freqs, tol):
    """int int K(s, t) cos(b t) cos(c s) dt ds for all b in inner_freqs, c in outer_freqs."""
    inner_freqs = np.asarray(inner_freqs, dtype=float)
    outer_freqs = np.asarray(outer_freqs, dtype=float)

    def g(s):
        j = _inner(kappa, s, inner_freqs, 1e-2 * tol)  # (len(s), nb)
        return j[:, :, None] * np.cos(np.multiply.outer(s, outer_freqs))[:, None, :]

    return adaptive_gauss_legendre(g, 0.0, 1.0, tol)


def _norm(k):
    return 1.0 if k == 0 else math.sqrt(2.0)


def kernel_block_quadrature(kappa, indices, tol=1e-10):
    """Matrix of K_mn over ``indices`` x ``indices`` by adaptive 2-D quadrature."""
    if kappa < 0.01:
        raise ValueError("kernel quadrature is only budgeted for kappa >= 0.01")
    idx = [int(i) for i in indices]
    freqs = [math.pi * i for i in idx]
    raw = _double_cosine_integral(kappa, freqs, freqs, tol / 2)  # [n, m]
    scale = np.array([_norm(i) for i in idx])
    return (raw * scale[:, None] * scale[None, :]).T


def kernel_entry_quadrature(kappa, m, n, tol=1e-10):
    """K_mn by adaptive 2-D quadrature of its defining double integral."""
    if m < 0 or n < 0:
        raise ValueError("indices must be >= 0")
    if kappa < 0.01:
        raise ValueError("kernel quadrature is only budgeted for kappa >= 0.01")
    val = _double_cosine_integral(kappa, [math.pi * n], [math.pi * m], tol / 2)[0, 0]
    return float(val * _norm(m) * _norm(n))


def _si_ci_array(z):
    out = np.array([si_ci(v) for v in np.ravel(z)])
    return out[:, 0].reshape(np.shape(z)), out[:, 1].reshape(np.shape(z))


def i_integrand_quadrature(which, tol=1e-10, rtol=0.0, **params):
    """Integrate the defining integrand of I1, I2, I3 or I4 directly.

    I1(beta, kappa, alpha) = int_0^1 cos(beta t) arctan((t + alpha)/kappa) dt
    I2(beta, kappa, alpha) = int_0^1 kappa cos(beta t) / (kappa^2 + (t + alpha)^2) dt
    I3(beta, kappa, gamma) = int_0^1 [I2(beta, kappa, -s) + I2(beta, kappa, s)] cos(gamma s) ds
    I4(q, beta, z1, z2)    = int_0^1 [sin(q s + beta z1) Si(beta (s + z2))
                                      + cos(q s + beta z1) Ci(beta (s + z2))] ds
    """
    which = which.upper()
    if which == "I1":
        beta, kappa, alpha = params["beta"], params["kappa"], params["alpha"]
        f = lambda t: np.cos(beta * t) * np.arctan((t + alpha) / kappa)
        return float(adaptive_gauss_legendre(f, 0.0, 1.0, tol, breakpoints=(-alpha,)))
    if which == "I2":
        beta, kappa, alpha = params["beta"], params["kappa"], params["alpha"]
        f = lambda t: kappa * np.cos(beta * t) / (kappa**2 + (t + alpha) ** 2)
        return float(adaptive_gauss_legendre(f, 0.0, 1.0, tol, breakpoints=(-alpha,)))
    if which == "I3":
        beta, kappa, gamma = params["beta"], params["kappa"], params["gamma"]
        if kappa < 0.01:
            raise ValueError("I3 quadrature is only budgeted for kappa >= 0.01")
        # I2(b, k, -s) + I2(b, k, s) = pi int_0^1 K(s, t) cos(b t) dt
        val = _double_cosine_integral(kappa, [beta], [gamma], tol / math.pi)[0, 0]
        return float(math.pi * val)
    if which == "I4":
        q, beta = params["q"], params["beta"]
        z1, z2 = complex(params["z1"]), complex(params["z2"])

        def f(s):
            sv, cv = _si_ci_array(beta * (s + z2))
            arg = q * s + beta * z1
            return np.sin(arg) * sv + np.cos(arg) * cv

        return complex(adaptive_gauss_legendre(f, 0.0, 1.0, tol, rtol=rtol))
    raise ValueError(f"unknown integral {which!r}; expected I1..I4")
