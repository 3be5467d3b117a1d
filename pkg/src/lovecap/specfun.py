"""Sine and Cosine integrals of complex argument.

Every argument is folded into the closed first quadrant using the exact
identities

    Si(conj z) = conj Si(z),   Ci(conj z) = conj Ci(z),
    Si(-z) = -Si(z),           Ci(-z) = Ci(z) -/+ j*pi,

so conjugation and odd symmetry hold bit for bit.  Inside the quadrant two
evaluation regimes are used:

* Maclaurin series, close to the origin and along the imaginary axis, where
  the terms do not cancel;
* the exponential integral E1 by its continued fraction elsewhere, through
  Ci(w) + j(Si(w) - pi/2) = -E1(-jw) and Ci(w) - j(Si(w) - pi/2) = -E1(jw).

Accuracy is about 1e-15 relative throughout ``|Im z| <= 50``; arguments
outside that strip are rejected.
"""

import cmath
import math

import numpy as np

__all__ = [
    "IM_LIMIT",
    "SpecfunError",
    "AccuracyRegionError",
    "SingularityError",
    "si",
    "ci",
    "si_ci",
    "si_ci_batch",
]

IM_LIMIT = 50.0

# series is used for Re w < SERIES_RE or |w| < SERIES_ABS (w in first quadrant)
SERIES_RE = 2.5
SERIES_ABS = 4.0

_CF_MAXITER = 5000
_SERIES_MAXITER = 1000
_HALF_PI = 0.5 * math.pi


class SpecfunError(ValueError):
    """Base class for argument errors; carries the offending argument."""

    def __init__(self, message, argument, index=None):
        super().__init__(message)
        self.argument = argument
        self.index = index


class AccuracyRegionError(SpecfunError):
    pass


class SingularityError(SpecfunError):
    pass


def _check(z):
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise AccuracyRegionError(f"non-finite argument {z!r}", z)
    if abs(z.imag) > IM_LIMIT:
        raise AccuracyRegionError(
            f"|Im z| = {abs(z.imag):g} exceeds the accuracy region |Im z| <= {IM_LIMIT:g}"
            f" (z = {z!r})",
            z,
        )
    return z


def _series(w):
    """Maclaurin series: returns (Si(w), Ci(w) - gamma - log(w))."""
    w2 = w * w
    term = w
    s = w
    for k in range(1, _SERIES_MAXITER):
        term *= -w2 / ((2 * k) * (2 * k + 1))
        add = term / (2 * k + 1)
        s += add
        if abs(add) <= 1e-17 * abs(s):
            break
    term = 1.0 + 0j
    c = 0j
    for k in range(1, _SERIES_MAXITER):
        term *= -w2 / ((2 * k - 1) * (2 * k))
        add = term / (2 * k)
        c += add
        if abs(add) <= 1e-17 * abs(c):
            break
    return s, c


def _e1_cf(w):
    """E1(w) from its continued fraction (modified Lentz), w off the negative axis."""
    tiny = 1e-300
    b = w + 1.0
    c = 1.0 / tiny
    d = 1.0 / b
    h = d
    for i in range(1, _CF_MAXITER):
        a = -float(i * i)
        b += 2.0
        d = 1.0 / (a * d + b)
        c = b + a / c
        delta = c * d
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            return h * cmath.exp(-w)
    raise RuntimeError(f"E1 continued fraction did not converge at w = {w!r}")


def _first_quadrant(w):
    if w.real < SERIES_RE or abs(w) < SERIES_ABS:
        s, c = _series(w)
        return s, np.euler_gamma + cmath.log(w) + c
    e_plus = _e1_cf(1j * w)
    e_minus = _e1_cf(-1j * w)
    s = _HALF_PI + (e_plus - e_minus) / 2j
    c = -0.5 * (e_plus + e_minus)
    return s, c


def si_ci(z):
    """Return ``(Si(z), Ci(z))`` on the principal branch.

    Raises :class:`SingularityError` at ``z == 0`` (Ci is logarithmic there)
    and :class:`AccuracyRegionError` when ``|Im z| > 50``.
    """
    z = _check(z)
    if z == 0:
        raise SingularityError("Ci has a logarithmic singularity at z = 0", z)
    negate = z.real < 0 or (z.real == 0 and z.imag < 0)
    w = -z if negate else z
    conjugate = w.imag < 0
    if conjugate:
        w = w.conjugate()
    s, c = _first_quadrant(w)
    if conjugate:
        s = s.conjugate()
        c = c.conjugate()
    if negate:
        s = -s
        # Ci(-w) = Ci(w) - j*pi for w in the upper half plane, + j*pi in the
        # lower one; the negative real axis takes its value from above
        c = c - 1j * math.pi if (-z).imag > 0 else c + 1j * math.pi
    return s, c


def si(z):
    """Sine integral Si(z) = int_0^z sin(t)/t dt."""
    z = _check(z)
    if z == 0:
        return 0j
    return si_ci(z)[0]


def ci(z):
    """Cosine integral Ci(z), principal branch (cut along the negative real axis)."""
    return si_ci(z)[1]


def si_ci_batch(points):
    """Evaluate ``si_ci`` over a sequence, preserving order.

    The first failing point re-raises its error with ``index`` set.
    """
    out = []
    for i, z in enumerate(points):
        try:
            out.append(si_ci(z))
        except SpecfunError as err:
            raise type(err)(f"point {i}: {err}", err.argument, index=i) from err
    return out
