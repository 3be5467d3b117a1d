"""Closed-form comparison values for the normalized capacitance C / (4 eps0 a)."""

import math
from dataclasses import dataclass

__all__ = [
    "ReferenceSet",
    "geometric",
    "kirchhoff",
    "ignatowsky",
    "excess_over_geometric",
    "reference_set",
]

KIRCHHOFF_CONSTANT = 0.25 * (math.log(16 * math.pi) - 1.0)
IGNATOWSKY_CONSTANT = 0.25 * (math.log(8.0) - 0.5)


def _check(kappa):
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa!r}")


def geometric(kappa):
    """Infinite-plate estimate pi / (4 kappa)."""
    _check(kappa)
    return math.pi / (4.0 * kappa)


def kirchhoff(kappa):
    """Small-gap asymptote, without its o(1) remainder."""
    _check(kappa)
    return geometric(kappa) + 0.25 * math.log(1.0 / kappa) + KIRCHHOFF_CONSTANT


def ignatowsky(kappa):
    """Lower bound: Kirchhoff's form with the constant (ln 8 - 1/2)/4."""
    _check(kappa)
    return geometric(kappa) + 0.25 * math.log(1.0 / kappa) + IGNATOWSKY_CONSTANT


def excess_over_geometric(c, kappa):
    """(c - C_g) / C_g as a fraction."""
    if not c > 0:
        raise ValueError(f"capacitance must be positive, got {c!r}")
    g = geometric(kappa)
    return (c - g) / g


@dataclass(frozen=True)
class ReferenceSet:
    kappa: float
    c_geometric: float
    c_kirchhoff: float
    c_ignatowsky: float


def reference_set(kappa):
    return ReferenceSet(kappa, geometric(kappa), kirchhoff(kappa), ignatowsky(kappa))
