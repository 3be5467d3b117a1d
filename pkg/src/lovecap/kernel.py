"""Closed-form Fourier-cosine coefficients of the Love kernel.

The kernel on [0, 1]^2 is

    K(s, t) = kappa/pi * [1/(kappa^2 + (s-t)^2) + 1/(kappa^2 + (s+t)^2)]

and the coefficients are K_mn = int int K(s, t) psi_m(s) psi_n(t) ds dt with
psi_0 = 1 and psi_m = sqrt(2) cos(m pi s).

Every Si/Ci argument met while assembling a matrix is one of

    F1[k] = k pi (1 + j kappa),  F2[k] = k pi (2 + j kappa),  F3[k] = j k pi kappa

or the negative of one, and every sin/cos argument is an integer multiple of
pi plus j k pi kappa.  A :class:`SpecfunCache` holds these per index, so a
full matrix needs O(N) special-function calls and the trigonometric factors
are exact parity signs times sinh/cosh.
"""

import math
import struct
import warnings
from dataclasses import dataclass, field

import cmath
import numpy as np

from .specfun import AccuracyRegionError, si_ci

__all__ = [
    "GUARD_LIMIT",
    "GUARD_WARN",
    "check_guard",
    "packed_entries",
    "PrecisionGuardError",
    "PrecisionGuardWarning",
    "CacheMismatchError",
    "KernelMatrix",
    "SpecfunCache",
    "k00",
    "k0n",
    "i1",
    "i2",
    "i3",
    "i4",
    "kmn",
    "kernel_entry",
    "assemble",
]

PI = math.pi
# Measured entry error is about 1e-16 * exp(2 N pi kappa): ~1e-6 at 16, O(1) past 20.
GUARD_LIMIT = 16.0
GUARD_WARN = 10.0

DUMP_MAGIC = b"LOVEKERN"
DUMP_VERSION = 1
_HEADER = struct.Struct("<8sIIdq")


class PrecisionGuardError(ValueError):
    """N*pi*kappa is past the point where the closed forms cancel to noise."""


class PrecisionGuardWarning(RuntimeWarning):
    pass


class CacheMismatchError(ValueError):
    pass


def _check_kappa(kappa):
    kappa = float(kappa)
    if not (kappa > 0 and math.isfinite(kappa)):
        raise ValueError(f"separation kappa must be positive and finite, got {kappa!r}")
    return kappa


def _family_arguments(kappa, k):
    return k * PI * complex(1.0, kappa), k * PI * complex(2.0, kappa), complex(0.0, k * PI * kappa)


def _parity(k):
    return 1.0 - 2.0 * (np.abs(k) % 2)


@dataclass(frozen=True)
class SpecfunCache:
    """Si/Ci on the three argument families, and sinh/cosh(k pi kappa), for k = 0..max_index.

    Index 0 holds placeholders (Ci is singular there) and is never read.
    """

    kappa: float
    max_index: int
    si1: np.ndarray
    ci1: np.ndarray
    si2: np.ndarray
    ci2: np.ndarray
    si3: np.ndarray
    ci3: np.ndarray
    sinh: np.ndarray
    cosh: np.ndarray

    @classmethod
    def build(cls, kappa, max_index, evaluator=si_ci):
        kappa = _check_kappa(kappa)
        max_index = int(max_index)
        if max_index < 0:
            raise ValueError("max_index must be >= 0")
        arrays = [np.zeros(max_index + 1, dtype=complex) for _ in range(6)]
        for a in (arrays[1], arrays[3], arrays[5]):
            a[0] = complex("nan")
        for k in range(1, max_index + 1):
            for fam, z in enumerate(_family_arguments(kappa, k)):
                s, c = evaluator(z)
                arrays[2 * fam][k] = s
                arrays[2 * fam + 1][k] = c
        y = np.arange(max_index + 1) * PI * kappa
        return cls(kappa, max_index, *arrays, np.sinh(y), np.cosh(y))

    def check(self, kappa, index):
        if self.kappa != kappa:
            raise CacheMismatchError(f"cache built for kappa={self.kappa!r}, asked for {kappa!r}")
        if index > self.max_index:
            raise CacheMismatchError(f"cache covers indices <= {self.max_index}, asked for {index}")

    # Si/Ci at sign * family[k]; all families lie in the upper half plane
    def _lookup(self, fam, sign, k):
        s = (self.si1, self.si2, self.si3)[fam - 1][k]
        c = (self.ci1, self.ci2, self.ci3)[fam - 1][k]
        if sign > 0:
            return s, c
        return -s, c - 1j * PI


def k00(kappa):
    """K_00 = [4 arctan(2/kappa) - kappa ln(1 + 4/kappa^2)] / (2 pi)."""
    kappa = _check_kappa(kappa)
    return (4.0 * math.atan(2.0 / kappa) - kappa * math.log1p(4.0 / kappa**2)) / (2.0 * PI)


def _k0n_values(cache, n):
    par = _parity(n)
    sh = cache.sinh[n]
    ch = cache.cosh[n]
    s2, c2 = cache._lookup(2, 1, n)
    s3m, c3m = cache._lookup(3, -1, n)
    v = par * ch * s2 + par * ch * s3m - par * 1j * sh * c2 + par * 1j * sh * c3m
    return math.sqrt(2.0) / (n * PI * PI) * v.imag


def k0n(kappa, n, cache=None):
    """K_0n for n >= 1."""
    kappa = _check_kappa(kappa)
    n = int(n)
    if n < 1:
        raise ValueError("k0n needs n >= 1; use k00 for n = 0")
    if cache is None:
        cache = _SparseCache(kappa, {n})
    cache.check(kappa, n)
    return float(_k0n_values(cache, np.array([n]))[0])


def _diagonal_correction(cache, n):
    """The q -> 0 limit of the two I4 terms that are singular on the diagonal."""
    kappa = cache.kappa
    jk = 1j * kappa
    s2, c2 = cache._lookup(2, 1, n)
    s3, c3 = cache._lookup(3, 1, n)
    return 1j * cache.sinh[n] * ((2 + jk) * s2 - jk * s3) + cache.cosh[n] * (
        (2 + jk) * c2 - jk * c3 - 1j * PI
    )


def _row(cache, n, m):
    """K[n, m] for an integer row n >= 1 and an array of columns 1 <= m <= n."""
    m = np.asarray(m)
    total = np.zeros(m.shape, dtype=complex)
    sh_n = cache.sinh[n]
    ch_n = cache.cosh[n]
    sh_m = cache.sinh[m]
    ch_m = cache.cosh[m]
    diag = m == n
    for sq in (1, -1):
        qk = n + sq * m
        q = qk * PI
        pq = _parity(qk)
        for s in (1, -1):
            # I4(q, n pi, s j kappa, s (1 + j kappa))
            sin_a = 1j * s * sh_n
            cos_a = ch_n
            sin_aq = pq * sin_a
            cos_aq = pq * cos_a
            if s == 1:
                sp, cp = cache._lookup(2, 1, n)
                sb, cb = cache._lookup(1, 1, n)
                sd1, cd1 = cache._lookup(2, -sq, m)
            else:
                sp, cp = cache._lookup(3, -1, n)
                sb, cb = cache._lookup(1, -1, n)
                sd1, cd1 = cache._lookup(3, sq, m)
            sd0, cd0 = cache._lookup(1, -sq * s, m)
            # argument of the last pair: integer*pi - j s sq m pi kappa
            sin_az = pq * 1j * (-s * sq) * sh_m
            cos_az = pq * ch_m
            num = (
                sin_aq * cp
                - cos_aq * sp
                - sin_a * cb
                + cos_a * sb
                + cos_az * (sd1 - sd0)
                - sin_az * (cd1 - cd0)
            )
            if sq == -1:
                num = np.where(diag, 0.0, num)
                q = np.where(diag, 1.0, q)
            total += num / q
    total = total + np.where(diag, _diagonal_correction(cache, n), 0.0)
    return -total.imag / PI


def kmn(kappa, m, n, cache):
    """K_mn for m, n >= 1 (both the off-diagonal and the diagonal branch)."""
    kappa = _check_kappa(kappa)
    m, n = int(m), int(n)
    if m < 1 or n < 1:
        raise ValueError("kmn needs m, n >= 1")
    lo, hi = min(m, n), max(m, n)
    cache.check(kappa, hi)
    return float(_row(cache, hi, np.array([lo]))[0])


def kernel_entry(kappa, m, n):
    """One coefficient K_mn computed from scalar Si/Ci calls, without a shared cache."""
    kappa = _check_kappa(kappa)
    m, n = int(m), int(n)
    if m == 0 and n == 0:
        return k00(kappa)
    lo, hi = min(m, n), max(m, n)
    small = _SparseCache(kappa, {lo, hi})
    if lo == 0:
        return float(_k0n_values(small, np.array([hi]))[0])
    return float(_row(small, hi, np.array([lo]))[0])


class _SparseCache(SpecfunCache):
    """Cache that only fills the requested indices, each from a direct si_ci call."""

    def __init__(self, kappa, indices):
        top = max(indices)
        arrays = [np.full(top + 1, complex("nan")) for _ in range(6)]
        for k in indices:
            if k == 0:
                continue
            for fam, z in enumerate(_family_arguments(kappa, k)):
                s, c = si_ci(z)
                arrays[2 * fam][k] = s
                arrays[2 * fam + 1][k] = c
        y = np.arange(top + 1) * PI * kappa
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "max_index", top)
        for name, a in zip(("si1", "ci1", "si2", "ci2", "si3", "ci3"), arrays):
            object.__setattr__(self, name, a)
        object.__setattr__(self, "sinh", np.sinh(y))
        object.__setattr__(self, "cosh", np.cosh(y))


# --- the integral building blocks, for arbitrary parameters ------------------


def i1(beta, kappa, alpha):
    """I1 = int_0^1 cos(beta t) arctan((t + alpha)/kappa) dt, closed form."""
    jk = 1j * kappa
    s0, c0 = si_ci(beta * (alpha + jk))
    s1, c1 = si_ci(beta * (alpha + 1 + jk))
    w = beta * (alpha + jk)
    v = cmath.sin(w) * (c0 - c1) - cmath.cos(w) * (s0 - s1)
    return math.sin(beta) / beta * math.atan((1 + alpha) / kappa) + v.imag / beta


def i2(beta, kappa, alpha):
    """I2 = int_0^1 kappa cos(beta t) / (kappa^2 + (t + alpha)^2) dt, closed form."""
    jk = 1j * kappa
    s0, c0 = si_ci(beta * (alpha + jk))
    s1, c1 = si_ci(beta * (alpha + 1 + jk))
    w = beta * (alpha + jk)
    v = cmath.sin(w) * (s0 - s1) + cmath.cos(w) * (c0 - c1)
    return v.imag


def i4(q, beta, z1, z2):
    """I4 = int_0^1 [sin(q s + beta z1) Si(beta s + beta z2) + cos(q s + beta z1) Ci(beta s + beta z2)] ds.

    Needs q != 0, beta != q and Im z2 != 0 so that no Si/Ci argument sits on
    the branch cut or at the origin.
    """
    if q == 0:
        raise ValueError("i4 is singular at q = 0; the diagonal needs the q -> 0 limit")
    if not beta > 0:
        raise ValueError("i4 needs beta > 0")
    z1 = complex(z1)
    z2 = complex(z2)
    a = beta * z1
    d = beta - q
    sp, cp = si_ci(beta * (1 + z2))
    sb, cb = si_ci(beta * z2)
    sd1, cd1 = si_ci(d * (1 + z2))
    sd0, cd0 = si_ci(d * z2)
    az = a - q * z2
    num = (
        cmath.sin(a + q) * cp
        - cmath.cos(a + q) * sp
        - cmath.sin(a) * cb
        + cmath.cos(a) * sb
        + cmath.cos(az) * (sd1 - sd0)
        - cmath.sin(az) * (cd1 - cd0)
    )
    return num / q


def i3(beta, kappa, gamma):
    """I3 = int_0^1 [I2(beta, kappa, -s) + I2(beta, kappa, s)] cos(gamma s) ds, via four I4."""
    jk = 1j * kappa
    tot = 0j
    for q in (beta + gamma, beta - gamma):
        tot += i4(q, beta, jk, 1 + jk) + i4(q, beta, -jk, -1 - jk)
    return -0.5 * tot.imag


# --- matrix assembly ---------------------------------------------------------


def _tri(n):
    return n * (n + 1) // 2


@dataclass(frozen=True)
class KernelMatrix:
    """Symmetric coefficient matrix, lower triangle stored row by row."""

    kappa: float
    trunc: int
    packed: np.ndarray = field(repr=False)
    guard_product: float = 0.0

    @property
    def size(self):
        return self.trunc + 1

    def __getitem__(self, idx):
        m, n = idx
        if m < n:
            m, n = n, m
        if n < 0 or m > self.trunc:
            raise IndexError(idx)
        return float(self.packed[_tri(m) + n])

    def dense(self):
        size = self.size
        out = np.empty((size, size))
        rows, cols = np.tril_indices(size)
        out[rows, cols] = self.packed
        out[cols, rows] = self.packed
        return out

    def leading(self, trunc):
        """The top-left (trunc+1) block, as a matrix of its own."""
        trunc = int(trunc)
        if not 0 <= trunc <= self.trunc:
            raise ValueError(f"leading block {trunc} outside 0..{self.trunc}")
        return KernelMatrix(self.kappa, trunc, self.packed[: _tri(trunc + 1)], trunc * PI * self.kappa)

    def dump(self, path):
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(DUMP_MAGIC, DUMP_VERSION, 0, self.kappa, self.trunc))
            fh.write(np.ascontiguousarray(self.packed, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            head = fh.read(_HEADER.size)
            if len(head) != _HEADER.size:
                raise ValueError(f"{path}: truncated header")
            magic, version, _, kappa, trunc = _HEADER.unpack(head)
            if magic != DUMP_MAGIC:
                raise ValueError(f"{path}: not a kernel dump")
            if version != DUMP_VERSION:
                raise ValueError(f"{path}: unsupported dump version {version}")
            count = _tri(trunc + 1)
            packed = np.frombuffer(fh.read(), dtype="<f8").astype(float)
        if packed.size != count:
            raise ValueError(f"{path}: expected {count} entries, found {packed.size}")
        return cls(float(kappa), int(trunc), packed, trunc * PI * kappa)


def packed_entries(cache, trunc):
    """Row-major lower triangle of K_mn, 0 <= n <= m <= trunc, with no guard or bound checks."""
    packed = np.empty(_tri(trunc + 1))
    packed[0] = k00(cache.kappa)
    if trunc > 0:
        idx = np.arange(1, trunc + 1)
        col0 = _k0n_values(cache, idx)
        for n in range(1, trunc + 1):
            start = _tri(n)
            packed[start] = col0[n - 1]
            packed[start + 1 : start + n + 1] = _row(cache, n, idx[:n])
    return packed


def check_guard(kappa, trunc):
    """Return N*pi*kappa, raising :class:`PrecisionGuardError` above GUARD_LIMIT.

    Warns (:class:`PrecisionGuardWarning`) above GUARD_WARN.  The closed forms
    subtract products of two terms each of size exp(n pi kappa), so about
    2 N pi kappa / ln 10 digits cancel in the largest entries.
    """
    kappa = _check_kappa(kappa)
    trunc = int(trunc)
    if trunc < 0:
        raise ValueError("truncation must be >= 0")
    guard = trunc * PI * kappa
    if guard > GUARD_LIMIT:
        raise PrecisionGuardError(
            f"N*pi*kappa = {guard:.4g} exceeds the precision guard {GUARD_LIMIT:g}"
            f" (kappa={kappa!r}, N={trunc}); the closed forms lose their digits to cancellation"
        )
    if guard > GUARD_WARN:
        warnings.warn(
            f"N*pi*kappa = {guard:.4g} > {GUARD_WARN:g}: expect about {2 * guard / math.log(10):.0f}"
            " digits of cancellation in the largest entries",
            PrecisionGuardWarning,
            stacklevel=3,
        )
    return guard


def assemble(kappa, trunc, cache=None):
    """Assemble K_mn for 0 <= m, n <= trunc.

    The precision guard of :func:`check_guard` applies; entries that still
    come out non-finite or above 2 K_00 raise :class:`PrecisionGuardError`
    as well.
    """
    kappa = _check_kappa(kappa)
    trunc = int(trunc)
    guard = check_guard(kappa, trunc)
    if cache is None:
        try:
            cache = SpecfunCache.build(kappa, trunc)
        except AccuracyRegionError as err:
            raise PrecisionGuardError(f"kappa={kappa!r}, N={trunc}: {err}") from err
    cache.check(kappa, trunc)
    packed = packed_entries(cache, trunc)
    k_00 = packed[0]
    bad = ~np.isfinite(packed) | (np.abs(packed) > 2.0 * k_00 * (1 + 1e-12))
    if bad.any():
        raise PrecisionGuardError(
            f"{int(bad.sum())} entries violate |K_mn| <= 2 K_00 at kappa={kappa!r}, N={trunc}"
        )
    return KernelMatrix(kappa, trunc, packed, guard)
