import math
import struct
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lovecap import kernel
from lovecap.kernel import (
    CacheMismatchError,
    KernelMatrix,
    PrecisionGuardError,
    PrecisionGuardWarning,
    SpecfunCache,
    assemble,
    check_guard,
    i4,
    k00,
    k0n,
    kernel_entry,
    kmn,
)
from lovecap.oracle import i_integrand_quadrature, kernel_entry_quadrature
from lovecap.specfun import si_ci


def test_k00_small_gap_limit():
    d = 1.0 - k00(1e-9)
    assert 0 < d < 1e-7


def test_k00_against_quadrature():
    assert abs(k00(0.01) - kernel_entry_quadrature(0.01, 0, 0, tol=1e-12)) <= 1e-10


def test_k00_wide_gap():
    assert k00(1000.0) == pytest.approx(2 / (math.pi * 1000), rel=1e-2)


@pytest.mark.parametrize("kappa", [0.0, -0.1, math.nan, math.inf])
def test_bad_kappa(kappa):
    with pytest.raises(ValueError):
        k00(kappa)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-8, 1e3))
def test_k00_in_unit_interval(kappa):
    assert 0 < k00(kappa) < 1


@pytest.mark.parametrize("kappa,n", [(0.1, 1), (0.01, 5)])
def test_k0n_against_quadrature(kappa, n):
    assert abs(k0n(kappa, n) - kernel_entry_quadrature(kappa, 0, n, tol=1e-11)) <= 1e-8


def test_k0n_bound():
    bound = 2 * k00(0.01)
    assert all(abs(k0n(0.01, n)) <= bound for n in range(1, 51))


def test_k0n_rejects_zero():
    with pytest.raises(ValueError):
        k0n(0.1, 0)


def test_i4_example_against_quadrature():
    p = dict(q=2 * math.pi, beta=math.pi, z1=0.3j, z2=1 + 0.3j)
    assert abs(i4(**p) - i_integrand_quadrature("I4", tol=1e-12, **p)) <= 1e-9


def test_i4_shifted_arguments():
    # z1 = z2: the phase of the trigonometric factor follows the Si/Ci argument
    rng = np.random.default_rng(3)
    for _ in range(3):
        z = complex(rng.uniform(-1, 1), rng.uniform(0.05, 0.3))
        p = dict(q=rng.uniform(1, 10), beta=rng.uniform(1, 10), z1=z, z2=z)
        assert abs(i4(**p) - i_integrand_quadrature("I4", tol=1e-12, **p)) <= 1e-9


@pytest.mark.parametrize("q,beta", [(0.0, 1.0), (1.0, 0.0), (1.0, -2.0)])
def test_i4_domain(q, beta):
    with pytest.raises(ValueError):
        i4(q, beta, 0.1j, 1 + 0.1j)


@pytest.mark.parametrize("kappa,m,n", [(0.1, 1, 2), (0.05, 3, 3), (0.1, 2, 5), (0.05, 4, 4)])
def test_kmn_against_quadrature(kappa, m, n):
    cache = SpecfunCache.build(kappa, max(m, n))
    assert abs(kmn(kappa, m, n, cache) - kernel_entry_quadrature(kappa, m, n, tol=1e-11)) <= 1e-8


@pytest.mark.parametrize("kappa,m,n", [(0.1, 1, 2), (0.02, 7, 30), (0.005, 11, 400)])
def test_kmn_from_four_i4_terms(kappa, m, n):
    # the off-diagonal entry rebuilt from the generic (uncached) I4 closed form
    b = n * math.pi
    jk = 1j * kappa
    tot = 0j
    for q in ((n + m) * math.pi, (n - m) * math.pi):
        tot += i4(q, b, jk, 1 + jk) + i4(q, b, -jk, -1 - jk)
    ref = -tot.imag / math.pi
    got = kmn(kappa, m, n, SpecfunCache.build(kappa, n))
    assert abs(got - ref) <= 1e-12 * abs(ref) + 1e-15


def test_kmn_symmetric_exact():
    cache = SpecfunCache.build(0.03, 40)
    for m, n in [(1, 40), (17, 3), (20, 21)]:
        assert kmn(0.03, m, n, cache) == kmn(0.03, n, m, cache)


def test_kmn_cache_mismatch():
    cache = SpecfunCache.build(0.1, 5)
    with pytest.raises(CacheMismatchError):
        kmn(0.2, 1, 2, cache)
    with pytest.raises(CacheMismatchError):
        kmn(0.1, 1, 6, cache)
    with pytest.raises(ValueError):
        kmn(0.1, 0, 2, cache)


def test_cache_entries_match_scalar_calls():
    kappa = 0.013
    cache = SpecfunCache.build(kappa, 25)
    for k in (1, 7, 25):
        z1 = k * math.pi * (1 + 1j * kappa)
        z2 = k * math.pi * (2 + 1j * kappa)
        z3 = 1j * k * math.pi * kappa
        assert (cache.si1[k], cache.ci1[k]) == si_ci(z1)
        assert (cache.si2[k], cache.ci2[k]) == si_ci(z2)
        assert (cache.si3[k], cache.ci3[k]) == si_ci(z3)
    assert len(cache.si1) == 26


def test_assemble_n0():
    m = assemble(0.01, 0)
    assert m.dense().shape == (1, 1)
    assert m[0, 0] == k00(0.01)


def test_assemble_against_quadrature():
    mat = assemble(0.1, 8)
    for m in range(9):
        for n in range(9):
            assert abs(mat[m, n] - kernel_entry_quadrature(0.1, m, n, tol=1e-11)) <= 1e-8, (m, n)


def test_cache_transparency():
    kappa, trunc = 0.02, 60
    mat = assemble(kappa, trunc)
    rng = np.random.default_rng(11)
    picks = [(0, 0), (0, 60), (60, 60), (1, 1)] + [tuple(rng.integers(0, trunc + 1, 2)) for _ in range(30)]
    for m, n in picks:
        a, b = mat[m, n], kernel_entry(kappa, m, n)
        assert abs(a - b) <= math.ulp(abs(b)), (m, n)


@pytest.mark.parametrize("kappa,trunc", [(0.01, 100), (0.05, 100), (0.1, 50), (0.002, 800)])
def test_matrix_invariants(kappa, trunc):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PrecisionGuardWarning)
        mat = assemble(kappa, trunc)
    d = mat.dense()
    assert np.array_equal(d, d.T)
    assert 0 < d[0, 0] < 1
    assert np.abs(d).max() <= 2 * d[0, 0]
    assert mat.guard_product == pytest.approx(trunc * math.pi * kappa)


def test_leading_block():
    mat = assemble(0.03, 40)
    sub = mat.leading(15)
    assert np.array_equal(sub.dense(), mat.dense()[:16, :16])
    with pytest.raises(ValueError):
        mat.leading(41)


def test_guard_passes_small_product():
    # kappa = 1e-5, N = 15000: N pi kappa ~ 0.47
    assert check_guard(1e-5, 15000) == pytest.approx(0.4712, abs=1e-4)


def test_guard_rejects():
    with pytest.raises(PrecisionGuardError, match=r"314\.2.*16"):
        assemble(1.0, 100)
    with pytest.raises(PrecisionGuardError):
        check_guard(0.1, 96)  # 30.2


def test_guard_warns():
    with pytest.warns(PrecisionGuardWarning):
        check_guard(0.01, 350)


def test_bound_check_backs_up_the_guard(monkeypatch):
    # with the guard switched off, garbage entries must still not come back silently
    monkeypatch.setattr(kernel, "GUARD_LIMIT", math.inf)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(PrecisionGuardError, match="accuracy region"):
            assemble(1.0, 100)
        # inside the Si/Ci region, but far past the cancellation limit
        with pytest.raises(PrecisionGuardError, match="violate"):
            assemble(0.1, 80)


def test_dump_roundtrip(tmp_path):
    mat = assemble(0.04, 30)
    path = tmp_path / "k.bin"
    mat.dump(path)
    back = KernelMatrix.load(path)
    assert back.kappa == mat.kappa and back.trunc == mat.trunc
    assert np.array_equal(back.packed, mat.packed)
    raw = path.read_bytes()
    magic, version, _, kappa, trunc = struct.unpack_from("<8sIIdq", raw)
    assert (magic, version, kappa, trunc) == (b"LOVEKERN", 1, 0.04, 30)
    # lower triangle, row-major: entry (2, 1) is the 5th value
    assert struct.unpack_from("<d", raw, 32 + 4 * 8)[0] == mat[2, 1]


def test_dump_rejects_damage(tmp_path):
    path = tmp_path / "k.bin"
    assemble(0.04, 5).dump(path)
    raw = path.read_bytes()
    for bad in (raw[:10], b"XXXXXXXX" + raw[8:], raw[:-8]):
        path.write_bytes(bad)
        with pytest.raises(ValueError):
            KernelMatrix.load(path)
