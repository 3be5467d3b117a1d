import math
import warnings

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from lovecap.extrapolation import (
    ChainError,
    DegenerateFitError,
    FitError,
    HeuristicStep,
    SeedWarning,
    fit_truncations,
    heuristic_step,
    power_law_fit,
    run_chain,
)
from lovecap.solver import TruncationSolver

# the chain ladder runs at N pi kappa = 12.6, above the warning level
pytestmark = pytest.mark.filterwarnings("ignore::lovecap.kernel.PrecisionGuardWarning")


def synth(c, alpha, beta, kappa, truncs):
    return [(n, c - beta * (n * kappa) ** (-alpha)) for n in truncs]


def fit_at(solver, n):
    return power_law_fit(solver.kappa, [(m, solver.f0(m)) for m in fit_truncations(n)])


@pytest.mark.parametrize(
    "n,expected", [(100, (100, 50, 33)), (101, (101, 51, 34)), (5, (5, 3, 2)), (300, (300, 150, 100))]
)
def test_fit_truncations(n, expected):
    assert fit_truncations(n) == expected


def test_roundtrip_exact_model():
    fit = power_law_fit(0.01, synth(100.0, 2.0, 0.01, 0.01, (90, 45, 30)))
    assert fit.c_hat == pytest.approx(100.0, rel=1e-9)
    assert fit.alpha == pytest.approx(2.0, rel=1e-9)
    assert fit.beta == pytest.approx(0.01, rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(1.0, 1e4),
    st.floats(0.3, 6.0),
    st.floats(1e-4, 1.0),
    st.sampled_from([0.001, 0.01, 0.1]),
    st.integers(12, 3000),
)
def test_fit_interpolates_inputs(c, alpha, beta, kappa, n):
    # physical regime: the truncation error is a fraction of the capacitance
    assume(beta * (fit_truncations(n)[2] * kappa) ** (-alpha) < 0.5 * c)
    pts = synth(c, alpha, beta, kappa, fit_truncations(n))
    try:
        fit = power_law_fit(kappa, pts)
    except DegenerateFitError:
        # increments below double resolution of c
        assert len({f for _, f in pts}) < 3
        return
    assert fit.max_residual() <= 1e-9 * fit.c_hat
    assert fit.c_hat >= max(f for _, f in pts)


def test_inputs_sorted_largest_first():
    fit = power_law_fit(0.01, synth(10.0, 2.0, 0.01, 0.01, (30, 90, 45)))
    assert [n for n, _ in fit.inputs] == [90, 45, 30]
    assert fit.trunc == 90
    assert fit.extrapolation == pytest.approx(fit.c_hat - fit.f0)


def test_degenerate():
    with pytest.raises(DegenerateFitError):
        power_law_fit(0.01, [(90, 1.0), (45, 1.0), (30, 0.5)])
    with pytest.raises(DegenerateFitError):
        power_law_fit(0.01, [(90, 1.0), (45, 1.1), (30, 0.5)])


def test_bad_sample_sets():
    with pytest.raises(FitError):
        power_law_fit(0.01, [(90, 2.0), (45, 1.0)])
    with pytest.raises(FitError):
        power_law_fit(0.01, [(90, 3.0), (90, 2.0), (30, 1.0)])


def test_unbracketed():
    # N, N/2, N/3 allow an increment ratio of at most ln 2 / ln 1.5 (alpha -> 0)
    with pytest.raises(FitError, match="bracket"):
        power_law_fit(0.01, [(90, 10.0), (45, 5.0), (30, 4.0)])


def test_unit_nk_fit_block(solver_001_300):
    fit = fit_at(solver_001_300, 100)
    assert abs(fit.c_hat - 80.4363) <= 1e-3
    assert abs(fit.alpha - 2.358) <= 0.02
    assert abs(fit.beta - 5.15e-3) <= 2e-4


def test_c_hat_decreases_with_fit_n(solver_001_300):
    # N kappa = 0.2, 1, 3
    chat = [fit_at(solver_001_300, n).c_hat for n in (20, 100, 300)]
    assert chat[0] > chat[1] > chat[2]


def test_alpha_stable_across_kappa(chain_solvers):
    # N kappa = 1 at kappa = 0.01, 0.005, 0.002
    alphas = [fit_at(chain_solvers[0.01], 100).alpha, fit_at(chain_solvers[0.005], 200).alpha]
    alphas.append(fit_at(TruncationSolver.assemble(0.002, 500), 500).alpha)
    assert all(2.35 <= a <= 2.40 for a in alphas), alphas


def test_extrapolated_exceeds_raw(solver_001_300):
    for n in (30, 100, 200, 300):
        fit = fit_at(solver_001_300, n)
        assert fit.c_hat >= fit.f0 and fit.beta > 0 and fit.alpha > 0


class Table:
    """Stand-in solver: f0 looked up from a dict."""

    def __init__(self, values):
        self.values = values
        self.calls = []

    def f0(self, n):
        self.calls.append(n)
        return self.values[n]


def test_identity_step_exact():
    prev = HeuristicStep(0.01, 300, 80.43440206, 80.43450899)
    step = heuristic_step(prev, Table({300: 80.43440206}), 0.01, 300, 80.43440206)
    assert step.c_tilde == prev.c_tilde
    assert step.n_prev == 300


def test_fractional_transfer_interpolates():
    prev = HeuristicStep(0.02, 200, 41.0, 41.5)
    tab = Table({150: 40.0, 151: 40.25})
    step = heuristic_step(prev, tab, 0.01, 301, 80.0)
    assert step.n_prev == 150.5
    assert sorted(tab.calls) == [150, 151]
    assert step.f0_prev_at_n == 40.125
    assert step.c_tilde == 41.5 + (80.0 - 40.125)
    assert step.delta_c == pytest.approx(0.1 * (step.c_tilde - 80.0))
    assert step.h == pytest.approx(80.0 - step.c_tilde)


def test_integer_transfer_single_solve():
    tab = Table({100: 1.0})
    heuristic_step(HeuristicStep(0.02, 200, 2.0, 2.5), tab, 0.01, 200, 3.0)
    assert tab.calls == [100]


def test_transfer_beyond_previous_truncation():
    with pytest.raises(ValueError, match="exceeds"):
        heuristic_step(HeuristicStep(0.02, 100, 2.0, 2.5), Table({}), 0.01, 400, 3.0)


def test_step_identity_holds_as_computed(chain_solvers):
    s02 = chain_solvers[0.02]
    seed = fit_at(s02, 200)
    chain = run_chain([0.02, 0.01], 400, seed)
    step = chain.final
    assert step.c_tilde == chain.steps[0].c_tilde + (step.f0 - step.f0_prev_at_n)
    assert step.f0_prev_at_n == s02.f0(200)


def test_chain_two_steps(chain_solvers):
    seed = fit_at(chain_solvers[0.02], 200)
    chain = run_chain([0.02, 0.01], 400, seed)
    assert abs(chain.final.c_tilde - 80.4363) <= 2e-3


def test_chain_three_steps_against_fit(chain_solvers):
    seed = fit_at(chain_solvers[0.02], 200)
    chain = run_chain([0.02, 0.01, 0.005], 400, seed)
    ref = fit_at(chain_solvers[0.005], 600).c_hat
    assert abs(chain.final.c_tilde - ref) <= 5e-3
    assert abs(ref - 159.1436) <= 5e-3
    assert [s.kappa for s in chain.steps] == [0.02, 0.01, 0.005]
    assert all(s.delta_c == pytest.approx(0.1 * (s.c_tilde - s.f0)) for s in chain.steps[1:])


def test_chain_h_consistency(chain_solvers):
    # h(N kappa) = f0(N) - C~ read off at N kappa = 1, away from the transfer point N kappa = 4
    seed = fit_at(chain_solvers[0.02], 200)
    chain = run_chain([0.02, 0.01, 0.005], 400, seed)
    hs = [chain_solvers[s.kappa].f0(round(1 / s.kappa)) - s.c_tilde for s in chain.steps]
    for a, b in zip(hs, hs[1:]):
        assert abs(a - b) < 0.1 * abs(b), hs


def test_chain_single_element(solver_01_30):
    seed = fit_at(solver_01_30, 30)
    chain = run_chain([0.1], 100, seed)
    assert len(chain.steps) == 1 and chain.final.c_tilde == seed.c_hat


def test_chain_rejects_bad_ladders(solver_01_30):
    seed = fit_at(solver_01_30, 30)
    with pytest.raises(ValueError):
        run_chain([0.05, 0.02], 10, seed)
    with pytest.raises(ValueError):
        run_chain([0.1, 0.1], 10, seed)
    with pytest.raises(ValueError):
        run_chain([0.1, 0.05, 0.02], [10], seed)
    with pytest.raises(ValueError):
        run_chain([], 10, seed)


def test_chain_seed_warning():
    solver = TruncationSolver.assemble(0.01, 60)
    seed = fit_at(solver, 60)
    with pytest.warns(SeedWarning):
        chain = run_chain([0.01], 60, seed)
    assert chain.notes and "third" in chain.notes[0]


def test_chain_error_keeps_prefix(solver_01_30):
    seed = fit_at(solver_01_30, 30)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(ChainError) as exc:
            # last step: n = 0.02/0.05 * 120 = 48 > 40
            run_chain([0.1, 0.05, 0.02], [40, 120], seed)
    assert [s.kappa for s in exc.value.chain.steps] == [0.1, 0.05]
    assert "exceeds" in str(exc.value)
