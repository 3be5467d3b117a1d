import warnings

import pytest

from lovecap.kernel import PrecisionGuardWarning
from lovecap.solver import TruncationSolver

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def solver_001_300():
    """kappa = 0.01, N = 300 (N pi kappa = 9.4)."""
    return TruncationSolver.assemble(0.01, 300)


@pytest.fixture(scope="session")
def solver_01_30():
    return TruncationSolver.assemble(0.1, 30)


@pytest.fixture(scope="session")
def chain_solvers():
    """Assemblies for the 0.02 -> 0.01 -> 0.005 ladder, each at its largest N."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", PrecisionGuardWarning)
        return {
            0.02: TruncationSolver.assemble(0.02, 200),
            0.01: TruncationSolver.assemble(0.01, 400),
            0.005: TruncationSolver.assemble(0.005, 600),
        }


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
