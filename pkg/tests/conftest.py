import numpy as np
import pytest

from ivnnt.dgp import DgpConfig, solve_beta
from ivnnt.domain import validate


@pytest.fixture(scope="session")
def logit_cfg():
    return DgpConfig.reference("logit")


@pytest.fixture(scope="session")
def probit_cfg():
    return DgpConfig.reference("probit")


@pytest.fixture(scope="session")
def logit_truth(logit_cfg):
    return solve_beta(logit_cfg)


@pytest.fixture(scope="session")
def probit_truth(probit_cfg):
    return solve_beta(probit_cfg)


def make_cells(counts):
    """Dataset from a dict {(z, a, i): count}."""
    rows = [(z, a, i) for (z, a, i), c in sorted(counts.items()) for _ in range(c)]
    return validate(np.array(rows, dtype=float))


# -- acceptance reporting ------------------------------------------------------

ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    def _rec(number, passed, detail=""):
        ACCEPTANCE[number] = (bool(passed), detail)
    return _rec


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        tr.write_line(f"criterion {k:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
