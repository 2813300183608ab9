import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from nonlocal_rd import build_basis, chafee_infante, find_all  # noqa: E402
from nonlocal_rd.problems import DiffusionModulator  # noqa: E402

GAMMA_STAR = math.sqrt(2.0 * math.pi / 3.0)
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def basis16():
    return build_basis(16)


@pytest.fixture(scope="session")
def ci2():
    return chafee_infante(2.0)


@pytest.fixture(scope="session")
def ci2_saturating():
    return chafee_infante(2.0, diffusion=DiffusionModulator("saturating", 1.0, 1.0))


@pytest.fixture(scope="session")
def eqs(basis16):
    """find_all results for lambda in {0.5, 2, 5} at n = 16."""
    return {lam: find_all(chafee_infante(lam), basis16) for lam in (0.5, 2.0, 5.0)}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
