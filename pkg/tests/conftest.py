import json
from pathlib import Path

import numpy as np
import pytest

from peakshave.core import ProblemInstance

FIXTURES = Path(__file__).parent / "fixtures"
CONFIGS = Path(__file__).parent.parent / "configs"


@pytest.fixture(scope="session")
def derived():
    return json.loads((FIXTURES / "derived.json").read_text())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_instance(rng, T_max=12):
    T = int(rng.integers(1, T_max + 1))
    d_lb = float(rng.uniform(0, 100))
    d_ub = d_lb + float(rng.uniform(1, 200))
    c = float(rng.uniform(0.5, T * d_ub * 0.6))
    delta_max = float(rng.uniform(1, 1.3 * d_ub))
    return ProblemInstance(T, c, delta_max, d_lb, d_ub)


def random_profile(rng, inst):
    return rng.uniform(inst.d_lb, inst.d_ub, inst.T)


def instance_from(d):
    return ProblemInstance(**d)


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
