import numpy as np
import pytest

from mgmarl.envs import random_toy_game


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def toy_game(rng):
    return random_toy_game(rng, num_states=3, num_agents=2, num_actions=2, horizon=3)


ACCEPTANCE = {}


@pytest.fixture
def criterion(request):
    """Record ``(number, passed, detail)`` for the acceptance summary.

    Several records for one criterion (parametrised cases) are merged.
    """
    def record(number, passed, detail):
        ACCEPTANCE.setdefault(number, []).append((bool(passed), detail))
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE):
        passed = all(p for p, _ in ACCEPTANCE[number])
        detail = "; ".join(d for _, d in ACCEPTANCE[number])
        terminalreporter.write_line(f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}")
