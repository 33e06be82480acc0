import numpy as np
import pytest

from composopt.bench.registry import make_problem


@pytest.fixture(scope="session")
def capped_tanh():
    return make_problem("capped-tanh")


@pytest.fixture(scope="session")
def capped_tanh_1d():
    return make_problem("capped-tanh-1d")


@pytest.fixture(scope="session")
def l1_diff_tanh():
    return make_problem("l1-diff-tanh")


@pytest.fixture(scope="session")
def scalar_dc():
    return make_problem("scalar-dc")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE = pytest.StashKey[dict]()
N_CRITERIA = 10


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line for an acceptance criterion."""
    store = request.config.stash.setdefault(_ACCEPTANCE, {})

    def record(number, title, passed, detail=""):
        line = f"[{'PASS' if passed else 'FAIL'}] criterion {number:>2}: {title}"
        if detail:
            line += f"  ({detail})"
        store[number] = line
        print(line)

    return record


def pytest_terminal_summary(terminalreporter, config):
    store = config.stash.get(_ACCEPTANCE, None)
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        terminalreporter.write_line(store.get(n, f"[FAIL] criterion {n:>2}: not recorded (error or not run)"))
