import os

import pytest
from hypothesis import settings

settings.register_profile("default", deadline=None, max_examples=60, derandomize=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture(scope="session")
def siso_optimum():
    """Optimizer output at n_r = 1, P = 1 (shared: the solve takes a few seconds)."""
    from ncrayleigh.discrete import optimize_discrete_input

    trace = []
    inp, res = optimize_discrete_input(1, 1.0, trace=trace)
    return inp, res, trace


@pytest.fixture(scope="session")
def siso_optimum_10db():
    from ncrayleigh.discrete import optimize_discrete_input

    inp, res = optimize_discrete_input(1, 10.0)
    return inp, res


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES = {}


@pytest.fixture
def record_criterion(request):
    def record(number, title, passed, elapsed, detail=""):
        status = "PASS" if passed else "FAIL"
        ACCEPTANCE_LINES[number] = f"[{status}] criterion {number:2d}: {title} ({elapsed:.2f} s){detail}"
    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
