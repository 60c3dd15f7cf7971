import pytest

from efkpp import EvansEnv, Grid, front, logistic, solve_kpp_front


@pytest.fixture(scope="session")
def logistic_term():
    return logistic()


@pytest.fixture(scope="session")
def kpp_front(logistic_term):
    return solve_kpp_front(logistic_term)


@pytest.fixture(scope="session")
def front_01(logistic_term):
    return front(logistic_term, 0.1)


@pytest.fixture(scope="session")
def evans_env_01(front_01, kpp_front):
    return EvansEnv(front_01, kpp_front)


@pytest.fixture(scope="session")
def small_grid():
    return Grid(-20.0, 30.0, 1001)


@pytest.fixture
def record(request):
    """Print and keep one acceptance line; the lines are repeated in the terminal summary."""
    lines = request.config.__dict__.setdefault("_acceptance_lines", [])

    def _record(label, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
        print(line)
        lines.append(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "_acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
