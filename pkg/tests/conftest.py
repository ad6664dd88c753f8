"""Shared, cached trajectories; the purified runs dominate suite time."""

from functools import lru_cache

from cavity_entropy import dynamics


@lru_cache(maxsize=None)
def evolved(x: float, n_bar0: float, m: float, n_out: int = 201):
    params = dynamics.ModelParams.from_m(m, x, n_bar0)
    return dynamics.evolve(dynamics.initial_state(params), params, n_out=n_out)


@lru_cache(maxsize=None)
def purified(x: float, n_bar0: float, m: float, n_out: int = 201):
    params = dynamics.ModelParams.from_m(m, x, n_bar0)
    return dynamics.evolve_purified(params, n_out=n_out)


# one line per acceptance criterion, echoed in the terminal summary
ACCEPTANCE_LINES = []


def report(number, ok, detail):
    line = f"ACCEPTANCE {number:>2} {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
