import numpy as np
import pytest

from qcoalg.automata import Dfa
from qcoalg.markov import MarkovChain
from qcoalg.convdist import Distribution

ACCEPTANCE_RESULTS: list[tuple[str, bool]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def example_dfa():
    """Four-state automaton over {a, b} accepting from x0 and x3."""
    return Dfa(
        ("x0", "x1", "x2", "x3"),
        ("a", "b"),
        {
            "x0": {"a": "x0", "b": "x1"},
            "x1": {"a": "x3", "b": "x2"},
            "x2": {"a": "x2", "b": "x2"},
            "x3": {"a": "x2", "b": "x1"},
        },
        frozenset({"x0", "x3"}),
        "x0",
    )


@pytest.fixture
def square_chain():
    """Random walk on the square graph x0 - x1 - x3 - x2 - x0."""
    half = lambda x, y: Distribution({x: 0.5, y: 0.5})  # noqa: E731
    return MarkovChain(
        ("x0", "x1", "x2", "x3"),
        {"x0": half("x1", "x2"), "x1": half("x0", "x3"), "x2": half("x0", "x3"), "x3": half("x1", "x2")},
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.module.__name__ == "test_acceptance" and (rep.when == "call" or rep.failed):
        title = (item.function.__doc__ or item.name).strip().splitlines()[0]
        ACCEPTANCE_RESULTS.append((title, rep.passed))


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for title, ok in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {title}")
