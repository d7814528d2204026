import numpy as np
import pytest

from gamepop.synthetic import SyntheticSpec, generate, to_model_data

# Collected by the hook below so the run ends with one visible
# pass/fail line per acceptance criterion.
_acceptance_outcomes: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _acceptance_outcomes.append((name, report.outcome.upper()))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_outcomes:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, outcome in _acceptance_outcomes:
        word = "PASS" if outcome == "PASSED" else "FAIL"
        terminalreporter.write_line(f"  {word}  {name}")


@pytest.fixture(scope="session")
def small_batch():
    """A 60-game synthetic batch shared by fast tests."""
    return generate(SyntheticSpec(n_games=60, n_genres=4, seed=5))


@pytest.fixture(scope="session")
def small_data(small_batch):
    return to_model_data(small_batch, target_month=2)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
