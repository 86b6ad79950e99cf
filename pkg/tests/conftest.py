import numpy as np
import pytest

from swapnet.states import random_density

_ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture
def acceptance_line():
    """Record one pass/fail line for the acceptance summary."""

    def record(name: str, ok: bool, detail: str = "") -> bool:
        _ACCEPTANCE.append((name, bool(ok), detail))
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, detail in _ACCEPTANCE:
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}  {detail}")


@pytest.fixture(scope="session")
def random_two_qubit_states():
    """1000 seeded two-qubit states cycling through ranks 1..4."""
    return [random_density(10_000 + i, 4, i % 4 + 1) for i in range(1000)]


@pytest.fixture(scope="session")
def random_qubit_pairs():
    return [(random_density(20_000 + i, 2, i % 2 + 1), random_density(30_000 + i, 2, (i // 2) % 2 + 1)) for i in range(1000)]


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
