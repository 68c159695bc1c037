import functools

import pytest

from copchase.engine import GameSpec
from copchase.solver import solve

ACCEPTANCE_LINES: list[str] = []


@functools.lru_cache(maxsize=None)
def solved(n: int, cops: tuple[str, ...], robber: str = "foot"):
    return solve(GameSpec.from_names(n, cops, robber))


@pytest.fixture
def table_for():
    return lambda n, cops, robber="foot": solved(n, tuple(cops), robber)


@pytest.fixture
def record():
    """Log one acceptance line; printed again in the terminal summary."""

    def log(criterion: int, ok: bool, detail: str) -> None:
        line = f"criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)

    return log


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    monkeypatch.setenv("COPCHASE_CACHE", str(tmp_path / "cache"))


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
