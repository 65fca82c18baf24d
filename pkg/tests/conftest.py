import sys
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

_CRITERIA: list[tuple[str, bool, float, str]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record an acceptance criterion outcome and its wall time.

    Usage::

        with criterion("C1 oracle equivalence", budget_s=10) as note:
            ...
            note("max gap 0")
    """

    @contextmanager
    def _criterion(name: str, budget_s: float):
        details: list[str] = []
        start = time.perf_counter()
        ok = False
        try:
            yield details.append
            elapsed = time.perf_counter() - start
            assert elapsed < budget_s, f"{name}: took {elapsed:.2f}s, budget {budget_s}s"
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            _CRITERIA.append((name, ok, elapsed, "; ".join(details)))

    return _criterion


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok, elapsed, detail in _CRITERIA:
        status = "PASS" if ok else "FAIL"
        line = f"[{status}] {name} ({elapsed:.2f}s)"
        if detail:
            line += f": {detail}"
        terminalreporter.write_line(line)
