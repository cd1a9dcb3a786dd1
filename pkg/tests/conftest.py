import time

import pytest

_RESULTS: dict[int, tuple[bool, str]] = {}


class Criterion:
    """Records one acceptance line; the assertion happens in ``finish``."""

    def __init__(self, number: int, budget: float):
        self.number = number
        self.budget = budget
        self.checks: list[tuple[str, bool]] = []
        self.start = time.perf_counter()

    def check(self, label: str, ok) -> None:
        self.checks.append((label, bool(ok)))

    def finish(self) -> None:
        elapsed = time.perf_counter() - self.start
        self.check(f"time {elapsed:.1f}s <= {self.budget:.0f}s", elapsed <= self.budget)
        failed = [label for label, ok in self.checks if not ok]
        detail = "; ".join(failed) if failed else f"{len(self.checks)} checks, {elapsed:.1f}s"
        _RESULTS[self.number] = (not failed, detail)
        print(f"criterion {self.number:2d}: {'PASS' if not failed else 'FAIL'} ({detail})")
        assert not failed, f"criterion {self.number} failed: {detail}"


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_RESULTS):
        ok, detail = _RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'} ({detail})")
