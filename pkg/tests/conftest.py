"""Shared fixtures: the acceptance-criteria recorder and its summary hook.

Each acceptance test registers itself with a number and a title before doing
any work, so a crash still produces a FAIL line, then overwrites the entry
with a measured PASS/FAIL verdict.  The terminal summary prints exactly one
line per criterion.
"""

from __future__ import annotations

import pytest

_ACCEPTANCE_KEY = pytest.StashKey()


class AcceptanceRecorder:
    """Records one pass/fail line for a numbered acceptance criterion."""

    def __init__(self, registry: dict, number: int, title: str) -> None:
        self._registry = registry
        self.number = number
        self.title = title
        registry[number] = (title, "FAIL", "did not complete")

    def finish(self, ok: bool, detail: str) -> None:
        """Record the verdict; fail the surrounding test when ``ok`` is false."""
        status = "PASS" if ok else "FAIL"
        self._registry[self.number] = (self.title, status, detail)
        if not ok:
            pytest.fail(f"acceptance {self.number} ({self.title}): {detail}")


@pytest.fixture
def acceptance(request):
    """Factory fixture: ``acceptance(number, title)`` -> AcceptanceRecorder."""
    registry = request.config.stash.setdefault(_ACCEPTANCE_KEY, {})

    def _start(number: int, title: str) -> AcceptanceRecorder:
        return AcceptanceRecorder(registry, number, title)

    return _start


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    registry = config.stash.get(_ACCEPTANCE_KEY, None)
    if not registry:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(registry):
        title, status, detail = registry[number]
        terminalreporter.write_line(
            f"ACCEPTANCE {number} ({title}): {status} -- {detail}")
