from __future__ import annotations

import numpy as np

from twostage.graphical import EventSet


def hand_events(n_sites, params, horizon, events):
    """EventSet from a list of ``(time, kind, site, source)`` tuples, in the given order."""
    events = sorted(events, key=lambda e: e[0])
    return EventSet(horizon, params, n_sites,
                    np.array([e[0] for e in events], dtype=np.float64),
                    np.array([e[1] for e in events], dtype=np.int8),
                    np.array([e[2] for e in events], dtype=np.int64),
                    np.array([e[3] for e in events], dtype=np.int64))


ACCEPTANCE_LINES: list[str] = []


def report(number: int, ok: bool, detail: str) -> None:
    ACCEPTANCE_LINES.append(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
