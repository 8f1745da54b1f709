from __future__ import annotations

from pathlib import Path

import pytest

from gmac import ProtocolParams, Topology

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"

# filled by the acceptance suite, reported at the end of the run
ACCEPTANCE_LINES: list[str] = []


def make_params(n, tsn, g, r, lo=1, hi=None, active=None, slots=10, k0=29):
    hi = lo if hi is None else hi
    active = max(tsn) + 1 if active is None else active
    return ProtocolParams(n, slots, active, tuple(tsn), k0, g, r, (lo,) * n, (hi,) * n)


def clique(n, g, r, lo=1, hi=None):
    return make_params(n, range(n), g, r, lo, hi), Topology.clique(n)


def line(n, g, r, lo=1, hi=None, active=3):
    return make_params(n, [i % active for i in range(n)], g, r, lo, hi, active=active), Topology.line(n)


@pytest.fixture
def scenario_dir() -> Path:
    return SCENARIOS


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
