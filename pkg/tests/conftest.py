from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parent.parent
SCENARIOS = ROOT / "scenarios"

# standard suite: every checked-in single-run scenario
SUITE = [
    "baseline_single.json",
    "symmetric_crossing.json",
    "ghost_regression_notify_off.json",
    "ghost_regression_notify_on.json",
    "segment_trip.json",
    "latency_fleet.json",
]

_RUN_CACHE = {}


@pytest.fixture(scope="session")
def scenarios_dir() -> Path:
    return SCENARIOS


@pytest.fixture(scope="session")
def run_cached():
    """One engine run per scenario file per test session."""
    from pseudosim import run_scenario

    def _run(name: str):
        if name not in _RUN_CACHE:
            _RUN_CACHE[name] = run_scenario(str(SCENARIOS / name))
        return _RUN_CACHE[name]

    return _run
