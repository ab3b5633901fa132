import os
import time
from pathlib import Path

import pytest

from dp3.cache import CoeffCache
from dp3.coeffs import compute_cm

CACHE_M = 300

_criteria: dict[str, list] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(key, label): acceptance criterion carried by the test")
    config.addinivalue_line("markers", "slow: takes more than a few seconds")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    key, label = mark.args
    entry = _criteria.setdefault(key, [label, []])
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        entry[1].append("skipped" if rep.skipped else rep.outcome)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_criteria, key=lambda k: (int(k.split("-")[0]), k)):
        label, outcomes = _criteria[key]
        if not outcomes:
            status = "NOT RUN"
        elif all(o == "skipped" for o in outcomes):
            status = "SKIP"
        elif any(o == "failed" for o in outcomes):
            status = "FAIL"
        else:
            status = "PASS"
        terminalreporter.write_line(f"criterion {key:<10} {status:<8} {label}")


@pytest.fixture(scope="session")
def cache300() -> CoeffCache:
    """c_0..c_300 computed once per session."""
    return compute_cm(CACHE_M)


@pytest.fixture(scope="session")
def stretch_cache():
    """Cache reaching m = 800 plus the engine time spent here, only when DP3_STRETCH=1.

    DP3_STRETCH_CACHE may name an existing cache file; otherwise the file is
    built (and resumed) under DP3_CACHE_DIR or the default location.
    Returns (cache, first index computed in this session, seconds).
    """
    if os.environ.get("DP3_STRETCH") != "1":
        pytest.skip("stretch check disabled (set DP3_STRETCH=1)")
    from dp3.cache import default_cache_path

    path = Path(os.environ.get("DP3_STRETCH_CACHE") or default_cache_path())
    cache = CoeffCache.open(path)
    start = cache.max_m + 1
    t0 = time.perf_counter()
    compute_cm(800, cache, validate="tail")
    return cache, start, time.perf_counter() - t0
