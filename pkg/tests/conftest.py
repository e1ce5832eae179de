import numpy as np
import pytest
from hypothesis import HealthCheck, settings

import premt.nmt.decode as nmt_decode

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


# -- attention normalization guard --------------------------------------------
#
# Every attention distribution computed while decoding anywhere in the suite
# is checked here; the acceptance test reads the tally.

ATTENTION_LOG = {"rows": 0, "max_dev": 0.0}
_original_attend = nmt_decode.attend_batch


def _checked_attend(p, query, annotations, proj, src_mask):
    ctx, w, cache = _original_attend(p, query, annotations, proj, src_mask)
    dev = float(np.max(np.abs(w.sum(axis=1) - 1.0)))
    ATTENTION_LOG["rows"] += w.shape[0]
    ATTENTION_LOG["max_dev"] = max(ATTENTION_LOG["max_dev"], dev)
    assert dev <= 1e-6, f"attention row sums off by {dev}"
    return ctx, w, cache


nmt_decode.attend_batch = _checked_attend


# -- acceptance summary ----------------------------------------------------------

ACCEPTANCE = {}


def record(criterion: int, name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE[criterion] = (name, passed, detail)
    print(f"[criterion {criterion}] {'PASS' if passed else 'FAIL'} {name}: {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        name, passed, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d} {'PASS' if passed else 'FAIL'}  {name}: {detail}")


def pytest_configure(config):
    config.addinivalue_line("markers", "run_last: run after every other test (reads suite-wide tallies)")


def pytest_collection_modifyitems(items):
    items.sort(key=lambda item: item.get_closest_marker("run_last") is not None)
