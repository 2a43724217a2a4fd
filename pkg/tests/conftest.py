import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from setmap.mappings import DenseMapping, all_edges

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def table_mapping(N, ell, rule, a=0, k=2):
    """Dense mapping with f(e) = rule(e) for every host edge e (given as a sorted tuple)."""
    edges = all_edges(N, k)
    rows = [sorted(rule(tuple(int(v) for v in e))) for e in edges]
    return DenseMapping(N, k, ell, a, np.asarray(rows, dtype=np.int64).reshape(len(rows), ell))


def smallest_outside(N, ell=1):
    def rule(e):
        return [v for v in range(N) if v not in e][:ell]
    return table_mapping(N, ell, rule)


def with_overrides(N, ell, overrides, default, a=0):
    """Table mapping: overrides[e] where given, default(e) elsewhere."""
    canon = {tuple(sorted(e)): img for e, img in overrides.items()}
    return table_mapping(N, ell, lambda e: canon.get(e, default(e)), a=a)


# --- acceptance summary -------------------------------------------------

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def record_criterion():
    def record(name, passed, detail=""):
        line = f"{'PASS' if passed else 'FAIL'}  {name}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
