"""Shared fixtures and the acceptance summary hook.

The heavyweight synthetic clouds are session-scoped: generation is
deterministic, so sharing them across test modules changes nothing
except wall time.
"""

import numpy as np
import pytest

import desing as ds

# Criterion label -> test node name substring. The terminal summary
# prints one PASS/FAIL line per entry after the run.
ACCEPTANCE = [
    ("A1 flat-patch soundness", "test_a1_"),
    ("A2 union completeness", "test_a2_"),
    ("A3 blowup regularization", "test_a3_"),
    ("A4 context discrimination", "test_a4_"),
    ("A5 exact invariants", "test_a5_"),
    ("A6 crossing-lines cone", "test_a6_"),
    ("A7 report determinism", "test_a7_"),
]


@pytest.fixture(scope="session")
def flat_cloud():
    """3000-sample flat 2-patch in R^10 with mild noise."""
    spec = ds.SynthSpec(
        kind="flatpatch", n=10, dims=(2,), samples=(3000,), sigma=0.01, seed=7
    )
    return ds.generate(spec)


@pytest.fixture(scope="session")
def union_cloud():
    """Noise-free line + 2-plane union through the origin in R^10."""
    spec = ds.SynthSpec(
        kind="union", n=10, dims=(1, 2), samples=(1500, 1500), sigma=0.0, seed=42
    )
    return ds.generate(spec)


@pytest.fixture(scope="session")
def crossing_cloud():
    """The xy=0 pair of axis lines, noise-free."""
    spec = ds.SynthSpec(
        kind="crossinglines", n=2, dims=(1, 1), samples=(400, 400), sigma=0.0, seed=6
    )
    return ds.generate(spec)


@pytest.fixture()
def rng():
    return np.random.default_rng(0)


def _status(terminalreporter, substring):
    for bucket, mark in (("failed", "FAIL"), ("error", "FAIL"), ("passed", "PASS")):
        for rep in terminalreporter.stats.get(bucket, []):
            if substring in rep.nodeid:
                return mark
    return "not run"


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = []
    for label, substring in ACCEPTANCE:
        mark = _status(terminalreporter, substring)
        if mark == "not run":
            continue
        lines.append(f"{label:.<40} {mark}")
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
