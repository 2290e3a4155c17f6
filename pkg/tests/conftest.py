import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=100, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=1000, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

TOY_ROWS = [
    ("A1", "B1", "C1"),
    ("A1", "B1", "C3"),
    ("A1", "B2", "C3"),
    ("A2", "B1", "C2"),
    ("A2", "B2", "C1"),
    ("A2", "B2", "C3"),
]


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def toy_table(tmp_path):
    """Six records over attributes A, B, C."""
    path = tmp_path / "toy.tsv"
    path.write_text("A\tB\tC\n" + "".join("\t".join(r) + "\n" for r in TOY_ROWS))
    return path


# acceptance gate: one line per criterion, collected as the tests run
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: (int(s[1:].split()[0].split("-")[0]), s)):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
