"""Shared fixtures and the acceptance-summary reporting hook."""

import numpy as np
import pytest

from pkmsens import MachineParams

# Criterion results recorded by tests/test_acceptance.py, keyed by
# criterion id ("01".."09", "10a".."10e").
_ACCEPTANCE: dict[str, tuple[bool, str]] = {}


@pytest.fixture(scope="session")
def params():
    return MachineParams()


@pytest.fixture(scope="session")
def q1(params):
    return np.array(params.cube_min)


@pytest.fixture(scope="session")
def q2(params):
    return np.array(params.cube_max)


@pytest.fixture
def acceptance():
    """Record one acceptance-criterion verdict, then enforce it."""

    def record(criterion: str, ok: bool, detail: str):
        _ACCEPTANCE[criterion] = (bool(ok), detail)
        line = f"acceptance criterion {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    write = terminalreporter.write_line
    terminalreporter.section("acceptance criteria")
    for num in [f"{k:02d}" for k in range(1, 10)]:
        if num in _ACCEPTANCE:
            ok, detail = _ACCEPTANCE[num]
            write(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    subs = sorted(k for k in _ACCEPTANCE if k.startswith("10"))
    if subs:
        ok_all = all(_ACCEPTANCE[k][0] for k in subs)
        parts = ", ".join(
            f"{k[2:]} {'PASS' if _ACCEPTANCE[k][0] else 'FAIL'}" for k in subs
        )
        write(f"criterion 10: {'PASS' if ok_all else 'FAIL'} ({parts})")
