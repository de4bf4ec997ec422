import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from earkit.synthetic import make_dataset  # noqa: E402

_CRITERIA: list[tuple[str, str, str]] = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def synthetic_root(tmp_path_factory):
    return make_dataset(tmp_path_factory.mktemp("synthetic") / "data", n_subjects=10, per_subject=10, seed=7)


@pytest.fixture
def criterion():
    """Record one acceptance line; call with (name, passed, detail)."""

    def record(name: str, passed: bool, detail: str = "") -> None:
        _CRITERIA.append(("PASS" if passed else "FAIL", name, detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {name} {detail}")

    return record


def record_skip(name: str, reason: str) -> None:
    _CRITERIA.append(("SKIP", name, reason))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for status, name, detail in _CRITERIA:
        terminalreporter.write_line(f"[{status}] {name}  {detail}".rstrip())
