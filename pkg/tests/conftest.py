import json
import sys
from pathlib import Path

import pytest
from hypothesis import settings

sys.path.insert(0, str(Path(__file__).parent))

import chasecheck as cc  # noqa: E402

GOLDEN = Path(cc.__file__).parent / "data" / "golden"

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict = {}


def load_golden(name: str) -> cc.RuleSet:
    return cc.parse_rules((GOLDEN / f"{name}.rules").read_text(), f"{name}.rules")


@pytest.fixture
def golden():
    return load_golden


@pytest.fixture(scope="session")
def expected_matrix():
    return json.loads((GOLDEN / "expected.json").read_text())


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
