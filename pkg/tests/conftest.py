import sys

import pytest
from hypothesis import settings

from qsp.scalars import root_order_ctx

settings.register_profile("exact", max_examples=40, deadline=None)
settings.load_profile("exact")


@pytest.fixture
def D4():
    with root_order_ctx(4):
        yield 4


@pytest.fixture
def D6():
    with root_order_ctx(6):
        yield 6


@pytest.fixture
def D12():
    with root_order_ctx(12):
        yield 12


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.pytest_terminal_lines():
        terminalreporter.write_line(line)
