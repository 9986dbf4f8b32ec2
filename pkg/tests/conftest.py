import mpmath as mp
import pytest

from sgue.precision import PrecisionContext


@pytest.fixture
def ctx():
    return PrecisionContext(512)


@pytest.fixture(autouse=True)
def _restore_mp_prec():
    prec = mp.mp.prec
    yield
    mp.mp.prec = prec


def rel(a, b):
    a, b = mp.mpmathify(a), mp.mpmathify(b)
    if b == 0:
        return abs(a)
    return abs(a - b) / abs(b)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
