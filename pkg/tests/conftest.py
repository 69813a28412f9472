from pathlib import Path

import numpy as np
import pytest

from blochcert import Poly, quartic

DATA = Path(__file__).parent / "data"


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def quartic_plus():
    """z + z^3/3 + (4.66922/4) z^4."""
    return quartic(4.66922)


@pytest.fixture
def quartic_minus():
    """z - z^3/3 - (4.66922/4) z^4."""
    return quartic(4.66922, sign=-1)


@pytest.fixture
def identity_poly():
    return Poly.from_real([0.0, 1.0])


def random_poly(rng, degree, center=0j, scale=1.0):
    """Coefficients uniform in the unit bidisk (times ``scale``)."""
    re = rng.uniform(-1, 1, degree + 1)
    im = rng.uniform(-1, 1, degree + 1)
    c = (re + 1j * im) * scale
    c[-1] = c[-1] if c[-1] != 0 else 1.0
    return Poly(c, center)


def random_normalized(rng, degree, scale=0.5):
    c = np.zeros(degree + 1, dtype=complex)
    c[1] = 1.0
    k = np.arange(2, degree + 1)
    c[2:] = scale * (rng.uniform(-1, 1, k.size) + 1j * rng.uniform(-1, 1, k.size)) / k
    return Poly(c)


ACCEPTANCE_LINES: list[str] = []


def record(n, ok, detail=""):
    """Log one pass/fail line for an acceptance criterion, then assert it."""
    line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
