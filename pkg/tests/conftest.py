import math

import numpy as np
import pytest

from octoport.circuit import CircuitParams


def scalar_coefficients(eta, eps, xi):
    """Closed forms written out one scalar at a time (independent oracle)."""
    h1, h2, h3, h4 = eta
    e1, e2, e3, e4 = eps
    x1, x2, x3, x4 = xi
    r1 = math.sqrt(h1 * h2 * h3 * (1 - h3))
    r2 = math.sqrt((1 - h1) * (1 - h2) * h4 * (1 - h4))
    k = {
        (1, 1): h1 * (h3 * e1 * x1 ** 2 + (1 - h3) * e3 * x3 ** 2),
        (2, 1): (1 - h1) * (h4 * e2 * x2 ** 2 + (1 - h4) * e4 * x4 ** 2),
        (1, 2): h2 * ((1 - h3) * e1 * x1 ** 2 + h3 * e3 * x3 ** 2),
        (2, 2): (1 - h2) * ((1 - h4) * e2 * x2 ** 2 + h4 * e4 * x4 ** 2),
        (1, 3): r1 * (e1 * x1 + e3 * x3),
        (2, 3): r2 * (e2 * x2 + e4 * x4),
    }
    d = {
        (1, 1): h1 * (h3 * e1 * x1 - (1 - h3) * e3 * x3),
        (2, 1): (1 - h1) * (h4 * e2 * x2 - (1 - h4) * e4 * x4),
        (1, 2): h2 * ((1 - h3) * e1 * x1 - h3 * e3 * x3),
        (2, 2): (1 - h2) * ((1 - h4) * e2 * x2 - h4 * e4 * x4),
        (1, 3): r1 * (e1 * x1 ** 2 - e3 * x3 ** 2),
        (2, 3): r2 * (e2 * x2 ** 2 - e4 * x4 ** 2),
    }
    return k, d


@pytest.fixture
def imbalanced():
    return CircuitParams(
        eta=(0.5, 0.5, 0.45, 0.5),
        eps=(0.9, 0.85, 0.8, 0.85),
        xi=(1.1, 1.0, 1.0, 1.0),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def criterion():
    """Record and print one PASS/FAIL line for an acceptance criterion."""

    def record(name: str, ok: bool, detail: str) -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
