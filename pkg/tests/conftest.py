import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss

from logcave import WeightedSample

GL_NODES, GL_WEIGHTS = leggauss(64)
T = 0.5 * (GL_NODES + 1.0)
WT = 0.5 * GL_WEIGHTS


def gl_moment(r, s, a=0, b=0):
    """64-point Gauss-Legendre value of int_0^1 (1-t)^a t^b exp((1-t) r + t s) dt."""
    return float(np.sum(WT * (1 - T) ** a * T ** b * np.exp((1 - T) * r + T * s)))


def random_sample(rng, n, weighted=True):
    pts = np.sort(rng.normal(size=n) * rng.uniform(0.5, 3.0))
    pts = np.unique(pts)
    w = rng.uniform(0.1, 1.0, size=pts.size) if weighted else np.ones(pts.size)
    return WeightedSample(pts, w / w.sum())


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
