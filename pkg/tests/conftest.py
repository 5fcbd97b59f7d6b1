import sys

import numpy as np
import pytest

from moment2d.moments import AtomicMeasure


def random_measure(rng, n_atoms, low=-3.0, high=3.0):
    """Atoms uniform in the square, weights uniform in (0, 1] normalized to mass 1."""
    pts = rng.uniform(low, high, size=(n_atoms, 2))
    wts = 1.0 - rng.uniform(0.0, 1.0, size=n_atoms)
    return AtomicMeasure(pts, wts / wts.sum())


@pytest.fixture
def two_atom():
    return AtomicMeasure.from_atoms([(1.0, 0.0, 0.5), (-1.0, 0.0, 0.5)])


@pytest.fixture
def delta_origin():
    return AtomicMeasure.from_atoms([(0.0, 0.0, 1.0)])


@pytest.fixture
def delta_one():
    return AtomicMeasure.from_atoms([(1.0, 0.0, 1.0)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    results = getattr(acceptance, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        terminalreporter.write_line(results[number])
