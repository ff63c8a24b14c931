"""Shared fixtures and field generators for the test suite."""

import numpy as np
import pytest

from mns2d import fields as F


def random_scalar(grid, rng, band_limit=False):
    """Random physical scalar field; optionally truncated to the dealias band."""
    f = F.ScalarField.from_samples(grid, rng.standard_normal((grid.n, grid.n)))
    if band_limit:
        f = F.to_physical(F.dealias(F.to_spectral(f)))
    return f


def random_vector(grid, rng, band_limit=False, div_free=False):
    v = F.VectorField(grid, rng.standard_normal((3, grid.n, grid.n)), F.PHYSICAL)
    s = F.vec_to_spectral(v)
    if band_limit:
        s = F.vec_dealias(s)
    if div_free:
        s = F.leray_project(s)
    return s


@pytest.fixture
def grid16():
    return F.Grid(16, 2.0 * np.pi)


@pytest.fixture
def grid64():
    return F.Grid(64, 2.0 * np.pi)
