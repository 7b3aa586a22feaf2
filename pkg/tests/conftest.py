"""Shared fixtures: small reference spaces reused across the test modules.

The two ``equivalence_*`` fixtures run the expensive refinement studies once
per session; the per-module example tests and the acceptance battery both
read from them.  Only scalars are retained so the large spectra are freed
as soon as each size finishes.
"""

import gc
import time

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from metriclab import (
    DistanceIndex,
    MetricMeasureSpace,
    bvsy_equivalence,
    gallery_make,
    lip_field,
    random_cloud,
    uniform_grid_1d,
    uniform_grid_2d,
)

GALLERY = ("tent", "bump", "sine")

settings.register_profile(
    "lab",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("lab")


@pytest.fixture(scope="session")
def line3():
    """Three unit-weight points at 0, 1, 2 on the line."""
    return MetricMeasureSpace.euclidean([[0.0], [1.0], [2.0]], [1.0, 1.0, 1.0])


@pytest.fixture(scope="session")
def grid1k():
    """Uniform midpoint grid on [-1, 1] with N=1024 Lebesgue weights."""
    return uniform_grid_1d(1024)


@pytest.fixture(scope="session")
def grid1k_index(grid1k):
    return DistanceIndex(grid1k)


@pytest.fixture(scope="session")
def unit_grid():
    """Uniform midpoint grid on [0, 1] with N=1024, total mass 1."""
    return uniform_grid_1d(1024, bounds=(0.0, 1.0))


@pytest.fixture(scope="session")
def cloud2d():
    """Reproducible 2-D random cloud with equal weights."""
    return random_cloud(200, 2, seed=7)


@pytest.fixture(scope="session")
def cloud2d_index(cloud2d):
    return DistanceIndex(cloud2d)


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(20240801))


def _equivalence_study(spaces, dim):
    """ratio/bvsy/sobolev/tail scalars for every (size, gallery kind, p)."""
    records = {}
    start = time.time()
    for size, space in spaces:
        index = DistanceIndex(space)
        for kind in GALLERY:
            field = gallery_make(space, kind, center=[0.0] * dim)
            lip = lip_field(space, field, index=index)
            for p in (1.0, 2.0):
                report = bvsy_equivalence(space, field, p, index=index, lip=lip)
                records[(size, kind, p)] = {
                    "ratio": report.ratio,
                    "bvsy": report.bvsy,
                    "sobolev": report.sobolev_value,
                    "floor_value": report.weak.tail.floor_value,
                    "floor_lambda": report.weak.tail.floor_lambda,
                    "max_value": report.weak.tail.max_value,
                    "mode": report.weak.mode,
                }
        del index
        gc.collect()
    records["elapsed"] = time.time() - start
    return records


@pytest.fixture(scope="session")
def equivalence_1d():
    """Gallery refinement study on [-1, 1], N = 4096 and 8192."""
    spaces = [(n, uniform_grid_1d(n)) for n in (4096, 8192)]
    return _equivalence_study(spaces, dim=1)


@pytest.fixture(scope="session")
def equivalence_2d():
    """Gallery refinement study on [-1.5, 1.5]^2, 64^2 and 96^2 points.

    The domain makes the grid spacing (3/64 and 1/32) exactly representable,
    so the equal nearest-neighbor distances of the ideal lattice stay exactly
    equal in floating point and the strict-ball volumes V(x, y) match the
    real-arithmetic grid.
    """
    bounds = ((-1.5, 1.5), (-1.5, 1.5))
    spaces = [(n, uniform_grid_2d(n, bounds=bounds)) for n in (64, 96)]
    return _equivalence_study(spaces, dim=2)
