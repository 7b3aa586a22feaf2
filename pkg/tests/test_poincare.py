"""Ball averages, the averaging-functional battery, and Poincare ratios."""

import numpy as np
import pytest

from metriclab import (
    Ball,
    BallFamily,
    DistanceIndex,
    ScalarField,
    WeightSpec,
    ball_average,
    c1_battery_check,
    gallery_make,
    lip_field,
    poincare_constant,
    uniform_grid_1d,
    weighted_space,
)


@pytest.fixture(scope="module")
def fine_grid():
    space = uniform_grid_1d(4096, bounds=(0.0, 1.0))
    return space, DistanceIndex(space)


# ---------------------------------------------------------------- ball_average


def test_average_of_constant(fine_grid):
    space, index = fine_grid
    assert ball_average(space, np.full(space.n, 5.0), 100, 0.2, index) == 5.0


def test_average_of_identity_by_symmetry(fine_grid):
    space, index = fine_grid
    center = int(np.argmin(np.abs(space.points[:, 0] - 0.5)))
    h = 1.0 / space.n
    avg = ball_average(space, space.points[:, 0].copy(), center, 0.25, index)
    assert abs(avg - 0.5) <= h


def test_average_weighted_by_2x(fine_grid):
    space, _ = fine_grid
    table = 2.0 * space.points[:, 0]
    weighted = weighted_space(
        space.points, np.full(space.n, 1.0 / space.n),
        WeightSpec(kind="tabulated", table=table),
    )
    avg = ball_average(weighted, weighted.points[:, 0].copy(), 0, 10.0)
    assert avg == pytest.approx(2.0 / 3.0, rel=0.02)


def test_average_rejects_bad_radius(fine_grid):
    space, index = fine_grid
    with pytest.raises(ValueError):
        ball_average(space, np.zeros(space.n), 0, 0.0, index)


# ---------------------------------------------------------------- C1 battery


@pytest.mark.parametrize("q", [1.0, 2.0])
def test_c1_battery_passes(q):
    space = uniform_grid_1d(256)
    family = BallFamily.default(space)
    assert c1_battery_check(space, family, q) <= 1e-12


def test_c1_battery_on_cloud(cloud2d):
    family = BallFamily.default(cloud2d)
    assert c1_battery_check(cloud2d, family, 2.0) <= 1e-12


# ---------------------------------------------------------------- poincare_constant


def test_constant_field_zero_constant():
    space = uniform_grid_1d(512)
    family = BallFamily.default(space)
    f = ScalarField(np.full(512, 2.0))
    report = poincare_constant(space, f, lip_field(space, f), family, 1.0, 1.0)
    assert report.c2_hat == 0.0
    assert all(b.lhs == 0.0 for b in report.balls)


def test_half_ball_ratio(fine_grid):
    space, index = fine_grid
    center = int(np.argmin(np.abs(space.points[:, 0] - 0.5)))
    f = ScalarField(space.points[:, 0].copy())
    lip = lip_field(space, f, index=index)
    family = BallFamily([Ball(center, 0.25)], tau=1.0)
    report = poincare_constant(space, f, lip, family, 1.0, 1.0)
    # avg |x - 0.5| over [0.25, 0.75] = 0.125; rhs = 0.25 * 1
    assert report.c2_hat == pytest.approx(0.5, rel=0.03)


def test_affine_map_leaves_ratios_unchanged():
    space = uniform_grid_1d(512)
    index = DistanceIndex(space)
    family = BallFamily.default(space, index)
    f = gallery_make(space, "sine", center=[0.0])
    lip = lip_field(space, f, index=index)
    base = poincare_constant(space, f, lip, family, 2.0, 1.0)
    g = ScalarField(2.0 * f.values + 7.0)
    lip_g = lip_field(space, g, index=index)
    moved = poincare_constant(space, g, lip_g, family, 2.0, 1.0)
    for a, b in zip(base.balls, moved.balls):
        if not (np.isnan(a.ratio) or np.isnan(b.ratio)):
            assert b.ratio == pytest.approx(a.ratio, rel=1e-12)
    assert moved.c2_hat == pytest.approx(base.c2_hat, rel=1e-12)


def test_enlarging_family_never_lowers_constant():
    space = uniform_grid_1d(512)
    index = DistanceIndex(space)
    f = gallery_make(space, "bump", center=[0.0])
    lip = lip_field(space, f, index=index)
    small = BallFamily.default(space, index, stride=32)
    large = BallFamily(small.balls + BallFamily.default(space, index, stride=8).balls)
    c_small = poincare_constant(space, f, lip, small, 1.0, 1.0).c2_hat
    c_large = poincare_constant(space, f, lip, large, 1.0, 1.0).c2_hat
    assert c_large >= c_small - 1e-15


def test_oscillation_monotone_in_q():
    space = uniform_grid_1d(512)
    index = DistanceIndex(space)
    family = BallFamily.default(space, index)
    f = gallery_make(space, "bump", center=[0.0])
    lip = lip_field(space, f, index=index)
    r1 = poincare_constant(space, f, lip, family, 1.0, 1.0)
    r2 = poincare_constant(space, f, lip, family, 2.0, 1.0)
    for a, b in zip(r1.balls, r2.balls):
        assert a.lhs <= b.lhs * (1 + 1e-12)


@pytest.mark.parametrize("kind", ["tent", "bump", "sine", "indicator-smooth"])
def test_constant_stable_across_sizes(kind):
    values = {}
    for n in (512, 1024, 2048):
        space = uniform_grid_1d(n)
        index = DistanceIndex(space)
        family = BallFamily.default(space, index)
        f = gallery_make(space, kind, center=[0.0])
        lip = lip_field(space, f, index=index)
        values[n] = poincare_constant(space, f, lip, family, 1.0, 1.0).c2_hat
    assert abs(values[1024] / values[512] - 1.0) < 0.10
    assert abs(values[2048] / values[1024] - 1.0) < 0.10


def test_exponent_validation():
    space = uniform_grid_1d(64)
    family = BallFamily.default(space)
    f = ScalarField(np.zeros(64))
    with pytest.raises(ValueError):
        poincare_constant(space, f, np.zeros(64), family, 0.5, 1.0)
    with pytest.raises(ValueError):
        BallFamily([], tau=0.5)
