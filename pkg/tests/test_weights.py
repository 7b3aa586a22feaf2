"""Muckenhoupt constants over dyadic cube families and weighted spaces."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from metriclab import (
    CubeFamily,
    WeightSpec,
    ap_constant,
    growth_check,
    uniform_grid_1d,
    weighted_space,
)


@pytest.fixture(scope="module")
def family6():
    return CubeFamily([-1.0], [1.0], 1, 6)


@pytest.fixture(scope="module")
def family7():
    return CubeFamily([-1.0], [1.0], 1, 7)


# ---------------------------------------------------------------- ap_constant


def test_constant_weight_gives_one(family6):
    for p in (1.0, 1.5, 2.0):
        est = ap_constant(WeightSpec(kind="constant", value=1.0), p, family6)
        assert est.value == pytest.approx(1.0, abs=1e-12)
        assert not est.diverged


def test_constant_weight_2d():
    family = CubeFamily([-1.0, -1.0], [1.0, 1.0], 1, 4)
    est = ap_constant(WeightSpec(kind="constant", value=2.5), 2.0, family)
    assert est.value == pytest.approx(1.0, abs=1e-12)


def test_sqrt_weight_stable_under_refinement(family6, family7):
    w = WeightSpec(kind="power", alpha=0.5)
    e6 = ap_constant(w, 2.0, family6)
    e7 = ap_constant(w, 2.0, family7)
    assert np.isfinite(e6.value) and not e6.diverged
    assert abs(e7.value - e6.value) / e6.value < 0.10


def test_linear_weight_divergence_flag(family7):
    est = ap_constant(WeightSpec(kind="power", alpha=1.0), 2.0, family7)
    assert est.diverged
    # the running max grows monotonically with each added generation
    values = [h[2] for h in est.history]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_ap_at_least_one(family6):
    for alpha in (0.25, 0.5, 0.75):
        for p in (1.5, 2.0, 3.0):
            est = ap_constant(WeightSpec(kind="power", alpha=alpha), p, family6)
            assert est.value >= 1.0 - 1e-12


def test_ap_p1_branch(family6):
    est = ap_constant(WeightSpec(kind="power", alpha=0.25), 1.0, family6)
    assert est.value >= 1.0 - 1e-12
    assert np.isfinite(est.value)


def test_family_monotone_fixed_grid():
    # on one fixed grid, adding generations can only raise the max
    grid = (np.arange(512) + 0.5) / 256.0 - 1.0
    w = WeightSpec(kind="power", alpha=0.5)
    values = []
    for g_max in (2, 3, 4, 5):
        family = CubeFamily([-1.0], [1.0], 1, g_max)
        values.append(ap_constant(w, 2.0, family, grid=grid[:, None]).value)
    assert all(b >= a - 1e-15 for a, b in zip(values, values[1:]))


def test_scale_invariance_exact_dyadic(family6):
    grid = ((np.arange(1024) + 0.5) / 512.0 - 1.0)[:, None]
    base_table = np.abs(grid[:, 0]) ** 0.5
    ref = ap_constant(WeightSpec(kind="tabulated", table=base_table), 2.0, family6, grid=grid)
    for c in (2.0, 0.25, 8.0):
        est = ap_constant(
            WeightSpec(kind="tabulated", table=c * base_table), 2.0, family6, grid=grid
        )
        assert est.value == ref.value


def test_scale_invariance_general(family6):
    grid = ((np.arange(1024) + 0.5) / 512.0 - 1.0)[:, None]
    base_table = np.abs(grid[:, 0]) ** 0.5
    ref = ap_constant(WeightSpec(kind="tabulated", table=base_table), 2.0, family6, grid=grid)
    est = ap_constant(
        WeightSpec(kind="tabulated", table=3.0 * base_table), 2.0, family6, grid=grid
    )
    assert est.value == pytest.approx(ref.value, rel=1e-12)


@given(st.floats(min_value=0.1, max_value=0.9), st.integers(min_value=2, max_value=8))
def test_scale_invariance_property(alpha, k):
    family = CubeFamily([-1.0], [1.0], 1, 3)
    grid = ((np.arange(256) + 0.5) / 128.0 - 1.0)[:, None]
    table = np.abs(grid[:, 0]) ** alpha
    ref = ap_constant(WeightSpec(kind="tabulated", table=table), 2.0, family, grid=grid)
    est = ap_constant(
        WeightSpec(kind="tabulated", table=float(2**k) * table), 2.0, family, grid=grid
    )
    assert est.value == ref.value


# ---------------------------------------------------------------- weighted_space


def test_weighted_space_unit_weight():
    base = uniform_grid_1d(256, bounds=(0.0, 1.0))
    space = weighted_space(base.points, base.weights, WeightSpec(kind="constant", value=1.0))
    assert np.allclose(space.weights, 1.0 / 256, rtol=1e-15)


def test_weighted_space_power_masses():
    base = uniform_grid_1d(1024)
    cell = 2.0 / 1024
    space = weighted_space(base.points, base.weights, WeightSpec(kind="power", alpha=0.5))
    expected = np.abs(base.points[:, 0]) ** 0.5 * cell
    assert np.allclose(space.weights, expected, rtol=1e-14)
    # integral of |x|^{1/2} over [-1,1] is 4/3
    assert space.total_weight == pytest.approx(4.0 / 3.0, rel=0.01)


def test_weighted_space_rejects_bad_weight():
    base = uniform_grid_1d(64, bounds=(0.0, 1.0))
    with pytest.raises(ValueError):
        weighted_space(base.points, base.weights, WeightSpec(kind="constant", value=0.0))


def test_tabulated_weight_alignment_enforced():
    base = uniform_grid_1d(64)
    with pytest.raises(ValueError):
        WeightSpec(kind="tabulated", table=np.ones(32)).evaluate(base.points)


# ---------------------------------------------------------------- growth_check


def test_growth_constant_weight_slack():
    w = WeightSpec(kind="constant", value=1.0)
    ap = ap_constant(w, 2.0, CubeFamily([-1.0], [1.0], 1, 4)).value
    report = growth_check(w, 2.0, anchor=[-0.1], side=0.2, lambdas=[2.0, 4.0], ap_value=ap)
    assert report["holds"]
    for row in report["table"]:
        lam = row["lam"]
        # mass ratio is lam^n, bound is ap * lam^{np}: slack = ap * lam^{n(p-1)}
        assert row["slack"] == pytest.approx(ap * lam ** (1 * (2.0 - 1.0)), rel=1e-9)


def test_growth_sqrt_weight_passes():
    w = WeightSpec(kind="power", alpha=0.5)
    ap = ap_constant(w, 2.0, CubeFamily([-1.0], [1.0], 1, 6)).value
    report = growth_check(w, 2.0, anchor=[0.5], side=0.5, lambdas=[2.0], ap_value=ap,
                          domain=([-4.0], [4.0]))
    assert report["holds"]
    assert report["worst_slack"] >= 1.0 - 1e-12


def test_growth_lambda_one_slack_is_ap():
    w = WeightSpec(kind="power", alpha=0.5)
    ap = ap_constant(w, 2.0, CubeFamily([-1.0], [1.0], 1, 6)).value
    report = growth_check(w, 2.0, anchor=[0.5], side=0.5, lambdas=[1.0], ap_value=ap)
    assert report["worst_slack"] == pytest.approx(ap, rel=1e-12)
    assert ap >= 1.0 - 1e-12


def test_growth_domain_exit_rejected():
    w = WeightSpec(kind="power", alpha=0.5)
    with pytest.raises(ValueError):
        growth_check(w, 2.0, anchor=[0.9], side=0.4, lambdas=[8.0], ap_value=1.5,
                     domain=([-1.0], [1.0]))


def test_growth_rejects_tabulated():
    w = WeightSpec(kind="tabulated", table=np.ones(16))
    with pytest.raises(ValueError):
        growth_check(w, 2.0, anchor=[0.0], side=0.5, lambdas=[2.0], ap_value=1.0)


def test_growth_rejects_lambda_below_one():
    w = WeightSpec(kind="constant", value=1.0)
    with pytest.raises(ValueError):
        growth_check(w, 2.0, anchor=[0.0], side=0.5, lambdas=[0.5], ap_value=1.0)
