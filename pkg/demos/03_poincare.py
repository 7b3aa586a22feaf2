"""Poincare constants on balls: the exact battery and a derived value.

Two estimators live in the poincare module.  The first, c1_battery_check,
verifies an averaging identity that must hold with constant exactly 1 on
every (field, ball, exponent) triple -- a correctness gate, not a study.
The second, poincare_constant, measures the smallest constant C2 with

    avg_B |f - avg_B f|^q  <=  C2 * r(B) * avg_{tau B} lip^p

over a family of balls.  For f(x) = x on the ball B(0.5, 0.25) inside
[0, 1] both sides are classical integrals and C2 = 0.5 exactly in the
continuum; the discrete estimate lands within a percent of it.
"""

import numpy as np

from metriclab import (
    Ball,
    BallFamily,
    DistanceIndex,
    ScalarField,
    c1_battery_check,
    gallery_make,
    lip_field,
    poincare_constant,
    uniform_grid_1d,
)

# -- the exact battery -------------------------------------------------------
space = uniform_grid_1d(1024)
index = DistanceIndex(space)
family = BallFamily.default(space, index)
for q in (1.0, 2.0):
    dev = c1_battery_check(space, family, q)
    print(f"battery deviation at q={q:.0f}: {dev:.2e} (exact at C1 = 1)")

# -- the derived half-ball constant ------------------------------------------
unit = uniform_grid_1d(4096, bounds=(0.0, 1.0))
unit_index = DistanceIndex(unit)
center = int(np.argmin(np.abs(unit.points[:, 0] - 0.5)))
f = ScalarField(unit.points[:, 0].copy())
lip = lip_field(unit, f, index=unit_index)
ball = BallFamily([Ball(center, 0.25)], tau=1.0)
report = poincare_constant(unit, f, lip, ball, 1.0, 1.0)
print(f"\nf(x) = x on B(0.5, 0.25): C2_hat = {report.c2_hat:.5f} "
      f"(continuum value 0.5)")

# -- refinement stability ------------------------------------------------------
print("\nC2_hat for the quartic bump across refinements:")
for n in (512, 1024, 2048):
    s = uniform_grid_1d(n)
    idx = DistanceIndex(s)
    fam = BallFamily.default(s, idx)
    g = gallery_make(s, "bump", center=[0.0])
    c2 = poincare_constant(s, g, lip_field(s, g, index=idx), fam, 1.0, 1.0).c2_hat
    print(f"  N={n:5d}: {c2:.5f}")
