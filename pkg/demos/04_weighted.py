"""Weighted measures: Muckenhoupt constants and the weighted equivalence.

The power weight w(x) = |x|^alpha on [-1, 1] is the standard test family:
it belongs to A_p exactly when -1 < alpha < p - 1.  We estimate [w]_{A2}
over dyadic cube families, watch the estimate stabilize as generations are
added, confirm the unweighted case gives constant 1 to machine precision,
and check that alpha = 1 (the A_2 endpoint) trips the divergence flag.
Finally the weak-type machinery runs unchanged on the weighted space, and
its equivalence ratio is refinement-stable just like the Lebesgue case.
"""

from metriclab import (
    CubeFamily,
    WeightSpec,
    ap_constant,
    bvsy_equivalence,
    gallery_make,
    uniform_grid_1d,
    weighted_space,
)

# -- A_2 estimates for |x|^(1/2) ----------------------------------------------
w = WeightSpec("power", alpha=0.5)
print("[w]_{A2} for w = |x|^(1/2), dyadic generations 1..g:")
for g_max in (5, 6, 7):
    est = ap_constant(w, 2.0, CubeFamily([-1.0], [1.0], 1, g_max))
    print(f"  g={g_max}: {est.value:.5f} (diverged: {est.diverged})")

unit = ap_constant(WeightSpec("constant", value=1.0), 2.0,
                   CubeFamily([-1.0], [1.0], 1, 6))
print(f"\nunweighted sanity: [1]_{{A2}} = {unit.value!r}")

endpoint = ap_constant(WeightSpec("power", alpha=1.0), 2.0,
                       CubeFamily([-1.0], [1.0], 1, 7))
print(f"alpha = 1 at p = 2 (outside A_2): diverged = {endpoint.diverged}, "
      f"running max {endpoint.value:.2f}")

# -- the equivalence on the weighted space -------------------------------------
print("\nweighted equivalence ratio, w = |x|^(1/2), p = 2:")
for n in (1024, 2048):
    base = uniform_grid_1d(n)
    space = weighted_space(base.points, base.weights, w)
    field = gallery_make(space, "bump", center=[0.0])
    report = bvsy_equivalence(space, field, 2.0)
    print(f"  N={n:5d}: ratio = {report.ratio:.5f}")
