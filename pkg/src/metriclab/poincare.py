"""Empirical two-sided Poincare inequality diagnostics on ball families.

For each ball B = B(x, r) in a family, with the ball average as the
representative value l_B(f), the modules computes

    lhs      = [ avg_B |f - l_B(f)|^q ]^(1/q)
    rhs_core = r * [ avg_{tau B} (lip f)^p ]^(1/p)

and reports the worst ratio lhs / rhs_core over the retained balls as the
empirical constant C2.  Using the ball average makes the first functional
axiom exact with constant 1 (|l_B(phi)| <= q-mean of |phi| is the power-mean
inequality); :func:`c1_battery_check` verifies it on a battery of bounded
fields.  Balls whose tau-dilate leaves the sampled domain are flagged as
boundary balls: they stay in the report table but are excluded from the
constant, since their dilate is clipped by the data window rather than the
geometry.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .fields import LipEstimate
from .mmspace import DistanceIndex, MetricMeasureSpace

__all__ = [
    "Ball",
    "BallFamily",
    "BallReport",
    "PoincareReport",
    "ball_average",
    "c1_battery_check",
    "poincare_constant",
]


@dataclass
class Ball:
    center: int
    radius: float
    boundary: bool = False


@dataclass
class BallFamily:
    """Centers and radii over which the Poincare ratios are evaluated."""

    balls: list
    tau: float = 1.0
    meta: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        if not (self.tau >= 1.0):
            raise ValueError("tau must be >= 1 (the dilate contains the ball)")

    def __len__(self) -> int:
        return len(self.balls)

    @classmethod
    def default(cls, space: MetricMeasureSpace, index: DistanceIndex | None = None,
                stride: int = 8, fractions=(0.1, 0.2, 0.3), tau: float = 1.0,
                min_points: int = 8) -> "BallFamily":
        """Every stride-th point, radii = fractions of the estimated diameter.

        Balls with fewer than ``min_points`` sample points are dropped;
        boundary flags mark balls whose tau-dilate pokes out of the data
        bounding box (euclidean spaces; closed manifolds have no boundary).
        """
        index = index or DistanceIndex(space)
        centers = np.arange(0, space.n, max(1, int(stride)))
        diameter = 0.0
        for c in centers:
            sorted_d, _ = index.row(int(c))
            diameter = max(diameter, float(sorted_d[-1]))
        box = space.bounding_box()
        balls = []
        for c in centers:
            sorted_d, _ = index.row(int(c))
            for frac in fractions:
                r = float(frac) * diameter
                if int(np.searchsorted(sorted_d, r, side="left")) < min_points:
                    continue
                boundary = False
                if box is not None:
                    pt = space.points[int(c)]
                    boundary = bool(np.any(pt - tau * r < box[0])
                                    or np.any(pt + tau * r > box[1]))
                balls.append(Ball(int(c), r, boundary))
        return cls(balls, float(tau),
                   {"stride": int(stride), "fractions": [float(f) for f in fractions],
                    "diameter_estimate": diameter, "min_points": int(min_points)})


def ball_average(space: MetricMeasureSpace, values, center: int, radius: float,
                 index: DistanceIndex | None = None) -> float:
    """Weighted mean of a field over the open ball B(center, radius)."""
    values = np.asarray(getattr(values, "values", values), dtype=np.float64)
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    row = space.distance_row(int(center))
    inside = row < radius
    mass = float(np.sum(space.weights[inside]))
    return float(np.sum(values[inside] * space.weights[inside]) / mass)


def c1_battery_check(space: MetricMeasureSpace, family: BallFamily, q: float,
                     test_fields=None) -> float:
    """Worst violation of |l_B(phi)| <= [avg_B |phi|^q]^(1/q) over a battery.

    Returns max(|l_B(phi)| - q-mean) over balls and battery fields; values
    at rounding level (<= ~1e-12 * field scale) mean the axiom holds with
    constant 1.  Also checks l_B(1) == 1 exactly up to rounding.
    """
    if test_fields is None:
        test_fields = [np.ones(space.n)]
        if space.kind != "graph":
            for a in range(space.dim):
                test_fields.append(space.points[:, a].copy())
                test_fields.append(np.sin(space.points[:, a]))
        test_fields.append(np.linspace(-1.0, 1.0, space.n))
    worst = -np.inf
    ones = np.ones(space.n)
    for ball in family.balls:
        row = space.distance_row(ball.center)
        inside = row < ball.radius
        w = space.weights[inside]
        mass = float(np.sum(w))
        worst = max(worst, abs(float(np.sum(ones[inside] * w) / mass) - 1.0))
        for phi in test_fields:
            phi = np.asarray(phi, dtype=np.float64)
            l_b = float(np.sum(phi[inside] * w) / mass)
            qmean = float(np.sum(np.abs(phi[inside]) ** q * w) / mass) ** (1.0 / q)
            worst = max(worst, abs(l_b) - qmean)
    return float(worst)


@dataclass
class BallReport:
    center: int
    radius: float
    boundary: bool
    n_points: int
    mass: float
    lhs: float
    rhs_core: float
    ratio: float
    degenerate: bool


@dataclass
class PoincareReport:
    """Per-ball table plus the retained-ball constant."""

    c2_hat: float
    q: float
    p: float
    tau: float
    balls: list
    n_boundary: int
    n_degenerate: int
    field_name: str = ""

    def as_dict(self) -> dict:
        return {
            "c2_hat": self.c2_hat,
            "q": self.q,
            "p": self.p,
            "tau": self.tau,
            "n_balls": len(self.balls),
            "n_boundary": self.n_boundary,
            "n_degenerate": self.n_degenerate,
            "field": self.field_name,
            "balls": [
                {
                    "center": b.center, "radius": b.radius, "boundary": b.boundary,
                    "n_points": b.n_points, "mass": b.mass, "lhs": b.lhs,
                    "rhs_core": b.rhs_core, "ratio": b.ratio, "degenerate": b.degenerate,
                }
                for b in self.balls
            ],
        }


def poincare_constant(space: MetricMeasureSpace, field, lip: LipEstimate | np.ndarray,
                      family: BallFamily, q: float, p: float) -> PoincareReport:
    """Empirical Poincare constant of one field over a ball family.

    Boundary-flagged and degenerate balls (zero oscillation and zero slope
    mass) are excluded from the constant but kept in the table.
    """
    if not (q >= 1.0 and p >= 1.0):
        raise ValueError("exponents q and p must be >= 1")
    values = np.asarray(getattr(field, "values", field), dtype=np.float64)
    lip_values = np.asarray(getattr(lip, "values", lip), dtype=np.float64)
    if values.shape[0] != space.n or lip_values.shape[0] != space.n:
        raise ValueError("field and slope arrays must match the space size")
    tau = family.tau
    reports = []
    best = np.nan
    n_boundary = n_degenerate = 0
    for ball in family.balls:
        row = space.distance_row(ball.center)
        inside = row < ball.radius
        w = space.weights[inside]
        mass = float(np.sum(w))
        l_b = float(np.sum(values[inside] * w) / mass)
        lhs = float(np.sum(np.abs(values[inside] - l_b) ** q * w) / mass) ** (1.0 / q)
        dil = row < tau * ball.radius
        w_t = space.weights[dil]
        mass_t = float(np.sum(w_t))
        pmean = float(np.sum(lip_values[dil] ** p * w_t) / mass_t) ** (1.0 / p)
        rhs_core = ball.radius * pmean
        degenerate = rhs_core == 0.0
        ratio = np.nan if degenerate else lhs / rhs_core
        if degenerate and lhs > 0.0:
            ratio = np.inf                   # oscillation with no detected slope
            degenerate = False
        reports.append(BallReport(ball.center, ball.radius, ball.boundary,
                                  int(np.sum(inside)), mass, lhs, rhs_core,
                                  float(ratio), degenerate))
        if ball.boundary:
            n_boundary += 1
        elif degenerate:
            n_degenerate += 1
        else:
            best = ratio if np.isnan(best) else max(best, ratio)
    if np.isnan(best):
        best = 0.0                           # nothing retained: max over the empty set
    name = getattr(field, "name", "")
    return PoincareReport(float(best), float(q), float(p), float(tau), reports,
                          n_boundary, n_degenerate, name)
