"""Integral functionals built from fields, slopes, and pair quotients.

The central comparison is between the weak quotient norm of a field and its
Sobolev-type seminorm built from the pointwise slope estimates: for nice
fields the two agree up to a bounded factor, and the decade-floor tail of
the quotient spectrum recovers the seminorm up to a constant near one.
:func:`bvsy_equivalence` packages that comparison; :func:`gagliardo`
computes the strong (non-weak) double-sum energy in either the metric
normalisation |df|^p1 / (rho^(s1 p1) V) or the classical euclidean kernel
|df|^p1 / |x-y|^(n + s1 p1).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._parallel import block_ranges, map_blocks, neumaier_sum
from .fields import LipEstimate, lip_field
from .mmspace import DistanceIndex, MetricMeasureSpace
from .weaknorm import (
    EngineParams,
    WeakNormResult,
    pair_block_arrays,
    pair_quotients,
    weak_norm,
)

__all__ = [
    "CriticalSetReport",
    "EquivalenceReport",
    "bvsy_equivalence",
    "critical_set_fraction",
    "critical_set_sweep",
    "gagliardo",
    "sobolev_seminorm",
]


def sobolev_seminorm(space: MetricMeasureSpace, lip, p: float) -> float:
    """sum_x lip(x)^p w(x): the p-th-power slope mass, reported without root.

    Keeping the p-th power makes the value directly comparable to the weak
    quotient supremum, which is also a p-th-power quantity; roots are taken
    only where an inequality statement demands them.
    """
    if p < 1.0:
        raise ValueError("p must be >= 1")
    lip_values = np.asarray(getattr(lip, "values", lip), dtype=np.float64)
    if lip_values.shape[0] != space.n:
        raise ValueError("slope array must match the space size")
    return float(np.sum(np.longdouble(lip_values) ** p * np.longdouble(space.weights)))


@dataclass
class EquivalenceReport:
    """Weak quotient supremum vs. slope seminorm for one field.

    Both sides are p-th-power quantities: ``bvsy`` is sup lam^p W(lam) of
    the s=1, r=p quotient spectrum and ``sobolev_value`` is the slope mass
    sum lip^p w, so ``ratio = bvsy / sobolev_value`` is the dimensionless
    equivalence constant.  ``tail_constant`` is the decade-floor tail value
    divided by the seminorm: the measured constant of the
    tail-recovers-seminorm statement.  ``degenerate`` marks fields with zero
    slope mass, for which the ratio is undefined (NaN).
    """

    weak: WeakNormResult
    bvsy: float
    sobolev_value: float
    p: float
    ratio: float
    tail_constant: float
    field_name: str = ""
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {
            "p": self.p,
            "bvsy": self.bvsy,
            "sobolev": self.sobolev_value,
            "ratio": self.ratio,
            "tail_constant": self.tail_constant,
            "field": self.field_name,
            "degenerate": self.degenerate,
            "weak": self.weak.as_dict(),
        }


def bvsy_equivalence(space: MetricMeasureSpace, field, p: float = 1.0, *,
                     index: DistanceIndex | None = None,
                     engine: EngineParams | None = None,
                     lip: LipEstimate | np.ndarray | None = None,
                     schedule=None, estimator: str = "ratio") -> EquivalenceReport:
    """Compare sup lam^p W(lam) of q = |df| / (rho V^(1/p)) with sum lip^p w.

    Both sides scale by |c|^p under f -> c f, so the ratio is invariant.
    When ``lip`` is omitted the slope field is estimated with
    :func:`metriclab.fields.lip_field` under its default schedule.
    """
    index = index or DistanceIndex(space)
    if lip is None:
        lip = lip_field(space, field, schedule=schedule, estimator=estimator,
                        index=index)
    spectrum = pair_quotients(space, field, s=1.0, r=p, index=index, engine=engine)
    weak = weak_norm(spectrum, p)
    sob = sobolev_seminorm(space, lip, p)
    degenerate = sob == 0.0
    ratio = np.nan if degenerate else weak.value / sob
    tail_c = np.nan
    if not degenerate and weak.tail is not None:
        tail_c = weak.tail.floor_value / sob
    return EquivalenceReport(weak, weak.value, sob, float(p), float(ratio),
                             float(tail_c), getattr(field, "name", ""), degenerate)


def gagliardo(space: MetricMeasureSpace, field, s1: float, p1: float,
              variant: str = "metric", *, index: DistanceIndex | None = None,
              engine: EngineParams | None = None) -> float:
    """Double-sum Gagliardo energy, reported as the p1-th power (no root).

    variant "metric":    sum_{i != j} |df|^p1 / (rho^(s1 p1) V) w_i w_j
    variant "euclidean": sum_{i != j} |df|^p1 / |x-y|^(n + s1 p1) w_i w_j
                         (euclidean spaces only; n is the ambient dimension)
    """
    if not (0.0 < s1 < 1.0) or p1 < 1.0:
        raise ValueError("require s1 in (0, 1) and p1 >= 1")
    if variant not in ("metric", "euclidean"):
        raise ValueError(f"unknown variant {variant!r}")
    if variant == "euclidean" and space.kind != "euclidean":
        raise ValueError("euclidean variant requires a euclidean space")
    engine = engine or EngineParams()
    index = index or DistanceIndex(space)
    values = np.asarray(getattr(field, "values", field), dtype=np.float64)
    if values.shape[0] != space.n:
        raise ValueError("field must match the space size")
    exponent = s1 * p1 if variant == "metric" else space.dim + s1 * p1

    def one_block(block) -> float:
        lo, hi = block
        d, vol, adf, ww = pair_block_arrays(space, index, values, lo, hi)
        kernel = d ** exponent
        if variant == "metric":
            kernel = kernel * vol
        return float(np.sum(np.longdouble(adf ** p1) / kernel * ww))

    blocks = block_ranges(space.n, engine.block_size)
    parts = map_blocks(one_block, blocks, engine.workers)
    return neumaier_sum(parts)


def critical_set_fraction(space: MetricMeasureSpace, field,
                          lip: LipEstimate | np.ndarray, center: int,
                          radius: float, delta: float) -> float:
    """Mass fraction of a ball where the field moves at least 1/8 of its slope.

    Counts the weight of points y in B(center, radius) with
    |f(y) - f(center)| >= lip(center) * rho(center, y) / 8, divided by the
    ball mass.  Returns NaN when lip(center) <= 4 * delta: below that noise
    floor the slope is indistinguishable from quantisation error and the
    fraction is meaningless.
    """
    if radius <= 0.0:
        raise ValueError("radius must be positive")
    if delta < 0.0:
        raise ValueError("delta must be non-negative")
    values = np.asarray(getattr(field, "values", field), dtype=np.float64)
    lip_values = np.asarray(getattr(lip, "values", lip), dtype=np.float64)
    slope = float(lip_values[center])
    if slope <= 4.0 * delta:
        return float("nan")
    row = space.distance_row(int(center))
    inside = row < radius
    moved = np.abs(values - values[center]) >= slope * row / 8.0
    mass = float(np.sum(space.weights[inside]))
    return float(np.sum(space.weights[inside & moved]) / mass)


@dataclass
class CriticalSetReport:
    """Critical-set mass fractions over centers and a descending-r sweep.

    ``fractions[c, k]`` is the fraction at ``centers[c]`` and ``radii[k]``
    (radii ascending).  ``r_delta[c]`` is the largest tested radius below
    which every fraction stays >= ``c0`` (0.0 when even the smallest tested
    radius fails).  Centers whose slope is at or below the noise floor
    4*delta are excluded up front and counted in ``n_skipped``.
    """

    centers: np.ndarray
    radii: np.ndarray
    fractions: np.ndarray
    r_delta: np.ndarray
    delta: float
    c0: float
    n_skipped: int

    def as_dict(self) -> dict:
        return {
            "delta": self.delta,
            "c0": self.c0,
            "n_skipped": self.n_skipped,
            "radii": [float(r) for r in self.radii],
            "centers": [int(c) for c in self.centers],
            "r_delta": [float(r) for r in self.r_delta],
            "min_fraction": float(self.fractions.min()) if self.fractions.size else float("nan"),
        }


def critical_set_sweep(space: MetricMeasureSpace, field,
                       lip: LipEstimate | np.ndarray, delta: float, radii,
                       centers=None, c0: float = 0.05,
                       block_size: int = 256) -> CriticalSetReport:
    """Fractions for every qualifying center across an ascending radius list."""
    values = np.asarray(getattr(field, "values", field), dtype=np.float64)
    lip_values = np.asarray(getattr(lip, "values", lip), dtype=np.float64)
    radii = np.sort(np.asarray(radii, dtype=np.float64))
    if radii.size == 0 or radii[0] <= 0.0:
        raise ValueError("radii must be positive")
    if centers is None:
        centers = np.arange(space.n)
    centers = np.asarray(centers, dtype=np.intp)
    keep = lip_values[centers] > 4.0 * delta
    n_skipped = int(centers.size - np.sum(keep))
    centers = centers[keep]
    fracs = np.empty((centers.size, radii.size))
    w = space.weights
    for lo in range(0, centers.size, block_size):
        sel = centers[lo:lo + block_size]
        rows = space.distance_rows(sel)
        moved = (np.abs(values[None, :] - values[sel, None])
                 >= lip_values[sel, None] * rows / 8.0)
        for k, r in enumerate(radii):
            inside = rows < r
            mass = inside @ w
            fracs[lo:lo + sel.size, k] = ((inside & moved) @ w) / mass
    ok = fracs >= c0
    leading = np.where(ok.all(axis=1), radii.size,
                       np.argmin(ok, axis=1))
    r_delta = np.where(leading > 0, radii[np.maximum(leading - 1, 0)], 0.0)
    return CriticalSetReport(centers, radii, fracs, r_delta, float(delta),
                             float(c0), n_skipped)
