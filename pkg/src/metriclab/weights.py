"""Muckenhoupt-type weight diagnostics on dyadic cube families.

The A_p characteristic of a weight w over a cube family F is

    sup_{Q in F} avg_Q(w) * [avg_Q(w^(1/(1-p)))]^(p-1)      (p > 1)
    sup_{Q in F} avg_Q(w) * max_Q(1/w)                      (p = 1)

with averages taken over the evaluation-grid points inside Q (midpoint
quadrature).  Families are dyadic generations over a box, each generation
present twice: anchored at the box corner and shifted by one third of the
side, so weights concentrated near cube faces cannot hide.

Membership divergence (w outside A_p) has no finite witness on a fixed
grid; its observable signature is that the family's running maximum keeps
growing as generations are added WITH the evaluation grid refined in step.
:func:`ap_constant` therefore runs that refinement study by default and
sets a divergence flag when the running max grew at a sustained rate
(at least +4% in each of the last two generation steps).  Convergent
weights settle geometrically and stay far below the rate; borderline
non-members keep gaining a constant increment per generation.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .mmspace import MetricMeasureSpace

__all__ = [
    "WeightSpec",
    "CubeFamily",
    "ApEstimate",
    "ap_constant",
    "weighted_space",
    "growth_check",
]


@dataclass(frozen=True)
class WeightSpec:
    """Pointwise weight: constant, power |x|^alpha, or a tabulated array.

    Tabulated weights are aligned with one specific grid and therefore
    cannot take part in grid-refinement studies.
    """

    kind: str = "constant"
    value: float = 1.0
    alpha: float = 0.0
    table: np.ndarray | None = None

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if self.kind == "constant":
            if not (self.value > 0.0):
                raise ValueError("constant weight must be positive")
            return np.full(pts.shape[0], float(self.value))
        if self.kind == "power":
            radial = np.linalg.norm(pts, axis=1)
            if self.alpha < 0.0 and np.any(radial == 0.0):
                raise ValueError("negative-power weight evaluated at the origin")
            return radial ** self.alpha
        if self.kind == "tabulated":
            table = np.asarray(self.table, dtype=np.float64)
            if table.shape[0] != pts.shape[0]:
                raise ValueError("tabulated weight is aligned to a different grid")
            if np.any(table <= 0.0):
                raise ValueError("tabulated weight must be positive")
            return table
        raise ValueError(f"unknown weight kind {self.kind!r}")

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "constant":
            out["value"] = float(self.value)
        if self.kind == "power":
            out["alpha"] = float(self.alpha)
        if self.kind == "tabulated":
            out["n"] = 0 if self.table is None else int(np.asarray(self.table).shape[0])
        return out


@dataclass
class CubeFamily:
    """Dyadic generations g_min..g_max over a box, plus third-shifted copies.

    Generation g tiles the box with 2^g cubes per axis (side = extent/2^g);
    the shifted copy moves every anchor by side/3 and keeps only cubes fully
    inside the box.
    """

    box_min: np.ndarray
    box_max: np.ndarray
    g_min: int
    g_max: int
    shifts: tuple = (0.0, 1.0 / 3.0)

    def __post_init__(self):
        self.box_min = np.atleast_1d(np.asarray(self.box_min, dtype=np.float64))
        self.box_max = np.atleast_1d(np.asarray(self.box_max, dtype=np.float64))
        if self.box_min.shape != self.box_max.shape or np.any(self.box_max <= self.box_min):
            raise ValueError("box_max must exceed box_min componentwise")
        if not (0 <= self.g_min <= self.g_max):
            raise ValueError("need 0 <= g_min <= g_max")

    @property
    def dim(self) -> int:
        return self.box_min.shape[0]

    def generations(self) -> range:
        return range(self.g_min, self.g_max + 1)

    def extended(self, extra: int = 1) -> "CubeFamily":
        """Same family with ``extra`` deeper generations added."""
        return CubeFamily(self.box_min.copy(), self.box_max.copy(),
                          self.g_min, self.g_max + int(extra), self.shifts)

    def n_cubes(self, g: int, shift: float) -> int:
        per_axis = 2 ** g - (1 if shift > 0.0 else 0)
        return max(per_axis, 0) ** self.dim


def _generation_products(points, w, sigma, family, g, shift, p, min_points):
    """Max A_p product over one generation's cubes; NaN when none qualify.

    Cube assignment is a floor division per axis, so one bincount pass
    evaluates the whole generation.
    """
    extent = family.box_max - family.box_min
    side = extent / 2 ** g
    per_axis = 2 ** g - (1 if shift > 0.0 else 0)
    if per_axis <= 0:
        return np.nan
    rel = (points - family.box_min[None, :]) / side[None, :] - shift
    idx = np.floor(rel).astype(np.int64)
    ok = np.all((idx >= 0) & (idx < per_axis), axis=1)
    if not np.any(ok):
        return np.nan
    flat = np.zeros(ok.sum(), dtype=np.int64)
    for a in range(family.dim):
        flat = flat * per_axis + idx[ok, a]
    ncub = per_axis ** family.dim
    counts = np.bincount(flat, minlength=ncub)
    w_sum = np.bincount(flat, weights=w[ok], minlength=ncub)
    good = counts >= min_points
    if not np.any(good):
        return np.nan
    w_avg = w_sum[good] / counts[good]
    if p == 1.0:
        inv_max = np.full(ncub, -np.inf)
        np.maximum.at(inv_max, flat, 1.0 / w[ok])
        return float(np.max(w_avg * inv_max[good]))
    s_sum = np.bincount(flat, weights=sigma[ok], minlength=ncub)
    s_avg = s_sum[good] / counts[good]
    return float(np.max(w_avg * s_avg ** (p - 1.0)))


@dataclass
class ApEstimate:
    """Result of an A_p estimate, with its refinement history."""

    value: float
    p: float
    diverged: bool
    mode: str                       # "study" or "fixed-grid"
    history: list = dc_field(default_factory=list)  # (generation, gen max, running max)
    weight: dict = dc_field(default_factory=dict)
    div_rate: float = 0.04

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "p": self.p,
            "diverged": self.diverged,
            "mode": self.mode,
            "history": [[int(g), float(a), float(r)] for g, a, r in self.history],
            "weight": self.weight,
            "div_rate": self.div_rate,
        }


def _study_grid(family: CubeFamily, g: int, points_per_side: int) -> np.ndarray:
    """Midpoint evaluation grid matched to generation g's cube side."""
    cells = 2 ** g * points_per_side
    axes = [family.box_min[a] + (np.arange(cells) + 0.5)
            * (family.box_max[a] - family.box_min[a]) / cells
            for a in range(family.dim)]
    if family.dim == 1:
        return axes[0][:, None]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _flag_from_history(running: list[float], rate: float) -> bool:
    """Sustained growth: the running max gained >= rate in each of the
    last two generation steps."""
    if len(running) < 3:
        return False
    r2, r1, r0 = running[-3], running[-2], running[-1]
    if r2 <= 0.0 or r1 <= 0.0:
        return False
    return (r0 >= (1.0 + rate) * r1) and (r1 >= (1.0 + rate) * r2)


def ap_constant(weight: WeightSpec, p: float, family: CubeFamily,
                grid=None, points_per_side: int = 16,
                div_rate: float = 0.04) -> ApEstimate:
    """A_p characteristic estimate of a weight over a dyadic cube family.

    With ``grid=None`` (the default) each generation G of the family is
    evaluated together with all coarser ones on a midpoint grid whose
    resolution tracks G (``points_per_side`` points per deepest cube side);
    the per-step growth of the running max is the divergence statistic.
    With an explicit ``grid`` the whole family is evaluated on that fixed
    grid (plain lower estimate of the supremum; monotone in the family).

    Cubes with fewer than 2**dim grid points are dropped.
    """
    if not (p >= 1.0):
        raise ValueError("A_p requires p >= 1")
    min_points = 2 ** family.dim

    def family_max(points, upto_g):
        w = weight.evaluate(points)
        if np.any(w <= 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weight must be positive and finite on the grid")
        sigma = w ** (1.0 / (1.0 - p)) if p > 1.0 else None
        best = np.nan
        for g in range(family.g_min, upto_g + 1):
            for shift in family.shifts:
                got = _generation_products(points, w, sigma, family, g, shift,
                                           p, min_points)
                if not np.isnan(got):
                    best = got if np.isnan(best) else max(best, got)
        return best

    history: list[tuple[int, float, float]] = []
    running: list[float] = []
    if grid is not None:
        pts = np.asarray(grid, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        run = np.nan
        for g in family.generations():
            w = weight.evaluate(pts)
            sigma = w ** (1.0 / (1.0 - p)) if p > 1.0 else None
            gen_best = np.nan
            for shift in family.shifts:
                got = _generation_products(pts, w, sigma, family, g, shift, p, min_points)
                if not np.isnan(got):
                    gen_best = got if np.isnan(gen_best) else max(gen_best, got)
            if not np.isnan(gen_best):
                run = gen_best if np.isnan(run) else max(run, gen_best)
            if not np.isnan(run):
                history.append((g, gen_best, run))
                running.append(run)
        mode = "fixed-grid"
    else:
        for g_top in family.generations():
            pts = _study_grid(family, g_top, points_per_side)
            got = family_max(pts, g_top)
            run = got if not running else max(running[-1], got)
            history.append((g_top, got, run))
            running.append(run)
        mode = "study"
    if not running or np.isnan(running[-1]):
        raise ValueError("no cube of the family contains enough grid points")
    return ApEstimate(float(running[-1]), float(p), _flag_from_history(running, div_rate),
                      mode, history, weight.describe(), div_rate)


def weighted_space(points, cell_volumes, weight: WeightSpec,
                   meta: dict | None = None) -> MetricMeasureSpace:
    """Euclidean space whose masses are w(x_i) * cell volume.

    This is the discrete measure w dx; weak-norm and Poincare machinery run
    on it unchanged.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    vol = np.asarray(cell_volumes, dtype=np.float64)
    if vol.ndim == 0:
        vol = np.full(pts.shape[0], float(vol))
    if vol.shape != (pts.shape[0],) or np.any(vol <= 0.0):
        raise ValueError("cell volumes must be positive, one per point")
    masses = weight.evaluate(pts) * vol
    info = {"weighted_by": weight.describe()}
    info.update(meta or {})
    return MetricMeasureSpace.euclidean(pts, masses, meta=info)


def _cube_mass(weight: WeightSpec, lo: np.ndarray, hi: np.ndarray,
               points_per_side: int) -> float:
    """Midpoint-quadrature mass of the weight over the box [lo, hi)."""
    n = lo.shape[0]
    axes = [lo[a] + (np.arange(points_per_side) + 0.5) / points_per_side
            * (hi[a] - lo[a]) for a in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    cell = float(np.prod((hi - lo) / points_per_side))
    return float(np.sum(weight.evaluate(pts))) * cell


def growth_check(weight: WeightSpec, p: float, anchor, side: float, lambdas,
                 ap_value: float, points_per_side: int = 1024,
                 domain=None) -> dict:
    """Check the mass growth bound w(lam*Q) <= [w]_Ap * lam^(n*p) * w(Q).

    Masses are midpoint quadratures over the cube and its concentric
    dilates, each on its own grid, so analytic weights are evaluated
    wherever the dilate lands.  ``domain = (lo, hi)`` restricts where the
    weight may be evaluated (mandatory semantics for tabulated data); a
    dilate leaving it is an error.  ``slack = bound / mass`` per row; the
    bound holds when the worst (smallest) slack is >= 1.
    """
    if p < 1.0:
        raise ValueError("p must be >= 1")
    anchor = np.atleast_1d(np.asarray(anchor, dtype=np.float64))
    n = anchor.shape[0]
    if weight.kind == "tabulated":
        raise ValueError("growth_check needs an analytically evaluable weight")
    center = anchor + 0.5 * side
    base = _cube_mass(weight, anchor, anchor + side, points_per_side)
    if base <= 0.0:
        raise ValueError("base cube carries no mass")
    rows = []
    worst = np.inf
    for lam in np.atleast_1d(lambdas):
        lam = float(lam)
        if lam < 1.0:
            raise ValueError("dilation factors must be >= 1")
        half = 0.5 * lam * side
        lo, hi = center - half, center + half
        if domain is not None:
            dlo = np.atleast_1d(np.asarray(domain[0], dtype=np.float64))
            dhi = np.atleast_1d(np.asarray(domain[1], dtype=np.float64))
            if np.any(lo < dlo - 1e-12) or np.any(hi > dhi + 1e-12):
                raise ValueError(f"dilate lam={lam} leaves the weight's domain")
        grown = _cube_mass(weight, lo, hi, points_per_side)
        bound = ap_value * lam ** (n * p) * base
        slack = bound / grown if grown > 0.0 else np.inf
        worst = min(worst, slack)
        rows.append({"lam": lam, "mass": grown, "bound": bound, "slack": slack})
    return {"worst_slack": worst, "holds": worst >= 1.0 - 1e-12, "table": rows,
            "base_mass": base}
