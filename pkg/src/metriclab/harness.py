"""Experiment harness: configs, generators, oracle mode, sweeps, persistence.

Everything an experiment needs lives in one JSON config: the space
generator, the field, the functional to evaluate, its parameters, and the
output paths.  ``run_experiment`` turns a config into a report dictionary
and (optionally) files: a ``schema: 1`` JSON report, a CSV spectrum
profile, a CSV per-ball table for Poincare runs, and an optional binary
spectrum dump.  Reports carry no timestamps and are serialised with sorted
keys, so identical configs produce bit-identical files.

Oracle mode is a first-class flag: it recomputes the headline scalars with
naive reference enumerations (full-matrix ball volumes, per-candidate
superlevel sums) and aborts with :class:`OracleDisagreement` when the
engine and the reference drift beyond tolerance.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import samplers
from .fields import GALLERY_KINDS, ScalarField, gallery_make, lip_field
from .functionals import (
    bvsy_equivalence,
    critical_set_fraction,
    critical_set_sweep,
    gagliardo,
    sobolev_seminorm,
)
from .inequalities import InterpolationParams, gn_check, sobolev_weak_check
from .mmspace import DistanceIndex, MetricMeasureSpace
from .poincare import BallFamily, poincare_constant
from .weaknorm import EngineParams, enumerate_pair_quotients
from .weights import CubeFamily, WeightSpec, ap_constant, weighted_space

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "OracleDisagreement",
    "SweepFailure",
    "SweepResult",
    "build_field",
    "build_space",
    "convergence_sweep",
    "load_field",
    "load_report",
    "load_space",
    "naive_ap_max",
    "naive_gagliardo",
    "naive_pair_quotients",
    "naive_weak_sup",
    "run_experiment",
    "save_field",
    "save_space",
    "sorted_weak_sup",
]

ORACLE_TOL = 1e-9
ORACLE_MAX_POINTS = 1024

_FUNCTIONALS = ("bvsy", "gagliardo", "poincare", "sobolev_weak", "gn", "ap",
                "critical_set")
_SPACE_KINDS = ("grid1d", "grid2d", "cloud", "torus", "sphere", "cycle", "file")


class ConfigError(Exception):
    """Invalid experiment configuration; the message names the key path."""


class OracleDisagreement(Exception):
    """Engine and naive reference disagree beyond tolerance."""


class SweepFailure(Exception):
    """A convergence sweep could not be evaluated."""


_MISSING = object()


def _take(d: dict, path: str, key: str, types, default=_MISSING, choices=None):
    """Typed config getter; every failure names the full key path."""
    if key not in d:
        if default is _MISSING:
            raise ConfigError(f"{path}.{key}: required key is missing")
        return default
    v = d[key]
    if types is bool:
        ok = isinstance(v, bool)
    elif types is float:
        ok = isinstance(v, (int, float)) and not isinstance(v, bool)
    elif types is int:
        ok = isinstance(v, int) and not isinstance(v, bool)
    else:
        ok = isinstance(v, types)
    if not ok:
        want = types.__name__ if hasattr(types, "__name__") else str(types)
        raise ConfigError(f"{path}.{key}: expected {want}, got {type(v).__name__}")
    if choices is not None and v not in choices:
        raise ConfigError(f"{path}.{key}: {v!r} is not one of {sorted(choices)}")
    return v


def _no_strays(d: dict, path: str, allowed):
    for k in d:
        if k not in allowed:
            raise ConfigError(f"{path}.{k}: unknown key")


def _weight_from_dict(d: dict, path: str) -> WeightSpec:
    kind = _take(d, path, "kind", str, choices=("constant", "power", "tabulated"))
    if kind == "constant":
        _no_strays(d, path, {"kind", "value"})
        return WeightSpec("constant", value=float(_take(d, path, "value", float, 1.0)))
    if kind == "power":
        _no_strays(d, path, {"kind", "alpha"})
        return WeightSpec("power", alpha=float(_take(d, path, "alpha", float)))
    _no_strays(d, path, {"kind", "table"})
    table = _take(d, path, "table", list)
    return WeightSpec("tabulated", table=np.asarray(table, dtype=np.float64))


@dataclass
class ExperimentConfig:
    """Validated experiment description; ``echo`` is the normalised dict."""

    functional: str
    space: dict | None
    field: dict | None
    params: dict
    oracle: bool = False
    threads: int = 1
    output: dict = dc_field(default_factory=dict)

    @property
    def echo(self) -> dict:
        return {
            "functional": self.functional,
            "space": self.space,
            "field": self.field,
            "params": self.params,
            "oracle": self.oracle,
            "threads": self.threads,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config: expected a JSON object at the top level")
        _no_strays(raw, "config",
                   {"functional", "space", "field", "params", "oracle",
                    "threads", "output"})
        functional = _take(raw, "config", "functional", str, choices=_FUNCTIONALS)
        oracle = _take(raw, "config", "oracle", bool, False)
        threads = _take(raw, "config", "threads", int, 1)
        if threads < 1:
            raise ConfigError("config.threads: must be >= 1")
        output = _take(raw, "config", "output", dict, {})
        _no_strays(output, "config.output",
                   {"dir", "report", "profile", "spectrum", "balls"})
        space = _take(raw, "config", "space", dict,
                      None if functional == "ap" else _MISSING)
        if space is not None:
            space = _validate_space(space)
        field = raw.get("field")
        if functional == "ap":
            field = None
        elif field is None:
            raise ConfigError("config.field: required key is missing")
        else:
            field = _validate_field(field)
        params = _take(raw, "config", "params", dict, {})
        params = _validate_params(functional, params)
        return cls(functional, space, field, dict(params), oracle, threads,
                   dict(output))

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        return cls.from_dict(raw)


def _validate_space(spec: dict, path: str = "config.space") -> dict:
    kind = _take(spec, path, "kind", str, choices=_SPACE_KINDS)
    out = {"kind": kind}
    if kind == "grid1d":
        _no_strays(spec, path, {"kind", "n", "a", "b", "weight"})
        out["n"] = _take(spec, path, "n", int)
        out["a"] = float(_take(spec, path, "a", float, -1.0))
        out["b"] = float(_take(spec, path, "b", float, 1.0))
    elif kind == "grid2d":
        _no_strays(spec, path, {"kind", "n", "a", "b", "weight"})
        out["n"] = _take(spec, path, "n", int)
        out["a"] = float(_take(spec, path, "a", float, -1.0))
        out["b"] = float(_take(spec, path, "b", float, 1.0))
    elif kind == "cloud":
        _no_strays(spec, path, {"kind", "n", "dim", "seed", "a", "b"})
        out["n"] = _take(spec, path, "n", int)
        out["dim"] = _take(spec, path, "dim", int)
        out["seed"] = _take(spec, path, "seed", int)
        out["a"] = float(_take(spec, path, "a", float, -1.0))
        out["b"] = float(_take(spec, path, "b", float, 1.0))
    elif kind == "torus":
        _no_strays(spec, path, {"kind", "n", "periods"})
        out["n"] = _take(spec, path, "n", int)
        periods = _take(spec, path, "periods", list, [1.0, 1.0])
        out["periods"] = [float(p) for p in periods]
    elif kind == "sphere":
        _no_strays(spec, path, {"kind", "level", "radius"})
        out["level"] = _take(spec, path, "level", int)
        out["radius"] = float(_take(spec, path, "radius", float, 1.0))
    elif kind == "cycle":
        _no_strays(spec, path, {"kind", "n", "edge_length"})
        out["n"] = _take(spec, path, "n", int)
        out["edge_length"] = float(_take(spec, path, "edge_length", float, 1.0))
    else:
        _no_strays(spec, path, {"kind", "path"})
        out["path"] = _take(spec, path, "path", str)
    if "n" in out and out["n"] < 2:
        raise ConfigError(f"{path}.n: need at least 2 points")
    if "weight" in spec:
        weight = _take(spec, path, "weight", dict)
        _weight_from_dict(weight, f"{path}.weight")
        out["weight"] = weight
    return out


def _validate_field(spec: dict, path: str = "config.field") -> dict:
    kinds = GALLERY_KINDS + ("coordinate", "file")
    kind = _take(spec, path, "kind", str, choices=kinds)
    out = {"kind": kind}
    if kind == "file":
        _no_strays(spec, path, {"kind", "path"})
        out["path"] = _take(spec, path, "path", str)
        return out
    if kind == "coordinate":
        _no_strays(spec, path, {"kind", "axis"})
        out["axis"] = _take(spec, path, "axis", int, 0)
        return out
    _no_strays(spec, path, {"kind", "center", "scale", "amplitude"})
    if "center" in spec and spec["center"] is not None:
        c = spec["center"]
        if isinstance(c, (int, float)) and not isinstance(c, bool):
            out["center"] = c
        elif isinstance(c, list):
            out["center"] = [float(v) for v in c]
        else:
            raise ConfigError(f"{path}.center: expected a number or a list")
    else:
        out["center"] = None
    out["scale"] = float(_take(spec, path, "scale", float, 1.0))
    out["amplitude"] = float(_take(spec, path, "amplitude", float, 1.0))
    if out["scale"] <= 0.0:
        raise ConfigError(f"{path}.scale: must be positive")
    return out


def _validate_params(functional: str, params: dict) -> dict:
    path = "config.params"
    out = dict(params)
    if functional == "bvsy":
        _no_strays(params, path, {"p", "estimator"})
        out["p"] = float(_take(params, path, "p", float, 1.0))
        out["estimator"] = _take(params, path, "estimator", str, "ratio",
                                 choices=("ratio", "radius"))
    elif functional == "gagliardo":
        _no_strays(params, path, {"s1", "p1", "variant"})
        out["s1"] = float(_take(params, path, "s1", float))
        out["p1"] = float(_take(params, path, "p1", float))
        out["variant"] = _take(params, path, "variant", str, "metric",
                               choices=("metric", "euclidean"))
    elif functional == "poincare":
        _no_strays(params, path, {"q", "p", "tau", "stride", "fractions"})
        out["q"] = float(_take(params, path, "q", float, 1.0))
        out["p"] = float(_take(params, path, "p", float, 1.0))
        out["tau"] = float(_take(params, path, "tau", float, 1.0))
        out["stride"] = _take(params, path, "stride", int, 8)
        fr = _take(params, path, "fractions", list, [0.1, 0.2, 0.3])
        out["fractions"] = [float(f) for f in fr]
    elif functional == "sobolev_weak":
        _no_strays(params, path, {"p"})
        out["p"] = float(_take(params, path, "p", float))
    elif functional == "gn":
        _no_strays(params, path, {"s1", "p1", "theta"})
        out["s1"] = float(_take(params, path, "s1", float))
        out["p1"] = float(_take(params, path, "p1", float))
        out["theta"] = float(_take(params, path, "theta", float))
        try:
            InterpolationParams(out["s1"], out["p1"], out["theta"])
        except ValueError as exc:
            raise ConfigError(f"{path}: {exc}") from exc
    elif functional == "ap":
        _no_strays(params, path,
                   {"weight", "p", "g_min", "g_max", "box", "points_per_side",
                    "div_rate"})
        weight = _take(params, path, "weight", dict)
        _weight_from_dict(weight, f"{path}.weight")
        out["weight"] = weight
        out["p"] = float(_take(params, path, "p", float))
        if out["p"] < 1.0:
            raise ConfigError(f"{path}.p: must be >= 1")
        out["g_min"] = _take(params, path, "g_min", int, 1)
        out["g_max"] = _take(params, path, "g_max", int, 6)
        box = _take(params, path, "box", list, [[-1.0], [1.0]])
        out["box"] = [[float(v) for v in np.atleast_1d(side)] for side in box]
        out["points_per_side"] = _take(params, path, "points_per_side", int, 16)
        out["div_rate"] = float(_take(params, path, "div_rate", float, 0.04))
    else:  # critical_set
        _no_strays(params, path, {"delta_frac", "radii", "stride", "c0"})
        out["delta_frac"] = float(_take(params, path, "delta_frac", float, 0.05))
        out["radii"] = [float(r) for r in _take(params, path, "radii", list)]
        out["stride"] = _take(params, path, "stride", int, 1)
        out["c0"] = float(_take(params, path, "c0", float, 0.05))
    return out


# ---------------------------------------------------------------------------
# space / field construction and persistence


def build_space(spec: dict) -> MetricMeasureSpace:
    """Materialise a validated space spec into a MetricMeasureSpace."""
    kind = spec["kind"]
    if kind == "file":
        return load_space(spec["path"])
    if kind == "grid1d":
        base = samplers.uniform_grid_1d(spec["n"], (spec["a"], spec["b"]))
    elif kind == "grid2d":
        base = samplers.uniform_grid_2d(
            spec["n"], bounds=((spec["a"], spec["b"]), (spec["a"], spec["b"])))
    elif kind == "cloud":
        base = samplers.random_cloud(spec["n"], spec["dim"], spec["seed"],
                                     (spec["a"], spec["b"]))
    elif kind == "torus":
        base = samplers.torus_grid(spec["n"], periods=spec["periods"])
    elif kind == "sphere":
        base = samplers.icosphere(spec["level"], spec["radius"])
    else:
        base = samplers.cycle_graph(spec["n"], spec["edge_length"])
    if spec.get("weight"):
        weight = _weight_from_dict(spec["weight"], "config.space.weight")
        return weighted_space(base.points, base.weights, weight,
                              meta=dict(base.meta))
    return base


def _default_center(space: MetricMeasureSpace):
    if space.kind == "graph":
        return 0
    if space.kind == "sphere":
        return [0.0, 0.0, space.radius]
    lo, hi = space.points.min(axis=0), space.points.max(axis=0)
    return [float(v) for v in (lo + hi) / 2.0]


def build_field(space: MetricMeasureSpace, spec: dict) -> ScalarField:
    """Materialise a validated field spec on a space."""
    kind = spec["kind"]
    if kind == "file":
        return load_field(spec["path"])
    if kind == "coordinate":
        if space.kind == "graph":
            raise ConfigError("config.field.kind: coordinate fields need "
                              "ambient coordinates")
        axis = spec["axis"]
        if not (0 <= axis < space.dim):
            raise ConfigError(f"config.field.axis: axis {axis} out of range")
        values = space.points[:, axis].copy()
        grad = np.ones(space.n)
        return ScalarField(values, grad, "coordinate",
                           {"kind": "coordinate", "axis": axis})
    center = spec.get("center")
    if center is None:
        center = _default_center(space)
    if space.kind == "graph":
        if isinstance(center, list):
            raise ConfigError("config.field.center: graph spaces take a vertex index")
        center = int(center)
    else:
        if not isinstance(center, list):
            center = [float(center)]
        if len(center) != space.dim:
            raise ConfigError(
                f"config.field.center: need {space.dim} coordinates")
    return gallery_make(space, kind, center, spec["scale"], spec["amplitude"])


def save_space(space: MetricMeasureSpace, path) -> None:
    """Write a space file: {metric, points, weights} (+edges for graphs)."""
    metric: dict = {}
    if space.kind == "euclidean":
        metric["kind"] = "euclidean"
    elif space.kind == "sphere":
        metric["kind"] = "sphere-geodesic"
        metric["radius"] = space.radius
    elif space.kind == "flat-torus":
        metric["kind"] = "flat-torus"
        metric["period"] = [float(p) for p in space.periods]
    else:
        metric["kind"] = "graph-shortest-path"
        metric["edges"] = [[int(i), int(j), float(w)]
                           for i, j, w in space.meta["edges"]]
        metric["n"] = space.n
    obj = {
        "metric": metric,
        "points": [] if space.kind == "graph" else space.points.tolist(),
        "weights": space.weights.tolist(),
    }
    _write_json(path, obj)


def load_space(path) -> MetricMeasureSpace:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    for key in ("metric", "weights"):
        if key not in obj:
            raise ConfigError(f"{path}: space file lacks the '{key}' field")
    metric = obj["metric"]
    kind = metric.get("kind")
    weights = np.asarray(obj["weights"], dtype=np.float64)
    if kind == "graph-shortest-path":
        return MetricMeasureSpace.graph(int(metric["n"]), metric["edges"], weights)
    points = np.asarray(obj.get("points"), dtype=np.float64)
    if kind == "euclidean":
        return MetricMeasureSpace.euclidean(points, weights)
    if kind == "sphere-geodesic":
        return MetricMeasureSpace.sphere(points, weights,
                                         float(metric.get("radius", 1.0)))
    if kind == "flat-torus":
        return MetricMeasureSpace.flat_torus(points, weights, metric["period"])
    raise ConfigError(f"{path}: unknown metric kind {kind!r}")


def save_field(field: ScalarField, path) -> None:
    obj = {
        "values": np.asarray(field.values, dtype=np.float64).tolist(),
        "grad_norm": None if field.grad_norm is None
        else np.asarray(field.grad_norm, dtype=np.float64).tolist(),
        "meta": field.meta,
    }
    _write_json(path, obj)


def load_field(path) -> ScalarField:
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if "values" not in obj:
        raise ConfigError(f"{path}: field file lacks the 'values' field")
    values = np.asarray(obj["values"], dtype=np.float64)
    grad = obj.get("grad_norm")
    grad = None if grad is None else np.asarray(grad, dtype=np.float64)
    meta = obj.get("meta") or {}
    return ScalarField(values, grad, str(meta.get("kind", "file")), meta)


# ---------------------------------------------------------------------------
# naive reference kernels (oracle mode)


def naive_pair_quotients(space: MetricMeasureSpace, field, s: float, r: float):
    """Reference quotient enumeration with full-matrix ball volumes.

    V(i, j) is recomputed per row as an explicit weighted count of strictly
    closer points -- no sorting, no prefix sums -- so it shares nothing with
    the production kernel beyond the distance oracle.  Returns (q, ww) in
    row-major ordered-pair order, zeros included, aligned with
    :func:`metriclab.weaknorm.enumerate_pair_quotients`.
    """
    n = space.n
    if n > ORACLE_MAX_POINTS:
        raise ValueError(f"oracle mode supports at most {ORACLE_MAX_POINTS} points")
    values = np.asarray(getattr(field, "values", field), dtype=np.float64)
    d = space.distance_rows(np.arange(n))
    w = space.weights
    vol = np.empty((n, n))
    for i in range(n):
        closer = d[i][:, None] < d[i][None, :]
        vol[i] = w @ closer
    off = ~np.eye(n, dtype=bool)
    df = np.abs(values[:, None] - values[None, :])
    q = np.zeros((n, n))
    nz = off & (df > 0.0)
    q[nz] = df[nz] / (d[nz] ** s * vol[nz] ** (1.0 / r))
    ww = np.outer(w, w)
    return q[off], ww[off]


def naive_weak_sup(q, ww, p: float, candidates=None, chunk: int = 1 << 22):
    """Brute-force sup over candidate thresholds lam = v - eps.

    Evaluates lam^p * sum(ww[q > lam]) by explicit masked sums, one
    candidate at a time (chunked).  With the default candidate set -- one
    threshold just below every distinct positive value -- this is the
    textbook evaluation of the supremum.
    """
    q = np.asarray(q, dtype=np.float64)
    ww = np.asarray(ww, dtype=np.float64)
    if candidates is None:
        vals = np.unique(q[q > 0.0])
        candidates = np.nextafter(vals, -np.inf)
    candidates = np.asarray(candidates, dtype=np.float64)
    if candidates.size == 0:
        return 0.0
    best = 0.0
    step = max(1, int(chunk // max(q.size, 1)))
    for lo in range(0, candidates.size, step):
        lam = candidates[lo:lo + step]
        mass = (q[None, :] > lam[:, None]) @ ww
        best = max(best, float(np.max(lam ** p * mass)))
    return best


def sorted_weak_sup(q, ww, p: float) -> float:
    """All-candidate reference via an ascending sort and suffix masses.

    Independent of the production scan: ascending order, first-occurrence
    group boundaries, and suffix masses from an extended-precision reverse
    accumulation, so each mass is a sum over its own members rather than a
    cancellation-prone ``total - prefix`` difference.
    """
    q = np.asarray(q, dtype=np.float64)
    ww = np.asarray(ww, dtype=np.float64)
    pos = q > 0.0
    if not np.any(pos):
        return 0.0
    order = np.argsort(q[pos], kind="stable")
    qs = q[pos][order]
    ws = ww[pos][order]
    suffix = np.cumsum(ws[::-1].astype(np.longdouble))[::-1]
    starts = np.flatnonzero(np.concatenate(([True], qs[1:] != qs[:-1])))
    vals = qs[starts]
    return float(np.max(vals ** p * suffix[starts].astype(np.float64)))


def naive_gagliardo(space: MetricMeasureSpace, field, s1: float, p1: float,
                    variant: str = "metric") -> float:
    """Reference double-sum energy with full-matrix volumes."""
    n = space.n
    if n > ORACLE_MAX_POINTS:
        raise ValueError(f"oracle mode supports at most {ORACLE_MAX_POINTS} points")
    values = np.asarray(getattr(field, "values", field), dtype=np.float64)
    d = space.distance_rows(np.arange(n))
    w = space.weights
    off = ~np.eye(n, dtype=bool)
    df = np.abs(values[:, None] - values[None, :])
    ww = np.outer(w, w)
    total = 0.0
    if variant == "metric":
        vol = np.empty((n, n))
        for i in range(n):
            closer = d[i][:, None] < d[i][None, :]
            vol[i] = w @ closer
        kern = d[off] ** (s1 * p1) * vol[off]
    else:
        kern = d[off] ** (space.dim + s1 * p1)
    total = float(np.sum(df[off] ** p1 / kern * ww[off]))
    return total


def naive_ap_max(weight, p: float, family: CubeFamily, points) -> float:
    """Reference A_p family maximum: explicit per-cube loops, fsum averages.

    Evaluates the same dyadic family on a fixed point set with none of the
    production bincount machinery; cubes with fewer than 2**dim points are
    dropped, matching the engine's rule.
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    w = weight.evaluate(pts)
    best = float("nan")
    min_points = 2 ** family.dim
    extent = family.box_max - family.box_min
    for g in family.generations():
        side = extent / 2 ** g
        for shift in family.shifts:
            per_axis = 2 ** g - (1 if shift > 0.0 else 0)
            if per_axis <= 0:
                continue
            for flat in range(per_axis ** family.dim):
                idx, rem = [], flat
                for _ in range(family.dim):
                    idx.append(rem % per_axis)
                    rem //= per_axis
                lo = family.box_min + (np.array(idx[::-1]) + shift) * side
                hi = lo + side
                inside = np.all((pts >= lo) & (pts < hi), axis=1)
                k = int(np.sum(inside))
                if k < min_points:
                    continue
                ww = w[inside]
                avg = math.fsum(ww) / k
                if p == 1.0:
                    prod = avg * float(np.max(1.0 / ww))
                else:
                    sig = math.fsum(float(v) ** (1.0 / (1.0 - p)) for v in ww) / k
                    prod = avg * sig ** (p - 1.0)
                best = prod if math.isnan(best) else max(best, prod)
    return best


def _rel_delta(a: float, b: float) -> float:
    scale = max(abs(a), abs(b))
    if scale == 0.0:
        return 0.0
    return abs(a - b) / scale


# ---------------------------------------------------------------------------
# report writers


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, sort_keys=True, indent=2, allow_nan=True)
        fh.write("\n")


def _write_profile_csv(path, values, lamw, cap: int = 100_000) -> None:
    values = np.asarray(values)
    lamw = np.asarray(lamw)
    if values.size > cap:
        keep = np.unique(np.concatenate(
            [np.arange(0, values.size, math.ceil(values.size / cap)),
             [values.size - 1]]))
        values, lamw = values[keep], lamw[keep]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("value,lambda_p_W\n")
        for v, y in zip(values.tolist(), lamw.tolist()):
            fh.write(f"{v!r},{y!r}\n")


def _write_balls_csv(path, report) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("center,radius,lhs,rhs_core,ratio\n")
        for b in report.balls:
            fh.write(f"{int(b.center)},{float(b.radius)!r},{float(b.lhs)!r},"
                     f"{float(b.rhs_core)!r},{float(b.ratio)!r}\n")


def _write_spectrum_dump(path, spectrum) -> bool:
    """Binary columnar dump: all values as little-endian f64, then weights."""
    if spectrum.mode != "dense":
        return False
    with open(path, "wb") as fh:
        fh.write(np.ascontiguousarray(spectrum.values, dtype="<f8").tobytes())
        fh.write(np.ascontiguousarray(spectrum.weights, dtype="<f8").tobytes())
    return True


def read_spectrum_dump(path) -> tuple[np.ndarray, np.ndarray]:
    flat = np.fromfile(path, dtype="<f8")
    half = flat.size // 2
    return flat[:half], flat[half:]


def load_report(path) -> dict:
    """Re-read a written report; scalars round-trip exactly (repr floats)."""
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# experiment dispatch


def _experiment_objects(cfg: ExperimentConfig):
    space = build_space(cfg.space)
    index = DistanceIndex(space)
    field = build_field(space, cfg.field)
    return space, index, field


def _run_bvsy(cfg, engine):
    space, index, field = _experiment_objects(cfg)
    p = cfg.params["p"]
    lip = lip_field(space, field, estimator=cfg.params["estimator"],
                    index=index, workers=cfg.threads)
    rep = bvsy_equivalence(space, field, p, index=index, engine=engine, lip=lip)
    extra = {"profile": (rep.weak.profile_values, rep.weak.profile_lambda_p_w),
             "spectrum_args": (space, field, 1.0, p, index, engine)}
    if cfg.oracle:
        q, ww = naive_pair_quotients(space, field, 1.0, p)
        qe, we = enumerate_pair_quotients(space, field, 1.0, p, index=index)
        naive = naive_weak_sup(q, ww, p)
        alt = sorted_weak_sup(q, ww, p)
        q_scale = max(1.0, float(np.max(np.abs(q)))) if q.size else 1.0
        extra["oracle"] = {
            "value": {"engine": rep.bvsy, "naive": naive,
                      "rel_delta": _rel_delta(rep.bvsy, naive)},
            "value_sorted": {"engine": rep.bvsy, "naive": alt,
                             "rel_delta": _rel_delta(rep.bvsy, alt)},
            "pairs_max_delta":
                float(np.max(np.abs(q - qe))) / q_scale if q.size else 0.0,
            "pair_weights_max_delta":
                float(np.max(np.abs(ww - we))) if ww.size else 0.0,
        }
    return rep.as_dict(), extra


def _run_sobolev_weak(cfg, engine):
    space, index, field = _experiment_objects(cfg)
    p = cfg.params["p"]
    rep = sobolev_weak_check(space, field, p, index=index, engine=engine)
    extra = {}
    if cfg.oracle:
        q, ww = naive_pair_quotients(space, field, 1.0 / p, p)
        naive = sorted_weak_sup(q, ww, p) ** (1.0 / p)
        extra["oracle"] = {"lhs": {"engine": rep.lhs, "naive": naive,
                                   "rel_delta": _rel_delta(rep.lhs, naive)}}
    return rep.as_dict(), extra


def _run_gn(cfg, engine):
    space, index, field = _experiment_objects(cfg)
    params = InterpolationParams(cfg.params["s1"], cfg.params["p1"],
                                 cfg.params["theta"])
    rep = gn_check(space, field, params, index=index, engine=engine)
    extra = {}
    if cfg.oracle:
        q, ww = naive_pair_quotients(space, field, params.s, params.p)
        naive = sorted_weak_sup(q, ww, params.p) ** (1.0 / params.p)
        gag = naive_gagliardo(space, field, params.s1, params.p1)
        extra["oracle"] = {
            "lhs": {"engine": rep.lhs, "naive": naive,
                    "rel_delta": _rel_delta(rep.lhs, naive)},
            "gagliardo": {"engine": rep.components["gagliardo"], "naive": gag,
                          "rel_delta": _rel_delta(rep.components["gagliardo"], gag)},
        }
    return rep.as_dict(), extra


def _run_gagliardo(cfg, engine):
    space, index, field = _experiment_objects(cfg)
    s1, p1 = cfg.params["s1"], cfg.params["p1"]
    variant = cfg.params["variant"]
    value = gagliardo(space, field, s1, p1, variant, index=index, engine=engine)
    result = {"value": value, "s1": s1, "p1": p1, "variant": variant,
              "power": p1, "note": "p1-th power, no root"}
    extra = {}
    if cfg.oracle:
        naive = naive_gagliardo(space, field, s1, p1, variant)
        extra["oracle"] = {"value": {"engine": value, "naive": naive,
                                     "rel_delta": _rel_delta(value, naive)}}
    return result, extra


def _run_poincare(cfg, engine):
    space, index, field = _experiment_objects(cfg)
    p, q, tau = cfg.params["p"], cfg.params["q"], cfg.params["tau"]
    lip = lip_field(space, field, index=index, workers=cfg.threads)
    family = BallFamily.default(space, index, stride=cfg.params["stride"],
                                fractions=cfg.params["fractions"], tau=tau)
    rep = poincare_constant(space, field, lip, family, q, p)
    extra = {"balls": rep}
    if cfg.oracle:
        worst = 0.0
        for ball, row in zip(family.balls, rep.balls):
            d = space.distance_row(ball.center)
            inside = d < ball.radius
            w = space.weights[inside]
            l_b = float(np.sum(field.values[inside] * w) / np.sum(w))
            lhs = float(np.sum(np.abs(field.values[inside] - l_b) ** q * w)
                        / np.sum(w)) ** (1.0 / q)
            worst = max(worst, _rel_delta(lhs, row.lhs))
        extra["oracle"] = {"ball_lhs_max_delta": worst}
    return rep.as_dict(), extra


def _run_ap(cfg, engine):
    params = cfg.params
    weight = _weight_from_dict(params["weight"], "config.params.weight")
    box = params["box"]
    family = CubeFamily(box[0], box[1], params["g_min"], params["g_max"])
    est = ap_constant(weight, params["p"], family,
                      points_per_side=params["points_per_side"],
                      div_rate=params["div_rate"])
    extra = {}
    if cfg.oracle:
        from .weights import _study_grid
        pts = _study_grid(family, family.g_max, params["points_per_side"])
        n_cubes = sum(family.n_cubes(g, s) for g in family.generations()
                      for s in family.shifts)
        if pts.shape[0] * n_cubes > 1 << 26:
            raise ConfigError("config.params: A_p oracle grid too large; "
                              "reduce g_max or points_per_side")
        fixed = ap_constant(weight, params["p"], family, grid=pts)
        naive = naive_ap_max(weight, params["p"], family, pts)
        extra["oracle"] = {
            "fixed_grid": {"engine": fixed.value, "naive": naive,
                           "rel_delta": _rel_delta(fixed.value, naive)},
        }
    return est.as_dict(), extra


def _run_critical_set(cfg, engine):
    space, index, field = _experiment_objects(cfg)
    lip = lip_field(space, field, index=index, workers=cfg.threads)
    delta = cfg.params["delta_frac"] * float(np.max(lip.values))
    centers = np.arange(0, space.n, cfg.params["stride"])
    rep = critical_set_sweep(space, field, lip, delta, cfg.params["radii"],
                             centers=centers, c0=cfg.params["c0"])
    extra = {}
    if cfg.oracle and rep.centers.size:
        c = int(rep.centers[0])
        r = float(rep.radii[-1])
        direct = critical_set_fraction(space, field, lip, c, r, delta)
        engine_val = float(rep.fractions[0, -1])
        extra["oracle"] = {"fraction": {"engine": engine_val, "naive": direct,
                                        "rel_delta": _rel_delta(engine_val, direct)}}
    return rep.as_dict(), extra


_RUNNERS = {
    "bvsy": _run_bvsy,
    "sobolev_weak": _run_sobolev_weak,
    "gn": _run_gn,
    "gagliardo": _run_gagliardo,
    "poincare": _run_poincare,
    "ap": _run_ap,
    "critical_set": _run_critical_set,
}


def _check_oracle(section: dict) -> None:
    for key, entry in section.items():
        if isinstance(entry, dict) and "rel_delta" in entry:
            if entry["rel_delta"] > ORACLE_TOL:
                raise OracleDisagreement(
                    f"{key}: engine {entry['engine']!r} vs naive "
                    f"{entry['naive']!r} (rel delta {entry['rel_delta']:.3e} "
                    f"> {ORACLE_TOL})")
        elif isinstance(entry, float) and entry > ORACLE_TOL:
            raise OracleDisagreement(f"{key}: delta {entry:.3e} > {ORACLE_TOL}")


def run_experiment(config, out_dir=None, write: bool | None = None):
    """Run one experiment; returns (report dict, written paths dict).

    ``out_dir`` falls back to ``config.output.dir``, then the METRICLAB_OUT
    environment variable; files are written only when a directory or
    explicit output paths resolve (or ``write=True`` forces the default
    names in the current directory).
    """
    cfg = config if isinstance(config, ExperimentConfig) else \
        ExperimentConfig.from_dict(config)
    if cfg.oracle and cfg.space is not None and cfg.space.get("n", 0) > ORACLE_MAX_POINTS:
        raise ConfigError(f"config.space.n: oracle mode supports at most "
                          f"{ORACLE_MAX_POINTS} points")
    engine = EngineParams(workers=cfg.threads)
    result, extra = _RUNNERS[cfg.functional](cfg, engine)
    report = {"schema": 1, "functional": cfg.functional, "config": cfg.echo,
              "result": result}
    if cfg.oracle:
        section = extra.get("oracle", {})
        section["tolerance"] = ORACLE_TOL
        report["oracle"] = section
        _check_oracle(section)
    out_dir = out_dir or cfg.output.get("dir") or os.environ.get("METRICLAB_OUT")
    if write is None:
        write = out_dir is not None or bool(cfg.output)
    paths: dict = {}
    if write:
        base = out_dir or "."
        os.makedirs(base, exist_ok=True)

        def resolve(key, default):
            name = cfg.output.get(key, default)
            return None if name is None else os.path.join(base, name)

        report_path = resolve("report", "report.json")
        if "profile" in extra:
            profile_path = resolve("profile", "profile.csv")
            _write_profile_csv(profile_path, *extra["profile"])
            paths["profile"] = profile_path
            report["result"]["profile_path"] = os.path.basename(profile_path)
        if "balls" in extra:
            balls_path = resolve("balls", "balls.csv")
            _write_balls_csv(balls_path, extra["balls"])
            paths["balls"] = balls_path
            report["result"]["balls_path"] = os.path.basename(balls_path)
        if cfg.output.get("spectrum") and "spectrum_args" in extra:
            space, field, s, r, index, eng = extra["spectrum_args"]
            dump_path = os.path.join(base, cfg.output["spectrum"])
            if space.n * (space.n - 1) <= eng.dense_cap:
                from .weaknorm import pair_quotients
                spectrum = pair_quotients(space, field, s, r, index=index,
                                          engine=eng)
                _write_spectrum_dump(dump_path, spectrum)
                paths["spectrum"] = dump_path
                report["result"]["spectrum_path"] = os.path.basename(dump_path)
            else:
                report["result"]["spectrum_path"] = None
        _write_json(report_path, report)
        paths["report"] = report_path
    return report, paths


# ---------------------------------------------------------------------------
# convergence sweeps


@dataclass
class SweepResult:
    """Per-size scalars with adjacent relative deltas and a pass verdict."""

    sizes: list
    scalars: list
    deltas: list
    tolerance: float
    selector: str
    passed: bool
    degenerate: bool = False

    def as_dict(self) -> dict:
        return {"sizes": self.sizes, "scalars": self.scalars,
                "deltas": self.deltas, "tolerance": self.tolerance,
                "selector": self.selector, "passed": self.passed,
                "degenerate": self.degenerate}


def _select(report: dict, selector: str):
    node = report
    for part in selector.split("."):
        if not isinstance(node, dict) or part not in node:
            raise SweepFailure(f"selector {selector!r}: no key {part!r} in report")
        node = node[part]
    if not isinstance(node, (int, float)):
        raise SweepFailure(f"selector {selector!r}: value is not a scalar")
    return float(node)


def _with_size(cfg: ExperimentConfig, size: int) -> ExperimentConfig:
    space = None if cfg.space is None else dict(cfg.space)
    params = dict(cfg.params)
    if cfg.functional == "ap":
        params["g_max"] = int(size)
    elif space is not None and space.get("kind") == "sphere":
        space["level"] = int(size)
    elif space is not None and space.get("kind") != "file":
        space["n"] = int(size)
    else:
        raise SweepFailure("sweep: config has no size axis to vary")
    return ExperimentConfig(cfg.functional, space, cfg.field, params,
                            cfg.oracle, cfg.threads, {})


def convergence_sweep(config, sizes, selector: str, tolerance: float,
                      out_dir=None) -> SweepResult:
    """Run the experiment per size and test refinement stability.

    Passes iff the relative change between the last two sizes is at most
    ``tolerance``.  All-degenerate rows (zero or non-finite scalars across
    the board) pass vacuously with ``degenerate=True``.
    """
    cfg = config if isinstance(config, ExperimentConfig) else \
        ExperimentConfig.from_dict(config)
    sizes = [int(s) for s in sizes]
    if len(sizes) < 3:
        raise SweepFailure("sweep needs at least three sizes")
    if sorted(sizes) != sizes:
        raise SweepFailure("sweep sizes must be strictly increasing")
    scalars = []
    for k, size in enumerate(sizes):
        sub = _with_size(cfg, size)
        report, _ = run_experiment(sub, write=False)
        if out_dir is not None:
            _write_json(os.path.join(out_dir, f"sweep_{size}.json"), report)
        scalars.append(_select(report, selector))
    finite = [v for v in scalars if math.isfinite(v) and v != 0.0]
    if not finite:
        return SweepResult(sizes, scalars, [], float(tolerance), selector,
                           True, degenerate=True)
    deltas = []
    for a, b in zip(scalars, scalars[1:]):
        if not (math.isfinite(a) and math.isfinite(b)) or max(abs(a), abs(b)) == 0.0:
            deltas.append(float("inf"))
        else:
            deltas.append(abs(b - a) / max(abs(a), abs(b)))
    passed = math.isfinite(deltas[-1]) and deltas[-1] <= tolerance
    return SweepResult(sizes, scalars, deltas, float(tolerance), selector,
                       passed)
