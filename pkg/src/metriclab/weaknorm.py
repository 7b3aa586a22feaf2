"""Exact weak-type functionals of difference-quotient spectra.

Given a field f on a metric measure space, the ordered-pair quotients

    q(i, j) = |f(i) - f(j)| / (rho(i, j)^s * V(i, j)^(1/r)),   i != j,

with pair weight w_i * w_j and V(i, j) the open-ball mass centered at i,
form a weighted spectrum.  The weak norm at exponent p is

    sup_{lam > 0} lam^p * W(lam),   W(lam) = total weight of {q > lam}.

W is a right-continuous decreasing step function, so the sup is attained by
approaching one of the distinct spectrum values v from below, where the set
{q > lam} becomes {q >= v}.  One descending pass over the sorted spectrum
with a running cumulative weight therefore evaluates the sup exactly; that
scan is this module's core and is oracle-tested against brute-force lambda
enumeration.

Two storage modes keep the N(N-1)-entry spectrum tractable:

* dense -- every nonzero entry, sorted descending (ties broken by the pair
  enumeration order).  Zero-valued entries are compacted to a retained
  total weight.
* bucketed -- above a configurable entry cap, pass 1 histograms the
  quotients into quantile buckets and tracks the exact maximum; the scan's
  sup is then refined exactly by re-enumerating every bucket whose upper
  envelope could still win.  Results remain exact, only memory is bounded.

All block reductions run in a fixed order (see _parallel), so results are
bit-identical for any worker count.
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from ._parallel import DEFAULT_BLOCK, block_ranges, map_blocks, neumaier_sum, tree_merge
from .mmspace import DistanceIndex, MetricMeasureSpace

__all__ = [
    "EngineParams",
    "DenseSpectrum",
    "BucketedSpectrum",
    "TailSummary",
    "WeakNormResult",
    "pair_quotients",
    "enumerate_pair_quotients",
    "weak_norm",
]


@dataclass(frozen=True)
class EngineParams:
    """Tuning knobs for the pair-sweep engine.

    ``dense_cap`` is the largest pair count held in memory at once; larger
    spectra switch to the bucketed two-pass mode.  ``block_size`` fixes the
    center-block boundaries and must not depend on ``workers`` (determinism).
    """

    workers: int = 1
    dense_cap: int = 20_000_000
    block_size: int = DEFAULT_BLOCK
    n_buckets: int = 4096
    boundary_sample: int = 65536


def _field_values(field) -> np.ndarray:
    values = getattr(field, "values", field)
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1:
        raise ValueError("field values must be a 1-D array")
    return values


def _power(x: np.ndarray, expo: float) -> np.ndarray:
    """x**expo with exact shortcuts for the common exponents."""
    if expo == 1.0:
        return x
    if expo == 0.5:
        return np.sqrt(x)
    if expo == 2.0:
        return x * x
    return np.power(x, expo)


def pair_block_arrays(space: MetricMeasureSpace, index: DistanceIndex,
                      values: np.ndarray, lo: int, hi: int):
    """Flattened pair data for centers [lo, hi): (d, V, |df|, w_i*w_j).

    The diagonal (j == i) is removed; arrays follow the canonical pair
    enumeration order (center ascending, then j ascending).
    """
    centers = np.arange(lo, hi)
    d, vol = index.volume_rows(centers)
    df = np.abs(values[lo:hi, None] - values[None, :])
    wpair = space.weights[lo:hi, None] * space.weights[None, :]
    keep = np.ones(d.shape, dtype=bool)
    keep[np.arange(hi - lo), centers] = False
    return d[keep], vol[keep], df[keep], wpair[keep]


def _quotient_block(space, index, values, s, r, lo, hi):
    """Nonzero quotients and weights for one center block, plus tallies."""
    d, vol, df, wpair = pair_block_arrays(space, index, values, lo, hi)
    total_w = float(np.sum(wpair))
    nz = df > 0.0
    zero_w = float(np.sum(wpair[~nz]))
    denom = _power(d[nz], s) * _power(vol[nz], 1.0 / r)
    q = df[nz] / denom
    return q, wpair[nz], zero_w, total_w


@dataclass
class TailSummary:
    """Large-lambda behaviour of the spectrum.

    ``floor_value`` is lam^p * W(lam) evaluated exactly at the top-decade
    floor lam = max_value / 10, the largest scale that is one decade below
    the spectrum top; it is the resolution-stable stand-in for the
    large-lambda limit of the profile.
    """

    max_value: float
    floor_lambda: float
    floor_weight: float
    floor_value: float
    n_decade_distinct: int | None = None


@dataclass
class WeakNormResult:
    value: float
    p: float
    lambda_at: float
    total_weight: float
    zero_weight: float
    mode: str
    profile_values: np.ndarray
    profile_lambda_p_w: np.ndarray
    tail: TailSummary

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "p": self.p,
            "lambda_at": self.lambda_at,
            "total_weight": self.total_weight,
            "zero_weight": self.zero_weight,
            "mode": self.mode,
            "tail": {
                "max_value": self.tail.max_value,
                "floor_lambda": self.tail.floor_lambda,
                "floor_weight": self.tail.floor_weight,
                "floor_value": self.tail.floor_value,
            },
        }


@dataclass
class DenseSpectrum:
    """Every nonzero quotient, descending, ties in pair-enumeration order."""

    values: np.ndarray
    weights: np.ndarray
    zero_weight: float
    total_weight: float
    s: float
    r: float
    n_points: int
    n_pairs: int
    meta: dict = dc_field(default_factory=dict)

    @property
    def mode(self) -> str:
        return "dense"

    @property
    def max_value(self) -> float:
        return float(self.values[0]) if self.values.size else 0.0


@dataclass
class BucketedSpectrum:
    """Bucketed spectrum: exact per-bucket weights plus the exact maximum.

    ``edges`` has one more entry than ``bucket_weights``; bucket k covers
    [edges[k], edges[k+1]) except the top bucket, which is closed at the
    exact maximum.  The object keeps what it needs to re-enumerate pairs,
    so :func:`weak_norm` can refine winning buckets exactly.
    """

    edges: np.ndarray
    bucket_weights: np.ndarray
    zero_weight: float
    total_weight: float
    s: float
    r: float
    n_points: int
    n_pairs: int
    meta: dict = dc_field(default_factory=dict)
    _space: MetricMeasureSpace | None = None
    _index: DistanceIndex | None = None
    _values: np.ndarray | None = None
    _engine: EngineParams | None = None

    @property
    def mode(self) -> str:
        return "bucketed"

    @property
    def max_value(self) -> float:
        return float(self.edges[-1])


def _dense_spectrum(space, index, values, s, r, engine) -> DenseSpectrum:
    def work(block):
        lo, hi = block
        q, w, zero_w, total_w = _quotient_block(space, index, values, s, r, lo, hi)
        order = np.argsort(-q, kind="stable")
        return (-q[order], w[order]), zero_w, total_w

    blocks = block_ranges(space.n, engine.block_size)
    parts = map_blocks(work, blocks, engine.workers)
    neg_v, w = tree_merge([p[0] for p in parts], engine.workers)
    zero_w = neumaier_sum(p[1] for p in parts)
    total_w = neumaier_sum(p[2] for p in parts)
    n = space.n
    return DenseSpectrum(-neg_v, w, zero_w, total_w, s, r, n, n * (n - 1))


def _boundary_edges(space, index, values, s, r, engine) -> np.ndarray:
    """Interior bucket edges from a deterministic stratified center sample."""
    n = space.n
    rows_needed = max(1, int(np.ceil(engine.boundary_sample / max(n - 1, 1))))
    stride = max(1, n // rows_needed)
    sample = []
    for c in range(0, n, stride):
        hi = min(c + 1, n)
        q, _, _, _ = _quotient_block(space, index, values, s, r, c, hi)
        sample.append(q)
    qs = np.concatenate(sample) if sample else np.empty(0)
    if qs.size == 0:
        return np.empty(0)
    probs = np.arange(1, engine.n_buckets) / engine.n_buckets
    cuts = np.unique(np.quantile(qs, probs))
    return cuts[cuts > 0.0]


def _bucketed_spectrum(space, index, values, s, r, engine) -> BucketedSpectrum:
    inner = _boundary_edges(space, index, values, s, r, engine)
    m = inner.size + 1

    def work(block):
        lo, hi = block
        q, w, zero_w, total_w = _quotient_block(space, index, values, s, r, lo, hi)
        idx = np.searchsorted(inner, q, side="right")
        hist = np.bincount(idx, weights=w, minlength=m)
        vmax = float(q.max()) if q.size else 0.0
        return hist, vmax, zero_w, total_w

    blocks = block_ranges(space.n, engine.block_size)
    parts = map_blocks(work, blocks, engine.workers)
    bucket_w = np.zeros(m, dtype=np.longdouble)
    for hist, _, _, _ in parts:      # fixed block order
        bucket_w += hist
    vmax = max((p[1] for p in parts), default=0.0)
    zero_w = neumaier_sum(p[2] for p in parts)
    total_w = neumaier_sum(p[3] for p in parts)
    edges = np.concatenate([[0.0], inner, [vmax]])
    n = space.n
    return BucketedSpectrum(
        edges, bucket_w.astype(np.float64), zero_w, total_w, s, r, n, n * (n - 1),
        _space=space, _index=index, _values=values, _engine=engine,
    )


def pair_quotients(space: MetricMeasureSpace, field, s: float, r: float,
                   index: DistanceIndex | None = None,
                   engine: EngineParams | None = None):
    """Spectrum of ordered-pair quotients |df| / (rho^s * V^(1/r)).

    Returns a :class:`DenseSpectrum` when the N(N-1) pair count fits the
    engine's dense cap, otherwise a :class:`BucketedSpectrum`.  Both carry
    the exact zero-entry weight and total ordered-pair weight.
    """
    values = _field_values(field)
    if values.shape[0] != space.n:
        raise ValueError(f"field has {values.shape[0]} values for {space.n} points")
    if not (s > 0.0) or not (r >= 1.0):
        raise ValueError("exponents must satisfy s > 0 and r >= 1")
    engine = engine or EngineParams()
    index = index or DistanceIndex(space)
    n = space.n
    if n * (n - 1) <= engine.dense_cap:
        return _dense_spectrum(space, index, values, s, r, engine)
    return _bucketed_spectrum(space, index, values, s, r, engine)


def enumerate_pair_quotients(space: MetricMeasureSpace, field, s: float, r: float,
                             index: DistanceIndex | None = None):
    """Raw (values, weights) in pair-enumeration order, zeros included.

    Unsorted small-N utility: entry k corresponds to the k-th ordered pair
    (i, j), i ascending then j ascending with j != i, which lets callers
    align several quotient families pair-by-pair.
    """
    values = _field_values(field)
    index = index or DistanceIndex(space)
    d, vol, df, wpair = pair_block_arrays(space, index, values, 0, space.n)
    denom = _power(d, s) * _power(vol, 1.0 / r)
    with np.errstate(invalid="ignore"):
        q = np.where(df > 0.0, df / denom, 0.0)
    return q, wpair


def _empty_result(spectrum, p) -> WeakNormResult:
    tail = TailSummary(0.0, 0.0, 0.0, 0.0, 0)
    return WeakNormResult(0.0, p, 0.0, spectrum.total_weight, spectrum.zero_weight,
                          spectrum.mode, np.empty(0), np.empty(0), tail)


def _weak_norm_dense(spectrum: DenseSpectrum, p: float) -> WeakNormResult:
    v, w = spectrum.values, spectrum.weights
    if v.size == 0:
        return _empty_result(spectrum, p)
    cum_w = np.cumsum(w.astype(np.longdouble))
    ends = np.flatnonzero(v[1:] != v[:-1])
    ends = np.append(ends, v.size - 1)
    vals = v[ends]
    w_ge = cum_w[ends]
    cand = _power(vals.astype(np.longdouble), p) * w_ge
    k = int(np.argmax(cand))
    vmax = float(vals[0])
    floor = vmax / 10.0
    n_decade = int(np.sum(vals > floor))
    floor_w = float(w_ge[n_decade - 1])
    tail = TailSummary(vmax, floor, floor_w, float(floor ** p * floor_w), n_decade)
    return WeakNormResult(
        float(cand[k]), p, float(vals[k]), spectrum.total_weight,
        spectrum.zero_weight, "dense", vals, cand.astype(np.float64), tail,
    )


def _refine_bucket(values: np.ndarray, weights: np.ndarray, above: np.longdouble,
                   p: float) -> tuple[float, float]:
    """Exact sup of lam^p W(lam) restricted to one bucket's distinct values.

    ``above`` is the exact weight of spectrum entries in higher buckets.
    """
    order = np.argsort(-values, kind="stable")
    v = values[order]
    w = weights[order]
    cum_w = above + np.cumsum(w.astype(np.longdouble))
    ends = np.flatnonzero(v[1:] != v[:-1])
    ends = np.append(ends, v.size - 1)
    cand = _power(v[ends].astype(np.longdouble), p) * cum_w[ends]
    k = int(np.argmax(cand))
    return float(cand[k]), float(v[ends][k])


def _weak_norm_bucketed(spectrum: BucketedSpectrum, p: float) -> WeakNormResult:
    bw = spectrum.bucket_weights.astype(np.longdouble)
    if not np.any(bw > 0):
        return _empty_result(spectrum, p)
    edges = spectrum.edges
    m = bw.size
    suffix = np.cumsum(bw[::-1])[::-1]                 # weight of {q >= edges[k]}
    suffix = np.append(suffix, np.longdouble(0.0))
    hi = np.append(edges[1:-1], edges[-1])             # per-bucket upper value bound
    lo = edges[:-1]
    nonempty = spectrum.bucket_weights > 0.0
    upper = _power(hi.astype(np.longdouble), p) * suffix[:-1]
    lower = np.where(nonempty, _power(lo.astype(np.longdouble), p) * suffix[:-1],
                     np.longdouble(0.0))
    best_lower = np.max(lower)
    contenders = nonempty & (upper >= best_lower)
    need_scan = contenders & (hi > lo)
    exact_only = contenders & ~need_scan               # zero-width: all values == lo

    engine = spectrum._engine
    space, index, values = spectrum._space, spectrum._index, spectrum._values
    vmax = spectrum.max_value
    floor = vmax / 10.0
    scan_set = np.flatnonzero(need_scan)

    def work(block):
        lo_c, hi_c = block
        q, w, _, _ = _quotient_block(space, index, values, spectrum.s, spectrum.r,
                                     lo_c, hi_c)
        idx = np.searchsorted(edges[1:-1], q, side="right")
        keep = need_scan[idx]
        tail_w = float(np.sum(w[q > floor]))
        return q[keep], w[keep], idx[keep], tail_w

    blocks = block_ranges(space.n, engine.block_size)
    parts = map_blocks(work, blocks, engine.workers)
    tail_w = neumaier_sum(p_[3] for p_ in parts)
    if scan_set.size:
        picked = sum(p_[0].size for p_ in parts)
        if picked > engine.dense_cap:
            raise RuntimeError(
                f"bucket refinement would materialise {picked} entries; "
                "raise EngineParams.n_buckets for this spectrum"
            )
        all_q = np.concatenate([p_[0] for p_ in parts])
        all_w = np.concatenate([p_[1] for p_ in parts])
        all_idx = np.concatenate([p_[2] for p_ in parts])
    else:
        all_q = all_w = all_idx = np.empty(0)

    best_val, best_lam = -np.inf, 0.0
    prof_v, prof_c = [], []
    for k in np.flatnonzero(exact_only):
        cand = float(_power(np.longdouble(edges[k]), p) * suffix[k])
        prof_v.append(float(edges[k]))
        prof_c.append(cand)
        if cand > best_val:
            best_val, best_lam = cand, float(edges[k])
    for k in scan_set:
        sel = all_idx == k
        cand, lam = _refine_bucket(all_q[sel], all_w[sel], suffix[k + 1], p)
        prof_v.append(lam)
        prof_c.append(cand)
        if cand > best_val:
            best_val, best_lam = cand, lam

    # Exact profile at bucket edges: W(>= edges[k]) == suffix[k] by construction.
    edge_vals = edges[1:][::-1]
    edge_cand = (_power(edge_vals.astype(np.longdouble), p)
                 * suffix[1:][::-1]).astype(np.float64)
    prof_vals = np.concatenate([np.asarray(prof_v), edge_vals])
    prof_cand = np.concatenate([np.asarray(prof_c), edge_cand])
    order = np.argsort(-prof_vals, kind="stable")
    tail = TailSummary(vmax, floor, float(tail_w), float(floor ** p * tail_w), None)
    return WeakNormResult(
        best_val, p, best_lam, spectrum.total_weight, spectrum.zero_weight,
        "bucketed", prof_vals[order], prof_cand[order], tail,
    )


def weak_norm(spectrum, p: float) -> WeakNormResult:
    """Exact sup_{lam>0} lam^p W(lam) of a quotient spectrum.

    Dense spectra use the single descending scan; bucketed spectra refine
    every bucket whose upper envelope could beat the best lower envelope,
    so the returned value is exact in both modes.
    """
    if not (p >= 1.0) or not np.isfinite(p):
        raise ValueError("p must be a finite exponent >= 1")
    if isinstance(spectrum, DenseSpectrum):
        return _weak_norm_dense(spectrum, p)
    if isinstance(spectrum, BucketedSpectrum):
        return _weak_norm_bucketed(spectrum, p)
    raise TypeError(f"unsupported spectrum type {type(spectrum)!r}")
