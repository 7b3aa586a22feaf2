"""Finite metric measure spaces with exact open-ball semantics.

This module provides the substrate every other module builds on:

* :class:`MetricMeasureSpace` -- N points with positive masses and one of four
  metrics (Euclidean, great-circle on a sphere, flat torus, weighted-graph
  shortest path).
* :class:`DistanceIndex` -- per-center sorted distance rows with cumulative
  mass prefix sums, giving O(log N) ball-measure queries and vectorised
  "volume rows" V(i, j) = mu(B(x_i, rho(x_i, x_j))) for the pair kernels.
* :func:`doubling_estimate` and :func:`metric_axiom_check` -- empirical
  doubling ratios and sampled metric-axiom validation.

Balls are always open: B(x, r) = {y : rho(x, y) < r}.  Points at distance
exactly r are excluded, the center itself always counts (rho = 0 < r for any
r > 0).  Volume rows are centered at the FIRST index of a pair and are not
symmetric in general.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import shortest_path
from scipy.spatial.distance import cdist

__all__ = [
    "MetricMeasureSpace",
    "DistanceIndex",
    "doubling_estimate",
    "metric_axiom_check",
    "median_nn_spacing",
]

_KINDS = ("euclidean", "sphere", "flat-torus", "graph")


def _as_float_matrix(points) -> np.ndarray:
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValueError("points must be a nonempty (N, d) array")
    if not np.all(np.isfinite(pts)):
        raise ValueError("points must be finite")
    return pts


def _check_weights(weights, n: int) -> np.ndarray:
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,):
        raise ValueError(f"weights must have shape ({n},), got {w.shape}")
    if not np.all(np.isfinite(w)) or np.any(w <= 0.0):
        raise ValueError("weights must be finite and strictly positive")
    return w


def _reject_duplicate_rows(pts: np.ndarray, what: str) -> None:
    """Reject exact duplicate coordinate rows (they would give rho = 0)."""
    order = np.lexsort(pts.T[::-1])
    sorted_pts = pts[order]
    same = np.all(sorted_pts[1:] == sorted_pts[:-1], axis=1)
    if np.any(same):
        k = int(np.argmax(same))
        i, j = int(order[k]), int(order[k + 1])
        raise ValueError(
            f"duplicate {what} at indices {min(i, j)} and {max(i, j)}: "
            "distinct points must have positive distance"
        )


@dataclass
class MetricMeasureSpace:
    """N weighted points under one of the supported metrics.

    Use the classmethod constructors (:meth:`euclidean`, :meth:`sphere`,
    :meth:`flat_torus`, :meth:`graph`); they validate inputs and normalise
    coordinates.  Instances are treated as immutable after construction.

    Attributes
    ----------
    kind : str
        One of ``euclidean``, ``sphere``, ``flat-torus``, ``graph``.
    points : np.ndarray
        (N, d) coordinates.  For graph spaces this is an (N, 0) placeholder.
    weights : np.ndarray
        (N,) strictly positive point masses.
    """

    kind: str
    points: np.ndarray
    weights: np.ndarray
    radius: float = 0.0                     # sphere only
    periods: np.ndarray | None = None       # flat-torus only
    graph_distances: np.ndarray | None = None  # graph only
    meta: dict = field(default_factory=dict)

    # -- constructors -----------------------------------------------------

    @classmethod
    def euclidean(cls, points, weights, meta: dict | None = None) -> "MetricMeasureSpace":
        pts = _as_float_matrix(points)
        w = _check_weights(weights, pts.shape[0])
        _reject_duplicate_rows(pts, "points")
        return cls("euclidean", pts, w, meta=meta or {})

    @classmethod
    def sphere(cls, points, weights, radius: float = 1.0,
               meta: dict | None = None) -> "MetricMeasureSpace":
        """Points on the sphere of the given radius; great-circle metric.

        Input coordinates are re-projected onto the sphere, so small radial
        drift from upstream generators is harmless.
        """
        pts = _as_float_matrix(points)
        if pts.shape[1] != 3:
            raise ValueError("sphere points must be (N, 3)")
        if not radius > 0.0:
            raise ValueError("sphere radius must be positive")
        norms = np.linalg.norm(pts, axis=1)
        if np.any(norms == 0.0):
            raise ValueError("sphere points must be nonzero vectors")
        unit = pts / norms[:, None]
        _reject_duplicate_rows(unit, "sphere points")
        w = _check_weights(weights, pts.shape[0])
        return cls("sphere", unit * radius, w, radius=float(radius), meta=meta or {})

    @classmethod
    def flat_torus(cls, points, weights, periods,
                   meta: dict | None = None) -> "MetricMeasureSpace":
        pts = _as_float_matrix(points)
        per = np.asarray(periods, dtype=np.float64)
        if per.ndim == 0:
            per = np.full(pts.shape[1], float(per))
        if per.shape != (pts.shape[1],) or np.any(per <= 0.0):
            raise ValueError("periods must be positive, one per coordinate axis")
        pts = np.mod(pts, per)
        _reject_duplicate_rows(pts, "torus points")
        w = _check_weights(weights, pts.shape[0])
        return cls("flat-torus", pts, w, periods=per, meta=meta or {})

    @classmethod
    def graph(cls, n: int, edges, weights, meta: dict | None = None) -> "MetricMeasureSpace":
        """Shortest-path metric on an undirected graph with positive edge lengths.

        Parameters
        ----------
        n : int
            Number of vertices.
        edges : sequence of (i, j, length)
            Undirected edges; lengths must be positive.  The all-pairs table
            is computed once here and reused for every query.
        """
        n = int(n)
        if n <= 0:
            raise ValueError("graph must have at least one vertex")
        ii, jj, ll = [], [], []
        for (i, j, length) in edges:
            i, j, length = int(i), int(j), float(length)
            if not (0 <= i < n and 0 <= j < n):
                raise ValueError(f"edge ({i}, {j}) out of range for n={n}")
            if i == j:
                raise ValueError(f"self-loop at vertex {i} is not allowed")
            if not (length > 0.0 and np.isfinite(length)):
                raise ValueError(f"edge ({i}, {j}) must have positive finite length")
            ii.append(i)
            jj.append(j)
            ll.append(length)
        graph = coo_matrix((ll, (ii, jj)), shape=(n, n)).tocsr()
        dist = shortest_path(graph, method="auto", directed=False)
        if n > 1 and not np.all(np.isfinite(dist)):
            raise ValueError("graph must be connected")
        off = dist[~np.eye(n, dtype=bool)]
        if off.size and np.any(off <= 0.0):
            raise ValueError("duplicate vertices: zero shortest-path distance found")
        w = _check_weights(weights, n)
        info = dict(meta or {})
        info.setdefault("edges", [[i, j, length] for i, j, length in zip(ii, jj, ll)])
        return cls("graph", np.empty((n, 0)), w, graph_distances=dist, meta=info)

    # -- basic queries -----------------------------------------------------

    @property
    def n(self) -> int:
        return self.points.shape[0] if self.kind != "graph" else self.graph_distances.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    def distance_rows(self, centers) -> np.ndarray:
        """Distances from each listed center to every point, shape (B, N)."""
        idx = np.atleast_1d(np.asarray(centers, dtype=np.intp))
        if self.kind == "euclidean":
            return cdist(self.points[idx], self.points)
        if self.kind == "sphere":
            unit = self.points / self.radius
            cosang = np.clip(unit[idx] @ unit.T, -1.0, 1.0)
            d = self.radius * np.arccos(cosang)
            d[np.arange(idx.size), idx] = 0.0    # self dot may round below 1
            return d
        if self.kind == "flat-torus":
            delta = np.abs(self.points[idx][:, None, :] - self.points[None, :, :])
            delta = np.minimum(delta, self.periods[None, None, :] - delta)
            return np.sqrt(np.sum(delta * delta, axis=2))
        return np.array(self.graph_distances[idx], dtype=np.float64)

    def distance_row(self, i: int) -> np.ndarray:
        return self.distance_rows([i])[0]

    def distance(self, i: int, j: int) -> float:
        return float(self.distance_row(i)[j])

    def distances_to_coords(self, coords) -> np.ndarray:
        """Distances from an arbitrary coordinate point to every sample point.

        Supported for the coordinate metrics (not graphs); used to center
        gallery fields at exact analytic locations that need not coincide
        with a sample point.
        """
        c = np.asarray(coords, dtype=np.float64).reshape(-1)
        if self.kind == "euclidean":
            if c.shape != (self.dim,):
                raise ValueError(f"expected a {self.dim}-vector")
            return np.linalg.norm(self.points - c[None, :], axis=1)
        if self.kind == "sphere":
            if c.shape != (3,):
                raise ValueError("expected a 3-vector on the sphere")
            nc = np.linalg.norm(c)
            if nc == 0.0:
                raise ValueError("sphere center must be a nonzero vector")
            unit = self.points / self.radius
            cosang = np.clip(unit @ (c / nc), -1.0, 1.0)
            return self.radius * np.arccos(cosang)
        if self.kind == "flat-torus":
            if c.shape != (self.dim,):
                raise ValueError(f"expected a {self.dim}-vector")
            delta = np.abs(self.points - np.mod(c, self.periods)[None, :])
            delta = np.minimum(delta, self.periods[None, :] - delta)
            return np.sqrt(np.sum(delta * delta, axis=1))
        raise ValueError("graph spaces have no ambient coordinates; use a vertex index")

    def ball_measure(self, center: int, r: float) -> float:
        """mu(B(center, r)) by a naive O(N) scan; the reference implementation."""
        if r <= 0.0:
            raise ValueError("ball radius must be positive")
        d = self.distance_row(int(center))
        return float(np.sum(self.weights[d < r]))

    def pair_volume(self, i: int, j: int) -> float:
        """V(i, j) = mu(B(x_i, rho(x_i, x_j))); asymmetric, centered at i."""
        if int(i) == int(j):
            raise ValueError("V(i, i) is undefined; the diagonal is excluded")
        return self.ball_measure(i, self.distance(i, j))

    def bounding_box(self) -> tuple[np.ndarray, np.ndarray] | None:
        """Data bounding box for euclidean spaces, None for the others."""
        if self.kind != "euclidean":
            return None
        return self.points.min(axis=0), self.points.max(axis=0)

    def describe(self) -> dict:
        out = {"kind": self.kind, "n": self.n, "total_weight": self.total_weight}
        if self.kind == "sphere":
            out["radius"] = self.radius
        if self.kind == "flat-torus":
            out["periods"] = [float(p) for p in self.periods]
        if self.kind != "graph":
            out["dim"] = self.dim
        out.update(self.meta)
        return out


class DistanceIndex:
    """Sorted distance rows with mass prefix sums for one space.

    ``row(i)`` returns ``(sorted_d, cum_w)`` where ``sorted_d`` is the
    ascending distance row from center i (``sorted_d[0] == 0`` is the center
    itself) and ``cum_w[k]`` is the total mass of the k+1 nearest points.
    Ball measures then reduce to one binary search; ties at the query radius
    fall outside the open ball by the ``side='left'`` convention.

    Rows are precomputed and cached when the full table fits the cache
    budget (20 bytes per ordered pair: distances, prefix sums, and the sort
    permutation), otherwise computed on demand; results are identical either
    way.  The cache is built in row blocks so peak memory stays near the
    final footprint.
    """

    def __init__(self, space: MetricMeasureSpace, cache_bytes: int = 2 ** 31):
        self.space = space
        n = space.n
        self._cached: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None
        if 20 * n * n <= cache_bytes:
            ds = np.empty((n, n))
            cw = np.empty((n, n))
            od = np.empty((n, n), dtype=np.int32)
            for lo in range(0, n, 1024):
                hi = min(lo + 1024, n)
                s, c, o = self._process(space.distance_rows(np.arange(lo, hi)))
                ds[lo:hi] = s
                cw[lo:hi] = c
                od[lo:hi] = o
            self._cached = (ds, cw, od)

    def _process(self, d_block: np.ndarray):
        """Sort a block of distance rows and attach mass prefix sums.

        Returns ``(sorted_d, cum_w, order)`` with shapes (B, N); ``order`` is
        the stable argsort permutation (needed by volume rows).
        """
        order = np.argsort(d_block, axis=1, kind="stable")
        sorted_d = np.take_along_axis(d_block, order, axis=1)
        w_sorted = self.space.weights[order]
        cum_w = np.cumsum(w_sorted, axis=1)
        return sorted_d, cum_w, order

    def row(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        if self._cached is not None:
            return self._cached[0][i], self._cached[1][i]
        ds, cw, _ = self._process(self.space.distance_rows([i]))
        return ds[0], cw[0]

    def ball_measure(self, center: int, r: float) -> float:
        if r <= 0.0:
            raise ValueError("ball radius must be positive")
        sorted_d, cum_w = self.row(int(center))
        k = int(np.searchsorted(sorted_d, r, side="left"))
        return float(cum_w[k - 1]) if k > 0 else 0.0

    def pair_volume(self, i: int, j: int) -> float:
        if int(i) == int(j):
            raise ValueError("V(i, i) is undefined; the diagonal is excluded")
        return self.ball_measure(i, self.space.distance(i, j))

    def nearest_distance(self, i: int) -> float:
        """Distance from point i to its nearest neighbour."""
        sorted_d, _ = self.row(int(i))
        if sorted_d.shape[0] < 2:
            return np.inf
        return float(sorted_d[1])

    def volume_rows(self, centers) -> tuple[np.ndarray, np.ndarray]:
        """Distance rows and volume rows for a block of centers.

        Returns ``(d, V)`` of shape (B, N) in original point order:
        ``V[b, j] = mu(B(x_c, d[b, j]))`` for center ``c = centers[b]`` --
        the mass strictly closer to the center than point j.  ``V[b, c]`` is
        0 (radius-zero ball) and is ignored by the pair kernels.
        """
        idx = np.atleast_1d(np.asarray(centers, dtype=np.intp))
        if self._cached is not None:
            lo, hi = int(idx[0]), int(idx[-1]) + 1
            if hi - lo == idx.shape[0] and np.array_equal(idx, np.arange(lo, hi)):
                sorted_d = self._cached[0][lo:hi]
                cum_w = self._cached[1][lo:hi]
                order = self._cached[2][lo:hi]
            else:
                sorted_d = self._cached[0][idx]
                cum_w = self._cached[1][idx]
                order = self._cached[2][idx]
            d_block = np.empty_like(sorted_d)
            np.put_along_axis(d_block, order, sorted_d, axis=1)
        else:
            d_block = self.space.distance_rows(idx)
            sorted_d, cum_w, order = self._process(d_block)
        b, n = sorted_d.shape
        # Mass strictly below each sorted position: back ties up to the start
        # of their equal-distance run, then take the exclusive prefix there.
        fresh = np.empty((b, n), dtype=np.intp)
        fresh[:, 0] = 0
        cols = np.arange(1, n)
        fresh[:, 1:] = np.where(sorted_d[:, 1:] != sorted_d[:, :-1], cols, 0)
        group_start = np.maximum.accumulate(fresh, axis=1)
        w_sorted = self.space.weights[order]
        excl = cum_w - w_sorted
        v_sorted = np.take_along_axis(excl, group_start, axis=1)
        v = np.empty_like(v_sorted)
        np.put_along_axis(v, order, v_sorted, axis=1)
        return d_block, v


def median_nn_spacing(space: MetricMeasureSpace, index: DistanceIndex | None = None,
                      block_size: int = 512) -> float:
    """Median nearest-neighbour distance; the natural resolution scale h."""
    index = index or DistanceIndex(space)
    n = space.n
    if n < 2:
        raise ValueError("need at least two points")
    if index._cached is not None:
        return float(np.median(index._cached[0][:, 1]))
    nn = np.empty(n)
    for lo in range(0, n, block_size):
        hi = min(lo + block_size, n)
        d = space.distance_rows(np.arange(lo, hi))
        d[np.arange(hi - lo), np.arange(lo, hi)] = np.inf
        nn[lo:hi] = d.min(axis=1)
    return float(np.median(nn))


def doubling_estimate(space: MetricMeasureSpace, index: DistanceIndex,
                      radii, centers=None, mass_floor: float = 0.0) -> float:
    """Empirical doubling ratio L = max mu(B(x, 2r)) / mu(B(x, r)).

    The max runs over the sampled (center, radius) pairs whose inner ball
    carries at least ``mass_floor``; pairs below the floor are skipped.
    Returns 1.0 when no pair qualifies (a lone point dominates any ratio).
    """
    if centers is None:
        centers = np.arange(space.n)
    best = 1.0
    for c in np.asarray(centers, dtype=np.intp):
        sorted_d, cum_w = index.row(int(c))
        for r in np.atleast_1d(radii):
            r = float(r)
            if r <= 0.0:
                continue
            k = int(np.searchsorted(sorted_d, r, side="left"))
            inner = float(cum_w[k - 1]) if k > 0 else 0.0
            if inner < mass_floor or inner <= 0.0:
                continue
            k2 = int(np.searchsorted(sorted_d, 2.0 * r, side="left"))
            outer = float(cum_w[k2 - 1]) if k2 > 0 else 0.0
            best = max(best, outer / inner)
    return best


def metric_axiom_check(space: MetricMeasureSpace, n_triples: int = 1000,
                       seed: int = 0) -> float:
    """Max metric-axiom violation over sampled triples (0.0 means clean).

    Checks symmetry, identity-of-indiscernibles (positive off-diagonal
    distances, zero self-distance) and the triangle inequality, all scaled
    by the largest distance in the sampled triple.
    """
    rng = np.random.Generator(np.random.Philox(seed))
    n = space.n
    worst = 0.0
    for _ in range(int(n_triples)):
        i, j, k = (int(v) for v in rng.integers(0, n, size=3))
        di = space.distance_row(i)
        dj = space.distance_row(j)
        scale = max(di[j], di[k], dj[k], 1e-300)
        worst = max(worst, abs(di[j] - dj[i]) / scale)
        worst = max(worst, abs(di[i]) / scale)
        if i != j and di[j] <= 0.0:
            return np.inf
        worst = max(worst, (di[k] - (di[j] + dj[k])) / scale)
    return worst
