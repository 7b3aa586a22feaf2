"""Deterministic point-cloud generators for the supported space kinds.

Every generator is fully determined by its arguments: random clouds use the
counter-based Philox engine keyed on an explicit seed, grids and icospheres
are exact constructions.  Weights are quadrature masses (cell volumes,
Monte-Carlo box volumes, or per-vertex spherical areas), so discrete sums
against them approximate continuum integrals.
"""
from __future__ import annotations

import numpy as np

from .mmspace import MetricMeasureSpace

__all__ = [
    "uniform_grid_1d",
    "uniform_grid_2d",
    "random_cloud",
    "torus_grid",
    "icosphere",
    "sphere_fibonacci",
    "cycle_graph",
]


def _midpoints(a: float, b: float, n: int) -> np.ndarray:
    """n cell midpoints of [a, b]; never hits the endpoints."""
    if n < 1:
        raise ValueError("need at least one cell")
    h = (b - a) / n
    return a + (np.arange(n) + 0.5) * h


def uniform_grid_1d(n: int, bounds=(-1.0, 1.0), meta: dict | None = None) -> MetricMeasureSpace:
    """Midpoint grid on an interval with Lebesgue cell weights."""
    a, b = float(bounds[0]), float(bounds[1])
    if not b > a:
        raise ValueError("bounds must satisfy a < b")
    x = _midpoints(a, b, int(n))
    w = np.full(x.shape[0], (b - a) / n)
    info = {"generator": "grid1d", "bounds": [a, b]}
    info.update(meta or {})
    return MetricMeasureSpace.euclidean(x[:, None], w, meta=info)


def uniform_grid_2d(nx: int, ny: int | None = None,
                    bounds=((-1.0, 1.0), (-1.0, 1.0)),
                    meta: dict | None = None) -> MetricMeasureSpace:
    """Midpoint product grid on a rectangle with Lebesgue cell weights."""
    ny = int(nx) if ny is None else int(ny)
    nx = int(nx)
    (ax, bx), (ay, by) = bounds
    xs = _midpoints(float(ax), float(bx), nx)
    ys = _midpoints(float(ay), float(by), ny)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    cell = (float(bx) - float(ax)) / nx * (float(by) - float(ay)) / ny
    w = np.full(pts.shape[0], cell)
    info = {"generator": "grid2d", "bounds": [[float(ax), float(bx)], [float(ay), float(by)]]}
    info.update(meta or {})
    return MetricMeasureSpace.euclidean(pts, w, meta=info)


def random_cloud(n: int, dim: int, seed: int,
                 bounds=(-1.0, 1.0), meta: dict | None = None) -> MetricMeasureSpace:
    """Uniform points in a box with equal Monte-Carlo weights vol/n.

    Philox is counter-based, so (n, dim, seed) fully determines the cloud.
    """
    a, b = float(bounds[0]), float(bounds[1])
    if not b > a:
        raise ValueError("bounds must satisfy a < b")
    rng = np.random.Generator(np.random.Philox(seed))
    pts = rng.uniform(a, b, size=(int(n), int(dim)))
    w = np.full(int(n), (b - a) ** int(dim) / int(n))
    info = {"generator": "cloud", "seed": int(seed), "bounds": [a, b]}
    info.update(meta or {})
    return MetricMeasureSpace.euclidean(pts, w, meta=info)


def torus_grid(nx: int, ny: int | None = None, periods=(1.0, 1.0),
               meta: dict | None = None) -> MetricMeasureSpace:
    """Midpoint grid on a 2-D flat torus with cell-area weights."""
    ny = int(nx) if ny is None else int(ny)
    nx = int(nx)
    px, py = float(periods[0]), float(periods[1])
    xs = _midpoints(0.0, px, nx)
    ys = _midpoints(0.0, py, ny)
    xx, yy = np.meshgrid(xs, ys, indexing="ij")
    pts = np.column_stack([xx.ravel(), yy.ravel()])
    w = np.full(pts.shape[0], (px / nx) * (py / ny))
    info = {"generator": "torus2d", "periods": [px, py]}
    info.update(meta or {})
    return MetricMeasureSpace.flat_torus(pts, w, (px, py), meta=info)


def _icosahedron() -> tuple[np.ndarray, list[tuple[int, int, int]]]:
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    v = [
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ]
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = np.array(v, dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    return verts, faces


def _spherical_triangle_area(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> float:
    """Area of the unit-sphere triangle with unit-vector corners (L'Huilier)."""
    la = np.arccos(np.clip(np.dot(b, c), -1.0, 1.0))
    lb = np.arccos(np.clip(np.dot(a, c), -1.0, 1.0))
    lc = np.arccos(np.clip(np.dot(a, b), -1.0, 1.0))
    s = 0.5 * (la + lb + lc)
    inner = (np.tan(0.5 * s) * np.tan(0.5 * (s - la))
             * np.tan(0.5 * (s - lb)) * np.tan(0.5 * (s - lc)))
    return float(4.0 * np.arctan(np.sqrt(max(inner, 0.0))))


def icosphere(level: int, radius: float = 1.0, meta: dict | None = None) -> MetricMeasureSpace:
    """Subdivided icosahedron: 10 * 4**level + 2 near-uniform sphere points.

    Each vertex carries one third of the spherical area of its incident
    triangles, so the weights sum to the full sphere area and serve as a
    quadrature rule.  Levels 4 and 5 give 2562 and 10242 points.
    """
    level = int(level)
    if level < 0:
        raise ValueError("level must be nonnegative")
    verts, faces = _icosahedron()
    verts = [tuple(v) for v in verts]
    for _ in range(level):
        cache: dict[tuple[int, int], int] = {}

        def midpoint(i: int, j: int) -> int:
            key = (min(i, j), max(i, j))
            if key not in cache:
                m = np.asarray(verts[i]) + np.asarray(verts[j])
                m /= np.linalg.norm(m)
                cache[key] = len(verts)
                verts.append(tuple(m))
            return cache[key]

        new_faces = []
        for (i, j, k) in faces:
            ij, jk, ki = midpoint(i, j), midpoint(j, k), midpoint(k, i)
            new_faces += [(i, ij, ki), (j, jk, ij), (k, ki, jk), (ij, jk, ki)]
        faces = new_faces
    unit = np.asarray(verts)
    w = np.zeros(unit.shape[0])
    for (i, j, k) in faces:
        area = _spherical_triangle_area(unit[i], unit[j], unit[k]) / 3.0
        w[i] += area
        w[j] += area
        w[k] += area
    w *= float(radius) ** 2
    info = {"generator": "icosphere", "level": level}
    info.update(meta or {})
    return MetricMeasureSpace.sphere(unit * radius, w, radius=float(radius), meta=info)


def sphere_fibonacci(n: int, radius: float = 1.0, meta: dict | None = None) -> MetricMeasureSpace:
    """Fibonacci-spiral sphere points with equal area weights.

    Less uniform than :func:`icosphere` but works for any point count.
    """
    n = int(n)
    if n < 2:
        raise ValueError("need at least two points")
    k = np.arange(n)
    z = 1.0 - (2.0 * k + 1.0) / n
    theta = np.pi * (1.0 + np.sqrt(5.0)) * k
    rho = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pts = np.column_stack([rho * np.cos(theta), rho * np.sin(theta), z])
    w = np.full(n, 4.0 * np.pi * float(radius) ** 2 / n)
    info = {"generator": "sphere-fibonacci"}
    info.update(meta or {})
    return MetricMeasureSpace.sphere(pts * radius, w, radius=float(radius), meta=info)


def cycle_graph(n: int, edge_length: float = 1.0, meta: dict | None = None) -> MetricMeasureSpace:
    """Cycle graph with unit masses; handy smoke-test graph space."""
    n = int(n)
    edges = [(i, (i + 1) % n, float(edge_length)) for i in range(n)]
    info = {"generator": "cycle-graph"}
    info.update(meta or {})
    return MetricMeasureSpace.graph(n, edges, np.ones(n), meta=info)
