"""Synthetic surface clouds with distinct topology, for end-to-end checks.

Sizes are chosen so that ~1000 points cover the surface densely at voxel size
0.05: a sphere (one cavity), a torus (two loops and a cavity) and two disjoint
spheres (two components, two cavities).
"""

from __future__ import annotations

import numpy as np

from .pc_io import PointCloud

SHAPES = ("sphere", "torus", "two_balls")


def _unit_sphere(rng, n):
    v = rng.normal(size=(n, 3))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _random_rotation(rng):
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q


def sphere(rng, n, radius=0.26):
    return radius * _unit_sphere(rng, n)


def torus(rng, n, major=0.25, minor=0.1):
    # rejection sampling gives area-uniform points on the torus
    pts = []
    while sum(len(p) for p in pts) < n:
        u = rng.uniform(0, 2 * np.pi, 2 * n)
        v = rng.uniform(0, 2 * np.pi, 2 * n)
        keep = rng.uniform(0, major + minor, 2 * n) < major + minor * np.cos(v)
        u, v = u[keep], v[keep]
        pts.append(np.column_stack([(major + minor * np.cos(v)) * np.cos(u),
                                    (major + minor * np.cos(v)) * np.sin(u),
                                    minor * np.sin(v)]))
    return np.vstack(pts)[:n]


def two_balls(rng, n, radius=0.18, gap=0.2):
    k = n // 2
    offset = np.array([radius + gap / 2, 0.0, 0.0])
    return np.vstack([radius * _unit_sphere(rng, k) - offset,
                      radius * _unit_sphere(rng, n - k) + offset])


def make_shape(kind: str, n: int = 1024, seed: int = 0, jitter: float = 0.1, rotate: bool = True) -> PointCloud:
    """One random instance: scale jittered by +-``jitter``, optionally randomly rotated."""
    rng = np.random.default_rng(seed)
    scale = 1.0 + rng.uniform(-jitter, jitter)
    if kind == "sphere":
        pts = sphere(rng, n)
    elif kind == "torus":
        pts = torus(rng, n)
    elif kind == "two_balls":
        pts = two_balls(rng, n)
    else:
        raise ValueError(f"unknown shape {kind!r}")
    pts = pts * scale
    if rotate:
        pts = pts @ _random_rotation(rng).T
    return PointCloud(pts, kind)


def make_dataset(per_class: int, n: int = 1024, seed: int = 0, **kw):
    """``per_class`` clouds of each shape, interleaved, with distinct seeds."""
    clouds = []
    for i in range(per_class):
        for j, kind in enumerate(SHAPES):
            clouds.append(make_shape(kind, n, seed=seed * 1_000_003 + 3 * i + j, **kw))
    return clouds
