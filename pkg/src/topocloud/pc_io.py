"""Point cloud and triangle mesh I/O, plus area-weighted surface sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np


class ParseError(ValueError):
    """Malformed XYZ/OFF input. ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    label: Optional[str] = None

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 3:
            raise ValueError(f"points must have shape (n, 3), got {pts.shape}")
        if len(pts) == 0:
            raise ValueError("point cloud must contain at least one point")
        if not np.all(np.isfinite(pts)):
            raise ValueError("point cloud contains non-finite coordinates")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return len(self.points)

    def with_points(self, points: np.ndarray) -> "PointCloud":
        return PointCloud(points, self.label)


@dataclass(frozen=True)
class TriangleMesh:
    vertices: np.ndarray
    faces: np.ndarray = field(repr=False)

    def __post_init__(self):
        verts = np.ascontiguousarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.ascontiguousarray(self.faces, dtype=np.int64).reshape(-1, 3)
        if len(faces) == 0:
            raise ValueError("mesh has no faces")
        if faces.min() < 0 or faces.max() >= len(verts):
            raise ValueError("face index out of range")
        if not np.any(self.areas() > 0):
            raise ValueError("mesh has no face with positive area")
        verts.setflags(write=False)
        faces.setflags(write=False)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "faces", faces)

    def areas(self) -> np.ndarray:
        verts = np.asarray(self.vertices, dtype=np.float64).reshape(-1, 3)
        faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        a, b, c = (verts[faces[:, i]] for i in range(3))
        return 0.5 * np.linalg.norm(np.cross(b - a, c - a), axis=1)


def load_xyz(path, label: Optional[str] = None) -> PointCloud:
    """Read an ASCII XYZ file: one point per line, ``#`` comments, extra columns ignored."""
    rows = []
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            fields = line.replace(",", " ").split()
            if len(fields) < 3:
                raise ParseError("expected at least 3 numeric fields", lineno)
            try:
                xyz = [float(v) for v in fields[:3]]
            except ValueError:
                raise ParseError(f"non-numeric coordinate in {line!r}", lineno) from None
            if not all(np.isfinite(xyz)):
                raise ParseError("non-finite coordinate", lineno)
            rows.append(xyz)
    if not rows:
        raise ParseError("no points found")
    return PointCloud(np.array(rows), label)


def save_xyz(cloud: PointCloud, path) -> None:
    with open(path, "w") as fh:
        for x, y, z in cloud.points.tolist():
            fh.write(f"{x!r} {y!r} {z!r}\n")


def _off_tokens(path):
    # yields (lineno, tokens) for non-empty, non-comment lines
    with open(path, "r") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def load_off(path) -> TriangleMesh:
    """Read an ASCII OFF mesh. Polygons with more than three vertices are fan-triangulated."""
    lines = _off_tokens(path)
    try:
        lineno, toks = next(lines)
    except StopIteration:
        raise ParseError("empty OFF file") from None
    # ModelNet ships some files with the counts glued to the header, e.g. "OFF490 518 0"
    if toks[0] == "OFF":
        toks = toks[1:]
    elif toks[0].startswith("OFF") and toks[0][3:].isdigit():
        toks = [toks[0][3:]] + toks[1:]
    else:
        raise ParseError("missing OFF header", lineno)
    if not toks:
        try:
            lineno, toks = next(lines)
        except StopIteration:
            raise ParseError("missing counts line") from None
    try:
        n_verts, n_faces = int(toks[0]), int(toks[1])
    except (ValueError, IndexError):
        raise ParseError("malformed counts line", lineno) from None

    verts = np.empty((n_verts, 3))
    for i in range(n_verts):
        try:
            lineno, toks = next(lines)
            verts[i] = [float(t) for t in toks[:3]]
        except StopIteration:
            raise ParseError(f"expected {n_verts} vertices, found {i}") from None
        except ValueError:
            raise ParseError("malformed vertex", lineno) from None

    tris = []
    for i in range(n_faces):
        try:
            lineno, toks = next(lines)
        except StopIteration:
            raise ParseError(f"expected {n_faces} faces, found {i}") from None
        try:
            k = int(toks[0])
            idx = [int(t) for t in toks[1:1 + k]]
        except ValueError:
            raise ParseError("malformed face", lineno) from None
        if k < 3 or len(idx) != k:
            raise ParseError("face needs at least 3 vertex indices", lineno)
        bad = [j for j in idx if j < 0 or j >= n_verts]
        if bad:
            raise ParseError(f"face index {bad[0]} out of range for {n_verts} vertices", lineno)
        for j in range(1, k - 1):
            tris.append((idx[0], idx[j], idx[j + 1]))
    return TriangleMesh(verts, np.array(tris, dtype=np.int64))


def sample_mesh(mesh: TriangleMesh, n: int, seed: int = 0, label: Optional[str] = None) -> PointCloud:
    """Draw ``n`` points uniformly over the mesh surface.

    Triangles are picked with probability proportional to area, then a point is
    placed with the square-root barycentric trick, which is exactly uniform on
    each triangle.
    """
    if n < 1:
        raise ValueError("n must be positive")
    areas = mesh.areas()
    total = areas.sum()
    if not total > 0:
        raise ValueError("mesh has zero total area")
    rng = np.random.default_rng(seed)
    tri = rng.choice(len(areas), size=n, p=areas / total)
    r1, r2 = rng.random(n), rng.random(n)
    s = np.sqrt(r1)
    u, v, w = 1.0 - s, s * (1.0 - r2), s * r2
    f = mesh.faces[tri]
    pts = (u[:, None] * mesh.vertices[f[:, 0]]
           + v[:, None] * mesh.vertices[f[:, 1]]
           + w[:, None] * mesh.vertices[f[:, 2]])
    return PointCloud(pts, label)


def triangle_assignment(mesh: TriangleMesh, n: int, seed: int = 0) -> np.ndarray:
    """The triangle index chosen for each sample of ``sample_mesh`` with the same arguments."""
    areas = mesh.areas()
    rng = np.random.default_rng(seed)
    return rng.choice(len(areas), size=n, p=areas / areas.sum())


def load_cloud(path, n_samples: int = 2048, seed: int = 0, label: Optional[str] = None) -> PointCloud:
    """Load a cloud from ``.xyz``/``.txt``/``.pts`` or sample one from an ``.off`` mesh."""
    suffix = Path(path).suffix.lower()
    if suffix == ".off":
        return sample_mesh(load_off(path), n_samples, seed, label)
    return load_xyz(path, label)
