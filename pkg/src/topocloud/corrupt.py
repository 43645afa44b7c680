"""Seeded point cloud corruptions at two severities.

Severity constants are defined here, not taken from an external benchmark.
Lengths scale with the cloud's bounding-box diagonal. Clouds are never
re-normalized after corruption.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .pc_io import PointCloud

KINDS = ("uniform_downsample", "uniform_noise", "gaussian_noise", "upsample",
         "rotation", "shear", "impulse")
SEVERITIES = ("low", "high")

# kind -> (low, high)
SEVERITY_TABLE = {
    "uniform_downsample": (0.10, 0.30),   # fraction of points removed
    "gaussian_noise": (0.01, 0.05),       # sigma / diagonal
    "uniform_noise": (0.01, 0.05),        # half-width / diagonal
    "upsample": (0.10, 0.50),             # fraction of points added
    "rotation": (15.0, 180.0),            # max angle, degrees
    "shear": (0.05, 0.25),                # max off-diagonal entry
    "impulse": (0.01, 0.10),              # fraction of points displaced
}
IMPULSE_AMPLITUDE = 0.3                   # displacement half-width / diagonal


def _normalize_kind(kind: str) -> str:
    k = kind.strip().lower().replace("-", "_")
    aliases = {"downsample": "uniform_downsample", "uniformdownsample": "uniform_downsample",
               "uniformnoise": "uniform_noise", "gaussiannoise": "gaussian_noise",
               "gaussian": "gaussian_noise", "uniform": "uniform_noise", "rotate": "rotation"}
    k = aliases.get(k, k)
    if k not in KINDS:
        raise ValueError(f"unknown corruption {kind!r}; choose from {', '.join(KINDS)}")
    return k


@dataclass(frozen=True)
class CorruptionSpec:
    kind: str
    severity: str = "low"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "kind", _normalize_kind(self.kind))
        sev = self.severity.lower()
        if sev not in SEVERITIES:
            raise ValueError(f"severity must be one of {SEVERITIES}")
        object.__setattr__(self, "severity", sev)

    @property
    def parameter(self) -> float:
        return SEVERITY_TABLE[self.kind][SEVERITIES.index(self.severity)]


def bbox_diagonal(points: np.ndarray) -> float:
    return float(np.linalg.norm(points.max(axis=0) - points.min(axis=0)))


def rotation_matrix(axis, angle: float) -> np.ndarray:
    """Rodrigues rotation about a unit ``axis`` by ``angle`` radians."""
    a = np.asarray(axis, dtype=np.float64)
    a = a / np.linalg.norm(a)
    k = np.array([[0.0, -a[2], a[1]], [a[2], 0.0, -a[0]], [-a[1], a[0], 0.0]])
    return np.eye(3) + math.sin(angle) * k + (1.0 - math.cos(angle)) * (k @ k)


def rotate(cloud: PointCloud, axis, angle: float) -> PointCloud:
    if angle == 0.0:
        return cloud.with_points(cloud.points.copy())
    return cloud.with_points(cloud.points @ rotation_matrix(axis, angle).T)


def output_size(n: int, spec: CorruptionSpec) -> int:
    if spec.kind == "uniform_downsample":
        return max(1, int(round((1.0 - spec.parameter) * n)))
    if spec.kind == "upsample":
        return n + int(round(spec.parameter * n))
    return n


def apply_corruption(cloud: PointCloud, spec: CorruptionSpec) -> PointCloud:
    rng = np.random.default_rng(spec.seed)
    pts = cloud.points
    n = len(pts)
    diag = bbox_diagonal(pts)
    p = spec.parameter

    if spec.kind == "uniform_downsample":
        keep = np.sort(rng.choice(n, size=output_size(n, spec), replace=False))
        out = pts[keep]
    elif spec.kind == "gaussian_noise":
        out = pts + rng.normal(0.0, p * diag, size=pts.shape)
    elif spec.kind == "uniform_noise":
        out = pts + rng.uniform(-p * diag, p * diag, size=pts.shape)
    elif spec.kind == "upsample":
        extra = output_size(n, spec) - n
        src = pts[rng.integers(0, n, size=extra)]
        jitter_sigma = SEVERITY_TABLE["gaussian_noise"][0] * diag
        out = np.vstack([pts, src + rng.normal(0.0, jitter_sigma, size=src.shape)])
    elif spec.kind == "rotation":
        axis = rng.normal(size=3)
        angle = math.radians(rng.uniform(-p, p))
        return rotate(cloud, axis, angle)
    elif spec.kind == "shear":
        m = np.eye(3)
        off = ~np.eye(3, dtype=bool)
        m[off] = rng.uniform(-p, p, size=6)
        out = pts @ m.T
    else:  # impulse
        k = max(1, int(round(p * n)))
        idx = rng.choice(n, size=k, replace=False)
        out = pts.copy()
        out[idx] += rng.uniform(-IMPULSE_AMPLITUDE * diag, IMPULSE_AMPLITUDE * diag, size=(k, 3))
    return cloud.with_points(out)
