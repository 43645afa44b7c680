"""Grayscale filtrations of binary voxel images.

All distances are in voxel-index units. Six families are supported: height
(26 directions), radial (27 grid centers), density, dilation, erosion and
signed distance.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
from scipy import ndimage

from .voxelizer import BinaryImage3D

HEIGHT = "height"
RADIAL = "radial"
DENSITY = "density"
DILATION = "dilation"
EROSION = "erosion"
SIGNED_DISTANCE = "signed_distance"
KINDS = (HEIGHT, RADIAL, DENSITY, DILATION, EROSION, SIGNED_DISTANCE)

RADIAL_FRACTIONS = (0.25, 0.5, 0.75)


@dataclass(frozen=True)
class FiltrationSpec:
    """One filtration of a bank.

    Radial filtrations take either an explicit ``center`` (voxel index) or a
    ``slot`` in 1..27 that is resolved against the image through
    :func:`radial_centers`.
    """

    kind: str
    direction: Optional[Tuple[int, int, int]] = None
    center: Optional[Tuple[int, int, int]] = None
    slot: Optional[int] = None
    radius: Optional[float] = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown filtration kind {self.kind!r}")
        if self.direction is not None:
            object.__setattr__(self, "direction", tuple(int(v) for v in self.direction))
        if self.center is not None:
            object.__setattr__(self, "center", tuple(int(v) for v in self.center))
        if self.kind == DENSITY and self.radius is None:
            object.__setattr__(self, "radius", 1.0)

        has = {"direction": self.direction is not None,
               "center/slot": self.center is not None or self.slot is not None,
               "radius": self.radius is not None}
        wanted = {HEIGHT: "direction", RADIAL: "center/slot", DENSITY: "radius"}.get(self.kind)
        for name, present in has.items():
            if present != (name == wanted):
                raise ValueError(f"{self.kind} filtration: field {name!r} "
                                 f"{'missing' if not present else 'not allowed'}")
        if self.kind == HEIGHT:
            if any(v not in (-1, 0, 1) for v in self.direction) or not any(self.direction):
                raise ValueError("height direction must be a nonzero vector in {-1,0,1}^3")
        if self.kind == RADIAL:
            if (self.center is None) == (self.slot is None):
                raise ValueError("radial filtration needs exactly one of center or slot")
            if self.slot is not None and not 1 <= self.slot <= 27:
                raise ValueError("radial slot must be in 1..27")
        if self.kind == DENSITY and not self.radius > 0:
            raise ValueError("density radius must be positive")

    def __str__(self) -> str:
        if self.kind == HEIGHT:
            return "height({},{},{})".format(*self.direction)
        if self.kind == RADIAL:
            if self.slot is not None:
                return f"radial@c{self.slot}"
            return "radial({},{},{})".format(*self.center)
        if self.kind == DENSITY:
            return f"density(r={self.radius!r})"
        return self.kind

    @classmethod
    def parse(cls, text: str) -> "FiltrationSpec":
        """Inverse of ``str(spec)``."""
        text = text.strip().replace(" ", "")
        m = re.fullmatch(r"height\((-?\d+),(-?\d+),(-?\d+)\)", text)
        if m:
            return cls(HEIGHT, direction=tuple(int(g) for g in m.groups()))
        m = re.fullmatch(r"radial@c(\d+)", text)
        if m:
            return cls(RADIAL, slot=int(m.group(1)))
        m = re.fullmatch(r"radial\((\d+),(\d+),(\d+)\)", text)
        if m:
            return cls(RADIAL, center=tuple(int(g) for g in m.groups()))
        m = re.fullmatch(r"density(?:\(r=([0-9.eE+-]+)\))?", text)
        if m:
            return cls(DENSITY, radius=float(m.group(1)) if m.group(1) else 1.0)
        if text in (DILATION, EROSION, SIGNED_DISTANCE):
            return cls(text)
        raise ValueError(f"cannot parse filtration spec {text!r}")


@dataclass(frozen=True)
class GrayscaleImage3D:
    values: np.ndarray
    spec: Optional[FiltrationSpec] = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 3:
            raise ValueError("grayscale image must be 3D")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grayscale image has non-finite values")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(int(d) for d in self.values.shape)


def height_directions() -> List[Tuple[int, int, int]]:
    return [v for v in itertools.product((-1, 0, 1), repeat=3) if any(v)]


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def radial_centers(dims) -> List[Tuple[int, int, int]]:
    """The 27 centers c1..c27: three x-slices (low, mid, high), each sorted by (y, z)."""
    per_axis = [[_round_half_up(f * (d - 1)) for f in RADIAL_FRACTIONS] for d in dims]
    return [(x, y, z) for x in per_axis[0] for y in per_axis[1] for z in per_axis[2]]


def _index_grids(dims):
    return np.meshgrid(*(np.arange(d, dtype=np.int64) for d in dims), indexing="ij")


def apply_height(img: BinaryImage3D, v) -> GrayscaleImage3D:
    v = tuple(int(c) for c in v)
    if not any(v):
        raise ValueError("direction must be nonzero")
    norm = math.sqrt(sum(c * c for c in v))
    dims = img.dims
    ix, iy, iz = _index_grids(dims)
    dot = v[0] * ix + v[1] * iy + v[2] * iz
    lo = sum(min(0, c * (d - 1)) for c, d in zip(v, dims))
    hi = sum(max(0, c * (d - 1)) for c, d in zip(v, dims))
    shifted = (dot - lo) / norm
    top = (hi - lo) / norm
    values = np.where(img.voxels, shifted, top + 1.0)
    return GrayscaleImage3D(values, FiltrationSpec(HEIGHT, direction=v))


def apply_radial(img: BinaryImage3D, c, spec: Optional[FiltrationSpec] = None) -> GrayscaleImage3D:
    c = tuple(int(k) for k in c)
    dims = img.dims
    if any(not 0 <= k < d for k, d in zip(c, dims)):
        raise ValueError(f"center {c} outside image dims {dims}")
    ix, iy, iz = _index_grids(dims)
    sq = (ix - c[0]) ** 2 + (iy - c[1]) ** 2 + (iz - c[2]) ** 2
    far = sum(max(k, d - 1 - k) ** 2 for k, d in zip(c, dims))
    values = np.where(img.voxels, np.sqrt(sq), math.sqrt(far) + 1.0)
    return GrayscaleImage3D(values, spec or FiltrationSpec(RADIAL, center=c))


def ball_offsets(r: float) -> np.ndarray:
    k = int(math.floor(r))
    rng = range(-k, k + 1)
    return np.array([o for o in itertools.product(rng, rng, rng)
                     if o[0] ** 2 + o[1] ** 2 + o[2] ** 2 <= r * r], dtype=np.int64)


def apply_density(img: BinaryImage3D, r: float = 1.0) -> GrayscaleImage3D:
    if not r > 0:
        raise ValueError("radius must be positive")
    k = int(math.floor(r))
    kernel = np.zeros((2 * k + 1,) * 3, dtype=np.int64)
    for o in ball_offsets(r):
        kernel[tuple(o + k)] = 1
    counts = ndimage.correlate(img.voxels.astype(np.int64), kernel, mode="constant", cval=0)
    return GrayscaleImage3D(counts.astype(np.float64), FiltrationSpec(DENSITY, radius=float(r)))


def manhattan_distance(targets: np.ndarray) -> np.ndarray:
    """L1 distance from every voxel to the nearest ``True`` voxel (``inf`` if none).

    Two sweeps (forward, backward) per axis. The L1 metric separates over axes,
    so the three 1D passes compose to the exact 3D transform in O(v).
    """
    d = np.where(targets, 0.0, np.inf)
    for axis in range(d.ndim):
        view = np.moveaxis(d, axis, 0)
        for i in range(1, view.shape[0]):
            np.minimum(view[i], view[i - 1] + 1.0, out=view[i])
        for i in range(view.shape[0] - 2, -1, -1):
            np.minimum(view[i], view[i + 1] + 1.0, out=view[i])
    return d


def manhattan_distance_bruteforce(targets: np.ndarray) -> np.ndarray:
    """All-pairs O(v^2) reference for :func:`manhattan_distance`."""
    targets = np.asarray(targets, dtype=bool)
    pts = np.argwhere(targets)
    out = np.full(targets.shape, np.inf)
    if len(pts) == 0:
        return out
    for p in np.ndindex(targets.shape):
        out[p] = np.abs(pts - np.array(p)).sum(axis=1).min()
    return out


def _manhattan_diameter(dims) -> int:
    # voxels along a longest monotone lattice path
    return sum(d - 1 for d in dims) + 1


def apply_dilation(img: BinaryImage3D) -> GrayscaleImage3D:
    if not img.voxels.any():
        raise ValueError("dilation needs at least one active voxel")
    return GrayscaleImage3D(manhattan_distance(img.voxels), FiltrationSpec(DILATION))


def apply_erosion(img: BinaryImage3D, pad_border: bool = False) -> GrayscaleImage3D:
    """Dilation of the complement; 0 on the original's inactive voxels.

    With ``pad_border`` the image is surrounded by an implicit inactive layer,
    the convention used by the signed-distance filtration. Without it, a fully
    active image has no inactive voxel to measure to, and every voxel gets
    the Manhattan diameter plus one.
    """
    vox = img.voxels
    if pad_border:
        values = manhattan_distance(~np.pad(vox, 1, constant_values=False))[1:-1, 1:-1, 1:-1]
    elif vox.all():
        values = np.full(vox.shape, float(_manhattan_diameter(vox.shape) + 1))
    else:
        values = manhattan_distance(~vox)
    return GrayscaleImage3D(values, FiltrationSpec(EROSION))


def apply_signed_distance(img: BinaryImage3D) -> GrayscaleImage3D:
    vox = img.voxels
    if not vox.any():
        raise ValueError("signed distance needs at least one active voxel")
    padded = np.pad(vox, 1, constant_values=False)
    inside = manhattan_distance(~padded)[1:-1, 1:-1, 1:-1]
    outside = manhattan_distance(padded)[1:-1, 1:-1, 1:-1]
    values = np.where(vox, inside - 1.0, -outside)
    return GrayscaleImage3D(values, FiltrationSpec(SIGNED_DISTANCE))


def apply_filtration(img: BinaryImage3D, spec: FiltrationSpec) -> GrayscaleImage3D:
    if spec.kind == HEIGHT:
        return apply_height(img, spec.direction)
    if spec.kind == RADIAL:
        center = spec.center if spec.slot is None else radial_centers(img.dims)[spec.slot - 1]
        return apply_radial(img, center, spec)
    if spec.kind == DENSITY:
        return apply_density(img, spec.radius)
    if spec.kind == DILATION:
        return apply_dilation(img)
    if spec.kind == EROSION:
        return apply_erosion(img)
    return apply_signed_distance(img)
