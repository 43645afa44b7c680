"""Point cloud -> dense binary voxel grid, and the TBV1 binary-volume file format.

Arrays are indexed ``[x, y, z]``; on disk the payload is x-fastest, i.e. the
array is written in Fortran order.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .pc_io import PointCloud

BINARY_MAGIC = b"TBV1"
GRAY_MAGIC = b"TGV1"
_HEADER = struct.Struct("<4sIII")


class VolumeFormatError(ValueError):
    pass


@dataclass(frozen=True)
class BinaryImage3D:
    voxels: np.ndarray
    origin: Tuple[float, float, float] = (0.0, 0.0, 0.0)
    voxel_size: float = 1.0

    def __post_init__(self):
        vox = np.asarray(self.voxels).astype(bool)
        if vox.ndim != 3 or min(vox.shape) < 1:
            raise ValueError(f"voxels must be a non-empty 3D array, got shape {vox.shape}")
        if not self.voxel_size > 0:
            raise ValueError("voxel_size must be positive")
        vox.setflags(write=False)
        object.__setattr__(self, "voxels", vox)
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))

    @property
    def dims(self) -> Tuple[int, int, int]:
        return tuple(int(d) for d in self.voxels.shape)

    @property
    def n_active(self) -> int:
        return int(self.voxels.sum())

    def bits(self) -> np.ndarray:
        """Flat 0/1 array in x-fastest order."""
        return self.voxels.ravel(order="F").astype(np.uint8)


def voxel_indices(points: np.ndarray, voxel_size: float):
    """Grid origin, dims and per-point voxel index for ``points``."""
    if not voxel_size > 0 or not np.isfinite(voxel_size):
        raise ValueError("voxel_size must be a positive finite number")
    points = np.asarray(points, dtype=np.float64)
    if not np.all(np.isfinite(points)):
        raise ValueError("non-finite coordinates")
    origin = points.min(axis=0)
    extent = points.max(axis=0) - origin
    dims = np.maximum(1, np.ceil(extent / voxel_size)).astype(np.int64)
    idx = np.floor((points - origin) / voxel_size).astype(np.int64)
    # points on the max face land in the last voxel
    idx = np.minimum(idx, dims - 1)
    return origin, dims, idx


def voxelize(cloud: PointCloud, voxel_size: float) -> BinaryImage3D:
    origin, dims, idx = voxel_indices(cloud.points, voxel_size)
    vox = np.zeros(tuple(dims), dtype=bool)
    vox[idx[:, 0], idx[:, 1], idx[:, 2]] = True
    return BinaryImage3D(vox, tuple(origin), float(voxel_size))


def _write_volume(path, magic: bytes, payload: bytes, dims) -> None:
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(magic, *dims))
        fh.write(payload)


def _read_volume(path, magic: bytes, itemsize: int):
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < _HEADER.size:
        raise VolumeFormatError("file too short for a volume header")
    got, nx, ny, nz = _HEADER.unpack_from(data)
    if got != magic:
        raise VolumeFormatError(f"bad magic {got!r}, expected {magic!r}")
    payload = data[_HEADER.size:]
    expected = nx * ny * nz * itemsize
    if len(payload) != expected:
        raise VolumeFormatError(
            f"size mismatch: header dims {nx}x{ny}x{nz} need {expected} bytes, payload has {len(payload)}")
    return (nx, ny, nz), payload


def save_binary_image(img: BinaryImage3D, path) -> None:
    _write_volume(path, BINARY_MAGIC, img.bits().tobytes(), img.dims)


def load_binary_image(path) -> BinaryImage3D:
    dims, payload = _read_volume(path, BINARY_MAGIC, 1)
    flat = np.frombuffer(payload, dtype=np.uint8)
    if np.any(flat > 1):
        raise VolumeFormatError("binary volume payload must contain only 0/1 bytes")
    if not flat.any():
        raise VolumeFormatError("empty image: no active voxels")
    return BinaryImage3D(flat.reshape(dims, order="F").astype(bool))


def save_grayscale_volume(values: np.ndarray, path) -> None:
    values = np.asarray(values, dtype="<f8")
    _write_volume(path, GRAY_MAGIC, values.ravel(order="F").tobytes(), values.shape)


def load_grayscale_volume(path) -> np.ndarray:
    dims, payload = _read_volume(path, GRAY_MAGIC, 8)
    return np.frombuffer(payload, dtype="<f8").reshape(dims, order="F").astype(np.float64)
