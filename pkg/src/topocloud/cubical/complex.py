"""Cubical complex of a 3D grayscale image (voxels are the top cells).

Cells live on the doubled grid of shape ``(2nx+1, 2ny+1, 2nz+1)``: a cell's
dimension is the number of odd coordinates, voxel ``(i, j, k)`` sits at
``(2i+1, 2j+1, 2k+1)``. The canonical cell index is x-fastest:
``a + X * (b + Y * c)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple

import numpy as np


@dataclass(frozen=True)
class CubicalComplex:
    image_dims: Tuple[int, int, int]
    values: np.ndarray        # filtration value per cell, canonical order
    cell_dims: np.ndarray     # 0..3 per cell, canonical order
    max_value: float
    min_value: float

    @property
    def grid_shape(self) -> Tuple[int, int, int]:
        return tuple(2 * d + 1 for d in self.image_dims)

    def __len__(self) -> int:
        return len(self.values)

    def census(self):
        """Number of cells per dimension, ``[vertices, edges, squares, cubes]``."""
        return np.bincount(self.cell_dims, minlength=4)

    def faces(self, dim: int):
        """Canonical indices of all ``dim``-cells and their ``2*dim`` codimension-1 faces."""
        return cell_faces(self.grid_shape, self.cell_dims, dim)


def _coords(shape):
    X, Y, Z = shape
    idx = np.arange(X * Y * Z, dtype=np.int64)
    return idx, idx % X, (idx // X) % Y, idx // (X * Y)


def cell_faces(shape, cell_dims: np.ndarray, dim: int):
    X, Y, _ = shape
    idx, a, b, c = _coords(shape)
    sel = cell_dims == dim
    cells = idx[sel]
    if dim == 0:
        return cells, np.empty((len(cells), 0), dtype=np.int64)
    odd = np.stack([a[sel] % 2, b[sel] % 2, c[sel] % 2], axis=1)
    # the `dim` odd axes of each cell, in axis order
    axes = np.argsort(-odd, axis=1, kind="stable")[:, :dim]
    strides = np.array([1, X, X * Y], dtype=np.int64)[axes]
    faces = np.concatenate([cells[:, None] - strides, cells[:, None] + strides], axis=1)
    return cells, faces


def build_complex(img) -> CubicalComplex:
    """Sublevel cubical complex: each lower cell takes the min of its incident voxels."""
    vals = np.asarray(getattr(img, "values", img), dtype=np.float64)
    if vals.ndim != 3 or min(vals.shape) < 1:
        raise ValueError("image must be 3D with every dim >= 1")
    shape = tuple(2 * d + 1 for d in vals.shape)
    grid = np.full(shape, np.inf)
    grid[1::2, 1::2, 1::2] = vals
    for axis in range(3):
        g = np.moveaxis(grid, axis, 0)
        n = g.shape[0]
        # even slots take the min of their odd neighbours along this axis
        g[0] = g[1]
        g[n - 1] = g[n - 2]
        if n > 3:
            g[2:n - 1:2] = np.minimum(g[1:n - 2:2], g[3:n:2])
    _, a, b, c = _coords(shape)
    cell_dims = ((a % 2) + (b % 2) + (c % 2)).astype(np.int64)
    values = grid.ravel(order="F").copy()
    values.setflags(write=False)
    cell_dims.setflags(write=False)
    return CubicalComplex(tuple(int(d) for d in vals.shape), values, cell_dims,
                          float(vals.max()), float(vals.min()))
