"""Persistence diagram -> 36-number feature block.

Per homology dimension: persistent entropy, Wasserstein amplitude (p=1, 2),
bottleneck amplitude, and L1/L2 norms of the Betti curve, the first two
landscape layers and the heat kernel.

Sampled curves live on a uniform grid spanning [min birth, max death] of the
slice, endpoints included, and are integrated with trapezoid weights. An
empty slice (or one whose range is a single value) gives zeros throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from .cubical.diagram import PersistenceDiagram

HOMOLOGY_DIMS = (0, 1, 2)
METRICS = (
    "entropy",
    "wasserstein_p1",
    "wasserstein_p2",
    "bottleneck",
    "betti_l1",
    "betti_l2",
    "landscape_k1_l1",
    "landscape_k1_l2",
    "landscape_k2_l1",
    "landscape_k2_l2",
    "heat_l1",
    "heat_l2",
)
BLOCK_SIZE = len(METRICS) * len(HOMOLOGY_DIMS)
SLOT_NAMES = tuple(f"{m}[H{d}]" for m in METRICS for d in HOMOLOGY_DIMS)


@dataclass(frozen=True)
class SamplingConfig:
    betti_samples: int = 100
    landscape_samples: int = 100
    heat_samples: int = 20
    heat_sigma: float = 0.15
    wasserstein_orders: Tuple[int, ...] = (1, 2)
    landscape_layers: Tuple[int, ...] = (1, 2)

    def __post_init__(self):
        for name in ("betti_samples", "landscape_samples", "heat_samples"):
            if int(getattr(self, name)) < 2:
                raise ValueError(f"{name} must be at least 2")
        if not self.heat_sigma > 0:
            raise ValueError("heat_sigma must be positive")
        object.__setattr__(self, "wasserstein_orders", tuple(self.wasserstein_orders))
        object.__setattr__(self, "landscape_layers", tuple(self.landscape_layers))
        if self.wasserstein_orders != (1, 2) or self.landscape_layers != (1, 2):
            raise ValueError("the 36-slot block layout needs wasserstein_orders=(1, 2) "
                             "and landscape_layers=(1, 2)")


def _pairs(slice_) -> np.ndarray:
    arr = np.asarray(slice_, dtype=np.float64).reshape(-1, 2)
    # canonical order so that sums do not depend on the input order of the pairs
    return arr[np.lexsort((arr[:, 1], arr[:, 0]))]


def _grid(pairs: np.ndarray, n: int):
    """Sample points and trapezoid weights over [min birth, max death]; None if degenerate."""
    if len(pairs) == 0:
        return None
    lo, hi = float(pairs[:, 0].min()), float(pairs[:, 1].max())
    if not hi > lo:
        return None
    s = np.linspace(lo, hi, n)
    w = np.full(n, (hi - lo) / (n - 1))
    w[0] *= 0.5
    w[-1] *= 0.5
    return s, w


def entropy(slice_) -> float:
    x = _pairs(slice_)
    life = x[:, 1] - x[:, 0]
    life = life[life > 0]
    total = life.sum()
    if life.size == 0 or not total > 0:
        return 0.0
    p = life / total
    return float(-np.sum(p * np.log(p))) + 0.0   # no -0.0


def wasserstein_amplitude(slice_, p: int = 1) -> float:
    x = _pairs(slice_)
    if len(x) == 0:
        return 0.0
    half = (x[:, 1] - x[:, 0]) / 2.0
    return float(np.sum(half ** p) ** (1.0 / p))


def bottleneck_amplitude(slice_) -> float:
    x = _pairs(slice_)
    if len(x) == 0:
        return 0.0
    return float(np.max((x[:, 1] - x[:, 0]) / 2.0))


def betti_curve(slice_, s: np.ndarray) -> np.ndarray:
    """Number of half-open intervals [b, d) containing each sample."""
    x = _pairs(slice_)
    return ((x[:, :1] <= s[None, :]) & (s[None, :] < x[:, 1:])).sum(axis=0).astype(np.float64)


def _norms(f: np.ndarray, w: np.ndarray):
    return float(np.sum(np.abs(f) * w)), float(math.sqrt(np.sum(f * f * w)))


def betti_amplitude(slice_, cfg: SamplingConfig = SamplingConfig()):
    x = _pairs(slice_)
    g = _grid(x, cfg.betti_samples)
    if g is None:
        return 0.0, 0.0
    s, w = g
    return _norms(betti_curve(x, s), w)


def landscape(slice_, s: np.ndarray, layers=(1, 2)) -> np.ndarray:
    """Rows are lambda_k(s) for each requested layer k."""
    x = _pairs(slice_)
    tents = np.maximum(0.0, np.minimum(s[None, :] - x[:, :1], x[:, 1:] - s[None, :]))
    tents = -np.sort(-tents, axis=0)
    out = np.zeros((len(layers), len(s)))
    for i, k in enumerate(layers):
        if k <= len(x):
            out[i] = tents[k - 1]
    return out


def landscape_amplitude(slice_, cfg: SamplingConfig = SamplingConfig()):
    """(k1 L1, k1 L2, k2 L1, k2 L2)."""
    x = _pairs(slice_)
    g = _grid(x, cfg.landscape_samples)
    if g is None:
        return 0.0, 0.0, 0.0, 0.0
    s, w = g
    lam = landscape(x, s, cfg.landscape_layers)
    return _norms(lam[0], w) + _norms(lam[1], w)


def heat_function(slice_, s: np.ndarray, sigma: float) -> np.ndarray:
    """Gaussians on the pairs minus Gaussians on their mirror images, on the grid ``s x s``.

    Element ``[i, j]`` is the value at (birth=s[i], death=s[j]).
    """
    x = _pairs(slice_)
    norm = 1.0 / (math.sqrt(2.0 * math.pi) * sigma)
    gb = norm * np.exp(-0.5 * ((s[None, :] - x[:, :1]) / sigma) ** 2)
    gd = norm * np.exp(-0.5 * ((s[None, :] - x[:, 1:]) / sigma) ** 2)
    return gb.T @ gd - gd.T @ gb


def heat_amplitude(slice_, cfg: SamplingConfig = SamplingConfig()):
    x = _pairs(slice_)
    g = _grid(x, cfg.heat_samples)
    if g is None:
        return 0.0, 0.0
    s, w = g
    f = heat_function(x, s, cfg.heat_sigma)
    return _norms(f, np.outer(w, w))


def vectorize_slices(slices, cfg: SamplingConfig = SamplingConfig()) -> np.ndarray:
    """Feature block from three (k, 2) arrays for H0, H1, H2."""
    rows = np.zeros((len(METRICS), len(HOMOLOGY_DIMS)))
    for j, sl in enumerate(slices):
        sl = _pairs(sl)
        rows[0, j] = entropy(sl)
        rows[1, j] = wasserstein_amplitude(sl, 1)
        rows[2, j] = wasserstein_amplitude(sl, 2)
        rows[3, j] = bottleneck_amplitude(sl)
        rows[4:6, j] = betti_amplitude(sl, cfg)
        rows[6:10, j] = landscape_amplitude(sl, cfg)
        rows[10:12, j] = heat_amplitude(sl, cfg)
    return rows.ravel()


def vectorize_diagram(diagram: PersistenceDiagram, cfg: SamplingConfig = SamplingConfig()) -> np.ndarray:
    """36 values, metric-major with H0, H1, H2 innermost (see ``SLOT_NAMES``)."""
    return vectorize_slices([diagram.slice(d) for d in HOMOLOGY_DIMS], cfg)
