from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Tuple

import numpy as np


@dataclass(frozen=True)
class PersistencePair:
    birth: float
    death: float
    dim: int
    essential: bool = False


class PersistenceDiagram:
    """Multiset of persistence pairs for homology dimensions 0, 1, 2.

    Essential classes carry ``death`` equal to the image's maximum intensity
    and ``essential=True``. Pairs are kept sorted by (dim, birth, death,
    essential) so that equal multisets compare equal element-wise.
    """

    def __init__(self, dims, births, deaths, essential=None):
        dims = np.asarray(dims, dtype=np.int64).ravel()
        births = np.asarray(births, dtype=np.float64).ravel()
        deaths = np.asarray(deaths, dtype=np.float64).ravel()
        essential = (np.zeros(len(dims), dtype=bool) if essential is None
                     else np.asarray(essential, dtype=bool).ravel())
        if not len(dims) == len(births) == len(deaths) == len(essential):
            raise ValueError("diagram columns differ in length")
        if np.any(deaths < births):
            raise ValueError("pair with death before birth")
        order = np.lexsort((essential, deaths, births, dims))
        self.dims = dims[order]
        self.births = births[order]
        self.deaths = deaths[order]
        self.essential = essential[order]

    @classmethod
    def from_pairs(cls, pairs: Iterable[PersistencePair]) -> "PersistenceDiagram":
        pairs = list(pairs)
        return cls([p.dim for p in pairs], [p.birth for p in pairs],
                   [p.death for p in pairs], [p.essential for p in pairs])

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self):
        for d, b, x, e in zip(self.dims, self.births, self.deaths, self.essential):
            yield PersistencePair(float(b), float(x), int(d), bool(e))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PersistenceDiagram):
            return NotImplemented
        return (np.array_equal(self.dims, other.dims)
                and np.array_equal(self.births, other.births)
                and np.array_equal(self.deaths, other.deaths)
                and np.array_equal(self.essential, other.essential))

    def __repr__(self) -> str:
        return f"PersistenceDiagram({[tuple(p.__dict__.values()) for p in self]})"

    def slice(self, dim: int, include_essential: bool = True) -> np.ndarray:
        """``(k, 2)`` array of (birth, death) for one homology dimension."""
        m = self.dims == dim
        if not include_essential:
            m &= ~self.essential
        return np.column_stack([self.births[m], self.deaths[m]])

    def multiset(self, dim: int) -> List[Tuple[float, float, bool]]:
        m = self.dims == dim
        return [(float(b), float(d), bool(e))
                for b, d, e in zip(self.births[m], self.deaths[m], self.essential[m])]

    def without_essential(self) -> "PersistenceDiagram":
        m = ~self.essential
        return PersistenceDiagram(self.dims[m], self.births[m], self.deaths[m], self.essential[m])

    def map_values(self, fn) -> "PersistenceDiagram":
        return PersistenceDiagram(self.dims, fn(self.births), fn(self.deaths), self.essential)

    def to_text(self) -> str:
        return "".join(f"{d} {b!r} {x!r} {int(e)}\n"
                       for d, b, x, e in zip(self.dims, self.births.tolist(),
                                             self.deaths.tolist(), self.essential))

    @classmethod
    def from_text(cls, text: str) -> "PersistenceDiagram":
        rows = [line.split() for line in text.splitlines() if line.strip()]
        return cls([int(r[0]) for r in rows], [float(r[1]) for r in rows],
                   [float(r[2]) for r in rows], [r[3] == "1" for r in rows])


def betti_at(diagram: PersistenceDiagram, t: float) -> np.ndarray:
    """Betti numbers of the sublevel set at ``t`` implied by the diagram."""
    alive = (diagram.births <= t) & ((diagram.deaths > t) | diagram.essential)
    return np.bincount(diagram.dims[alive], minlength=3)[:3]
