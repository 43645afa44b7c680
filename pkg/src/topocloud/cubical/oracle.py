"""Brute-force persistence oracle: the textbook reduction over the whole boundary matrix.

No union-find, no clearing, no per-dimension split, and equal values are
broken by *descending* canonical index. Columns are Python ints used as
bitsets. Only meant for small images in tests.
"""

from __future__ import annotations

import numpy as np

from .complex import CubicalComplex
from .diagram import PersistenceDiagram
from .reduction import filtration_order


def oracle_persistence(cx: CubicalComplex, tiebreak=None) -> PersistenceDiagram:
    """``tiebreak``: optional per-cell key replacing the index among cells of equal (value, dim)."""
    if tiebreak is None:
        order = filtration_order(cx, reverse_ties=True)
    else:
        order = np.lexsort((np.asarray(tiebreak), cx.cell_dims, cx.values))
    n = len(order)
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    values = cx.values[order].tolist()
    cdims = cx.cell_dims[order].tolist()

    boundary = [0] * n
    for dim in (1, 2, 3):
        cells, faces = cx.faces(dim)
        for c, fs in zip(rank[cells].tolist(), rank[faces].tolist()):
            col = 0
            for f in fs:
                col ^= 1 << f
            boundary[c] = col

    low_owner = {}
    reduced = [0] * n
    pivot_of = [-1] * n
    for j in range(n):
        col = boundary[j]
        while col:
            low = col.bit_length() - 1
            k = low_owner.get(low)
            if k is None:
                break
            col ^= reduced[k]
        reduced[j] = col
        if col:
            low = col.bit_length() - 1
            low_owner[low] = j
            pivot_of[j] = low

    dims, births, deaths, ess = [], [], [], []
    for j in range(n):
        i = pivot_of[j]
        if i >= 0 and values[j] > values[i]:
            dims.append(cdims[i])
            births.append(values[i])
            deaths.append(values[j])
            ess.append(False)
    for j in range(n):
        if reduced[j] == 0 and j not in low_owner:
            dims.append(cdims[j])
            births.append(values[j])
            deaths.append(cx.max_value)
            ess.append(True)
    return PersistenceDiagram(dims, births, deaths, ess)
