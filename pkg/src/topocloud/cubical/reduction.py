"""Fast sublevel persistence for cubical complexes.

H0 comes from a union-find sweep over vertices and edges (elder rule). H2
and H1 come from Z/2 column reduction of the boundary matrices, top
dimension first, with clearing: every 2-cell that is a pivot of the reduced
cube boundary is a cycle creator and its column is skipped. Columns are
kept as sorted index arrays; only reduced columns are stored.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .complex import CubicalComplex, build_complex
from .diagram import PersistenceDiagram


@njit(cache=True)
def _symdiff_desc(a, b):
    out = np.empty(a.size + b.size, dtype=np.int64)
    i = j = k = 0
    while i < a.size and j < b.size:
        if a[i] > b[j]:
            out[k] = a[i]
            i += 1
            k += 1
        elif a[i] < b[j]:
            out[k] = b[j]
            j += 1
            k += 1
        else:
            i += 1
            j += 1
    while i < a.size:
        out[k] = a[i]
        i += 1
        k += 1
    while j < b.size:
        out[k] = b[j]
        j += 1
        k += 1
    return out[:k]


@njit(cache=True)
def _reduce_columns(faces, active, n_rows):
    """Reduce columns in the given (filtration) order; returns the pivot row per column or -1."""
    ncols = faces.shape[0]
    owner = np.full(n_rows, -1, dtype=np.int64)
    pivots = np.full(ncols, -1, dtype=np.int64)
    starts = np.zeros(ncols, dtype=np.int64)
    lens = np.zeros(ncols, dtype=np.int64)
    buf = np.empty(max(64, 2 * faces.size), dtype=np.int64)
    used = 0
    for j in range(ncols):
        if not active[j]:
            continue
        col = np.sort(faces[j])[::-1].copy()
        while col.size > 0:
            o = owner[col[0]]
            if o < 0:
                break
            col = _symdiff_desc(col, buf[starts[o]:starts[o] + lens[o]])
        if col.size == 0:
            continue
        pivots[j] = col[0]
        owner[col[0]] = j
        if used + col.size > buf.size:
            grown = np.empty(max(2 * buf.size, used + col.size), dtype=np.int64)
            grown[:used] = buf[:used]
            buf = grown
        buf[used:used + col.size] = col
        starts[j] = used
        lens[j] = col.size
        used += col.size
    return pivots


@njit(cache=True)
def _find(parent, x):
    root = x
    while parent[root] != root:
        root = parent[root]
    while parent[x] != root:
        nxt = parent[x]
        parent[x] = root
        x = nxt
    return root


@njit(cache=True)
def _union_find_h0(cell_dims_by_rank, edge_ends, edge_slot_by_rank):
    """Elder-rule H0 sweep over ranks. Returns (birth_rank, death_rank) pairs and a positive-edge flag per rank."""
    n = cell_dims_by_rank.size
    parent = np.arange(n, dtype=np.int64)
    births = np.empty(n, dtype=np.int64)
    deaths = np.empty(n, dtype=np.int64)
    npairs = 0
    positive_edge = np.zeros(n, dtype=np.bool_)
    for r in range(n):
        if cell_dims_by_rank[r] != 1:
            continue
        e = edge_slot_by_rank[r]
        ru = _find(parent, edge_ends[e, 0])
        rv = _find(parent, edge_ends[e, 1])
        if ru == rv:
            positive_edge[r] = True
            continue
        # roots are the oldest vertex (smallest rank) of each component
        if ru < rv:
            old, young = ru, rv
        else:
            old, young = rv, ru
        parent[young] = old
        births[npairs] = young
        deaths[npairs] = r
        npairs += 1
    return births[:npairs], deaths[:npairs], positive_edge


def filtration_order(cx: CubicalComplex, reverse_ties: bool = False) -> np.ndarray:
    """Cells sorted by (value, dim, canonical index); ``reverse_ties`` flips the last key."""
    idx = np.arange(len(cx), dtype=np.int64)
    return np.lexsort((-idx if reverse_ties else idx, cx.cell_dims, cx.values))


def compute_persistence(cx: CubicalComplex) -> PersistenceDiagram:
    order = filtration_order(cx)
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order), dtype=np.int64)
    value_by_rank = cx.values[order]
    dims_by_rank = cx.cell_dims[order]
    n = len(order)

    out_dims, out_b, out_d, out_e = [], [], [], []

    def emit(dim, b_ranks, d_ranks):
        b = value_by_rank[b_ranks]
        d = value_by_rank[d_ranks]
        keep = d > b
        out_dims.append(np.full(int(keep.sum()), dim, dtype=np.int64))
        out_b.append(b[keep])
        out_d.append(d[keep])
        out_e.append(np.zeros(int(keep.sum()), dtype=bool))

    def emit_essential(dim, b_ranks):
        out_dims.append(np.full(len(b_ranks), dim, dtype=np.int64))
        out_b.append(value_by_rank[b_ranks])
        out_d.append(np.full(len(b_ranks), cx.max_value))
        out_e.append(np.ones(len(b_ranks), dtype=bool))

    # H0
    edges, edge_faces = cx.faces(1)
    edge_slot_by_rank = np.full(n, -1, dtype=np.int64)
    edge_slot_by_rank[rank[edges]] = np.arange(len(edges), dtype=np.int64)
    b0, d0, positive_edge = _union_find_h0(dims_by_rank, rank[edge_faces], edge_slot_by_rank)
    emit(0, b0, d0)
    emit_essential(0, np.array([0], dtype=np.int64))

    # H2 from the cube boundary, columns in filtration order
    cubes, cube_faces = cx.faces(3)
    c_order = np.argsort(rank[cubes])
    cube_cols = np.ascontiguousarray(rank[cube_faces][c_order])
    piv3 = _reduce_columns(cube_cols, np.ones(len(cubes), dtype=np.bool_), n)
    paired3 = piv3 >= 0
    emit(2, piv3[paired3], rank[cubes][c_order][paired3])

    # H1 from the square boundary, clearing squares already paired with a cube
    squares, square_faces = cx.faces(2)
    s_order = np.argsort(rank[squares])
    s_ranks = rank[squares][s_order]
    cleared = np.zeros(n, dtype=bool)
    cleared[piv3[paired3]] = True
    active = ~cleared[s_ranks]
    piv2 = _reduce_columns(np.ascontiguousarray(rank[square_faces][s_order]), active, n)
    paired2 = piv2 >= 0
    emit(1, piv2[paired2], s_ranks[paired2])

    # essential H1/H2 (none for a full box grid, which is contractible)
    killed_edges = np.zeros(n, dtype=bool)
    killed_edges[piv2[paired2]] = True
    emit_essential(1, np.flatnonzero(positive_edge & ~killed_edges))
    emit_essential(2, s_ranks[active & ~paired2])

    return PersistenceDiagram(np.concatenate(out_dims), np.concatenate(out_b),
                              np.concatenate(out_d), np.concatenate(out_e))


def image_persistence(img) -> PersistenceDiagram:
    return compute_persistence(build_complex(img))
