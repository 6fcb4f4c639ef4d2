"""
Vietoris-Rips persistence without materializing the top dimension.

Simplices of dimension 1..max_dim are enumerated into flat arrays; their
(max_dim+1)-dimensional cofacets are generated on demand while the coboundary
matrix is reduced. Dimension 0 is a union-find pass over the sorted edges.
Each higher dimension reduces coboundary columns in reverse filtration order
and skips the simplices paired one dimension below (clearing), so the work is
dominated by one scan of N candidate cofacets per column.

Simplices are ordered by (value, dimension, index), where index is the
combinatorial number of the ascending vertex tuple. The barcode equals the one
`persistence.compute_persistence` reads off the explicit boundary matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
from numba import njit, types
from numba.typed import Dict as TypedDict

from app.core.config import settings
from common.errors import InputError, ResourceLimitError
from observability.metrics import Metrics

from .persistence import INF, PersistenceDiagram, PersistencePair
from .slack import DissimilarityMatrix


def _binomials(n: int, k: int) -> np.ndarray:
    """table[a, b] = C(a, b) for a <= n, b <= k."""
    table = np.zeros((n + 1, k + 1), dtype=np.int64)
    table[:, 0] = 1
    for a in range(1, n + 1):
        table[a, 1:] = table[a - 1, 1:] + table[a - 1, :-1]
    return table


# --- kernels --------------------------------------------------------------


@njit(nogil=True)
def _count_extensions(verts, D, thr):  # pragma: no cover - compiled
    m, width = verts.shape
    count = D.shape[0]
    out = np.zeros(m, dtype=np.int64)
    for r in range(m):
        c = 0
        for w in range(verts[r, width - 1] + 1, count):
            ok = True
            for i in range(width):
                if D[verts[r, i], w] > thr:
                    ok = False
                    break
            if ok:
                c += 1
        out[r] = c
    return out


@njit(nogil=True)
def _extend(verts, values, counts, D, thr):  # pragma: no cover - compiled
    m, width = verts.shape
    count = D.shape[0]
    total = 0
    for r in range(m):
        total += counts[r]
    out_verts = np.empty((total, width + 1), dtype=np.int64)
    out_values = np.empty(total)
    pos = 0
    for r in range(m):
        for w in range(verts[r, width - 1] + 1, count):
            val = values[r]
            ok = True
            for i in range(width):
                d = D[verts[r, i], w]
                if d > thr:
                    ok = False
                    break
                if d > val:
                    val = d
            if ok:
                for i in range(width):
                    out_verts[pos, i] = verts[r, i]
                out_verts[pos, width] = w
                out_values[pos] = val
                pos += 1
    return out_verts, out_values


@njit(nogil=True)
def _find(parent, x):  # pragma: no cover - compiled
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


@njit(nogil=True)
def _union_find(edges, order, count):  # pragma: no cover - compiled
    parent = np.arange(count)
    merged = np.zeros(edges.shape[0], dtype=np.bool_)
    for k in range(order.shape[0]):
        e = order[k]
        a = _find(parent, edges[e, 0])
        b = _find(parent, edges[e, 1])
        if a != b:
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
            merged[e] = True
    return merged


@njit(nogil=True)
def _cofacet_value(verts, values, r, w, D, thr):  # pragma: no cover - compiled
    # -1 when w is a vertex of the row or some edge to w exceeds the cutoff.
    val = values[r]
    for i in range(verts.shape[1]):
        u = verts[r, i]
        if u == w:
            return -1.0
        d = D[u, w]
        if d > thr:
            return -1.0
        if d > val:
            val = d
    return val


@njit(nogil=True)
def _cofacet_index(verts, r, w, B):  # pragma: no cover - compiled
    idx = 0
    pos = 0
    placed = False
    for i in range(verts.shape[1]):
        u = verts[r, i]
        if not placed and w < u:
            pos += 1
            idx += B[w, pos]
            placed = True
        pos += 1
        idx += B[u, pos]
    if not placed:
        pos += 1
        idx += B[w, pos]
    return idx


@njit(nogil=True)
def _first_cofacet(verts, values, r, D, thr, B):  # pragma: no cover - compiled
    best_v = np.inf
    best_i = -1
    for w in range(D.shape[0]):
        v = _cofacet_value(verts, values, r, w, D, thr)
        if v < 0.0:
            continue
        if v < best_v:
            best_v = v
            best_i = _cofacet_index(verts, r, w, B)
        elif v == best_v:
            i = _cofacet_index(verts, r, w, B)
            if i < best_i:
                best_i = i
    return best_i, best_v


@njit(nogil=True)
def _toggle_coboundary(work, verts, values, r, D, thr, B):  # pragma: no cover - compiled
    for w in range(D.shape[0]):
        v = _cofacet_value(verts, values, r, w, D, thr)
        if v < 0.0:
            continue
        i = _cofacet_index(verts, r, w, B)
        if i in work:
            work.pop(i)
        else:
            work[i] = v


@njit(nogil=True)
def _work_pivot(work):  # pragma: no cover - compiled
    best_v = np.inf
    best_i = -1
    for i, v in work.items():
        if v < best_v or (v == best_v and i < best_i):
            best_v = v
            best_i = i
    return best_i, best_v


@njit(nogil=True)
def _reduce_coboundary(verts, values, order, cleared, D, thr, B):  # pragma: no cover - compiled
    m = verts.shape[0]
    pivot_col = TypedDict.empty(key_type=types.int64, value_type=types.int64)
    # Columns that needed additions keep their reduced entries in a flat buffer.
    slot_start = np.full(m, -1, dtype=np.int64)
    slot_len = np.zeros(m, dtype=np.int64)
    buf_idx = np.empty(1024, dtype=np.int64)
    buf_val = np.empty(1024)
    used = 0

    pair_row = np.empty(m, dtype=np.int64)
    pair_death = np.empty(m)
    pair_pivot = np.empty(m, dtype=np.int64)
    n_pairs = 0
    essential = np.empty(m, dtype=np.int64)
    n_essential = 0
    n_reduced = 0

    for k in range(order.shape[0]):
        r = order[k]
        if cleared[r]:
            continue
        n_reduced += 1
        piv_i, piv_v = _first_cofacet(verts, values, r, D, thr, B)
        if piv_i >= 0 and piv_i in pivot_col:
            work = TypedDict.empty(key_type=types.int64, value_type=types.float64)
            _toggle_coboundary(work, verts, values, r, D, thr, B)
            while piv_i >= 0 and piv_i in pivot_col:
                other = pivot_col[piv_i]
                if slot_start[other] >= 0:
                    s = slot_start[other]
                    for q in range(s, s + slot_len[other]):
                        i = buf_idx[q]
                        if i in work:
                            work.pop(i)
                        else:
                            work[i] = buf_val[q]
                else:
                    _toggle_coboundary(work, verts, values, other, D, thr, B)
                piv_i, piv_v = _work_pivot(work)
            if piv_i >= 0:
                size = len(work)
                if used + size > buf_idx.shape[0]:
                    cap = max(2 * buf_idx.shape[0], used + size)
                    grown_idx = np.empty(cap, dtype=np.int64)
                    grown_val = np.empty(cap)
                    grown_idx[:used] = buf_idx[:used]
                    grown_val[:used] = buf_val[:used]
                    buf_idx = grown_idx
                    buf_val = grown_val
                slot_start[r] = used
                slot_len[r] = size
                for i, v in work.items():
                    buf_idx[used] = i
                    buf_val[used] = v
                    used += 1
        if piv_i < 0:
            essential[n_essential] = r
            n_essential += 1
            continue
        pivot_col[piv_i] = r
        pair_row[n_pairs] = r
        pair_death[n_pairs] = piv_v
        pair_pivot[n_pairs] = piv_i
        n_pairs += 1

    return pair_row[:n_pairs], pair_death[:n_pairs], pair_pivot[:n_pairs], essential[:n_essential], n_reduced


# --- complex --------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SimplexLayer:
    """All k-simplices within the cutoff: ascending vertex rows, values and combinatorial indices."""

    dim: int
    vertices: np.ndarray  # (m, dim + 1)
    values: np.ndarray
    index: np.ndarray

    def __len__(self) -> int:
        return int(self.values.shape[0])

    def forward_order(self) -> np.ndarray:
        return np.lexsort((self.index, self.values))


@dataclass(eq=False)
class RipsComplex:
    dissimilarities: np.ndarray
    max_dim: int
    r_max: float
    layers: List[SimplexLayer]
    _top_count: Optional[int] = field(default=None, repr=False)

    @property
    def size(self) -> int:
        return int(self.dissimilarities.shape[0])

    def materialized(self) -> int:
        return self.size + sum(len(layer) for layer in self.layers)

    def counts_by_dim(self) -> Dict[int, int]:
        """Simplex counts in dimensions 0..max_dim+1; the top dimension is counted, never stored."""
        out = {0: self.size}
        for layer in self.layers:
            out[layer.dim] = len(layer)
        top = self.max_dim + 1
        if top not in out:
            if self._top_count is None:
                last = self.layers[-1]
                self._top_count = int(_count_extensions(last.vertices, self.dissimilarities, self.r_max).sum())
            out[top] = self._top_count
        return out

    def __len__(self) -> int:
        return sum(self.counts_by_dim().values())


def rips_complex(
    D: DissimilarityMatrix,
    max_dim: int,
    r_max: float,
    *,
    budget: Optional[int] = None,
    metrics: Optional[Metrics] = None,
) -> RipsComplex:
    """
    Enumerate the simplices of dimension <= max(max_dim, 1) whose pairwise
    dissimilarities are all <= r_max. The budget bounds the number held in
    memory.
    """
    if int(max_dim) != max_dim or max_dim < 0:
        raise InputError("max_dim must be a non-negative integer", {"max_dim": max_dim})
    if not np.isfinite(r_max) or r_max <= 0:
        raise InputError("r_max must be > 0", {"r_max": r_max})
    budget = int(budget if budget is not None else settings.SIMPLEX_BUDGET)
    dist = np.ascontiguousarray(D.values, dtype=np.float64)
    count = D.size
    thr = float(r_max)

    def _over_budget(total: int) -> ResourceLimitError:
        return ResourceLimitError(
            f"filtration exceeds the simplex budget of {budget}; lower r_max or the number of trajectories",
            {"budget": budget, "r_max": thr, "N": count, "max_dim": int(max_dim), "simplices": total},
        )

    total = count
    if total > budget:
        raise _over_budget(total)

    binom = _binomials(count, int(max_dim) + 2)
    verts = np.arange(count, dtype=np.int64).reshape(count, 1)
    values = np.zeros(count)
    layers: List[SimplexLayer] = []
    for dim in range(1, max(int(max_dim), 1) + 1):
        counts = _count_extensions(verts, dist, thr)
        total += int(counts.sum())
        if total > budget:
            raise _over_budget(total)
        verts, values = _extend(verts, values, counts, dist, thr)
        index = binom[verts, np.arange(1, dim + 2)].sum(axis=1) if len(values) else np.zeros(0, dtype=np.int64)
        layers.append(SimplexLayer(dim=dim, vertices=verts, values=values, index=index))

    if metrics is not None:
        metrics.inc("simplices_total", total)
    return RipsComplex(dissimilarities=dist, max_dim=int(max_dim), r_max=thr, layers=layers)


def rips_persistence(
    rc: RipsComplex,
    *,
    meta: Optional[Dict[str, Any]] = None,
    metrics: Optional[Metrics] = None,
) -> PersistenceDiagram:
    """
    Diagram in dimensions 0..max_dim by coboundary reduction with clearing.
    Zero-length pairs are dropped; classes alive at r_max become infinite bars.
    """
    count = rc.size
    dist = rc.dissimilarities
    binom = _binomials(count, rc.max_dim + 2)
    out: List[PersistencePair] = []

    edges = rc.layers[0]
    merged = _union_find(edges.vertices, edges.forward_order(), count)
    out.extend(PersistencePair(0, 0.0, float(v)) for v in edges.values[merged] if v > 0.0)
    out.extend(PersistencePair(0, 0.0, INF) for _ in range(count - int(merged.sum())))

    cleared = merged
    n_reduced = 0
    n_cleared = 0
    for layer in rc.layers[: rc.max_dim]:
        order = np.ascontiguousarray(layer.forward_order()[::-1])
        n_cleared += int(cleared.sum())
        rows, deaths, pivots, essential, reduced = _reduce_coboundary(
            layer.vertices, layer.values, order, cleared, dist, rc.r_max, binom
        )
        n_reduced += int(reduced)
        births = layer.values[rows]
        keep = deaths > births
        out.extend(PersistencePair(layer.dim, float(b), float(d)) for b, d in zip(births[keep], deaths[keep]))
        out.extend(PersistencePair(layer.dim, float(layer.values[e]), INF) for e in essential)
        if layer.dim < len(rc.layers):
            cleared = np.isin(rc.layers[layer.dim].index, pivots)

    if metrics is not None:
        metrics.inc("columns_reduced", n_reduced)
        metrics.inc("columns_cleared", n_cleared)

    out.sort(key=lambda p: (p.dim, p.birth, p.death))
    info: Dict[str, Any] = {"N": count, "r_max": rc.r_max, "max_dim": rc.max_dim, "simplices": len(rc)}
    info.update(meta or {})
    return PersistenceDiagram(pairs=out, meta=info)
