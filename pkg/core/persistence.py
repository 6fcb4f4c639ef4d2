"""
Persistent homology over the two-element field.

Columns are sparse sets of row indices; adding a column is a symmetric
difference. With clearing, dimensions are reduced from the top down and every
pivot row found in dimension d+1 marks a d-column that would reduce to zero,
so it is skipped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from common.errors import InputError
from observability.metrics import Metrics

from .filtration import Filtration

INF = math.inf


@dataclass(frozen=True)
class PersistencePair:
    dim: int
    birth: float
    death: float

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.death)

    @property
    def persistence(self) -> float:
        return self.death - self.birth


@dataclass(eq=False)
class PersistenceDiagram:
    pairs: List[PersistencePair]
    meta: Dict[str, Any] = field(default_factory=dict)

    def by_dim(self, dim: int) -> List[PersistencePair]:
        return [p for p in self.pairs if p.dim == dim]

    def multiset(self) -> List[Tuple[int, float, float]]:
        return sorted((p.dim, p.birth, p.death) for p in self.pairs)

    @property
    def max_dim(self) -> int:
        if "max_dim" in self.meta:
            return int(self.meta["max_dim"])
        return max((p.dim for p in self.pairs), default=0)


@dataclass(frozen=True)
class BettiSummary:
    betti: List[int]
    threshold_rule: Dict[str, Any]

    def matches(self, expected: Dict[int, int]) -> bool:
        return all(d < len(self.betti) and self.betti[d] == c for d, c in expected.items())


@dataclass(frozen=True)
class Reduction:
    """Index-level result: (creator, destroyer) pairs and unpaired creators."""

    pairs: List[Tuple[int, int]]
    essential: List[int]


def _boundary(filt: Filtration, j: int) -> Set[int]:
    verts = filt.simplices[j].vertices
    if len(verts) == 1:
        return set()
    index = filt.index
    return {index[verts[:k] + verts[k + 1 :]] for k in range(len(verts))}


def reduce_boundary(filt: Filtration, *, clearing: bool = True, metrics: Optional[Metrics] = None) -> Reduction:
    """Standard column reduction; `clearing=False` is the plain left-to-right variant."""
    m = len(filt.simplices)
    dims = [s.dim for s in filt.simplices]
    if clearing:
        order = sorted(range(m), key=lambda j: (-dims[j], j))
    else:
        order = list(range(m))

    pivot_of: Dict[int, int] = {}
    reduced: Dict[int, Set[int]] = {}
    cleared: Set[int] = set()
    n_reduced = 0

    for j in order:
        if dims[j] == 0 or j in cleared:
            continue
        col = _boundary(filt, j)
        n_reduced += 1
        while col:
            low = max(col)
            k = pivot_of.get(low)
            if k is None:
                break
            col ^= reduced[k]
        if col:
            low = max(col)
            pivot_of[low] = j
            reduced[j] = col
            if clearing:
                cleared.add(low)

    if metrics is not None:
        metrics.inc("columns_reduced", n_reduced)
        metrics.inc("columns_cleared", len(cleared))

    pairs = sorted((low, j) for low, j in pivot_of.items())
    paired = set(pivot_of) | set(reduced)
    essential = [i for i in range(m) if i not in paired]
    return Reduction(pairs=pairs, essential=essential)


def compute_persistence(
    filt: Filtration,
    *,
    clearing: bool = True,
    meta: Optional[Dict[str, Any]] = None,
    metrics: Optional[Metrics] = None,
) -> PersistenceDiagram:
    """
    Diagram in dimensions 0..max_dim. Zero-length pairs are dropped; creators
    left unpaired at r_max become infinite bars.
    """
    red = reduce_boundary(filt, clearing=clearing, metrics=metrics)
    simplices = filt.simplices
    out: List[PersistencePair] = []
    for b, d in red.pairs:
        sb, sd = simplices[b], simplices[d]
        if sb.dim > filt.max_dim or sb.value == sd.value:
            continue
        out.append(PersistencePair(sb.dim, sb.value, sd.value))
    for e in red.essential:
        s = simplices[e]
        if s.dim <= filt.max_dim:
            out.append(PersistencePair(s.dim, s.value, INF))
    out.sort(key=lambda p: (p.dim, p.birth, p.death))

    n_vertices = sum(1 for s in simplices if s.dim == 0)
    info: Dict[str, Any] = {"N": n_vertices, "r_max": filt.r_max, "max_dim": filt.max_dim, "simplices": len(simplices)}
    info.update(meta or {})
    return PersistenceDiagram(pairs=out, meta=info)


def betti_summary(diag: PersistenceDiagram, rho: float = 0.3) -> BettiSummary:
    """
    Count significant bars per dimension.

    scale = largest finite death in the diagram (r_max when every bar is
    infinite) and cut = rho * scale. A finite bar in dimension >= 1 counts
    when death - birth >= cut. This is stricter than "infinite, or
    persistence >= cut" in two places:

    - dimension 0 counts only the components alive at the cutoff; a finite
      H0 bar is a merge and never counts, however long;
    - in dimension >= 1 a bar still alive at r_max counts only when
      r_max - birth >= cut, so a class cut off by a low r_max shortly after
      its birth is not reported.

    Under the enclosing-radius cutoff the H0 component is the only infinite
    bar, and the second clause never applies.
    """
    if not diag.pairs:
        raise InputError("cannot summarize an empty diagram")
    if not 0.0 < rho < 1.0:
        raise InputError("rho must lie in (0, 1)", {"rho": rho})
    r_max = diag.meta.get("r_max")
    r_max = float(r_max) if r_max is not None else None
    finite_deaths = [p.death for p in diag.pairs if not p.is_infinite]
    if finite_deaths:
        scale = max(finite_deaths)
    else:
        scale = r_max if r_max is not None else 0.0
    cut = rho * scale

    betti = [0] * (diag.max_dim + 1)
    for p in diag.pairs:
        if p.dim >= len(betti):
            continue
        if p.dim == 0:
            significant = p.is_infinite
        elif p.is_infinite:
            significant = r_max is None or (r_max - p.birth) >= cut
        else:
            significant = p.persistence >= cut
        if significant:
            betti[p.dim] += 1
    rule = {"rho": rho, "scale": scale, "r_max": r_max}
    return BettiSummary(betti=betti, threshold_rule=rule)


def _finite_bottleneck(a: np.ndarray, b: np.ndarray) -> float:
    p, q = len(a), len(b)
    if p + q == 0:
        return 0.0
    size = p + q
    cost = np.full((size, size), np.inf)
    if p and q:
        cost[:p, :q] = np.maximum(np.abs(a[:, None, 0] - b[None, :, 0]), np.abs(a[:, None, 1] - b[None, :, 1]))
    for i in range(p):
        cost[i, q + i] = (a[i, 1] - a[i, 0]) / 2.0
    for j in range(q):
        cost[p + j, j] = (b[j, 1] - b[j, 0]) / 2.0
    cost[p:, q:] = 0.0

    candidates = np.unique(cost[np.isfinite(cost)])
    lo, hi = 0, len(candidates) - 1
    while lo < hi:
        mid = (lo + hi) // 2
        graph = csr_matrix((cost <= candidates[mid]).astype(np.int8))
        matched = maximum_bipartite_matching(graph, perm_type="column")
        if np.all(matched >= 0):
            hi = mid
        else:
            lo = mid + 1
    return float(candidates[lo])


def bottleneck_distance(a: Sequence[PersistencePair], b: Sequence[PersistencePair], dim: int) -> float:
    """Exact bottleneck distance between the `dim` parts of two small diagrams."""
    fa = np.array([(p.birth, p.death) for p in a if p.dim == dim and not p.is_infinite]).reshape(-1, 2)
    fb = np.array([(p.birth, p.death) for p in b if p.dim == dim and not p.is_infinite]).reshape(-1, 2)
    ia = sorted(p.birth for p in a if p.dim == dim and p.is_infinite)
    ib = sorted(p.birth for p in b if p.dim == dim and p.is_infinite)
    if len(ia) != len(ib):
        return INF
    essential = max((abs(x - y) for x, y in zip(ia, ib)), default=0.0)
    return max(essential, _finite_bottleneck(fa, fb))
