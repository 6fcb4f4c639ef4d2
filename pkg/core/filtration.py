from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree

from app.core.config import settings
from common.errors import InputError, ResourceLimitError
from observability.metrics import Metrics

from .slack import DissimilarityMatrix

R_MAX_HEADROOM = 1.5


@dataclass(frozen=True, slots=True)
class FilteredSimplex:
    vertices: Tuple[int, ...]
    value: float

    @property
    def dim(self) -> int:
        return len(self.vertices) - 1

    def sort_key(self) -> tuple:
        return (self.value, len(self.vertices), self.vertices)


@dataclass(eq=False)
class Filtration:
    simplices: List[FilteredSimplex]
    max_dim: int
    r_max: float
    _index: Optional[Dict[Tuple[int, ...], int]] = field(default=None, repr=False)

    def __len__(self) -> int:
        return len(self.simplices)

    @property
    def index(self) -> Dict[Tuple[int, ...], int]:
        if self._index is None:
            self._index = {s.vertices: i for i, s in enumerate(self.simplices)}
        return self._index

    def counts_by_dim(self) -> Dict[int, int]:
        out: Dict[int, int] = {}
        for s in self.simplices:
            out[s.dim] = out.get(s.dim, 0) + 1
        return out

    def is_valid_order(self) -> bool:
        """Faces precede cofaces with no larger value, in one pass."""
        seen: Dict[Tuple[int, ...], float] = {}
        for s in self.simplices:
            if s.dim > 0:
                for k in range(len(s.vertices)):
                    face = s.vertices[:k] + s.vertices[k + 1 :]
                    fv = seen.get(face)
                    if fv is None or fv > s.value:
                        return False
            seen[s.vertices] = s.value
        return True

    def dump(self, path: str | Path) -> Path:
        """One simplex per line: `value dim v0 v1 ...`, ascending filtration order."""
        p = Path(path)
        with p.open("w", encoding="utf-8") as fh:
            for s in self.simplices:
                fh.write(f"{s.value!r} {s.dim} {' '.join(str(v) for v in s.vertices)}\n")
        return p


def default_r_max(D: DissimilarityMatrix) -> float:
    """1.5 × the longest edge of a minimum spanning tree of D."""
    values = D.values
    if values.shape[0] < 2:
        raise InputError("default r_max needs at least two trajectories", {"N": int(values.shape[0])})
    # csgraph treats zeros as missing edges; keep zero-distance pairs as (tiny) edges.
    tiny = np.finfo(float).tiny
    graph = np.where(values > 0, values, tiny)
    np.fill_diagonal(graph, 0.0)
    mst = minimum_spanning_tree(graph)
    longest = float(mst.data.max()) if mst.nnz else 0.0
    if longest <= tiny:
        raise InputError("all dissimilarities are zero; no default cutoff exists")
    return R_MAX_HEADROOM * longest


def enclosing_radius(D: DissimilarityMatrix) -> float:
    """
    min over vertices of the largest dissimilarity to any other vertex. From
    this value on the complex is a cone, so a cutoff here loses no bar and
    leaves only one infinite bar (the H0 component).
    """
    values = D.values
    if values.shape[0] < 2:
        raise InputError("enclosing radius needs at least two trajectories", {"N": int(values.shape[0])})
    radius = float(values.max(axis=1).min())
    if radius <= 0:
        raise InputError("all dissimilarities are zero; no default cutoff exists")
    return radius


CUTOFF_POLICIES = {"enclosing": enclosing_radius, "mst": default_r_max}


def resolve_r_max(D: DissimilarityMatrix, r_max: Optional[float] = None, policy: str = "enclosing") -> float:
    if r_max is not None:
        return float(r_max)
    try:
        return CUTOFF_POLICIES[policy](D)
    except KeyError:
        raise InputError(f"unknown cutoff policy '{policy}'", {"allowed": sorted(CUTOFF_POLICIES)}) from None


def build_vr_filtration(
    D: DissimilarityMatrix,
    max_dim: int,
    r_max: float,
    *,
    budget: Optional[int] = None,
    metrics: Optional[Metrics] = None,
) -> Filtration:
    """
    Vietoris-Rips filtration up to dimension max_dim + 1 on the r_max-thresholded graph.

    A simplex enters at the largest dissimilarity among its vertex pairs.
    D need not satisfy the triangle inequality. Every simplex is held as an
    object; `rips.rips_complex` is the array form the pipeline runs on.
    """
    if int(max_dim) != max_dim or max_dim < 0:
        raise InputError("max_dim must be a non-negative integer", {"max_dim": max_dim})
    if not np.isfinite(r_max) or r_max <= 0:
        raise InputError("r_max must be > 0", {"r_max": r_max})
    budget = int(budget if budget is not None else settings.SIMPLEX_BUDGET)
    top = int(max_dim) + 1
    dist = D.values.tolist()
    count = D.size

    upper: List[int] = []
    for v in range(count):
        row = dist[v]
        mask = 0
        for u in range(v + 1, count):
            if row[u] <= r_max:
                mask |= 1 << u
        upper.append(mask)

    simplices: List[FilteredSimplex] = [FilteredSimplex((v,), 0.0) for v in range(count)]

    def _over_budget() -> ResourceLimitError:
        return ResourceLimitError(
            f"filtration exceeds the simplex budget of {budget}; lower r_max or the number of trajectories",
            {"budget": budget, "r_max": r_max, "N": count, "max_dim": int(max_dim)},
        )

    if len(simplices) > budget:
        raise _over_budget()

    for v in range(count):
        # (vertices, value, common higher neighbours)
        stack: List[Tuple[Tuple[int, ...], float, int]] = [((v,), 0.0, upper[v])]
        while stack:
            verts, value, cand = stack.pop()
            if len(verts) > top:
                continue
            while cand:
                low = cand & -cand
                w = low.bit_length() - 1
                cand ^= low
                new_value = value
                for u in verts:
                    d = dist[u][w]
                    if d > new_value:
                        new_value = d
                new_verts = verts + (w,)
                simplices.append(FilteredSimplex(new_verts, float(new_value)))
                if len(simplices) > budget:
                    raise _over_budget()
                if len(new_verts) <= top:
                    stack.append((new_verts, new_value, cand & upper[w]))

    simplices.sort(key=FilteredSimplex.sort_key)
    if metrics is not None:
        metrics.inc("simplices_total", len(simplices))
    return Filtration(simplices=simplices, max_dim=int(max_dim), r_max=float(r_max))
