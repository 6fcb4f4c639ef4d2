"""
Matching-substring (slack) distance between observation series.

For two length-n series the match profile eps[L] is the smallest ε such that
some pair of aligned runs of length L stays within ε at every step:

    eps[L] = min_{i, j} max_{m < L} ||y1(i+m) - y2(j+m)||

The fast path activates the n² cells of the step-distance matrix in
ascending order and keeps track of maximal active diagonal runs; a run of
length L first appears exactly at value eps[L]. Sorting dominates, so one
profile costs O(n² log n) time and O(n²) space.

Slack t corresponds to run length ℓ = n - t.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numba import njit

from common.errors import InputError, RefusalError
from observation.functions import ObservationSeries
from observability.metrics import Metrics

BRUTEFORCE_MAX_N = 200


@dataclass(frozen=True, eq=False)
class MatchProfile:
    """eps[L] for run lengths L = 0..n (eps[0] = 0 for the empty run)."""

    eps: np.ndarray

    @property
    def n(self) -> int:
        return int(self.eps.shape[0] - 1)

    def at(self, run_length: int) -> float:
        if not 1 <= run_length <= self.n:
            raise InputError("run length out of range", {"run_length": run_length, "n": self.n})
        return float(self.eps[run_length])


@dataclass(frozen=True, eq=False)
class DissimilarityMatrix:
    values: np.ndarray  # (N, N)
    t: int
    n: int

    def __post_init__(self) -> None:
        d = np.asarray(self.values, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise InputError("dissimilarity matrix must be square", {"shape": list(d.shape)})
        if not np.all(np.isfinite(d)) or np.any(d < 0):
            raise InputError("dissimilarity entries must be finite and >= 0")
        if not np.array_equal(d, d.T):
            raise InputError("dissimilarity matrix must be symmetric")
        if np.any(np.diag(d) != 0):
            raise InputError("dissimilarity matrix must have a zero diagonal")
        object.__setattr__(self, "values", d)

    @property
    def size(self) -> int:
        return int(self.values.shape[0])

    @property
    def run_length(self) -> int:
        return self.n - self.t


def _as_values(y) -> np.ndarray:
    vals = y.values if isinstance(y, ObservationSeries) else np.asarray(y, dtype=float)
    if vals.ndim == 1:
        vals = vals[:, None]
    return vals


def _check_pair(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[0] != b.shape[0]:
        raise InputError("series lengths differ", {"n1": int(a.shape[0]), "n2": int(b.shape[0])})
    if a.shape[1] != b.shape[1]:
        raise InputError("series dimensions differ", {"d1": int(a.shape[1]), "d2": int(b.shape[1])})
    if a.shape[0] < 1:
        raise InputError("series must be non-empty")


def step_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Euclidean distance between every step of `a` and every step of `b`."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.sum(diff * diff, axis=-1))


@njit(nogil=True)
def _merge_runs(order, dist_flat, n):  # pragma: no cover - compiled
    raw = np.full(n + 1, np.inf)
    active = np.zeros(n * n, dtype=np.bool_)
    # start_of is valid at run tails, end_of at run heads.
    start_of = np.zeros(n * n, dtype=np.int64)
    end_of = np.zeros(n * n, dtype=np.int64)
    stride = n + 1
    for k in range(order.shape[0]):
        c = order[k]
        i = c // n
        j = c - i * n
        active[c] = True
        s = c
        e = c
        if i > 0 and j > 0 and active[c - stride]:
            s = start_of[c - stride]
        if i < n - 1 and j < n - 1 and active[c + stride]:
            e = end_of[c + stride]
        end_of[s] = e
        start_of[e] = s
        length = (e - s) // stride + 1
        v = dist_flat[c]
        if v < raw[length]:
            raw[length] = v
    return raw


def _monotone(raw: np.ndarray) -> np.ndarray:
    eps = np.minimum.accumulate(raw[::-1])[::-1].copy()
    eps[0] = 0.0
    return eps


def _profile_values(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.shape[0]
    d = step_distances(a, b).ravel()
    # Stable sort: equal distances keep row-major (i, j) order.
    order = np.argsort(d, kind="stable").astype(np.int64)
    return _monotone(_merge_runs(order, d, n))


def match_profile(y1, y2) -> MatchProfile:
    a, b = _as_values(y1), _as_values(y2)
    _check_pair(a, b)
    return MatchProfile(eps=_profile_values(a, b))


def match_profile_bruteforce(y1, y2) -> MatchProfile:
    """Direct evaluation of the min-max definition; O(n³), for verification only."""
    a, b = _as_values(y1), _as_values(y2)
    _check_pair(a, b)
    n = a.shape[0]
    if n > BRUTEFORCE_MAX_N:
        raise RefusalError(f"brute-force profile refused for n={n} > {BRUTEFORCE_MAX_N}", {"n": n})
    d = step_distances(a, b)
    eps = np.zeros(n + 1)
    window_max = d.copy()
    eps[1] = window_max.min()
    for length in range(2, n + 1):
        m = n - length + 1
        window_max = np.maximum(window_max[:m, :m], d[length - 1 :, length - 1 :])
        eps[length] = window_max.min()
    return MatchProfile(eps=eps)


def slack_distance(profile: MatchProfile, t: int) -> float:
    n = profile.n
    if int(t) != t or not 0 <= t <= n - 1:
        raise InputError(f"slack t must be an integer in [0, {n - 1}]", {"t": t, "n": n})
    return float(profile.eps[n - int(t)])


@dataclass(frozen=True, eq=False)
class ProfileTable:
    """All pairwise match profiles of one sample: eps[a, b, L]."""

    eps: np.ndarray  # (N, N, n+1)

    @property
    def size(self) -> int:
        return int(self.eps.shape[0])

    @property
    def n(self) -> int:
        return int(self.eps.shape[2] - 1)

    def profile(self, a: int, b: int) -> MatchProfile:
        return MatchProfile(eps=self.eps[a, b].copy())

    def at_slack(self, t: int) -> DissimilarityMatrix:
        n = self.n
        if int(t) != t or not 0 <= t <= n - 1:
            raise InputError(f"slack t must be an integer in [0, {n - 1}]", {"t": t, "n": n})
        return DissimilarityMatrix(values=self.eps[:, :, n - int(t)].copy(), t=int(t), n=n)


def _stack(series: Sequence) -> list[np.ndarray]:
    values = [_as_values(s) for s in series]
    if not values:
        raise InputError("need at least one series")
    for v in values[1:]:
        _check_pair(values[0], v)
    return values


def profile_table(series: Sequence, *, threads: int = 1, metrics: Optional[Metrics] = None) -> ProfileTable:
    """
    Profiles for every unordered pair, computed once and mirrored. Rows are
    distributed over `threads` workers; every pair writes its own cells.
    """
    values = _stack(series)
    count, n = len(values), values[0].shape[0]
    eps = np.zeros((count, count, n + 1))

    def _row(a: int) -> int:
        for b in range(a + 1, count):
            prof = _profile_values(values[a], values[b])
            eps[a, b] = prof
            eps[b, a] = prof
        return count - a - 1

    if threads > 1 and count > 2:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            done = sum(pool.map(_row, range(count)))
    else:
        done = sum(_row(a) for a in range(count))
    if metrics is not None:
        metrics.inc("pairs_total", done)
    return ProfileTable(eps=eps)


def dissimilarity_matrix(series: Sequence, t: int, *, threads: int = 1, metrics: Optional[Metrics] = None) -> DissimilarityMatrix:
    return profile_table(series, threads=threads, metrics=metrics).at_slack(t)
