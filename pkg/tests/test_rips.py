import math

import numpy as np
import pytest

from common.errors import InputError, ResourceLimitError
from core.filtration import build_vr_filtration, default_r_max, enclosing_radius, resolve_r_max
from core.persistence import betti_summary, compute_persistence
from core.rips import rips_complex, rips_persistence
from core.slack import DissimilarityMatrix
from observability.metrics import Metrics


def _matrix(values):
    return DissimilarityMatrix(values=np.asarray(values, dtype=float), t=0, n=1)


def _random_matrix(rng, count, *, levels=None):
    if levels is None:
        a = rng.uniform(0.0, 1.0, (count, count))
    else:
        a = rng.integers(1, levels + 1, (count, count)).astype(float)
    a = np.triu(a, 1)
    return _matrix(a + a.T)


def test_matches_explicit_reduction_on_random_matrices():
    rng = np.random.default_rng(3)
    for _ in range(40):
        count = int(rng.integers(4, 18))
        max_dim = int(rng.integers(0, 3))
        D = _random_matrix(rng, count)
        r_max = float(rng.uniform(0.3, 1.0))
        explicit = compute_persistence(build_vr_filtration(D, max_dim, r_max)).multiset()
        implicit = rips_persistence(rips_complex(D, max_dim, r_max)).multiset()
        assert implicit == explicit


def test_matches_explicit_reduction_with_many_ties():
    rng = np.random.default_rng(17)
    for _ in range(25):
        count = int(rng.integers(4, 14))
        D = _random_matrix(rng, count, levels=3)
        explicit = compute_persistence(build_vr_filtration(D, 2, 3.0)).multiset()
        assert rips_persistence(rips_complex(D, 2, 3.0)).multiset() == explicit


def test_counts_match_explicit_filtration():
    rng = np.random.default_rng(9)
    D = _random_matrix(rng, 15)
    for max_dim in (0, 1, 2):
        rc = rips_complex(D, max_dim, 0.7)
        filt = build_vr_filtration(D, max_dim, 0.7)
        assert rc.counts_by_dim() == filt.counts_by_dim()
        assert len(rc) == len(filt)


def test_square_cycle_with_and_without_diagonals():
    square = _matrix([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]])
    diag = rips_persistence(rips_complex(square, 1, 3.0))
    assert [(p.birth, p.death) for p in diag.by_dim(1)] == [(1.0, 2.0)]
    hollow = rips_persistence(rips_complex(square, 1, 1.5))
    assert [(p.birth, p.death) for p in hollow.by_dim(1)] == [(1.0, math.inf)]


def test_enclosing_cutoff_leaves_one_infinite_bar(rng):
    D = _random_matrix(rng, 16)
    radius = enclosing_radius(D)
    diag = rips_persistence(rips_complex(D, 2, radius))
    assert [p for p in diag.pairs if p.is_infinite] == [p for p in diag.by_dim(0) if p.is_infinite]
    assert len([p for p in diag.pairs if p.is_infinite]) == 1
    wider = rips_persistence(rips_complex(D, 2, 2.0 * radius))
    assert wider.multiset() == diag.multiset()


def test_enclosing_radius_examples():
    assert enclosing_radius(_matrix([[0, 2], [2, 0]])) == 2.0
    # the middle point reaches both ends within 1
    assert enclosing_radius(_matrix([[0, 1, 2], [1, 0, 1], [2, 1, 0]])) == 1.0
    with pytest.raises(InputError):
        enclosing_radius(_matrix(np.zeros((3, 3))))
    with pytest.raises(InputError):
        enclosing_radius(_matrix([[0.0]]))


def test_resolve_r_max_policies():
    D = _matrix([[0, 1, 2], [1, 0, 1], [2, 1, 0]])
    assert resolve_r_max(D) == 1.0
    assert resolve_r_max(D, policy="mst") == default_r_max(D) == 1.5
    assert resolve_r_max(D, 0.4, policy="mst") == 0.4
    with pytest.raises(InputError):
        resolve_r_max(D, policy="quantile")


def test_circle_recovered_at_enclosing_radius(circle_matrix):
    D = circle_matrix(20)
    diag = rips_persistence(rips_complex(D, 2, enclosing_radius(D)))
    assert betti_summary(diag, rho=0.3).betti == [1, 1, 0]


def test_budget_counts_stored_simplices_only(rng):
    D = _random_matrix(rng, 10)
    rc = rips_complex(D, 1, 2.0)
    # 10 vertices + 45 edges are stored; the 120 triangles are generated on demand.
    assert rc.materialized() == 55
    assert rc.counts_by_dim()[2] == 120
    rips_complex(D, 1, 2.0, budget=55)
    with pytest.raises(ResourceLimitError) as exc:
        rips_complex(D, 1, 2.0, budget=54)
    assert exc.value.data["budget"] == 54


def test_clearing_counters(rng):
    D = _random_matrix(rng, 14)
    m = Metrics()
    rips_persistence(rips_complex(D, 2, 0.9, metrics=m), metrics=m)
    counters = m.counters()
    assert counters["columns_cleared"] > 0
    assert counters["columns_reduced"] > 0
    assert counters["simplices_total"] == rips_complex(D, 2, 0.9).materialized()


def test_bad_arguments():
    D = _matrix([[0, 1], [1, 0]])
    with pytest.raises(InputError):
        rips_complex(D, -1, 1.0)
    with pytest.raises(InputError):
        rips_complex(D, 1, 0.0)


def test_disconnected_components_stay_infinite():
    D = _matrix([[0, 1, 5, 5], [1, 0, 5, 5], [5, 5, 0, 1], [5, 5, 1, 0]])
    diag = rips_persistence(rips_complex(D, 1, 2.0))
    assert sorted(p.death for p in diag.by_dim(0)) == [1.0, 1.0, math.inf, math.inf]


def test_full_cutoff_fits_where_explicit_filtration_does_not(rng):
    D = _random_matrix(rng, 120)
    radius = enclosing_radius(D)
    with pytest.raises(ResourceLimitError):
        build_vr_filtration(D, 2, radius, budget=1_000_000)
    rc = rips_complex(D, 2, radius, budget=1_000_000)
    diag = rips_persistence(rc)
    assert rc.counts_by_dim()[3] > 1_000_000
    assert sum(p.is_infinite for p in diag.pairs) == 1
