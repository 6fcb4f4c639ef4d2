import math

import numpy as np
import pytest

from common.errors import InputError
from core.filtration import FilteredSimplex, Filtration, build_vr_filtration
from core.persistence import (
    PersistenceDiagram,
    PersistencePair,
    betti_summary,
    bottleneck_distance,
    compute_persistence,
    reduce_boundary,
)
from core.slack import DissimilarityMatrix
from observability.metrics import Metrics


def _matrix(values):
    return DissimilarityMatrix(values=np.asarray(values, dtype=float), t=0, n=1)


def _random_matrix(rng, count):
    a = np.triu(rng.uniform(0.0, 1.0, (count, count)), 1)
    return _matrix(a + a.T)


def test_triangle_components_and_filled_cycle():
    D = _matrix([[0, 1, 1], [1, 0, 1], [1, 1, 0]])
    diag = compute_persistence(build_vr_filtration(D, max_dim=1, r_max=2.0))
    assert diag.multiset() == [(0, 0.0, 1.0), (0, 0.0, 1.0), (0, 0.0, math.inf)]


def test_square_has_a_short_lived_cycle():
    # 4-cycle with side 1 and diagonals 2: H1 born at 1, killed at 2.
    D = _matrix([[0, 1, 2, 1], [1, 0, 1, 2], [2, 1, 0, 1], [1, 2, 1, 0]])
    diag = compute_persistence(build_vr_filtration(D, max_dim=1, r_max=3.0))
    assert diag.by_dim(1) == [PersistencePair(1, 1.0, 2.0)]
    assert len(diag.by_dim(0)) == 4


def test_clearing_matches_plain_reduction():
    rng = np.random.default_rng(11)
    for _ in range(50):
        count = int(rng.integers(5, 26))
        D = _random_matrix(rng, count)
        filt = build_vr_filtration(D, max_dim=2, r_max=float(rng.uniform(0.3, 0.7)))
        fast = compute_persistence(filt, clearing=True).multiset()
        plain = compute_persistence(filt, clearing=False).multiset()
        assert fast == plain


def test_clearing_skips_columns():
    rng = np.random.default_rng(5)
    filt = build_vr_filtration(_random_matrix(rng, 12), max_dim=2, r_max=0.8)
    m = Metrics()
    reduce_boundary(filt, clearing=True, metrics=m)
    counters = m.counters()
    assert counters["columns_cleared"] > 0
    plain = Metrics()
    reduce_boundary(filt, clearing=False, metrics=plain)
    assert counters["columns_reduced"] < plain.counters()["columns_reduced"]


def test_circle_has_one_significant_loop(circle_matrix):
    D = circle_matrix(20)
    diag = compute_persistence(build_vr_filtration(D, max_dim=2, r_max=2.5))
    summary = betti_summary(diag, rho=0.3)
    assert summary.betti == [1, 1, 0]
    assert len([p for p in diag.by_dim(1) if p.persistence >= 0.3 * summary.threshold_rule["scale"]]) == 1


def test_euler_characteristic_of_full_complex(rng):
    D = _random_matrix(rng, 9)
    filt = build_vr_filtration(D, max_dim=2, r_max=0.6)
    red = reduce_boundary(filt)
    essential = sum((-1) ** filt.simplices[i].dim for i in red.essential)
    simplices = sum((-1) ** d * c for d, c in filt.counts_by_dim().items())
    assert essential == simplices
    assert len(red.pairs) * 2 + len(red.essential) == len(filt)


def test_h0_has_one_bar_per_vertex_when_connected(rng):
    D = _random_matrix(rng, 14)
    diag = compute_persistence(build_vr_filtration(D, max_dim=1, r_max=2.0))
    h0 = diag.by_dim(0)
    # zero-length merges are dropped; random distances are distinct and positive.
    assert len(h0) == 14
    assert sum(p.is_infinite for p in h0) == 1


def test_betti_rule_examples():
    diag = PersistenceDiagram(
        pairs=[
            PersistencePair(0, 0.0, 0.5),
            PersistencePair(0, 0.0, 1.0),
            PersistencePair(0, 0.0, math.inf),
            PersistencePair(1, 0.5, 0.6),
            PersistencePair(1, 0.2, 0.9),
            PersistencePair(2, 0.4, math.inf),
        ],
        meta={"r_max": 1.5, "max_dim": 2},
    )
    summary = betti_summary(diag, rho=0.3)
    assert summary.threshold_rule == {"rho": 0.3, "scale": 1.0, "r_max": 1.5}
    assert summary.betti == [1, 1, 1]
    assert summary.matches({0: 1, 1: 1})
    assert not summary.matches({1: 2})


def test_betti_summary_errors():
    with pytest.raises(InputError):
        betti_summary(PersistenceDiagram(pairs=[]))
    diag = PersistenceDiagram(pairs=[PersistencePair(0, 0.0, math.inf)])
    with pytest.raises(InputError):
        betti_summary(diag, rho=1.5)


def test_bottleneck_basics():
    a = [PersistencePair(1, 0.0, 1.0)]
    b = [PersistencePair(1, 0.1, 1.1)]
    assert bottleneck_distance(a, b, 1) == pytest.approx(0.1)
    assert bottleneck_distance(a, [], 1) == pytest.approx(0.5)
    assert bottleneck_distance([PersistencePair(0, 0.0, math.inf)], [], 0) == math.inf


def test_stability_under_small_perturbation():
    rng = np.random.default_rng(21)
    eta = 1e-3
    for _ in range(10):
        D = _random_matrix(rng, 10)
        noise = np.triu(rng.uniform(-eta, eta, (10, 10)), 1)
        D2 = _matrix(np.clip(D.values + noise + noise.T, 0.0, None))
        a = compute_persistence(build_vr_filtration(D, max_dim=1, r_max=5.0))
        b = compute_persistence(build_vr_filtration(D2, max_dim=1, r_max=5.0))
        for dim in (0, 1):
            assert bottleneck_distance(a.pairs, b.pairs, dim) <= eta + 1e-12


def test_tie_order_does_not_change_the_diagram():
    rng = np.random.default_rng(8)
    a = np.triu(rng.integers(1, 4, (8, 8)).astype(float), 1)
    filt = build_vr_filtration(_matrix(a + a.T), max_dim=2, r_max=3.0)
    expected = compute_persistence(filt).multiset()
    for _ in range(10):
        groups = {}
        for s in filt.simplices:
            groups.setdefault((s.value, s.dim), []).append(s)
        shuffled = []
        for key in sorted(groups):
            block = list(groups[key])
            rng.shuffle(block)
            shuffled.extend(block)
        other = Filtration(simplices=shuffled, max_dim=2, r_max=3.0)
        assert other.is_valid_order()
        assert compute_persistence(other).multiset() == expected


def test_hollow_triangle_keeps_its_cycle_until_filled():
    hollow = [FilteredSimplex((v,), 0.0) for v in range(3)] + [
        FilteredSimplex((0, 1), 1.0),
        FilteredSimplex((0, 2), 1.0),
        FilteredSimplex((1, 2), 1.0),
    ]
    diag = compute_persistence(Filtration(simplices=hollow, max_dim=1, r_max=1.0))
    assert diag.by_dim(1) == [PersistencePair(1, 1.0, math.inf)]
    assert sorted(p.death for p in diag.by_dim(0)) == [1.0, 1.0, math.inf]

    filled = hollow + [FilteredSimplex((0, 1, 2), 2.0)]
    diag = compute_persistence(Filtration(simplices=filled, max_dim=1, r_max=2.0))
    assert diag.by_dim(1) == [PersistencePair(1, 1.0, 2.0)]


def test_circle_loop_dominates_every_other_cycle(circle_matrix):
    diag = compute_persistence(build_vr_filtration(circle_matrix(20), max_dim=1, r_max=2.5))
    lengths = sorted(p.persistence for p in diag.by_dim(1))
    assert lengths
    assert all(lengths[-1] >= 5.0 * other for other in lengths[:-1])
    assert lengths[-1] > 1.0
