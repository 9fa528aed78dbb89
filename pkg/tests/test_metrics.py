import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from creditstory.metrics import (
    DegenerateLabels,
    TooFewScores,
    auc,
    auc_pairwise,
    bin_shares,
    decile_edges,
    deciles_and_psi,
    evaluate_scores,
    ks,
    psi_from_shares,
)


def test_auc_examples():
    assert auc([0.9, 0.8, 0.3], [1, 0, 1]) == 0.5
    assert auc([0.9, 0.8, 0.7, 0.1], [1, 1, 0, 0]) == 1.0
    assert auc([0.5, 0.5], [1, 0]) == 0.5


def test_auc_matches_pairwise_200_instances():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n = int(rng.integers(2, 40))
        s = np.round(rng.random(n), int(rng.integers(1, 3)))  # coarse rounding forces ties
        y = rng.integers(0, 2, n)
        y[0], y[1] = 0, 1
        assert abs(auc(s, y) - auc_pairwise(s, y)) < 1e-12


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 5), st.booleans()), min_size=2, max_size=30))
def test_property_auc_pairwise(pairs):
    s = [p[0] for p in pairs]
    y = [int(p[1]) for p in pairs]
    if len(set(y)) < 2:
        return
    assert abs(auc(s, y) - auc_pairwise(s, y)) < 1e-12


def test_degenerate_labels():
    with pytest.raises(DegenerateLabels):
        auc([0.1, 0.2], [1, 1])
    with pytest.raises(DegenerateLabels):
        ks([0.1, 0.2], [0, 0])


def test_ks():
    assert ks([0.9, 0.1], [1, 0]) == 1.0
    assert ks([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0
    assert ks([0.5, 0.5], [1, 0]) == 0.0
    rng = np.random.default_rng(3)
    assert ks(rng.random(10_000), rng.integers(0, 2, 10_000)) < 0.05


def test_ks_brute_force():
    rng = np.random.default_rng(5)
    for _ in range(50):
        s = np.round(rng.random(30), 1)
        y = rng.integers(0, 2, 30)
        y[:2] = [0, 1]
        best = max(abs((s[y == 1] >= t).mean() - (s[y == 0] >= t).mean()) for t in np.unique(s))
        assert abs(ks(s, y) - best) < 1e-12


def test_uniform_edges():
    edges = decile_edges(np.linspace(0, 1, 100_001))
    np.testing.assert_allclose(edges, np.arange(1, 10) / 10, atol=1e-9)


def test_psi_identical_is_zero():
    rng = np.random.default_rng(0)
    s = rng.random(1000)
    assert deciles_and_psi(s, s)[1] == 0.0
    assert psi_from_shares([0.1] * 10, [0.1] * 10) == 0.0


def test_psi_all_mass_in_one_decile():
    # direct evaluation: eval shares (1, 0, ..., 0) floored at 1e-4 and renormalized; train shares 0.1 each
    a = np.array([1.0] + [1e-4] * 9) / (1 + 9e-4)
    e = np.full(10, 0.1)
    want = sum((ai - ei) * math.log(ai / ei) for ai, ei in zip(a, e))
    train = np.linspace(0, 1, 10_000)
    edges, psi = deciles_and_psi(train, np.full(500, -1.0))
    assert bin_shares(np.full(500, -1.0), edges)[0] == 1.0
    assert abs(psi - want) < 1e-12


def test_too_few_scores():
    with pytest.raises(TooFewScores):
        decile_edges([0.1] * 9)


def test_evaluate_scores_report():
    rng = np.random.default_rng(1)
    s = rng.random(200)
    y = (rng.random(200) < s).astype(int)
    r = evaluate_scores(s, y, s, n_none=7)
    assert r.auc == auc(s, y) and r.ks == ks(s, y)
    assert r.psi == 0.0 and len(r.decile_edges) == 9
    assert r.n == 200 and r.n_none == 7 and r.event_rate == y.mean()
    d = evaluate_scores(s[:5], [0] * 5)
    assert d.auc is None and d.psi is None
