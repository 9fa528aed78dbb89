import datetime as dt
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import block
from creditstory.bureau import CustomerFile, Inquiry, parse_customer
from creditstory.temporal import (
    EMPTY_SENTINEL,
    STD_FLOOR,
    EmptyTrainingSet,
    aggregate,
    apply,
    compute_deltas,
    fit_standardizer,
    temporal_vector,
)

RUN = dt.date(2018, 2, 1)


def _inq(d):
    return Inquiry("BANK01", d, "CC")


def test_calendar_deltas():
    cf = CustomerFile("A" * 12, RUN, tuple(_inq(d) for d in (dt.date(2017, 2, 1), dt.date(2018, 1, 1),
                                                             dt.date(2017, 8, 1))))
    assert compute_deltas(cf) == {"TR": [], "IN": [-365, -31, -184], "CL": []}


def test_same_day_is_zero():
    cf = CustomerFile("A" * 12, RUN, (_inq(RUN),))
    assert compute_deltas(cf)["IN"] == [0]


def test_aggregate_examples():
    v = aggregate({"TR": [-365, -31, -184], "IN": [-10], "CL": []})
    np.testing.assert_array_equal(v[:2], [-365, -31])
    assert abs(v[2] - (-193.33333333333334)) < 1e-12
    np.testing.assert_array_equal(v[3:6], [-10, -10, -10])
    np.testing.assert_array_equal(v[6:], [EMPTY_SENTINEL] * 3)


def test_all_empty_is_sentinel():
    v = temporal_vector(parse_customer(block()))
    np.testing.assert_array_equal(v, np.full(9, -3650.0))


def _brute(values):
    mean = Fraction(sum(values), len(values))
    return min(values), max(values), mean


def test_oracle_1000_random_sets():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        sets = {}
        for s in ("TR", "IN", "CL"):
            k = int(rng.integers(0, 12))
            days = rng.integers(0, 20 * 365, size=k)
            sets[s] = [(RUN - dt.timedelta(days=int(d)) - RUN).days for d in days]
        v = aggregate(sets)
        for i, s in enumerate(("TR", "IN", "CL")):
            if not sets[s]:
                assert list(v[3 * i:3 * i + 3]) == [EMPTY_SENTINEL] * 3
                continue
            lo, hi, mean = _brute(sets[s])
            assert v[3 * i] == lo and v[3 * i + 1] == hi
            assert abs(Fraction(v[3 * i + 2]) - mean) <= Fraction(1, 10**12)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-20000, 0), min_size=1, max_size=30), st.randoms(use_true_random=False))
def test_property_order_stable(values, rnd):
    shuffled = list(values)
    rnd.shuffle(shuffled)
    a = aggregate({"TR": values})
    b = aggregate({"TR": shuffled})
    np.testing.assert_array_equal(a, b)
    assert a[0] <= a[2] <= a[1]


def test_no_positive_delta_in_corpus(small_corpus):
    files, _ = small_corpus
    for cf in files:
        for deltas in compute_deltas(cf).values():
            assert all(d <= 0 for d in deltas)


def test_standardizer():
    rng = np.random.default_rng(7)
    x = rng.normal(size=(1000, 9)) * 50 + 3
    x[:, 4] = 2.0
    std = fit_standardizer(x)
    assert std.std[4] == STD_FLOOR
    z = apply(std, x)
    assert np.all(np.abs(z.mean(axis=0)) < 1e-9)
    np.testing.assert_array_equal(z[:, 4], 0.0)
    np.testing.assert_array_equal(apply(std, std.mean), np.zeros(9))


def test_standardizer_needs_two_rows():
    with pytest.raises(EmptyTrainingSet):
        fit_standardizer(np.zeros((1, 9)))
