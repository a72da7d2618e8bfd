import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hae import metrics
from hae.errors import UsageError

times = st.lists(st.integers(0, 200), max_size=30).map(sorted)


def test_perfect():
    r = metrics.prf([1, 0, 1, 0], [1, 0, 1, 0])
    assert (r.precision, r.recall, r.f1) == (1, 1, 1)
    assert not r.degenerate


def test_no_predictions():
    r = metrics.prf([0, 0, 0], [1, 0, 1])
    assert (r.precision, r.recall, r.f1) == (0, 0, 0)
    assert r.degenerate


def test_hand_counts():
    pred = [1, 1, 1, 0, 0, 0]
    truth = [1, 1, 0, 1, 1, 0]
    r = metrics.prf(pred, truth)
    assert (r.tp, r.fp, r.fn) == (2, 1, 2)
    assert r.precision == pytest.approx(2 / 3)
    assert r.recall == pytest.approx(1 / 2)
    assert r.f1 == pytest.approx(4 / 7)


def test_length_mismatch():
    with pytest.raises(UsageError):
        metrics.prf([1, 0], [1])


class TestWindowed:
    def test_boundary_included(self):
        r = metrics.windowed_prf([10], [12], 2)
        assert (r.tp, r.fp, r.fn) == (1, 0, 0)

    def test_one_to_one(self):
        r = metrics.windowed_prf([10, 11], [12], 2)
        assert (r.tp, r.fp, r.fn) == (1, 1, 0)
        assert (r.precision, r.recall) == (0.5, 1.0)
        assert r.f1 == pytest.approx(2 / 3)

    def test_earliest_unmatched_truth(self):
        r = metrics.windowed_prf([5, 6], [4, 7], 1)
        assert r.tp == 2

    def test_unsorted(self):
        with pytest.raises(UsageError):
            metrics.windowed_prf([3, 1], [2], 1)
        with pytest.raises(UsageError):
            metrics.windowed_prf([1], [5, 2], 1)

    def test_negative_window(self):
        with pytest.raises(UsageError):
            metrics.windowed_prf([1], [1], -1)

    @given(st.sets(st.integers(0, 100), max_size=30), st.sets(st.integers(0, 100), max_size=30))
    def test_window_zero_is_exact(self, pred, truth):
        w = metrics.windowed_prf(sorted(pred), sorted(truth), 0)
        p = np.zeros(101, bool)
        t = np.zeros(101, bool)
        p[list(pred)] = True
        t[list(truth)] = True
        assert w == metrics.prf(p, t)

    @given(times, times, st.integers(0, 10), st.integers(0, 10))
    def test_monotone_in_window(self, pred, truth, w, extra):
        assert (metrics.windowed_prf(pred, truth, w + extra).tp
                >= metrics.windowed_prf(pred, truth, w).tp)


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_f1_properties(tp, fp, fn):
    r = metrics.from_counts(tp, fp, fn)
    assert 0 <= r.f1 <= 1
    assert (r.f1 == 0) == (tp == 0)
    swapped = metrics.from_counts(tp, fn, fp)
    assert swapped.f1 == pytest.approx(r.f1)
    if r.precision + r.recall > 0:
        assert r.f1 == pytest.approx(2 * r.precision * r.recall / (r.precision + r.recall))
