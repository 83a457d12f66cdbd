import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dcan.evaluation import EvalReport, RankedList, auc, div_at_k, metric_names, ndcg_at_k
from dcan.config import EvalConfig
from oracles import brute_auc, brute_ndcg


def ranked_from(scores, pos_index):
    ids = np.arange(len(scores)) + 100
    return RankedList.from_scores(ids, scores, int(ids[pos_index]))


class TestOracles:
    def test_1000_random_lists(self):
        rng = np.random.default_rng(0)
        for trial in range(1000):
            n = int(rng.integers(2, 102))
            # coarse grid so ties occur regularly
            scores = rng.integers(0, 12, size=n).astype(np.float64) if trial % 2 else rng.normal(size=n)
            pos = int(rng.integers(n))
            r = ranked_from(scores, pos)
            assert auc(r) == brute_auc(scores, pos)
            for k in (1, 5, 10):
                assert ndcg_at_k(r, k) == brute_ndcg(scores, pos, k)

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(-1e3, 1e3), min_size=2, max_size=40), st.data())
    def test_auc_bounds(self, scores, data):
        pos = data.draw(st.integers(0, len(scores) - 1))
        v = auc(ranked_from(np.array(scores), pos))
        assert 0.0 <= v <= 1.0


class TestAuc:
    def test_top(self):
        assert auc(ranked_from(np.array([5.0, 1, 2, 3]), 0)) == 1.0

    def test_bottom(self):
        assert auc(ranked_from(np.array([0.0, 1, 2, 3]), 0)) == 0.0

    def test_all_tied(self):
        assert auc(ranked_from(np.zeros(101), 7)) == 0.5


class TestNdcg:
    def test_rank1(self):
        assert ndcg_at_k(ranked_from(np.array([9.0, 1, 2]), 0), 10) == 1.0

    def test_rank2(self):
        v = ndcg_at_k(ranked_from(np.array([5.0, 9, 2]), 0), 10)
        assert v == pytest.approx(0.6309, abs=1e-4)

    def test_cutoff(self):
        scores = np.arange(20, dtype=float)
        scores[0] = 8.5  # 11 negatives above it, so rank 12
        assert ndcg_at_k(ranked_from(scores, 0), 10) == 0.0

    def test_rank11_is_zero(self):
        scores = np.concatenate([[0.5], np.arange(1, 11, dtype=float), [-1.0]])
        r = ranked_from(scores, 0)
        assert r.rank == 11
        assert ndcg_at_k(r, 10) == 0.0

    def test_bad_k(self):
        with pytest.raises(ValueError):
            ndcg_at_k(ranked_from(np.array([1.0, 0]), 0), 0)


class TestRankedList:
    def test_duplicates_rejected(self):
        with pytest.raises(ValueError):
            RankedList.from_scores([1, 1, 2], [0.1, 0.2, 0.3], 2)

    def test_positive_required(self):
        with pytest.raises(ValueError):
            RankedList.from_scores([1, 2, 3], [0.1, 0.2, 0.3], 9)

    def test_sorted(self):
        r = RankedList.from_scores([4, 5, 6], [0.1, 0.9, 0.5], 6)
        assert list(r.items) == [5, 6, 4]


class TestDiv:
    def test_identical(self):
        emb = np.tile(np.array([[1.0, 2.0, 3.0]]), (10, 1))
        assert div_at_k(np.arange(10), emb) == pytest.approx(0.0, abs=1e-12)

    def test_orthogonal(self):
        assert div_at_k(np.arange(5), np.eye(5)) == pytest.approx(1.0)

    def test_two_thirds(self):
        emb = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        assert div_at_k([0, 1, 2], emb) == pytest.approx(2.0 / 3.0)

    def test_permutation_and_scale_invariant(self):
        rng = np.random.default_rng(0)
        emb = rng.normal(size=(20, 6))
        top = rng.choice(20, size=8, replace=False)
        a = div_at_k(top, emb)
        assert div_at_k(top[::-1], emb) == pytest.approx(a)
        assert div_at_k(top, emb * 3.7) == pytest.approx(a)

    def test_category_mode(self):
        cats = np.array(["a", "a", "b", "c"])
        # pairs: (0,1) same, others differ -> ILS 1/6
        assert div_at_k([0, 1, 2, 3], categories=cats) == pytest.approx(5.0 / 6.0)

    def test_needs_two(self):
        with pytest.raises(ValueError):
            div_at_k([0], np.eye(2))


def test_report_aggregation():
    rep = EvalReport(["auc"], {0: {"auc": 0.6}, 1: {"auc": 0.8}})
    assert rep.mean("auc") == pytest.approx(0.7)
    assert rep.std("auc") == pytest.approx(math.sqrt(0.02))
    assert rep.records("x")[1] == {"variant": "x", "seed": 1, "auc": 0.8}
    assert metric_names(EvalConfig()) == ["auc", "ndcg@5", "ndcg@10", "div@10", "div@20", "div@50"]
