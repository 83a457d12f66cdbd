import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dcan import numerics as nx
from dcan.coverage import (
    build_coverage,
    circle_encode,
    click_ordinals,
    coverage_sequence,
    coverage_sum,
    decay_encode,
    gamma_encode,
    log_encode,
    position_average,
)
from dcan.numerics import Tensor, precision
from oracles import brute_cumsum, brute_decay


class TestCoverageSequence:
    def test_hand_example(self):
        out = coverage_sequence(np.array([[1.0, 0], [0, 1], [2, 2]])).data
        np.testing.assert_allclose(out, [[1, 0], [1, 1], [3, 3]])

    def test_zero(self):
        assert not coverage_sequence(np.zeros((4, 3))).data.any()

    def test_brute_force_50x128(self):
        rng = np.random.default_rng(0)
        R = rng.normal(size=(50, 128)).astype(np.float32)
        out = coverage_sequence(R).data
        assert np.max(np.abs(out - brute_cumsum(R.astype(np.float64), np.ones(50, bool)))) < 1e-5

    def test_padding_rows_zero_and_skipped(self):
        rng = np.random.default_rng(1)
        valid = np.array([False, False, True, True, False, True])
        R = rng.normal(size=(6, 4)) * valid[:, None]
        with precision(np.float64):
            out = coverage_sequence(R, valid).data
        np.testing.assert_allclose(out, brute_cumsum(R, valid), atol=1e-12)
        assert not out[~valid].any()
        assert list(click_ordinals(valid)) == [0, 0, 1, 2, 0, 3]

    def test_telescoping(self):
        rng = np.random.default_rng(2)
        R = rng.normal(size=(10, 5))
        with precision(np.float64):
            C = coverage_sequence(R).data
        np.testing.assert_allclose(np.diff(C, axis=0), R[1:], atol=1e-12)

    def test_batched(self):
        rng = np.random.default_rng(3)
        R = rng.normal(size=(3, 7, 4))
        valid = rng.random((3, 7)) < 0.7
        R = R * valid[..., None]
        with precision(np.float64):
            out = coverage_sequence(R, valid).data
        for b in range(3):
            np.testing.assert_allclose(out[b], brute_cumsum(R[b], valid[b]), atol=1e-12)


class TestDecay:
    def test_eta_zero_is_identity(self):
        R = np.random.default_rng(0).normal(size=(6, 3)).astype(np.float32)
        np.testing.assert_array_equal(decay_encode(R, 0.0).data, R)

    def test_eta_one_is_coverage(self):
        R = np.random.default_rng(1).normal(size=(50, 16)).astype(np.float32)
        assert np.max(np.abs(decay_encode(R, 1.0).data - coverage_sequence(R).data)) < 1e-5

    def test_half(self):
        out = decay_encode(np.array([[4.0], [2.0]]), 0.5).data
        np.testing.assert_allclose(out, [[4.0], [4.0]])

    @pytest.mark.parametrize("eta", [0.0, 0.3, 0.9, 1.0])
    def test_matches_series(self, eta):
        rng = np.random.default_rng(4)
        valid = rng.random(12) < 0.8
        R = rng.normal(size=(12, 3)) * valid[:, None]
        with precision(np.float64):
            out = decay_encode(R, eta, valid).data
        np.testing.assert_allclose(out, brute_decay(R, eta, valid), atol=1e-12)

    def test_recurrence(self):
        rng = np.random.default_rng(5)
        R = rng.normal(size=(8, 3))
        with precision(np.float64):
            out = decay_encode(R, 0.7).data
        for i in range(1, 8):
            np.testing.assert_allclose(out[i], R[i] + 0.7 * out[i - 1], atol=1e-12)

    def test_bad_eta(self):
        with pytest.raises(ValueError):
            decay_encode(np.ones((2, 2)), 1.5)


class TestCircle:
    def test_zero_vector_pattern(self):
        out = circle_encode(np.zeros((3, 6)), 10000.0).data
        np.testing.assert_allclose(out[:, 0::2], 0.0)
        np.testing.assert_allclose(out[:, 1::2], 1.0)

    def test_sine_zero(self):
        # component 0 has freq power 1 and i = 1 on the first row
        C = np.zeros((1, 4))
        C[0, 0] = math.pi
        with precision(np.float64):
            out = circle_encode(C, 10000.0).data
        assert abs(out[0, 0]) < 1e-6

    def test_formula(self):
        rng = np.random.default_rng(6)
        C = rng.normal(size=(5, 8))
        with precision(np.float64):
            out = circle_encode(C, 100.0).data
        for i in range(5):
            for a in range(8):
                arg = C[i, a] * (i + 1) / 100.0 ** (a / 8)
                expected = math.sin(arg) if a % 2 == 0 else math.cos(arg)
                assert out[i, a] == pytest.approx(expected, abs=1e-12)

    def test_literal_sine_switch(self):
        C = np.full((2, 4), 0.3)
        with precision(np.float64):
            out = circle_encode(C, 10.0, odd="sin").data
        assert out[0, 1] == pytest.approx(math.sin(0.3 / 10 ** 0.25))

    @settings(max_examples=30, deadline=None)
    @given(arrays(np.float64, (6, 8), elements=st.floats(-1e4, 1e4)))
    def test_range(self, C):
        out = circle_encode(C.astype(np.float32), 10000.0).data
        assert np.all(out >= -1.0) and np.all(out <= 1.0)

    def test_padding_phase(self):
        C = np.ones((4, 2))
        valid = np.array([False, True, True, False])
        with precision(np.float64):
            out = circle_encode(C, 1.0, valid).data
        assert not out[0].any() and not out[3].any()
        assert out[1, 0] == pytest.approx(math.sin(1.0))  # first click has ordinal 1
        assert out[2, 0] == pytest.approx(math.sin(2.0))


class TestLog:
    def test_zero(self):
        assert not log_encode(np.zeros((2, 4)), 10000.0).data.any()

    def test_e_minus_one(self):
        C = np.zeros((1, 3))
        C[0, 0] = math.e - 1
        with precision(np.float64):
            out = log_encode(C, 10000.0).data
        assert out[0, 0] == pytest.approx(1.0, abs=1e-12)

    def test_monotone(self):
        rng = np.random.default_rng(7)
        a = rng.uniform(0, 50, size=(200, 8))
        b = a + rng.uniform(1e-3, 10, size=(200, 8))
        with precision(np.float64):
            la, lb = log_encode(a, 100.0).data, log_encode(b, 100.0).data
        assert np.all(lb > la)

    def test_negative_inputs_finite(self):
        C = np.array([[-50.0, 3.0, -2.0]])
        out = log_encode(C, 1.0).data
        assert np.all(np.isfinite(out))


class TestGamma:
    def test_zero(self):
        assert not gamma_encode(np.zeros((2, 3)), 2.0).data.any()

    @pytest.mark.parametrize("beta", [0.5, 1.0, 4.0])
    def test_maximum(self, beta):
        with precision(np.float64):
            peak = gamma_encode(np.array([[1.0 / beta]]), beta).data[0, 0]
        assert peak == pytest.approx(math.exp(-1), abs=1e-12)
        assert peak == pytest.approx(0.367879, abs=1e-6)

    def test_global_bound(self):
        c = np.linspace(0, 100, 10_001).reshape(1, -1)
        with precision(np.float64):
            out = gamma_encode(c, 1.3).data
        assert out.min() >= 0.0 and out.max() <= math.exp(-1) + 1e-15

    def test_bad_beta(self):
        with pytest.raises(ValueError):
            gamma_encode(np.ones((1, 1)), 0.0)


class TestPositionAverage:
    def test_rows(self):
        aug = np.array([[1.0, 1.0], [2.0, 2.0], [6.0, 9.0]])
        out = position_average(aug).data
        np.testing.assert_allclose(out[2], [2.0, 3.0])
        np.testing.assert_allclose(out[0], aug[0])

    def test_pad_row_zero(self):
        aug = np.array([[5.0, 5.0], [2.0, 2.0]])
        out = position_average(aug, np.array([False, True])).data
        assert not out[0].any()
        np.testing.assert_allclose(out[1], [2.0, 2.0])


class TestCoverageSum:
    def _state(self, R, **flags):
        enabled = {"decay": True, "circle": True, "log": True, "gamma": True}
        enabled.update(flags)
        return build_coverage(R, None, 0.9, 100.0, 1.0, enabled, all_views=True)

    def test_all_off_is_raw(self):
        R = np.random.default_rng(8).normal(size=(5, 4))
        st_ = self._state(R, decay=False, circle=False, log=False, gamma=False)
        np.testing.assert_array_equal(coverage_sum(st_).data, st_.raw.data)

    def test_all_on_zero_input(self):
        out = coverage_sum(self._state(np.zeros((3, 6)))).data
        np.testing.assert_allclose(out[:, 0::2], 0.0)
        np.testing.assert_allclose(out[:, 1::2], 1.0)

    def test_toggle_one_term(self):
        R = np.random.default_rng(9).normal(size=(5, 4))
        with precision(np.float64):
            on = coverage_sum(self._state(R, log=True)).data
            off = coverage_sum(self._state(R, log=False)).data
            log_view = self._state(R).views["log"].data
        np.testing.assert_allclose(on - off, log_view, atol=1e-12)

    def test_pure(self):
        R = np.random.default_rng(10).normal(size=(5, 4))
        a, b = coverage_sum(self._state(R)).data, coverage_sum(self._state(R)).data
        np.testing.assert_array_equal(a, b)


def test_coverage_gradients():
    rng = np.random.default_rng(12)
    valid = np.array([False, True, True, True, True])
    with precision(np.float64):
        R = Tensor(rng.normal(size=(5, 6)) * 0.5, requires_grad=True)
        w = Tensor(rng.normal(size=(5, 6)))

        def loss():
            st_ = build_coverage(R, valid, 0.8, 10.0, 1.5, None)
            total = coverage_sum(st_)
            avg = sum(st_.averaged(k) for k in ("decay", "circle", "log", "gamma"))
            return ((total + avg) * w).sum()

        err = nx.check_gradients(loss, {"R": R}, h=1e-6)
    assert err["R"] < 1e-3
