import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppmpolar.channel import (
    ChannelParams,
    ZeroNoiseError,
    sample_symbol,
    sample_symbols,
    slot_llr_increment,
    slot_log_pmf,
)


def direct_pmf(y, rate):
    return math.exp(-rate) * rate**y / math.factorial(y)


class TestParams:
    def test_derived(self):
        p = ChannelParams(2.0, 0.2, 64)
        assert p.m == 6
        assert p.p_av == pytest.approx(2.0 / 64)

    @pytest.mark.parametrize("M", [0, 1, 3, 12, 2.0])
    def test_rejects_bad_order(self, M):
        with pytest.raises(ValueError):
            ChannelParams(1.0, 0.2, M)

    def test_rejects_negative_means(self):
        with pytest.raises(ValueError):
            ChannelParams(-1.0, 0.2, 4)
        with pytest.raises(ValueError):
            ChannelParams(1.0, -0.2, 4)

    def test_from_pav_db(self):
        p = ChannelParams.from_pav_db(-15.0, 0.2, 64)
        assert p.n_s == 64 * 10 ** -1.5


class TestLogPmf:
    def test_zero_count_unpulsed(self):
        assert slot_log_pmf(0, False, ChannelParams(1.0, 0.2, 4)) == pytest.approx(-0.2, abs=1e-15)

    def test_one_count_pulsed(self):
        val = slot_log_pmf(1, True, ChannelParams(1.0, 0.2, 4))
        assert val == pytest.approx(math.log(1.2) - 1.2, rel=1e-14)
        assert val == pytest.approx(-1.01768, abs=1e-5)

    def test_zero_rate_emits_nothing(self):
        p = ChannelParams(1.0, 0.0, 4)
        assert slot_log_pmf(1, False, p) == -np.inf
        assert slot_log_pmf(0, False, p) == 0.0

    def test_negative_count(self):
        with pytest.raises(ValueError):
            slot_log_pmf(-1, True, ChannelParams(1.0, 0.2, 4))

    def test_large_counts_stay_finite(self):
        assert np.isfinite(slot_log_pmf(5000, True, ChannelParams(4000.0, 0.2, 4)))

    @pytest.mark.parametrize("y", range(8))
    @pytest.mark.parametrize("pulsed", [False, True])
    def test_matches_factorial_formula(self, y, pulsed):
        p = ChannelParams(1.7, 0.3, 8)
        rate = 2.0 if pulsed else 0.3
        assert slot_log_pmf(y, pulsed, p) == pytest.approx(math.log(direct_pmf(y, rate)), rel=1e-12)

    @pytest.mark.parametrize("n_s,n_b", [(1.0, 0.2), (5.0, 2.0), (0.0, 0.2), (3.0, 0.0), (20.0, 1.0)])
    @pytest.mark.parametrize("pulsed", [False, True])
    def test_normalised(self, n_s, n_b, pulsed):
        p = ChannelParams(n_s, n_b, 4)
        y_max = math.ceil(20 + 10 * (n_b + n_s))
        total = np.exp(slot_log_pmf(np.arange(y_max + 1), pulsed, p)).sum()
        assert abs(total - 1.0) < 1e-10


class TestLlrIncrement:
    @pytest.mark.parametrize("y,expected", [(0, -1.0), (1, math.log(6) - 1), (2, 2 * math.log(6) - 1)])
    def test_examples(self, y, expected):
        assert slot_llr_increment(y, ChannelParams(1.0, 0.2, 4)) == pytest.approx(expected, abs=1e-12)

    def test_reference_values(self):
        p = ChannelParams(1.0, 0.2, 4)
        assert slot_llr_increment(1, p) == pytest.approx(0.79176, abs=1e-5)
        assert slot_llr_increment(2, p) == pytest.approx(2.58352, abs=1e-5)

    def test_zero_noise_is_domain_error(self):
        with pytest.raises(ZeroNoiseError):
            slot_llr_increment(1, ChannelParams(1.0, 0.0, 4))

    @settings(max_examples=50, deadline=None)
    @given(
        n_s=st.floats(0.0, 50.0),
        n_b=st.floats(1e-3, 20.0),
    )
    def test_equals_log_pmf_difference(self, n_s, n_b):
        p = ChannelParams(n_s, n_b, 4)
        y = np.arange(101)
        diff = slot_log_pmf(y, True, p) - slot_log_pmf(y, False, p)
        assert np.max(np.abs(slot_llr_increment(y, p) - diff)) < 1e-12 * max(1.0, np.max(np.abs(diff)))


class TestSampling:
    def test_noiseless_unpulsed_slots_empty(self, rng):
        p = ChannelParams(5.0, 0.0, 16)
        for d in (1, 7, 16):
            y = sample_symbol(d, p, rng)
            assert y.shape == (16,)
            assert np.all(np.delete(y, d - 1) == 0)

    def test_strong_pulse_wins(self, rng):
        p = ChannelParams(1000.0, 0.2, 16)
        y = sample_symbols(np.zeros(10_000, dtype=int), p, rng)
        assert np.mean(np.argmax(y, axis=1) == 0) > 0.999

    def test_strong_pulse_single_draws(self, rng):
        p = ChannelParams(1000.0, 0.2, 8)
        wins = sum(np.argmax(sample_symbol(1, p, rng)) == 0 for _ in range(2000))
        assert wins / 2000 > 0.999

    def test_replay(self):
        p = ChannelParams(2.0, 0.2, 8)
        a = sample_symbol(3, p, np.random.default_rng(5))
        b = sample_symbol(3, p, np.random.default_rng(5))
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("d", [0, 9])
    def test_bad_position(self, rng, d):
        with pytest.raises(ValueError):
            sample_symbol(d, ChannelParams(1.0, 0.2, 8), rng)

    def test_sample_means(self, rng):
        n_s, n_b = 2.0, 0.2
        p = ChannelParams(n_s, n_b, 2)
        y = sample_symbols(np.zeros(1_000_000, dtype=int), p, rng)
        for col, rate in ((0, n_s + n_b), (1, n_b)):
            se = math.sqrt(rate / y.shape[0])
            assert abs(y[:, col].mean() - rate) < 5 * se
