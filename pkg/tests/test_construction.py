import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from ppmpolar.channel import ChannelParams
from ppmpolar.construction import (
    J_INV_SATURATED,
    bec_transform,
    construct_mc,
    construct_surrogate,
    evolve_reliabilities,
    ga_transform,
    genie_leaf_llrs,
    j_fun,
    j_inv,
    surrogate_reliabilities,
    wilson_interval,
)
from ppmpolar.modulation import level_mi_profile
from ppmpolar.polar import polar_transform, sc_decode

unit = st.floats(0.0, 1.0)


def exact_j(sigma):
    """Capacity of the BI-AWGN channel with LLR ~ N(sigma^2/2, sigma^2), by quadrature."""
    if sigma == 0:
        return 0.0
    mu = sigma**2 / 2

    def integrand(x):
        pdf = np.exp(-((x - mu) ** 2) / (2 * sigma**2)) / np.sqrt(2 * np.pi * sigma**2)
        return pdf * np.logaddexp(0.0, -x) / np.log(2)

    val, _ = integrate.quad(integrand, mu - 12 * sigma, mu + 12 * sigma)
    return 1.0 - val


def bec_oracle(n):
    """Per-channel erasure rate at leaf erasure 1/2, by enumerating all erasure patterns.

    With earlier bits known, u_i is undetermined exactly when its generator
    row restricted to the unerased columns lies in the span of the later rows.
    """
    rows = []
    for i in range(n):
        e = np.zeros(n, dtype=np.uint8)
        e[i] = 1
        rows.append(int("".join(map(str, polar_transform(e)[::-1])), 2))
    undetermined = np.zeros(n)
    for seen in range(1 << n):
        basis = {}
        for i in range(n - 1, -1, -1):
            v = rows[i] & seen
            while v:
                top = v.bit_length() - 1
                if top not in basis:
                    basis[top] = v
                    break
                v ^= basis[top]
            else:
                undetermined[i] += 1
    return undetermined / (1 << n)


class TestJ:
    def test_endpoints(self):
        assert j_fun(0.0) == 0.0
        assert j_fun(60.0) == pytest.approx(1.0, abs=1e-12)
        assert j_inv(0.0) == 0.0
        assert j_inv(1.0) == J_INV_SATURATED

    def test_close_to_exact(self):
        for s in (0.3, 1.0, 2.0, 4.0):
            assert j_fun(s) == pytest.approx(exact_j(s), abs=5e-3)

    def test_round_trip(self):
        s = np.geomspace(0.01, 10, 500)
        np.testing.assert_allclose(j_inv(j_fun(s)), s, rtol=1e-6)

    def test_monotone(self):
        assert np.all(np.diff(j_fun(np.linspace(0, 12, 2000))) > 0)


class TestTransforms:
    def test_ga_fixed_points(self):
        assert ga_transform(1.0, 1.0) == (pytest.approx(1.0), pytest.approx(1.0))
        assert ga_transform(0.0, 0.0) == (0.0, 0.0)

    def test_ga_against_quadrature(self):
        # the plus channel adds two independent Gaussian LLRs, so its variance doubles
        s = j_inv(0.5)
        _, plus = ga_transform(0.5, 0.5)
        assert plus == pytest.approx(exact_j(np.sqrt(2) * s), abs=1e-2)

    def test_bec_examples(self):
        assert bec_transform(0.5, 0.5) == (0.75, 0.25)
        assert bec_transform(0.0, 1.0) == (1.0, 0.0)

    @given(unit, unit)
    def test_ordering(self, a, b):
        minus, plus = ga_transform(a, b)
        assert 0 <= minus <= plus <= 1
        em, ep = bec_transform(a, b)
        assert 0 <= ep <= em <= 1

    @given(unit, unit)
    def test_bec_conservation(self, a, b):
        em, ep = bec_transform(a, b)
        assert em + ep == pytest.approx(a + b, abs=1e-15)


class TestEvolve:
    def test_single(self):
        np.testing.assert_array_equal(evolve_reliabilities(0.3, 1, "ga"), [0.3])

    def test_two_bec(self):
        np.testing.assert_allclose(evolve_reliabilities(0.5, 2, "bec"), [0.25, 0.75])

    @pytest.mark.parametrize("n", [2, 4, 8, 16])
    def test_bec_matches_enumeration(self, n):
        got = 1.0 - evolve_reliabilities(0.5, n, "bec")
        np.testing.assert_allclose(got, bec_oracle(n), atol=1e-12)

    @settings(max_examples=30)
    @given(unit, st.integers(0, 8))
    def test_bec_total_conserved(self, e, s):
        rel = evolve_reliabilities(e, 2**s, "bec")
        assert (1 - rel).sum() == pytest.approx(e * 2**s, abs=1e-9)

    def test_rejects(self):
        with pytest.raises(ValueError):
            evolve_reliabilities(0.5, 6, "ga")
        with pytest.raises(ValueError):
            evolve_reliabilities(0.5, 8, "awgn")


class TestSurrogate:
    @pytest.mark.parametrize("rule", ["ga", "bec"])
    @pytest.mark.parametrize("k", [0, 1, 77, 256])
    def test_frozen_count(self, rule, k):
        mask = construct_surrogate([0.1, 0.4, 0.7, 0.95], 64, k, rule)
        assert mask.sum() == 256 - k

    def test_perfect_levels_freeze_highest_indices(self):
        mask = construct_surrogate([1.0, 1.0], 8, 10, "ga")
        np.testing.assert_array_equal(np.flatnonzero(mask), np.arange(10, 16))

    def test_single_level(self):
        mask = construct_surrogate([0.5], 8, 4, "bec")
        # 1 - erasure at 1/2: the four most reliable rows of the length-8 code
        np.testing.assert_array_equal(np.flatnonzero(~mask), [3, 5, 6, 7])

    def test_level_order(self):
        rel = surrogate_reliabilities([0.2, 0.9], 16, "ga")
        assert rel.values.shape == (32,)
        assert rel.values[:16].mean() < rel.values[16:].mean()

    def test_shortening_freezes_tail(self):
        mask = construct_surrogate([0.3, 0.8, 0.9], 32, 40, "ga", n_used=20)
        assert mask.reshape(3, 32)[:, 20:].all()
        assert mask.sum() == 96 - 40

    def test_bad_sizes(self):
        with pytest.raises(ValueError):
            construct_surrogate([0.5, 0.5], 8, 17, "ga")
        with pytest.raises(ValueError):
            construct_surrogate([0.5], 8, 2, "ga", n_used=9)

    def test_deterministic(self):
        a = construct_surrogate([0.3, 0.6], 128, 100, "ga")
        b = construct_surrogate([0.3, 0.6], 128, 100, "ga")
        np.testing.assert_array_equal(a, b)


class TestMc:
    def test_genie_leaf_matches_sc_on_correct_path(self, rng):
        llr = rng.normal(2.0, 2.0, size=(30, 16))
        u = sc_decode(llr, np.zeros(16, bool))
        leaf = genie_leaf_llrs(llr, u)
        # with the genie path equal to SC's own decisions, every leaf sign gives that decision
        np.testing.assert_array_equal(leaf < 0, u.astype(bool))

    def test_deterministic_and_worker_invariant(self):
        params = ChannelParams.from_pav_db(-10.0, 0.2, 16)
        a = construct_mc(params, 32, 64, 600, 7, chunk=200)
        b = construct_mc(params, 32, 64, 600, 7, chunk=200, workers=2)
        np.testing.assert_array_equal(a.error_counts, b.error_counts)
        np.testing.assert_array_equal(a.frozen_mask, b.frozen_mask)
        assert a.frozen_mask.sum() == 128 - 64

    def test_noiseless_counts_zero(self):
        params = ChannelParams(1000.0, 0.0, 16)
        res = construct_mc(params, 16, 30, 100, 1)
        assert not res.error_counts.any()
        assert res.frozen_mask.sum() == 64 - 30

    def test_agrees_with_dga(self):
        params = ChannelParams.from_pav_db(-9.5, 0.2, 16)
        mc = construct_mc(params, 64, 128, 4000, 3)
        prof = level_mi_profile(params, 50_000, np.random.default_rng(3))
        ga = construct_surrogate(prof, 64, 128, "ga")
        info_mc, info_ga = ~mc.frozen_mask, ~ga
        assert (info_mc & info_ga).sum() / 128 >= 0.9
        np.testing.assert_allclose(mc.level_mi, prof.per_level_mi, atol=0.02)

    def test_wilson(self):
        lo, hi = wilson_interval(5, 100)
        assert lo < 0.05 < hi
        lo, hi = wilson_interval(0, 100)
        assert lo == pytest.approx(0.0, abs=1e-15) and 0 < hi < 0.05
