import math

import numpy as np
import pytest

from stareg import SimSpec, component_function, simulate, true_function
from stareg.simulate import way1_function, way2_function


def gauss_pdf(x, mean, sd):
    return math.exp(-((x - mean) ** 2) / (2 * sd * sd)) / (sd * math.sqrt(2 * math.pi))


def hand_component(j, k, x):
    """Independent reimplementation of the parity table."""
    if j % 2 == 1 and k % 2 == 1:
        return -math.sin(1.5 * x)
    if j % 2 == 0 and k % 2 == 1:
        return x**3 + 1.5 * (x - 0.5) ** 2
    if j % 2 == 1 and k % 2 == 0:
        return -gauss_pdf(x, 0.5, 0.8)
    return math.sin(math.exp(-0.5 * x))


class TestComponentFunctions:
    def test_odd_way1_at_zero(self):
        assert way1_function(1)(0.0) == 0.0  # -sin(0)

    def test_even_way1_at_half(self):
        # 0.5^3 + 1.5 * 0 = 0.125
        assert way1_function(2)(0.5) == pytest.approx(0.125)

    def test_even_way2_at_zero(self):
        assert way2_function(2)(0.0) == pytest.approx(math.sin(1.0))

    def test_odd_way2_is_negative_density(self):
        x = 0.3
        assert way2_function(1)(x) == pytest.approx(-gauss_pdf(x, 0.5, 0.8))

    def test_parity_table(self):
        rng = np.random.default_rng(0)
        for j in (1, 2, 3, 4):
            for k in (1, 2, 3, 4):
                x = float(rng.uniform(0, 1))
                assert component_function(j, k)(x) == pytest.approx(hand_component(j, k, x))


class TestSimSpec:
    def test_p2_defaults(self):
        assert SimSpec(design="general", n=10).p2 == 8
        assert SimSpec(design="low_rank", n=10).p2 == 8
        assert SimSpec(design="three_way_case1", n=10).p2 == 10

    def test_three_way_shape(self):
        spec = SimSpec(design="three_way_case2", n=5, p1=12)
        assert spec.shape == (12, 10, 2)

    def test_active_sets(self):
        spec = SimSpec(design="three_way_case1", n=5)
        sets = spec.active_sets
        assert [s.size for s in sets] == [10, 4, 2]
        spec2 = SimSpec(design="general", n=5)
        assert [s.size for s in spec2.active_sets] == [10, 4]

    def test_validation(self):
        with pytest.raises(ValueError):
            SimSpec(design="cubic", n=10)
        with pytest.raises(ValueError):
            SimSpec(design="general", n=10, p1=5)
        with pytest.raises(ValueError):
            SimSpec(design="general", n=10, p2=3)
        with pytest.raises(ValueError):
            SimSpec(design="three_way_case1", n=10, p3=3)
        with pytest.raises(ValueError):
            SimSpec(design="general", n=10, low=1.0, high=0.5)


class TestSimulate:
    def test_sigma_zero_noiseless(self):
        out = simulate(SimSpec(design="general", n=30, sigma=0.0, seed=1))
        np.testing.assert_array_equal(out.responses, out.noiseless)

    def test_general_manual_evaluation(self):
        out = simulate(SimSpec(design="general", n=4, p1=11, p2=6, sigma=0.0, seed=2))
        x = out.covariates[2]
        expected = sum(
            hand_component(j, k, x[j - 1, k - 1]) for j in range(1, 11) for k in range(1, 5)
        )
        assert out.noiseless[2] == pytest.approx(expected, rel=1e-12)

    def test_low_rank_covariates_are_rank_one(self):
        out = simulate(SimSpec(design="low_rank", n=12, p1=10, sigma=0.1, seed=3))
        for i in range(12):
            s = np.linalg.svd(out.covariates[i], compute_uv=False)
            assert s[1] <= 1e-10 * s[0]

    def test_low_rank_manual_evaluation(self):
        out = simulate(SimSpec(design="low_rank", n=5, p1=10, p2=5, sigma=0.0, seed=4))
        x1, x2 = out.factors
        i = 1
        expected = sum(
            (-math.sin(1.5 * x1[i, j - 1]) if j % 2 else x1[i, j - 1] ** 3 + 1.5 * (x1[i, j - 1] - 0.5) ** 2)
            * (-gauss_pdf(x2[i, k - 1], 0.5, 0.8) if k % 2 else math.sin(math.exp(-0.5 * x2[i, k - 1])))
            for j in range(1, 11)
            for k in range(1, 5)
        )
        assert out.noiseless[i] == pytest.approx(expected, rel=1e-12)

    def test_case1_manual_evaluation(self):
        out = simulate(SimSpec(design="three_way_case1", n=3, sigma=0.0, seed=5))
        x = out.covariates[0]
        expected = 0.0
        for j in range(1, 11):
            for k in range(1, 5):
                expected += math.sin(hand_component(j, k, x[j - 1, k - 1, 0]))
                expected += math.log(max(abs(hand_component(j, k, x[j - 1, k - 1, 1])), 1e-12))
        assert out.noiseless[0] == pytest.approx(expected, rel=1e-12)

    def test_case2_manual_evaluation(self):
        out = simulate(SimSpec(design="three_way_case2", n=3, sigma=0.0, seed=6))
        x = out.covariates[1]
        total = sum(
            hand_component(j, k, x[j - 1, k - 1, l])
            for j in range(1, 11)
            for k in range(1, 5)
            for l in (0, 1)
        )
        expected = math.sin(total) + math.log(max(abs(total), 1e-12))
        assert out.noiseless[1] == pytest.approx(expected, rel=1e-12)

    def test_reproducible(self):
        a = simulate(SimSpec(design="three_way_case1", n=20, sigma=0.5, seed=7))
        b = simulate(SimSpec(design="three_way_case1", n=20, sigma=0.5, seed=7))
        np.testing.assert_array_equal(a.covariates, b.covariates)
        np.testing.assert_array_equal(a.responses, b.responses)

    def test_noise_moments(self):
        sigma, n = 0.7, 2000
        out = simulate(SimSpec(design="general", n=n, sigma=sigma, seed=8))
        noise = out.responses - out.noiseless
        assert abs(noise.mean()) <= 3 * sigma / math.sqrt(n)
        assert abs(noise.std() - sigma) <= 0.1 * sigma

    def test_inactive_entries_contribute_nothing(self):
        for design in ("general", "three_way_case1", "three_way_case2"):
            spec = SimSpec(design=design, n=6, sigma=0.0, seed=9)
            out = simulate(spec)
            zeroed = out.covariates.copy()
            # wipe everything outside the declared active block
            mask = np.zeros(spec.shape, dtype=bool)
            mask[np.ix_(*[s for s in spec.active_sets])] = True
            zeroed[:, ~mask] = 0.123456  # arbitrary value, must not matter
            np.testing.assert_allclose(
                true_function(spec, zeroed), out.noiseless, rtol=1e-12
            )

    def test_uniform_range_config(self):
        out = simulate(SimSpec(design="general", n=50, sigma=0.0, seed=10, low=2.0, high=3.0))
        assert out.covariates.min() >= 2.0
        assert out.covariates.max() <= 3.0


class TestTrueFunction:
    def test_matches_noiseless_channel(self):
        spec = SimSpec(design="general", n=15, sigma=0.4, seed=11)
        out = simulate(spec)
        np.testing.assert_allclose(true_function(spec, out.covariates), out.noiseless, rtol=1e-14)

    def test_single_tensor(self):
        spec = SimSpec(design="general", n=5, sigma=0.0, seed=12)
        out = simulate(spec)
        assert true_function(spec, out.covariates[0]) == pytest.approx(out.noiseless[0])

    def test_zero_tensor_closed_form(self):
        spec = SimSpec(design="general", n=2, sigma=0.0, seed=13)
        # at zero: odd/odd -> 0, even/odd -> 0.375, odd/even -> -pdf(0),
        # even/even -> sin(1); 5x2 entries in each parity class
        expected = 10 * (0.375 - gauss_pdf(0.0, 0.5, 0.8) + math.sin(1.0))
        assert true_function(spec, np.zeros(spec.shape)) == pytest.approx(expected, rel=1e-12)

    def test_low_rank_requires_factors(self):
        spec = SimSpec(design="low_rank", n=5, sigma=0.0, seed=14)
        out = simulate(spec)
        with pytest.raises(ValueError):
            true_function(spec, out.covariates)
        np.testing.assert_allclose(
            true_function(spec, factors=out.factors), out.noiseless, rtol=1e-14
        )
        single = true_function(spec, factors=(out.factors[0][0], out.factors[1][0]))
        assert single == pytest.approx(out.noiseless[0])

    def test_shape_mismatch(self):
        spec = SimSpec(design="general", n=5, sigma=0.0, seed=15)
        with pytest.raises(ValueError):
            true_function(spec, np.zeros((3, 3)))
