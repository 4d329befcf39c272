import numpy as np
import pytest
from scipy.interpolate import BSpline

from stareg import (
    IdentityBasis,
    build_basis,
    eval_basis,
    featurize,
    featurize_tensors,
    fit_scaler,
)


def scipy_basis_values(basis, x):
    """Independent raw B-spline evaluation through scipy."""
    t, q = basis.knots, basis.order
    cols = []
    for l in range(len(t) - q):
        f = BSpline.basis_element(t[l : l + q + 1], extrapolate=False)
        cols.append(np.nan_to_num(f(x)))
    return np.column_stack(cols)


class TestCounts:
    def test_order_one_indicators(self):
        b = build_basis(order=1, n_internal=1, natural=False, drop_constant=False)
        assert b.n_basis == 2
        np.testing.assert_array_equal(eval_basis(b, 0.25), [1.0, 0.0])
        np.testing.assert_array_equal(eval_basis(b, 0.75), [0.0, 1.0])
        np.testing.assert_array_equal(eval_basis(b, 1.0), [0.0, 1.0])

    def test_unconstrained_count(self):
        assert build_basis(4, 4, natural=False, drop_constant=False).n_basis == 8

    def test_natural_count(self):
        assert build_basis(4, 4, natural=True, drop_constant=False).n_basis == 6

    def test_default_count(self):
        assert build_basis().n_basis == 5

    def test_validation(self):
        with pytest.raises(ValueError):
            build_basis(order=0)
        with pytest.raises(ValueError):
            build_basis(n_internal=-1)
        with pytest.raises(ValueError):
            build_basis(order=3, natural=True)
        with pytest.raises(ValueError):
            build_basis(natural=False, drop_constant=True)


class TestEvaluation:
    def test_linear_hats(self):
        b = build_basis(order=2, n_internal=1, natural=False, drop_constant=False)
        # knots 0, 0.5, 1: hand evaluation of the three hat functions at 0.25
        np.testing.assert_allclose(eval_basis(b, 0.25), [0.5, 0.5, 0.0], atol=1e-15)

    def test_partition_of_unity(self):
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 1, 1000)
        for order, n_internal in [(1, 3), (2, 2), (3, 4), (4, 4), (4, 0), (5, 4)]:
            b = build_basis(order, n_internal, natural=False, drop_constant=False)
            sums = eval_basis(b, x).sum(axis=1)
            assert np.abs(sums - 1.0).max() <= 1e-12
            assert abs(eval_basis(b, 1.0).sum() - 1.0) <= 1e-12

    def test_local_support_exact(self):
        b = build_basis(4, 4, natural=False, drop_constant=False)
        t, q = b.knots, b.order
        rng = np.random.default_rng(1)
        x = rng.uniform(0, 1, 500)
        vals = eval_basis(b, x)
        for l in range(b.n_basis):
            outside = (x < t[l]) | (x > t[l + q])
            assert np.all(vals[outside, l] == 0.0)

    def test_nonnegative_bounded(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 1, 2000)
        b = build_basis(4, 4, natural=False, drop_constant=False)
        vals = eval_basis(b, x)
        assert vals.min() >= 0.0
        assert vals.max() <= 1.0

    def test_natural_sup_normalized(self):
        b = build_basis()
        x = np.linspace(0, 1, 5001)
        assert np.abs(eval_basis(b, x)).max() <= 1.0 + 1e-9

    def test_continuity(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1 - 1e-8, 200)
        for basis in (build_basis(2, 3, natural=False, drop_constant=False), build_basis()):
            step = np.abs(eval_basis(basis, x + 1e-8) - eval_basis(basis, x))
            assert step.max() <= 1e-5

    def test_matches_scipy(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(0, 1 - 1e-9, 400)
        for order, n_internal in [(2, 3), (3, 2), (4, 4)]:
            b = build_basis(order, n_internal, natural=False, drop_constant=False)
            np.testing.assert_allclose(eval_basis(b, x), scipy_basis_values(b, x), atol=1e-12)

    def test_natural_boundary_second_derivative(self):
        # every transformed function must have zero curvature at 0 and 1;
        # scipy differentiates the same combination independently
        b = build_basis()
        for col in range(b.n_basis):
            f = BSpline(b.knots, b.transform[:, col], b.order - 1)
            for x0 in (0.0, 1.0):
                assert abs(f.derivative(2)(x0)) < 1e-8

    def test_drop_constant_direction(self):
        # the coefficient vector of the constant function is all ones;
        # the retained directions must be orthogonal to it
        b = build_basis()
        np.testing.assert_allclose(np.ones(8) @ b.transform, 0.0, atol=1e-12)


class TestScaler:
    def test_constant_entry_maps_to_half(self):
        basis = build_basis()
        samples = np.ones((5, 2, 2)) * 3.7
        scaler = fit_scaler(samples, basis)
        np.testing.assert_array_equal(scaler.map_unit(samples), np.full((5, 2, 2), 0.5))

    def test_min_max_mapping(self):
        basis = build_basis()
        samples = np.zeros((2, 1, 1))
        samples[1] = 10.0
        scaler = fit_scaler(samples, basis)
        assert scaler.minimum[0, 0] == 0.0
        assert scaler.maximum[0, 0] == 10.0
        np.testing.assert_array_equal(scaler.map_unit(samples).reshape(-1), [0.0, 1.0])

    def test_centering_means_are_column_means(self):
        basis = build_basis()
        rng = np.random.default_rng(5)
        samples = rng.uniform(-2, 3, size=(40, 3, 2))
        scaler = fit_scaler(samples, basis)
        unit = scaler.map_unit(samples)
        raw = eval_basis(basis, unit.reshape(-1)).reshape(40, 3, 2, basis.n_basis)
        expected = raw.mean(axis=0)  # direct averaging oracle
        for h in range(basis.n_basis):
            np.testing.assert_allclose(scaler.centers[h], expected[..., h], atol=1e-14)

    def test_rejects_nonfinite_and_small(self):
        basis = build_basis()
        with pytest.raises(ValueError):
            fit_scaler(np.array([[np.nan]]).reshape(1, 1, 1).repeat(3, axis=0), basis)
        with pytest.raises(ValueError):
            fit_scaler(np.ones((1, 2, 2)), basis)


class TestFeaturize:
    def test_training_columns_centered(self):
        basis = build_basis()
        rng = np.random.default_rng(6)
        samples = rng.uniform(0, 1, size=(60, 4, 3))
        y = rng.standard_normal(60)
        data = featurize(samples, y, basis)
        means = data.features.mean(axis=0)
        assert np.abs(means).max() <= 1e-12
        assert data.intercept == pytest.approx(y.mean())

    def test_clamping_below_min(self):
        basis = build_basis()
        rng = np.random.default_rng(7)
        samples = rng.uniform(1, 2, size=(20, 2, 2))
        scaler = fit_scaler(samples, basis)
        below = samples[0].copy()
        below[0, 0] = -50.0
        at_min = samples[0].copy()
        at_min[0, 0] = scaler.minimum[0, 0]
        np.testing.assert_array_equal(
            featurize_tensors(below, basis, scaler), featurize_tensors(at_min, basis, scaler)
        )

    def test_uncentered_values_match_eval_basis(self):
        basis = build_basis()
        rng = np.random.default_rng(8)
        samples = rng.uniform(0, 1, size=(30, 2, 2))
        scaler = fit_scaler(samples, basis)
        x = samples[3]
        feats = featurize_tensors(x, basis, scaler)
        unit = scaler.map_unit(x)
        for idx in [(0, 0), (1, 1)]:
            direct = eval_basis(basis, unit[idx])
            np.testing.assert_allclose(
                feats[:, idx[0], idx[1]] + scaler.centers[:, idx[0], idx[1]], direct, atol=1e-14
            )

    def test_deterministic(self):
        basis = build_basis()
        rng = np.random.default_rng(9)
        samples = rng.uniform(0, 1, size=(25, 3, 2))
        scaler = fit_scaler(samples, basis)
        a = featurize_tensors(samples, basis, scaler)
        b = featurize_tensors(samples, basis, scaler)
        np.testing.assert_array_equal(a, b)

    def test_shape_mismatch(self):
        basis = build_basis()
        rng = np.random.default_rng(10)
        samples = rng.uniform(0, 1, size=(10, 3, 2))
        scaler = fit_scaler(samples, basis)
        with pytest.raises(ValueError):
            featurize_tensors(np.ones((5, 2, 3)), basis, scaler)

    def test_identity_basis_passthrough(self):
        basis = IdentityBasis()
        rng = np.random.default_rng(11)
        samples = rng.uniform(0, 4, size=(15, 2, 2))
        data = featurize(samples, rng.standard_normal(15), basis)
        assert data.n_basis == 1
        unit = data.scaler.map_unit(samples)
        np.testing.assert_allclose(
            data.features[:, 0], unit - unit.mean(axis=0), atol=1e-14
        )
