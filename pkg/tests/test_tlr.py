import numpy as np
import pytest

from stareg import FitConfig, TlrConfig, fit, fit_tlr, mse
from stareg.estimator import _predictions
from stareg.tlr import featurize_linear


class TestTlr:
    def test_same_code_path_as_fit(self):
        # fitting through the wrapper and fitting the identity-featurized
        # dataset directly must agree to the bit
        rng = np.random.default_rng(0)
        x = rng.uniform(0, 3, (40, 4, 3))
        y = rng.standard_normal(40)
        config = TlrConfig(rank=2, lam=0.05, seed=7, max_sweeps=6)
        result, model = fit_tlr(x, y, config)
        data = featurize_linear(x, y)
        direct = fit(data, config)
        for k in range(2):
            np.testing.assert_array_equal(result.bundle.factors[k], direct.bundle.factors[k])
        assert result.objective_trace == direct.objective_trace

    def test_noiseless_rank_one_recovery(self):
        rng = np.random.default_rng(1)
        n, dims = 80, (6, 5)
        x = rng.uniform(0, 1, (n,) + dims)
        # pin every entry's range to [0, 1] so min-max scaling is the
        # identity and the rank-1 truth stays exactly representable
        x[0] = 0.0
        x[1] = 1.0
        u, v = rng.standard_normal(6), rng.standard_normal(5)
        y = np.einsum("ijk,j,k->i", x, u, v)
        result, model = fit_tlr(x, y, TlrConfig(rank=1, lam=1e-8, seed=0, max_sweeps=200))
        assert mse(model.predict(x), y) <= 1e-4

    def test_large_lambda_predicts_mean(self):
        rng = np.random.default_rng(2)
        x = rng.uniform(0, 1, (30, 4, 3))
        y = rng.standard_normal(30)
        result, model = fit_tlr(x, y, TlrConfig(rank=1, lam=1e6, seed=0, max_sweeps=5))
        assert all(np.all(f == 0.0) for f in result.bundle.factors)
        np.testing.assert_allclose(model.predict(x), np.full(30, y.mean()), atol=1e-12)

    def test_single_basis_function(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(0, 1, (20, 3, 2))
        data = featurize_linear(x, rng.standard_normal(20))
        assert data.n_basis == 1
