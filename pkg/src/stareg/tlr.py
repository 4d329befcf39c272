"""Linear tensor regression as the single-basis degenerate case.

With one identity pseudo-basis the additive spline model collapses to a
rank-constrained multilinear model in the (min-max scaled, centered) raw
entries.  Fitting reuses the exact alternating-minimization code path, so
the comparison against the spline model isolates the value of the
nonlinearity.
"""

from __future__ import annotations

import numpy as np

from .estimator import FitConfig, FitResult, FittedModel, fit
from .splines import FeaturizedDataset, IdentityBasis, featurize

__all__ = ["TlrConfig", "featurize_linear", "fit_tlr"]

# same solver and stopping knobs as the spline model
TlrConfig = FitConfig


def featurize_linear(samples, responses) -> FeaturizedDataset:
    """Featurize raw covariates with the identity basis (one basis function)."""
    return featurize(samples, responses, IdentityBasis())


def fit_tlr(samples, responses, config: TlrConfig) -> tuple[FitResult, FittedModel]:
    """Fit rank-constrained linear tensor regression with group sparsity.

    Returns the raw fit result together with a ready-to-predict model that
    carries the identity featurization.
    """
    data = featurize_linear(np.asarray(samples, dtype=float), responses)
    result = fit(data, config)
    model = FittedModel(result.bundle, result.intercept, data.basis, data.scaler)
    return result, model
