"""Sparse tensor additive regression.

A scalar response is modeled as a sum of smooth univariate functions of
every entry of a tensor covariate.  The functions are expanded in a shared
B-spline basis, the resulting per-basis coefficient tensors share a CP
low-rank factorization, and entire per-entry coefficient groups are
selected with a group-lasso penalty fitted by alternating minimization.
"""

from .estimator import (
    FitConfig,
    FitResult,
    FittedModel,
    build_design,
    estimation_error,
    fit,
    grad_block,
    group_prox,
    initialize_bundle,
    lambda_max,
    objective,
    predict,
    solve_block,
)
from .evaluate import (
    BenchmarkRow,
    CvReport,
    SensitivityReport,
    benchmark,
    cross_validate,
    mse,
    sensitivity,
)
from .simulate import SimOutput, SimSpec, component_function, simulate, true_function
from .splines import (
    EntryScaler,
    FeaturizedDataset,
    IdentityBasis,
    SplineBasis,
    build_basis,
    eval_basis,
    featurize,
    featurize_tensors,
    fit_scaler,
)
from .tensor import CpFactorBundle, GroupIndex, cp_compose, group_span, inner_product, mode_slice
from .tlr import TlrConfig, fit_tlr

__version__ = "0.1.0"

__all__ = [
    "BenchmarkRow",
    "CpFactorBundle",
    "CvReport",
    "EntryScaler",
    "FeaturizedDataset",
    "FitConfig",
    "FitResult",
    "FittedModel",
    "GroupIndex",
    "IdentityBasis",
    "SensitivityReport",
    "SimOutput",
    "SimSpec",
    "SplineBasis",
    "TlrConfig",
    "benchmark",
    "build_basis",
    "build_design",
    "component_function",
    "cp_compose",
    "cross_validate",
    "estimation_error",
    "eval_basis",
    "featurize",
    "featurize_tensors",
    "fit",
    "fit_scaler",
    "fit_tlr",
    "grad_block",
    "group_prox",
    "group_span",
    "initialize_bundle",
    "inner_product",
    "lambda_max",
    "mode_slice",
    "mse",
    "objective",
    "predict",
    "sensitivity",
    "simulate",
    "solve_block",
    "true_function",
]
