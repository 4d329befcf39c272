"""Selecting the penalty level and the CP rank by k-fold cross-validation.

Every fold refits the scaler, centering and factors on its own training
split, so no statistic of the held-out samples leaks into the fit.
"""

import numpy as np

from stareg import FitConfig, SimSpec, cross_validate, simulate

train = simulate(SimSpec(design="general", n=300, p1=12, p2=6, sigma=0.1, seed=3))

report = cross_validate(
    train.covariates,
    train.responses,
    lambdas=None,              # default: log-spaced under the zero-solution threshold
    ranks=(1, 2),
    folds=5,
    seed=0,
    base_config=FitConfig(max_sweeps=15, inner_tol=1e-5, inner_max_iter=1000),
)

print("penalty grid:")
for i, lam in enumerate(report.lambdas):
    row = "  lam=%9.4f  " % lam + "  ".join(
        f"rank {r}: {report.mean_mse[i, j]:8.4f}" for j, r in enumerate(report.ranks)
    )
    print(row)
print("\nselected: lambda =", report.best_lambda, " rank =", report.best_rank)
print("per-fold errors at the selected cell:",
      np.round(report.fold_mse[:, list(report.lambdas).index(report.best_lambda),
                               report.ranks.index(report.best_rank)], 4))
