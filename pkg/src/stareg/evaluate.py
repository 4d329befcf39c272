"""Model selection, benchmarking and sensitivity analysis.

Cross-validation refits the featurization on every training split so no
scaling or centering statistics leak from held-out samples.  The benchmark
harness compares the spline model (STAR) against its linear degenerate
case (TLR) on the synthetic designs, reporting median test errors over
seeded replications.  All grid points and replications are independent
fits keyed by their coordinates, so results do not depend on execution
order or worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .estimator import (
    FitConfig,
    FittedModel,
    fit,
    initialize_bundle,
    lambda_max,
)
from .simulate import SimSpec, simulate
from .splines import IdentityBasis, build_basis, featurize

__all__ = [
    "BenchmarkRow",
    "CvReport",
    "SensitivityReport",
    "benchmark",
    "cross_validate",
    "default_lambda_grid",
    "mse",
    "sensitivity",
    "write_benchmark_csv",
]

DEFAULT_LAMBDA_POINTS = 10
DEFAULT_LAMBDA_FLOOR = 1e-3


def mse(predictions, targets) -> float:
    """Mean squared difference of two equal-length vectors."""
    p = np.asarray(predictions, dtype=float).reshape(-1)
    t = np.asarray(targets, dtype=float).reshape(-1)
    if p.size != t.size:
        raise ValueError(f"length mismatch: {p.size} vs {t.size}")
    if p.size == 0:
        raise ValueError("need at least one value")
    d = p - t
    return float((d * d).mean())


# ---------------------------------------------------------------------------
# cross-validation


@dataclass
class CvReport:
    """Validation errors over a (penalty, rank) grid.

    ``fold_mse[f, i, j]`` is fold ``f``'s held-out error at ``lambdas[i]``,
    ``ranks[j]``.  The selected pair attains the minimal mean error; exact
    ties resolve toward the larger penalty, then the smaller rank.
    """

    lambdas: np.ndarray
    ranks: tuple
    fold_mse: np.ndarray
    mean_mse: np.ndarray
    best_lambda: float
    best_rank: int
    folds: int
    seed: int


def _fold_assignments(n: int, folds: int, rng) -> list:
    """Random (permutation-based, not contiguous) near-equal fold split."""
    return [np.sort(part) for part in np.array_split(rng.permutation(n), folds)]


def default_lambda_grid(covariates, responses, basis, ranks, config: FitConfig) -> np.ndarray:
    """Log-spaced penalty grid anchored at the zero-solution threshold.

    The anchor is the largest ``lambda_max`` over the candidate ranks,
    computed at the fit initialization on the full data.
    """
    data = featurize(covariates, responses, basis)
    top = 0.0
    for rank in ranks:
        bundle = initialize_bundle(data, replace(config, rank=rank, lam=0.0, init=None))
        top = max(top, lambda_max(data, bundle))
    if top <= 0.0:
        top = 1.0
    return np.geomspace(DEFAULT_LAMBDA_FLOOR * top, top, DEFAULT_LAMBDA_POINTS)


def _cv_task(payload):
    key, train_x, train_y, val_x, val_y, basis, config = payload
    data = featurize(train_x, train_y, basis)
    result = fit(data, config)
    model = FittedModel(result.bundle, result.intercept, basis, data.scaler)
    return key, mse(model.predict(val_x), val_y)


def cross_validate(
    covariates,
    responses,
    *,
    basis=None,
    lambdas=None,
    ranks=(1, 2, 3),
    folds: int = 5,
    seed: int = 0,
    base_config: FitConfig | None = None,
    workers: int = 1,
) -> CvReport:
    """K-fold selection of the penalty level and the CP rank.

    Every fold refits the scaler and centering on its own training split.
    ``base_config`` carries the solver knobs; its ``lam``/``rank`` fields are
    overridden by the grid.
    """
    covariates = np.asarray(covariates, dtype=float)
    responses = np.asarray(responses, dtype=float).reshape(-1)
    n = responses.size
    if n < folds:
        raise ValueError("need at least as many samples as folds")
    if folds < 2:
        raise ValueError("need at least 2 folds")
    ranks = tuple(int(r) for r in ranks)
    if not ranks:
        raise ValueError("empty rank grid")
    if basis is None:
        basis = build_basis()
    if base_config is None:
        base_config = FitConfig()
    if lambdas is None:
        lambdas = default_lambda_grid(covariates, responses, basis, ranks, base_config)
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size == 0:
        raise ValueError("empty penalty grid")

    rng = np.random.default_rng(seed)
    val_folds = _fold_assignments(n, folds, rng)
    tasks = []
    for f, val_idx in enumerate(val_folds):
        mask = np.ones(n, dtype=bool)
        mask[val_idx] = False
        train_x, train_y = covariates[mask], responses[mask]
        val_x, val_y = covariates[val_idx], responses[val_idx]
        for i, lam in enumerate(lambdas):
            for j, rank in enumerate(ranks):
                config = replace(base_config, lam=float(lam), rank=rank, init=None)
                tasks.append(((f, i, j), train_x, train_y, val_x, val_y, basis, config))

    fold_mse = np.empty((folds, lambdas.size, len(ranks)))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, value in pool.map(_cv_task, tasks):
                fold_mse[key] = value
    else:
        for payload in tasks:
            key, value = _cv_task(payload)
            fold_mse[key] = value

    mean_mse = fold_mse.mean(axis=0)
    best = np.min(mean_mse)
    ties = np.argwhere(mean_mse == best)
    # larger penalty first, then smaller rank
    ties = sorted(ties.tolist(), key=lambda ij: (-lambdas[ij[0]], ranks[ij[1]]))
    bi, bj = ties[0]
    return CvReport(
        lambdas=lambdas,
        ranks=ranks,
        fold_mse=fold_mse,
        mean_mse=mean_mse,
        best_lambda=float(lambdas[bi]),
        best_rank=ranks[bj],
        folds=folds,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# sensitivity heatmaps


@dataclass
class SensitivityReport:
    """Mean prediction change per incremented covariate position.

    ``values`` is indexed by the positions of the chosen ``ways`` (the full
    covariate grid by default); each cell is the mean over the test samples
    of ``predict(x with the position raised by delta) - predict(x)``.
    """

    ways: tuple
    grid_shape: tuple
    values: np.ndarray
    delta: float

    def to_csv(self, path) -> None:
        """Long-form CSV with 1-based way indices, one grid cell per row."""
        header = ",".join(f"way{w + 1}_index" for w in self.ways) + ",mean_change"
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for idx in np.ndindex(self.grid_shape):
                cells = [str(i + 1) for i in idx] + [repr(float(self.values[idx]))]
                fh.write(",".join(cells) + "\n")


def sensitivity(model: FittedModel, covariates, delta: float, ways=None) -> SensitivityReport:
    """Mean change of the prediction under a raw-unit increment.

    ``ways=None`` scans every covariate position; passing a subset of axes
    increments whole slice combinations (broadcast over the other axes).
    """
    if delta == 0:
        raise ValueError("delta must be nonzero")
    x = np.asarray(covariates, dtype=float)
    shape = model.scaler.shape
    if x.shape == shape:
        x = x[None]
    if x.shape[1:] != shape:
        raise ValueError(f"covariate shape {x.shape[1:]} does not match the model {shape}")
    m = len(shape)
    if ways is None:
        ways = tuple(range(m))
    ways = tuple(int(w) for w in ways)
    if not ways or any(not 0 <= w < m for w in ways) or len(set(ways)) != len(ways):
        raise ValueError(f"ways must be distinct axes in [0, {m})")
    grid_shape = tuple(shape[w] for w in ways)
    base = np.asarray(model.predict(x), dtype=float).reshape(-1)
    values = np.empty(grid_shape)
    for idx in np.ndindex(grid_shape):
        bumped = x.copy()
        slicer = [slice(None)] * (m + 1)
        for w, i in zip(ways, idx):
            slicer[w + 1] = i
        bumped[tuple(slicer)] += delta
        change = np.asarray(model.predict(bumped), dtype=float).reshape(-1) - base
        values[idx] = change.mean()
    return SensitivityReport(ways=ways, grid_shape=grid_shape, values=values, delta=delta)


# ---------------------------------------------------------------------------
# benchmark harness


@dataclass
class BenchmarkRow:
    design: str
    n: int
    p1: int
    sigma: float
    method: str
    median_mse: float
    se_median: float
    replications: int


def _se_of_median(values: np.ndarray) -> float:
    # normal approximation: the median of B draws has se ~ 1.2533 * sd / sqrt(B)
    if values.size < 2:
        return 0.0
    return float(1.2533 * values.std(ddof=1) / np.sqrt(values.size))


def _one_replication(payload):
    """Train/tune/test one method on one seeded replication."""
    (key, design, n, p1, sigma, method, seeds, lambda_fractions, ranks, folds,
     base_config, test_size) = payload
    seed_train, seed_test, seed_fit = (int(s) for s in seeds)
    train = simulate(SimSpec(design=design, n=n, p1=p1, sigma=sigma, seed=seed_train))
    test = simulate(SimSpec(design=design, n=test_size, p1=p1, sigma=sigma, seed=seed_test))

    config = replace(base_config, seed=seed_fit, init=None)
    data_basis = build_basis() if method == "STAR" else IdentityBasis()
    data = featurize(train.covariates, train.responses, data_basis)

    ranks = tuple(int(r) for r in ranks)
    top = 0.0
    for rank in ranks:
        bundle = initialize_bundle(data, replace(config, rank=rank, lam=0.0))
        top = max(top, lambda_max(data, bundle))
    lambdas = np.asarray([f * top for f in lambda_fractions], dtype=float)

    if lambdas.size * len(ranks) == 1:
        best_lambda, best_rank = float(lambdas[0]), ranks[0]
    else:
        report = cross_validate(
            train.covariates,
            train.responses,
            basis=data_basis,
            lambdas=lambdas,
            ranks=ranks,
            folds=folds,
            seed=seed_fit,
            base_config=config,
        )
        best_lambda, best_rank = report.best_lambda, report.best_rank

    final = fit(data, replace(config, lam=best_lambda, rank=best_rank))
    model = FittedModel(final.bundle, final.intercept, data_basis, data.scaler)
    return key, mse(model.predict(test.covariates), test.responses)


def _per_method(value, method):
    if isinstance(value, dict):
        return tuple(value[method])
    return tuple(value)


def benchmark(
    design: str,
    *,
    ns=(400,),
    p1s=(20,),
    sigmas=(0.1,),
    replications: int = 10,
    lambda_fractions=(0.1, 0.03, 0.01),
    ranks=(1, 2),
    folds: int = 5,
    master_seed: int = 0,
    test_size: int = 2000,
    base_config: FitConfig | None = None,
    methods=("STAR", "TLR"),
    workers: int = 1,
) -> list:
    """Median held-out error of STAR and TLR over seeded replications.

    Both methods see the same training and test data in each replication
    (paired comparison); seeds derive deterministically from ``master_seed``
    and the cell coordinates.  Penalty grids are fractions of the
    zero-solution threshold of each training set; a single (fraction, rank)
    pair skips cross-validation.  ``lambda_fractions`` and ``ranks`` may be
    mappings from method name to a per-method grid.
    """
    if replications < 1:
        raise ValueError("replications must be >= 1")
    for method in methods:
        if method not in ("STAR", "TLR"):
            raise ValueError(f"unknown method {method!r}")
    if base_config is None:
        base_config = FitConfig()
    cells = [(n, p1, sigma) for n in ns for p1 in p1s for sigma in sigmas]
    tasks = []
    for ci, (n, p1, sigma) in enumerate(cells):
        for rep in range(replications):
            # methods share the replication's data: paired comparison
            ss = np.random.SeedSequence([master_seed, ci, rep])
            seeds = ss.generate_state(3, dtype=np.uint32)
            for mi, method in enumerate(methods):
                key = (ci, mi, rep)
                tasks.append(
                    (key, design, n, p1, sigma, method, seeds,
                     _per_method(lambda_fractions, method),
                     _per_method(ranks, method), folds, base_config, test_size)
                )

    results = {}
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, value in pool.map(_one_replication, tasks):
                results[key] = value
    else:
        for payload in tasks:
            key, value = _one_replication(payload)
            results[key] = value

    rows = []
    for ci, (n, p1, sigma) in enumerate(cells):
        for mi, method in enumerate(methods):
            values = np.array([results[(ci, mi, rep)] for rep in range(replications)])
            rows.append(
                BenchmarkRow(
                    design=design,
                    n=n,
                    p1=p1,
                    sigma=sigma,
                    method=method,
                    median_mse=float(np.median(values)),
                    se_median=_se_of_median(values),
                    replications=replications,
                )
            )
    return rows


def write_benchmark_csv(path, rows) -> None:
    """One CSV per benchmark table: a row per (cell, method)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("design,n,p1,sigma,method,median_mse,se_median,replications\n")
        for r in rows:
            fh.write(
                f"{r.design},{r.n},{r.p1},{repr(float(r.sigma))},{r.method},"
                f"{repr(float(r.median_mse))},{repr(float(r.se_median))},{r.replications}\n"
            )
