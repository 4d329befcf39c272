"""Group-sparse CP tensor regression by penalized alternating minimization.

The loss is the mean squared error of the additive spline model written,
for one way at a time, as an ordinary linear model ``(1/n) ||y~ - F b||^2``
in that way's flattened factor vector, plus a group-lasso penalty whose
groups are the per-entry coefficient blocks.  Each sweep rebuilds the
design of every way from the current factors and solves the convex block
problem with a monotone accelerated proximal gradient method.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .splines import FeaturizedDataset, featurize_tensors
from .tensor import CpFactorBundle, cp_compose

__all__ = [
    "BlockSolveInfo",
    "FitConfig",
    "FitResult",
    "FittedModel",
    "build_design",
    "estimation_error",
    "fit",
    "grad_block",
    "group_prox",
    "initialize_bundle",
    "lambda_max",
    "objective",
    "penalty_value",
    "predict",
    "rebalance_ranks",
    "solve_block",
]


# ---------------------------------------------------------------------------
# configuration and result containers


@dataclass
class FitConfig:
    """Knobs of the alternating-minimization fit.

    ``lam`` is the shared group-lasso level applied to every way.  The outer
    loop stops when the largest per-way coefficient change falls below
    ``tol`` (default 1e-5).  ``ridge_sweeps`` alternating sweeps with a
    squared-norm penalty of ``ridge_strength`` initialize the factors from a
    seeded standard-normal start unless ``init`` supplies a bundle.
    """

    rank: int = 1
    lam: float = 0.0
    max_sweeps: int = 100
    tol: float = 1e-5
    inner_tol: float = 1e-8
    inner_max_iter: int = 10_000
    ridge_sweeps: int = 1
    ridge_strength: float = 1.0
    init_scale: float = 0.5
    seed: int = 0
    rebalance: bool = False
    jacobi: bool = False
    init: CpFactorBundle | None = None

    def validate(self) -> None:
        if self.rank < 1:
            raise ValueError("rank must be >= 1")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if self.tol <= 0 or self.inner_tol <= 0:
            raise ValueError("tolerances must be > 0")
        if self.max_sweeps < 1 or self.inner_max_iter < 1:
            raise ValueError("iteration caps must be >= 1")
        if self.ridge_sweeps < 0 or self.ridge_strength <= 0:
            raise ValueError("ridge init needs ridge_sweeps >= 0 and ridge_strength > 0")
        if self.init_scale <= 0:
            raise ValueError("init_scale must be > 0")


@dataclass
class BlockSolveInfo:
    converged: bool
    iterations: int
    kkt_residual: float


@dataclass
class FitResult:
    """Fitted factors plus diagnostics of the alternating minimization.

    ``objective_trace`` holds the penalized objective after initialization
    and after every sweep; with the default Gauss-Seidel sweeps and
    rebalancing off it is non-increasing up to solver tolerance.  A group
    is in ``active_sets[k]`` exactly when its Euclidean norm is nonzero.
    """

    bundle: CpFactorBundle
    intercept: float
    active_sets: list
    objective_trace: list
    sweeps: int
    converged: bool
    lam: float
    rank: int
    warning: str | None = None
    block_info: list = field(default_factory=list)


@dataclass
class FittedModel:
    """Everything needed to predict on raw covariates."""

    bundle: CpFactorBundle
    intercept: float
    basis: object
    scaler: object

    def predict(self, samples) -> np.ndarray | float:
        features = featurize_tensors(samples, self.basis, self.scaler)
        if features.ndim == self.bundle.ways + 1:  # single sample
            return float(self.intercept + _predictions(features[None], self.bundle)[0])
        return self.intercept + _predictions(features, self.bundle)


# ---------------------------------------------------------------------------
# design matrices, objective, gradient


def build_design(data: FeaturizedDataset, bundle: CpFactorBundle, way: int) -> np.ndarray:
    """Design matrix of one way given the other ways' factors.

    Row ``i``, column ``(j, r, h)`` holds the inner product of the rank-``r``
    outer product of the other ways' basis-``h`` factors with the feature
    tensor of sample ``i`` sliced at entry ``j`` of ``way``; consequently
    ``design @ bundle.vector(way)`` equals the model predictions.
    """
    if data.shape != bundle.dims or data.n_basis != bundle.n_basis:
        raise ValueError("featurized data and bundle layouts do not match")
    m = bundle.ways
    if not 0 <= way < m:
        raise ValueError(f"way {way} out of range")
    n = data.n
    rank, n_basis = bundle.rank, bundle.n_basis
    p_k = bundle.dims[way]
    design = np.empty((n, p_k, rank, n_basis))
    others = [u for u in range(m) if u != way]
    for h in range(n_basis):
        feats_h = data.features[:, h]
        for r in range(rank):
            partial = feats_h
            for u in reversed(others):  # contract high axes first
                partial = np.tensordot(partial, bundle.factors[u][:, r, h], axes=([u + 1], [0]))
            design[:, :, r, h] = partial
    return design.reshape(n, p_k * rank * n_basis)


def _predictions(features: np.ndarray, bundle: CpFactorBundle) -> np.ndarray:
    """Model predictions (without intercept) for featurized samples."""
    m = bundle.ways
    axes = (tuple(range(1, m + 1)), tuple(range(m)))
    out = np.zeros(features.shape[0])
    for h in range(bundle.n_basis):
        out += np.tensordot(features[:, h], cp_compose(bundle, h), axes=axes)
    return out


def penalty_value(bundle: CpFactorBundle) -> float:
    """Sum of Euclidean group norms over every way and entry."""
    return float(sum(bundle.group_norms(k).sum() for k in range(bundle.ways)))


def objective(data: FeaturizedDataset, bundle: CpFactorBundle, lam: float) -> float:
    """Penalized mean squared error of the additive model."""
    residual = data.responses - data.intercept - _predictions(data.features, bundle)
    return float((residual * residual).mean() + lam * penalty_value(bundle))


def grad_block(data: FeaturizedDataset, bundle: CpFactorBundle, way: int) -> np.ndarray:
    """Gradient of the unpenalized risk in one way's flat coefficient vector,
    ``(2/n) F^T (F b - y~)`` with the centered responses as target."""
    design = build_design(data, bundle, way)
    residual = design @ bundle.vector(way) - data.centered_responses
    return (2.0 / data.n) * (design.T @ residual)


def lambda_max(data: FeaturizedDataset, bundle: CpFactorBundle) -> float:
    """Smallest penalty level that zeroes every way at the given factors.

    Maximum over ways and groups of the gradient group norms at zero
    coefficients, i.e. of ``||(2/n) F_g^T y~||``.
    """
    width = bundle.rank * bundle.n_basis
    ytilde = data.centered_responses
    best = 0.0
    for k in range(bundle.ways):
        design = build_design(data, bundle, k)
        grad = (2.0 / data.n) * (design.T @ ytilde)
        norms = np.linalg.norm(grad.reshape(-1, width), axis=1)
        best = max(best, float(norms.max()))
    return best


# ---------------------------------------------------------------------------
# proximal machinery


def group_prox(v: np.ndarray, tau: float, group_size: int) -> np.ndarray:
    """Groupwise soft threshold: zero groups with norm <= tau, shrink the rest.

    Exact proximal operator of ``tau * sum_g ||x_g||`` for consecutive
    groups of ``group_size`` entries.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    v = np.asarray(v, dtype=float)
    blocks = v.reshape(-1, group_size)
    norms = np.linalg.norm(blocks, axis=1)
    with np.errstate(invalid="ignore", divide="ignore"):
        scale = np.where(norms > tau, 1.0 - tau / norms, 0.0)
    return (blocks * scale[:, None]).reshape(v.shape).copy()


def _group_norms(v: np.ndarray, group_size: int) -> np.ndarray:
    return np.linalg.norm(v.reshape(-1, group_size), axis=1)


def _power_sigma_max_sq(apply_gram, ncol: int, tol: float = 1e-9, max_iter: int = 500) -> float:
    """Largest eigenvalue of F^T F by power iteration (deterministic start)."""
    v = np.full(ncol, 1.0 / np.sqrt(ncol))
    value = 0.0
    for _ in range(max_iter):
        w = apply_gram(v)
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        if abs(norm - value) <= tol * max(norm, 1.0):
            return norm
        value = norm
    return value


def _kkt_residual(x, grad, lam, group_size, live) -> float:
    """Largest group violation of the stationarity conditions.

    Active groups must have ``grad_g + lam * x_g / ||x_g||`` near zero;
    zero groups must have ``||grad_g|| <= lam``.  ``live`` masks out
    degenerate groups whose design columns are identically zero.
    """
    blocks_x = x.reshape(-1, group_size)
    blocks_g = grad.reshape(-1, group_size)
    norms = np.linalg.norm(blocks_x, axis=1)
    active = (norms > 0) & live
    zero = (~(norms > 0)) & live
    worst = 0.0
    if active.any():
        direction = blocks_x[active] / norms[active][:, None]
        worst = float(np.linalg.norm(blocks_g[active] + lam * direction, axis=1).max())
    if zero.any():
        slack = np.linalg.norm(blocks_g[zero], axis=1) - lam
        worst = max(worst, float(max(slack.max(), 0.0)))
    return worst


def solve_block(
    design: np.ndarray,
    target: np.ndarray,
    lam: float,
    x0: np.ndarray,
    group_size: int,
    tol: float = 1e-8,
    max_iter: int = 10_000,
):
    """Solve ``min (1/n)||target - F x||^2 + lam * sum_g ||x_g||`` for one block.

    Accelerated proximal gradient with step ``1/L`` where
    ``L = 2 sigma_max(F^T F) / n`` comes from power iteration, a monotone
    safeguard so the objective never rises above the warm start, and the
    group KKT residual as stopping rule.  Groups whose design columns are
    all zero are forced to zero and excluded from the KKT check.  On hitting
    ``max_iter`` the best iterate found is returned with a non-convergence
    flag.

    Returns
    -------
    (x, info) : (ndarray, BlockSolveInfo)
    """
    if lam < 0:
        raise ValueError("lam must be >= 0")
    n, ncol = design.shape
    if ncol % group_size != 0:
        raise ValueError("column count must be a multiple of the group size")
    col_mass = (design * design).sum(axis=0).reshape(-1, group_size).sum(axis=1)
    live = col_mass > 0.0
    live_cols = np.repeat(live, group_size)

    def clamp(vec):
        vec[~live_cols] = 0.0
        return vec

    # the iteration only needs F through F^T F and F^T target; precompute the
    # Gram matrix unless the column count makes plain matvecs cheaper
    lin = design.T @ target
    if ncol <= 2 * n:
        gram = design.T @ design

        def apply_gram(v):
            return gram @ v

    else:

        def apply_gram(v):
            return design.T @ (design @ v)

    sigma_sq = _power_sigma_max_sq(apply_gram, ncol)
    if sigma_sq == 0.0:
        return np.zeros(ncol), BlockSolveInfo(True, 0, 0.0)
    step = n / (2.0 * sigma_sq * 1.02)  # small inflation keeps the step valid
    const = float(target @ target)

    def block_value(vec, gram_vec):
        smooth = (vec @ gram_vec - 2.0 * (lin @ vec) + const) / n
        return smooth + lam * _group_norms(vec, group_size).sum()

    # the quadratic form cancels catastrophically at small residuals, so the
    # monotone test gets a slack at the rounding scale of its inputs
    def value_noise(vec, gram_vec):
        return 64.0 * np.finfo(float).eps * (
            abs(vec @ gram_vec) + 2.0 * abs(lin @ vec) + const
        ) / n

    x = clamp(np.asarray(x0, dtype=float).copy())
    gram_x = apply_gram(x)
    f_x = block_value(x, gram_x)
    kkt = _kkt_residual(x, (2.0 / n) * (gram_x - lin), lam, group_size, live)
    if kkt <= tol:
        return x, BlockSolveInfo(True, 0, kkt)

    y = x
    gram_y = gram_x
    t_k = 1.0
    iterations = 0

    for iterations in range(1, max_iter + 1):
        grad_y = (2.0 / n) * (gram_y - lin)
        z = clamp(group_prox(y - step * grad_y, step * lam, group_size))
        gram_z = apply_gram(z)
        f_z = block_value(z, gram_z)
        if f_z > f_x + value_noise(z, gram_z):
            # overshoot: drop the momentum and restart from the best point;
            # the plain proximal step from x is guaranteed to decrease next
            y = x
            gram_y = gram_x
            t_k = 1.0
            continue
        t_next = 0.5 * (1.0 + np.sqrt(1.0 + 4.0 * t_k * t_k))
        y = z + ((t_k - 1.0) / t_next) * (z - x)
        x, gram_x, f_x, t_k = z, gram_z, f_z, t_next

        kkt = _kkt_residual(x, (2.0 / n) * (gram_x - lin), lam, group_size, live)
        if kkt <= tol:
            return x, BlockSolveInfo(True, iterations, kkt)
        gram_y = apply_gram(y)
    return x, BlockSolveInfo(False, iterations, kkt)


def _ridge_block(design: np.ndarray, target: np.ndarray, strength: float) -> np.ndarray:
    """Closed-form block update under a squared-norm penalty."""
    n, ncol = design.shape
    gram = design.T @ design / n + strength * np.eye(ncol)
    return np.linalg.solve(gram, design.T @ target / n)


# ---------------------------------------------------------------------------
# alternating minimization


def rebalance_ranks(bundle: CpFactorBundle) -> None:
    """Scale each rank's per-way blocks to a common (geometric-mean) norm.

    Leaves the composed coefficient tensors unchanged; skips ranks with a
    zeroed way.
    """
    m = bundle.ways
    for r in range(bundle.rank):
        norms = np.array([np.linalg.norm(bundle.factors[k][:, r, :]) for k in range(m)])
        if (norms == 0).any():
            continue
        target = float(np.exp(np.log(norms).mean()))
        for k in range(m):
            bundle.factors[k][:, r, :] *= target / norms[k]


def _balance_penalty_scales(bundle: CpFactorBundle) -> None:
    """Minimize the group penalty over compensated per-way rescalings.

    Scaling way ``k`` by ``c_k`` with ``prod c_k = 1`` leaves every composed
    tensor (hence the risk) unchanged and turns the penalty into
    ``sum_k c_k P_k`` with ``P_k`` the way's total group norm; the optimum
    ``c_k = G / P_k`` (``G`` the geometric mean) is exact for any rank.  The
    scale direction lies in no single way's block, so the block solves
    cannot make this move themselves; applying it after every sweep removes
    the flat valley the CP scale indeterminacy would otherwise leave.
    """
    masses = np.array([bundle.group_norms(k).sum() for k in range(bundle.ways)])
    if (masses == 0).any():
        return
    target = float(np.exp(np.log(masses).mean()))
    for k in range(bundle.ways):
        bundle.factors[k] *= target / masses[k]


def initialize_bundle(data: FeaturizedDataset, config: FitConfig) -> CpFactorBundle:
    """Starting point of the group-lasso sweeps.

    Either a copy of ``config.init``, or seeded standard-normal factors with
    unit group norms refined by ``config.ridge_sweeps`` alternating ridge
    updates.  The ridge iterate is then rank-rebalanced (Gauss-Seidel ridge
    sweeps leave the last-updated way on a very different scale, which
    distorts the shared penalty level across ways) and scaled down by
    ``config.init_scale``: the penalized optimum is smaller than the ridge
    scale, and a start below it lets the first sweeps expand into the
    penalty's basin instead of collapsing through it.

    This is exactly the state at which :func:`fit` starts applying the
    sparsity penalty, so penalty levels such as :func:`lambda_max` can be
    anchored to it.
    """
    if config.init is not None:
        bundle = config.init.copy()
        if bundle.dims != data.shape or bundle.n_basis != data.n_basis:
            raise ValueError("init bundle does not match the featurized data")
        if bundle.rank != config.rank:
            raise ValueError("init bundle rank does not match config.rank")
        return bundle
    rng = np.random.default_rng(config.seed)
    bundle = CpFactorBundle.random(data.shape, config.rank, data.n_basis, rng)
    ytilde = data.centered_responses
    for _ in range(config.ridge_sweeps):
        for k in range(bundle.ways):
            design = build_design(data, bundle, k)
            bundle.set_vector(k, _ridge_block(design, ytilde, config.ridge_strength))
    rebalance_ranks(bundle)
    if config.init_scale != 1.0:
        shrink = config.init_scale ** (1.0 / bundle.ways)
        for f in bundle.factors:
            f *= shrink
    return bundle


def fit(data: FeaturizedDataset, config: FitConfig) -> FitResult:
    """Alternating minimization over the per-way group-lasso problems.

    Sweeps the ways in order, rebuilding each design from the freshly
    updated factors (Gauss-Seidel; set ``config.jacobi`` to update all ways
    from the sweep-start snapshot instead).  Stops when the largest per-way
    coefficient change drops below ``config.tol`` or after
    ``config.max_sweeps`` sweeps.
    """
    config.validate()
    if data.n < 2:
        raise ValueError("need at least 2 samples")
    y = data.responses
    if np.ptp(y) == 0.0:
        bundle = CpFactorBundle.zeros(data.shape, config.rank, data.n_basis)
        return FitResult(
            bundle=bundle,
            intercept=data.intercept,
            active_sets=[bundle.active_set(k) for k in range(bundle.ways)],
            objective_trace=[objective(data, bundle, config.lam)],
            sweeps=0,
            converged=True,
            lam=config.lam,
            rank=config.rank,
            warning="constant response: returning the zero bundle",
        )

    bundle = initialize_bundle(data, config)
    ytilde = data.centered_responses
    group_size = config.rank * data.n_basis
    trace = [objective(data, bundle, config.lam)]
    block_info = []
    converged = False
    sweeps = 0

    for sweeps in range(1, config.max_sweeps + 1):
        previous = [bundle.vector(k).copy() for k in range(bundle.ways)]
        source = bundle.copy() if config.jacobi else bundle
        for k in range(bundle.ways):
            design = build_design(data, source, k)
            vec, info = solve_block(
                design,
                ytilde,
                config.lam,
                source.vector(k),
                group_size,
                tol=config.inner_tol,
                max_iter=config.inner_max_iter,
            )
            bundle.set_vector(k, vec)
            block_info.append(info)
        _balance_penalty_scales(bundle)
        if config.rebalance:
            rebalance_ranks(bundle)
        trace.append(objective(data, bundle, config.lam))
        change = max(
            float(np.linalg.norm(bundle.vector(k) - previous[k])) for k in range(bundle.ways)
        )
        if change <= config.tol:
            converged = True
            break

    return FitResult(
        bundle=bundle,
        intercept=data.intercept,
        active_sets=[bundle.active_set(k) for k in range(bundle.ways)],
        objective_trace=trace,
        sweeps=sweeps,
        converged=converged,
        lam=config.lam,
        rank=config.rank,
        block_info=block_info,
    )


def predict(result: FitResult, basis, scaler, samples) -> np.ndarray | float:
    """Predict raw covariates with a fit result plus its featurization."""
    return FittedModel(result.bundle, result.intercept, basis, scaler).predict(samples)


# ---------------------------------------------------------------------------
# distance to a reference factor set


def estimation_error(bundle: CpFactorBundle, truth: CpFactorBundle) -> float:
    """Sum over ways of squared factor distances after aligning to the truth.

    The CP representation is only determined up to per-rank scale splits,
    compensated sign flips and rank order, so both factor sets are first
    rebalanced to equal per-rank way norms, then the estimate's ranks are
    matched greedily to the truth's by decreasing absolute cosine similarity
    of the first-way blocks, and each matched component's sign is fixed to
    agree with the truth at the truth component's largest-magnitude entry.
    The squared Euclidean distances of the aligned flat vectors are summed
    over ways.
    """
    if not bundle.same_layout(truth):
        raise ValueError("bundles must share dims, rank and basis count")
    a = bundle.copy()
    b = truth.copy()
    rebalance_ranks(a)
    rebalance_ranks(b)
    rank = a.rank

    blocks_a = [a.factors[0][:, r, :].reshape(-1) for r in range(rank)]
    blocks_b = [b.factors[0][:, r, :].reshape(-1) for r in range(rank)]
    sim = np.full((rank, rank), -np.inf)
    for i, va in enumerate(blocks_a):
        na = np.linalg.norm(va)
        for j, vb in enumerate(blocks_b):
            nb = np.linalg.norm(vb)
            if na > 0 and nb > 0:
                sim[i, j] = abs(float(va @ vb)) / (na * nb)
    order = np.full(rank, -1)
    used_a, used_b = set(), set()
    flat_order = np.argsort(-sim, axis=None, kind="stable")
    for pos in flat_order:
        i, j = divmod(int(pos), rank)
        if i in used_a or j in used_b:
            continue
        order[j] = i
        used_a.add(i)
        used_b.add(j)
        if len(used_b) == rank:
            break
    for j in range(rank):  # ranks left unmatched (all-zero blocks)
        if order[j] < 0:
            order[j] = next(i for i in range(rank) if i not in used_a)
            used_a.add(order[j])

    total = 0.0
    for k in range(a.ways):
        aligned = a.factors[k][:, order, :].copy()
        for r in range(rank):
            ref = b.factors[k][:, r, :].reshape(-1)
            if not ref.any():
                continue
            anchor = int(np.argmax(np.abs(ref)))
            est = aligned[:, r, :].reshape(-1)
            if ref[anchor] * est[anchor] < 0:
                aligned[:, r, :] *= -1.0
        diff = aligned - b.factors[k]
        total += float((diff * diff).sum())
    return total
