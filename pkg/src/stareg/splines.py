"""B-spline bases on [0, 1] and featurization of tensor covariates.

The basis is built on uniform internal knots with the boundary knots
replicated ``order`` times.  Raw values are mapped to [0, 1] per tensor
entry with a min-max scaler fitted on training data, and every basis
column is empirically centered per entry so the fitted model needs no
explicit intercept beyond the response mean.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "EntryScaler",
    "FeaturizedDataset",
    "IdentityBasis",
    "SplineBasis",
    "build_basis",
    "eval_basis",
    "featurize",
    "featurize_tensors",
    "fit_scaler",
]

_NORMALIZATION_GRID = np.linspace(0.0, 1.0, 8193)
_NORMALIZATION_SLACK = 1.0 + 1e-6  # covers the sup between grid points


def _raw_bspline_values(knots: np.ndarray, order: int, x: np.ndarray) -> np.ndarray:
    """Cox-de Boor recursion for all order-``order`` functions at points ``x``.

    Returns an array of shape ``(x.size, len(knots) - order)``.  0/0 terms
    from repeated knots are treated as 0.  The rightmost interval is closed
    so the boundary point ``knots[-1]`` carries a full partition of unity.
    """
    t = knots
    x = np.asarray(x, dtype=float).reshape(-1)
    values = ((t[:-1][None, :] <= x[:, None]) & (x[:, None] < t[1:][None, :])).astype(float)
    at_right = x == t[-1]
    if at_right.any():
        last = np.nonzero(np.diff(t) > 0)[0][-1]
        values[at_right, :] = 0.0
        values[at_right, last] = 1.0
    for q in range(2, order + 1):
        n_fun = len(t) - q
        higher = np.zeros((x.size, n_fun))
        for l in range(n_fun):
            left_width = t[l + q - 1] - t[l]
            right_width = t[l + q] - t[l + 1]
            acc = 0.0
            if left_width > 0:
                acc = (x - t[l]) / left_width * values[:, l]
            if right_width > 0:
                acc = acc + (t[l + q] - x) / right_width * values[:, l + 1]
            higher[:, l] = acc
        values = higher
    return values


def _raw_bspline_derivative(knots, order, n_deriv, x):
    """``n_deriv``-th derivative of each order-``order`` function at ``x``."""
    if n_deriv == 0:
        return _raw_bspline_values(knots, order, x)
    lower = _raw_bspline_derivative(knots, order - 1, n_deriv - 1, x)
    t = knots
    n_fun = len(t) - order
    out = np.zeros((np.size(x), n_fun))
    for l in range(n_fun):
        left_width = t[l + order - 1] - t[l]
        right_width = t[l + order] - t[l + 1]
        acc = 0.0
        if left_width > 0:
            acc = lower[:, l] / left_width
        if right_width > 0:
            acc = acc - lower[:, l + 1] / right_width
        out[:, l] = (order - 1) * acc
    return out


@dataclass(frozen=True)
class SplineBasis:
    """A fixed set of spline functions on [0, 1].

    ``transform`` linearly combines the raw B-spline columns into the final
    basis (identity when ``None``); it carries the natural boundary
    constraint and the optional removal of the constant direction.
    Transformed functions are rescaled so their sup-norm over [0, 1] is 1.
    """

    order: int
    n_internal: int
    natural: bool
    drop_constant: bool
    knots: np.ndarray
    transform: np.ndarray | None
    n_basis: int

    def __call__(self, x):
        return eval_basis(self, x)

    @property
    def config(self) -> dict:
        return {
            "kind": "bspline",
            "order": self.order,
            "n_internal": self.n_internal,
            "natural": self.natural,
            "drop_constant": self.drop_constant,
        }


class IdentityBasis:
    """Single pseudo-basis returning the input value itself.

    Featurizing with this basis turns the additive spline model into plain
    rank-constrained linear tensor regression on min-max scaled entries.
    """

    n_basis = 1

    def __call__(self, x):
        return np.asarray(x, dtype=float)[..., None]

    @property
    def config(self) -> dict:
        return {"kind": "identity"}

    def __eq__(self, other):
        return isinstance(other, IdentityBasis)


def build_basis(
    order: int = 4,
    n_internal: int = 4,
    natural: bool = True,
    drop_constant: bool = True,
) -> SplineBasis:
    """Construct a spline basis on [0, 1] with uniform internal knots.

    Parameters
    ----------
    order : int
        Spline order (polynomial degree + 1); 4 gives cubic splines.
    n_internal : int
        Number of internal knots, placed at ``i / (n_internal + 1)``.
    natural : bool
        Restrict to functions with zero second derivative at both
        boundaries (cubic only).  Removes two degrees of freedom.
    drop_constant : bool
        Additionally remove the constant function from the natural space,
        removing one more degree of freedom.  Requires ``natural``.

    Returns
    -------
    SplineBasis
        With ``n_basis = n_internal + order`` unconstrained, minus 2 for the
        natural constraint, minus 1 more for ``drop_constant``.  The default
        configuration yields 5 functions.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if n_internal < 0:
        raise ValueError("n_internal must be >= 0")
    if natural and order != 4:
        raise ValueError("the natural boundary constraint is defined for cubic splines (order 4)")
    if drop_constant and not natural:
        raise ValueError("drop_constant requires natural=True")
    internal = np.arange(1, n_internal + 1) / (n_internal + 1)
    knots = np.concatenate([np.zeros(order), internal, np.ones(order)])
    n_raw = n_internal + order

    transform = None
    n_basis = n_raw
    if natural:
        boundary = np.array([0.0, 1.0])
        constraints = _raw_bspline_derivative(knots, order, 2, boundary)
        if drop_constant:
            # partition of unity: the constant function has coefficients 1
            constraints = np.vstack([constraints, np.ones((1, n_raw))])
        null = scipy.linalg.null_space(constraints)
        expected = n_raw - constraints.shape[0]
        if null.shape[1] != expected:
            raise RuntimeError("degenerate boundary constraints")
        raw = _raw_bspline_values(knots, order, _NORMALIZATION_GRID)
        sup = np.abs(raw @ null).max(axis=0) * _NORMALIZATION_SLACK
        transform = null / sup
        n_basis = null.shape[1]

    return SplineBasis(
        order=order,
        n_internal=n_internal,
        natural=natural,
        drop_constant=drop_constant,
        knots=knots,
        transform=transform,
        n_basis=n_basis,
    )


def eval_basis(basis: SplineBasis, x) -> np.ndarray:
    """Evaluate all basis functions at ``x`` (scalar or array) in [0, 1].

    Values outside [0, 1] are the caller's responsibility; featurization
    clamps to the training range before calling this.
    """
    arr = np.asarray(x, dtype=float)
    raw = _raw_bspline_values(basis.knots, basis.order, arr.reshape(-1))
    if basis.transform is not None:
        raw = raw @ basis.transform
    return raw.reshape(arr.shape + (basis.n_basis,))


@dataclass
class EntryScaler:
    """Per-entry min-max scaling plus per-basis-column centering offsets.

    ``centers`` has shape ``(n_basis,) + shape`` and holds the training
    means of each basis value at each tensor position.  Entries whose
    training range is degenerate (min equals max) map every value to 0.5.
    """

    minimum: np.ndarray
    maximum: np.ndarray
    centers: np.ndarray

    @property
    def shape(self) -> tuple:
        return self.minimum.shape

    @property
    def n_basis(self) -> int:
        return self.centers.shape[0]

    def map_unit(self, samples: np.ndarray) -> np.ndarray:
        """Clamp to the training range and map onto [0, 1] per entry."""
        span = self.maximum - self.minimum
        clipped = np.clip(samples, self.minimum, self.maximum)
        with np.errstate(invalid="ignore", divide="ignore"):
            unit = (clipped - self.minimum) / span
        return np.where(span > 0, unit, 0.5)


def fit_scaler(samples, basis) -> EntryScaler:
    """Fit per-entry ranges and centering means on training covariates.

    ``samples`` has shape ``(n,) + shape`` with ``n >= 2``.  Basis values are
    computed after min-max mapping; their per-entry means become the
    centering offsets subtracted by :func:`featurize_tensors`.
    """
    samples = np.asarray(samples, dtype=float)
    if samples.ndim < 2 or samples.shape[0] < 2:
        raise ValueError("need at least 2 samples with at least one tensor axis")
    if not np.isfinite(samples).all():
        raise ValueError("covariates must be finite")
    minimum = samples.min(axis=0)
    maximum = samples.max(axis=0)
    scaler = EntryScaler(minimum=minimum, maximum=maximum, centers=np.zeros((0,)))
    unit = scaler.map_unit(samples)
    values = basis(unit.reshape(-1)).reshape(samples.shape + (basis.n_basis,))
    centers = np.moveaxis(values.mean(axis=0), -1, 0)
    scaler.centers = np.ascontiguousarray(centers)
    return scaler


def featurize_tensors(samples, basis, scaler: EntryScaler) -> np.ndarray:
    """Centered basis features of shape ``(n, n_basis) + shape``.

    Clamps each entry to its training range, maps to [0, 1], evaluates the
    basis and subtracts the stored centering means.
    """
    samples = np.asarray(samples, dtype=float)
    single = samples.shape == scaler.shape
    if single:
        samples = samples[None]
    if samples.shape[1:] != scaler.shape:
        raise ValueError(f"covariate shape {samples.shape[1:]} does not match scaler {scaler.shape}")
    unit = scaler.map_unit(samples)
    values = basis(unit.reshape(-1)).reshape(samples.shape + (basis.n_basis,))
    features = np.moveaxis(values, -1, 1) - scaler.centers[None]
    return features[0] if single else features


@dataclass
class FeaturizedDataset:
    """Training covariates expanded into centered basis features.

    ``features`` has shape ``(n, n_basis) + shape``; every (entry, basis)
    column has empirical mean 0 over the training samples, and the response
    mean is kept as the model intercept.
    """

    features: np.ndarray
    responses: np.ndarray
    intercept: float
    basis: object
    scaler: EntryScaler

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def n_basis(self) -> int:
        return self.features.shape[1]

    @property
    def shape(self) -> tuple:
        return self.features.shape[2:]

    @property
    def centered_responses(self) -> np.ndarray:
        return self.responses - self.intercept


def featurize(samples, responses, basis, scaler: EntryScaler | None = None) -> FeaturizedDataset:
    """Build a training dataset: fit the scaler if not supplied, expand, center."""
    samples = np.asarray(samples, dtype=float)
    responses = np.asarray(responses, dtype=float).reshape(-1)
    if samples.shape[0] != responses.size:
        raise ValueError("sample/response count mismatch")
    if not np.isfinite(responses).all():
        raise ValueError("responses must be finite")
    if scaler is None:
        scaler = fit_scaler(samples, basis)
    features = featurize_tensors(samples, basis, scaler)
    return FeaturizedDataset(
        features=features,
        responses=responses,
        intercept=float(responses.mean()),
        basis=basis,
        scaler=scaler,
    )
