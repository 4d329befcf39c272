"""Synthetic regression designs with known nonlinear structure.

Four generators share a library of four univariate component functions
selected by index parity.  Each design declares which entries of the
covariate tensor actually drive the response (10 along way 0, 4 along
way 1, and both slices of way 2 where present); everything else is noise-
irrelevant, which makes the generators suitable for selection benchmarks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "DESIGNS",
    "SimOutput",
    "SimSpec",
    "component_function",
    "simulate",
    "true_function",
    "way1_function",
    "way2_function",
]

DESIGNS = ("low_rank", "general", "three_way_case1", "three_way_case2")

_N_ACTIVE = (10, 4, 2)
_LOG_FLOOR = 1e-12


def _neg_sin(x):
    return -np.sin(1.5 * np.asarray(x, dtype=float))


def _cubic_bowl(x):
    x = np.asarray(x, dtype=float)
    return x**3 + 1.5 * (x - 0.5) ** 2


def _neg_gauss_pdf(x):
    # normal density with mean 0.5 and standard deviation 0.8
    x = np.asarray(x, dtype=float)
    return -np.exp(-((x - 0.5) ** 2) / (2 * 0.8**2)) / (0.8 * np.sqrt(2 * np.pi))


def _sin_of_exp(x):
    return np.sin(np.exp(-0.5 * np.asarray(x, dtype=float)))


def way1_function(j: int):
    """First-way component of the rank-one design; ``j`` is 1-based."""
    return _neg_sin if j % 2 == 1 else _cubic_bowl


def way2_function(k: int):
    """Second-way component of the rank-one design; ``k`` is 1-based."""
    return _neg_gauss_pdf if k % 2 == 1 else _sin_of_exp


def component_function(j: int, k: int):
    """Entrywise component for the general designs, chosen by parity.

    ``j`` and ``k`` are 1-based.  Odd/odd gives a sine dip, even/odd a cubic
    bowl, odd/even a negated Gaussian bump, even/even a sine of a decaying
    exponential.
    """
    if j % 2 == 1:
        return _neg_sin if k % 2 == 1 else _neg_gauss_pdf
    return _cubic_bowl if k % 2 == 1 else _sin_of_exp


@dataclass
class SimSpec:
    """One synthetic design instance.

    ``p2`` defaults to 8 for the two-way designs and 10 for the three-way
    ones; ``p3`` only applies to the three-way designs and is fixed at 2.
    Covariate entries are i.i.d. uniform on ``(low, high)``.
    """

    design: str
    n: int
    p1: int = 20
    p2: int | None = None
    p3: int = 2
    sigma: float = 0.1
    seed: int = 0
    low: float = 0.0
    high: float = 1.0

    def __post_init__(self):
        if self.design not in DESIGNS:
            raise ValueError(f"unknown design {self.design!r}; choose from {DESIGNS}")
        if self.p2 is None:
            self.p2 = 10 if self.design.startswith("three_way") else 8
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if self.p1 < _N_ACTIVE[0] or self.p2 < _N_ACTIVE[1]:
            raise ValueError(f"need p1 >= {_N_ACTIVE[0]} and p2 >= {_N_ACTIVE[1]}")
        if self.design.startswith("three_way") and self.p3 != 2:
            raise ValueError("three-way designs use p3 = 2")
        if self.sigma < 0:
            raise ValueError("sigma must be >= 0")
        if not self.high > self.low:
            raise ValueError("need high > low")

    @property
    def shape(self) -> tuple:
        if self.design.startswith("three_way"):
            return (self.p1, self.p2, self.p3)
        return (self.p1, self.p2)

    @property
    def active_sets(self) -> tuple:
        """0-based indices of the response-relevant entries per way."""
        sets = (np.arange(_N_ACTIVE[0]), np.arange(_N_ACTIVE[1]), np.arange(_N_ACTIVE[2]))
        return sets[: len(self.shape)]


@dataclass
class SimOutput:
    covariates: np.ndarray
    responses: np.ndarray
    noiseless: np.ndarray
    active_sets: tuple
    factors: tuple | None = None  # (x1, x2) for the rank-one covariate design
    spec: SimSpec | None = field(default=None, repr=False)


def _noiseless(spec: SimSpec, covariates: np.ndarray | None, factors: tuple | None) -> np.ndarray:
    """Ground-truth regression function; shared by the generator and the oracle."""
    j_active, k_active = _N_ACTIVE[0], _N_ACTIVE[1]
    if spec.design == "low_rank":
        if factors is None:
            raise ValueError(
                "the rank-one covariate design is driven by its factor vectors; "
                "pass factors=(x1, x2) (the scale split of a rank-one matrix is not identifiable)"
            )
        x1, x2 = (np.asarray(f, dtype=float) for f in factors)
        out = np.zeros(x1.shape[0])
        for j in range(1, j_active + 1):
            fj = way1_function(j)(x1[:, j - 1])
            for k in range(1, k_active + 1):
                out += fj * way2_function(k)(x2[:, k - 1])
        return out

    x = np.asarray(covariates, dtype=float)
    if x.shape[1:] != spec.shape:
        raise ValueError(f"covariate shape {x.shape[1:]} does not match design shape {spec.shape}")
    if spec.design == "general":
        out = np.zeros(x.shape[0])
        for j in range(1, j_active + 1):
            for k in range(1, k_active + 1):
                out += component_function(j, k)(x[:, j - 1, k - 1])
        return out
    if spec.design == "three_way_case1":
        out = np.zeros(x.shape[0])
        for j in range(1, j_active + 1):
            for k in range(1, k_active + 1):
                f = component_function(j, k)
                out += np.sin(f(x[:, j - 1, k - 1, 0]))
                out += np.log(np.maximum(np.abs(f(x[:, j - 1, k - 1, 1])), _LOG_FLOOR))
        return out
    # three_way_case2: the nonlinearities wrap the full sum over entries,
    # so the additive model is deliberately mis-specified here
    total = np.zeros(x.shape[0])
    for j in range(1, j_active + 1):
        for k in range(1, k_active + 1):
            f = component_function(j, k)
            for l in range(2):
                total += f(x[:, j - 1, k - 1, l])
    return np.sin(total) + np.log(np.maximum(np.abs(total), _LOG_FLOOR))


def simulate(spec: SimSpec) -> SimOutput:
    """Draw covariates and responses for one design, deterministically per seed."""
    rng = np.random.default_rng(spec.seed)
    factors = None
    if spec.design == "low_rank":
        x1 = rng.uniform(spec.low, spec.high, size=(spec.n, spec.p1))
        x2 = rng.uniform(spec.low, spec.high, size=(spec.n, spec.p2))
        covariates = x1[:, :, None] * x2[:, None, :]
        factors = (x1, x2)
    else:
        covariates = rng.uniform(spec.low, spec.high, size=(spec.n,) + spec.shape)
    noiseless = _noiseless(spec, covariates, factors)
    noise = rng.standard_normal(spec.n)
    responses = noiseless + spec.sigma * noise
    return SimOutput(
        covariates=covariates,
        responses=responses,
        noiseless=noiseless,
        active_sets=spec.active_sets,
        factors=factors,
        spec=spec,
    )


def true_function(spec: SimSpec, covariates=None, factors=None) -> np.ndarray:
    """Noiseless regression function for externally supplied inputs.

    Accepts a batch ``(b,) + shape`` or a single tensor.  The rank-one
    covariate design requires ``factors=(x1, x2)`` because the response is
    defined on the factor vectors themselves.
    """
    if factors is not None:
        x1, x2 = (np.asarray(f, dtype=float) for f in factors)
        single = x1.ndim == 1
        if single:
            x1, x2 = x1[None], x2[None]
        out = _noiseless(spec, None, (x1, x2))
        return float(out[0]) if single else out
    x = np.asarray(covariates, dtype=float)
    single = x.shape == spec.shape
    if single:
        x = x[None]
    out = _noiseless(spec, x, None)
    return float(out[0]) if single else out
