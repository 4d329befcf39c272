"""Dense tensor primitives and CP factor algebra.

Conventions used throughout the package:

* Tensors are C-ordered (row-major) numpy arrays, so the last index varies
  fastest.  Formulas in the documentation use 1-based indices; storage and
  the Python API are 0-based.
* A CP factor set for ``m``-way coefficients keeps, for every way ``k``, an
  array of shape ``(p_k, rank, n_basis)``.  Its C-order flattening puts the
  basis index innermost, then the rank index, then the entry index, and every
  design matrix and solver vector in this package follows the same layout:
  entry ``(j, r, h)`` sits at flat position ``(j * rank + r) * n_basis + h``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "CpFactorBundle",
    "GroupIndex",
    "cp_compose",
    "group_span",
    "inner_product",
    "mode_slice",
]


def inner_product(a, b) -> float:
    """Sum of elementwise products of two tensors of identical shape."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.vdot(a, b))


def mode_slice(t, way: int, index: int) -> np.ndarray:
    """Fix one axis of ``t`` at ``index`` and return the remaining sub-tensor.

    For an ``m``-way tensor the result has ``m - 1`` ways; the order of the
    remaining axes is preserved.
    """
    t = np.asarray(t)
    if not 0 <= way < t.ndim:
        raise ValueError(f"way {way} out of range for {t.ndim}-way tensor")
    if not 0 <= index < t.shape[way]:
        raise IndexError(f"index {index} out of range for axis of size {t.shape[way]}")
    return np.take(t, index, axis=way)


def group_span(entry: int, rank: int, n_basis: int) -> slice:
    """Flat-column span of one coefficient group in the shared layout."""
    width = rank * n_basis
    return slice(entry * width, (entry + 1) * width)


@dataclass(frozen=True)
class GroupIndex:
    """Addresses the coefficient group of one entry along one way."""

    way: int
    entry: int
    span: slice


class CpFactorBundle:
    """Per-way CP factors for a stack of coefficient tensors.

    ``factors[k]`` has shape ``(p_k, rank, n_basis)``: for every entry ``j``
    along way ``k`` it holds the ``rank x n_basis`` coefficient block that
    forms one group under the group-sparsity penalty.  Bundles should be
    treated as read-only once they leave the fitting routines; use
    :meth:`copy` before mutating.
    """

    def __init__(self, factors):
        factors = [np.ascontiguousarray(f, dtype=float) for f in factors]
        if not factors:
            raise ValueError("need at least one way")
        first = factors[0]
        if first.ndim != 3:
            raise ValueError("each factor array must have shape (p_k, rank, n_basis)")
        for f in factors:
            if f.ndim != 3 or f.shape[1:] != first.shape[1:]:
                raise ValueError("all ways must share (rank, n_basis)")
            if not np.isfinite(f).all():
                raise ValueError("factor entries must be finite")
        self.factors = factors

    @property
    def ways(self) -> int:
        return len(self.factors)

    @property
    def rank(self) -> int:
        return self.factors[0].shape[1]

    @property
    def n_basis(self) -> int:
        return self.factors[0].shape[2]

    @property
    def dims(self) -> tuple:
        return tuple(f.shape[0] for f in self.factors)

    def vector(self, way: int) -> np.ndarray:
        """Flat coefficient vector of one way (shared group layout)."""
        return self.factors[way].reshape(-1)

    def set_vector(self, way: int, vec) -> None:
        vec = np.asarray(vec, dtype=float)
        f = self.factors[way]
        if vec.size != f.size:
            raise ValueError(f"expected {f.size} entries, got {vec.size}")
        if not np.isfinite(vec).all():
            raise ValueError("factor entries must be finite")
        self.factors[way] = vec.reshape(f.shape).copy()

    def group_norms(self, way: int) -> np.ndarray:
        f = self.factors[way]
        return np.sqrt((f * f).sum(axis=(1, 2)))

    def active_set(self, way: int) -> np.ndarray:
        """Entries along ``way`` whose whole coefficient group is nonzero."""
        return np.nonzero(self.group_norms(way) > 0.0)[0]

    def copy(self) -> "CpFactorBundle":
        return CpFactorBundle([f.copy() for f in self.factors])

    def same_layout(self, other: "CpFactorBundle") -> bool:
        return (
            self.dims == other.dims
            and self.rank == other.rank
            and self.n_basis == other.n_basis
        )

    @classmethod
    def zeros(cls, dims, rank: int, n_basis: int) -> "CpFactorBundle":
        return cls([np.zeros((p, rank, n_basis)) for p in dims])

    @classmethod
    def random(cls, dims, rank: int, n_basis: int, rng, unit_groups: bool = True):
        """Standard-normal factors, optionally scaled to unit group norms."""
        factors = [rng.standard_normal((p, rank, n_basis)) for p in dims]
        if unit_groups:
            for f in factors:
                norms = np.sqrt((f * f).sum(axis=(1, 2), keepdims=True))
                f /= np.where(norms > 0, norms, 1.0)
        return cls(factors)

    def __repr__(self):
        return (
            f"CpFactorBundle(dims={self.dims}, rank={self.rank}, "
            f"n_basis={self.n_basis})"
        )


def cp_compose(bundle: CpFactorBundle, h: int) -> np.ndarray:
    """Compose the ``h``-th coefficient tensor from the CP factors.

    Returns the sum over ranks of the outer products of the per-way factor
    vectors for basis index ``h``; the result has shape ``bundle.dims``.
    """
    if not 0 <= h < bundle.n_basis:
        raise ValueError(f"basis index {h} out of range (n_basis={bundle.n_basis})")
    out = np.zeros(bundle.dims)
    for r in range(bundle.rank):
        term = bundle.factors[0][:, r, h]
        for k in range(1, bundle.ways):
            term = np.multiply.outer(term, bundle.factors[k][:, r, h])
        out += term
    return out
