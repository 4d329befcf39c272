"""Dataset CSV and model persistence.

The dataset format is a plain CSV: a header row with the number of ways
followed by the per-way dimensions, then one row per sample holding the
response followed by the covariate entries in row-major order.  Floats are
written with shortest-round-trip precision, so parse(serialize(x)) == x.

Models are stored as a self-describing JSON document versioned with a
format tag; the basis is stored by its construction parameters and rebuilt
deterministically on load.
"""

from __future__ import annotations

import json

import numpy as np

from .estimator import FittedModel
from .splines import EntryScaler, IdentityBasis, build_basis
from .tensor import CpFactorBundle

__all__ = [
    "DataFormatError",
    "MODEL_FORMAT",
    "load_dataset",
    "load_model",
    "save_dataset",
    "save_model",
]

MODEL_FORMAT = "stareg-model"
MODEL_VERSION = 1


class DataFormatError(ValueError):
    """Raised when a dataset or model file does not match its format."""


def _fmt(value: float) -> str:
    return repr(float(value))


def save_dataset(path, covariates, responses) -> None:
    """Write covariate tensors and responses to the dataset CSV format."""
    x = np.asarray(covariates, dtype=float)
    y = np.asarray(responses, dtype=float).reshape(-1)
    if x.ndim < 2:
        raise ValueError("covariates must be (n, p_1, ..., p_m)")
    if x.shape[0] != y.size:
        raise ValueError("sample/response count mismatch")
    shape = x.shape[1:]
    flat = x.reshape(x.shape[0], -1)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(str(v) for v in (len(shape), *shape)) + "\n")
        for i in range(y.size):
            fh.write(",".join([_fmt(y[i])] + [_fmt(v) for v in flat[i]]) + "\n")


def load_dataset(path):
    """Read a dataset CSV; returns ``(covariates, responses)``."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [line.strip() for line in fh if line.strip()]
    if not lines:
        raise DataFormatError(f"{path}: empty dataset file")
    try:
        header = [int(tok) for tok in lines[0].split(",")]
    except ValueError as exc:
        raise DataFormatError(f"{path}: bad header row: {lines[0]!r}") from exc
    if not header or len(header) != header[0] + 1:
        raise DataFormatError(f"{path}: header must be m,p1,...,pm")
    shape = tuple(header[1:])
    if any(p < 1 for p in shape):
        raise DataFormatError(f"{path}: dimensions must be positive")
    width = 1 + int(np.prod(shape))
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        toks = line.split(",")
        if len(toks) != width:
            raise DataFormatError(f"{path}:{lineno}: expected {width} values, got {len(toks)}")
        try:
            rows.append([float(tok) for tok in toks])
        except ValueError as exc:
            raise DataFormatError(f"{path}:{lineno}: non-numeric value") from exc
    if not rows:
        raise DataFormatError(f"{path}: no sample rows")
    table = np.asarray(rows, dtype=float)
    if not np.isfinite(table).all():
        raise DataFormatError(f"{path}: non-finite values")
    responses = table[:, 0]
    covariates = table[:, 1:].reshape((len(rows),) + shape)
    return covariates, responses


def _basis_from_config(config: dict):
    kind = config.get("kind")
    if kind == "identity":
        return IdentityBasis()
    if kind == "bspline":
        return build_basis(
            order=int(config["order"]),
            n_internal=int(config["n_internal"]),
            natural=bool(config["natural"]),
            drop_constant=bool(config["drop_constant"]),
        )
    raise DataFormatError(f"unknown basis kind {kind!r}")


def save_model(path, model: FittedModel) -> None:
    """Persist a fitted model as versioned JSON."""
    bundle = model.bundle
    doc = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "basis": model.basis.config,
        "intercept": float(model.intercept),
        "shape": list(bundle.dims),
        "rank": bundle.rank,
        "n_basis": bundle.n_basis,
        "scaler": {
            "minimum": model.scaler.minimum.reshape(-1).tolist(),
            "maximum": model.scaler.maximum.reshape(-1).tolist(),
            "centers": model.scaler.centers.reshape(-1).tolist(),
        },
        # flat per-way factors in the documented (entry, rank, basis) layout
        "factors": [bundle.vector(k).tolist() for k in range(bundle.ways)],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh)
        fh.write("\n")


def load_model(path) -> FittedModel:
    """Load a model saved by :func:`save_model`."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise DataFormatError(f"{path}: not valid JSON") from exc
    if doc.get("format") != MODEL_FORMAT:
        raise DataFormatError(f"{path}: missing format tag {MODEL_FORMAT!r}")
    if doc.get("version") != MODEL_VERSION:
        raise DataFormatError(f"{path}: unsupported version {doc.get('version')!r}")
    try:
        shape = tuple(int(p) for p in doc["shape"])
        rank = int(doc["rank"])
        n_basis = int(doc["n_basis"])
        basis = _basis_from_config(doc["basis"])
        scaler = EntryScaler(
            minimum=np.asarray(doc["scaler"]["minimum"], dtype=float).reshape(shape),
            maximum=np.asarray(doc["scaler"]["maximum"], dtype=float).reshape(shape),
            centers=np.asarray(doc["scaler"]["centers"], dtype=float).reshape((n_basis,) + shape),
        )
        factors = [
            np.asarray(vec, dtype=float).reshape(p, rank, n_basis)
            for p, vec in zip(shape, doc["factors"], strict=True)
        ]
        bundle = CpFactorBundle(factors)
        intercept = float(doc["intercept"])
    except (KeyError, ValueError, TypeError) as exc:
        raise DataFormatError(f"{path}: malformed model document: {exc}") from exc
    if basis.n_basis != n_basis:
        raise DataFormatError(f"{path}: basis config yields {basis.n_basis} functions, expected {n_basis}")
    return FittedModel(bundle=bundle, intercept=intercept, basis=basis, scaler=scaler)
