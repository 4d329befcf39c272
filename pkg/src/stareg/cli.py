"""Command-line front end.

Subcommands: ``simulate``, ``fit``, ``predict``, ``cv``, ``benchmark``,
``sensitivity``.  Options can come from a ``key = value`` config file via
``--config``; explicit flags override the file.  Every run prints the
resolved configuration including the seed.

Exit codes: 0 success, 1 usage error, 2 data error, 3 the fit did not
converge (the partial model is still written).
"""

from __future__ import annotations

import argparse
import sys

import numpy as np

from . import dataio, evaluate
from .estimator import FitConfig, FittedModel, fit
from .simulate import DESIGNS, SimSpec, simulate
from .splines import IdentityBasis, build_basis, featurize

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NOT_CONVERGED = 3


class CliError(Exception):
    """Usage-level problem detected after argument parsing."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to status 2; we reserve that
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read_config_file(path) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CliError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key.replace("-", "_")] = value
    return values


def _resolve(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit flags."""
    resolved = dict(defaults)
    if getattr(args, "config", None):
        file_values = _read_config_file(args.config)
        for key, raw in file_values.items():
            if key not in defaults:
                raise CliError(f"unknown config key {key!r}")
            kind = type(defaults[key]) if defaults[key] is not None else str
            if kind is bool:
                resolved[key] = raw.lower() in ("1", "true", "yes", "on")
            elif kind in (list, tuple):
                resolved[key] = type(defaults[key])(x.strip() for x in raw.split(","))
            else:
                resolved[key] = kind(raw)
    for key in defaults:
        flag = getattr(args, key, None)
        if flag is not None:
            resolved[key] = flag
    return resolved


def _print_resolved(command: str, resolved: dict) -> None:
    print(f"[stareg {command}] resolved configuration:")
    for key in sorted(resolved):
        print(f"  {key} = {resolved[key]}")


def _floats(text: str) -> tuple:
    return tuple(float(tok) for tok in text.split(","))


def _ints(text: str) -> tuple:
    return tuple(int(tok) for tok in text.split(","))


def _basis_from(resolved: dict):
    if resolved["basis"] == "identity":
        return IdentityBasis()
    return build_basis(
        order=resolved["order"],
        n_internal=resolved["n_internal"],
        natural=resolved["natural"],
        drop_constant=resolved["drop_constant"],
    )


_BASIS_DEFAULTS = {
    "basis": "bspline",
    "order": 4,
    "n_internal": 4,
    "natural": True,
    "drop_constant": True,
}

_FIT_DEFAULTS = {
    **_BASIS_DEFAULTS,
    "rank": 1,
    "lam": None,
    "lambda_scale": 0.05,
    "max_sweeps": 100,
    "tol": 1e-5,
    "inner_tol": 1e-8,
    "inner_max_iter": 10_000,
    "ridge_sweeps": 1,
    "ridge_strength": 0.1,
    "seed": 0,
}


def _add_basis_flags(p):
    p.add_argument("--basis", choices=("bspline", "identity"))
    p.add_argument("--order", type=int)
    p.add_argument("--n-internal", dest="n_internal", type=int)
    p.add_argument("--natural", dest="natural", action="store_const", const=True)
    p.add_argument("--no-natural", dest="natural", action="store_const", const=False)
    p.add_argument("--drop-constant", dest="drop_constant", action="store_const", const=True)
    p.add_argument("--keep-constant", dest="drop_constant", action="store_const", const=False)


def _add_fit_flags(p):
    _add_basis_flags(p)
    p.add_argument("--rank", type=int)
    p.add_argument("--lam", type=float, help="absolute penalty level")
    p.add_argument(
        "--lambda-scale",
        dest="lambda_scale",
        type=float,
        help="penalty as a fraction of the zero-solution threshold (used when --lam is absent)",
    )
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--inner-tol", dest="inner_tol", type=float)
    p.add_argument("--inner-max-iter", dest="inner_max_iter", type=int)
    p.add_argument("--ridge-sweeps", dest="ridge_sweeps", type=int)
    p.add_argument("--ridge-strength", dest="ridge_strength", type=float)
    p.add_argument("--seed", type=int)


def _fit_config(resolved: dict, lam: float, rank: int) -> FitConfig:
    return FitConfig(
        rank=rank,
        lam=lam,
        max_sweeps=resolved["max_sweeps"],
        tol=resolved["tol"],
        inner_tol=resolved["inner_tol"],
        inner_max_iter=resolved["inner_max_iter"],
        ridge_sweeps=resolved["ridge_sweeps"],
        ridge_strength=resolved["ridge_strength"],
        seed=resolved["seed"],
    )


# ---------------------------------------------------------------------------
# subcommands


def _cmd_simulate(args) -> int:
    defaults = {
        "design": "general",
        "n": 400,
        "p1": 20,
        "p2": None,
        "sigma": 0.1,
        "seed": 0,
        "low": 0.0,
        "high": 1.0,
    }
    resolved = _resolve(args, defaults)
    _print_resolved("simulate", resolved)
    spec = SimSpec(
        design=resolved["design"],
        n=resolved["n"],
        p1=resolved["p1"],
        p2=resolved["p2"],
        sigma=resolved["sigma"],
        seed=resolved["seed"],
        low=resolved["low"],
        high=resolved["high"],
    )
    out = simulate(spec)
    dataio.save_dataset(args.out, out.covariates, out.responses)
    print(f"wrote {out.responses.size} samples of shape {spec.shape} to {args.out}")
    return EXIT_OK


def _cmd_fit(args) -> int:
    resolved = _resolve(args, _FIT_DEFAULTS)
    _print_resolved("fit", resolved)
    covariates, responses = dataio.load_dataset(args.data)
    basis = _basis_from(resolved)
    data = featurize(covariates, responses, basis)
    lam = resolved["lam"]
    if lam is None:
        from .estimator import initialize_bundle, lambda_max

        probe = _fit_config(resolved, 0.0, resolved["rank"])
        lam = resolved["lambda_scale"] * lambda_max(data, initialize_bundle(data, probe))
        print(f"  (lambda resolved to {lam!r})")
    result = fit(data, _fit_config(resolved, float(lam), resolved["rank"]))
    model = FittedModel(result.bundle, result.intercept, basis, data.scaler)
    dataio.save_model(args.out, model)
    for k, active in enumerate(result.active_sets):
        print(f"way {k + 1}: {active.size} active groups")
    print(
        f"objective {result.objective_trace[-1]!r} after {result.sweeps} sweeps; "
        f"converged={result.converged}; model written to {args.out}"
    )
    if result.warning:
        print(f"warning: {result.warning}")
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def _cmd_predict(args) -> int:
    resolved = _resolve(args, {})
    _print_resolved("predict", resolved)
    model = dataio.load_model(args.model)
    covariates, _ = dataio.load_dataset(args.data)
    predictions = np.atleast_1d(model.predict(covariates))
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("prediction\n")
        for value in predictions:
            fh.write(repr(float(value)) + "\n")
    print(f"wrote {predictions.size} predictions to {args.out}")
    return EXIT_OK


def _cmd_cv(args) -> int:
    defaults = {
        **_FIT_DEFAULTS,
        "lambdas": None,
        "ranks": (1, 2, 3),
        "folds": 5,
        "workers": 1,
    }
    resolved = _resolve(args, defaults)
    _print_resolved("cv", resolved)
    covariates, responses = dataio.load_dataset(args.data)
    basis = _basis_from(resolved)
    base_config = _fit_config(resolved, 0.0, 1)
    lambdas = resolved["lambdas"]
    if lambdas is not None:
        lambdas = np.asarray([float(v) for v in lambdas])
    report = evaluate.cross_validate(
        covariates,
        responses,
        basis=basis,
        lambdas=lambdas,
        ranks=tuple(int(r) for r in resolved["ranks"]),
        folds=resolved["folds"],
        seed=resolved["seed"],
        base_config=base_config,
        workers=resolved["workers"],
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("lambda,rank,mean_mse\n")
        for i, lam in enumerate(report.lambdas):
            for j, rank in enumerate(report.ranks):
                fh.write(f"{repr(float(lam))},{rank},{repr(float(report.mean_mse[i, j]))}\n")
    print(f"selected lambda={report.best_lambda!r} rank={report.best_rank}; grid written to {args.out}")
    return EXIT_OK


def _cmd_benchmark(args) -> int:
    defaults = {
        "design": "general",
        "ns": (400,),
        "p1s": (20,),
        "sigmas": (0.1,),
        "replications": 10,
        "lambda_fractions": (0.1, 0.03, 0.01),
        "ranks": (1, 2),
        "folds": 5,
        "seed": 0,
        "test_size": 2000,
        "workers": 1,
        "max_sweeps": 100,
        "tol": 1e-5,
        "inner_tol": 1e-8,
        "inner_max_iter": 10_000,
        "ridge_sweeps": 1,
        "ridge_strength": 0.1,
    }
    resolved = _resolve(args, defaults)
    _print_resolved("benchmark", resolved)
    base_config = FitConfig(
        max_sweeps=resolved["max_sweeps"],
        tol=resolved["tol"],
        inner_tol=resolved["inner_tol"],
        inner_max_iter=resolved["inner_max_iter"],
        ridge_sweeps=resolved["ridge_sweeps"],
        ridge_strength=resolved["ridge_strength"],
    )
    rows = evaluate.benchmark(
        resolved["design"],
        ns=tuple(int(v) for v in resolved["ns"]),
        p1s=tuple(int(v) for v in resolved["p1s"]),
        sigmas=tuple(float(v) for v in resolved["sigmas"]),
        replications=resolved["replications"],
        lambda_fractions=tuple(float(v) for v in resolved["lambda_fractions"]),
        ranks=tuple(int(v) for v in resolved["ranks"]),
        folds=resolved["folds"],
        master_seed=resolved["seed"],
        test_size=resolved["test_size"],
        base_config=base_config,
        workers=resolved["workers"],
    )
    evaluate.write_benchmark_csv(args.out, rows)
    for row in rows:
        print(
            f"{row.design} n={row.n} p1={row.p1} sigma={row.sigma} {row.method}: "
            f"median MSE {row.median_mse:.4g} (se {row.se_median:.2g})"
        )
    print(f"table written to {args.out}")
    return EXIT_OK


def _cmd_sensitivity(args) -> int:
    defaults = {"delta": 0.1, "ways": None}
    resolved = _resolve(args, defaults)
    _print_resolved("sensitivity", resolved)
    model = dataio.load_model(args.model)
    covariates, _ = dataio.load_dataset(args.data)
    ways = resolved["ways"]
    if ways is not None:
        ways = tuple(int(w) - 1 for w in ways)  # flags use 1-based ways
    report = evaluate.sensitivity(model, covariates, resolved["delta"], ways=ways)
    report.to_csv(args.out)
    print(f"sensitivity grid {report.grid_shape} written to {args.out}")
    return EXIT_OK


def main(argv=None) -> int:
    parser = _Parser(prog="stareg", description="Sparse tensor additive regression toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="generate a synthetic dataset CSV")
    p.add_argument("--config")
    p.add_argument("--design", choices=DESIGNS)
    p.add_argument("--n", type=int)
    p.add_argument("--p1", type=int)
    p.add_argument("--p2", type=int)
    p.add_argument("--sigma", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--low", type=float)
    p.add_argument("--high", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("fit", help="fit a model on a dataset CSV")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_fit_flags(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("predict", help="predict with a saved model")
    p.add_argument("--config")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_predict)

    p = sub.add_parser("cv", help="cross-validate the penalty level and rank")
    p.add_argument("--config")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_fit_flags(p)
    p.add_argument("--lambdas", type=_floats, help="comma-separated absolute penalty grid")
    p.add_argument("--ranks", type=_ints, help="comma-separated rank grid")
    p.add_argument("--folds", type=int)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_cv)

    p = sub.add_parser("benchmark", help="median test error of STAR vs TLR on a design")
    p.add_argument("--config")
    p.add_argument("--design", choices=DESIGNS)
    p.add_argument("--ns", type=_ints)
    p.add_argument("--p1s", type=_ints)
    p.add_argument("--sigmas", type=_floats)
    p.add_argument("--replications", type=int)
    p.add_argument("--lambda-fractions", dest="lambda_fractions", type=_floats)
    p.add_argument("--ranks", type=_ints)
    p.add_argument("--folds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--test-size", dest="test_size", type=int)
    p.add_argument("--workers", type=int)
    p.add_argument("--max-sweeps", dest="max_sweeps", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--inner-tol", dest="inner_tol", type=float)
    p.add_argument("--inner-max-iter", dest="inner_max_iter", type=int)
    p.add_argument("--ridge-sweeps", dest="ridge_sweeps", type=int)
    p.add_argument("--ridge-strength", dest="ridge_strength", type=float)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_benchmark)

    p = sub.add_parser("sensitivity", help="mean prediction change per incremented position")
    p.add_argument("--config")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--delta", type=float)
    p.add_argument("--ways", type=_ints, help="comma-separated 1-based ways forming the grid")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_sensitivity)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"stareg: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except dataio.DataFormatError as exc:
        print(f"stareg: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ValueError, OSError) as exc:
        print(f"stareg: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
