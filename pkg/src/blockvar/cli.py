"""Command-line front end: ``blockvar simulate|estimate|test|forecast|spectra|reproduce``.

Exit codes: 0 success, 2 bad configuration or input, 3 violated
precondition, 4 numerical breakdown.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import (BlockVARError, ConvergenceFailure, DegenerateInput, InvalidArgument,
                     NumericalBreakdown, RankDeficiency, TuningFailure)
from .estimate import (SCHEMA_VERSION, EstimationConfig, FitResult, combine_fits,
                       estimate_block1, estimate_block2, rank_of)
from .evaluation import TuningGrid, bic_select
from .granger import higher_criticism_test, granger_test, rank_test
from .io import (difference, read_json, read_panel_csv, write_json, write_panel_csv,
                 write_rows_csv)
from .reproduce import PROFILES, TABLE_IDS, reproduce
from .simulate import (ExperimentSpec, ModelParams, generate_params, replication_rng,
                       simulate_system)
from .spectra import DEFAULT_GRID, spectrum_bounds_check

EXIT_OK, EXIT_CONFIG, EXIT_PRECONDITION, EXIT_NUMERICAL = 0, 2, 3, 4


class CLIError(Exception):
    def __init__(self, message, code=EXIT_CONFIG):
        super().__init__(message)
        self.code = code


def _exit_code(exc):
    if isinstance(exc, (RankDeficiency, DegenerateInput)):
        return EXIT_PRECONDITION
    if isinstance(exc, (NumericalBreakdown, ConvergenceFailure, TuningFailure)):
        return EXIT_NUMERICAL
    return EXIT_CONFIG


# --------------------------------------------------------------------------
# shared helpers


def _load_panels(args):
    X = difference(read_panel_csv(args.x), args.diff_x or args.diff)
    Z = None
    if getattr(args, "z", None):
        Z = difference(read_panel_csv(args.z), args.diff_z or args.diff)
        if Z.shape[0] != X.shape[0]:
            raise InvalidArgument(f"X has {X.shape[0]} rows but Z has {Z.shape[0]}")
    return X, Z


def _add_panel_args(p, z_required=False):
    p.add_argument("--x", required=True, type=Path, help="CSV panel of the x block")
    p.add_argument("--z", required=z_required, type=Path, help="CSV panel of the z block")
    p.add_argument("--diff", choices=("abs", "rel"), help="difference both panels in time")
    p.add_argument("--diff-x", choices=("abs", "rel"), help="difference only the x panel")
    p.add_argument("--diff-z", choices=("abs", "rel"), help="difference only the z panel")


def _config_from(args):
    base = read_json(args.config) if args.config else {}
    if not isinstance(base, dict):
        raise InvalidArgument("config file must hold a JSON object")
    overrides = {
        "lambda_A": args.lambda_a, "lambda_B": args.lambda_b, "lambda_C": args.lambda_c,
        "rho_u": args.rho_u, "rho_v": args.rho_v,
        "b_structure": {"lowrank": "low-rank", "low-rank": "low-rank",
                        "sparse": "sparse"}.get(args.b_structure),
        "b_penalty": args.b_penalty,
    }
    base.update({k: v for k, v in overrides.items() if v is not None})
    return EstimationConfig.from_dict(base)


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(args):
    if args.spec:
        spec = ExperimentSpec.from_dict(read_json(args.spec))
    elif args.preset:
        spec = ExperimentSpec.from_preset(args.preset)
    else:
        raise InvalidArgument("give --spec FILE or --preset NAME")
    if args.seed is not None:
        spec = spec.with_(seed=args.seed)
    rng = replication_rng(spec.seed, args.replication)
    params = generate_params(spec, rng)
    X, Z = simulate_system(params, spec.T, spec.noise, spec.burn_in, rng)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_panel_csv(out / "X.csv", X, "x")
    write_panel_csv(out / "Z.csv", Z, "z")
    write_json(out / "params.json", {"schema_version": SCHEMA_VERSION, "spec": spec.to_dict(),
                                     "replication": args.replication, **params.to_dict()})
    return EXIT_OK


def _fit_block(X, Z, cfg, block, args):
    if args.tune == "bic":
        grid = TuningGrid.from_dict(read_json(args.grid)) if args.grid else TuningGrid()
        sel = bic_select(X, Z, grid, block, cfg)
        if args.surface:
            rows = sel.surface_rows()
            header = sorted({k for r in rows for k in r})
            path = Path(args.surface)
            path = path.with_name(f"{path.stem}_{block}{path.suffix or '.csv'}")
            write_rows_csv(path, header, [[r.get(k, "") for k in header] for r in rows])
        return sel.fit
    return estimate_block1(X, cfg) if block == "block1" else estimate_block2(X, Z, cfg)


def cmd_estimate(args):
    X, Z = _load_panels(args)
    cfg = _config_from(args)
    payload = {"schema_version": SCHEMA_VERSION, "x_mean": X.mean(axis=0)}
    if Z is not None:
        payload["z_mean"] = Z.mean(axis=0)
    # estimation failures are reported inside the JSON; the exit code stays 0
    for block in ("block1", "block2") if Z is not None else ("block1",):
        try:
            fit = _fit_block(X, Z, cfg, block, args)
        except (RankDeficiency, NumericalBreakdown, ConvergenceFailure, TuningFailure) as exc:
            payload[block] = {"error": type(exc).__name__, "message": str(exc)}
            continue
        payload[block] = fit.to_dict()
        if block == "block2" and fit.config.b_structure == "low-rank":
            payload["rank_B"] = rank_of(fit.B)
    write_json(args.out, payload)
    return EXIT_OK


def cmd_test(args):
    X, Z = _load_panels(args)
    if args.method == "rank":
        T = X.shape[0] - 1
        if Z.shape[1] >= T:
            raise CLIError(f"rank test needs p2 < T (p2 = {Z.shape[1]}, T = {T})",
                           EXIT_PRECONDITION)
        report = rank_test(X, Z, r_null=args.r, alpha=args.alpha)
    elif args.method == "granger":
        report = granger_test(X, Z, alpha=args.alpha)
    else:
        grid = None if args.t_grid is None else [float(t) for t in args.t_grid.split(",")]
        report = higher_criticism_test(X, Z, t_grid=grid)
    write_json(args.out, {"schema_version": SCHEMA_VERSION, **report.to_dict()})
    return EXIT_OK


def _fits_from(payload):
    if not isinstance(payload, dict) or "block1" not in payload:
        raise InvalidArgument("fit file must come from `blockvar estimate`")
    blocks = {}
    for block in ("block1", "block2"):
        entry = payload.get(block)
        if entry is None:
            continue
        if "error" in entry:
            raise InvalidArgument(f"{block} in the fit file holds an error: {entry['message']}")
        blocks[block] = FitResult.from_dict(entry)
    return blocks


def cmd_forecast(args):
    payload = read_json(args.fit)
    fits = _fits_from(payload)
    X, Z = _load_panels(args)
    mx = np.asarray(payload.get("x_mean", X.mean(axis=0)))
    A = fits["block1"].A
    if A.shape[1] != X.shape[1]:
        raise InvalidArgument(f"fit has p1 = {A.shape[1]} but the x panel has {X.shape[1]} columns")
    x_last = X[-1] - mx
    out = {"schema_version": SCHEMA_VERSION, "x_hat": mx + A @ x_last}
    if Z is not None and "block2" in fits:
        mz = np.asarray(payload.get("z_mean", Z.mean(axis=0)))
        f2 = fits["block2"]
        out["z_hat"] = mz + f2.B @ x_last + f2.C @ (Z[-1] - mz)
    write_json(args.out, out)
    return EXIT_OK


def cmd_spectra(args):
    payload = read_json(args.params)
    try:
        if "block1" in payload:
            fits = _fits_from(payload)
            params = combine_fits(fits["block1"], fits["block2"])
        else:
            params = ModelParams.from_dict(payload)
    except KeyError as exc:
        raise InvalidArgument(f"parameter file is missing {exc.args[0]!r}") from None
    check = spectrum_bounds_check(params, args.grid_size)
    summary = check["summary"]
    write_json(args.out, {"schema_version": SCHEMA_VERSION, "margins": check["margins"],
                          "sides": check["sides"], "holds": check["holds"],
                          **summary.to_dict(include_values=args.values)})
    if args.csv:
        ext = summary.eigen_extremes()
        write_rows_csv(args.csv, ("theta", "lambda_min", "lambda_max"),
                       [(float(t), float(a), float(b)) for t, (a, b) in zip(summary.grid, ext)])
    return EXIT_OK


def cmd_reproduce(args):
    settings = args.settings.split(",") if args.settings else None
    progress = (lambda msg: print(msg, file=sys.stderr)) if args.verbose else None
    summary = reproduce(args.table, args.profile, args.out, settings, args.workers, progress)
    print(f"{summary['table']}: {summary['within_band']} of {summary['compared']} "
          f"values inside the reference bands; report in {Path(args.out) / summary['table']}")
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(prog="blockvar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw parameters and simulate a panel")
    p.add_argument("--spec", type=Path, help="experiment spec JSON")
    p.add_argument("--preset", help="table preset such as A.1 (ignored with --spec)")
    p.add_argument("--seed", type=int, help="override the spec seed")
    p.add_argument("--replication", type=int, default=0, help="replication index (default 0)")
    p.add_argument("--out", default=".", help="output directory (default .)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("estimate", help="fit block 1 (and block 2 when --z is given)")
    _add_panel_args(p)
    p.add_argument("--config", type=Path, help="EstimationConfig JSON; flags override it")
    p.add_argument("--lambda-a", type=float)
    p.add_argument("--lambda-b", type=float)
    p.add_argument("--lambda-c", type=float)
    p.add_argument("--rho-u", type=float)
    p.add_argument("--rho-v", type=float)
    p.add_argument("--b-structure", choices=("lowrank", "low-rank", "sparse"))
    p.add_argument("--b-penalty", choices=("plain", "whitened"))
    p.add_argument("--tune", choices=("none", "bic"), default="none")
    p.add_argument("--grid", type=Path, help="TuningGrid JSON for --tune bic")
    p.add_argument("--surface", help="CSV path for the BIC surface (one file per block)")
    p.add_argument("--out", default="fit.json")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("test", help="test B = 0 (or rank(B) <= r)")
    _add_panel_args(p, z_required=True)
    p.add_argument("--method", choices=("granger", "rank", "hc"), default="granger")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--r", type=int, default=0, help="null rank for --method rank")
    p.add_argument("--t-grid", help="comma-separated thresholds for --method hc")
    p.add_argument("--out", default="test.json")
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("forecast", help="one-step-ahead forecast from a fit")
    p.add_argument("--fit", required=True, type=Path, help="JSON written by estimate")
    _add_panel_args(p)
    p.add_argument("--out", default="forecast.json")
    p.set_defaults(func=cmd_forecast)

    p = sub.add_parser("spectra", help="spectral density extremes and bound margins")
    p.add_argument("--params", required=True, type=Path,
                   help="params.json from simulate or a fit JSON with both blocks")
    p.add_argument("--grid-size", type=int, default=DEFAULT_GRID)
    p.add_argument("--values", action="store_true", help="include the full density in the JSON")
    p.add_argument("--csv", help="CSV of per-frequency extreme eigenvalues")
    p.add_argument("--out", default="spectra.json")
    p.set_defaults(func=cmd_spectra)

    p = sub.add_parser("reproduce", help="re-run a simulation table")
    p.add_argument("table", help=f"one of {', '.join(TABLE_IDS)}")
    p.add_argument("--profile", choices=tuple(PROFILES), default="desk")
    p.add_argument("--settings", help="comma-separated rows, e.g. A.1,C.3 or 0.5/20/20/2000")
    p.add_argument("--workers", type=int, help="worker processes (default $BLOCKVAR_WORKERS or 1)")
    p.add_argument("--out", default="reports")
    p.add_argument("--verbose", action="store_true", help="progress on stderr")
    p.set_defaults(func=cmd_reproduce)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except BlockVARError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return _exit_code(exc)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
