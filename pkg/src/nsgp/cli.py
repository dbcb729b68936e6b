"""Batch command line front end.

Subcommands: ``synth``, ``fit``, ``predict``, ``score``, ``measure`` and
``compare``. Options may also come from a JSON file given with
``--config``; keys are option names with dashes replaced by underscores,
and explicit flags override the file.

CSV datasets hold the input columns first and the output last, with an
optional header row. Exit codes: 0 success, 2 usage error, 3 data error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import data as data_mod
from .data import DataError, Dataset
from .experiment import KERNEL_NAMES, compare_kernels, evaluation_set, fit_kernel
from .gp import posterior
from .io import load_model, save_model, write_predictions
from .kernels import KernelError
from .metrics import score_set
from .optimize import McmcConfig, write_trace_csv
from .stationarity import classify_spread, measure_nonstationarity

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4
OUT_ENV = "NSGP_OUT"
DEFAULT_SEED = 0

log = logging.getLogger("nsgp")


class UsageError(Exception):
    pass


def _default_out() -> str:
    return os.environ.get(OUT_ENV, "nsgp_out")


# --------------------------------------------------------------------------
# argument handling

def _add_common(p, dataset=True):
    p.add_argument("--config", help="JSON file with default option values")
    p.add_argument("--seed", type=int, help=f"random seed (default {DEFAULT_SEED})")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./nsgp_out)")
    if dataset:
        p.add_argument("--dataset", help="'synth', 'synth:<signal>' or a CSV path")
        p.add_argument("--input-columns", type=int,
                       help="number of leading CSV input columns (default: all but the last)")
        p.add_argument("--test-fraction", type=float, help="held-out share for CSV data (default 0.2)")
        p.add_argument("--noise-variance", type=float,
                       help="fixed noise variance (normalized units) for kernels without a nugget")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsgp", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write a synthetic dataset as CSV")
    _add_common(p, dataset=False)
    p.add_argument("--kind", help=f"one of {sorted(data_mod.SIGNALS)} (default synth_1d)")
    p.add_argument("--n-points", type=int)
    p.add_argument("--noise-std-sq", type=float)

    p = sub.add_parser("fit", help="train one kernel; writes model.json, trace.csv, report.json")
    _add_common(p)
    p.add_argument("--kernel", help=f"one of {', '.join(KERNEL_NAMES)}")
    p.add_argument("--optimizer", choices=("de", "mcmc"))
    p.add_argument("--iterations", type=int, help="DE generations or MCMC iterations")

    p = sub.add_parser("predict", help="posterior mean/variance on a grid or query points")
    _add_common(p, dataset=False)
    p.add_argument("--model", help="model.json written by 'fit'")
    p.add_argument("--grid", help="per-axis 'start:stop:count' or constants, comma separated")
    p.add_argument("--query", help="CSV of query points (input columns only)")

    p = sub.add_parser("score", help="score a model against a CSV of held-out points")
    _add_common(p, dataset=False)
    p.add_argument("--model")
    p.add_argument("--test", help="CSV with input columns then the true output")

    p = sub.add_parser("measure", help="non-stationarity diagnostic")
    _add_common(p)
    p.add_argument("--iterations", type=int, help="number of local subsets (default 100)")
    p.add_argument("--subset-size", type=int)
    p.add_argument("--mcmc-iterations", type=int)

    p = sub.add_parser("compare", help="fit several kernels on identical data")
    _add_common(p)
    p.add_argument("--kernel", help="comma-separated kernel names (at least two)")
    p.add_argument("--optimizer", choices=("de", "mcmc"))
    p.add_argument("--iterations", type=int)
    p.add_argument("--warm-start", action="store_true",
                   help="start hybrid from the fitted parametric kernel, deep from stationary")
    return parser


def _merge_config(args) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    try:
        cfg = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    for key, value in cfg.items():
        key = key.replace("-", "_")
        if not hasattr(args, key):
            raise UsageError(f"unknown config key {key!r} for '{args.command}'")
        if getattr(args, key) in (None, False):
            setattr(args, key, value)
    return args


def _opt(args, name, default=None):
    value = getattr(args, name, None)
    return default if value is None else value


def _out_dir(args) -> Path:
    out = Path(_opt(args, "out", _default_out()))
    out.mkdir(parents=True, exist_ok=True)
    return out


def load_dataset(spec: str, input_columns=None, seed=DEFAULT_SEED) -> Dataset:
    if spec is None:
        raise UsageError("--dataset is required")
    if spec == "synth":
        return data_mod.synth_1d(50, 0.001, seed=seed)
    if spec.startswith("synth:"):
        kind = spec.split(":", 1)[1]
        if kind == "synth_1d":
            return data_mod.synth_1d(50, 0.001, seed=seed)
        if kind not in data_mod.SIGNALS:
            raise UsageError(f"unknown synthetic signal {kind!r}")
        return data_mod.synth_signal(kind, 500, seed=seed)
    path = Path(spec)
    if not path.exists():
        raise DataError(f"dataset file {path} does not exist")
    if input_columns is None:
        with path.open(newline="") as fh:
            first = next(csv.reader(fh), None)
        if not first or len(first) < 2:
            raise DataError(f"{path}: need at least two columns")
        input_columns = len(first) - 1
    return data_mod.load_csv(path, input_columns)


def parse_grid(spec: str, dim: int) -> np.ndarray:
    """``"0:1:101"`` style axes (or constants) to a point grid, first axis slowest."""
    axes = []
    for item in spec.split(","):
        parts = item.strip().split(":")
        try:
            if len(parts) == 1:
                axes.append(np.array([float(parts[0])]))
            elif len(parts) == 3:
                count = int(parts[2])
                if count < 1:
                    raise ValueError
                axes.append(np.linspace(float(parts[0]), float(parts[1]), count))
            else:
                raise ValueError
        except ValueError:
            raise UsageError(f"bad grid axis {item!r}; use start:stop:count or a constant") from None
    if len(axes) != dim:
        raise UsageError(f"grid has {len(axes)} axes, model expects {dim}")
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.column_stack([m.ravel() for m in mesh])


def _read_points(path, dim: int, with_target: bool):
    need = dim + (1 if with_target else 0)
    rows = []
    with Path(path).open(newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                vals = [float(c) for c in row[:need]]
            except ValueError:
                if lineno == 1:
                    continue
                raise DataError(f"{path}: row {lineno} is not numeric") from None
            if len(vals) != need:
                raise DataError(f"{path}: row {lineno} has {len(vals)} columns, need {need}")
            rows.append(vals)
    if not rows:
        raise DataError(f"{path}: no rows")
    arr = np.array(rows)
    return (arr[:, :dim], arr[:, dim]) if with_target else arr


def _write_json(path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, allow_nan=True))


# --------------------------------------------------------------------------
# commands

def cmd_synth(args) -> int:
    kind = _opt(args, "kind", "synth_1d")
    seed = _opt(args, "seed", DEFAULT_SEED)
    if kind == "synth_1d":
        ds = data_mod.synth_1d(_opt(args, "n_points", 50), _opt(args, "noise_std_sq", 0.001), seed)
    elif kind in data_mod.SIGNALS:
        ds = data_mod.synth_signal(kind, _opt(args, "n_points", 500), _opt(args, "noise_std_sq", 0.0), seed)
    else:
        raise UsageError(f"unknown signal {kind!r}")
    out = _out_dir(args) / f"{kind}.csv"
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x1", "y"])
        for xv, yv in zip(ds.raw_x()[:, 0], ds.raw_y()):
            w.writerow([repr(float(xv)), repr(float(yv))])
    print(out)
    return EXIT_OK


def _prepare(args):
    seed = _opt(args, "seed", DEFAULT_SEED)
    ds = load_dataset(_opt(args, "dataset"), _opt(args, "input_columns"), seed)
    train, test_x, test_y = evaluation_set(ds, _opt(args, "test_fraction", 0.2), seed)
    return seed, ds, train, test_x, test_y


def _run_summary(run, optimizer, seed, ds) -> dict:
    return {
        "kernel": run.name,
        "family": run.spec.family,
        "hyper_count": run.hyper_count,
        "optimizer": optimizer,
        "seed": seed,
        "dataset": ds.name,
        "n_train": None if run.model is None else run.model.n_data,
        "wall_seconds": run.wall_seconds,
        "score": None if run.report is None else run.report.to_dict(),
        "error": run.error,
    }


def _save_run(out: Path, run, optimizer, seed, ds) -> None:
    save_model(out / "model.json", run.model, ds.normalization, ds.name)
    write_trace_csv(out / "trace.csv", run.trace)
    _write_json(out / "report.json", _run_summary(run, optimizer, seed, ds))


def cmd_fit(args) -> int:
    kernel = _opt(args, "kernel")
    if kernel not in KERNEL_NAMES:
        raise UsageError(f"--kernel must be one of {', '.join(KERNEL_NAMES)}")
    optimizer = _opt(args, "optimizer", "de")
    seed, ds, train, test_x, test_y = _prepare(args)
    run = fit_kernel(train, test_x, test_y, kernel, optimizer, seed,
                     _opt(args, "iterations"), _opt(args, "noise_variance"))
    out = _out_dir(args)
    _save_run(out, run, optimizer, seed, ds)
    log.info("%s: rmse=%.4g crps=%.4g L=%.4g", kernel, run.report.rmse, run.report.crps_mean,
             run.report.log_likelihood)
    print(out / "report.json")
    return EXIT_OK


def cmd_predict(args) -> int:
    if not _opt(args, "model"):
        raise UsageError("--model is required")
    model, norm = load_model(args.model)
    dim = model.kernel.dim
    if _opt(args, "grid"):
        x_raw = parse_grid(args.grid, dim)
    elif _opt(args, "query"):
        x_raw = _read_points(args.query, dim, with_target=False)
    else:
        raise UsageError("give --grid or --query")
    post = posterior(model, norm.normalize_x(x_raw))
    out = _out_dir(args) / "predictions.csv"
    write_predictions(out, x_raw, norm.denormalize_y(post.mean), norm.denormalize_variance(post.variance))
    print(out)
    return EXIT_OK


def cmd_score(args) -> int:
    if not (_opt(args, "model") and _opt(args, "test")):
        raise UsageError("--model and --test are required")
    model, norm = load_model(args.model)
    x, y = _read_points(args.test, model.kernel.dim, with_target=True)
    post = posterior(model, norm.normalize_x(x))
    report = score_set(norm.normalize_y(y), post, model)
    out = _out_dir(args) / "score.json"
    _write_json(out, report.to_dict())
    print(out)
    return EXIT_OK


def cmd_measure(args) -> int:
    seed = _opt(args, "seed", DEFAULT_SEED)
    ds = load_dataset(_opt(args, "dataset"), _opt(args, "input_columns"), seed)
    n_mcmc = _opt(args, "mcmc_iterations", 2000)
    report = measure_nonstationarity(
        ds, _opt(args, "iterations", 100), _opt(args, "subset_size", 20),
        McmcConfig(n_mcmc, n_mcmc // 4, 0.15), seed,
    )
    out = _out_dir(args)
    report.write_json(out / "nonstationarity.json")
    report.write_csv(out / "nonstationarity.csv")
    print(f"{classify_spread(report)}\t{out / 'nonstationarity.json'}")
    return EXIT_OK


def cmd_compare(args) -> int:
    names = [k.strip() for k in str(_opt(args, "kernel", "")).split(",") if k.strip()]
    if len(names) < 2:
        raise UsageError("compare needs at least two comma-separated kernels")
    bad = [k for k in names if k not in KERNEL_NAMES]
    if bad:
        raise UsageError(f"unknown kernel(s) {bad}; choose from {', '.join(KERNEL_NAMES)}")
    optimizer = _opt(args, "optimizer", "de")
    seed, ds, train, test_x, test_y = _prepare(args)
    runs = compare_kernels(train, test_x, test_y, names, optimizer, seed, _opt(args, "iterations"),
                           _opt(args, "noise_variance"), warm_start=bool(_opt(args, "warm_start", False)))
    out = _out_dir(args)
    rows = []
    for run in runs:
        if run.ok:
            sub = out / run.name
            sub.mkdir(exist_ok=True)
            _save_run(sub, run, optimizer, seed, ds)
        rows.append(_run_summary(run, optimizer, seed, ds))
    _write_json(out / "comparison.json", {"dataset": ds.name, "seed": seed, "optimizer": optimizer,
                                          "kernels": rows})
    with (out / "comparison.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["kernel", "hyper_count", "rmse", "crps", "log_likelihood", "wall_seconds", "status"])
        for r in rows:
            s = r["score"] or {}
            w.writerow([r["kernel"], r["hyper_count"], repr(s.get("rmse", math.nan)),
                        repr(s.get("crps_mean", math.nan)), repr(s.get("log_likelihood", math.nan)),
                        repr(r["wall_seconds"]), "ok" if r["error"] is None else "failed"])
    print(out / "comparison.json")
    return EXIT_OK if any(r.ok for r in runs) else EXIT_NUMERIC


COMMANDS = {
    "synth": cmd_synth,
    "fit": cmd_fit,
    "predict": cmd_predict,
    "score": cmd_score,
    "measure": cmd_measure,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = _merge_config(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"nsgp: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"nsgp: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (np.linalg.LinAlgError, KernelError, ArithmeticError) as exc:
        print(f"nsgp: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        print(f"nsgp: invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
