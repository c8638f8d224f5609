"""Command line entry point.

Exit status: 0 on success, 1 for usage or input validation errors, 2 for
failures while running (including a bound verification that finds a
violation).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from ..christoffel import christoffel, fit, load_model, save_model
from ..errors import CSVParseError, RankDeficientWarning, UnsupportedError
from ..geometry import (
    contour_polylines,
    write_polylines_csv,
    write_raster_csv,
    write_raster_text,
)
from ..oracles import verify_all
from ..thresholding import estimate_support, practical_degree
from .datasets import separable_benchmark, thyroid_surrogate
from .experiments import (
    ExperimentConfig,
    Method,
    RunReport,
    _plain,
    default_methods,
    run_concentration_study,
    run_convergence_study,
    run_outlier_bench,
    version_tag,
)
from .io import ingest_csv, write_csv

OUTPUT_DIR_ENV = "CHRISTOFFEL_OUTPUT_DIR"


class UsageError(Exception):
    """Invalid arguments, config file or inputs (exit status 1)."""


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _int_list(text):
    try:
        return [int(float(v)) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _str_list(text):
    return [v.strip() for v in str(text).split(",") if v.strip()]


def _default_dir():
    return os.environ.get(OUTPUT_DIR_ENV, ".")


def build_parser() -> Parser:
    ap = Parser(prog="christoffel-support",
                description="Support estimation with the empirical Christoffel function.")
    ap.add_argument("--version", action="version", version=version_tag())
    sub = ap.add_subparsers(dest="command", required=True, parser_class=Parser)

    def cmd(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", help="file of key=value lines; values override flags")
        return p

    p = cmd("fit", "fit a model to a CSV of points")
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--degree", default="auto", help="integer, or 'auto' for floor(2 n^(1/4))")
    p.add_argument("--out", required=True, help="model file (JSON)")
    p.add_argument("--no-standardize", action="store_true")
    p.add_argument("--jitter", choices=("auto", "off"), default="auto")
    p.add_argument("--solver", choices=("qr", "cholesky"), default="qr")

    p = cmd("score", "print the Christoffel function at each row of a CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True)
    p.add_argument("--header", action="store_true")
    p.add_argument("--out", help="write scores to this CSV instead of stdout")

    p = cmd("estimate", "rasterize the support estimate of a model")
    p.add_argument("--model", required=True)
    p.add_argument("--gamma", default="auto", help="threshold, or 'auto' for the minimum training score")
    p.add_argument("--box", default="auto", help="lo_1,..,lo_p,hi_1,..,hi_p or 'auto'")
    p.add_argument("--res", type=int, default=256)
    p.add_argument("--coarse-factor", type=int, default=4)
    p.add_argument("--contours", help="CSV of (x, y, ring_id)")
    p.add_argument("--raster", help="plain-text occupancy grid")
    p.add_argument("--cells", help="CSV of occupied cell centers")
    p.add_argument("--report", help="JSON summary")

    p = cmd("verify-bounds", "evaluate every closed form and inequality check")
    p.add_argument("--out", help="JSON report path")

    p = cmd("convergence-study", "support recovery on a reference shape over an n grid")
    p.add_argument("--shape", default="disk", choices=("disk", "ball", "annulus", "four-disks", "hole"))
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--n", type=_int_list, default=[500, 2000, 8000, 32000])
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--base-seed", type=int, default=0)
    p.add_argument("--degree-rule", choices=("practical", "theoretical", "fixed"), default="practical")
    p.add_argument("--degree", type=int)
    p.add_argument("--threshold-rule", choices=("min-score", "theoretical"), default="min-score")
    p.add_argument("--res", type=int, default=1024)
    p.add_argument("--coarse-factor", type=int, default=4)
    p.add_argument("--r", type=float, default=0.0)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--out-dir", default=None)
    p.add_argument("--no-timing", action="store_true", help="omit wall times (bit-identical reports)")

    p = cmd("concentration-study", "Monte-Carlo coverage of the concentration bound")
    p.add_argument("--p", type=int, default=2)
    p.add_argument("--r", type=int, default=0)
    p.add_argument("--d", type=int, default=3)
    p.add_argument("--n", type=_int_list, default=[1000, 10000, 100000])
    p.add_argument("--reps", type=int, default=200)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--grid", type=int, default=50)
    p.add_argument("--radius", type=float, default=0.95)
    p.add_argument("--out")

    p = cmd("outlier-bench", "rank test points by score; precision of the lowest half")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="labelled CSV")
    src.add_argument("--synthetic", choices=("thyroid", "separable"))
    p.add_argument("--header", action="store_true")
    p.add_argument("--label-column", default="-1")
    p.add_argument("--methods", type=_str_list, help="e.g. christoffel:d=4,kde-gaussian:h=0.1,random")
    p.add_argument("--splits", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    return ap


def apply_config(parser: Parser, args: argparse.Namespace) -> argparse.Namespace:
    """Override parsed flags with key=value lines from ``args.config``."""
    if not getattr(args, "config", None):
        return args
    sub = parser._subparsers._group_actions[0].choices[args.command]
    actions = {a.dest: a for a in sub._actions}
    try:
        lines = Path(args.config).read_text().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from None
    for num, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, val = line.partition("=")
        key, val = key.strip().replace("-", "_"), val.strip()
        if not sep or key not in actions or key in ("help", "config"):
            raise UsageError(f"{args.config}, line {num}: unknown setting {raw.strip()!r}")
        act = actions[key]
        if isinstance(act, argparse._StoreTrueAction):
            if val.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise UsageError(f"{args.config}, line {num}: expected a boolean for {key}")
            value = val.lower() in ("true", "1", "yes")
        else:
            try:
                value = act.type(val) if act.type else val
            except (ValueError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"{args.config}, line {num}: {exc}") from None
            if act.choices is not None and value not in act.choices:
                raise UsageError(f"{args.config}, line {num}: {key} must be one of {list(act.choices)}")
        setattr(args, key, value)
    return args


def _report_path(explicit, name):
    if explicit:
        return Path(explicit)
    d = Path(_default_dir())
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _load_points(path, header):
    return ingest_csv(path, has_header=header).points


def cmd_fit(args):
    pts = _load_points(args.input, args.header)
    if args.degree == "auto":
        d = practical_degree(pts.shape[0])
    else:
        try:
            d = int(args.degree)
        except ValueError:
            raise UsageError(f"--degree must be an integer or 'auto', got {args.degree!r}") from None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", RankDeficientWarning)
        model = fit(pts, d, standardize_sample=not args.no_standardize,
                    jitter=args.jitter, solver=args.solver)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    save_model(model, args.out)
    print(f"fitted degree {d} on n = {model.n}, p = {model.dimension}; jitter {model.jitter:g}")
    return 0


def _load_model(path):
    try:
        return load_model(path)
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot load model {path}: {exc}") from None


def cmd_score(args):
    model = _load_model(args.model)
    pts = _load_points(args.input, args.header)
    if pts.shape[1] != model.dimension:
        raise UsageError(f"input has {pts.shape[1]} columns, model expects {model.dimension}")
    scores = christoffel(model, pts)
    if args.out:
        write_csv(args.out, scores[:, None], header=["christoffel"])
    else:
        for v in scores:
            print(repr(float(v)))
    return 0


def _parse_box(text, model):
    if text == "auto":
        if model.train_box is None:
            raise UsageError("model has no stored training box; pass --box explicitly")
        lo, hi = (np.asarray(b, dtype=float) for b in model.train_box)
        pad = (hi - lo) * 0.25
        return lo - pad, hi + pad
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError:
        raise UsageError(f"bad --box {text!r}") from None
    p = model.dimension
    if len(vals) != 2 * p:
        raise UsageError(f"--box needs {2 * p} numbers for dimension {p}")
    return np.array(vals[:p]), np.array(vals[p:])


def cmd_estimate(args):
    model = _load_model(args.model)
    if args.gamma == "auto":
        if model.train_min_score is None:
            raise UsageError("model has no stored training scores; pass --gamma")
        gamma = model.train_min_score
    else:
        try:
            gamma = float(args.gamma)
        except ValueError:
            raise UsageError(f"--gamma must be a number or 'auto', got {args.gamma!r}") from None
        if not gamma > 0:
            raise UsageError("--gamma must be > 0")
    box = _parse_box(args.box, model)
    est = estimate_support(model, gamma)
    ras = est.raster(box, args.res, coarse_factor=args.coarse_factor)
    rings = None
    if args.contours:
        if model.dimension != 2:
            raise UsageError("contours are only available for 2-D models")
        rings = contour_polylines(ras)
        write_polylines_csv(rings, args.contours)
    if args.raster:
        write_raster_text(ras, args.raster)
    if args.cells:
        write_raster_csv(ras, args.cells)
    summary = {"gamma": gamma, "box": [box[0].tolist(), box[1].tolist()],
               "resolution": list(ras.resolution), "measure": ras.measure,
               "occupied_cells": int(ras.occupancy.sum()),
               "contours": None if rings is None else len(rings), "version": version_tag()}
    if args.report:
        Path(args.report).write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    print(json.dumps(summary, sort_keys=True))
    return 0


def cmd_verify(args):
    reports = verify_all()
    bad = [r for r in reports if not r.satisfied]
    by_name = {}
    for r in reports:
        cnt = by_name.setdefault(r.name, [0, 0])
        cnt[0] += 1
        cnt[1] += not r.satisfied
    doc = {"version": version_tag(), "total": len(reports), "violations": len(bad),
           "by_check": {k: {"evaluated": v[0], "violations": v[1]} for k, v in by_name.items()},
           "reports": [r.as_dict() for r in reports]}
    path = _report_path(args.out, "verify_bounds.json")
    path.write_text(json.dumps(_plain(doc), indent=1, sort_keys=True) + "\n")
    for k, (tot, nbad) in by_name.items():
        print(f"{k:28s} {tot:6d} evaluated  {nbad} violations")
    print(f"{'all satisfied' if not bad else 'VIOLATIONS FOUND'}; report at {path}")
    return 0 if not bad else 2


def cmd_convergence(args):
    out_dir = args.out_dir or str(Path(_default_dir()) / "convergence")
    try:
        cfg = ExperimentConfig(
            kind="convergence", shape=args.shape, p=args.p, n_grid=tuple(args.n),
            seeds=args.seeds, base_seed=args.base_seed, degree_rule=args.degree_rule,
            degree=args.degree, threshold_rule=args.threshold_rule, resolution=args.res,
            coarse_factor=args.coarse_factor, r=args.r, eps=args.eps, alpha=args.alpha,
            output_dir=out_dir, timing=not args.no_timing,
        ).validate()
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if cfg.shape not in ("disk", "ball") and cfg.p != 2:
        raise UsageError(f"shape {cfg.shape!r} is only defined for p = 2")
    report = run_convergence_study(cfg)
    path = Path(out_dir) / "report.json"
    report.write(path)
    _print_rows(report, ("n", "d", "hausdorff", "boundary_hausdorff", "symdiff"))
    print(f"slopes: {report.slopes}; report at {path}")
    return 0


def cmd_concentration(args):
    if args.reps < 100:
        raise UsageError("--reps must be at least 100")
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    report = run_concentration_study(args.p, args.r, args.d, args.n, reps=args.reps,
                                     alpha=args.alpha, seed=args.seed,
                                     grid_per_axis=args.grid, radius=args.radius)
    path = _report_path(args.out, "concentration_report.json")
    report.write(path)
    _print_rows(report, ("n", "bound", "median_rel_error", "max_rel_error", "coverage"))
    print(f"slope of median relative error: {report.slopes['median_rel_error']}; report at {path}")
    return 0


def cmd_outlier(args):
    if args.synthetic == "thyroid":
        data = thyroid_surrogate(seed=args.seed)
    elif args.synthetic == "separable":
        data = separable_benchmark(seed=args.seed)
    else:
        data = ingest_csv(args.input, has_header=args.header, label_column=args.label_column)
        if data.labels is None:
            raise UsageError("input has no label column")
    try:
        methods = default_methods() if not args.methods else [Method.parse(m) for m in args.methods]
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    cfg = {"input": args.input, "synthetic": args.synthetic}
    report = run_outlier_bench(data, methods, splits=args.splits, seed=args.seed, config=cfg)
    path = _report_path(args.out, "outlier_report.json")
    report.write(path)
    _print_rows(report, ("method", "median", "q10", "q90"))
    print(f"report at {path}")
    return 0


def _print_rows(report: RunReport, keys):
    print("  ".join(f"{k:>18s}" for k in keys))
    for row in report.rows:
        cells = []
        for k in keys:
            v = row.get(k)
            cells.append(f"{v:>18.6g}" if isinstance(v, float) else f"{str(v):>18s}")
        print("  ".join(cells))


COMMANDS = {
    "fit": cmd_fit, "score": cmd_score, "estimate": cmd_estimate,
    "verify-bounds": cmd_verify, "convergence-study": cmd_convergence,
    "concentration-study": cmd_concentration, "outlier-bench": cmd_outlier,
}

VALIDATION_ERRORS = (UsageError, CSVParseError, UnsupportedError, FileNotFoundError,
                     IsADirectoryError)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = apply_config(parser, args)
        return COMMANDS[args.command](args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # runtime failure: report and signal with status 2
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
