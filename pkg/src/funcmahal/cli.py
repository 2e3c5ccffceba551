"""Command-line interface: ``funcmahal <command> [options]``.

Exit codes: 0 success, 2 usage error, 3 parse failure, 4 numeric failure,
5 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from typing import Optional, Sequence

import numpy as np
from scipy import linalg

from . import __version__
from .bench import CLASSIFY_METHODS, BenchConfig, run_bench
from .classify import (
    DEFAULT_ALPHA_GRID,
    classifier_to_json,
    cv_alpha,
    fit_classifier,
    predict_many,
)
from .errors import CurveParseError, NumericalError
from .funcspace import make_uniform_grid
from .io import atomic_write, curves_to_csv, format_number, read_curves
from .mahalanobis import depths, fit_model, mahalanobis_sq, model_from_json, model_to_json
from .outliers import detect_outliers, functional_boxplot
from .simulate import KernelSpec, ScenarioSpec, brownian_pair, contamination_model, gp_sample, scenario_sample
from .svg import boxplot_svg

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4, 5


class UsageError(Exception):
    pass


def _positive_float(text: str) -> float:
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _level(text: str) -> float:
    v = float(text)
    if not 0 < v < 1:
        raise argparse.ArgumentTypeError(f"must lie in (0, 1), got {text}")
    return v


def _emit(text: str, out: Optional[str]) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        atomic_write(out, text)


def _mcd_kwargs(args) -> dict:
    return {"seed": args.seed} if args.cov == "mcd" else {}


# ------------------------------------------------------------------ commands


def cmd_simulate(args) -> int:
    grid = make_uniform_grid(args.grid) if args.grid else None
    if args.kind == "contamination":
        sample = contamination_model(args.model, args.n, args.rate, grid, seed=args.seed)
    elif args.kind == "bm-bridge":
        sample = brownian_pair(args.cut, args.n, args.grid or 50, seed=args.seed)
    elif args.kind == "scenario":
        spec = ScenarioSpec(args.scenario, args.mean, args.sd)
        sample = scenario_sample(spec, args.n, grid, seed=args.seed)
    else:
        kernel = KernelSpec.ou(args.scale, args.range) if args.kernel == "ou" else KernelSpec(args.kernel)
        sample = gp_sample(kernel, None, grid or make_uniform_grid(50), args.n, seed=args.seed)
    _emit(curves_to_csv(sample), args.out)
    return EXIT_OK


def cmd_fit(args) -> int:
    table = read_curves(args.data)
    model = fit_model(table.sample, args.alpha, args.cov, **_mcd_kwargs(args))
    _emit(model_to_json(model, indent=2) + "\n", args.out)
    return EXIT_OK


def _load_model(path):
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        return model_from_json(text)
    except (json.JSONDecodeError, ValueError) as exc:
        raise CurveParseError(f"cannot read model {path}: {exc}") from None


def cmd_dist(args) -> int:
    table = read_curves(args.data)
    sample = table.sample
    if args.model:
        model = _load_model(args.model)
        if model.grid != sample.grid:
            raise UsageError("data grid does not match the model grid")
    else:
        model = fit_model(sample, args.alpha, args.cov, **_mcd_kwargs(args))
    d2 = mahalanobis_sq(sample.curves, model.mean, model)
    dep = depths(sample.curves, model)
    lines = ["id,distance_sq,distance,depth"]
    for i, name in enumerate(table.ids):
        lines.append(",".join([name, format_number(d2[i]), format_number(np.sqrt(d2[i])), format_number(dep[i])]))
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_outliers(args) -> int:
    table = read_curves(args.data)
    report = detect_outliers(table.sample, args.alpha, args.level, args.cov, args.mc, args.seed)
    doc = report.to_dict()
    doc["ids"] = list(table.ids)
    doc["outlier_ids"] = [table.ids[i] for i in report.outlier_indices]
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_boxplot(args) -> int:
    table = read_curves(args.data)
    summary = functional_boxplot(table.sample, args.alpha, args.level, args.mc, args.seed, args.cov)
    svg = boxplot_svg(table.sample.curves, table.axis, summary)
    doc = summary.to_dict()
    doc["axis"] = table.axis.tolist()
    doc["ids"] = list(table.ids)
    text = json.dumps(doc, indent=2) + "\n"
    _emit(svg, args.out)
    if args.json:
        try:
            atomic_write(args.json, text)
        except OSError:
            if args.out and args.out != "-":
                os.unlink(args.out)
            raise
    return EXIT_OK


def cmd_classify(args) -> int:
    train = read_curves(args.train).sample
    if train.labels is None:
        raise UsageError("training data needs a label column")
    if set(np.unique(train.labels)) - {0, 1}:
        raise UsageError("labels must be 0 or 1")
    t0, t1 = train.by_label(0), train.by_label(1)
    alpha = args.alpha
    if alpha is None:
        alpha = cv_alpha(t0, t1, DEFAULT_ALPHA_GRID, args.folds, args.seed, args.mode)
    model = fit_classifier(t0, t1, alpha, mode=args.mode)
    if args.model_out:
        atomic_write(args.model_out, classifier_to_json(model, indent=2) + "\n")
    if not args.test:
        _emit(classifier_to_json(model, indent=2) + "\n", args.out)
        return EXIT_OK
    test_table = read_curves(args.test)
    test = test_table.sample
    if test.grid != train.grid:
        raise UsageError("test grid does not match the training grid")
    pred = predict_many(model, test.curves)
    head = "id,predicted" + (",label" if test.labels is not None else "")
    lines = [f"# alpha={format_number(alpha)} mode={args.mode}", head]
    for i, name in enumerate(test_table.ids):
        row = [name, str(int(pred[i]))]
        if test.labels is not None:
            row.append(str(int(test.labels[i])))
        lines.append(",".join(row))
    if test.labels is not None:
        lines.insert(1, f"# error_rate={format_number(np.mean(pred != test.labels))}")
    _emit("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_bench(args) -> int:
    kwargs = dict(
        experiment=args.experiment,
        reps=args.reps,
        seed=args.seed,
        n=args.n,
        n_mc=args.mc,
        grid_size=args.grid,
        n_test=args.n_test,
        alpha=args.alpha,
        level=args.level,
        cov_mode=args.cov,
        mode=args.mode,
        jobs=args.jobs,
        out=args.out,
    )
    if args.methods:
        kwargs["methods"] = tuple(m.strip() for m in args.methods.split(","))
    for name, conv in (("models", int), ("rates", float), ("cuts", float), ("scenarios", str)):
        value = getattr(args, name)
        if value:
            kwargs[name] = tuple(conv(v) for v in value.split(","))
    config = BenchConfig(**kwargs)
    _emit(run_bench(config).to_csv(), args.out)
    return EXIT_OK


# -------------------------------------------------------------------- parser


def _common(p, cov_default="empirical", mc=False, level=False):
    p.add_argument("--alpha", type=_positive_float, default=0.01, help="regularization parameter (default 0.01)")
    p.add_argument("--cov", choices=("empirical", "mcd"), default=cov_default, help="covariance estimator")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    if level:
        p.add_argument("--level", type=_level, default=0.95, help="quantile level (default 0.95)")
    if mc:
        p.add_argument("--mc", type=int, default=2000, help="Monte Carlo draws (default 2000)")
    p.add_argument("--out", help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="funcmahal", description="Regularized functional Mahalanobis distance tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="write simulated curves as CSV")
    p.add_argument("kind", choices=("contamination", "bm-bridge", "scenario", "gp"))
    p.add_argument("--n", type=int, default=100, help="curves (per class for two-class kinds)")
    p.add_argument("--grid", type=int, help="grid size")
    p.add_argument("--model", type=int, choices=(1, 2, 3), default=1, help="contamination model")
    p.add_argument("--rate", type=float, default=0.0, help="contamination rate")
    p.add_argument("--cut", type=float, default=1.0, help="observation window end for bm-bridge")
    p.add_argument("--scenario", choices=("A", "B", "C"), default="A")
    p.add_argument("--mean", choices=("same", "diff"), default="same")
    p.add_argument("--sd", choices=("same", "diff"), default="same")
    p.add_argument("--kernel", choices=("ou", "brownian", "bridge"), default="ou")
    p.add_argument("--scale", type=_positive_float, default=1.0, help="OU scale")
    p.add_argument("--range", type=_positive_float, default=1.0, help="OU range")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit mean and spectrum, write model JSON")
    p.add_argument("data")
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("dist", help="squared distances and depths to the mean")
    p.add_argument("data")
    p.add_argument("--model", help="model JSON from 'fit' (default: fit on the data)")
    _common(p)
    p.set_defaults(func=cmd_dist)

    p = sub.add_parser("outliers", help="flag outlying curves, write JSON report")
    p.add_argument("data")
    _common(p, cov_default="mcd", mc=True, level=True)
    p.set_defaults(func=cmd_outliers)

    p = sub.add_parser("boxplot", help="functional boxplot as SVG plus JSON summary")
    p.add_argument("data")
    _common(p, mc=True, level=True)
    p.add_argument("--json", help="also write the JSON summary here")
    p.set_defaults(func=cmd_boxplot)

    p = sub.add_parser("classify", help="train a two-class rule, optionally predict a test set")
    p.add_argument("train")
    p.add_argument("--test", help="curves to classify")
    p.add_argument("--alpha", type=_positive_float, help="fixed alpha (default: cross-validated)")
    p.add_argument("--mode", choices=("homoscedastic", "heteroscedastic"), default="heteroscedastic")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--model-out", help="write the classifier JSON here")
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("bench", help="rerun a simulation study at desk scale")
    p.add_argument("experiment", choices=("outliers", "bm-bridge", "scenarios"))
    p.add_argument("--reps", type=int, default=50)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--n", type=int, help="sample size (training size per class for classification)")
    p.add_argument("--n-test", type=int, default=250, help="test curves per class")
    p.add_argument("--mc", type=int, default=2000)
    p.add_argument("--grid", type=int, help="grid size")
    p.add_argument("--alpha", type=_positive_float, default=0.01)
    p.add_argument("--level", type=_level, default=0.95)
    p.add_argument("--cov", choices=("empirical", "mcd"), default="mcd")
    p.add_argument("--mode", choices=("homoscedastic", "heteroscedastic"), default="heteroscedastic")
    p.add_argument("--methods", help=f"comma list from {','.join(CLASSIFY_METHODS)}")
    p.add_argument("--models", help="comma list of contamination models")
    p.add_argument("--rates", help="comma list of contamination rates")
    p.add_argument("--cuts", help="comma list of cut points")
    p.add_argument("--scenarios", help="comma list of scenarios")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", help="output CSV (default stdout)")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except CurveParseError as exc:
        print(f"funcmahal: parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (NumericalError, linalg.LinAlgError, FloatingPointError) as exc:
        print(f"funcmahal: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"funcmahal: i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    except (UsageError, ValueError) as exc:
        print(f"funcmahal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
