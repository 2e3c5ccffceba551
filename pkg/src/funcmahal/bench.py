"""Desk-scale reruns of the outlier and classification experiments.

Each experiment cell runs ``reps`` seeded repetitions.  Repetition ``r`` of
cell ``c`` always draws from the same child of the root seed, so tables are
identical whether repetitions run serially or in a process pool.
"""

from __future__ import annotations

import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ._seeding import seed_sequence
from .classify import (
    cv_alpha,
    cv_dfm_k,
    evaluate_classifier,
    fit_classifier,
    fit_dfm_classifier,
    knn_predict,
)
from .funcspace import make_uniform_grid
from .outliers import detect_outliers, evaluate_detection
from .simulate import (
    BM_BRIDGE_CUTS,
    ScenarioSpec,
    bayes_error_cut,
    brownian_pair,
    contamination_model,
    scenario_sample,
)

__all__ = [
    "BenchConfig",
    "BenchResult",
    "cmd_outlier_bench",
    "cmd_classify_bench",
    "run_bench",
    "CLASSIFY_METHODS",
]

EXPERIMENTS = ("outliers", "bm-bridge", "scenarios")
CLASSIFY_METHODS = ("M_alpha", "dfm", "knn3", "knn5")
SCENARIO_CASES = (("same", "diff"), ("diff", "same"), ("diff", "diff"))


@dataclass(frozen=True)
class BenchConfig:
    """Settings for one benchmark run.

    ``n`` is the sample size for outliers and the per-class training size
    for classification (``None`` uses 100 for outliers, 50 for bm-bridge and
    both 50 and 100 for scenarios).  ``grid_size`` defaults to 50 points
    (51 for scenarios).
    """

    experiment: str
    reps: int = 50
    seed: int = 0
    n: Optional[int] = None
    n_mc: int = 2000
    grid_size: Optional[int] = None
    n_test: int = 250
    alpha: float = 0.01
    level: float = 0.95
    cov_mode: str = "mcd"
    models: tuple = (1, 2, 3)
    rates: tuple = (0.0, 0.05, 0.1, 0.15, 0.2)
    cuts: tuple = BM_BRIDGE_CUTS
    scenarios: tuple = ("A", "B", "C")
    cases: tuple = SCENARIO_CASES
    methods: tuple = CLASSIFY_METHODS
    mode: str = "heteroscedastic"
    jobs: int = 1
    out: Optional[str] = field(default=None, compare=False)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"experiment must be one of {EXPERIMENTS}, got {self.experiment!r}")
        if int(self.reps) != self.reps or self.reps < 1:
            raise ValueError("reps must be a positive integer")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")
        bad = set(self.methods) - set(CLASSIFY_METHODS)
        if bad:
            raise ValueError(f"unknown methods {sorted(bad)}")
        for name in ("models", "rates", "cuts", "scenarios", "cases", "methods"):
            object.__setattr__(self, name, tuple(getattr(self, name)))

    def resolved_n(self):
        if self.n:
            return self.n
        return {"outliers": 100, "bm-bridge": 50, "scenarios": (50, 100)}[self.experiment]

    def resolved_grid_size(self) -> int:
        return self.grid_size or (51 if self.experiment == "scenarios" else 50)

    def echo(self) -> dict:
        """The settings that shape this experiment's table, defaults filled in."""
        doc = {
            "experiment": self.experiment,
            "reps": self.reps,
            "seed": self.seed,
            "n": self.resolved_n(),
            "grid_size": self.resolved_grid_size(),
        }
        if self.experiment == "outliers":
            doc.update(n_mc=self.n_mc, alpha=self.alpha, level=self.level, cov_mode=self.cov_mode,
                       models=self.models, rates=self.rates)
        else:
            doc.update(n_test=self.n_test, methods=self.methods, mode=self.mode)
            if self.experiment == "bm-bridge":
                doc["cuts"] = self.cuts
            else:
                doc.update(scenarios=self.scenarios, cases=tuple("/".join(c) for c in self.cases))
        return doc


@dataclass(frozen=True)
class BenchResult:
    config: BenchConfig
    columns: tuple
    rows: tuple

    def column(self, name: str) -> np.ndarray:
        j = self.columns.index(name)
        return np.array([r[j] for r in self.rows])

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key, value in self.config.echo().items():
            buf.write(f"# {key}={_echo_value(value)}\n")
        buf.write(",".join(self.columns) + "\n")
        for row in self.rows:
            buf.write(",".join(_cell(v) for v in row) + "\n")
        return buf.getvalue()


def _echo_value(v) -> str:
    if isinstance(v, tuple):
        return ";".join(_echo_value(x) for x in v)
    return str(v)


def _cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return "nan" if np.isnan(v) else f"{float(v):.6g}"
    return str(v)


def _mean_sd(values) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    v = v[~np.isnan(v)]
    if v.size == 0:
        return float("nan"), float("nan")
    sd = float(np.std(v, ddof=1)) if v.size > 1 else 0.0
    return float(np.mean(v)), sd


def _run(fn, tasks, jobs):
    if jobs == 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _cell_streams(seed, n_cells, reps):
    return [cell.spawn(reps) for cell in seed_sequence(seed).spawn(n_cells)]


# ---------------------------------------------------------------- outliers


def _outlier_rep(model_id, n, c, grid_size, alpha, level, cov_mode, n_mc, ss):
    s_data, s_fit = ss.spawn(2)
    sample = contamination_model(model_id, n, c, make_uniform_grid(grid_size), seed=s_data)
    report = detect_outliers(sample, alpha, level, cov_mode, n_mc, seed=s_fit)
    return evaluate_detection(report.flags, sample.labels == 1)


def cmd_outlier_bench(config: BenchConfig) -> BenchResult:
    """Detection rates (mean and sd of ``p_c`` and ``p_f``) per contamination rate and model."""
    n = config.resolved_n()
    grid_size = config.resolved_grid_size()
    cells = [(c, m) for c in config.rates for m in config.models]
    streams = _cell_streams(config.seed, len(cells), config.reps)
    tasks = [
        (m, n, c, grid_size, config.alpha, config.level, config.cov_mode, config.n_mc, ss)
        for (c, m), cell_ss in zip(cells, streams)
        for ss in cell_ss
    ]
    out = _run(_outlier_rep, tasks, config.jobs)
    rows = []
    for i, (c, m) in enumerate(cells):
        res = np.array(out[i * config.reps : (i + 1) * config.reps])
        pc, pc_sd = _mean_sd(res[:, 0])
        pf, pf_sd = _mean_sd(res[:, 1])
        rows.append((float(c), int(m), pc, pc_sd, pf, pf_sd))
    columns = ("c", "model", "p_c", "p_c_sd", "p_f", "p_f_sd")
    return BenchResult(config, columns, tuple(rows))


# ---------------------------------------------------------- classification


def _classify_errors(train, test, ss, methods, mode):
    s_alpha, s_k = ss.spawn(2)
    t0, t1 = train.by_label(0), train.by_label(1)
    errs, alpha, k = [], np.nan, np.nan
    for method in methods:
        if method == "M_alpha":
            alpha = cv_alpha(t0, t1, seed=s_alpha, mode=mode)
            errs.append(evaluate_classifier(fit_classifier(t0, t1, alpha, mode=mode), test))
        elif method == "dfm":
            k = cv_dfm_k(t0, t1, seed=s_k)
            errs.append(evaluate_classifier(fit_dfm_classifier(t0, t1, k), test))
        else:
            kk = int(method[3:])
            errs.append(evaluate_classifier(lambda X, kk=kk: knn_predict(train, X, kk), test))
    return 100.0 * np.array(errs), alpha, k


def _bm_rep(T, n, n_test, grid_size, methods, mode, ss):
    s_train, s_test, s_fit = ss.spawn(3)
    train = brownian_pair(T, n, grid_size, seed=s_train)
    test = brownian_pair(T, n_test, grid_size, seed=s_test)
    return _classify_errors(train, test, s_fit, methods, mode)


def _scenario_rep(scenario, mean_case, sd_case, n, n_test, grid_size, methods, mode, ss):
    s_train, s_test, s_fit = ss.spawn(3)
    spec = ScenarioSpec(scenario, mean_case, sd_case)
    grid = make_uniform_grid(grid_size)
    train = scenario_sample(spec, n, grid, seed=s_train)
    test = scenario_sample(spec, n_test, grid, seed=s_test)
    return _classify_errors(train, test, s_fit, methods, mode)


def _summarize(out, reps, methods):
    errs = np.array([o[0] for o in out]).reshape(reps, len(methods))
    row = []
    for j in range(len(methods)):
        row.extend(_mean_sd(errs[:, j]))
    if "M_alpha" in methods:
        row.append(float(np.median([o[1] for o in out])))
    if "dfm" in methods:
        row.append(float(np.median([o[2] for o in out])))
    return row


def _method_columns(methods):
    cols = []
    for m in methods:
        cols += [m, f"{m}_sd"]
    if "M_alpha" in methods:
        cols.append("alpha_median")
    if "dfm" in methods:
        cols.append("k_median")
    return cols


def cmd_classify_bench(config: BenchConfig) -> BenchResult:
    """Misclassification percentages (mean and sd) per problem and method.

    ``bm-bridge`` gives one row per cut point with the Bayes error; the
    ``scenarios`` experiment gives one row per (scenario, n, mean, sd) cell.
    """
    methods = config.methods
    if config.experiment == "bm-bridge":
        n = config.resolved_n()
        grid_size = config.resolved_grid_size()
        cells = list(config.cuts)
        streams = _cell_streams(config.seed, len(cells), config.reps)
        rows = []
        for T, cell_ss in zip(cells, streams):
            tasks = [(T, n, config.n_test, grid_size, methods, config.mode, ss) for ss in cell_ss]
            out = _run(_bm_rep, tasks, config.jobs)
            rows.append(tuple([float(T), 100.0 * bayes_error_cut(T)] + _summarize(out, config.reps, methods)))
        columns = ("T", "bayes") + tuple(_method_columns(methods))
        return BenchResult(config, columns, tuple(rows))

    if config.experiment != "scenarios":
        raise ValueError(f"{config.experiment!r} is not a classification experiment")
    grid_size = config.resolved_grid_size()
    sizes = (config.n,) if config.n else config.resolved_n()
    cells = [(s, n, mc, sc) for s in config.scenarios for n in sizes for mc, sc in config.cases]
    streams = _cell_streams(config.seed, len(cells), config.reps)
    rows = []
    for (s, n, mc, sc), cell_ss in zip(cells, streams):
        tasks = [(s, mc, sc, n, config.n_test, grid_size, methods, config.mode, ss) for ss in cell_ss]
        out = _run(_scenario_rep, tasks, config.jobs)
        rows.append(tuple([s, int(n), mc, sc] + _summarize(out, config.reps, methods)))
    columns = ("scenario", "n", "mean", "sd") + tuple(_method_columns(methods))
    return BenchResult(config, columns, tuple(rows))


def run_bench(config: BenchConfig) -> BenchResult:
    if config.experiment == "outliers":
        return cmd_outlier_bench(config)
    return cmd_classify_bench(config)
