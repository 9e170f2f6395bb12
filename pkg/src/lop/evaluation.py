"""Repeated stratified resampling benchmark over LP and the baselines."""

from __future__ import annotations

import csv
import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from ._parallel import ordered_map
from .baselines import KNNClassifier
from .classifier import LocalProjectionClassifier
from .dataset import LabeledDataset, ResamplePlan, load_csv, preprocess, split_indices
from .exceptions import DataError
from .lda import FullRankLDA

METHODS = ("lp", "lda", "knn")
RESULT_COLUMNS = ("repetition", "method", "error_rate", "params", "status", "message")

# Training group sizes of the six class-imbalance scenarios (classes 1, 2, 3).
IMBALANCE_COUNTS = (
    (25, 75, 150),
    (50, 75, 125),
    (75, 75, 100),
    (100, 75, 75),
    (125, 75, 50),
    (150, 75, 25),
)


def imbalance_scenarios(repetitions=50, seed=0) -> list[ResamplePlan]:
    return [ResamplePlan(counts=c, repetitions=repetitions, seed=seed) for c in IMBALANCE_COUNTS]


@dataclass
class ExperimentSpec:
    dataset: str
    label_column: str
    plan: ResamplePlan
    methods: tuple = METHODS
    options: dict = field(default_factory=dict)
    output_dir: str | None = None
    dump_posteriors: bool = False
    preprocess: bool = True

    def __post_init__(self):
        self.methods = tuple(self.methods)
        if not self.methods:
            raise DataError("no methods given")
        unknown = [m for m in self.methods if m not in METHODS]
        if unknown:
            raise DataError(f"unknown methods {unknown}; choose from {METHODS}")

    @classmethod
    def from_file(cls, path, **overrides) -> "ExperimentSpec":
        """Read a YAML (or JSON) experiment manifest; non-None ``overrides`` win."""
        cfg = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        cfg.update({k: v for k, v in overrides.items() if v is not None})
        scenario = cfg.pop("scenario", None)
        plan_keys = {"fraction", "counts", "repetitions", "seed"}
        plan_args = {k: cfg.pop(k) for k in list(cfg) if k in plan_keys}
        if scenario is not None:
            plan_args.pop("fraction", None)
            plan_args["counts"] = IMBALANCE_COUNTS[int(scenario) - 1]
        base = Path(path).parent
        dataset = Path(cfg.pop("dataset"))
        if not dataset.is_absolute():
            dataset = base / dataset
        return cls(dataset=str(dataset), plan=ResamplePlan(**plan_args), **cfg)


@dataclass(frozen=True)
class ResultRow:
    repetition: int
    method: str
    error_rate: float
    params: str
    wall_time: float
    status: str = "ok"
    message: str = ""


@dataclass
class ResultTable:
    rows: list = field(default_factory=list)
    posteriors: dict = field(default_factory=dict)
    n_classes: int = 0

    def rates(self, method) -> np.ndarray:
        return np.array([r.error_rate for r in self.rows if r.method == method and r.status == "ok"])

    def to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(RESULT_COLUMNS)
            for r in self.rows:
                rate = repr(float(r.error_rate)) if r.status == "ok" else ""
                writer.writerow([r.repetition, r.method, rate, r.params, r.status, r.message])

    def timings_to_csv(self, path) -> None:
        with Path(path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["repetition", "method", "wall_time"])
            for r in self.rows:
                writer.writerow([r.repetition, r.method, f"{r.wall_time:.6f}"])


def _make_estimator(method, options, seed, rep):
    opts = dict(options.get(method, {}))
    if method == "lp":
        opts.setdefault("n_jobs", 1)
        return LocalProjectionClassifier(**opts)
    if method == "lda":
        return FullRankLDA(**opts)
    opts.setdefault("random_state", int(np.random.SeedSequence([seed & 0xFFFFFFFF, rep]).generate_state(1)[0]))
    return KNNClassifier(**opts)


def _selected_params(method, est) -> dict:
    if method == "lp":
        return {"k": int(est.k_)}
    if method == "lda":
        return {"rank": int(est.rank_)}
    return {"n_neighbors": int(est.n_neighbors_)}


def _run_repetition(ds: LabeledDataset, spec: ExperimentSpec, rep: int):
    train_idx, test_idx = split_indices(ds, spec.plan, rep)
    train, test = ds.subset(train_idx), ds.subset(test_idx)
    rows, dump = [], None
    for method in spec.methods:
        start = time.perf_counter()
        try:
            est = _make_estimator(method, spec.options, spec.plan.seed, rep)
            est.fit(train.features, train.labels)
            pred = est.predict(test.features)
            rate = float(np.mean(pred != test.labels))
            params = json.dumps(_selected_params(method, est), sort_keys=True)
            rows.append(ResultRow(rep, method, rate, params, time.perf_counter() - start))
            if method == "lp" and spec.dump_posteriors:
                dump = posterior_rows(est, train, test)
        except Exception as exc:  # one failed fit must not void the run
            rows.append(ResultRow(rep, method, float("nan"), "{}", time.perf_counter() - start,
                                  "failed", f"{type(exc).__name__}: {exc}"))
    return rows, dump


def posterior_rows(est, train: LabeledDataset, test: LabeledDataset) -> list:
    """Rows ``(row_index, true_class, p_1..p_G, role)`` for a fitted classifier."""
    out = []
    for role, part in (("train", train), ("test", test)):
        P = est.predict_proba(part.features)
        for rid, lab, p in zip(part.row_ids, part.labels, P):
            out.append([int(rid), part.class_names[lab - 1], *[repr(float(v)) for v in p], role])
    return out


def write_posterior_dump(rows, n_classes, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row_index", "true_class", *[f"p_{g}" for g in range(1, n_classes + 1)], "role"])
        writer.writerows(rows)


def run_experiment(spec: ExperimentSpec, dataset: LabeledDataset | None = None, n_jobs=None) -> ResultTable:
    """Evaluate every method on the same split for each repetition.

    Repetitions run in parallel when ``n_jobs > 1``; rows are ordered by
    repetition, then by method order in the spec.
    """
    ds = dataset if dataset is not None else load_csv(spec.dataset, spec.label_column)
    if spec.preprocess:
        ds, _ = preprocess(ds)
    spec.plan.train_counts(ds.group_counts)
    reps = range(1, spec.plan.repetitions + 1)
    results = ordered_map(lambda r: _run_repetition(ds, spec, r), reps, n_jobs)
    table = ResultTable()
    for rep, (rows, dump) in zip(reps, results):
        table.rows.extend(rows)
        if dump is not None:
            table.posteriors[rep] = dump
    table.n_classes = ds.n_classes
    return table


@dataclass(frozen=True)
class MethodSummary:
    method: str
    median: float
    mad: float
    n_ok: int
    n_failed: int


def summarize(table: ResultTable) -> list[MethodSummary]:
    """Median error rate and median absolute deviation from it, per method."""
    if not table.rows:
        raise DataError("empty result table")
    methods = list(dict.fromkeys(r.method for r in table.rows))
    out = []
    for m in methods:
        rates = table.rates(m)
        failed = sum(1 for r in table.rows if r.method == m and r.status != "ok")
        if rates.size == 0:
            raise DataError(f"every run of method {m!r} failed")
        med = float(np.median(rates))
        out.append(MethodSummary(m, med, float(np.median(np.abs(rates - med))), int(rates.size), failed))
    return out


def write_summary(summary, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "median_error", "mad", "n_ok", "n_failed"])
        for s in summary:
            writer.writerow([s.method, repr(s.median), repr(s.mad), s.n_ok, s.n_failed])


def write_outputs(table: ResultTable, out_dir) -> None:
    """Write ``results.csv``, ``timings.csv``, ``summary.csv`` and posterior dumps."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    table.to_csv(out / "results.csv")
    table.timings_to_csv(out / "timings.csv")
    write_summary(summarize(table), out / "summary.csv")
    for rep, rows in table.posteriors.items():
        write_posterior_dump(rows, table.n_classes, out / f"posteriors_rep{rep:03d}.csv")
