"""Command-line interface: ``lop {fit,tune,predict,eval,plot}``.

Exit status is 0 on success, 1 on usage errors and 2 on data or numerical
errors. Diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._parallel import resolve_threads
from .classifier import LocalProjectionClassifier, load_model, save_model
from .dataset import load_csv, preprocess
from .evaluation import ExperimentSpec, run_experiment, summarize, write_outputs
from .exceptions import LopError
from .localproj import MODES
from .viz import make_diagram, read_posterior_dump, render_matrix, render_ternary

log = logging.getLogger("lop")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_train_args(p):
    p.add_argument("--train", required=True, help="training CSV")
    p.add_argument("--label", required=True, help="name of the label column")
    p.add_argument("--mode", choices=MODES, default="strict")
    p.add_argument("--scheme", choices=("weighted", "unweighted"), default="weighted")
    p.add_argument("--exclude-core-weights", action="store_true",
                   help="leave core members out of the quality weights")
    p.add_argument("--denominator", choices=("n", "n-k"), default="n",
                   help="divisor of the misclassification count when tuning k")
    p.add_argument("--out", required=True, help="model file to write")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lop", description="Classification with weighted local projections.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: $LOP_THREADS or 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    fit = sub.add_parser("fit", help="train a model")
    _add_train_args(fit)
    fit.add_argument("--k", type=int, default=None, help="core size")
    fit.add_argument("--auto-k", action="store_true", help="select k by training error (default)")

    tune = sub.add_parser("tune", help="select k and train")
    _add_train_args(tune)
    tune.add_argument("--report", required=True, help="CSV of training error per k")

    pred = sub.add_parser("predict", help="classify new observations")
    pred.add_argument("--model", required=True)
    pred.add_argument("--data", required=True, help="CSV with the model's feature columns")
    pred.add_argument("--out", required=True)

    ev = sub.add_parser("eval", help="run a resampling experiment")
    ev.add_argument("--config", required=True, help="YAML/JSON experiment manifest")
    ev.add_argument("--out-dir", default=None)
    ev.add_argument("--seed", type=int, default=None)
    ev.add_argument("--repetitions", type=int, default=None)
    ev.add_argument("--methods", default=None, help="comma-separated subset of lp,lda,knn")

    plot = sub.add_parser("plot", help="ternary diagrams from a posterior dump")
    plot.add_argument("--posteriors", required=True)
    group = plot.add_mutually_exclusive_group(required=True)
    group.add_argument("--pair", help="two 1-based class indices, e.g. 1,2")
    group.add_argument("--matrix", action="store_true", help="all class pairs in one figure")
    plot.add_argument("--role", choices=("train", "test"), default=None)
    plot.add_argument("--class-names", default=None, help="comma-separated names of classes 1..G")
    plot.add_argument("--out", required=True)
    return parser


def _fit(args, threads, k):
    ds, removed = preprocess(load_csv(args.train, args.label))
    if removed.size:
        log.warning("removed %d duplicate rows", removed.size)
    clf = LocalProjectionClassifier(
        k=k, mode=args.mode, scheme=args.scheme,
        exclude_core_from_weights=args.exclude_core_weights,
        error_denominator=args.denominator, n_jobs=threads,
    ).fit(ds.features, ds.labels)
    # labels are 1..G codes; store the original names instead
    clf.classes_ = np.asarray(ds.class_names, dtype=object)
    save_model(clf, args.out, ds.feature_names)
    return clf


def cmd_fit(args, threads):
    if args.k is not None and args.auto_k:
        raise UsageError("--k and --auto-k are mutually exclusive")
    clf = _fit(args, threads, "auto" if args.k is None else args.k)
    print(f"k={clf.k_} training_error={clf.training_error_:.6f}", file=sys.stderr)


def cmd_tune(args, threads):
    clf = _fit(args, threads, "auto")
    clf.tuning_report_.to_csv(args.report)
    print(f"selected k={clf.k_}", file=sys.stderr)


def _read_features(path, names):
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        rows = [r for r in reader if r and any(c.strip() for c in r)]
    if names is None:
        return np.array(rows, dtype=float)
    missing = [n for n in names if n not in header]
    if missing:
        raise LopError(f"{path}: missing feature columns {missing}")
    idx = [header.index(n) for n in names]
    out = np.empty((len(rows), len(idx)))
    for i, r in enumerate(rows):
        for j, c in enumerate(idx):
            try:
                out[i, j] = float(r[c])
            except (ValueError, IndexError):
                raise LopError(f"{path}: bad value at line {i + 2}, column {names[j]!r}") from None
    return out


def cmd_predict(args, threads):
    clf, names = load_model(args.model)
    clf.n_jobs = threads
    X = _read_features(args.data, names)
    P = clf.predict_proba(X)
    labels = clf.classes_[np.argmax(P, axis=1)]
    with Path(args.out).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["row", "label", *[f"p_{g}" for g in range(1, P.shape[1] + 1)]])
        for i, (lab, p) in enumerate(zip(labels, P)):
            writer.writerow([i, lab, *[repr(float(v)) for v in p]])


def cmd_eval(args, threads):
    methods = args.methods.split(",") if args.methods else None
    spec = ExperimentSpec.from_file(args.config, seed=args.seed, repetitions=args.repetitions,
                                    methods=methods, output_dir=args.out_dir)
    if spec.output_dir is None:
        raise UsageError("no output directory: set output_dir in the config or pass --out-dir")
    table = run_experiment(spec, n_jobs=threads)
    write_outputs(table, spec.output_dir)
    ds = load_csv(spec.dataset, spec.label_column)
    with (Path(spec.output_dir) / "classes.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class", "name"])
        writer.writerows(enumerate(ds.class_names, start=1))
    for s in summarize(table):
        print(f"{s.method}: median={s.median:.4f} mad={s.mad:.4f} failed={s.n_failed}", file=sys.stderr)


def _class_names(args, n_classes, labels):
    if args.class_names:
        names = [s.strip() for s in args.class_names.split(",")]
    else:
        sidecar = Path(args.posteriors).parent / "classes.csv"
        if sidecar.is_file():
            with sidecar.open(newline="", encoding="utf-8") as fh:
                names = [r["name"] for r in csv.DictReader(fh)]
        else:
            names = list(dict.fromkeys(labels))
    if len(names) != n_classes:
        raise LopError(f"{n_classes} posterior columns but {len(names)} class names")
    return names


def cmd_plot(args, threads):
    if args.pair is not None:
        try:
            a, b = (int(s) for s in args.pair.split(","))
        except ValueError:
            raise UsageError(f"--pair expects two integers like 1,2, got {args.pair!r}") from None
    P, labels, _ = read_posterior_dump(args.posteriors, args.role)
    names = _class_names(args, P.shape[1], labels)
    if args.matrix:
        render_matrix(P, labels, args.out, names)
    else:
        render_ternary(make_diagram(P, labels, a, b, names), args.out)


COMMANDS = {"fit": cmd_fit, "tune": cmd_tune, "predict": cmd_predict, "eval": cmd_eval, "plot": cmd_plot}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        threads = resolve_threads(args.threads if args.threads is not None else os.environ.get("LOP_THREADS"))
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"lop: {exc}", file=sys.stderr)
        return 1
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        COMMANDS[args.command](args, threads)
    except UsageError as exc:
        print(f"lop {args.command}: {exc}", file=sys.stderr)
        return 1
    except (LopError, ValueError, OSError, ArithmeticError) as exc:
        print(f"lop {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
