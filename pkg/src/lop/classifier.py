"""scikit-learn compatible local-projection classifier and model persistence."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.multiclass import check_classification_targets
from sklearn.utils.validation import check_is_fitted, validate_data

from .ensemble import LocalModel, LPModel, aggregate_posterior, classify, fit_local_ensemble, set_weights
from .exceptions import DataError, IntervalError
from .lda import LDAModel
from .localproj import MODES, Core
from .tuning import TuningReport, k_interval, training_error, tune_k

FORMAT = "lop-model"
FORMAT_VERSION = 1


class LocalProjectionClassifier(ClassifierMixin, BaseEstimator):
    """Classification by quality-weighted aggregation of local LDA models.

    For every training observation a core of its ``k`` nearest same-class
    neighbours is formed, the data are projected onto the core's affine
    span (scores plus orthogonal distance) and an LDA model is fitted there
    on the non-core observations. Predictions aggregate the local posteriors
    with per-class weights measuring how well each local model separates
    that class on the training data.

    Parameters
    ----------
    k : int or "auto"
        Core size. ``"auto"`` selects it from the admissible interval by
        training misclassification rate.
    mode : {"strict", "rank_adjusted"}
        ``rank_adjusted`` grows cores past linearly dependent neighbours.
    scheme : {"weighted", "unweighted"}
        Aggregation of local posteriors.
    exclude_core_from_weights : bool
        Leave core members out of the quality-weight means.
    error_denominator : {"n", "n-k"}
        Denominator of the training error used when tuning.
    n_jobs : int, optional
        Worker threads; defaults to ``LOP_THREADS`` or 1.

    Attributes
    ----------
    classes_ : ndarray
        Class labels; their order defines the posterior columns.
    model_ : LPModel
    k_ : int
    tuning_report_ : TuningReport or None
    """

    def __init__(self, k="auto", mode="strict", scheme="weighted",
                 exclude_core_from_weights=False, error_denominator="n", n_jobs=None):
        self.k = k
        self.mode = mode
        self.scheme = scheme
        self.exclude_core_from_weights = exclude_core_from_weights
        self.error_denominator = error_denominator
        self.n_jobs = n_jobs

    def fit(self, X, y):
        X, y = validate_data(self, X, y, dtype=np.float64)
        check_classification_targets(y)
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        self.classes_, codes = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise DataError("need at least two classes")
        codes = codes.astype(np.int64)
        interval = k_interval(len(codes), np.bincount(codes), self.classes_.size)
        if isinstance(self.k, str):
            if self.k != "auto":
                raise ValueError(f"k must be an integer or 'auto', got {self.k!r}")
            self.model_, self.tuning_report_ = tune_k(
                X, codes, self.mode, self.scheme, self.exclude_core_from_weights,
                self.error_denominator, self.n_jobs, interval,
            )
        else:
            k = int(self.k)
            if k not in interval:
                raise IntervalError(f"k={k} outside admissible interval [{interval.lo}, {interval.hi}]")
            model = fit_local_ensemble(X, codes, k, self.mode, self.n_jobs)
            self.model_ = set_weights(model, codes, self.exclude_core_from_weights)
            self.tuning_report_ = None
        self.k_ = self.model_.k
        self.training_error_ = training_error(self.model_, codes, self.error_denominator, self.scheme)
        return self

    def predict_proba(self, X):
        check_is_fitted(self)
        X = validate_data(self, X, reset=False, dtype=np.float64)
        return aggregate_posterior(self.model_, X, self.scheme, self.n_jobs)

    def predict(self, X):
        return self.classes_[classify(self.predict_proba(X))]

    @property
    def weights_(self):
        check_is_fitted(self)
        return self.model_.weights


def _arr(a):
    return np.asarray(a).tolist()


def _label_json(v):
    return v.item() if isinstance(v, np.generic) else v


def save_model(clf: LocalProjectionClassifier, path, feature_names=None) -> None:
    """Write a fitted classifier to a JSON document.

    Floats are written with ``repr`` precision, so loading reproduces the
    arrays and therefore the predictions exactly.
    """
    check_is_fitted(clf)
    m = clf.model_
    doc = {
        "format": FORMAT,
        "version": FORMAT_VERSION,
        "params": clf.get_params(),
        "classes": [_label_json(c) for c in clf.classes_],
        "feature_names": list(feature_names) if feature_names is not None else None,
        "n_features": int(clf.n_features_in_),
        "k": m.k,
        "mode": m.mode,
        "n_classes": m.n_classes,
        "fingerprint": m.fingerprint,
        "training_error": clf.training_error_,
        "weights": _arr(m.weights),
        "q_plus": _arr(m.q_plus),
        "q_minus": _arr(m.q_minus),
        "locals": [
            {
                "owner": lm.core.owner,
                "members": _arr(lm.core.members),
                "center": _arr(lm.core.center),
                "scale": _arr(lm.core.scale),
                "basis": _arr(lm.core.basis),
                "singular_values": _arr(lm.core.singular_values),
                "lda": {
                    "class_ids": _arr(lm.lda.class_ids),
                    "means": _arr(lm.lda.means),
                    "pooled_cov": _arr(lm.lda.pooled_cov),
                    "chol": _arr(lm.lda.chol),
                    "log_det": lm.lda.log_det,
                    "ridge": lm.lda.ridge,
                    "n_obs": lm.lda.n_obs,
                },
            }
            for lm in m.locals
        ],
    }
    if clf.tuning_report_ is not None:
        r = clf.tuning_report_
        doc["tuning"] = {"ks": list(r.ks), "errors": list(r.errors), "selected": r.selected}
    doc["params"]["n_jobs"] = None
    Path(path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_model(path):
    """Load a classifier written by :func:`save_model`.

    Returns ``(classifier, feature_names)``; ``feature_names`` may be None.
    """
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("format") != FORMAT:
        raise DataError(f"{path}: not a model file")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported model version {doc.get('version')}")
    p = int(doc["n_features"])
    locals_ = []
    for e in doc["locals"]:
        basis = np.asarray(e["basis"], dtype=float).reshape(p, -1)
        core = Core(
            int(e["owner"]), np.asarray(e["members"], dtype=np.int64),
            np.asarray(e["center"], dtype=float), np.asarray(e["scale"], dtype=float),
            basis, np.asarray(e["singular_values"], dtype=float),
        )
        lda = e["lda"]
        locals_.append(LocalModel(core, LDAModel(
            np.asarray(lda["class_ids"], dtype=np.int64), np.asarray(lda["means"], dtype=float),
            np.asarray(lda["pooled_cov"], dtype=float), np.asarray(lda["chol"], dtype=float),
            float(lda["log_det"]), float(lda["ridge"]), int(lda["n_obs"]),
        )))
    model = LPModel(
        int(doc["k"]), doc["mode"], int(doc["n_classes"]), tuple(locals_),
        np.asarray(doc["weights"], dtype=float), np.asarray(doc["q_plus"], dtype=float),
        np.asarray(doc["q_minus"], dtype=float), doc["fingerprint"],
    )
    clf = LocalProjectionClassifier(**doc["params"])
    clf.classes_ = np.asarray(doc["classes"])
    clf.n_features_in_ = p
    clf.model_ = model
    clf.k_ = model.k
    clf.training_error_ = doc["training_error"]
    t = doc.get("tuning")
    clf.tuning_report_ = TuningReport(tuple(t["ks"]), tuple(t["errors"]), t["selected"]) if t else None
    return clf, doc.get("feature_names")
