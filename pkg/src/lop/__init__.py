"""Multigroup classification with weighted local projections."""

__version__ = "0.1.0"

from .baselines import KNNClassifier
from .classifier import LocalProjectionClassifier, load_model, save_model
from .dataset import LabeledDataset, ResamplePlan, load_csv, preprocess, stratified_resample
from .exceptions import DataError, DegenerateCoreError, IntervalError, LopError, NumericError
from .lda import FullRankLDA, fit_lda, lda_posterior
from .tuning import k_interval, tune_k

__all__ = [
    "KNNClassifier", "LocalProjectionClassifier", "FullRankLDA",
    "LabeledDataset", "ResamplePlan", "load_csv", "preprocess", "stratified_resample",
    "fit_lda", "lda_posterior", "k_interval", "tune_k", "load_model", "save_model",
    "LopError", "DataError", "DegenerateCoreError", "IntervalError", "NumericError",
]
