"""flare-eval: classifier benchmarks over flare-exported datasets."""

from .harness import EvalConfig, compare_flare, metrics_from_confusion, train_eval
from .smote import smote_oversample

__version__ = "0.1.0"

__all__ = [
    "EvalConfig",
    "compare_flare",
    "metrics_from_confusion",
    "smote_oversample",
    "train_eval",
    "__version__",
]
