"""Model zoo: shallow sklearn classifiers and keras dense/recurrent nets.

Every model exposes fit(X, y_idx) / predict(X) over integer class ids.
The gradient-boosted entry ("xgb") is sklearn's histogram GBM; the rest
follow their stock configurations: random forest with defaults, SVC with
a poly kernel and probability estimates, a 3-dense-layer feed-forward
net with two dropout layers and a softmax head, and (bi)LSTM stacks for
the sequence baselines (64/32 units + 0.2 dropout + dense 16 for binary;
128 units + dense 64 with two 0.3 dropouts for multi-class).
"""

from __future__ import annotations

import os
import time
from dataclasses import dataclass

import numpy as np
import psutil

os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")
os.environ.setdefault("TF_ENABLE_ONEDNN_OPTS", "0")  # cuts run-to-run float jitter

SHALLOW_MODELS = ("rf", "svc", "xgb")
DENSE_MODELS = ("ffnn",)
SEQUENCE_MODELS = ("lstm", "bilstm")
ALL_MODELS = SHALLOW_MODELS + DENSE_MODELS + SEQUENCE_MODELS


@dataclass
class FitStats:
    train_time_s: float
    cpu_before: float
    cpu_after: float


def make_model(name: str, task: str, n_classes: int, seed: int,
               input_shape: tuple[int, ...], epochs: int | None = None,
               batch_size: int = 64):
    if name == "rf":
        from sklearn.ensemble import RandomForestClassifier

        return _SkWrapper(RandomForestClassifier(random_state=seed))
    if name == "svc":
        from sklearn.svm import SVC

        return _SkWrapper(SVC(kernel="poly", probability=True, random_state=seed))
    if name == "xgb":
        from sklearn.ensemble import HistGradientBoostingClassifier

        return _SkWrapper(HistGradientBoostingClassifier(random_state=seed))
    if name == "ffnn":
        return _KerasDense(n_classes, seed, epochs or 40)
    if name in SEQUENCE_MODELS:
        return _KerasSequence(name, task, n_classes, seed, input_shape, epochs or 5,
                              batch_size)
    raise ValueError(f"unknown model: {name}")


def timed_fit(model, X, y) -> FitStats:
    cpu_before = psutil.cpu_percent(interval=0.05)
    started = time.perf_counter()
    model.fit(X, y)
    train_time = time.perf_counter() - started
    cpu_after = psutil.cpu_percent(interval=0.05)
    return FitStats(train_time_s=train_time, cpu_before=cpu_before, cpu_after=cpu_after)


class _SkWrapper:
    def __init__(self, estimator):
        self.estimator = estimator

    def fit(self, X, y):
        self.estimator.fit(X, y)

    def predict(self, X):
        return self.estimator.predict(X)


class _KerasDense:
    """Dense 64 -> dropout -> dense 32 -> dropout -> softmax."""

    def __init__(self, n_classes: int, seed: int, epochs: int):
        self.n_classes = n_classes
        self.seed = seed
        self.epochs = epochs
        self.model = None

    def _build(self, input_dim: int):
        import tensorflow as tf

        tf.keras.utils.set_random_seed(self.seed)
        model = tf.keras.Sequential(
            [
                tf.keras.layers.Input(shape=(input_dim,)),
                tf.keras.layers.Dense(64, activation="relu"),
                tf.keras.layers.Dropout(0.2),
                tf.keras.layers.Dense(32, activation="relu"),
                tf.keras.layers.Dropout(0.2),
                tf.keras.layers.Dense(self.n_classes, activation="softmax"),
            ]
        )
        model.compile(
            optimizer="adam", loss="sparse_categorical_crossentropy", metrics=["accuracy"]
        )
        return model

    def fit(self, X, y):
        self.model = self._build(X.shape[1])
        self.model.fit(X, np.asarray(y), epochs=self.epochs, batch_size=64, verbose=0)

    def predict(self, X):
        return self.model.predict(X, verbose=0).argmax(axis=1)


class _KerasSequence:
    """LSTM / bidirectional LSTM stacks over [n, seq_len, features] input."""

    def __init__(self, kind: str, task: str, n_classes: int, seed: int,
                 input_shape: tuple[int, ...], epochs: int, batch_size: int = 64):
        self.kind = kind
        self.task = task
        self.n_classes = n_classes
        self.seed = seed
        self.input_shape = input_shape
        self.epochs = epochs
        self.batch_size = batch_size
        self.model = None

    def _build(self):
        import tensorflow as tf

        tf.keras.utils.set_random_seed(self.seed)

        def recurrent(units, **kw):
            layer = tf.keras.layers.LSTM(units, **kw)
            if self.kind == "bilstm":
                layer = tf.keras.layers.Bidirectional(layer)
            return layer

        layers = [tf.keras.layers.Input(shape=self.input_shape)]
        if self.task == "binary":
            layers += [
                recurrent(64, return_sequences=True),
                recurrent(32),
                tf.keras.layers.Dropout(0.2),
                tf.keras.layers.Dense(16, activation="relu"),
            ]
        else:
            layers += [
                recurrent(128),
                tf.keras.layers.Dropout(0.3),
                tf.keras.layers.Dense(64, activation="relu"),
                tf.keras.layers.Dropout(0.3),
            ]
        layers.append(tf.keras.layers.Dense(self.n_classes, activation="softmax"))
        model = tf.keras.Sequential(layers)
        model.compile(
            optimizer="adam", loss="sparse_categorical_crossentropy", metrics=["accuracy"]
        )
        return model

    def fit(self, X, y):
        self.model = self._build()
        self.model.fit(
            X, np.asarray(y), epochs=self.epochs, batch_size=self.batch_size, verbose=0
        )

    def predict(self, X):
        return self.model.predict(X, verbose=0).argmax(axis=1)


def warm_up_tensorflow() -> None:
    """Build and fit a throwaway graph so later fits are not charged TF startup."""
    import tensorflow as tf

    model = tf.keras.Sequential(
        [tf.keras.layers.Input(shape=(2, 2)), tf.keras.layers.LSTM(4),
         tf.keras.layers.Dense(2, activation="softmax")]
    )
    model.compile(optimizer="adam", loss="sparse_categorical_crossentropy")
    model.fit(np.zeros((8, 2, 2)), np.zeros(8, dtype=int), epochs=1, verbose=0)
