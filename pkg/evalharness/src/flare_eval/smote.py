"""Synthetic minority oversampling.

Each minority class is grown to the majority count by interpolating
between a random class member and one of its k nearest within-class
neighbors; synthetic points are therefore convex combinations of real
minority samples. Deterministic for a given seed.
"""

from __future__ import annotations

import numpy as np


def smote_oversample(
    X: np.ndarray, y: np.ndarray, k_neighbors: int = 5, seed: int = 0
) -> tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    classes, counts = np.unique(y, return_counts=True)
    majority = counts.max()
    rng = np.random.default_rng(seed)

    new_X = [X]
    new_y = [y]
    for cls, count in zip(classes, counts):
        need = majority - count
        if need == 0:
            continue
        if count < 2:
            raise ValueError(f"class {cls!r} has {count} sample(s); SMOTE needs at least 2")
        members = X[y == cls]
        k = min(k_neighbors, count - 1)
        # pairwise distances within the class, self excluded
        d2 = ((members[:, None, :] - members[None, :, :]) ** 2).sum(axis=2)
        np.fill_diagonal(d2, np.inf)
        neighbor_ids = np.argsort(d2, axis=1)[:, :k]

        base = rng.integers(0, count, size=need)
        pick = rng.integers(0, k, size=need)
        gap = rng.random(need)[:, None]
        neighbors = members[neighbor_ids[base, pick]]
        synthetic = members[base] + gap * (neighbors - members[base])
        new_X.append(synthetic)
        new_y.append(np.full(need, cls, dtype=y.dtype))

    return np.vstack(new_X), np.concatenate(new_y)
