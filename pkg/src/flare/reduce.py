"""Standardization, PCA, loading reports, and k-means/silhouette scoring.

PCA factorizes the standardized data matrix directly (SVD) instead of
forming the covariance matrix; component signs are fixed so the largest-
magnitude coefficient of each component is positive, making reports
reproducible across platforms. Cluster quality scoring accepts any
embedding, not only PCA scores.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

import numpy as np


@dataclass
class PcaModel:
    feature_names: list[str]
    mean: np.ndarray           # (d,)
    scale: np.ndarray          # (d,)
    components: np.ndarray     # (k, d), orthonormal rows
    explained_variance: np.ndarray        # (k,)
    explained_variance_ratio: np.ndarray  # (k,)

    @property
    def n_components(self) -> int:
        return self.components.shape[0]


@dataclass
class ContributionRow:
    feature: str
    pc1: float
    pc2: float
    pc3: float
    total_contribution: float


def standardize(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-column z-score with population std; constant columns get scale 1."""
    X = np.asarray(matrix, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("standardize needs a 2-D matrix with at least 2 rows")
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale = np.where(scale == 0.0, 1.0, scale)
    return (X - mean) / scale, mean, scale


def fit_pca(
    matrix: np.ndarray,
    feature_names: list[str] | None = None,
    k: int | None = None,
    variance_target: float | None = None,
) -> PcaModel:
    """Standardize and factorize; keep k components or the smallest k whose
    cumulative explained-variance ratio reaches the target."""
    X = np.asarray(matrix, dtype=float)
    Z, mean, scale = standardize(X)
    n, d = Z.shape
    if feature_names is None:
        feature_names = [f"f{i}" for i in range(d)]
    if len(feature_names) != d:
        raise ValueError("feature_names length must match matrix width")

    _, S, Vt = np.linalg.svd(Z, full_matrices=False)
    eigenvalues = S**2 / n
    total_var = Z.var(axis=0).sum()
    ratios = eigenvalues / total_var if total_var > 0 else np.zeros_like(eigenvalues)

    available = len(eigenvalues)
    if k is not None and variance_target is not None:
        raise ValueError("give either k or variance_target, not both")
    if k is not None:
        if not (1 <= k <= d):
            raise ValueError(f"k={k} out of range 1..{d}")
        if k > available:
            raise ValueError(f"k={k} exceeds the {available} components supported by n={n} rows")
    elif variance_target is not None:
        cumulative = np.cumsum(ratios)
        reach = np.nonzero(cumulative >= variance_target - 1e-12)[0]
        k = int(reach[0]) + 1 if reach.size else available
    else:
        k = available

    components = Vt[:k].copy()
    for row in components:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1.0

    return PcaModel(
        feature_names=list(feature_names),
        mean=mean,
        scale=scale,
        components=components,
        explained_variance=eigenvalues[:k],
        explained_variance_ratio=ratios[:k],
    )


def transform(
    model: PcaModel, matrix: np.ndarray, feature_names: list[str] | None = None
) -> np.ndarray:
    from .packets import SchemaError

    if feature_names is not None and list(feature_names) != model.feature_names:
        raise SchemaError("feature columns do not match the fitted model")
    X = np.asarray(matrix, dtype=float)
    if X.shape[1] != len(model.feature_names):
        raise SchemaError("matrix width does not match the fitted model")
    return (X - model.mean) / model.scale @ model.components.T


def inverse_transform(model: PcaModel, scores: np.ndarray) -> np.ndarray:
    Z = np.asarray(scores, dtype=float) @ model.components
    return Z * model.scale + model.mean


def contribution_report(model: PcaModel, top_n: int | None = None) -> list[ContributionRow]:
    """Rank features by summed |loading| over PC1..PC3, each weighted by its
    component's explained-variance ratio."""
    if model.n_components < 3:
        raise ValueError("contribution report needs at least 3 components")
    loadings = model.components[:3]
    weights = model.explained_variance_ratio[:3]
    totals = (np.abs(loadings) * weights[:, None]).sum(axis=0)
    rows = [
        ContributionRow(
            feature=name,
            pc1=float(loadings[0, i]),
            pc2=float(loadings[1, i]),
            pc3=float(loadings[2, i]),
            total_contribution=float(totals[i]),
        )
        for i, name in enumerate(model.feature_names)
    ]
    rows.sort(key=lambda r: (-r.total_contribution, r.feature))
    return rows[:top_n] if top_n is not None else rows


def kmeans(
    points: np.ndarray, clusters: int, seed: int, max_iter: int = 300, tol: float = 1e-6
) -> tuple[np.ndarray, np.ndarray, float]:
    """Lloyd's algorithm from k-means++ seeding; deterministic for a seed.

    Returns (assignments, centroids, inertia).
    """
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n = X.shape[0]
    if not (1 <= clusters <= n):
        raise ValueError(f"need 1 <= clusters <= {n}")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp(X, clusters, rng)
    assignments = np.zeros(n, dtype=int)
    for _ in range(max_iter):
        distances = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        assignments = distances.argmin(axis=1)
        new_centroids = centroids.copy()
        for c in range(clusters):
            members = X[assignments == c]
            if len(members):
                new_centroids[c] = members.mean(axis=0)
            else:
                # Re-seed an emptied cluster at the point farthest from its centroid.
                farthest = distances[np.arange(n), assignments].argmax()
                new_centroids[c] = X[farthest]
        shift = np.sqrt(((new_centroids - centroids) ** 2).sum(axis=1)).max()
        centroids = new_centroids
        if shift < tol:
            break
    distances = ((X[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    assignments = distances.argmin(axis=1)
    inertia = float(distances[np.arange(n), assignments].sum())
    return assignments, centroids, inertia


def _kmeanspp(X: np.ndarray, clusters: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = [X[rng.integers(n)]]
    for _ in range(1, clusters):
        d2 = np.min(
            ((X[:, None, :] - np.array(centroids)[None, :, :]) ** 2).sum(axis=2), axis=1
        )
        total = d2.sum()
        if total == 0:
            centroids.append(X[rng.integers(n)])
            continue
        centroids.append(X[np.searchsorted(np.cumsum(d2 / total), rng.random())])
    return np.array(centroids, dtype=float)


def silhouette(points: np.ndarray, assignments: np.ndarray) -> float:
    """Mean silhouette (b - a) / max(a, b); singletons and 0/0 score 0."""
    X = np.asarray(points, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    labels = np.asarray(assignments)
    unique = np.unique(labels)
    if len(unique) < 2:
        raise ValueError("silhouette needs at least 2 clusters")
    dist = np.sqrt(((X[:, None, :] - X[None, :, :]) ** 2).sum(axis=2))
    scores = np.zeros(len(X))
    for i in range(len(X)):
        own = labels == labels[i]
        own_size = own.sum()
        if own_size == 1:
            continue
        a = dist[i, own].sum() / (own_size - 1)
        b = min(dist[i, labels == other].mean() for other in unique if other != labels[i])
        denom = max(a, b)
        scores[i] = (b - a) / denom if denom > 0 else 0.0
    return float(scores.mean())


def save_model(model: PcaModel, path) -> None:
    payload = {
        "feature_names": model.feature_names,
        "mean": model.mean.tolist(),
        "scale": model.scale.tolist(),
        "components": model.components.tolist(),
        "explained_variance": model.explained_variance.tolist(),
        "explained_variance_ratio": model.explained_variance_ratio.tolist(),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)


def load_model(path) -> PcaModel:
    with open(path) as fh:
        payload = json.load(fh)
    return PcaModel(
        feature_names=payload["feature_names"],
        mean=np.array(payload["mean"]),
        scale=np.array(payload["scale"]),
        components=np.array(payload["components"]),
        explained_variance=np.array(payload["explained_variance"]),
        explained_variance_ratio=np.array(payload["explained_variance_ratio"]),
    )


def write_loadings_csv(rows: list[ContributionRow], path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["feature", "pc1", "pc2", "pc3", "total_contribution"])
        for r in rows:
            writer.writerow(
                [r.feature, f"{r.pc1:.6f}", f"{r.pc2:.6f}", f"{r.pc3:.6f}",
                 f"{r.total_contribution:.6f}"]
            )
