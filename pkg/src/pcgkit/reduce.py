"""Feature standardization and SVD-based principal component analysis."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

FORMAT_VERSION = 1
DEFAULT_COMPONENTS = 460


def _as_matrix(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.size == 0:
        raise DataError("expected a non-empty 2-D feature matrix")
    if not np.all(np.isfinite(X)):
        raise DataError("feature matrix contains non-finite values")
    return X


def _check_dim(x, n: int) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != n:
        raise DataError(f"dimension mismatch: expected {n} features, got {x.shape[-1]}")
    return x


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    scales: np.ndarray
    fit_ids: frozenset = field(default=frozenset(), compare=False)

    def transform(self, x) -> np.ndarray:
        return apply_standardizer(self, x)

    def to_dict(self) -> dict:
        return {"means": self.means.tolist(), "scales": self.scales.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Standardizer":
        return cls(np.asarray(d["means"], dtype=float), np.asarray(d["scales"], dtype=float))


def fit_standardizer(X, ids=()) -> Standardizer:
    """Column means and population standard deviations (constant columns get 1)."""
    X = _as_matrix(X)
    if X.shape[0] < 2:
        raise DataError("need at least 2 rows to fit a standardizer")
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    scales[scales <= 1e-12 * np.maximum(1.0, np.abs(means))] = 1.0
    return Standardizer(means, scales, frozenset(ids))


def apply_standardizer(s: Standardizer, x) -> np.ndarray:
    x = _check_dim(x, s.means.size)
    return (x - s.means) / s.scales


@dataclass(frozen=True)
class PcaPolicy:
    """Keep a fixed number of components, or enough to reach a variance ratio."""
    component_count: int | None = DEFAULT_COMPONENTS
    variance_target: float | None = None

    def __post_init__(self):
        if (self.component_count is None) == (self.variance_target is None):
            raise DataError("PCA policy needs exactly one of component_count / variance_target")
        if self.component_count is not None and self.component_count < 1:
            raise DataError("component_count must be >= 1")
        if self.variance_target is not None and not 0 < self.variance_target <= 1:
            raise DataError("variance_target must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {"component_count": self.component_count, "variance_target": self.variance_target}


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray              # shape (K, n_features), rows orthonormal
    explained_variance: np.ndarray
    explained_variance_ratio: np.ndarray
    policy: PcaPolicy
    fit_ids: frozenset = field(default=frozenset(), compare=False)

    @property
    def n_components(self) -> int:
        return self.components.shape[0]

    def transform(self, x) -> np.ndarray:
        return project(self, x)

    def inverse_transform(self, z) -> np.ndarray:
        return np.asarray(z, dtype=np.float64) @ self.components + self.mean

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "components": self.components.tolist(),
            "explained_variance": self.explained_variance.tolist(),
            "explained_variance_ratio": self.explained_variance_ratio.tolist(),
            "policy": self.policy.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PcaModel":
        mean = np.asarray(d["mean"], dtype=float)
        comps = np.asarray(d["components"], dtype=float).reshape(-1, mean.size)
        return cls(mean, comps, np.asarray(d["explained_variance"], dtype=float),
                   np.asarray(d["explained_variance_ratio"], dtype=float),
                   PcaPolicy(**d["policy"]))


def numerical_rank(singular_values, shape) -> int:
    s = np.asarray(singular_values)
    if s.size == 0 or s[0] == 0:
        return 0
    tol = max(shape) * np.finfo(float).eps * s[0]
    return int(np.count_nonzero(s > tol))


def fit_pca(X, policy: PcaPolicy = PcaPolicy(), ids=()) -> PcaModel:
    """PCA via the thin SVD of the centred data.

    Ratios are squared singular values over their total. The retained count
    never exceeds the numerical rank. Each component's largest-magnitude
    entry is made positive so fits are reproducible.
    """
    X = _as_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise DataError("need at least 2 rows to fit PCA")
    mean = X.mean(axis=0)
    _, s, vt = np.linalg.svd(X - mean, full_matrices=False)
    rank = numerical_rank(s, X.shape)
    if rank == 0:
        raise DataError("cannot fit PCA: data has zero variance")
    var = s ** 2 / (n - 1)
    ratio = s ** 2 / np.sum(s ** 2)
    if policy.component_count is not None:
        k = min(policy.component_count, rank)
    else:
        cum = np.cumsum(ratio[:rank])
        # relative slack absorbs rounding in the cumulative sum
        k = int(np.searchsorted(cum, policy.variance_target - 1e-12) + 1)
        k = min(k, rank)
    comps = vt[:k].copy()
    pivot = np.argmax(np.abs(comps), axis=1)
    signs = np.sign(comps[np.arange(k), pivot])
    comps *= signs[:, None]
    return PcaModel(mean, comps, var[:k], ratio[:k], policy, frozenset(ids))


def project(m: PcaModel, x) -> np.ndarray:
    x = _check_dim(x, m.mean.size)
    return (x - m.mean) @ m.components.T


def model_digest(d: dict) -> str:
    blob = json.dumps(d, sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def save_reduction(path, std: Standardizer, pca: PcaModel, feature_config: str = "") -> None:
    doc = {
        "format": "pcgkit-reduction",
        "version": FORMAT_VERSION,
        "feature_config": feature_config,
        "standardizer": std.to_dict(),
        "pca": pca.to_dict(),
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=1)


def load_reduction(path) -> tuple[Standardizer, PcaModel, str]:
    with open(path) as fh:
        doc = json.load(fh)
    if doc.get("format") != "pcgkit-reduction":
        raise DataError(f"{path}: not a reduction model file")
    if doc.get("version") != FORMAT_VERSION:
        raise DataError(f"{path}: unsupported version {doc.get('version')}")
    return (Standardizer.from_dict(doc["standardizer"]), PcaModel.from_dict(doc["pca"]),
            doc.get("feature_config", ""))
