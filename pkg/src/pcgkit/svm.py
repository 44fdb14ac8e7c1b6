"""RBF-kernel support vector machine trained by sequential minimal optimization.

The dual solver follows the maximal-violating-pair scheme with second-order
working-set selection: pick the index that most violates the KKT conditions
from the "up" set, then the partner from the "low" set that gives the largest
guaranteed objective decrease, and solve that two-variable subproblem
analytically. Multiclass problems are decomposed one-vs-one.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError

TAU = 1e-12


def rbf_kernel(A, B, gamma: float) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    sq = (np.sum(A ** 2, axis=1)[:, None] + np.sum(B ** 2, axis=1)[None, :]
          - 2.0 * A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


@dataclass
class SmoResult:
    alpha: np.ndarray
    rho: float
    objective: float
    iterations: int
    converged: bool
    max_violation: float


def smo_solve(K, y, C: float, tol: float = 1e-3, max_iter: int = 100_000,
              seed: int = 0) -> SmoResult:
    """Solve min 1/2 a'Qa - sum(a) s.t. 0 <= a <= C, y'a = 0 with Q = yy'K.

    ``seed`` only fixes the order in which exactly tied candidates are
    preferred, so results are reproducible.
    """
    K = np.asarray(K, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = y.size
    order = np.random.default_rng(seed).permutation(n)
    K = K[np.ix_(order, order)]
    y = y[order]
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.diag(K).copy()
    converged = False
    gap = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        pos, neg = y > 0, y < 0
        up = (pos & (alpha < C)) | (neg & (alpha > 0))
        low = (pos & (alpha > 0)) | (neg & (alpha < C))
        score = -y * grad
        if not up.any() or not low.any():
            converged = True
            gap = 0.0
            break
        up_scores = np.where(up, score, -np.inf)
        i = int(np.argmax(up_scores))
        m_val = up_scores[i]
        M_val = np.min(np.where(low, score, np.inf))
        gap = m_val - M_val
        if gap <= tol:
            converged = True
            break
        cand = low & (score < m_val)
        b = m_val - score
        a = diag[i] + diag - 2.0 * K[i]
        a = np.where(a > 0, a, TAU)
        gain = np.where(cand, b * b / a, -np.inf)
        j = int(np.argmax(gain))

        # move along d with d_i = y_i, d_j = -y_j
        eta = max(diag[i] + diag[j] - 2.0 * K[i, j], TAU)
        lam = (score[i] - score[j]) / eta
        lim_i = C - alpha[i] if y[i] > 0 else alpha[i]
        lim_j = alpha[j] if y[j] > 0 else C - alpha[j]
        lam = min(lam, lim_i, lim_j)
        old_i, old_j = alpha[i], alpha[j]
        alpha[i] = old_i + y[i] * lam
        alpha[j] = old_j - y[j] * lam
        if lam == lim_i:
            alpha[i] = C if y[i] > 0 else 0.0
        if lam == lim_j:
            alpha[j] = 0.0 if y[j] > 0 else C
        alpha[i] = min(max(alpha[i], 0.0), C)
        alpha[j] = min(max(alpha[j], 0.0), C)
        d_i, d_j = alpha[i] - old_i, alpha[j] - old_j
        grad += y * (K[:, i] * (y[i] * d_i) + K[:, j] * (y[j] * d_j))
    else:
        it = max_iter

    free = (alpha > 0) & (alpha < C)
    yg = y * grad
    if free.any():
        rho = float(np.mean(yg[free]))
    else:
        pos, neg = y > 0, y < 0
        at_c = alpha >= C
        at_0 = alpha <= 0
        ub_mask = (pos & at_0) | (neg & at_c)
        lb_mask = (pos & at_c) | (neg & at_0)
        ub = np.min(yg[ub_mask]) if ub_mask.any() else np.inf
        lb = np.max(yg[lb_mask]) if lb_mask.any() else -np.inf
        rho = float((ub + lb) / 2.0) if np.isfinite(ub + lb) else 0.0
    objective = 0.5 * float(alpha @ (grad - 1.0))
    out = np.empty(n)
    out[order] = alpha
    return SmoResult(out, rho, objective, it, converged, float(gap))


@dataclass
class BinarySvm:
    positive: str
    negative: str
    support_vectors: np.ndarray
    dual_coef: np.ndarray      # alpha_i * y_i
    bias: float                # f(x) = sum dual_coef * k(sv, x) + bias
    objective: float
    iterations: int
    converged: bool

    def decision(self, X, gamma: float) -> np.ndarray:
        return rbf_kernel(X, self.support_vectors, gamma) @ self.dual_coef + self.bias


@dataclass
class SvmModel:
    classes: list[str]
    gamma: float
    C: float
    machines: list[BinarySvm]
    n_features: int
    tol: float = 1e-3
    fit_ids: frozenset = field(default=frozenset(), compare=False)

    def predict(self, X) -> np.ndarray:
        return svm_predict(self, X)[0]

    def to_dict(self) -> dict:
        return {
            "classes": list(self.classes), "gamma": self.gamma, "C": self.C,
            "tol": self.tol, "n_features": self.n_features,
            "machines": [{
                "positive": m.positive, "negative": m.negative,
                "support_vectors": m.support_vectors.tolist(),
                "dual_coef": m.dual_coef.tolist(), "bias": m.bias,
                "objective": m.objective, "iterations": m.iterations,
                "converged": m.converged,
            } for m in self.machines],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SvmModel":
        machines = [BinarySvm(
            m["positive"], m["negative"],
            np.asarray(m["support_vectors"], dtype=float).reshape(-1, d["n_features"]),
            np.asarray(m["dual_coef"], dtype=float), float(m["bias"]),
            float(m["objective"]), int(m["iterations"]), bool(m["converged"]),
        ) for m in d["machines"]]
        return cls(list(d["classes"]), float(d["gamma"]), float(d["C"]), machines,
                   int(d["n_features"]), float(d.get("tol", 1e-3)))


def default_gamma(X) -> float:
    """1 / (n_features * Var(X)), falling back to 1 / n_features for constant data."""
    X = np.asarray(X, dtype=np.float64)
    var = X.var()
    return 1.0 / (X.shape[1] * var) if var > 0 else 1.0 / X.shape[1]


def svm_train(X, y, C: float = 1.0, gamma: float | None = None, tol: float = 1e-3,
              max_iter: int = 100_000, seed: int = 0, classes=None, ids=()) -> SvmModel:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise DataError("X must be 2-D with one row per label")
    if not np.all(np.isfinite(X)):
        raise DataError("non-finite feature values")
    if C <= 0:
        raise DataError("C must be positive")
    if gamma is None:
        gamma = default_gamma(X)
    if gamma <= 0:
        raise DataError("gamma must be positive")
    present = list(dict.fromkeys(y.tolist()))
    if classes is None:
        classes = sorted(present, key=str)
    classes = [c for c in classes if c in present]
    if len(classes) < 2:
        raise DataError("SVM training needs at least two classes")
    K_full = rbf_kernel(X, X, gamma)
    machines = []
    for a, b in itertools.combinations(classes, 2):
        idx = np.flatnonzero((y == a) | (y == b))
        yy = np.where(y[idx] == a, 1.0, -1.0)
        res = smo_solve(K_full[np.ix_(idx, idx)], yy, C, tol, max_iter, seed)
        sv = res.alpha > 0
        machines.append(BinarySvm(
            str(a), str(b), X[idx[sv]].copy(), res.alpha[sv] * yy[sv], -res.rho,
            res.objective, res.iterations, res.converged,
        ))
    return SvmModel([str(c) for c in classes], float(gamma), float(C), machines,
                    X.shape[1], tol, frozenset(ids))


def svm_predict(m: SvmModel, X):
    """One-vs-one vote; ties go to the larger summed |decision| then class order.

    Returns ``(labels, decisions)`` with decisions shaped (n, n_pairs).
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != m.n_features:
        raise DataError(f"dimension mismatch: model expects {m.n_features} features, got {X.shape[1]}")
    pos = {c: k for k, c in enumerate(m.classes)}
    n = X.shape[0]
    votes = np.zeros((n, len(m.classes)))
    strength = np.zeros((n, len(m.classes)))
    dec = np.zeros((n, len(m.machines)))
    for k, mach in enumerate(m.machines):
        f = mach.decision(X, m.gamma)
        dec[:, k] = f
        win = np.where(f > 0, pos[mach.positive], pos[mach.negative])
        votes[np.arange(n), win] += 1
        strength[np.arange(n), win] += np.abs(f)
    labels = []
    for r in range(n):
        best = max(range(len(m.classes)), key=lambda c: (votes[r, c], strength[r, c], -c))
        labels.append(m.classes[best])
    return np.asarray(labels, dtype=object), dec
