import numpy as np
import pytest
from scipy.optimize import minimize

from pcgkit.errors import DataError
from pcgkit.svm import SvmModel, default_gamma, rbf_kernel, smo_solve, svm_predict, svm_train


def kkt_violations(X, y, alpha, bias, gamma, C, tol):
    """Independent KKT check: decision values recomputed from scratch for every training point."""
    K = np.exp(-gamma * ((X[:, None, :] - X[None, :, :]) ** 2).sum(-1))
    f = K @ (alpha * y) + bias
    margin = y * f
    bad = []
    for i in range(y.size):
        if alpha[i] <= 0:
            ok = margin[i] >= 1 - tol
        elif alpha[i] >= C:
            ok = margin[i] <= 1 + tol
        else:
            ok = abs(margin[i] - 1) <= tol
        if not ok:
            bad.append(i)
    return bad


def blobs(rng, per_class=100, sep=10.0):
    centres = np.array([[0, 0], [sep, 0], [0, sep]])
    X = np.concatenate([c + rng.standard_normal((per_class, 2)) for c in centres])
    y = np.repeat(np.array(["a", "b", "c"], dtype=object), per_class)
    return X, y


def test_separable_pair():
    X = np.array([[0.0, 0.0], [2.0, 0.0]])
    for C in (1.0, 10.0):
        m = svm_train(X, np.array(["p", "n"]), C=C, gamma=0.5, classes=["p", "n"])
        labels, dec = svm_predict(m, X)
        assert labels.tolist() == ["p", "n"]
        _, mid = svm_predict(m, np.array([[1.0 - 0.3, 0.0], [1.0 + 0.3, 0.0]]))
        assert mid[0, 0] == pytest.approx(-mid[1, 0], abs=1e-9)


def test_xor():
    X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    y = np.array(["+", "+", "-", "-"])
    m = svm_train(X, y, C=10, gamma=1.0)
    assert m.predict(X).tolist() == y.tolist()


@pytest.mark.parametrize("seed", range(4))
def test_kkt_independent_checker(seed):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((80, 3))
    y = np.where(X[:, 0] * X[:, 1] + 0.3 * rng.standard_normal(80) > 0, 1.0, -1.0)
    C, gamma, tol = 2.0, 0.5, 1e-3
    res = smo_solve(rbf_kernel(X, X, gamma), y, C, tol)
    assert res.converged
    assert np.all(res.alpha >= 0) and np.all(res.alpha <= C)
    assert abs(np.dot(res.alpha, y)) < 1e-9
    assert kkt_violations(X, y, res.alpha, -res.rho, gamma, C, tol) == []


def test_objective_matches_generic_optimizer(rng):
    X = rng.standard_normal((25, 2))
    y = np.where(X[:, 0] + 0.5 * rng.standard_normal(25) > 0, 1.0, -1.0)
    C = 1.0
    K = rbf_kernel(X, X, 0.7)
    Q = np.outer(y, y) * K
    res = smo_solve(K, y, C, tol=1e-8)

    def obj(a):
        return 0.5 * a @ Q @ a - a.sum()

    ref = minimize(obj, np.zeros(25), jac=lambda a: Q @ a - 1, method="SLSQP", bounds=[(0, C)] * 25,
                   constraints=[{"type": "eq", "fun": lambda a: a @ y, "jac": lambda a: y}],
                   options={"ftol": 1e-12, "maxiter": 500})
    assert res.objective == pytest.approx(obj(res.alpha), abs=1e-9)
    assert res.objective <= ref.fun + 1e-6
    assert res.objective == pytest.approx(ref.fun, abs=1e-5)


def test_box_constraint_every_iteration(rng):
    X = rng.standard_normal((40, 2))
    y = np.where(rng.random(40) > 0.5, 1.0, -1.0)
    K = rbf_kernel(X, X, 1.0)
    for cap in (1, 2, 5, 10, 25, 60):
        res = smo_solve(K, y, 0.5, max_iter=cap)
        assert np.all(res.alpha >= 0) and np.all(res.alpha <= 0.5)
        assert abs(res.alpha @ y) < 1e-9


def test_blobs_three_class(rng):
    X, y = blobs(rng)
    m = svm_train(X, y, C=1.0)
    assert np.mean(m.predict(X) == y) >= 0.99
    Xt, yt = blobs(np.random.default_rng(99))
    assert np.mean(m.predict(Xt) == yt) >= 0.99
    assert len(m.machines) == 3


def test_binary_vote_is_sign(rng):
    X = rng.standard_normal((60, 2))
    y = np.where(X[:, 0] > 0, "a", "b")
    m = svm_train(X, y, C=1.0, gamma=0.5, classes=["a", "b"])
    labels, dec = svm_predict(m, rng.standard_normal((50, 2)))
    assert labels.tolist() == np.where(dec[:, 0] > 0, "a", "b").tolist()


def test_free_support_vector_own_label():
    X = np.array([[0.0, 0.0], [0.5, 0.0], [3.0, 0.0], [3.5, 0.0]])
    y = np.array(["p", "p", "n", "n"])
    m = svm_train(X, y, C=10.0, gamma=0.3, classes=["p", "n"])
    mach = m.machines[0]
    free = np.abs(mach.dual_coef) < m.C
    for sv in mach.support_vectors[free]:
        row = np.flatnonzero((X == sv).all(axis=1))[0]
        assert m.predict(sv[None, :])[0] == y[row]


def test_objective_permutation_invariant(rng):
    X = rng.standard_normal((50, 3))
    y = np.where(X[:, 2] > 0, 1.0, -1.0)
    K = rbf_kernel(X, X, 0.4)
    base = smo_solve(K, y, 1.0, tol=1e-10).objective
    for s in range(3):
        p = np.random.default_rng(s).permutation(50)
        other = smo_solve(K[np.ix_(p, p)], y[p], 1.0, tol=1e-10, seed=s + 1).objective
        assert other == pytest.approx(base, abs=1e-8)


def test_deterministic(rng):
    X, y = blobs(rng, 30)
    a = svm_train(X, y, seed=3).to_dict()
    b = svm_train(X, y, seed=3).to_dict()
    assert a == b


def test_default_gamma():
    X = np.array([[0.0, 2.0], [2.0, 0.0]])
    assert default_gamma(X) == pytest.approx(1 / (2 * 1.0))


def test_serialization_round_trip(rng):
    X, y = blobs(rng, 20)
    m = svm_train(X, y)
    back = SvmModel.from_dict(m.to_dict())
    Xt = rng.standard_normal((30, 2)) * 5
    np.testing.assert_array_equal(svm_predict(back, Xt)[1], svm_predict(m, Xt)[1])


def test_errors(rng):
    X = rng.standard_normal((10, 2))
    with pytest.raises(DataError):
        svm_train(X, np.array(["a"] * 10))
    bad = X.copy()
    bad[0, 0] = np.nan
    with pytest.raises(DataError):
        svm_train(bad, np.array(["a", "b"] * 5))
    m = svm_train(X, np.array(["a", "b"] * 5))
    with pytest.raises(DataError, match="dimension mismatch"):
        m.predict(np.zeros((1, 3)))
