import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from pcgkit.errors import DataError
from pcgkit.reduce import (PcaPolicy, apply_standardizer, fit_pca, fit_standardizer, load_reduction, project,
                           save_reduction)


def eig_oracle(X):
    """Explained-variance ratios from a direct eigendecomposition of the covariance matrix."""
    C = np.cov(X, rowvar=False)
    w = np.linalg.eigvalsh(C)[::-1]
    w = np.clip(w, 0, None)
    return w / w.sum()


# ---------------------------------------------------------------- standardizer

def test_standardizer_hand_cases():
    s = fit_standardizer(np.array([[1.0, 5.0], [3.0, 5.0], [2.0, 5.0]])[:2])
    np.testing.assert_allclose(s.means, [2.0, 5.0])
    np.testing.assert_allclose(s.scales, [1.0, 1.0])


def test_standardizer_on_own_data(rng):
    X = rng.normal(3, 7, (40, 6))
    X[:, 2] = 5.0
    Z = fit_standardizer(X).transform(X)
    np.testing.assert_allclose(Z.mean(axis=0), 0, atol=1e-10)
    sd = Z.std(axis=0)
    np.testing.assert_allclose(np.delete(sd, 2), 1, atol=1e-10)
    assert sd[2] == 0


def test_apply_standardizer_cases(rng):
    s = fit_standardizer(rng.standard_normal((10, 4)))
    np.testing.assert_allclose(apply_standardizer(s, s.means), 0, atol=1e-15)
    np.testing.assert_allclose(apply_standardizer(s, s.means + s.scales), 1)
    with pytest.raises(DataError):
        apply_standardizer(s, np.zeros(3))


# ---------------------------------------------------------------- PCA

def test_orthonormal_and_ratios_match_oracle():
    gen = np.random.default_rng(7)
    for _ in range(5):
        X = gen.standard_normal((50, 233)) @ np.diag(gen.uniform(0.1, 3, 233))
        m = fit_pca(X, PcaPolicy(460))
        assert m.n_components == 49
        np.testing.assert_allclose(m.components @ m.components.T, np.eye(49), atol=1e-8)
        np.testing.assert_allclose(m.explained_variance_ratio, eig_oracle(X)[:49], atol=1e-8)
        np.testing.assert_allclose(m.explained_variance, np.linalg.eigvalsh(np.cov(X, rowvar=False))[::-1][:49],
                                   rtol=1e-8, atol=1e-8)


def test_variance_target_prefix(rng):
    X = rng.standard_normal((50, 233)) @ np.diag(np.linspace(0.1, 4, 233))
    m = fit_pca(X, PcaPolicy(None, 0.9999))
    cum = np.cumsum(eig_oracle(X))
    k = int(np.argmax(cum >= 0.9999 - 1e-12)) + 1
    assert m.n_components == k


@pytest.mark.parametrize("target", [0.5, 0.8, 0.95])
def test_variance_target_smallest(rng, target):
    X = rng.standard_normal((60, 20)) @ np.diag(np.linspace(0.2, 3, 20))
    m = fit_pca(X, PcaPolicy(None, target))
    cum = np.cumsum(eig_oracle(X))
    assert cum[m.n_components - 1] >= target - 1e-12
    assert m.n_components == 1 or cum[m.n_components - 2] < target


def test_rank_one():
    t = np.linspace(-2, 3, 30)
    X = np.column_stack([t, 2 * t + 1])
    m = fit_pca(X, PcaPolicy(2))
    assert m.n_components == 1
    assert abs(m.explained_variance_ratio[0] - 1) < 1e-10


def test_full_reconstruction(rng):
    X = rng.standard_normal((30, 8))
    m = fit_pca(X, PcaPolicy(8))
    np.testing.assert_allclose(m.inverse_transform(m.transform(X)), X, atol=1e-6)


def test_project_cases(rng):
    X = rng.standard_normal((40, 5))
    m = fit_pca(X, PcaPolicy(3))
    np.testing.assert_allclose(project(m, m.mean), 0, atol=1e-12)
    for i in range(3):
        e = project(m, m.mean + m.components[i])
        np.testing.assert_allclose(e, np.eye(3)[i], atol=1e-12)
    for x in rng.standard_normal((20, 5)) * 3:
        assert np.linalg.norm(project(m, x)) <= np.linalg.norm(x - m.mean) + 1e-8


def test_sign_convention(rng):
    m = fit_pca(rng.standard_normal((25, 6)), PcaPolicy(6))
    for c in m.components:
        assert c[np.argmax(np.abs(c))] > 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_row_permutation_invariance(seed):
    gen = np.random.default_rng(seed)
    X = gen.standard_normal((20, 6)) @ np.diag([5, 4, 3, 2, 1, 0.5])
    a = fit_pca(X, PcaPolicy(4))
    b = fit_pca(X[gen.permutation(20)], PcaPolicy(4))
    np.testing.assert_allclose(a.components, b.components, atol=1e-8)
    np.testing.assert_allclose(a.explained_variance_ratio, b.explained_variance_ratio, atol=1e-12)


def test_policy_validation():
    with pytest.raises(DataError):
        PcaPolicy(None, None)
    with pytest.raises(DataError):
        PcaPolicy(10, 0.9)
    with pytest.raises(DataError):
        PcaPolicy(None, 1.5)
    with pytest.raises(DataError):
        fit_pca(np.ones((5, 3)))


def test_save_load_reduction(tmp_path, rng):
    X = rng.standard_normal((30, 7))
    std = fit_standardizer(X)
    pca = fit_pca(std.transform(X), PcaPolicy(None, 0.9))
    save_reduction(tmp_path / "r.json", std, pca, "cfg1")
    s2, p2, cfg = load_reduction(tmp_path / "r.json")
    assert cfg == "cfg1" and p2.policy == pca.policy
    np.testing.assert_array_equal(p2.transform(s2.transform(X)), pca.transform(std.transform(X)))
