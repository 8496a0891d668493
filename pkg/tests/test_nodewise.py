import numpy as np
import numpy.testing as npt
import pytest

from eivbands.errors import InputError
from eivbands.lasso import SolverConfig, corrected_gram, fit_corrected_lasso, \
    resolve_config
from eivbands.nodewise import fit_nodewise

TIGHT = SolverConfig(penalty=0.0, radius=np.inf, tol=1e-12, max_iter=100000,
                     truncation=0.0)


def test_two_column_closed_form():
    # p=2: regressing column 0 on column 1 has the scalar solution
    # mu = (sum z0*z1 / n) / (sum z1^2 / n - noise_var_1)
    gen = np.random.default_rng(5)
    Z = gen.normal(size=(40, 2))
    noise_var = np.array([0.7, 0.3])
    want = (Z[:, 0] @ Z[:, 1] / 40) / (Z[:, 1] @ Z[:, 1] / 40 - 0.3)
    res = fit_nodewise(Z, noise_var, 0, TIGHT)
    npt.assert_allclose(res.mu, [0.0, want], rtol=0, atol=1e-10)


def test_target_noise_variance_never_enters():
    gen = np.random.default_rng(8)
    Z = gen.normal(size=(30, 4))
    v1 = np.array([0.5, 0.2, 0.3, 0.1])
    v2 = v1.copy()
    v2[1] = 99.0  # target column's own variance, must be ignored
    r1 = fit_nodewise(Z, v1, 1, TIGHT)
    r2 = fit_nodewise(Z, v2, 1, TIGHT)
    npt.assert_array_equal(r1.mu, r2.mu)


def test_duplicated_column_recovered():
    gen = np.random.default_rng(3)
    z = gen.normal(size=25)
    Z = np.column_stack([z, z])
    res = fit_nodewise(Z, np.zeros(2), 0, TIGHT)
    npt.assert_allclose(res.mu, [0.0, 1.0], rtol=0, atol=1e-8)


def test_orthogonal_columns_large_penalty_gives_zero():
    Z = np.kron(np.eye(3), np.ones((4, 1)))  # 12 x 3 orthogonal blocks
    cfg = SolverConfig(penalty=10.0, radius=np.inf)
    res = fit_nodewise(Z, np.zeros(3), 2, cfg)
    npt.assert_array_equal(res.mu, np.zeros(3))


def test_self_exclusion_exact_zero():
    gen = np.random.default_rng(1)
    Z = gen.normal(size=(20, 5))
    res = fit_nodewise(Z, np.full(5, 0.25), 3,
                       SolverConfig(tol=1e-8, max_iter=5000))
    assert res.mu[3] == 0.0


def test_reduces_to_corrected_lasso_subproblem():
    gen = np.random.default_rng(12)
    n, p, j = 30, 6, 2
    Z = gen.normal(size=(n, p))
    noise_var = gen.uniform(0.1, 0.5, size=p)
    cfg = SolverConfig(penalty=0.15, tol=1e-10)
    res = fit_nodewise(Z, noise_var, j, cfg)
    keep = np.arange(p) != j
    Zm = Z[:, keep]
    b = Zm.T @ Z[:, j] / n
    G = corrected_gram(Zm, noise_var[keep])
    sub = fit_corrected_lasso(b, G, resolve_config(cfg, n, p, G, b))
    npt.assert_array_equal(res.mu[keep], sub.beta)
    npt.assert_array_equal(res.fit.beta, sub.beta)


def test_relabeling_symmetry():
    # swapping two non-target columns swaps the corresponding mu entries
    gen = np.random.default_rng(21)
    Z = gen.normal(size=(40, 5))
    noise_var = gen.uniform(0.1, 0.4, size=5)
    cfg = SolverConfig(penalty=0.1, tol=1e-11, truncation=0.0)
    base = fit_nodewise(Z, noise_var, 0, cfg)
    perm = np.array([0, 3, 2, 1, 4])  # swap columns 1 and 3
    swapped = fit_nodewise(Z[:, perm], noise_var[perm], 0, cfg)
    npt.assert_allclose(swapped.mu, base.mu[perm], rtol=0, atol=1e-9)


def test_bad_inputs_rejected():
    Z = np.ones((10, 3))
    with pytest.raises(InputError):
        fit_nodewise(Z, np.zeros(3), 3, TIGHT)  # j out of range
    with pytest.raises(InputError):
        fit_nodewise(Z, np.zeros(2), 0, TIGHT)  # wrong noise length
    with pytest.raises(InputError):
        fit_nodewise(np.ones((10, 0)), np.zeros(0), 0, TIGHT)  # no columns


def test_single_column_direction_is_empty():
    # with no other columns the projection direction has nothing to load on
    rng = np.random.default_rng(3)
    Z = rng.normal(size=(12, 1))
    res = fit_nodewise(Z, np.array([0.4]), 0, TIGHT)
    npt.assert_array_equal(res.mu, np.zeros(1))
    assert res.fit.beta.shape == (0,)
    assert res.fit.converged
