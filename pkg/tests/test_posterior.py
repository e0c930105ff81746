import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.stats import ortho_group

from balred.linalg import DimensionError
from balred.posterior import (
    GaussianPosterior,
    GaussianPrior,
    NotPositiveDefiniteError,
    approx_posterior,
    inv_sqrt,
    posterior,
    posterior_error,
    pph_sqrt,
)
from util import rel


def _spd(k, rng):
    B = rng.standard_normal((k, k))
    return B @ B.T + 0.5 * np.eye(k)


def precision_form(G, Gamma_pr, Gamma_obs, mu, m):
    """Oracle valid for nonsingular priors."""
    Oi = np.linalg.inv(Gamma_obs)
    Pi = np.linalg.inv(Gamma_pr)
    cov = np.linalg.inv(Pi + G.T @ Oi @ G)
    return cov @ (G.T @ Oi @ m + Pi @ mu), cov


def whitened_form(G, L, Gamma_obs, mu, m):
    """Oracle in the coordinates ``p = mu + L w``, ``w ~ N(0, I)``; valid for singular priors."""
    isq = inv_sqrt(Gamma_obs)
    B = isq @ G @ L
    H = np.linalg.inv(np.eye(L.shape[1]) + B.T @ B)
    return mu + L @ H @ B.T @ (isq @ (m - G @ mu)), L @ H @ L.T


def test_scalar_example():
    post = posterior([[1.0]], GaussianPrior([0.0], [[1.0]]), [[1.0]], [2.0])
    np.testing.assert_allclose(post.cov, [[0.5]], rtol=1e-15)
    np.testing.assert_allclose(post.mean, [1.0], rtol=1e-15)


def test_zero_forward_map_returns_prior():
    rng = np.random.default_rng(0)
    L = rng.standard_normal((4, 2))
    prior = GaussianPrior(L @ [1.0, -2.0], L)
    post = posterior(np.zeros((3, 4)), prior, np.eye(3), rng.standard_normal(3))
    np.testing.assert_allclose(post.cov, prior.cov, rtol=1e-15, atol=1e-15)
    np.testing.assert_allclose(post.mean, prior.mean, rtol=1e-15)


@pytest.mark.parametrize("seed", range(5))
def test_matches_precision_form(seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((3, 5))
    L = np.linalg.cholesky(_spd(5, rng))
    Gobs = _spd(3, rng)
    mu, m = rng.standard_normal(5), rng.standard_normal(3)
    post = posterior(G, GaussianPrior(mu, L), Gobs, m)
    mean, cov = precision_form(G, L @ L.T, Gobs, mu, m)
    assert rel(post.cov, cov) < 1e-9
    assert rel(post.mean, mean) < 1e-9


@pytest.mark.parametrize("seed", range(5))
def test_singular_prior_matches_whitened_form(seed):
    rng = np.random.default_rng(10 + seed)
    d, s = 7, 3
    G = rng.standard_normal((5, d))
    L = rng.standard_normal((d, s))
    mu = L @ rng.standard_normal(s)
    Gobs = _spd(5, rng)
    m = rng.standard_normal(5)
    post = posterior(G, GaussianPrior(mu, L), Gobs, m)
    mean, cov = whitened_form(G, L, Gobs, mu, m)
    assert rel(post.cov, cov) < 1e-9
    assert rel(post.mean, mean) < 1e-9
    assert np.linalg.matrix_rank(post.cov, tol=1e-10 * np.abs(post.cov).max()) <= s
    shift = post.mean - mu
    assert np.linalg.norm(L @ np.linalg.lstsq(L, shift, rcond=None)[0] - shift) <= 1e-8 * np.linalg.norm(shift)


@given(st.integers(1, 8), st.integers(1, 6), st.integers(1, 8), st.integers(0, 2 ** 32 - 1))
def test_loewner_and_symmetry(d, s, k, seed):
    rng = np.random.default_rng(seed)
    G = rng.standard_normal((k, d))
    L = rng.standard_normal((d, s))
    prior = GaussianPrior.centered(L)
    post = posterior(G, prior, _spd(k, rng), rng.standard_normal(k))
    scale = max(np.abs(prior.cov).sum(axis=1).max(), 1e-300)
    assert np.array_equal(post.cov, post.cov.T)
    assert np.linalg.eigvalsh(post.cov)[0] >= -1e-8 * scale
    assert np.linalg.eigvalsh(prior.cov - post.cov)[0] >= -1e-8 * scale


@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_invariance_under_factor_rotation(s, seed):
    rng = np.random.default_rng(seed)
    d = 6
    G = rng.standard_normal((4, d))
    L = rng.standard_normal((d, s))
    mu = L @ rng.standard_normal(s)
    Gobs, m = _spd(4, rng), rng.standard_normal(4)
    O = ortho_group.rvs(s, random_state=rng) if s > 1 else np.array([[-1.0]])
    a = posterior(G, GaussianPrior(mu, L), Gobs, m)
    b = posterior(G, GaussianPrior(mu, L @ O), Gobs, m)
    assert rel(b.cov, a.cov) < 1e-10
    assert rel(b.mean, a.mean) < 1e-10


def test_approx_posterior_shares_code_path():
    rng = np.random.default_rng(3)
    G = rng.standard_normal((3, 4))
    prior = GaussianPrior.centered(rng.standard_normal((4, 2)))
    m = rng.standard_normal(3)
    a, b = posterior(G, prior, np.eye(3), m), approx_posterior(G, prior, np.eye(3), m)
    assert np.array_equal(a.mean, b.mean) and np.array_equal(a.cov, b.cov)
    z = approx_posterior(np.zeros_like(G), prior, np.eye(3), m)
    np.testing.assert_allclose(z.cov, prior.cov, atol=1e-15)


def test_errors():
    prior = GaussianPrior.centered(np.eye(2))
    with pytest.raises(DimensionError):
        posterior(np.ones((2, 3)), prior, np.eye(2), np.zeros(2))
    with pytest.raises(DimensionError):
        posterior(np.ones((2, 2)), prior, np.eye(3), np.zeros(2))
    with pytest.raises(NotPositiveDefiniteError):
        posterior(np.ones((2, 2)), prior, np.diag([1.0, -1.0]), np.zeros(2))
    with pytest.raises(DimensionError):
        GaussianPrior(np.zeros(3), np.eye(2))


def test_pph_sqrt():
    rng = np.random.default_rng(4)
    G = rng.standard_normal((3, 4))
    np.testing.assert_allclose(pph_sqrt(G, GaussianPrior.centered(np.eye(4)), np.eye(3)), G, rtol=1e-15)
    L = rng.standard_normal((4, 2))
    Gobs = _spd(3, rng)
    B = pph_sqrt(G, GaussianPrior.centered(L), Gobs)
    H = G.T @ np.linalg.inv(Gobs) @ G
    assert rel(B.T @ B, L.T @ H @ L) < 1e-10


def test_posterior_error_examples():
    a = GaussianPosterior(np.zeros(2), np.zeros((2, 2)))
    assert posterior_error(a, a) == (0.0, 0.0)
    b = GaussianPosterior(np.array([1.0, 0.0]), np.diag([3.0, 4.0]))
    assert posterior_error(a, b) == (1.0, 5.0)


def test_mean_range_check():
    L = np.array([[1.0], [0.0]])
    assert GaussianPrior([2.0, 0.0], L).mean_in_range()
    assert not GaussianPrior([0.0, 1.0], L).mean_in_range()
    assert GaussianPrior.centered(L).mean_in_range()
