import numpy as np
import pytest
from hypothesis import given, strategies as st

from balred.balancing import (
    DegenerateSystemError,
    RankError,
    balance,
    balance_and_truncate,
    reduced_forward_map,
    reduced_impulse_response,
    reduced_impulse_responses,
)
from balred.gramians import gramians_infinite, gramians_limited
from balred.linalg import expm
from balred.lti import LtiSystem, ObservationGrid, forward_map, impulse_responses
from util import random_system, rel

VARIANTS = [("pdbt", None), ("pdtlbt", 2.5)]


def _grams(system, L, variant, T):
    if variant == "pdbt":
        return gramians_infinite(system, L @ L.T)
    return gramians_limited(system, L @ L.T, T)


@pytest.mark.parametrize("variant,T", VARIANTS)
@pytest.mark.parametrize("seed", range(3))
def test_hsv_are_square_roots_of_PQ_spectrum(variant, T, seed):
    rng = np.random.default_rng(seed)
    s = random_system(6, 2, rng)
    L = rng.standard_normal((6, 6))
    g = _grams(s, L, variant, T)
    ref = np.sort(np.sqrt(np.abs(np.linalg.eigvals(g.P @ g.Q).real)))[::-1]
    hsv = balance(s, L, variant, T).hsv
    assert np.all(np.diff(hsv) <= 0)
    np.testing.assert_allclose(hsv, ref[: len(hsv)], rtol=1e-8)


@pytest.mark.parametrize("variant,T", VARIANTS)
def test_balancing_identities(variant, T):
    rng = np.random.default_rng(5)
    s = random_system(7, 2, rng)
    L = rng.standard_normal((7, 4))
    g = _grams(s, L, variant, T)
    bal = balance(s, L, variant, T)
    S = np.diag(bal.hsv)
    m = bal.hankel_rank
    np.testing.assert_allclose(bal.V.T @ bal.W, np.eye(m), atol=1e-9)
    assert rel(bal.W.T @ g.Q @ bal.W, S) < 1e-9
    assert rel(bal.V.T @ g.P @ bal.V, S) < 1e-9


def test_diagonal_balanced_system_recovers_its_hsv():
    # A = -I/2, C = L = I gives P = Q = I and all Hankel values 1
    s = LtiSystem(-0.5 * np.eye(3), np.eye(3), np.eye(3))
    np.testing.assert_allclose(balance(s, np.eye(3)).hsv, np.ones(3), rtol=1e-12)


@given(st.integers(2, 6), st.integers(0, 2 ** 32 - 1))
def test_similarity_invariance(d, seed):
    rng = np.random.default_rng(seed)
    s = random_system(d, 2, rng)
    L = rng.standard_normal((d, d))
    T = rng.standard_normal((d, d)) + 3 * np.eye(d)
    if np.linalg.cond(T) > 1e3:
        T = np.eye(d) + 0.1 * T
    Ti = np.linalg.inv(T)
    s2 = LtiSystem(T @ s.A @ Ti, s.C @ Ti, s.Gamma_eps)
    a = balance(s, L).hsv
    b = balance(s2, T @ L).hsv
    m = min(len(a), len(b))
    np.testing.assert_allclose(b[:m], a[:m], rtol=1e-6, atol=1e-9 * a[0])


@pytest.mark.parametrize("variant,T", VARIANTS)
def test_slicing_matches_direct_truncation(variant, T):
    rng = np.random.default_rng(9)
    s = random_system(6, 2, rng)
    L = rng.standard_normal((6, 3))
    bal = balance(s, L, variant, T)
    for r in range(1, bal.hankel_rank + 1):
        model, bundle = bal.truncate(r)
        direct, _ = balance_and_truncate(s, L, r, variant, T)
        assert np.array_equal(model.A_r, direct.A_r)
        assert model.A_r.shape == (r, r) and model.C_r.shape == (2, r)
        assert bundle.size == bal.hankel_rank - r
        np.testing.assert_array_equal(bundle.Sigma_bar, bal.hsv[r:])


@pytest.mark.parametrize("variant,T", VARIANTS)
def test_full_hankel_rank_recovers_forward_map(variant, T):
    rng = np.random.default_rng(12)
    s = random_system(5, 2, rng)
    L = rng.standard_normal((5, 5))
    grid = ObservationGrid.equidistant(0.2, 10, T)
    bal = balance(s, L, variant, T)
    model, _ = bal.truncate(bal.hankel_rank)
    G = forward_map(s, grid)
    assert np.linalg.norm((G - reduced_forward_map(model, grid)) @ L) <= 1e-6 * np.linalg.norm(G @ L)


def test_rank_errors():
    rng = np.random.default_rng(1)
    s = random_system(4, 1, rng)
    bal = balance(s, rng.standard_normal((4, 1)))
    with pytest.raises(RankError):
        bal.truncate(bal.hankel_rank + 1)
    with pytest.raises(ValueError):
        bal.truncate(0)
    with pytest.raises(DegenerateSystemError):
        balance(s, np.zeros((4, 1)))
    with pytest.raises(ValueError):
        balance(s, np.eye(4), "pdtlbt")
    with pytest.raises(ValueError):
        balance(s, np.eye(4), "bogus")


def test_unreachable_directions_drop_out():
    # diagonal A with a prior on e_1 only: the reachable subspace is one-dimensional
    rng = np.random.default_rng(2)
    s = LtiSystem(-np.diag([1.0, 2.0, 3.0, 4.0]), rng.standard_normal((2, 4)), np.eye(2))
    bal = balance(s, np.eye(4)[:, :1])
    assert bal.hankel_rank == 1
    assert bal.n_discarded == 0


def test_reduced_map_entrywise():
    rng = np.random.default_rng(3)
    s = random_system(5, 2, rng)
    model, _ = balance_and_truncate(s, rng.standard_normal((5, 5)), 3)
    grid = ObservationGrid.equidistant(0.3, 4)
    G_hat = reduced_forward_map(model, grid)
    for k, t in enumerate(grid.times):
        block = model.C_r @ expm(model.A_r * t) @ model.V_r.T
        assert rel(G_hat[2 * k: 2 * k + 2], block) < 1e-13


@pytest.mark.parametrize("variant,T", VARIANTS)
def test_reduced_impulse_response_matches_reduced_map(variant, T):
    rng = np.random.default_rng(4)
    s = random_system(5, 2, rng)
    L = rng.standard_normal((5, 3))
    model, _ = balance_and_truncate(s, L, 2, variant, T)
    grid = ObservationGrid.equidistant(0.25, 6, T)
    isq = s.eps_inv_sqrt
    stacked = reduced_impulse_responses(model, s.Gamma_eps, grid.times).reshape(-1, 3)
    expect = np.kron(np.eye(grid.n), isq) @ reduced_forward_map(model, grid) @ L
    assert rel(stacked, expect) < 1e-12
    np.testing.assert_allclose(reduced_impulse_response(model, s.Gamma_eps, 0.0), isq @ model.C_r @ model.L_pr_r)
    with pytest.raises(ValueError):
        reduced_impulse_response(model, s.Gamma_eps, -1.0)


def test_full_impulse_response_identity():
    rng = np.random.default_rng(6)
    s = random_system(4, 2, rng)
    L = rng.standard_normal((4, 2))
    grid = ObservationGrid.equidistant(0.5, 5)
    h = impulse_responses(s, L, grid.times).reshape(-1, 2)
    B = np.kron(np.eye(grid.n), s.eps_inv_sqrt) @ forward_map(s, grid) @ L
    assert rel(h, B) < 1e-13
