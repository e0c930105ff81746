"""Random problem generators shared by the test modules."""

import math

import numpy as np

from balred.lti import LtiSystem, ObservationGrid, SmoothingProblem, forward_map
from balred.posterior import GaussianPrior


def stable_matrix(d, rng, margin=0.3):
    M = rng.standard_normal((d, d)) / math.sqrt(d)
    shift = np.linalg.eigvalsh(0.5 * (M + M.T))[-1] + margin
    return M - shift * np.eye(d)


def random_system(d, d_out, rng, noise=1e-2):
    A = stable_matrix(d, rng)
    C = rng.standard_normal((d_out, d))
    std = noise * np.exp(rng.uniform(-0.5, 0.5, size=d_out))
    return LtiSystem(A, C, np.diag(std ** 2))


def random_prior(d, s, rng, mean=True):
    L = rng.standard_normal((d, s))
    mu = L @ rng.standard_normal(s) if mean else np.zeros(d)
    return GaussianPrior(mu, L)


def random_problem(d, d_out, s, n, dt, rng, horizon=None):
    system = random_system(d, d_out, rng)
    prior = random_prior(d, s, rng)
    grid = ObservationGrid.equidistant(dt, n, horizon)
    p = prior.mean + prior.cov_factor @ rng.standard_normal(s)
    G = forward_map(system, grid)
    noise = rng.standard_normal((n, d_out)) @ np.linalg.cholesky(system.Gamma_eps).T
    return SmoothingProblem(system, grid, prior, G @ p + noise.reshape(-1))


def rel(a, b):
    """Relative Frobenius distance of ``a`` to the reference ``b``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(b), 1e-300))
