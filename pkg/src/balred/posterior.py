"""Exact and approximate Gaussian posteriors for linear forward models."""

from dataclasses import dataclass

import numpy as np
from scipy import linalg as sla

from .linalg import DimensionError, pinv, sym

__all__ = [
    "NotPositiveDefiniteError",
    "GaussianPrior",
    "GaussianPosterior",
    "inv_sqrt",
    "posterior",
    "approx_posterior",
    "pph_sqrt",
    "posterior_error",
]


class NotPositiveDefiniteError(np.linalg.LinAlgError):
    pass


@dataclass(frozen=True)
class GaussianPrior:
    """Prior N(mean, L L^T) with a possibly rank-deficient factor ``L`` (d x s)."""

    mean: np.ndarray
    cov_factor: np.ndarray

    def __post_init__(self):
        L = np.atleast_2d(np.asarray(self.cov_factor, dtype=float))
        mean = np.asarray(self.mean, dtype=float).reshape(-1)
        if L.shape[0] != mean.shape[0]:
            raise DimensionError(
                f"prior mean has length {mean.shape[0]} but factor has {L.shape[0]} rows")
        object.__setattr__(self, "cov_factor", L)
        object.__setattr__(self, "mean", mean)

    @classmethod
    def centered(cls, cov_factor):
        cov_factor = np.atleast_2d(np.asarray(cov_factor, dtype=float))
        return cls(np.zeros(cov_factor.shape[0]), cov_factor)

    @property
    def dim(self):
        return self.cov_factor.shape[0]

    @property
    def cov(self):
        return self.cov_factor @ self.cov_factor.T

    def scaled(self, lam):
        """Prior with covariance multiplied by ``lam`` (mean unchanged)."""
        return GaussianPrior(self.mean, np.sqrt(lam) * self.cov_factor)

    def mean_in_range(self, rtol=1e-8):
        """Whether the mean lies in the column space of the factor."""
        norm = np.linalg.norm(self.mean)
        if norm == 0:
            return True
        L = self.cov_factor
        resid = L @ (pinv(L) @ self.mean) - self.mean
        return bool(np.linalg.norm(resid) <= rtol * norm)


@dataclass(frozen=True)
class GaussianPosterior:
    mean: np.ndarray
    cov: np.ndarray


def inv_sqrt(Gamma_obs):
    """Principal inverse square root of a symmetric positive definite matrix.

    Objects exposing ``inv_sqrt()`` (block-diagonal covariances) are asked
    for it directly so the root is formed blockwise.
    """
    if hasattr(Gamma_obs, "inv_sqrt"):
        return Gamma_obs.inv_sqrt()
    M = np.atleast_2d(np.asarray(Gamma_obs, dtype=float))
    lam, V = np.linalg.eigh(sym(M))
    if lam.size and lam[0] <= 0:
        raise NotPositiveDefiniteError("observation covariance is not positive definite")
    return sym((V / np.sqrt(lam)) @ V.T)


def _cholesky(K, what):
    try:
        return sla.cholesky(K, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefiniteError(f"{what} is not positive definite") from exc


def posterior(G, prior, Gamma_obs, m):
    """Gaussian posterior for ``m = G p + eps``, ``eps ~ N(0, Gamma_obs)``.

    Covariance-form update: the inner matrix ``Gamma_obs + G Gamma_pr G^T``
    is Cholesky-factored and never inverted explicitly. The mean uses the
    equivalent gain ``Gamma_pr G^T (Gamma_obs + G Gamma_pr G^T)^{-1}``.
    """
    G = np.atleast_2d(np.asarray(G, dtype=float))
    Gamma_obs = np.atleast_2d(np.asarray(Gamma_obs, dtype=float))
    m = np.asarray(m, dtype=float).reshape(-1)
    L = prior.cov_factor
    d_obs, d = G.shape
    if d != prior.dim:
        raise DimensionError(f"G has {d} columns but the prior has dimension {prior.dim}")
    if Gamma_obs.shape != (d_obs, d_obs) or m.shape != (d_obs,):
        raise DimensionError(
            f"expected Gamma_obs {(d_obs, d_obs)} and data ({d_obs},), "
            f"got {Gamma_obs.shape} and {m.shape}")
    _cholesky(Gamma_obs, "Gamma_obs")

    GL = G @ L
    Gamma_pr = L @ L.T
    K = sym(Gamma_obs + GL @ GL.T)
    Lk = _cholesky(K, "Gamma_obs + G Gamma_pr G^T")
    Y = sla.solve_triangular(Lk, G @ Gamma_pr, lower=True)
    cov = sym(Gamma_pr - Y.T @ Y)
    z = sla.solve_triangular(Lk, m - G @ prior.mean, lower=True)
    mean = prior.mean + Y.T @ z
    return GaussianPosterior(mean, cov)


def approx_posterior(G_hat, prior, Gamma_obs, m):
    """Posterior obtained by substituting an approximate forward map."""
    return posterior(G_hat, prior, Gamma_obs, m)


def pph_sqrt(G, prior, Gamma_obs):
    """Square root ``Gamma_obs^{-1/2} G L_pr`` of the prior-preconditioned Hessian."""
    return inv_sqrt(Gamma_obs) @ np.atleast_2d(G) @ prior.cov_factor


def posterior_error(exact, approx):
    """``(||mu - mu_hat||_2, ||Gamma - Gamma_hat||_F)``."""
    if exact.mean.shape != approx.mean.shape:
        raise DimensionError("posteriors have different dimensions")
    return (float(np.linalg.norm(exact.mean - approx.mean)),
            float(np.linalg.norm(exact.cov - approx.cov)))
