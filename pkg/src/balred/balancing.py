"""Square-root balanced truncation of the prior-driven system (PD-BT / PD-TLBT)."""

import math
from dataclasses import dataclass

import numpy as np

from .gramians import gramians_infinite, gramians_limited
from .linalg import DimensionError, expm, psd_sqrt_factor
from .posterior import inv_sqrt

__all__ = [
    "RankError",
    "DegenerateSystemError",
    "ReducedModel",
    "TruncatedBundle",
    "BalancedRealization",
    "balance",
    "balance_and_truncate",
    "reduced_forward_map",
    "reduced_impulse_response",
    "reduced_impulse_responses",
]

HANKEL_RTOL = 1e-12
VARIANTS = ("pdbt", "pdtlbt")


class RankError(ValueError):
    def __init__(self, r, rank):
        super().__init__(f"requested rank {r} exceeds the numerical Hankel rank {rank}")
        self.r = r
        self.rank = rank


class DegenerateSystemError(ValueError):
    pass


@dataclass(frozen=True)
class ReducedModel:
    """Rank-``r`` reduced prior-driven system and its projection bases.

    ``hsv`` holds every numerically nonzero Hankel singular value (the first
    ``hankel_rank`` of them); ``n_discarded`` counts those dropped below the
    rank tolerance.
    """

    r: int
    A_r: np.ndarray
    C_r: np.ndarray
    L_pr_r: np.ndarray
    V_r: np.ndarray
    W_r: np.ndarray
    hsv: np.ndarray
    variant: str
    horizon: float
    L_pr: np.ndarray
    n_discarded: int = 0

    @property
    def hankel_rank(self):
        return len(self.hsv)


@dataclass(frozen=True)
class TruncatedBundle:
    """Quantities attached to the truncated balanced directions r+1..m."""

    Sigma_bar: np.ndarray
    L_pr_bar: np.ndarray
    A_bar: np.ndarray
    V_bar: np.ndarray
    W_bar: np.ndarray
    n_discarded: int = 0

    @property
    def size(self):
        return len(self.Sigma_bar)


@dataclass(frozen=True)
class BalancedRealization:
    """Balancing bases for all ``m`` numerically significant directions.

    ``V.T @ W = I_m``; truncating to rank ``r`` keeps the leading ``r``
    columns, so a rank sweep balances once and slices.
    """

    system: object
    L_pr: np.ndarray
    V: np.ndarray
    W: np.ndarray
    hsv: np.ndarray
    variant: str
    horizon: float
    n_discarded: int

    @property
    def hankel_rank(self):
        return len(self.hsv)

    def truncate(self, r):
        r = int(r)
        m = self.hankel_rank
        if r < 1:
            raise ValueError("rank must be at least 1")
        if r > m:
            raise RankError(r, m)
        A, C = self.system.A, self.system.C
        V_r, W_r = self.V[:, :r], self.W[:, :r]
        V_bar, W_bar = self.V[:, r:], self.W[:, r:]
        model = ReducedModel(
            r=r,
            A_r=V_r.T @ A @ W_r,
            C_r=C @ W_r,
            L_pr_r=V_r.T @ self.L_pr,
            V_r=V_r,
            W_r=W_r,
            hsv=self.hsv,
            variant=self.variant,
            horizon=self.horizon,
            L_pr=self.L_pr,
            n_discarded=self.n_discarded,
        )
        bundle = TruncatedBundle(
            Sigma_bar=self.hsv[r:],
            L_pr_bar=V_bar.T @ self.L_pr,
            A_bar=V_r.T @ A @ W_bar,
            V_bar=V_bar,
            W_bar=W_bar,
            n_discarded=self.n_discarded,
        )
        return model, bundle


def _sign_fix_svd(U, Zt):
    """Make the largest-magnitude entry of each left singular vector positive."""
    if U.size == 0:
        return U, Zt
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, Zt * signs[:, None]


def balance(system, L_pr, variant="pdbt", horizon=None):
    """Balance the prior-driven system driven by the prior factor ``L_pr``.

    Square-root algorithm: ``P = L L^T``, ``Q = R R^T``,
    ``R^T L = U S Z^T``, ``W = L Z S^{-1/2}``, ``V = R U S^{-1/2}``.
    """
    L_pr = np.atleast_2d(np.asarray(L_pr, dtype=float))
    if L_pr.shape[0] != system.d:
        raise DimensionError(f"prior factor has {L_pr.shape[0]} rows, system has {system.d} states")
    Gamma_pr = L_pr @ L_pr.T
    if variant == "pdbt":
        grams = gramians_infinite(system, Gamma_pr)
        horizon = math.inf
    elif variant == "pdtlbt":
        if horizon is None or not horizon > 0:
            raise ValueError("pdtlbt needs a positive horizon T")
        grams = gramians_limited(system, Gamma_pr, float(horizon))
    else:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")

    Lf = psd_sqrt_factor(grams.P)
    Rf = psd_sqrt_factor(grams.Q)
    if Lf.shape[1] == 0 or Rf.shape[1] == 0:
        raise DegenerateSystemError("a Gramian vanishes; the prior-driven system has no Hankel directions")
    U, s, Zt = np.linalg.svd(Rf.T @ Lf, full_matrices=False)
    if s[0] <= 0:
        raise DegenerateSystemError("all Hankel singular values are zero")
    U, Zt = _sign_fix_svd(U, Zt)
    keep = s > HANKEL_RTOL * s[0]
    m = int(keep.sum())
    scale = 1.0 / np.sqrt(s[:m])
    W = Lf @ Zt[:m].T * scale
    V = Rf @ U[:, :m] * scale
    return BalancedRealization(system, L_pr, V, W, s[:m], variant, float(horizon), len(s) - m)


def balance_and_truncate(system, L_pr, r, variant="pdbt", horizon=None):
    """Balance and keep the leading ``r`` directions; returns ``(model, bundle)``."""
    return balance(system, L_pr, variant, horizon).truncate(r)


def reduced_forward_map(model, grid):
    """Stacked ``C_r exp(A_r t_k) V_r^T``."""
    E = expm(model.A_r[None] * grid.times[:, None, None])
    blocks = model.C_r @ E
    return blocks.reshape(-1, model.r) @ model.V_r.T


def reduced_impulse_responses(model, Gamma_eps, times, L_pr=None):
    """``h_r(t) = Gamma_eps^{-1/2} C_r exp(A_r t) L_pr_r`` at each time."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    L_r = model.L_pr_r if L_pr is None else model.V_r.T @ np.atleast_2d(L_pr)
    E = expm(model.A_r[None] * times[:, None, None])
    return inv_sqrt(Gamma_eps) @ model.C_r @ E @ L_r


def reduced_impulse_response(model, Gamma_eps, t):
    if t < 0:
        raise ValueError("impulse response is evaluated for t >= 0")
    return reduced_impulse_responses(model, Gamma_eps, [t])[0]
