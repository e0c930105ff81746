"""Reachability/observability Gramians of the prior-driven system.

The prior-driven system is ``x' = A x + L_pr u``, ``y = Gamma_eps^{-1/2} C x``,
so its reachability Gramian is driven by ``Gamma_pr = L_pr L_pr^T`` and its
observability Gramian by ``C^T Gamma_eps^{-1} C``.
"""

import math
from dataclasses import dataclass

import numpy as np

from .linalg import expm, solve_lyapunov, solve_sylvester, sym
from .quadrature import gauss_legendre

__all__ = [
    "UnstableSystemError",
    "GramianPair",
    "gramians_infinite",
    "gramians_limited",
    "limited_cross_gramian",
    "mixed_and_reduced_reach_gramians",
]

STABILITY_TOL = 1e-10
# Sylvester route needs |lambda_i + mu_j| * T comfortably away from zero,
# otherwise exp(A T) X exp(B^T T) - X cancels and quadrature is used.
RESONANCE_TOL = 1e-4


class UnstableSystemError(ValueError):
    pass


@dataclass(frozen=True)
class GramianPair:
    P: np.ndarray
    Q: np.ndarray
    horizon: float = math.inf

    @property
    def limited(self):
        return math.isfinite(self.horizon)


def output_weight(system):
    """``C^T Gamma_eps^{-1} C``."""
    Wc = system.weighted_C
    return sym(Wc.T @ Wc)


def check_stable(system):
    abscissa = system.spectral_abscissa()
    if not abscissa < -STABILITY_TOL:
        raise UnstableSystemError(
            f"A is not stable (max real eigenvalue part {abscissa:.3e}); "
            "infinite-horizon Gramians do not exist, use the time-limited variant (pdtlbt)")


def gramians_infinite(system, Gamma_pr):
    """Solve ``A P + P A^T + Gamma_pr = 0`` and ``A^T Q + Q A + C^T Gamma_eps^{-1} C = 0``."""
    check_stable(system)
    P = solve_lyapunov(system.A, Gamma_pr, "reachability")
    Q = solve_lyapunov(system.A, output_weight(system), "observability")
    return GramianPair(P, Q, math.inf)


def _resonance_gap(A, B):
    ea = np.linalg.eigvals(A)
    eb = np.linalg.eigvals(B)
    return float(np.min(np.abs(ea[:, None] + eb[None, :])))


def limited_cross_gramian(A, B, X, T, method="auto"):
    """``int_0^T exp(A t) X exp(B^T t) dt``.

    ``method="sylvester"`` solves ``A Y + Y B^T = exp(A T) X exp(B^T T) - X``;
    ``method="quadrature"`` uses adaptive Gauss-Legendre; ``"auto"`` picks the
    Sylvester route unless an eigenvalue pair of ``A`` and ``B`` nearly sums
    to zero on the time scale ``T``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if T <= 0:
        raise ValueError("horizon T must be positive")
    if method == "auto":
        method = "sylvester" if _resonance_gap(A, B) * T > RESONANCE_TOL else "quadrature"
    if method == "sylvester":
        rhs = expm(A * T) @ X @ expm(B * T).T - X
        return solve_sylvester(A.T, B.T, -rhs)
    if method == "quadrature":
        def integrand(t):
            EA = expm(A[None] * t[:, None, None])
            EB = expm(B[None] * t[:, None, None])
            return EA @ X @ np.swapaxes(EB, -1, -2)
        return gauss_legendre(integrand, 0.0, float(T), rtol=1e-10, atol=1e-300)
    raise ValueError(f"unknown method {method!r}")


def gramians_limited(system, Gamma_pr, T, method="auto"):
    """Time-limited Gramians on ``[0, T]``; ``A`` need not be stable."""
    P = sym(limited_cross_gramian(system.A, system.A, Gamma_pr, T, method))
    Q = sym(limited_cross_gramian(system.A.T, system.A.T, output_weight(system), T, method))
    return GramianPair(P, Q, float(T))


def mixed_and_reduced_reach_gramians(system, reduced, T, L_pr=None, method="auto"):
    """Reduced and mixed reachability Gramians on ``[0, T]``.

    ``P_red = int exp(A_r t) L_r L_r^T exp(A_r^T t) dt`` and
    ``P_mix = int exp(A t) L_pr L_r^T exp(A_r^T t) dt``, where by default
    ``L_pr`` is the prior factor the model was balanced with and
    ``L_r = V_r^T L_pr``.
    """
    L_pr = reduced.L_pr if L_pr is None else np.atleast_2d(L_pr)
    L_r = reduced.V_r.T @ L_pr
    P_red = sym(limited_cross_gramian(reduced.A_r, reduced.A_r, L_r @ L_r.T, T, method))
    P_mix = limited_cross_gramian(system.A, reduced.A_r, L_pr @ L_r.T, T, method)
    return P_red, P_mix
