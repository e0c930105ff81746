"""LTI smoothing model: x' = A x, x(0) = p, observations m_k = C x(t_k) + eps_k."""

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError, expm, sym
from .posterior import GaussianPrior, NotPositiveDefiniteError

__all__ = [
    "LtiSystem",
    "ObservationGrid",
    "SmoothingProblem",
    "ObsCovariance",
    "forward_map",
    "obs_covariance",
    "impulse_response",
    "impulse_responses",
    "simulate_outputs",
]


def _psd_inv_sqrt(M):
    lam, V = np.linalg.eigh(sym(M))
    if lam[0] <= 0:
        raise NotPositiveDefiniteError("Gamma_eps is not positive definite")
    return sym((V / np.sqrt(lam)) @ V.T)


@dataclass(frozen=True)
class LtiSystem:
    """State matrix ``A`` (d x d), output map ``C`` (d_out x d), noise covariance."""

    A: np.ndarray
    C: np.ndarray
    Gamma_eps: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        Geps = np.atleast_2d(np.asarray(self.Gamma_eps, dtype=float))
        if A.shape[0] != A.shape[1]:
            raise DimensionError(f"A must be square, got {A.shape}")
        if C.shape[1] != A.shape[0]:
            raise DimensionError(f"C has {C.shape[1]} columns, A is {A.shape[0]}x{A.shape[0]}")
        if Geps.shape != (C.shape[0], C.shape[0]):
            raise DimensionError(
                f"Gamma_eps must be {C.shape[0]}x{C.shape[0]}, got {Geps.shape}")
        if not np.allclose(Geps, Geps.T, rtol=1e-12, atol=0):
            raise DimensionError("Gamma_eps must be symmetric")
        for name, M in (("A", A), ("C", C), ("Gamma_eps", Geps)):
            if not np.all(np.isfinite(M)):
                raise ValueError(f"{name} has non-finite entries")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Gamma_eps", Geps)
        # raises for indefinite noise
        object.__setattr__(self, "_eps_inv_sqrt", _psd_inv_sqrt(Geps))

    @property
    def d(self):
        return self.A.shape[0]

    @property
    def d_out(self):
        return self.C.shape[0]

    @property
    def eps_inv_sqrt(self):
        return self._eps_inv_sqrt

    @property
    def weighted_C(self):
        """``Gamma_eps^{-1/2} C``."""
        return self._eps_inv_sqrt @ self.C

    def spectral_abscissa(self):
        return float(np.max(np.linalg.eigvals(self.A).real))

    def is_stable(self, tol=1e-10):
        return self.spectral_abscissa() < -tol


@dataclass(frozen=True)
class ObservationGrid:
    """Strictly increasing observation times, optionally with a horizon ``T > t_n``."""

    times: np.ndarray
    horizon: float = None

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float).reshape(-1)
        if not len(t):
            raise ValueError("observation grid is empty")
        if t[0] < 0 or np.any(np.diff(t) <= 0):
            raise ValueError("observation times must be non-negative and strictly increasing")
        if self.horizon is not None and not self.horizon > t[-1]:
            raise ValueError(f"horizon {self.horizon} must exceed the last time {t[-1]}")
        object.__setattr__(self, "times", t)

    @classmethod
    def equidistant(cls, dt, n, horizon=None):
        return cls(dt * np.arange(1, n + 1), horizon)

    @property
    def n(self):
        return len(self.times)


@dataclass(frozen=True)
class SmoothingProblem:
    system: LtiSystem
    grid: ObservationGrid
    prior: GaussianPrior
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float).reshape(-1)
        if data.shape[0] != self.grid.n * self.system.d_out:
            raise DimensionError(
                f"data has length {data.shape[0]}, expected n*d_out = "
                f"{self.grid.n * self.system.d_out}")
        if self.prior.dim != self.system.d:
            raise DimensionError(f"prior dimension {self.prior.dim} != state dimension {self.system.d}")
        object.__setattr__(self, "data", data)

    @property
    def Gamma_obs(self):
        return obs_covariance(self.system, self.grid.n)


@dataclass(frozen=True)
class ObsCovariance:
    """Block-diagonal covariance with ``n`` copies of ``block``."""

    block: np.ndarray
    n: int

    @property
    def matrix(self):
        return np.kron(np.eye(self.n), self.block)

    def __array__(self, dtype=None, copy=None):
        M = self.matrix
        return M if dtype is None else M.astype(dtype)

    def inv_sqrt(self):
        return np.kron(np.eye(self.n), _psd_inv_sqrt(self.block))

    @property
    def shape(self):
        k = self.block.shape[0] * self.n
        return (k, k)


def obs_covariance(system, n):
    if n < 1:
        raise ValueError("need at least one observation")
    return ObsCovariance(system.Gamma_eps, int(n))


def _stack(blocks):
    return blocks.reshape(-1, blocks.shape[-1])


def forward_map(system, grid):
    """Stacked ``C exp(A t_k)``; each exponential is computed from ``A t_k`` directly."""
    E = expm(system.A[None] * grid.times[:, None, None])
    return _stack(system.C @ E)


def impulse_responses(system, L_pr, times):
    """``h(t) = Gamma_eps^{-1/2} C exp(A t) L_pr`` for each time, shape (n, d_out, s)."""
    times = np.atleast_1d(np.asarray(times, dtype=float))
    E = expm(system.A[None] * times[:, None, None])
    return system.weighted_C @ E @ np.atleast_2d(L_pr)


def impulse_response(system, L_pr, t):
    if t < 0:
        raise ValueError("impulse response is evaluated for t >= 0")
    return impulse_responses(system, L_pr, [t])[0]


def simulate_outputs(system, grid, p):
    """Noise-free outputs ``y(t_k) = C exp(A t_k) p`` stacked over the grid."""
    p = np.asarray(p, dtype=float).reshape(-1)
    if p.shape[0] != system.d:
        raise DimensionError(f"initial state has length {p.shape[0]}, expected {system.d}")
    E = expm(system.A[None] * grid.times[:, None, None])
    return ((E @ p) @ system.C.T).reshape(-1)
