"""Dense linear-algebra kernels.

Matrix exponential (scaling and squaring with a degree-13 Padé approximant),
Bartels-Stewart solvers for Sylvester/Lyapunov equations, rank-revealing PSD
square roots, pseudoinverses and Schatten norms.
"""

import numpy as np
from scipy import linalg as sla

__all__ = [
    "DimensionError",
    "SingularEquationError",
    "NotPSDError",
    "expm",
    "solve_sylvester",
    "solve_lyapunov",
    "psd_sqrt_factor",
    "pinv",
    "schatten_norm",
    "sym",
]

RANK_TOL = 1e-12


class DimensionError(ValueError):
    """Raised for non-square or non-conformal operands."""


class SingularEquationError(np.linalg.LinAlgError):
    """Raised when a Sylvester/Lyapunov operator is (numerically) singular."""


class NotPSDError(np.linalg.LinAlgError):
    """Raised when a matrix that should be PSD has a clearly negative eigenvalue."""


def sym(X):
    return 0.5 * (X + np.swapaxes(X, -1, -2))


def _as_square(A, name="A"):
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise DimensionError(f"{name} must be square, got shape {A.shape}")
    return A


# ---------------------------------------------------------------------------
# matrix exponential

_PADE13 = np.array([
    64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
    1187353796428800.0, 129060195264000.0, 10559470521600.0,
    670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
    960960.0, 16380.0, 182.0, 1.0,
])
_THETA13 = 5.4


def expm(A):
    """Matrix exponential of a square matrix or a stack of square matrices.

    Scaling and squaring: each matrix is scaled by ``2**-s`` so that its
    infinity norm is at most 5.4, the [13/13] Padé approximant is evaluated,
    and the result is squared ``s`` times. Stacks of shape ``(..., n, n)`` are
    handled in one vectorized pass with a per-matrix scaling exponent.
    """
    A = _as_square(A)
    batch_shape = A.shape[:-2]
    n = A.shape[-1]
    X = A.reshape((-1, n, n))
    norms = np.abs(X).sum(axis=2).max(axis=1)
    if not np.all(np.isfinite(norms)):
        raise ValueError("expm input has non-finite entries")

    s = np.zeros(len(X), dtype=int)
    big = norms > _THETA13
    s[big] = np.ceil(np.log2(norms[big] / _THETA13)).astype(int)
    X = X / np.ldexp(1.0, s)[:, None, None]

    b = _PADE13
    ident = np.broadcast_to(np.eye(n), X.shape)
    X2 = X @ X
    X4 = X2 @ X2
    X6 = X4 @ X2
    U = X @ (X6 @ (b[13] * X6 + b[11] * X4 + b[9] * X2)
             + b[7] * X6 + b[5] * X4 + b[3] * X2 + b[1] * ident)
    V = (X6 @ (b[12] * X6 + b[10] * X4 + b[8] * X2)
         + b[6] * X6 + b[4] * X4 + b[2] * X2 + b[0] * ident)
    E = np.linalg.solve(V - U, V + U)

    for k in range(int(s.max(initial=0))):
        idx = s > k
        E[idx] = E[idx] @ E[idx]
    # exact identity for exact zeros (Padé already gives this, keep it explicit)
    E[norms == 0] = np.eye(n)
    return E.reshape(batch_shape + (n, n))


# ---------------------------------------------------------------------------
# Sylvester / Lyapunov (Bartels-Stewart)

def _blocks(T):
    """Start indices and sizes of the diagonal blocks of a real Schur form."""
    n = T.shape[0]
    out = []
    j = 0
    while j < n:
        if j + 1 < n and T[j + 1, j] != 0.0:
            out.append((j, 2))
            j += 2
        else:
            out.append((j, 1))
            j += 1
    return out


def _check_resonance(eig_a, eig_b, scale, tol):
    gap = np.min(np.abs(eig_a[:, None] + eig_b[None, :])) if len(eig_a) and len(eig_b) else np.inf
    if gap <= tol * max(scale, np.finfo(float).tiny):
        raise SingularEquationError(
            f"equation is singular: eigenvalue pair sums to {gap:.3e} (scale {scale:.3e})")


def _quasi_triangular_sylvester(T, R, F):
    """Solve T Y + Y R = F for upper quasi-triangular T (m x m) and R (k x k)."""
    m = T.shape[0]
    Y = np.zeros_like(F)
    I = np.eye(m)
    for j, size in _blocks(R):
        rhs = F[:, j:j + size] - Y[:, :j] @ R[:j, j:j + size]
        if size == 1:
            Y[:, j] = np.linalg.solve(T + R[j, j] * I, rhs[:, 0])
        else:
            r = R[j:j + 2, j:j + 2]
            K = np.block([[T + r[0, 0] * I, r[1, 0] * I],
                          [r[0, 1] * I, T + r[1, 1] * I]])
            y = np.linalg.solve(K, rhs.T.reshape(-1))
            Y[:, j:j + 2] = y.reshape(2, m).T
    return Y


def solve_sylvester(A, B, W, tol=1e-12):
    """Solve ``A.T @ S + S @ B + W = 0`` by Bartels-Stewart.

    Both coefficient matrices are reduced to real Schur form and the
    transformed equation is solved column block by column block.

    Raises
    ------
    SingularEquationError
        If an eigenvalue of ``A`` and one of ``B`` sum to (numerically) zero.
    """
    A = _as_square(A, "A")
    B = _as_square(B, "B")
    W = np.asarray(W, dtype=float)
    if W.shape != (A.shape[0], B.shape[0]):
        raise DimensionError(
            f"W has shape {W.shape}, expected {(A.shape[0], B.shape[0])}")
    if W.size == 0:
        return np.zeros_like(W)
    T, U = sla.schur(A.T, output="real")
    R, Z = sla.schur(B, output="real")
    _check_resonance(np.linalg.eigvals(T), np.linalg.eigvals(R),
                     np.linalg.norm(A) + np.linalg.norm(B), tol)
    Y = _quasi_triangular_sylvester(T, R, -(U.T @ W @ Z))
    return U @ Y @ Z.T


def solve_lyapunov(A, W, orientation="reachability", tol=1e-12):
    """Solve a continuous Lyapunov equation.

    ``orientation="reachability"`` solves ``A X + X A.T + W = 0``;
    ``orientation="observability"`` solves ``A.T X + X A + W = 0``.
    The result is symmetrized.
    """
    A = _as_square(A)
    W = np.asarray(W, dtype=float)
    if W.shape != A.shape:
        raise DimensionError(f"W has shape {W.shape}, expected {A.shape}")
    if orientation == "reachability":
        X = solve_sylvester(A.T, A.T, W, tol=tol)
    elif orientation == "observability":
        X = solve_sylvester(A, A, W, tol=tol)
    else:
        raise ValueError(f"unknown orientation {orientation!r}")
    return sym(X)


# ---------------------------------------------------------------------------
# factors, pseudoinverse, norms

def _fix_signs(V):
    """Flip columns so the largest-magnitude entry of each is positive."""
    if V.size == 0:
        return V, np.ones(V.shape[1])
    idx = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[idx, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs, signs


def psd_sqrt_factor(M, tol=RANK_TOL):
    """Rank-revealing factor ``L`` with ``L @ L.T ~= M`` for symmetric PSD ``M``.

    Built from a symmetric eigendecomposition; eigenvalues at or below
    ``tol * lambda_max`` are dropped, so ``L`` has as many columns as the
    numerical rank. Columns are ordered by decreasing eigenvalue.
    """
    M = _as_square(M, "M")
    scale = np.linalg.norm(M)
    if np.linalg.norm(M - M.T) > 1e-10 * scale:
        raise ValueError("M is not symmetric")
    lam, V = np.linalg.eigh(sym(M))
    lam, V = lam[::-1], V[:, ::-1]
    norm_inf = np.abs(M).sum(axis=1).max() if M.size else 0.0
    if M.size and lam[-1] < -tol * norm_inf:
        raise NotPSDError(f"M has eigenvalue {lam[-1]:.3e} < 0")
    if not M.size or lam[0] <= 0:
        return np.zeros((M.shape[0], 0))
    keep = lam > tol * lam[0]
    V, _ = _fix_signs(V[:, keep])
    return V * np.sqrt(lam[keep])


def pinv(M, tol=RANK_TOL):
    """SVD pseudoinverse, truncating singular values below ``tol * s_max``."""
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise DimensionError("pinv expects a 2-D matrix")
    if M.size == 0:
        return np.zeros(M.T.shape)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    keep = s > tol * s[0] if s[0] > 0 else np.zeros_like(s, dtype=bool)
    return (Vt[keep].T / s[keep]) @ U[:, keep].T


def schatten_norm(M, p=2):
    """Schatten norm for ``p=2`` (Frobenius) or ``p=inf`` (spectral)."""
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if p == 2:
        return float(np.linalg.norm(M))
    if p == np.inf:
        return float(np.linalg.norm(M, 2)) if M.size else 0.0
    raise ValueError(f"unsupported Schatten index p={p!r}; use 2 or inf")
