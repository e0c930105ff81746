"""Adaptive composite Gauss-Legendre quadrature for vector/matrix integrands.

Integrands are vectorized: ``f(t)`` takes a 1-D array of times and returns an
array whose leading axis matches ``t``.
"""

import numpy as np

__all__ = ["gauss_legendre", "integrate_to_infinity", "interval_integrals"]

ORDER = 16


def _panel_nodes(level, order):
    """Nodes and weights on [0, 1] for 2**level equal panels."""
    x, w = np.polynomial.legendre.leggauss(order)
    npan = 2 ** level
    left = np.arange(npan) / npan
    nodes = (left[:, None] + (x[None, :] + 1.0) / (2 * npan)).ravel()
    weights = np.tile(w / (2 * npan), npan)
    return nodes, weights


def _noise(est_abs, h, root_noise):
    return h * (2 * np.sqrt(est_abs / h) * root_noise + root_noise ** 2)


def gauss_legendre(f, a, b, rtol=1e-10, atol=0.0, order=ORDER, max_level=14, root_noise=0.0):
    """Integrate ``f`` over ``[a, b]`` with panels doubled until converged.

    Convergence: the Frobenius norm of the change between successive
    estimates is at most ``rtol * |I| + atol``, plus the round-off allowance
    described in :func:`interval_integrals` when ``root_noise`` is given.
    """
    if b == a:
        probe = np.asarray(f(np.array([a])))
        return np.zeros(probe.shape[1:])
    prev = None
    for level in range(max_level + 1):
        nodes, weights = _panel_nodes(level, order)
        vals = np.asarray(f(a + (b - a) * nodes))
        est = (b - a) * np.tensordot(weights, vals, axes=(0, 0))
        if prev is not None:
            size = np.linalg.norm(est)
            if np.linalg.norm(est - prev) <= rtol * size + atol + _noise(size, b - a, root_noise):
                return est
        prev = est
    raise RuntimeError(f"quadrature did not converge on [{a}, {b}]")


def integrate_to_infinity(f, rtol=1e-10, atol=0.0, decay_tol=1e-14, window=1.0, max_windows=64,
                          root_noise=0.0):
    """Integrate a decaying integrand over ``[0, inf)``.

    Windows of doubling length are integrated until the integrand norm on a
    whole window falls below ``decay_tol`` times the peak seen so far.
    ``atol`` is applied per window.
    """
    total = None
    peak = 0.0
    a, width = 0.0, window
    for _ in range(max_windows):
        b = a + width
        probe_t = a + (b - a) * _panel_nodes(3, 8)[0]
        probe = np.asarray(f(probe_t))
        mags = np.sqrt(np.sum(probe.reshape(len(probe_t), -1) ** 2, axis=1))
        peak = max(peak, float(mags.max()))
        part = gauss_legendre(f, a, b, rtol=rtol, atol=max(atol, 1e-300), root_noise=root_noise)
        total = part if total is None else total + part
        if peak == 0.0 or mags.max() < decay_tol * peak:
            return total
        a, width = b, 2 * width
    raise RuntimeError("integrand did not decay")


def interval_integrals(f_panel, edges, rtol=1e-10, atol=0.0, root_noise=0.0, order=ORDER,
                       max_level=12):
    """Integrals of a scalar integrand over consecutive intervals.

    ``f_panel(starts, offsets)`` must return the integrand at
    ``starts[:, None] + offsets[None, :]`` as a ``(len(starts), len(offsets))``
    array. Intervals of equal length (to 1e-12 relative) share the same
    offsets, which lets the integrand reuse ``exp(A * offset)`` factors.
    Each interval is refined independently until its estimate changes by at
    most ``rtol * |I| + atol + noise``.

    For integrands of the form ``||D(t)||^2`` whose factor ``D`` carries an
    absolute round-off ``root_noise``, ``noise = h (2 sqrt(|I|/h) root_noise
    + root_noise^2)`` on an interval of length ``h``; refinement cannot
    resolve changes below that level.
    """
    edges = np.asarray(edges, dtype=float)
    starts = edges[:-1]
    lengths = np.diff(edges)
    result = np.full(len(starts), np.nan)
    groups = _group_lengths(lengths)
    for length, idx in groups:
        prev = None
        todo = idx
        for level in range(max_level + 1):
            nodes, weights = _panel_nodes(level, order)
            vals = np.asarray(f_panel(starts[todo], length * nodes))
            est = lengths[todo] * (vals @ weights)
            if prev is not None:
                noise = _noise(np.abs(est), lengths[todo], root_noise)
                done = np.abs(est - prev) <= rtol * np.abs(est) + atol + noise
                result[todo[done]] = est[done]
                todo, est = todo[~done], est[~done]
                if not len(todo):
                    break
            prev = est
        if len(todo):
            raise RuntimeError("interval quadrature did not converge")
    return result


def _group_lengths(lengths, rtol=1e-12):
    out = []
    remaining = np.arange(len(lengths))
    while len(remaining):
        ref = lengths[remaining[0]]
        same = np.abs(lengths[remaining] - ref) <= rtol * abs(ref)
        out.append((ref, remaining[same]))
        remaining = remaining[~same]
    return out
