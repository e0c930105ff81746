"""A priori certificates for posteriors computed with PD-BT / PD-TLBT reduced models.

The chain is

    ||Gamma_obs^{-1/2} (G - G_hat) L_pr||_F^2
        = sum_k ||h(t_k) - h_r(t_k)||_F^2
        <= kappa * trace_term,

with ``trace_term`` the truncated-HSV expression (PD-BT) or the time-limited
three-trace expression (PD-TLBT), and the posterior errors are bounded by the
local Lipschitz constants ``C`` (covariance) and ``C'`` (mean) times the
square root of the right-hand side.
"""

import math
import warnings
from dataclasses import dataclass, fields

import numpy as np

from .balancing import reduced_forward_map
from .gramians import check_stable, limited_cross_gramian, mixed_and_reduced_reach_gramians
from .linalg import expm, pinv, schatten_norm, solve_lyapunov, solve_sylvester
from .lti import forward_map, obs_covariance
from .posterior import approx_posterior, inv_sqrt, posterior
from .quadrature import integrate_to_infinity, interval_integrals

__all__ = [
    "HypothesisError",
    "NumericalInconsistencyError",
    "BoundReport",
    "Certifier",
    "pph_error_actual",
    "pph_error_from_responses",
    "hsv_trace_bound",
    "time_limited_l2_error",
    "kappa_from_profile",
    "estimate_kappa",
    "lipschitz_C",
    "lipschitz_Cprime",
    "certify",
]

NEGATIVE_TRACE_RTOL = 1e-10
VANISH_RTOL = 1e-14
# absolute round-off of h - h_r relative to max_k ||h(t_k)||_F
ROOT_NOISE_RTOL = 1e-14
# below this fraction of the response energy a Gramian-form trace term is
# dominated by cancellation or by the discarded Hankel directions; the
# certifier then integrates the same L2 error directly
TRACE_FLOOR_RTOL = 1e-12


class HypothesisError(ValueError):
    """The prior mean is not in the range of the prior covariance factor."""


class NumericalInconsistencyError(ArithmeticError):
    pass


@dataclass(frozen=True)
class BoundReport:
    variant: str
    rank: int
    horizon: float
    kappa: float
    lipschitz_C: float
    lipschitz_Cprime: float
    trace_term: float
    pph_err_bound: float
    cov_bound: float
    mean_bound: float
    actual_cov_err: float
    actual_mean_err: float
    pph_err_actual: float
    hsv_tail: float
    hankel_rank: int
    n_discarded: int
    chain_holds: bool
    kappa_infinite: bool
    trace_route: str = "gramian"
    p: float = 2
    sbar_coordinates: str = "balanced rows W_bar^T S of the original-coordinate Sylvester solution"

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


# ---------------------------------------------------------------------------
# impulse-response errors

class _ResponseSampler:
    """``left @ exp(M t) @ right`` at ``t = start + offset``.

    ``exp(M start)`` and ``exp(M offset)`` are computed separately and
    multiplied, so a grid of starts times a grid of offsets costs one
    exponential per distinct value. Results are memoized per node set.
    """

    def __init__(self, M, left, right):
        self.M = np.atleast_2d(M)
        self.left = np.atleast_2d(left)
        self.right = np.atleast_2d(right)
        self._cache = {}

    def panels(self, starts, offsets):
        starts = np.asarray(starts, dtype=float)
        offsets = np.asarray(offsets, dtype=float)
        key = (starts.tobytes(), offsets.tobytes())
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        lhs = self.left @ expm(self.M[None] * starts[:, None, None])
        rhs = expm(self.M[None] * offsets[:, None, None]) @ self.right
        out = np.einsum("kpn,jnq->kjpq", lhs, rhs)
        self._cache[key] = out
        return out


def _error_profile(full, reduced):
    def f(starts, offsets):
        D = full.panels(starts, offsets) - reduced.panels(starts, offsets)
        return np.sum(D * D, axis=(2, 3))
    return f


def _reduced_sampler(system, model, L_pr):
    Wr = system.eps_inv_sqrt @ model.C_r
    return _ResponseSampler(model.A_r, Wr, model.V_r.T @ L_pr)


def _full_sampler(system, L_pr):
    return _ResponseSampler(system.A, system.weighted_C, L_pr)


def pph_error_actual(system, prior, grid, model):
    """``||Gamma_obs^{-1/2} (G - G_hat) L_pr||_F`` from the assembled maps."""
    G = forward_map(system, grid)
    G_hat = reduced_forward_map(model, grid)
    isq = obs_covariance(system, grid.n).inv_sqrt()
    return float(np.linalg.norm(isq @ (G - G_hat) @ prior.cov_factor))


def pph_error_from_responses(system, prior, grid, model):
    """Same quantity as ``sqrt(sum_k ||h(t_k) - h_r(t_k)||_F^2)``."""
    L = prior.cov_factor
    f = _error_profile(_full_sampler(system, L), _reduced_sampler(system, model, L))
    return float(np.sqrt(f(grid.times, np.zeros(1)).sum()))


# ---------------------------------------------------------------------------
# L2 error of the impulse response

def _clamp(total, reference, what):
    if total >= 0:
        return float(total)
    if total < -NEGATIVE_TRACE_RTOL * abs(reference):
        raise NumericalInconsistencyError(
            f"{what} is negative ({total:.3e}) beyond round-off (reference {reference:.3e})")
    warnings.warn(f"{what} = {total:.3e} < 0 from round-off; clamped to 0", RuntimeWarning)
    return 0.0


def hsv_trace_bound(system, prior, model, bundle):
    """``trace[(L_bar L_bar^T + 2 S_bar A_bar) Sigma_bar]`` for a PD-BT model.

    ``S`` solves ``A^T S + S A_r + C^T Gamma_eps^{-1} C_r = 0`` in original
    coordinates; its balanced-coordinate rows belonging to the truncated
    directions are ``W_bar^T S``. ``L_bar = V_bar^T L_pr`` uses the factor of
    ``prior``.
    """
    check_stable(system)
    if bundle.size == 0:
        return 0.0
    Wc = system.weighted_C
    Wr = system.eps_inv_sqrt @ model.C_r
    S = solve_sylvester(system.A, model.A_r, Wc.T @ Wr)
    S_bar = bundle.W_bar.T @ S
    L_bar = bundle.V_bar.T @ prior.cov_factor
    M = L_bar @ L_bar.T + 2.0 * S_bar @ bundle.A_bar
    total = float(np.diag(M) @ bundle.Sigma_bar)
    reference = float(np.abs(np.diag(L_bar @ L_bar.T)) @ bundle.Sigma_bar
                      + 2 * np.abs(np.diag(S_bar @ bundle.A_bar)) @ bundle.Sigma_bar)
    return _clamp(total, reference, "PD-BT trace term")


def time_limited_traces(system, prior, model, T, method="auto"):
    """The three traces whose combination is the time-limited L2 error."""
    L = prior.cov_factor
    P_T = limited_cross_gramian(system.A, system.A, L @ L.T, T, method)
    P_red, P_mix = mixed_and_reduced_reach_gramians(system, model, T, L_pr=L, method=method)
    Wc = system.weighted_C
    Wr = system.eps_inv_sqrt @ model.C_r
    return (float(np.trace(Wc @ P_T @ Wc.T)),
            float(np.trace(Wr @ P_red @ Wr.T)),
            float(np.trace(Wc @ P_mix @ Wr.T)))


def time_limited_l2_error(system, prior, model, T, method="auto"):
    """``trace[G C P_T C^T] + trace[G C_r P_red C_r^T] - 2 trace[G C P_mix C_r^T]``
    with ``G = Gamma_eps^{-1}``; equals ``||h - h_r||^2`` on ``[0, T]``."""
    full, red, mix = time_limited_traces(system, prior, model, T, method)
    return _clamp(full + red - 2.0 * mix, full, "PD-TLBT trace term")


# ---------------------------------------------------------------------------
# kappa

def _profile_integrals(f_panel, times, scale, horizon=None, rtol=1e-10):
    """Point values at ``times`` and integrals over ``[t_{k-1}, t_k]`` (``t_0 = 0``),
    plus one more interval up to ``horizon`` when it lies beyond the last time."""
    times = np.asarray(times, dtype=float)
    edges = np.concatenate([[0.0], times])
    if horizon is not None and horizon > times[-1]:
        edges = np.append(edges, horizon)
    num = np.asarray(f_panel(times, np.zeros(1)))[:, 0]
    den = interval_integrals(f_panel, edges, rtol=rtol,
                             root_noise=ROOT_NOISE_RTOL * math.sqrt(scale))
    return num, den


def _kappa(num, den, scale):
    ratios = np.full(len(num), np.nan)
    kappa = 0.0
    for k in range(len(num)):
        if num[k] <= (VANISH_RTOL ** 2) * scale:
            # ||h(t_k) - h_r(t_k)|| at round-off level: nothing to bound
            continue
        if den[k] < VANISH_RTOL * (num[k] + 1e-300):
            ratios[k] = math.inf
            kappa = math.inf
            continue
        ratios[k] = num[k] / den[k]
        kappa = max(kappa, float(ratios[k]))
    return kappa, ratios


def kappa_from_profile(f_panel, times, scale=1.0, rtol=1e-10, return_ratios=False):
    """Largest ratio ``e(t_k) / int_{t_{k-1}}^{t_k} e(t) dt`` with ``t_0 = 0``.

    ``f_panel(starts, offsets)`` evaluates the non-negative error profile
    ``e = ||h - h_r||_F^2`` on ``starts[:, None] + offsets[None, :]``.
    ``scale`` is the squared size of the responses themselves: a point value
    below ``(1e-14)^2 * scale`` is round-off and its interval is skipped.
    Otherwise an integral below ``1e-14`` times the point value makes kappa
    infinite.
    """
    num, den = _profile_integrals(f_panel, times, scale, rtol=rtol)
    kappa, ratios = _kappa(num, den[:len(num)], scale)
    return (kappa, ratios) if return_ratios else kappa


def _response_scale(sampler, times):
    return float(np.max(np.sum(sampler.panels(times, np.zeros(1)) ** 2, axis=(2, 3))))


def estimate_kappa(system, prior, grid, model, return_ratios=False):
    L = prior.cov_factor
    full = _full_sampler(system, L)
    return kappa_from_profile(_error_profile(full, _reduced_sampler(system, model, L)),
                              grid.times, scale=_response_scale(full, grid.times),
                              return_ratios=return_ratios)


# ---------------------------------------------------------------------------
# local Lipschitz constants

def _damped(B):
    """``(I + B B^T)^{-1} B``."""
    return np.linalg.solve(np.eye(B.shape[0]) + B @ B.T, B)


def _lipschitz_C(B, B_hat, L):
    nB, nBh = schatten_norm(B, np.inf), schatten_norm(B_hat, np.inf)
    return schatten_norm(L, np.inf) ** 2 * (
        schatten_norm(_damped(B), np.inf)
        + nBh * nB * (nB + nBh)
        + schatten_norm(_damped(B_hat), np.inf))


def lipschitz_C(G, G_hat, prior, Gamma_obs):
    """Covariance constant: ``||Gamma_pos - Gamma_pos_hat||_p <= C ||Gamma_obs^{-1/2}(G - G_hat) L_pr||_p``."""
    isq = inv_sqrt(Gamma_obs)
    L = prior.cov_factor
    return _lipschitz_C(isq @ G @ L, isq @ G_hat @ L, L)


def _lipschitz_Cprime(G, G_hat, prior, isq, m, C, cov_hat):
    if not prior.mean_in_range():
        raise HypothesisError("prior mean is not in the range of the prior covariance factor")
    mu = prior.mean
    L_pinv = pinv(prior.cov_factor)
    t1 = C * np.linalg.norm(G.T @ (isq @ (isq @ (m - G @ mu))))
    t2 = schatten_norm(cov_hat @ G.T @ isq, np.inf) * np.linalg.norm(L_pinv @ mu)
    t3 = schatten_norm(cov_hat @ L_pinv.T, np.inf) * np.linalg.norm(isq @ (m - G_hat @ mu))
    return float(t1 + t2 + t3)


def lipschitz_Cprime(G, G_hat, prior, Gamma_obs, m, C):
    """Mean constant ``C'`` built from ``C``, the data and the approximate posterior covariance."""
    G = np.atleast_2d(G)
    G_hat = np.atleast_2d(G_hat)
    m = np.asarray(m, dtype=float).reshape(-1)
    cov_hat = approx_posterior(G_hat, prior, Gamma_obs, m).cov
    return _lipschitz_Cprime(G, G_hat, prior, inv_sqrt(Gamma_obs), m, C, cov_hat)


# ---------------------------------------------------------------------------
# assembled certificates

class Certifier:
    """Certifies reduced models against one smoothing problem.

    The exact forward map, exact posterior and full impulse-response samples
    are computed once and shared by every ``report`` call.
    """

    def __init__(self, problem, p=2):
        if p not in (2, np.inf):
            raise ValueError("p must be 2 or inf")
        self.problem = problem
        self.p = p
        system, grid, prior = problem.system, problem.grid, problem.prior
        self.Gamma_obs = obs_covariance(system, grid.n)
        self.isq = self.Gamma_obs.inv_sqrt()
        self.G = forward_map(system, grid)
        self.exact = posterior(self.G, prior, self.Gamma_obs, problem.data)
        self.B = self.isq @ self.G @ prior.cov_factor
        self._full = _full_sampler(system, prior.cov_factor)
        self.scale = _response_scale(self._full, grid.times)
        self._energy = None

    def _profile(self, model):
        system, prior = self.problem.system, self.problem.prior
        return _error_profile(self._full, _reduced_sampler(system, model, prior.cov_factor))

    def kappa(self, model):
        num, den = _profile_integrals(self._profile(model), self.problem.grid.times, self.scale)
        return _kappa(num, den, self.scale)[0]

    def energy(self):
        """``||h||_{L2}^2 = trace(Gamma_eps^{-1/2} C P C^T Gamma_eps^{-1/2})``, cached."""
        if self._energy is None:
            system, L = self.problem.system, self.problem.prior.cov_factor
            check_stable(system)
            P = solve_lyapunov(system.A, L @ L.T, "reachability")
            Wc = system.weighted_C
            self._energy = float(np.trace(Wc @ P @ Wc.T))
        return self._energy

    def _tail_integral(self, profile, start):
        """``int_start^inf`` of the error profile."""
        def f(t):
            return profile(np.array([start]), t)[0]
        return float(integrate_to_infinity(
            f, rtol=1e-10, root_noise=ROOT_NOISE_RTOL * math.sqrt(self.scale)))

    def _trace_and_kappa(self, model, bundle):
        system, prior, times = self.problem.system, self.problem.prior, self.problem.grid.times
        profile = self._profile(model)
        if model.variant == "pdbt":
            if bundle is None:
                raise ValueError("PD-BT certificates need the truncated bundle")
            num, den = _profile_integrals(profile, times, self.scale)
            kappa = _kappa(num, den, self.scale)[0]
            value = hsv_trace_bound(system, prior, model, bundle)
            if value > TRACE_FLOOR_RTOL * self.energy():
                return value, "gramian", kappa
            return float(np.sum(den)) + self._tail_integral(profile, times[-1]), "quadrature", kappa
        T = model.horizon
        num, den = _profile_integrals(profile, times, self.scale, horizon=T)
        kappa = _kappa(num, den[:len(num)], self.scale)[0]
        full, red, mix = time_limited_traces(system, prior, model, T)
        total = full + red - 2.0 * mix
        if total > TRACE_FLOOR_RTOL * full:
            return total, "gramian", kappa
        if total < -NEGATIVE_TRACE_RTOL * full:
            raise NumericalInconsistencyError(
                f"PD-TLBT trace term is negative ({total:.3e}) beyond round-off")
        return float(np.sum(den)), "quadrature", kappa

    def report(self, model, bundle=None):
        problem = self.problem
        grid, prior, m = problem.grid, problem.prior, problem.data
        if model.variant == "pdtlbt" and model.horizon < grid.times[-1]:
            raise ValueError(
                f"horizon {model.horizon} is shorter than the last observation {grid.times[-1]}")
        G_hat = reduced_forward_map(model, grid)
        approx = approx_posterior(G_hat, prior, self.Gamma_obs, m)
        mean_err = float(np.linalg.norm(self.exact.mean - approx.mean))
        cov_err = schatten_norm(self.exact.cov - approx.cov, self.p)
        B_hat = self.isq @ G_hat @ prior.cov_factor
        pph_err = float(np.linalg.norm(self.B - B_hat))

        C = _lipschitz_C(self.B, B_hat, prior.cov_factor)
        Cp = _lipschitz_Cprime(self.G, G_hat, prior, self.isq, m, C, approx.cov)
        trace_term, route, kappa = self._trace_and_kappa(model, bundle)
        if math.isinf(kappa):
            warnings.warn(f"kappa is infinite at rank {model.r}; bounds are infinite", RuntimeWarning)
            pph_bound = math.inf
        else:
            pph_bound = math.sqrt(kappa * trace_term)
        slack = grid.n * (ROOT_NOISE_RTOL ** 2) * self.scale
        chain = pph_err ** 2 <= kappa * trace_term * (1 + 1e-9) + slack
        return BoundReport(
            variant=model.variant,
            rank=model.r,
            horizon=model.horizon,
            kappa=kappa,
            lipschitz_C=C,
            lipschitz_Cprime=Cp,
            trace_term=trace_term,
            pph_err_bound=pph_bound,
            cov_bound=C * pph_bound,
            mean_bound=Cp * pph_bound,
            actual_cov_err=cov_err,
            actual_mean_err=mean_err,
            pph_err_actual=pph_err,
            hsv_tail=float(np.sum(model.hsv[model.r:])),
            hankel_rank=model.hankel_rank,
            n_discarded=model.n_discarded,
            chain_holds=bool(chain),
            kappa_infinite=math.isinf(kappa),
            trace_route=route,
            p=self.p,
        )


def certify(problem, model, bundle=None, variant=None, p=2):
    """Bound the posterior errors caused by replacing G with the reduced map of ``model``."""
    if variant is not None and variant != model.variant:
        raise ValueError(f"variant {variant!r} does not match the model ({model.variant!r})")
    return Certifier(problem, p=p).report(model, bundle)
