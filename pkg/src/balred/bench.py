"""Synthetic benchmark: seeded systems and priors, noisy data, rank sweeps, CSV I/O."""

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .balancing import balance
from .bounds import Certifier
from .gramians import check_stable
from .linalg import psd_sqrt_factor, solve_lyapunov
from .lti import LtiSystem, ObservationGrid, SmoothingProblem, forward_map
from .posterior import GaussianPrior

__all__ = [
    "ConfigError",
    "SweepError",
    "BenchConfig",
    "SweepRow",
    "CSV_HEADER",
    "gen_stable_system",
    "gen_empirical_prior",
    "gen_data",
    "build_problem",
    "run_sweep",
    "rows_to_csv",
    "rows_from_csv",
    "thread_count",
]

CSV_HEADER = ("lambda", "variant", "rank", "mean_err", "cov_err", "mean_bound", "cov_bound",
              "pph_err", "pph_bound", "kappa", "C", "Cprime", "hsv_tail")
NOISE_STD_RANGE = (5e-4, 2.5e-3)
PRIOR_INPUTS = 3


class ConfigError(ValueError):
    pass


class SweepError(RuntimeError):
    def __init__(self, lam, rank, variant, cause):
        super().__init__(f"lambda={lam!r} rank={rank} variant={variant}: "
                         f"{type(cause).__name__}: {cause}")
        self.lam = lam
        self.rank = rank
        self.variant = variant


# ---------------------------------------------------------------------------
# generators

def gen_stable_system(d, d_out, seed):
    """Random system with spectral abscissa at most -0.5.

    ``A = M - (|lambda_max(sym M)| + 0.5) I`` with ``M ~ N(0, 1/d)``; noise
    standard deviations are log-uniform in ``[5e-4, 2.5e-3]``.
    """
    if d < 2 or d_out < 1:
        raise ValueError("need d >= 2 and d_out >= 1")
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((d, d)) / math.sqrt(d)
    shift = abs(np.linalg.eigvalsh(0.5 * (M + M.T))[-1]) + 0.5
    A = M - shift * np.eye(d)
    C = rng.standard_normal((d_out, d))
    lo, hi = np.log(NOISE_STD_RANGE)
    std = np.exp(rng.uniform(lo, hi, size=d_out))
    return LtiSystem(A, C, np.diag(std ** 2))


def gen_empirical_prior(system, n_samples, seed):
    """Zero-mean prior from the empirical covariance of ``n_samples`` draws.

    The draws come from ``N(0, P)`` with ``A P + P A^T + B B^T = 0`` for a
    random ``B`` with three columns. The factor has ``min(n_samples - 1, d)``
    columns, so the prior is singular whenever ``n_samples <= d``.
    """
    if n_samples < 2:
        raise ValueError("need at least two samples for an empirical covariance")
    check_stable(system)
    rng = np.random.default_rng(seed)
    B = rng.standard_normal((system.d, PRIOR_INPUTS))
    P = solve_lyapunov(system.A, B @ B.T, "reachability")
    F = psd_sqrt_factor(P)
    samples = F @ rng.standard_normal((F.shape[1], n_samples))
    centered = samples - samples.mean(axis=1, keepdims=True)
    U, s, _ = np.linalg.svd(centered / math.sqrt(n_samples - 1), full_matrices=False)
    k = min(n_samples - 1, system.d)
    return GaussianPrior.centered(U[:, :k] * s[:k])


def gen_data(system, grid, true_p, seed, noise_scale=1.0):
    """``G p + eps`` with i.i.d. ``eps_k ~ N(0, noise_scale^2 Gamma_eps)``."""
    clean = forward_map(system, grid) @ np.asarray(true_p, dtype=float).reshape(-1)
    if noise_scale == 0:
        return clean
    rng = np.random.default_rng(seed)
    chol = np.linalg.cholesky(system.Gamma_eps)
    eps = rng.standard_normal((grid.n, system.d_out)) @ chol.T
    return clean + noise_scale * eps.reshape(-1)


# ---------------------------------------------------------------------------
# configuration

def _parse_list(text, conv):
    out = []
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if ".." in item and conv is int:
            a, b = item.split("..")
            out.extend(range(int(a), int(b) + 1))
        else:
            out.append(conv(item))
    return tuple(out)


def _parse_bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class BenchConfig:
    """Sweep settings; ``ranks`` accepts ``a..b`` ranges in config files."""

    d: int = 30
    d_out: int = 3
    n_obs: int = 80
    dt: float = 0.1
    t_end: float = 8.0
    T_horizon: float = 8.5
    prior_samples: int = 10
    lambda_grid: tuple = (0.01, 1.0, 100.0)
    ranks: tuple = tuple(range(1, 30))
    seed: int = 0
    pdbt: bool = True
    pdtlbt: bool = True

    _parsers = {"lambda_grid": lambda s: _parse_list(s, float),
                "ranks": lambda s: _parse_list(s, int),
                "pdbt": _parse_bool, "pdtlbt": _parse_bool}

    def __post_init__(self):
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in self.lambda_grid))
        object.__setattr__(self, "ranks", tuple(int(x) for x in self.ranks))
        self.validate()

    def validate(self):
        if self.d < 2 or self.d_out < 1 or self.n_obs < 1:
            raise ConfigError("need d >= 2, d_out >= 1, n_obs >= 1")
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if abs(self.n_obs * self.dt - self.t_end) > 1e-12 * max(1.0, abs(self.t_end)):
            raise ConfigError(f"n_obs * dt = {self.n_obs * self.dt!r} does not match t_end = {self.t_end!r}")
        if not self.T_horizon > self.t_end:
            raise ConfigError("T_horizon must exceed t_end")
        if self.prior_samples < 2:
            raise ConfigError("prior_samples must be at least 2")
        if not self.lambda_grid or any(not lam > 0 for lam in self.lambda_grid):
            raise ConfigError("lambda_grid must be a non-empty list of positive numbers")
        if not self.ranks or any(r < 1 or r > self.d for r in self.ranks):
            raise ConfigError(f"ranks must lie in 1..d = 1..{self.d}")
        if not (self.pdbt or self.pdtlbt):
            raise ConfigError("enable at least one of pdbt, pdtlbt")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be a 64-bit unsigned integer")

    @property
    def variants(self):
        return tuple(v for v in ("pdbt", "pdtlbt") if getattr(self, v))

    @classmethod
    def from_mapping(cls, values, base=None):
        names = {f.name: f for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                if not isinstance(raw, str):
                    kwargs[key] = raw
                elif key in cls._parsers:
                    kwargs[key] = cls._parsers[key](raw)
                else:
                    kwargs[key] = names[key].type(raw)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {raw!r} ({exc})") from None
        try:
            return replace(base, **kwargs) if base is not None else cls(**kwargs)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def parse(cls, text, overrides=None):
        """Parse flat ``key = value`` lines (``#`` starts a comment)."""
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"line {lineno}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            values[key] = value
        values.update(overrides or {})
        return cls.from_mapping(values)

    @classmethod
    def load(cls, path, overrides=None):
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        return cls.parse(text, overrides)

    def to_text(self):
        lines = []
        for f in fields(self):
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ", ".join(repr(x) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            else:
                v = repr(v)
            lines.append(f"{f.name} = {v}")
        return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# sweep

@dataclass(frozen=True)
class SweepRow:
    lam: float
    variant: str
    rank: int
    mean_err: float
    cov_err: float
    mean_bound: float
    cov_bound: float
    pph_err: float
    pph_bound: float
    kappa: float
    C: float
    Cprime: float
    hsv_tail: float

    def values(self):
        return tuple(getattr(self, f.name) for f in fields(self))


def thread_count():
    """Worker count from ``BALRED_THREADS``; 0 or unset means one worker."""
    raw = os.environ.get("BALRED_THREADS", "").strip()
    if not raw:
        return 1
    n = int(raw)
    if n < 0:
        raise ValueError("BALRED_THREADS must be non-negative")
    return max(n, 1)


def _seeds(seed):
    sys_seed, prior_seed, state_seed, noise_seed = np.random.SeedSequence(seed).spawn(4)
    return sys_seed, prior_seed, state_seed, noise_seed


def build_problem(config, lam, base=None):
    """Smoothing problem for one prior scale ``lam``.

    The system, the empirical prior and the standard-normal draws behind the
    initial state and the noise are shared across scales, so only the prior
    scaling differs between the problems of one sweep.
    """
    if base is None:
        base = _base(config)
    system, prior, z, eps = base
    grid = ObservationGrid.equidistant(config.dt, config.n_obs, config.T_horizon)
    scaled = prior.scaled(lam)
    true_p = scaled.mean + scaled.cov_factor @ z
    data = forward_map(system, grid) @ true_p + eps
    return SmoothingProblem(system, grid, scaled, data)


def _base(config):
    s_sys, s_prior, s_state, s_noise = _seeds(config.seed)
    system = gen_stable_system(config.d, config.d_out, s_sys)
    prior = gen_empirical_prior(system, config.prior_samples, s_prior)
    z = np.random.default_rng(s_state).standard_normal(prior.cov_factor.shape[1])
    grid = ObservationGrid.equidistant(config.dt, config.n_obs, config.T_horizon)
    eps = gen_data(system, grid, np.zeros(system.d), s_noise)
    return system, prior, z, eps


def _sweep_lambda(config, lam, base):
    problem = build_problem(config, lam, base)
    certifier = Certifier(problem)
    rows = []
    for variant in config.variants:
        rank = None
        try:
            realization = balance(problem.system, problem.prior.cov_factor, variant,
                                  config.T_horizon if variant == "pdtlbt" else None)
            for rank in config.ranks:
                # beyond the numerical Hankel rank the rank-m model is already exact
                model, bundle = realization.truncate(min(rank, realization.hankel_rank))
                rep = certifier.report(model, bundle)
                rows.append(SweepRow(lam, variant, rank, rep.actual_mean_err, rep.actual_cov_err,
                                     rep.mean_bound, rep.cov_bound, rep.pph_err_actual,
                                     rep.pph_err_bound, rep.kappa, rep.lipschitz_C,
                                     rep.lipschitz_Cprime, rep.hsv_tail))
        except Exception as exc:
            raise SweepError(lam, rank, variant, exc) from exc
    return rows


def run_sweep(config, workers=None):
    """All ``(lambda, variant, rank)`` rows, sorted by lambda, variant, rank."""
    base = _base(config)
    workers = thread_count() if workers is None else max(int(workers), 1)
    if workers == 1 or len(config.lambda_grid) == 1:
        chunks = [_sweep_lambda(config, lam, base) for lam in config.lambda_grid]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(lambda lam: _sweep_lambda(config, lam, base), config.lambda_grid))
    rows = [row for chunk in chunks for row in chunk]
    return sorted(rows, key=lambda r: (r.lam, r.variant, r.rank))


# ---------------------------------------------------------------------------
# CSV

def _fmt(v):
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(v) for v in row.values()])
    return buf.getvalue()


def rows_from_csv(text):
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if tuple(header) != CSV_HEADER:
        raise ValueError(f"unexpected CSV header {header}")
    out = []
    for rec in reader:
        if not rec:
            continue
        vals = [float(rec[0]), rec[1], int(rec[2])] + [float(x) for x in rec[3:]]
        out.append(SweepRow(*vals))
    return out
