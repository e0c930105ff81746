"""Balanced truncation of prior-driven LTI systems with certified posterior error bounds."""

from .balancing import (
    BalancedRealization,
    ReducedModel,
    TruncatedBundle,
    balance,
    balance_and_truncate,
    reduced_forward_map,
)
from .bounds import BoundReport, Certifier, certify, estimate_kappa, lipschitz_C, lipschitz_Cprime
from .gramians import gramians_infinite, gramians_limited
from .lti import LtiSystem, ObservationGrid, SmoothingProblem, forward_map, obs_covariance
from .posterior import GaussianPosterior, GaussianPrior, approx_posterior, posterior

__version__ = "0.1.0"

__all__ = [
    "BalancedRealization",
    "BoundReport",
    "Certifier",
    "GaussianPosterior",
    "GaussianPrior",
    "LtiSystem",
    "ObservationGrid",
    "ReducedModel",
    "SmoothingProblem",
    "TruncatedBundle",
    "approx_posterior",
    "balance",
    "balance_and_truncate",
    "certify",
    "estimate_kappa",
    "forward_map",
    "gramians_infinite",
    "gramians_limited",
    "lipschitz_C",
    "lipschitz_Cprime",
    "obs_covariance",
    "posterior",
    "reduced_forward_map",
]
