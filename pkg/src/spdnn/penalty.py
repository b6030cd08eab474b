"""Clipped-L1 norm, the sparse penalty built on it, and parameter norms.

The clipped L1 norm of a vector is sum_j min(|theta_j| / tau, 1): linear in
each coordinate up to the clipping threshold tau, flat beyond it.  Scaled by
lambda it is the sparsity penalty added to the empirical risk; lambda = 0
recovers the unpenalized objective.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError

#: magnitudes below this count as zero for the l0 norm (float noise guard)
ZERO_SNAP = 1e-12


@dataclass(frozen=True)
class PenaltyConfig:
    """(lambda, tau) pair; lam = 0 disables the penalty."""

    lam: float
    tau: float

    def __post_init__(self):
        if not (self.tau > 0):
            raise ConfigurationError("tau must be positive")
        if not (self.lam >= 0):
            raise ConfigurationError("lambda must be nonnegative")


def clipped_norm(theta: np.ndarray, tau: float) -> float:
    """sum_j min(|theta_j| / tau, 1)."""
    if not (tau > 0):
        raise ValueError("tau must be positive")
    theta = np.asarray(theta, dtype=np.float64)
    return float(np.minimum(np.abs(theta) / tau, 1.0).sum())


def clipped_norm_subgrad(theta: np.ndarray, tau: float) -> np.ndarray:
    """Chosen subgradient of the clipped norm.

    Coordinate-wise: sign(theta_j)/tau on 0 < |theta_j| <= tau (the kink at
    |theta_j| = tau takes the lower branch), 0 at theta_j = 0 and on the flat
    region |theta_j| > tau.
    """
    if not (tau > 0):
        raise ValueError("tau must be positive")
    theta = np.asarray(theta, dtype=np.float64)
    out = np.sign(theta) / tau
    out[np.abs(theta) > tau] = 0.0
    return out


def penalty_value(theta: np.ndarray, cfg: PenaltyConfig) -> float:
    return cfg.lam * clipped_norm(theta, cfg.tau)


def l0_norm(theta: np.ndarray) -> int:
    """Count coordinates with |theta_j| >= ZERO_SNAP."""
    theta = np.asarray(theta, dtype=np.float64)
    return int(np.count_nonzero(np.abs(theta) >= ZERO_SNAP))


def l1_norm(theta: np.ndarray) -> float:
    return float(np.abs(np.asarray(theta, dtype=np.float64)).sum())


def linf_norm(theta: np.ndarray) -> float:
    theta = np.asarray(theta, dtype=np.float64)
    return float(np.abs(theta).max()) if theta.size else 0.0
