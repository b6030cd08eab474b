"""Simulators for the autoregressive data generating processes.

Two built-in nonlinear ARX-ARCH(1) processes drive the experiments:

  Y_t   = f(Y_{t-1}, Y_{t-2}; C_{t-1}) + e_t,   e_t = xi_t sqrt(phi0 + phi1 e_{t-1}^2)
  C_t   = alpha0 + alpha1 C_{t-1} + eta_t       (AR(1) exogenous covariate)

dgp1 uses a threshold autoregression with a nonlinear covariate term, dgp2 an
exponential autoregression (its f ignores the second lag).  Innovations are
uniform on [-a, a] rescaled to unit variance, so their support is
[-sqrt(3), sqrt(3)].  All simulators are pure functions of (spec, n, seed).
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .data import SupervisedSet
from .errors import ConfigurationError, DivergenceError, StabilityError
from .rng import make_rng

DGP_KINDS = ("dgp1", "dgp2", "custom")


@dataclass(frozen=True)
class DgpSpec:
    """Process parameters; defaults reproduce the simulation-study settings."""

    kind: str = "dgp1"
    phi0: float = 0.25
    phi1: float = 0.1
    alpha0: float = 0.5
    alpha1: float = 0.5
    innovation_halfwidth: float = 2.0
    burn_in: int = 1000
    standardize: bool = True   # rescale uniform innovations to unit variance
    zero_noise: bool = False   # test hook: xi = eta = 0
    custom_f: Optional[Callable[[float, float, float], float]] = None

    def __post_init__(self):
        if self.kind not in DGP_KINDS:
            raise ConfigurationError(f"unknown DGP kind {self.kind!r}")
        if self.kind == "custom" and self.custom_f is None:
            raise ConfigurationError("custom DGP requires custom_f")
        if not (self.phi0 > 0):
            raise ConfigurationError("phi0 must be positive")
        if not (self.phi1 >= 0):
            raise ConfigurationError("phi1 must be nonnegative")
        if not (abs(self.alpha1) < 1):
            raise StabilityError(f"covariate AR(1) needs |alpha1| < 1, got {self.alpha1}")
        if not (self.innovation_halfwidth > 0):
            raise ConfigurationError("innovation_halfwidth must be positive")
        if self.burn_in < 0:
            raise ConfigurationError("burn_in must be nonnegative")


@dataclass(frozen=True)
class Trajectory:
    """A simulated path: targets, covariate, and retained diagnostics."""

    y: np.ndarray
    cov: np.ndarray
    seed: int
    eps: np.ndarray = None   # ARCH error series (diagnostics)
    xi: np.ndarray = None    # standardized innovations (diagnostics)

    def __post_init__(self):
        if self.y.shape != self.cov.shape:
            raise ConfigurationError("y and cov must have equal length")
        if not (np.isfinite(self.y).all() and np.isfinite(self.cov).all()):
            raise DivergenceError("trajectory contains non-finite values")

    def __len__(self) -> int:
        return self.y.shape[0]


@dataclass(frozen=True)
class StabilityReport:
    alpha1y_f: float
    alpha2y_f: float
    alpha1y_M: float
    alpha2y_M: float
    alpha1_cov: float
    total: float

    @property
    def stable(self) -> bool:
        return self.total < 1.0


def std_uniform(halfwidth: float, rng, size=None):
    """Uniform[-a, a] rescaled to zero mean and unit variance.

    Var(U) = a^2/3 for U ~ U[-a, a], so the factor is sqrt(3)/a and the
    support of the output is [-sqrt(3), sqrt(3)].
    """
    if not (halfwidth > 0):
        raise ValueError("halfwidth must be positive")
    rng = make_rng(rng)
    u = rng.uniform(-halfwidth, halfwidth, size=size)
    return u * (math.sqrt(3.0) / halfwidth)


def _innovations(spec: DgpSpec, count: int, rng) -> np.ndarray:
    if spec.zero_noise:
        return np.zeros(count)
    if spec.standardize:
        return std_uniform(spec.innovation_halfwidth, rng, size=count)
    return rng.uniform(-spec.innovation_halfwidth, spec.innovation_halfwidth, size=count)


def simulate_covariate(spec: DgpSpec, n: int, rng) -> np.ndarray:
    """AR(1) covariate started at its stationary mean, burn-in discarded."""
    if not (abs(spec.alpha1) < 1):
        raise StabilityError(f"|alpha1| must be < 1, got {spec.alpha1}")
    rng = make_rng(rng)
    total = spec.burn_in + n
    eta = _innovations(spec, total, rng)
    out = np.empty(total)
    x = spec.alpha0 / (1.0 - spec.alpha1)
    a0, a1 = spec.alpha0, spec.alpha1
    for t in range(total):
        x = a0 + a1 * x + eta[t]
        out[t] = x
    return out[spec.burn_in:]


def target_f(kind: str, y1, y2, x):
    """Regression function of the built-in DGPs (dgp2 ignores y2)."""
    if kind == "dgp1":
        return (-0.75 + 0.1 * np.maximum(y1, 0.0) - 0.2 * np.minimum(y1, 0.0)
                + 0.15 * y2 + 0.4 * np.sqrt(1.0 + 0.5 * x ** 2))
    if kind == "dgp2":
        return 0.4 + (0.2 - 0.15 * np.exp(-(y1 ** 2))) * y1 - 0.5 / (1.0 + np.abs(x))
    raise ConfigurationError(f"target_f defined for dgp1/dgp2, got {kind!r}")


def target_fn(spec: DgpSpec) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized oracle predictor X -> f(X) on lag-embedded rows (y1, y2, x)."""
    if spec.kind == "custom":
        f = spec.custom_f
        return lambda X: np.array([f(r[0], r[1], r[2]) for r in np.atleast_2d(X)])
    kind = spec.kind
    return lambda X: target_f(kind, *np.atleast_2d(X).T[:3])


def default_lipschitz(kind: str) -> tuple[float, float, float]:
    """Exact Lipschitz coefficients (a1, a2, ax) of the built-in targets.

    dgp1: slopes 0.1/-0.2 on the threshold part give a1 = 0.2; a2 = 0.15;
    the covariate term has derivative 0.4 * 0.5 x / sqrt(1 + 0.5 x^2) with
    sup 0.4 sqrt(0.5).  dgp2: a1 = max over u = y^2 of
    0.2 + e^{-u} (0.3 u - 0.15), attained at u = 1.5; a2 = 0; ax = 0.5.
    """
    if kind == "dgp1":
        return 0.2, 0.15, 0.4 * math.sqrt(0.5)
    if kind == "dgp2":
        return 0.2 + 0.3 * math.exp(-1.5), 0.0, 0.5
    raise ConfigurationError(f"no default Lipschitz coefficients for {kind!r}")


def check_stability(spec: DgpSpec, lipschitz_f: tuple[float, float, float]) -> StabilityReport:
    """Contraction check for the ARX-ARCH recursion.

    With (a1, a2, ax) a Lipschitz triple of f, the volatility map inherits
    a1_M = sqrt(phi1) (1 + a1) and a2_M = sqrt(phi1) a2, and the process is
    stable when max(alpha1, a1 + a1_M) + a2 + a2_M < 1.
    """
    a1, a2, _ = lipschitz_f
    if a1 < 0 or a2 < 0:
        raise ValueError("Lipschitz coefficients must be nonnegative")
    sq = math.sqrt(spec.phi1)
    a1_M = sq * (1.0 + a1)
    a2_M = sq * a2
    total = max(abs(spec.alpha1), a1 + a1_M) + a2 + a2_M
    return StabilityReport(a1, a2, a1_M, a2_M, abs(spec.alpha1), total)


def simulate_arx_arch(spec: DgpSpec, n: int, rng) -> Trajectory:
    """Joint recursion of covariate, ARCH error, and target from zero states.

    The first ``burn_in`` steps are discarded.  An unstable built-in spec
    triggers a warning, not an abort.
    """
    if spec.kind in ("dgp1", "dgp2"):
        report = check_stability(spec, default_lipschitz(spec.kind))
        if not report.stable:
            warnings.warn(
                f"{spec.kind} parameters violate the stability condition "
                f"(total = {report.total:.3f} >= 1); simulating anyway",
                RuntimeWarning)

    seed = rng if isinstance(rng, (int, np.integer)) else -1
    gen = make_rng(rng)
    total = spec.burn_in + n
    xi = _innovations(spec, total, gen)
    eta = _innovations(spec, total, gen)

    if spec.kind == "dgp1":
        def f(y1, y2, x):
            return (-0.75 + 0.1 * max(y1, 0.0) - 0.2 * min(y1, 0.0)
                    + 0.15 * y2 + 0.4 * math.sqrt(1.0 + 0.5 * x * x))
    elif spec.kind == "dgp2":
        def f(y1, y2, x):
            return 0.4 + (0.2 - 0.15 * math.exp(-(y1 * y1))) * y1 - 0.5 / (1.0 + abs(x))
    else:
        f = spec.custom_f

    y = np.empty(total)
    cov = np.empty(total)
    eps_arr = np.empty(total)
    phi0, phi1 = spec.phi0, spec.phi1
    a0, a1 = spec.alpha0, spec.alpha1
    sqrt = math.sqrt
    y1 = y2 = 0.0
    eps_prev = 0.0
    x_prev = a0 / (1.0 - a1)
    for t in range(total):
        eps_t = xi[t] * sqrt(phi0 + phi1 * eps_prev * eps_prev)
        y_t = f(y1, y2, x_prev) + eps_t
        if not (math.isfinite(y_t)):
            raise DivergenceError(f"simulation diverged at step {t}", epoch=t)
        x_t = a0 + a1 * x_prev + eta[t]
        y[t] = y_t
        cov[t] = x_t
        eps_arr[t] = eps_t
        y2, y1 = y1, y_t
        eps_prev = eps_t
        x_prev = x_t
    b = spec.burn_in
    return Trajectory(y=y[b:], cov=cov[b:], seed=int(seed), eps=eps_arr[b:], xi=xi[b:])


def make_supervised(traj: Trajectory, lags: int = 2) -> SupervisedSet:
    """Lag-embed a trajectory into ((Y_{t-1}, Y_{t-2}, C_{t-1}), Y_t) pairs."""
    n = len(traj)
    if n <= lags:
        raise ValueError(f"series of length {n} too short for {lags} lags")
    if lags != 2:
        raise ConfigurationError("only the 2-lag embedding is supported")
    X = np.column_stack([traj.y[1:-1], traj.y[:-2], traj.cov[1:-1]])
    return SupervisedSet(X, traj.y[2:])


def write_trajectory_csv(traj: Trajectory, path) -> None:
    """CSV with a seed comment header and columns t, y, x."""
    with open(path, "w", newline="", encoding="ascii") as fh:
        fh.write(f"# seed={traj.seed}\n")
        writer = csv.writer(fh)
        writer.writerow(["t", "y", "x"])
        for t in range(len(traj)):
            writer.writerow([t + 1, repr(float(traj.y[t])), repr(float(traj.cov[t]))])
