"""Numeric evaluation of the theoretical quantities behind the estimator.

Everything here is closed-form arithmetic plus one bisection: the covering
number bound for the constrained network class, the uniform concentration
bound, the generalization thresholds eps(n, eta, nu0) (root of a strictly
increasing phi) and eps'(n, eta, nu0), the two tuning-schedule regimes for
(lambda_n, tau_n, rho_n), and the smoothness-driven rate exponents.  All
order constants are set to 1; a multiplier is exposed for sensitivity runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from .errors import BelowThresholdError, RegimeError, RootBracketError

PSI_ONE_ONE = {"theta": 2.0, "eta": 2.0, "kappa": 1.0, "lambda": 1.5}

# the admissible-n search is logarithmic, so the cap only guards pathologies
_N0_SCAN_CAP = 10 ** 30


@dataclass(frozen=True)
class BoundInputs:
    """Constants feeding the concentration/generalization calculators."""

    n: int
    eta: float            # confidence level, in (0, 1)
    nu0: float            # exponent, in (0, 1)
    M: float              # bound of the loss over the class
    theta_inf: float = 0.0  # bound on the theta-infinity dependence coefficients
    G: float = 1.0        # Lipschitz constant of h -> loss(h(.), .)
    C_sigma: float = 1.0  # activation Lipschitz constant
    L: int = 1            # depth
    N: int = 1            # width
    B: float = 1.0        # weight bound
    S: float = 1.0        # sparsity level

    def __post_init__(self):
        if not (0 < self.eta < 1):
            raise ValueError("eta must lie in (0, 1)")
        if not (0 < self.nu0 < 1):
            raise ValueError("nu0 must lie in (0, 1)")
        for name in ("M", "G", "C_sigma", "B"):
            if not (getattr(self, name) > 0):
                raise ValueError(f"{name} must be positive")
        if self.theta_inf < 0 or self.S < 0 or self.L < 1 or self.N < 1 or self.n < 1:
            raise ValueError("invalid bound inputs")


@dataclass(frozen=True)
class DependenceParams:
    """Weak-dependence decay constants (L1, L2, mu) and the Psi variant."""

    psi_kind: str = "theta"
    L1: float = 1.0
    L2: float = 1.0
    mu: float = 0.0

    def __post_init__(self):
        if self.psi_kind not in PSI_ONE_ONE:
            raise ValueError(f"psi_kind must be one of {sorted(PSI_ONE_ONE)}")
        if self.L1 < 0 or self.L2 < 0 or self.mu < 0:
            raise ValueError("L1, L2, mu must be nonnegative")

    @property
    def psi11(self) -> float:
        return PSI_ONE_ONE[self.psi_kind]


@dataclass(frozen=True)
class ScheduleParams:
    """Exponents and constants of the tuning schedules."""

    nu1: float = 0.01
    nu2: float = 0.01
    nu3: float = 1.0
    nu4: float = 0.3
    nu5: float = 0.66
    nu6: float = 0.16
    K_ell: float = 1.0
    C1n: float = 1.0
    C2n: float = 1.0

    def __post_init__(self):
        if any(getattr(self, f"nu{i}") < 0 for i in range(1, 7)):
            raise ValueError("exponents must be nonnegative")
        if self.K_ell <= 0 or self.C1n <= 0 or self.C2n <= 0:
            raise ValueError("K_ell, C1n, C2n must be positive")


def log_covering_bound(eps: float, L: int, N: int, B: float, S: float,
                       G: float = 1.0, C_sigma: float = 1.0) -> float:
    """log of the covering-number bound of the class at radius eps / 4G.

    Equals 2 L (S + 1) log(4 G C_sigma L (N + 1) (B v 1) / eps); may be
    negative for very large eps and is returned as-is.
    """
    if not (eps > 0):
        raise ValueError("eps must be positive")
    return 2.0 * L * (S + 1.0) * math.log(4.0 * G * C_sigma * L * (N + 1.0) * max(B, 1.0) / eps)


def concentration_bound(inputs: BoundInputs, eps: float) -> float:
    """Uniform deviation probability bound, clipped to [0, 1]."""
    if not (eps > 0):
        raise ValueError("eps must be positive")
    log_cover = log_covering_bound(eps, inputs.L, inputs.N, inputs.B, inputs.S,
                                   inputs.G, inputs.C_sigma)
    exponent = (log_cover - inputs.n ** inputs.nu0 * eps
                + inputs.n ** (2.0 * inputs.nu0 - 1.0) * (inputs.M + inputs.theta_inf) ** 2 / 2.0)
    if exponent >= 0.0:
        return 1.0
    return math.exp(exponent)


def _c1(inputs: BoundInputs) -> float:
    return 2.0 * inputs.L * (inputs.S + 1.0) * math.log(
        4.0 * inputs.G * inputs.C_sigma * inputs.L * (inputs.N + 1.0) * max(inputs.B, 1.0))


def _phi(inputs: BoundInputs, eps: float) -> float:
    """Strictly increasing on (0, 2M]; its root is the deviation threshold."""
    c0 = inputs.n ** inputs.nu0
    drift = inputs.n ** (2.0 * inputs.nu0 - 1.0) * (inputs.M + inputs.theta_inf) ** 2 / 2.0
    return (2.0 * inputs.L * (inputs.S + 1.0) * math.log(eps) + c0 * eps - drift
            + math.log(inputs.eta) - _c1(inputs))


def _n0_condition(inputs: BoundInputs, n: float) -> bool:
    lhs = (inputs.L * (inputs.S + 1.0) * inputs.nu0 * math.log(n)
           / (2.0 * inputs.M * n ** (inputs.nu0 / 2.0))
           + (inputs.M + inputs.theta_inf) ** 2 / (4.0 * inputs.M * n))
    return lhs < 0.5


def _phi_2m_condition(inputs: BoundInputs, n: float) -> bool:
    lhs = n ** (2.0 * inputs.nu0) * (
        1.0 - (inputs.M + inputs.theta_inf) ** 2 / (4.0 * inputs.M * n))
    rhs = (_c1(inputs) - 2.0 * inputs.L * (inputs.S + 1.0) * math.log(2.0 * inputs.M)
           - math.log(inputs.eta)) / (2.0 * inputs.M)
    return lhs > rhs


def _n0_admissible(inputs: BoundInputs, n: int) -> bool:
    """True when the log-term condition holds at n and at every larger n.

    The log term A log(n) / n^{nu0/2} peaks at n = e^{2/nu0} with value
    L (S + 1) / (M e); if adding the 1/n term at the current n stays below
    1/2, no larger n can violate the condition.  Otherwise the condition
    must be checked on the decreasing tail beyond the peak.
    """
    log_term_max = inputs.L * (inputs.S + 1.0) / (inputs.M * math.e)
    drift_term = (inputs.M + inputs.theta_inf) ** 2 / (4.0 * inputs.M * n)
    if log_term_max + drift_term < 0.5:
        return True
    peak = math.exp(2.0 / inputs.nu0)
    return n >= peak and _n0_condition(inputs, n)


def sample_size_thresholds(inputs: BoundInputs) -> dict:
    """Smallest admissible sample sizes for the generalization threshold.

    ``n0`` has no closed form: the smallest n from which the log-term
    condition holds for every larger sample size is located by exponential
    search plus bisection over the monotone admissibility predicate.
    ``n_closed`` is the closed-form (.)^{1/(2 nu0)} sample-size expression;
    the overall requirement is n > max of the two.
    """
    hi = 1
    while hi <= _N0_SCAN_CAP and not _n0_admissible(inputs, hi):
        hi *= 2
    if hi > _N0_SCAN_CAP:
        raise BelowThresholdError(
            f"no admissible n0 found below {_N0_SCAN_CAP}",
            thresholds={"scan_cap": _N0_SCAN_CAP})
    lo = hi // 2  # not admissible (or 0)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if mid >= 1 and _n0_admissible(inputs, mid):
            hi = mid
        else:
            lo = mid
    n0 = hi - 1  # reported so that the condition holds for all n > n0
    c1 = _c1(inputs)
    inner = (c1 - 2.0 * inputs.L * (inputs.S + 1.0) * math.log(2.0 * inputs.M)
             - math.log(inputs.eta)) / inputs.M
    n_closed = max(inner, 0.0) ** (1.0 / (2.0 * inputs.nu0))
    return {"n0": n0, "n_closed": n_closed, "required": max(float(n0), n_closed)}


def generalization_epsilon(inputs: BoundInputs) -> tuple[float, float]:
    """Return (eps1, eps_prime): the phi-root and the closed-form threshold.

    eps1 is the unique root of phi on (0, 2M), found by bisection; the
    contract eps1 < 2M / n^{nu0/2} is asserted.  eps_prime is
    (M + theta_inf)^2 / (2 n^{1-nu0}) + log(1/eta) / n^{nu0}.
    """
    thresholds = sample_size_thresholds(inputs)
    cap = 2.0 * inputs.M / inputs.n ** (inputs.nu0 / 2.0)
    failing = []
    if not (inputs.n > thresholds["n0"]):
        failing.append("n0")
    if not (inputs.n > thresholds["n_closed"]):
        failing.append("n_closed")
    if not _phi_2m_condition(inputs, inputs.n):
        failing.append("phi(2M) > 0")
    # the closed-form conditions alone do not force the root below the cap
    # when nu0 > 2/3 (the drift term outgrows the cap term), so positivity
    # of phi at the cap is checked directly
    if not (_phi(inputs, cap) > 0.0):
        failing.append("phi(2M/n^{nu0/2}) > 0")
    if failing:
        raise BelowThresholdError(
            f"n = {inputs.n} below the admissible sample size "
            f"(needs n > {thresholds['required']:.6g}); failing: {failing}",
            n=inputs.n, thresholds=thresholds, failing=failing)

    two_m = 2.0 * inputs.M
    lo = two_m * 1e-300
    hi = two_m
    if _phi(inputs, hi) <= 0.0:
        raise RootBracketError(f"phi(2M) = {_phi(inputs, hi):.6g} <= 0; no sign change")
    if _phi(inputs, lo) >= 0.0:
        raise RootBracketError("phi positive at the lower bracket end")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _phi(inputs, mid) < 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-13:
            break
    eps1 = 0.5 * (lo + hi)

    if not (eps1 < cap):
        raise RootBracketError(
            f"root {eps1:.6g} violates the bound {cap:.6g}; inputs outside the admissible regime")

    eps_prime = ((inputs.M + inputs.theta_inf) ** 2 / (2.0 * inputs.n ** (1.0 - inputs.nu0))
                 + math.log(1.0 / inputs.eta) / inputs.n ** inputs.nu0)
    return eps1, eps_prime


@dataclass(frozen=True)
class RhoN:
    value: float
    exponent: float
    C1n: float
    C2n: float


def rho_from_constants(C1n: float, C2n: float, mu: float, n: float) -> float:
    """rho_n = (C1n / (2 C2n^{1/(mu+2)}))^{(mu+2)/(2mu+3)} / n^{(mu+1)/(2mu+3)}."""
    if C1n <= 0 or C2n <= 0 or n <= 0:
        raise ValueError("C1n, C2n, n must be positive")
    num = (C1n / (2.0 * C2n ** (1.0 / (mu + 2.0)))) ** ((mu + 2.0) / (2.0 * mu + 3.0))
    return num / n ** ((mu + 1.0) / (2.0 * mu + 3.0))


def rho_n_weak_dependence(dep: DependenceParams, M_n: float, n: float) -> RhoN:
    """Decay radius of the psi-weak-dependence regime, plus its constants.

    C1n = 4 M^2 Psi(1,1) L1 and C2n = 2 M L2 max(2^{3+mu} / Psi(1,1), 1).
    """
    if M_n <= 0:
        raise ValueError("M_n must be positive")
    psi = dep.psi11
    C1n = 4.0 * M_n ** 2 * psi * dep.L1
    C2n = 2.0 * M_n * dep.L2 * max(2.0 ** (3.0 + dep.mu) / psi, 1.0)
    exponent = (dep.mu + 1.0) / (2.0 * dep.mu + 3.0)
    return RhoN(rho_from_constants(C1n, C2n, dep.mu, n), exponent, C1n, C2n)


def lambda_schedule(n: float, nu3: float, nu4: float, scale: float = 1.0) -> float:
    """lambda_n = scale (log n)^{nu3} / n^{nu4} (unit order constant)."""
    if n <= 1:
        raise ValueError("n must exceed 1")
    return scale * math.log(n) ** nu3 / n ** nu4


@dataclass(frozen=True)
class RegimeCheck:
    constraint: str
    satisfied: bool
    margin: float


def validate_schedule(regime: str, params: ScheduleParams,
                      dep: DependenceParams) -> list[RegimeCheck]:
    """Raw exponent-constraint checks for a regime, without raising."""
    checks = []
    if regime == "psi":
        bound = 1.0 / (dep.mu + 2.0)
        total = params.nu1 + params.nu2 + params.nu4
        checks.append(RegimeCheck(
            f"nu1 + nu2 + nu4 < 1/(mu + 2) = {bound:.6g}", total < bound, bound - total))
    elif regime == "theta_inf":
        total = params.nu4 + 2.0 * params.nu6 + params.nu1 + params.nu2
        checks.append(RegimeCheck(
            f"nu4 + 2 nu6 + nu1 + nu2 < nu5 = {params.nu5:.6g}",
            total < params.nu5, params.nu5 - total))
        cap = (1.0 - params.nu5) / 2.0
        checks.append(RegimeCheck(
            f"nu6 < (1 - nu5)/2 = {cap:.6g}", params.nu6 < cap, cap - params.nu6))
    else:
        raise ValueError(f"regime must be 'psi' or 'theta_inf', got {regime!r}")
    return checks


@dataclass(frozen=True)
class Schedule:
    lambda_n: float
    tau_n_max: float
    rho_n: float
    checks: tuple[RegimeCheck, ...]


def schedule(regime: str, params: ScheduleParams, dep: DependenceParams,
             arch, n: float, lambda_scale: float = 1.0) -> Schedule:
    """Tuning schedule (lambda_n, tau_n upper bound, rho_n) for a regime.

    lambda_n = lambda_scale (log n)^{nu3} / n^{nu4};
    rho_n = n^{-2 nu6} (theta_inf regime) or the dependence-constant decay (psi);
    tau_n_max = rho_n / (4 K_ell (L+1) ((N+1) B)^{L+1}) with (L, N, B) from
    the architecture.
    """
    checks = validate_schedule(regime, params, dep)
    for check in checks:
        if not check.satisfied:
            raise RegimeError(f"violated: {check.constraint} "
                              f"(margin {check.margin:.6g})")
    lambda_n = lambda_schedule(n, params.nu3, params.nu4, lambda_scale)
    if regime == "theta_inf":
        rho = 1.0 / n ** (2.0 * params.nu6)
    else:
        rho = rho_from_constants(params.C1n, params.C2n, dep.mu, n)
    L, N, B = arch.depth, arch.max_width, arch.weight_bound
    tau_max = rho / (4.0 * params.K_ell * (L + 1.0) * ((N + 1.0) * B) ** (L + 1.0))
    return Schedule(lambda_n, tau_max, rho, tuple(checks))


@dataclass(frozen=True)
class HolderRate:
    exponent_approx: float  # nu4 / (1 + d/s), from the approximation term
    exponent_tail: float    # 2 nu6, from the dependence tail
    overall: float          # min of the two (the slower term dominates)
    nu1: float
    nu2: float
    log_power: float        # power of the log factor on the approximation term
    rate_string: str


def holder_rate(s: float, d: int, nu3: float, nu4: float, nu6: float) -> HolderRate:
    """Rate exponents when the target is s-smooth on d-dimensional inputs.

    Also returns the width/weight growth exponents nu1 = d nu4 / (s (1 + d/s))
    and nu2 = 4 d nu4 / ((s + 1)(1 + d/s)) implied by the approximation.
    """
    if s <= 0 or d < 1:
        raise ValueError("need smoothness s > 0 and input dimension d >= 1")
    ratio = 1.0 + d / s
    exponent_approx = nu4 / ratio
    exponent_tail = 2.0 * nu6
    nu1 = d * nu4 / (s * ratio)
    nu2 = 4.0 * d * nu4 / ((s + 1.0) * ratio)
    overall = min(exponent_approx, exponent_tail)
    rate_string = (f"(log n)^{nu3 + 1:g} / n^{exponent_approx:.6g} "
                   f"v 1 / n^{exponent_tail:.6g}")
    return HolderRate(exponent_approx, exponent_tail, overall, nu1, nu2,
                      nu3 + 1.0, rate_string)
