"""Loss functions with declared Lipschitz/bound constants, and empirical risk.

Built-in losses are L1 and L2 on a declared bounded working box: predictions
live in [-F, F] (from the architecture's output bound) and targets in
[-domain_bound, domain_bound].  The box is what makes the Lipschitz constant
of the squared loss finite and checkable.  New losses can be registered with
their evaluation, prediction-gradient, and constants callables and then used
anywhere a built-in is.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .data import SupervisedSet
from .errors import ConfigurationError, NumericError
from .network import Architecture, Network, forward_batch


class LossFunctions(NamedTuple):
    eval: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad: Callable[[np.ndarray, np.ndarray], np.ndarray]  # d loss / d pred
    constants: Callable[[float, float], tuple[float, float]]  # (F, Y) -> (K, M)


def _l1_constants(F: float, Y: float) -> tuple[float, float]:
    return 1.0, F + Y


def _l2_constants(F: float, Y: float) -> tuple[float, float]:
    # |d/du (u - y)^2| <= 2(F + Y) on the box; sup of the loss is (F + Y)^2
    return 2.0 * (F + Y), (F + Y) ** 2


_REGISTRY: dict[str, LossFunctions] = {
    "l1": LossFunctions(
        eval=lambda p, y: np.abs(p - y),
        grad=lambda p, y: np.sign(p - y),
        constants=_l1_constants,
    ),
    "l2": LossFunctions(
        eval=lambda p, y: (p - y) ** 2,
        grad=lambda p, y: 2.0 * (p - y),
        constants=_l2_constants,
    ),
}


def register_loss(name: str, eval_fn, grad_fn, constants_fn) -> None:
    """Register a user loss under ``name`` (callables must be vectorized)."""
    _REGISTRY[name] = LossFunctions(eval_fn, grad_fn, constants_fn)


def loss_functions(name: str) -> LossFunctions:
    try:
        return _REGISTRY[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown loss {name!r}; registered: {sorted(_REGISTRY)}") from None


@dataclass(frozen=True)
class LossKind:
    """A loss selected by name plus the radius of the target domain."""

    name: str = "l2"
    domain_bound: float = 1.0

    def __post_init__(self):
        loss_functions(self.name)
        if not (self.domain_bound >= 0):
            raise ConfigurationError("domain_bound must be nonnegative")


@dataclass(frozen=True)
class RiskEstimate:
    value: float
    n: int


def loss_eval(kind: LossKind, pred: float, y: float) -> float:
    """Pointwise loss value; rejects non-finite inputs."""
    if not (np.isfinite(pred) and np.isfinite(y)):
        raise NumericError(f"non-finite loss inputs: pred={pred}, y={y}")
    return float(loss_functions(kind.name).eval(np.float64(pred), np.float64(y)))


def empirical_risk(net: Network, data: SupervisedSet, kind: LossKind) -> RiskEstimate:
    """Mean loss of the network over the sample."""
    if len(data) == 0:
        raise ValueError("empirical risk of an empty sample is undefined")
    preds = forward_batch(net, data.X)
    values = loss_functions(kind.name).eval(preds, data.y)
    return RiskEstimate(float(np.mean(values)), len(data))


def lipschitz_constants(kind: LossKind, arch: Architecture) -> tuple[float, float, float]:
    """Return (K, M, G): loss Lipschitz constant, loss bound, loss-class constant.

    K is w.r.t. the pair norm |u - u'| + |y - y'| on the working box
    {|pred| <= F} x {|y| <= domain_bound}; M is the sup of the loss there;
    G, the Lipschitz constant of h -> loss(h(.), .) in sup-norm, equals K.
    """
    K, M = loss_functions(kind.name).constants(arch.output_bound, kind.domain_bound)
    return K, M, K
