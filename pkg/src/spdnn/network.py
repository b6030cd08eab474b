"""Feedforward network class: constrained MLPs with truncated output.

A network is a chain of affine maps with an elementwise 1-Lipschitz
activation between them and a linear output unit whose value is hard-clamped
to [-F, F].  Weight matrices are stored with shape (fan_in, fan_out) so a
batch forward pass is ``X @ W + b``.  The canonical parameter vector
concatenates, layer by layer, the column-major vectorization of each weight
matrix followed by its bias.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, ShapeError
from .rng import make_rng


@dataclass(frozen=True)
class Activation:
    name: str
    fn: Callable[[np.ndarray], np.ndarray]
    deriv: Callable[[np.ndarray], np.ndarray]  # takes pre-activation values
    lipschitz: float


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_deriv(z):
    # subgradient 0 at exactly 0; bool array multiplies like a 0/1 mask
    return z > 0.0


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _sigmoid_deriv(z):
    s = _sigmoid(z)
    return s * (1.0 - s)


def _tanh_deriv(z):
    t = np.tanh(z)
    return 1.0 - t * t


ACTIVATIONS: dict[str, Activation] = {
    "relu": Activation("relu", _relu, _relu_deriv, 1.0),
    "sigmoid": Activation("sigmoid", _sigmoid, _sigmoid_deriv, 0.25),
    "tanh": Activation("tanh", np.tanh, _tanh_deriv, 1.0),
}

INIT_SCHEMES = ("glorot", "zero")


@dataclass(frozen=True)
class Architecture:
    """Constraint tuple (depth, widths, weight bound, output bound, sparsity).

    ``widths`` is the full vector (p_0, ..., p_{L+1}) with p_0 the input
    dimension and p_{L+1} = 1.  ``weight_bound`` caps the sup-norm of the
    parameter vector, ``output_bound`` the sup-norm of the network output,
    and ``sparsity`` (optional) the number of nonzero parameters.  Bounds
    are validated and reported by :func:`check_constraints`, not projected
    during training; the defaults are large enough to be inert.
    """

    widths: tuple[int, ...]
    weight_bound: float = 1e3
    output_bound: float = 1e3
    sparsity: Optional[int] = None

    def __post_init__(self):
        widths = tuple(int(w) for w in self.widths)
        object.__setattr__(self, "widths", widths)
        if len(widths) < 3:
            raise ConfigurationError("need at least one hidden layer (widths p0, p1, ..., 1)")
        if widths[-1] != 1:
            raise ConfigurationError(f"output width must be 1, got {widths[-1]}")
        if any(w < 1 for w in widths):
            raise ConfigurationError(f"all widths must be >= 1, got {widths}")
        if not (self.weight_bound > 0):
            raise ConfigurationError("weight_bound must be positive")
        if not (self.output_bound > 0):
            raise ConfigurationError("output_bound must be positive")
        if self.sparsity is not None and self.sparsity < 0:
            raise ConfigurationError("sparsity must be nonnegative")

    @classmethod
    def of(cls, input_dim: int, hidden: Sequence[int], weight_bound: float = 1e3,
           output_bound: float = 1e3, sparsity: Optional[int] = None) -> "Architecture":
        return cls((int(input_dim), *(int(h) for h in hidden), 1),
                   weight_bound, output_bound, sparsity)

    @property
    def depth(self) -> int:
        """Number of hidden layers L."""
        return len(self.widths) - 2

    @property
    def input_dim(self) -> int:
        return self.widths[0]

    @property
    def max_width(self) -> int:
        return max(self.widths[1:-1])

    @property
    def param_count(self) -> int:
        return sum(self.widths[j] * self.widths[j + 1] + self.widths[j + 1]
                   for j in range(len(self.widths) - 1))


@dataclass(frozen=True)
class Network:
    """Immutable MLP value: (W, b) pairs plus the owning architecture.

    Layer j maps a batch A of shape (n, p_{j-1}) to A @ W_j + b_j.  Arrays
    are frozen after construction; produce new values via ``load_params``.
    """

    arch: Architecture
    layers: tuple[tuple[np.ndarray, np.ndarray], ...]
    activation: str = "relu"

    def __post_init__(self):
        if self.activation not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {self.activation!r}")
        widths = self.arch.widths
        if len(self.layers) != len(widths) - 1:
            raise ShapeError(f"expected {len(widths) - 1} layers, got {len(self.layers)}")
        frozen = []
        for j, (W, b) in enumerate(self.layers):
            W = np.ascontiguousarray(np.asarray(W, dtype=np.float64))
            b = np.ascontiguousarray(np.asarray(b, dtype=np.float64))
            if W.shape != (widths[j], widths[j + 1]):
                raise ShapeError(
                    f"layer {j + 1}: weight shape {W.shape} != {(widths[j], widths[j + 1])}")
            if b.shape != (widths[j + 1],):
                raise ShapeError(f"layer {j + 1}: bias shape {b.shape} != ({widths[j + 1]},)")
            W.flags.writeable = False
            b.flags.writeable = False
            frozen.append((W, b))
        object.__setattr__(self, "layers", tuple(frozen))


def new_network(arch: Architecture, init: str = "glorot", seed: int = 0,
                activation: str = "relu") -> Network:
    """Create a network with Glorot-uniform weights (or all zeros) and zero biases."""
    if init not in INIT_SCHEMES:
        raise ConfigurationError(f"unknown init scheme {init!r}; choose from {INIT_SCHEMES}")
    rng = make_rng(seed)
    widths = arch.widths
    layers = []
    for j in range(len(widths) - 1):
        fan_in, fan_out = widths[j], widths[j + 1]
        if init == "zero":
            W = np.zeros((fan_in, fan_out))
        else:
            limit = np.sqrt(6.0 / (fan_in + fan_out))
            W = rng.uniform(-limit, limit, size=(fan_in, fan_out))
        layers.append((W, np.zeros(fan_out)))
    return Network(arch, tuple(layers), activation)


def forward_batch(net: Network, X: np.ndarray) -> np.ndarray:
    """Evaluate the network on a batch (n, d); output clamped to [-F, F]."""
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != net.arch.input_dim:
        raise ShapeError(f"input dim {X.shape[1]} != network input dim {net.arch.input_dim}")
    act = ACTIVATIONS[net.activation].fn
    A = X
    for W, b in net.layers[:-1]:
        A = act(A @ W + b)
    W, b = net.layers[-1]
    raw = (A @ W).ravel() + b[0]
    F = net.arch.output_bound
    return np.clip(raw, -F, F)


def forward(net: Network, x) -> float:
    """Evaluate the network at a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError(f"expected a 1-d input, got shape {x.shape}")
    return float(forward_batch(net, x[None, :])[0])


def flatten_params(net: Network) -> np.ndarray:
    """Canonical parameter vector: (vec(W_1), b_1, ..., vec(W_{L+1}), b_{L+1}).

    vec() is column-major.
    """
    pieces = []
    for W, b in net.layers:
        pieces.append(W.ravel(order="F"))
        pieces.append(b)
    return np.concatenate(pieces)


def load_params(net: Network, theta: np.ndarray) -> Network:
    """Rebuild a network from a canonical parameter vector (inverse of flatten)."""
    theta = np.asarray(theta, dtype=np.float64).ravel()
    expected = net.arch.param_count
    if theta.shape[0] != expected:
        raise ShapeError(f"parameter vector length {theta.shape[0]} != {expected}")
    widths = net.arch.widths
    layers = []
    offset = 0
    for j in range(len(widths) - 1):
        fan_in, fan_out = widths[j], widths[j + 1]
        W = theta[offset:offset + fan_in * fan_out].reshape((fan_in, fan_out), order="F")
        offset += fan_in * fan_out
        b = theta[offset:offset + fan_out]
        offset += fan_out
        layers.append((W.copy(), b.copy()))
    return Network(net.arch, tuple(layers), net.activation)


@dataclass(frozen=True)
class ConstraintReport:
    depth_ok: bool
    width_ok: bool
    sup_norm_ok: bool
    sparsity_ok: Optional[bool]
    depth: int
    width: int
    sup_norm: float
    nonzeros: int

    @property
    def all_ok(self) -> bool:
        checks = [self.depth_ok, self.width_ok, self.sup_norm_ok]
        if self.sparsity_ok is not None:
            checks.append(self.sparsity_ok)
        return all(checks)


def check_constraints(net: Network, arch: Architecture) -> ConstraintReport:
    """Measure depth/width/sup-norm/sparsity of ``net`` against ``arch``."""
    from .penalty import l0_norm, linf_norm

    theta = flatten_params(net)
    depth = net.arch.depth
    width = net.arch.max_width
    sup = linf_norm(theta)
    nnz = l0_norm(theta)
    sparsity_ok = None if arch.sparsity is None else nnz <= arch.sparsity
    return ConstraintReport(
        depth_ok=depth <= arch.depth,
        width_ok=width <= arch.max_width,
        sup_norm_ok=sup <= arch.weight_bound,
        sparsity_ok=sparsity_ok,
        depth=depth,
        width=width,
        sup_norm=sup,
        nonzeros=nnz,
    )


def save_network(net: Network, path) -> None:
    """Write the text format: header line, then one parameter per line.

    Header: ``spdnn-net v1 <d> <L> <hidden widths...> <B> <F>``; parameters
    follow in canonical order with 17 significant digits.
    """
    arch = net.arch
    hidden = " ".join(str(w) for w in arch.widths[1:-1])
    header = (f"spdnn-net v1 {arch.input_dim} {arch.depth} {hidden} "
              f"{arch.weight_bound:.17g} {arch.output_bound:.17g}")
    theta = flatten_params(net)
    with open(path, "w", encoding="ascii") as fh:
        fh.write(header + "\n")
        for v in theta:
            fh.write(f"{v:.17g}\n")


def load_network(path, activation: str = "relu") -> Network:
    """Read the text format written by :func:`save_network`.

    The format does not carry the activation, so it must be supplied (ReLU
    by default).
    """
    with open(path, "r", encoding="ascii") as fh:
        header = fh.readline().split()
        if header[:2] != ["spdnn-net", "v1"]:
            raise ConfigurationError(f"not a spdnn-net v1 file: {path}")
        d = int(header[2])
        L = int(header[3])
        hidden = [int(w) for w in header[4:4 + L]]
        if len(hidden) != L:
            raise ConfigurationError("header width list does not match declared depth")
        B = float(header[4 + L])
        F = float(header[5 + L])
        theta = np.array([float(line) for line in fh if line.strip()])
    arch = Architecture.of(d, hidden, weight_bound=B, output_bound=F)
    template = new_network(arch, init="zero", activation=activation)
    return load_params(template, theta)
